//! Periodic hypercubic lattice geometry in two or three dimensions.
//!
//! Sites are indexed row-major with axis 0 fastest. Links and plaquettes use a
//! direction-major (plane-major) layout:
//!
//! * `link = dir * n_sites + site`
//! * `plaquette = plane * n_sites + site`
//!
//! where the plaquette in plane `(a, b)` based at `site` spans `site`,
//! `site + a`, `site + a + b`, `site + b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaquetteId(pub usize);

pub const MAX_DIM: usize = 3;

/// Axis pairs of the coordinate planes, in plaquette-plane order.
const PLANES_3D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const PLANES_2D: [(usize, usize); 1] = [(0, 1)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    size: usize,
    n_sites: usize,
    strides: [usize; MAX_DIM],
}

impl Lattice {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if size < 2 {
            return Err(Error::InvalidLattice(format!(
                "linear size must be at least 2, got {size}"
            )));
        }
        let n_sites = size
            .checked_pow(dim as u32)
            .filter(|&n| n <= u32::MAX as usize / MAX_DIM)
            .ok_or_else(|| Error::InvalidLattice(format!("size {size} too large")))?;
        let mut strides = [0; MAX_DIM];
        let mut s = 1;
        for stride in strides.iter_mut().take(dim) {
            *stride = s;
            s *= size;
        }
        Ok(Self {
            dim,
            size,
            n_sites,
            strides,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn n_links(&self) -> usize {
        self.dim * self.n_sites
    }

    #[inline]
    pub fn n_planes(&self) -> usize {
        self.dim * (self.dim - 1) / 2
    }

    #[inline]
    pub fn n_plaquettes(&self) -> usize {
        self.n_planes() * self.n_sites
    }

    pub fn planes(&self) -> &'static [(usize, usize)] {
        if self.dim == 3 {
            &PLANES_3D
        } else {
            &PLANES_2D
        }
    }

    /// Plane index of the unordered axis pair `{a, b}`.
    pub fn plane_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.planes().iter().position(|&p| p == key)
    }

    pub fn site(&self, coords: &[usize]) -> SiteId {
        debug_assert_eq!(coords.len(), self.dim);
        SiteId(
            coords
                .iter()
                .zip(&self.strides)
                .map(|(&x, &s)| (x % self.size) * s)
                .sum(),
        )
    }

    /// Coordinates of a site; entries past `dim` are zero.
    pub fn coords(&self, site: SiteId) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = site.0;
        for c in out.iter_mut().take(self.dim) {
            *c = rest % self.size;
            rest /= self.size;
        }
        out
    }

    /// Site displaced by `steps` along `dir`, with periodic wrap.
    #[inline]
    pub fn shift(&self, site: SiteId, dir: usize, steps: isize) -> SiteId {
        let stride = self.strides[dir];
        let x = (site.0 / stride) % self.size;
        let moved = (x as isize + steps).rem_euclid(self.size as isize) as usize;
        SiteId(site.0 + moved * stride - x * stride)
    }

    #[inline]
    pub fn link(&self, site: SiteId, dir: usize) -> LinkId {
        debug_assert!(dir < self.dim && site.0 < self.n_sites);
        LinkId(dir * self.n_sites + site.0)
    }

    /// Base site and direction of a link.
    #[inline]
    pub fn link_parts(&self, link: LinkId) -> (SiteId, usize) {
        (SiteId(link.0 % self.n_sites), link.0 / self.n_sites)
    }

    /// Both endpoints of a link.
    pub fn link_endpoints(&self, link: LinkId) -> Result<(SiteId, SiteId)> {
        self.check_link(link)?;
        let (site, dir) = self.link_parts(link);
        Ok((site, self.shift(site, dir, 1)))
    }

    #[inline]
    pub fn plaquette(&self, site: SiteId, plane: usize) -> PlaquetteId {
        debug_assert!(plane < self.n_planes() && site.0 < self.n_sites);
        PlaquetteId(plane * self.n_sites + site.0)
    }

    #[inline]
    pub fn plaquette_parts(&self, plaq: PlaquetteId) -> (SiteId, usize) {
        (SiteId(plaq.0 % self.n_sites), plaq.0 / self.n_sites)
    }

    pub fn check_site(&self, site: SiteId) -> Result<()> {
        check(site.0, self.n_sites, "site")
    }

    pub fn check_link(&self, link: LinkId) -> Result<()> {
        check(link.0, self.n_links(), "link")
    }

    pub fn check_plaquette(&self, plaq: PlaquetteId) -> Result<()> {
        check(plaq.0, self.n_plaquettes(), "plaquette")
    }

    /// The four boundary links of a plaquette in plane `(a, b)` at `x`:
    /// `(x, a)`, `(x + a, b)`, `(x + b, a)`, `(x, b)`.
    pub fn links_of_plaquette(&self, plaq: PlaquetteId) -> Result<[LinkId; 4]> {
        self.check_plaquette(plaq)?;
        Ok(self.plaquette_links_unchecked(plaq))
    }

    #[inline]
    pub(crate) fn plaquette_links_unchecked(&self, plaq: PlaquetteId) -> [LinkId; 4] {
        let (x, plane) = self.plaquette_parts(plaq);
        let (a, b) = self.planes()[plane];
        [
            self.link(x, a),
            self.link(self.shift(x, a, 1), b),
            self.link(self.shift(x, b, 1), a),
            self.link(x, b),
        ]
    }

    /// Plaquettes containing a link: `2 (d - 1)` of them.
    pub fn plaquettes_of_link(&self, link: LinkId) -> Result<Vec<PlaquetteId>> {
        self.check_link(link)?;
        Ok(self.link_plaquettes_unchecked(link))
    }

    pub(crate) fn link_plaquettes_unchecked(&self, link: LinkId) -> Vec<PlaquetteId> {
        let (x, mu) = self.link_parts(link);
        let mut out = Vec::with_capacity(2 * (self.dim - 1));
        for nu in (0..self.dim).filter(|&nu| nu != mu) {
            let plane = self.plane_index(mu, nu).expect("distinct axes form a plane");
            out.push(self.plaquette(x, plane));
            out.push(self.plaquette(self.shift(x, nu, -1), plane));
        }
        out
    }

    /// Links incident to a site: `2 d` of them, ordered forward then backward per axis.
    pub fn links_of_site(&self, site: SiteId) -> Result<Vec<LinkId>> {
        self.check_site(site)?;
        let mut out = Vec::with_capacity(2 * self.dim);
        for dir in 0..self.dim {
            out.push(self.link(site, dir));
            out.push(self.link(self.shift(site, dir, -1), dir));
        }
        Ok(out)
    }

    /// Ordered links of a rectangular Wilson loop.
    pub fn loop_links(&self, spec: &WilsonLoopSpec) -> Result<Vec<LinkId>> {
        spec.validate(self)?;
        let (a, b) = spec.axes;
        let (r, s) = spec.extents;
        let mut out = Vec::with_capacity(2 * (r + s));
        let mut x = spec.corner;
        for _ in 0..r {
            out.push(self.link(x, a));
            x = self.shift(x, a, 1);
        }
        for _ in 0..s {
            out.push(self.link(x, b));
            x = self.shift(x, b, 1);
        }
        for _ in 0..r {
            x = self.shift(x, a, -1);
            out.push(self.link(x, a));
        }
        for _ in 0..s {
            x = self.shift(x, b, -1);
            out.push(self.link(x, b));
        }
        debug_assert_eq!(x, spec.corner);
        Ok(out)
    }
}

fn check(id: usize, count: usize, kind: &'static str) -> Result<()> {
    if id < count {
        Ok(())
    } else {
        Err(Error::OutOfRange { kind, id, count })
    }
}

/// A rectangular loop with extent `R` along `axes.0` and `S` along `axes.1`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WilsonLoopSpec {
    pub axes: (usize, usize),
    pub corner: SiteId,
    pub extents: (usize, usize),
}

impl WilsonLoopSpec {
    pub fn new(axes: (usize, usize), corner: SiteId, extents: (usize, usize)) -> Self {
        Self {
            axes,
            corner,
            extents,
        }
    }

    pub fn area(&self) -> usize {
        self.extents.0 * self.extents.1
    }

    pub fn perimeter(&self) -> usize {
        2 * (self.extents.0 + self.extents.1)
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        let (a, b) = self.axes;
        if a >= lat.dim() || b >= lat.dim() || a == b {
            return Err(Error::InvalidLoop(format!(
                "axes ({a}, {b}) do not span a plane of a {}D lattice",
                lat.dim()
            )));
        }
        lat.check_site(self.corner)?;
        let (r, s) = self.extents;
        let max = lat.size() - 1;
        if r == 0 || s == 0 || r > max || s > max {
            return Err(Error::InvalidLoop(format!(
                "extents ({r}, {s}) must lie in 1..={max} for L = {}",
                lat.size()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        let l = Lattice::new(3, 4).unwrap();
        assert_eq!((l.n_sites(), l.n_links(), l.n_plaquettes()), (64, 192, 192));
        let l = Lattice::new(3, 2).unwrap();
        assert_eq!((l.n_sites(), l.n_links(), l.n_plaquettes()), (8, 24, 24));
        let l = Lattice::new(2, 4).unwrap();
        assert_eq!((l.n_sites(), l.n_links(), l.n_plaquettes()), (16, 32, 16));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Lattice::new(4, 4).is_err());
        assert!(Lattice::new(1, 4).is_err());
        assert!(Lattice::new(3, 1).is_err());
    }

    #[test]
    fn origin_plaquette_boundary() {
        let l = Lattice::new(3, 4).unwrap();
        let o = SiteId(0);
        let plane = l.plane_index(0, 1).unwrap();
        let links = l.links_of_plaquette(l.plaquette(o, plane)).unwrap();
        assert_eq!(
            links,
            [
                l.link(o, 0),
                l.link(l.site(&[1, 0, 0]), 1),
                l.link(l.site(&[0, 1, 0]), 0),
                l.link(o, 1),
            ]
        );
    }

    #[test]
    fn small_lattice_links_stay_distinct() {
        let l = Lattice::new(3, 2).unwrap();
        for p in 0..l.n_plaquettes() {
            let links = l.links_of_plaquette(PlaquetteId(p)).unwrap();
            let set: HashSet<_> = links.iter().collect();
            assert_eq!(set.len(), 4);
        }
        for k in 0..l.n_links() {
            let plaqs = l.plaquettes_of_link(LinkId(k)).unwrap();
            let set: HashSet<_> = plaqs.iter().collect();
            assert_eq!(set.len(), 4);
        }
    }

    #[test]
    fn out_of_range_ids() {
        let l = Lattice::new(2, 3).unwrap();
        assert!(l.links_of_plaquette(PlaquetteId(9)).is_err());
        assert!(l.plaquettes_of_link(LinkId(18)).is_err());
        assert!(l.links_of_site(SiteId(9)).is_err());
    }

    #[test]
    fn incidence_duality_and_multiplicity() {
        for (d, size) in [(2, 2), (2, 5), (3, 2), (3, 3), (3, 4)] {
            let l = Lattice::new(d, size).unwrap();
            let mut cover = vec![0usize; l.n_links()];
            for p in 0..l.n_plaquettes() {
                for link in l.links_of_plaquette(PlaquetteId(p)).unwrap() {
                    cover[link.0] += 1;
                    assert!(l.plaquettes_of_link(link).unwrap().contains(&PlaquetteId(p)));
                }
            }
            assert!(cover.iter().all(|&c| c == 2 * (d - 1)));
            for k in 0..l.n_links() {
                let plaqs = l.plaquettes_of_link(LinkId(k)).unwrap();
                assert_eq!(plaqs.len(), 2 * (d - 1));
                for p in plaqs {
                    assert!(l.links_of_plaquette(p).unwrap().contains(&LinkId(k)));
                }
            }
        }
    }

    #[test]
    fn loop_shapes() {
        let l = Lattice::new(3, 4).unwrap();
        let unit = WilsonLoopSpec::new((0, 1), SiteId(5), (1, 1));
        let mut got = l.loop_links(&unit).unwrap();
        let plane = l.plane_index(0, 1).unwrap();
        let mut plaq = l.links_of_plaquette(l.plaquette(SiteId(5), plane)).unwrap().to_vec();
        got.sort();
        plaq.sort();
        assert_eq!(got, plaq);

        let rect = WilsonLoopSpec::new((1, 2), SiteId(0), (2, 3));
        let links = l.loop_links(&rect).unwrap();
        assert_eq!(links.len(), 10);
        assert_eq!(links.iter().collect::<HashSet<_>>().len(), 10);

        let wrap = WilsonLoopSpec::new((0, 1), SiteId(0), (4, 1));
        assert!(l.loop_links(&wrap).is_err());
        let flat = WilsonLoopSpec::new((1, 1), SiteId(0), (1, 1));
        assert!(l.loop_links(&flat).is_err());
    }

    #[test]
    fn loop_is_closed() {
        // every site on a closed loop touches an even number of its links
        let l = Lattice::new(3, 5).unwrap();
        let spec = WilsonLoopSpec::new((2, 0), l.site(&[3, 4, 2]), (4, 3));
        let mut degree = vec![0usize; l.n_sites()];
        for link in l.loop_links(&spec).unwrap() {
            let (a, b) = l.link_endpoints(link).unwrap();
            degree[a.0] += 1;
            degree[b.0] += 1;
        }
        assert!(degree.iter().all(|d| d % 2 == 0));
        assert_eq!(degree.iter().filter(|&&d| d == 2).count(), 14);
    }

    proptest! {
        #[test]
        fn index_maps_are_bijective(d in 2usize..=3, size in 2usize..7, seed in any::<u64>()) {
            let l = Lattice::new(d, size).unwrap();
            let s = SiteId(seed as usize % l.n_sites());
            let c = l.coords(s);
            prop_assert_eq!(l.site(&c[..d]), s);
            for dir in 0..d {
                let link = l.link(s, dir);
                prop_assert_eq!(l.link_parts(link), (s, dir));
                prop_assert_eq!(l.shift(l.shift(s, dir, 3), dir, -3), s);
                prop_assert_eq!(l.shift(s, dir, size as isize), s);
            }
            for plane in 0..l.n_planes() {
                prop_assert_eq!(l.plaquette_parts(l.plaquette(s, plane)), (s, plane));
            }
        }
    }
}
