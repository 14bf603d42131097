//! Chain algebra of the toric code on a two-dimensional torus.
//!
//! Phase errors live on links. A chain's boundary is the set of sites whose
//! check operator `A_x` reads −1, and a cycle's homology class says whether
//! it wraps the torus. Correcting an error `E` with `E'` succeeds when the
//! cycle `E + E'` is homologically trivial.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::bits::PackedBits;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId, PlaquetteId, SiteId};

/// Largest torus for the exhaustive decoder.
pub const EXACT_DECODER_MAX_L: usize = 4;
/// Largest torus for [`exact_success_probability`].
pub const EXACT_ORACLE_MAX_L: usize = 3;
// exact matching over subsets of at most this many defects
const DP_MATCHING_MAX: usize = 16;

pub fn torus(size: usize) -> Result<Lattice> {
    Lattice::new(2, size)
}

fn check_torus(lat: &Lattice) -> Result<()> {
    if lat.dim() != 2 {
        return Err(Error::InvalidLattice(format!(
            "toric code needs a 2D lattice, got {}D",
            lat.dim()
        )));
    }
    Ok(())
}

/// Indicator function of a set of links.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    size: usize,
    links: PackedBits,
}

impl Chain {
    pub fn empty(lat: &Lattice) -> Self {
        Self {
            size: lat.size(),
            links: PackedBits::zeros(lat.n_links()),
        }
    }

    pub fn full(lat: &Lattice) -> Self {
        Self {
            size: lat.size(),
            links: PackedBits::ones(lat.n_links()),
        }
    }

    pub fn from_links(lat: &Lattice, links: impl IntoIterator<Item = LinkId>) -> Result<Self> {
        check_torus(lat)?;
        let mut c = Self::empty(lat);
        for l in links {
            lat.check_link(l)?;
            c.links.toggle(l.0);
        }
        Ok(c)
    }

    /// Boundary of one plaquette.
    pub fn plaquette_boundary(lat: &Lattice, plaq: PlaquetteId) -> Result<Self> {
        Self::from_links(lat, lat.links_of_plaquette(plaq)?)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn contains(&self, link: LinkId) -> bool {
        link.0 < self.links.len() && self.links.get(link.0)
    }

    pub fn toggle(&mut self, link: LinkId) {
        self.links.toggle(link.0);
    }

    pub fn weight(&self) -> usize {
        self.links.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.weight() == 0
    }

    /// Occupied links in increasing id order.
    pub fn links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.links.iter_ones().map(LinkId)
    }

    pub fn bits(&self) -> &PackedBits {
        &self.links
    }

    /// Symmetric difference, the group operation `+`.
    pub fn add(&self, other: &Chain) -> Result<Chain> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Chain) -> Result<()> {
        if self.size != other.size {
            return Err(Error::Mismatch(format!(
                "chains on L={} and L={}",
                self.size, other.size
            )));
        }
        self.links.xor_assign(&other.links);
        Ok(())
    }

    fn check(&self, lat: &Lattice) -> Result<()> {
        check_torus(lat)?;
        if self.size != lat.size() {
            return Err(Error::Mismatch(format!(
                "chain on L={}, lattice L={}",
                self.size,
                lat.size()
            )));
        }
        Ok(())
    }

    fn to_mask(&self) -> u64 {
        debug_assert!(self.links.len() <= 64);
        self.links.words().first().copied().unwrap_or(0)
    }

    fn from_mask(lat: &Lattice, mask: u64) -> Self {
        Self {
            size: lat.size(),
            links: PackedBits::from_fn(lat.n_links(), |i| mask >> i & 1 == 1),
        }
    }

    /// Sorted link ids, one per line.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for l in self.links() {
            writeln!(w, "{}", l.0)?;
        }
        Ok(())
    }

    pub fn read_from(lat: &Lattice, r: impl BufRead) -> Result<Self> {
        check_torus(lat)?;
        let mut c = Self::empty(lat);
        let mut last: Option<usize> = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Format {
                path: "<chain>".into(),
                reason: format!("line {}: {reason}", n + 1),
            };
            let id: usize = t.parse().map_err(|_| bad(format!("not a link id: {t:?}")))?;
            lat.check_link(LinkId(id))?;
            if last.is_some_and(|p| p >= id) {
                return Err(bad("link ids must be strictly increasing".into()));
            }
            last = Some(id);
            c.links.set(id, true);
        }
        Ok(c)
    }
}

/// Sites with odd incidence, sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Syndrome {
    sites: Vec<SiteId>,
}

impl Syndrome {
    pub fn new(mut sites: Vec<SiteId>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Self { sites }
    }

    pub fn sites(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn symmetric_difference(&self, other: &Syndrome) -> Syndrome {
        let mut v: Vec<SiteId> = self
            .sites
            .iter()
            .filter(|s| other.sites.binary_search(s).is_err())
            .chain(other.sites.iter().filter(|s| self.sites.binary_search(s).is_err()))
            .copied()
            .collect();
        v.sort_unstable();
        Syndrome { sites: v }
    }
}

pub fn boundary(lat: &Lattice, chain: &Chain) -> Result<Syndrome> {
    chain.check(lat)?;
    let mut odd = PackedBits::zeros(lat.n_sites());
    for l in chain.links() {
        let (a, b) = lat.link_endpoints(l)?;
        odd.toggle(a.0);
        odd.toggle(b.0);
    }
    Ok(Syndrome {
        sites: odd.iter_ones().map(SiteId).collect(),
    })
}

/// `(w1, w2)`: winding parities along the two axes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct HomologyClass {
    pub w1: bool,
    pub w2: bool,
}

impl HomologyClass {
    pub const TRIVIAL: HomologyClass = HomologyClass { w1: false, w2: false };

    pub fn is_trivial(&self) -> bool {
        *self == Self::TRIVIAL
    }
}

/// Homology class using seams at coordinate 0.
pub fn homology_class(lat: &Lattice, cycle: &Chain) -> Result<HomologyClass> {
    homology_class_with_seams(lat, cycle, [0, 0])
}

/// `w_a` counts the cycle's axis-`a` links that cross the seam between
/// coordinates `seams[a]` and `seams[a] + 1` along axis `a`.
pub fn homology_class_with_seams(lat: &Lattice, cycle: &Chain, seams: [usize; 2]) -> Result<HomologyClass> {
    let syn = boundary(lat, cycle)?;
    if !syn.is_empty() {
        return Err(Error::NotACycle(syn.len()));
    }
    if seams.iter().any(|&s| s >= lat.size()) {
        return Err(Error::InvalidInput(format!("seam offsets {seams:?} outside the torus")));
    }
    Ok(winding(lat, cycle, seams))
}

fn winding(lat: &Lattice, cycle: &Chain, seams: [usize; 2]) -> HomologyClass {
    let mut w = [false; 2];
    for l in cycle.links() {
        let (site, dir) = lat.link_parts(l);
        if lat.coords(site)[dir] == seams[dir] {
            w[dir] = !w[dir];
        }
    }
    HomologyClass { w1: w[0], w2: w[1] }
}

/// Each link independently in the chain with probability `p`.
pub fn sample_error_chain(lat: &Lattice, p: f64, rng: &mut impl Rng) -> Result<Chain> {
    check_torus(lat)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability {
            value: p,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(Chain {
        size: lat.size(),
        links: PackedBits::from_fn(lat.n_links(), |_| rng.gen_bool(p)),
    })
}

/// `Σ_ℓ [n(ℓ) ln p + (1 − n(ℓ)) ln(1 − p)]`.
pub fn chain_log_prob(chain: &Chain, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability {
            value: p,
            reason: "log probability needs 0 < p < 1",
        });
    }
    let k = chain.weight() as f64;
    let n = chain.n_links() as f64;
    Ok(k * p.ln() + (n - k) * (1.0 - p).ln())
}

/// True when `E + E'` is homologically trivial.
pub fn correction_succeeds(lat: &Lattice, error: &Chain, correction: &Chain) -> Result<bool> {
    if boundary(lat, error)? != boundary(lat, correction)? {
        return Err(Error::BoundaryMismatch);
    }
    let cycle = error.add(correction)?;
    Ok(winding(lat, &cycle, [0, 0]).is_trivial())
}

fn torus_delta(size: usize, from: usize, to: usize) -> isize {
    let fwd = (to + size - from) % size;
    // shortest signed displacement, forward on ties
    if 2 * fwd <= size {
        fwd as isize
    } else {
        fwd as isize - size as isize
    }
}

/// Graph distance between two sites of the torus.
pub fn torus_distance(lat: &Lattice, a: SiteId, b: SiteId) -> usize {
    let (ca, cb) = (lat.coords(a), lat.coords(b));
    (0..2)
        .map(|d| torus_delta(lat.size(), ca[d], cb[d]).unsigned_abs())
        .sum()
}

/// Shortest path along axis 0 first, then axis 1.
fn toggle_path(lat: &Lattice, chain: &mut Chain, a: SiteId, b: SiteId) {
    let (ca, cb) = (lat.coords(a), lat.coords(b));
    let mut at = a;
    for dir in 0..2 {
        let delta = torus_delta(lat.size(), ca[dir], cb[dir]);
        for _ in 0..delta.unsigned_abs() {
            if delta > 0 {
                chain.toggle(lat.link(at, dir));
                at = lat.shift(at, dir, 1);
            } else {
                at = lat.shift(at, dir, -1);
                chain.toggle(lat.link(at, dir));
            }
        }
    }
    debug_assert_eq!(at, b);
}

fn check_syndrome(lat: &Lattice, syndrome: &Syndrome) -> Result<()> {
    check_torus(lat)?;
    for &s in syndrome.sites() {
        lat.check_site(s)?;
    }
    if syndrome.len() % 2 == 1 {
        return Err(Error::OddSyndrome(syndrome.len()));
    }
    Ok(())
}

/// A chain with the given boundary and minimum weight.
///
/// For `L ≤ 4` every chain with that boundary is searched and ties go to
/// the lexicographically smallest sorted link list. Larger tori pair the
/// defects by shortest paths, exactly for small syndromes and greedily
/// otherwise.
pub fn min_weight_correction(lat: &Lattice, syndrome: &Syndrome) -> Result<Chain> {
    check_syndrome(lat, syndrome)?;
    if lat.size() <= EXACT_DECODER_MAX_L {
        let basis = cycle_basis(lat);
        let start = pairing_chain(lat, syndrome, &pair_in_order(syndrome)).to_mask();
        return Ok(Chain::from_mask(lat, best_coset_member(start, &basis)));
    }
    let pairs = if syndrome.len() <= DP_MATCHING_MAX {
        pair_exactly(lat, syndrome)
    } else {
        pair_greedily(lat, syndrome)
    };
    Ok(pairing_chain(lat, syndrome, &pairs))
}

fn pairing_chain(lat: &Lattice, syndrome: &Syndrome, pairs: &[(usize, usize)]) -> Chain {
    let mut c = Chain::empty(lat);
    for &(i, j) in pairs {
        toggle_path(lat, &mut c, syndrome.sites[i], syndrome.sites[j]);
    }
    c
}

fn pair_in_order(syndrome: &Syndrome) -> Vec<(usize, usize)> {
    (0..syndrome.len() / 2).map(|i| (2 * i, 2 * i + 1)).collect()
}

fn pair_exactly(lat: &Lattice, syndrome: &Syndrome) -> Vec<(usize, usize)> {
    let n = syndrome.len();
    let s = syndrome.sites();
    let full = (1usize << n) - 1;
    // cost[mask] pairs up the defects in mask; the lowest one is always matched first
    let mut cost = vec![usize::MAX; 1 << n];
    let mut choice = vec![0usize; 1 << n];
    cost[0] = 0;
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let sub = rest & !(1 << j);
            let c = cost[sub] + torus_distance(lat, s[i], s[j]);
            if c < cost[mask] {
                cost[mask] = c;
                choice[mask] = j;
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask];
        pairs.push((i, j));
        mask &= !(1 << i) & !(1 << j);
    }
    pairs
}

fn pair_greedily(lat: &Lattice, syndrome: &Syndrome) -> Vec<(usize, usize)> {
    let s = syndrome.sites();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            candidates.push((torus_distance(lat, s[i], s[j]), i, j));
        }
    }
    candidates.sort_unstable();
    let mut used = vec![false; s.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

/// Plaquette boundaries (one dropped, as they sum to zero) and two winding loops.
fn cycle_basis(lat: &Lattice) -> Vec<u64> {
    let mut basis: Vec<u64> = (0..lat.n_plaquettes() - 1)
        .map(|p| {
            lat.plaquette_links_unchecked(PlaquetteId(p))
                .iter()
                .fold(0u64, |m, l| m ^ 1 << l.0)
        })
        .collect();
    for dir in 0..2 {
        let mut m = 0u64;
        let mut at = SiteId(0);
        for _ in 0..lat.size() {
            m ^= 1 << lat.link(at, dir).0;
            at = lat.shift(at, dir, 1);
        }
        basis.push(m);
    }
    basis
}

/// Minimum weight member of `start + span(basis)`, ties to the smallest link list.
fn best_coset_member(start: u64, basis: &[u64]) -> u64 {
    let better = |a: u64, b: u64| {
        let (wa, wb) = (a.count_ones(), b.count_ones());
        // equal weight: the list holding the lowest differing link sorts first
        wa < wb || (wa == wb && a != b && a & (a ^ b) & (a ^ b).wrapping_neg() != 0)
    };
    let mut cur = start;
    let mut best = start;
    for step in 1u64..1 << basis.len() {
        cur ^= basis[step.trailing_zeros() as usize];
        if better(cur, best) {
            best = cur;
        }
    }
    best
}

/// Successful error chains counted by weight; see [`exact_success_probability`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessCounts {
    /// `counts[k]`: error chains of weight `k` that the decoder corrects.
    pub counts: Vec<u64>,
}

impl SuccessCounts {
    pub fn n_links(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn probability(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                value: p,
                reason: "must lie in [0, 1]",
            });
        }
        let n = self.n_links() as i32;
        Ok(self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi(n - k as i32))
            .sum())
    }
}

/// Enumerate every error chain on an `L ≤ 3` torus and decode it.
pub fn exact_success_counts(size: usize) -> Result<SuccessCounts> {
    if size > EXACT_ORACLE_MAX_L {
        return Err(Error::TooManyVariables {
            vars: 2 * size * size,
            cap: 2 * EXACT_ORACLE_MAX_L * EXACT_ORACLE_MAX_L,
        });
    }
    let lat = torus(size)?;
    let n = lat.n_links();
    let ends: Vec<u64> = (0..n)
        .map(|l| {
            let (a, b) = lat.link_endpoints(LinkId(l)).expect("link in range");
            1u64 << a.0 ^ 1u64 << b.0
        })
        .collect();
    let winds: Vec<bool> = (0..n)
        .map(|l| {
            let (site, dir) = lat.link_parts(LinkId(l));
            lat.coords(site)[dir] == 0
        })
        .collect();
    let class_of = |mask: u64| {
        let mut w = [false; 2];
        for l in 0..n {
            if mask >> l & 1 == 1 && winds[l] {
                w[lat.link_parts(LinkId(l)).1] ^= true;
            }
        }
        w == [false, false]
    };

    let mut decoded: HashMap<u64, u64> = HashMap::new();
    let mut counts = vec![0u64; n + 1];
    let mut error = 0u64;
    let mut syndrome = 0u64;
    for step in 0u64..1 << n {
        if step > 0 {
            let l = step.trailing_zeros() as usize;
            error ^= 1 << l;
            syndrome ^= ends[l];
        }
        let corr = match decoded.get(&syndrome) {
            Some(&c) => c,
            None => {
                let syn = Syndrome::new(
                    (0..lat.n_sites())
                        .filter(|s| syndrome >> s & 1 == 1)
                        .map(SiteId)
                        .collect(),
                );
                let c = min_weight_correction(&lat, &syn)?.to_mask();
                decoded.insert(syndrome, c);
                c
            }
        };
        if class_of(error ^ corr) {
            counts[error.count_ones() as usize] += 1;
        }
    }
    Ok(SuccessCounts { counts })
}

/// `Σ_E prob(E) · [correction_succeeds(E, min_weight_correction(∂E))]`.
pub fn exact_success_probability(size: usize, p: f64) -> Result<f64> {
    exact_success_counts(size)?.probability(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn row(lat: &Lattice, dir: usize, start: SiteId) -> Chain {
        let mut c = Chain::empty(lat);
        let mut at = start;
        for _ in 0..lat.size() {
            c.toggle(lat.link(at, dir));
            at = lat.shift(at, dir, 1);
        }
        c
    }

    fn random_chain(lat: &Lattice, seed: u64) -> Chain {
        sample_error_chain(lat, 0.3, &mut rng::stream(seed, rng::TORIC_STREAM)).unwrap()
    }

    fn bfs_distance(lat: &Lattice, a: SiteId, b: SiteId) -> usize {
        let mut dist = vec![usize::MAX; lat.n_sites()];
        let mut q = VecDeque::from([a]);
        dist[a.0] = 0;
        while let Some(x) = q.pop_front() {
            for d in 0..2 {
                for step in [-1, 1] {
                    let y = lat.shift(x, d, step);
                    if dist[y.0] == usize::MAX {
                        dist[y.0] = dist[x.0] + 1;
                        q.push_back(y);
                    }
                }
            }
        }
        dist[b.0]
    }

    #[test]
    fn boundary_examples() {
        let lat = torus(4).unwrap();
        let x = lat.site(&[1, 2]);
        let one = Chain::from_links(&lat, [lat.link(x, 0)]).unwrap();
        assert_eq!(boundary(&lat, &one).unwrap().sites(), &Syndrome::new(vec![x, lat.shift(x, 0, 1)]).sites);
        let plaq = Chain::plaquette_boundary(&lat, PlaquetteId(5)).unwrap();
        assert!(boundary(&lat, &plaq).unwrap().is_empty());
        assert!(boundary(&lat, &row(&lat, 0, x)).unwrap().is_empty());
    }

    #[test]
    fn homology_examples() {
        let lat = torus(4).unwrap();
        let plaq = Chain::plaquette_boundary(&lat, PlaquetteId(3)).unwrap();
        assert_eq!(homology_class(&lat, &plaq).unwrap(), HomologyClass::TRIVIAL);
        let h = row(&lat, 0, lat.site(&[0, 1]));
        assert_eq!(homology_class(&lat, &h).unwrap(), HomologyClass { w1: true, w2: false });
        let h2 = row(&lat, 0, lat.site(&[2, 3]));
        assert!(homology_class(&lat, &h.add(&h2).unwrap()).unwrap().is_trivial());
        let v = row(&lat, 1, lat.site(&[3, 0]));
        assert_eq!(homology_class(&lat, &v).unwrap(), HomologyClass { w1: false, w2: true });
        // all links wind once per row, so the class follows the parity of L
        assert!(homology_class(&lat, &Chain::full(&lat)).unwrap().is_trivial());
        let odd = torus(3).unwrap();
        assert_eq!(
            homology_class(&odd, &Chain::full(&odd)).unwrap(),
            HomologyClass { w1: true, w2: true }
        );
        let open = Chain::from_links(&lat, [LinkId(0)]).unwrap();
        assert!(matches!(homology_class(&lat, &open), Err(Error::NotACycle(2))));
    }

    #[test]
    fn plaquette_boundaries_sum_to_zero() {
        for size in 2..6 {
            let lat = torus(size).unwrap();
            let mut sum = Chain::empty(&lat);
            for p in 0..lat.n_plaquettes() {
                sum.add_assign(&Chain::plaquette_boundary(&lat, PlaquetteId(p)).unwrap()).unwrap();
            }
            assert!(sum.is_empty());
        }
    }

    #[test]
    fn sampling_limits_and_frequency() {
        let lat = torus(16).unwrap();
        let mut r = rng::stream(5, rng::TORIC_STREAM);
        assert!(sample_error_chain(&lat, 0.0, &mut r).unwrap().is_empty());
        assert_eq!(sample_error_chain(&lat, 1.0, &mut r).unwrap().weight(), lat.n_links());
        assert!(sample_error_chain(&lat, 1.5, &mut r).is_err());
        let draws = 10_000;
        let total: usize = (0..draws).map(|_| sample_error_chain(&lat, 0.1, &mut r).unwrap().weight()).sum();
        let n = (draws * lat.n_links()) as f64;
        let freq = total as f64 / n;
        let sigma = (0.1 * 0.9 / n).sqrt();
        assert!((freq - 0.1).abs() < 3.0 * sigma, "{freq}");
    }

    #[test]
    fn log_prob_examples() {
        let lat = torus(4).unwrap();
        assert_eq!(lat.n_links(), 32);
        let e = Chain::empty(&lat);
        assert_abs_diff_eq!(chain_log_prob(&e, 0.1).unwrap(), 32.0 * 0.9f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(chain_log_prob(&Chain::full(&lat), 0.1).unwrap(), 32.0 * 0.1f64.ln(), epsilon = 1e-12);
        let plaq = Chain::plaquette_boundary(&lat, PlaquetteId(0)).unwrap();
        let d = chain_log_prob(&plaq, 0.1).unwrap() - chain_log_prob(&e, 0.1).unwrap();
        assert_abs_diff_eq!(d, 4.0 * (0.1f64 / 0.9).ln(), epsilon = 1e-12);
        assert!(chain_log_prob(&e, 0.0).is_err());
        assert!(chain_log_prob(&e, 1.0).is_err());
    }

    #[test]
    fn log_probabilities_normalize() {
        for size in 2..=3 {
            let lat = torus(size).unwrap();
            let n = lat.n_links();
            for p in [0.07, 0.31] {
                let mut total = 0.0;
                for mask in 0u64..1 << n {
                    let c = Chain::from_mask(&lat, mask);
                    total += chain_log_prob(&c, p).unwrap().exp();
                }
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn log_ratio_matches_nishimori_form() {
        let lat = torus(4).unwrap();
        for seed in 0..20 {
            let p = 0.02 + 0.4 * seed as f64 / 20.0;
            let beta = crate::disorder::nishimori_beta(p).unwrap();
            let e = random_chain(&lat, seed);
            // same boundary: add a few plaquette boundaries and a winding loop
            let mut c = e.add(&row(&lat, 1, SiteId(seed as usize % 16))).unwrap();
            for k in 0..3 {
                let plaq = PlaquetteId((seed as usize * 5 + k * 7) % lat.n_plaquettes());
                c.add_assign(&Chain::plaquette_boundary(&lat, plaq).unwrap()).unwrap();
            }
            let cycle = e.add(&c).unwrap();
            let sum: f64 = (0..lat.n_links())
                .map(|l| {
                    let eta = if e.contains(LinkId(l)) { -1.0 } else { 1.0 };
                    let u = if cycle.contains(LinkId(l)) { -1.0 } else { 1.0 };
                    eta * (u - 1.0)
                })
                .sum();
            let ratio = chain_log_prob(&c, p).unwrap() - chain_log_prob(&e, p).unwrap();
            assert_abs_diff_eq!(ratio, beta * sum, epsilon = 1e-10);
        }
    }

    #[test]
    fn correction_examples() {
        let lat = torus(4).unwrap();
        let e = random_chain(&lat, 3);
        assert!(correction_succeeds(&lat, &e, &e).unwrap());
        let links = lat.links_of_plaquette(PlaquetteId(6)).unwrap();
        let half = Chain::from_links(&lat, links[..2].iter().copied()).unwrap();
        let other = Chain::from_links(&lat, links[2..].iter().copied()).unwrap();
        assert!(correction_succeeds(&lat, &half, &other).unwrap());
        let loop_links: Vec<LinkId> = row(&lat, 0, SiteId(0)).links().collect();
        let a = Chain::from_links(&lat, loop_links[..1].iter().copied()).unwrap();
        let b = Chain::from_links(&lat, loop_links[1..].iter().copied()).unwrap();
        assert!(!correction_succeeds(&lat, &a, &b).unwrap());
        assert!(matches!(
            correction_succeeds(&lat, &a, &Chain::empty(&lat)),
            Err(Error::BoundaryMismatch)
        ));
    }

    #[test]
    fn decoder_examples() {
        for size in [3, 4, 5, 7] {
            let lat = torus(size).unwrap();
            assert!(min_weight_correction(&lat, &Syndrome::default()).unwrap().is_empty());
            let x = lat.site(&[1, 1]);
            let y = lat.shift(x, 1, 1);
            let c = min_weight_correction(&lat, &Syndrome::new(vec![x, y])).unwrap();
            assert_eq!(c.links().collect::<Vec<_>>(), vec![lat.link(x, 1)]);
            let far = lat.site(&[(1 + size / 2) % size, (1 + size / 2) % size]);
            let syn = Syndrome::new(vec![x, far]);
            let c = min_weight_correction(&lat, &syn).unwrap();
            assert_eq!(c.weight(), bfs_distance(&lat, x, far));
            assert_eq!(boundary(&lat, &c).unwrap(), syn);
            assert!(matches!(
                min_weight_correction(&lat, &Syndrome::new(vec![x])),
                Err(Error::OddSyndrome(1))
            ));
        }
    }

    #[test]
    fn exhaustive_decoder_is_optimal() {
        // compare with brute force over all chains on L=3
        let lat = torus(3).unwrap();
        let n = lat.n_links();
        let mut best: HashMap<Syndrome, u64> = HashMap::new();
        for mask in 0u64..1 << n {
            let syn = boundary(&lat, &Chain::from_mask(&lat, mask)).unwrap();
            best.entry(syn)
                .and_modify(|b| {
                    let (wm, wb) = (mask.count_ones(), b.count_ones());
                    let lex = |m: u64| (0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>();
                    if wm < wb || (wm == wb && lex(mask) < lex(*b)) {
                        *b = mask;
                    }
                })
                .or_insert(mask);
        }
        for (syn, mask) in best {
            assert_eq!(min_weight_correction(&lat, &syn).unwrap().to_mask(), mask);
        }
    }

    #[test]
    fn exact_matching_beats_greedy() {
        let lat = torus(9).unwrap();
        // greedy grabs the middle pair and strands the ends
        let s = [lat.site(&[0, 0]), lat.site(&[2, 0]), lat.site(&[3, 0]), lat.site(&[5, 0])];
        let syn = Syndrome::new(s.to_vec());
        let exact = min_weight_correction(&lat, &syn).unwrap();
        assert_eq!(exact.weight(), 4);
        assert_eq!(pairing_chain(&lat, &syn, &pair_greedily(&lat, &syn)).weight(), 5);
    }

    #[test]
    fn exact_success_oracle() {
        assert_abs_diff_eq!(exact_success_probability(3, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        let full = exact_success_counts(3).unwrap();
        assert_eq!(*full.counts.last().unwrap(), 0);
        assert_abs_diff_eq!(full.probability(1.0).unwrap(), 0.0, epsilon = 1e-15);
        let s: Vec<f64> = [0.01, 0.10, 0.30].iter().map(|&p| full.probability(p).unwrap()).collect();
        assert!(s[0] > s[1] && s[1] > s[2], "{s:?}");
        assert!(exact_success_probability(4, 0.1).is_err());
        // single-link errors are always corrected
        assert_eq!(full.counts[1], 18);
    }

    #[test]
    fn text_round_trip() {
        let lat = torus(5).unwrap();
        let c = random_chain(&lat, 9);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(Chain::read_from(&lat, buf.as_slice()).unwrap(), c);
        assert!(Chain::read_from(&lat, "3\n1\n".as_bytes()).is_err());
        assert!(Chain::read_from(&lat, "999\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn boundary_is_homomorphism(size in 2usize..7, a in any::<u64>(), b in any::<u64>()) {
            let lat = torus(size).unwrap();
            let (ca, cb) = (random_chain(&lat, a), random_chain(&lat, b));
            let lhs = boundary(&lat, &ca.add(&cb).unwrap()).unwrap();
            let rhs = boundary(&lat, &ca).unwrap().symmetric_difference(&boundary(&lat, &cb).unwrap());
            prop_assert_eq!(&lhs, &rhs);
            prop_assert_eq!(boundary(&lat, &ca).unwrap().len() % 2, 0);
        }

        #[test]
        fn homology_invariants(size in 2usize..7, seed in any::<u64>(), plaq in any::<usize>(), seams in any::<(usize, usize)>()) {
            let lat = torus(size).unwrap();
            let e = random_chain(&lat, seed);
            let corr = min_weight_correction(&lat, &boundary(&lat, &e).unwrap()).unwrap();
            let cycle = e.add(&corr).unwrap();
            let class = homology_class(&lat, &cycle).unwrap();
            let p = Chain::plaquette_boundary(&lat, PlaquetteId(plaq % lat.n_plaquettes())).unwrap();
            prop_assert_eq!(homology_class(&lat, &cycle.add(&p).unwrap()).unwrap(), class);
            let seams = [seams.0 % size, seams.1 % size];
            prop_assert_eq!(homology_class_with_seams(&lat, &cycle, seams).unwrap(), class);
            let w = row(&lat, 0, SiteId(seed as usize % lat.n_sites()));
            let moved = homology_class(&lat, &cycle.add(&w).unwrap()).unwrap();
            prop_assert_eq!(moved, HomologyClass { w1: !class.w1, w2: class.w2 });
            prop_assert!(correction_succeeds(&lat, &e, &e.add(&p).unwrap()).unwrap());
        }
    }
}
