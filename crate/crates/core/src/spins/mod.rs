//! Spin and gauge-field configurations, energies and local dynamics.

mod exact;
mod metropolis;

pub use exact::{enumerate_states, exact_enumerate, DensityOfStates, ExactResult, EXACT_VAR_CAP};
pub use metropolis::{anneal, metropolis_sweep, AnnealSchedule, MetropolisChain};

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::bits::PackedBits;
use crate::disorder::Disorder;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId, PlaquetteId, SiteId};
use crate::model::Model;

/// Lattice, model, and the flattened variable/term incidence tables used by
/// every energy evaluation.
#[derive(Clone, Debug)]
pub struct System {
    lattice: Lattice,
    model: Model,
    // terms touching each variable, `terms_per_var` consecutive entries per variable
    var_terms: Vec<u32>,
    // variables in each term, `vars_per_term` consecutive entries per term
    term_vars: Vec<u32>,
    terms_per_var: usize,
    vars_per_term: usize,
}

impl System {
    pub fn new(lattice: Lattice, model: Model) -> Self {
        let (var_terms, term_vars, terms_per_var, vars_per_term) = match model {
            Model::Gauge => {
                let mut vt = Vec::with_capacity(lattice.n_links() * 2 * (lattice.dim() - 1));
                for l in 0..lattice.n_links() {
                    vt.extend(lattice.link_plaquettes_unchecked(LinkId(l)).into_iter().map(|p| p.0 as u32));
                }
                let mut tv = Vec::with_capacity(lattice.n_plaquettes() * 4);
                for p in 0..lattice.n_plaquettes() {
                    tv.extend(lattice.plaquette_links_unchecked(PlaquetteId(p)).iter().map(|l| l.0 as u32));
                }
                (vt, tv, 2 * (lattice.dim() - 1), 4)
            }
            Model::Ising => {
                let mut vt = Vec::with_capacity(lattice.n_sites() * 2 * lattice.dim());
                for s in 0..lattice.n_sites() {
                    let links = lattice.links_of_site(SiteId(s)).expect("site in range");
                    vt.extend(links.into_iter().map(|l| l.0 as u32));
                }
                let mut tv = Vec::with_capacity(lattice.n_links() * 2);
                for l in 0..lattice.n_links() {
                    let (a, b) = lattice.link_endpoints(LinkId(l)).expect("link in range");
                    tv.push(a.0 as u32);
                    tv.push(b.0 as u32);
                }
                (vt, tv, 2 * lattice.dim(), 2)
            }
        };
        Self {
            lattice,
            model,
            var_terms,
            term_vars,
            terms_per_var,
            vars_per_term,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n_vars(&self) -> usize {
        self.model.n_vars(&self.lattice)
    }

    pub fn n_terms(&self) -> usize {
        self.model.n_terms(&self.lattice)
    }

    pub fn terms_per_var(&self) -> usize {
        self.terms_per_var
    }

    #[inline]
    pub fn terms_of(&self, var: usize) -> &[u32] {
        &self.var_terms[var * self.terms_per_var..(var + 1) * self.terms_per_var]
    }

    #[inline]
    pub fn vars_of(&self, term: usize) -> &[u32] {
        &self.term_vars[term * self.vars_per_term..(term + 1) * self.vars_per_term]
    }

    fn check_disorder(&self, dis: &Disorder) -> Result<()> {
        if dis.matches(&self.lattice, self.model) {
            Ok(())
        } else {
            Err(Error::Mismatch("disorder belongs to another lattice or model".into()))
        }
    }

    fn check_config(&self, cfg: &SpinConfig) -> Result<()> {
        if cfg.model == self.model && cfg.dim == self.lattice.dim() && cfg.size == self.lattice.size() {
            Ok(())
        } else {
            Err(Error::Mismatch("configuration belongs to another lattice or model".into()))
        }
    }

    /// Whether term `t` is unsatisfied, i.e. contributes `+1` to the energy.
    #[inline]
    fn violated(&self, cfg: &SpinConfig, dis: &Disorder, t: usize) -> bool {
        let mut odd = dis.is_wrong(t);
        for &v in self.vars_of(t) {
            odd ^= cfg.values.get(v as usize);
        }
        odd
    }

    pub(crate) fn violation_bits(&self, cfg: &SpinConfig, dis: &Disorder) -> PackedBits {
        PackedBits::from_fn(self.n_terms(), |t| self.violated(cfg, dis, t))
    }
}

/// One ±1 value per link (gauge model) or per site (Ising model).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    model: Model,
    dim: usize,
    size: usize,
    values: PackedBits,
}

impl SpinConfig {
    pub fn all_plus(sys: &System) -> Self {
        Self {
            model: sys.model,
            dim: sys.lattice.dim(),
            size: sys.lattice.size(),
            values: PackedBits::zeros(sys.n_vars()),
        }
    }

    pub fn random(sys: &System, rng: &mut impl Rng) -> Self {
        let mut cfg = Self::all_plus(sys);
        cfg.values = PackedBits::from_fn(sys.n_vars(), |_| rng.gen::<bool>());
        cfg
    }

    pub fn from_signs(sys: &System, signs: &[i8]) -> Result<Self> {
        if signs.len() != sys.n_vars() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Mismatch(format!(
                "expected {} values in {{+1, -1}}",
                sys.n_vars()
            )));
        }
        let mut cfg = Self::all_plus(sys);
        cfg.values = PackedBits::from_fn(signs.len(), |i| signs[i] < 0);
        Ok(cfg)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn sign(&self, var: usize) -> i8 {
        self.values.sign(var)
    }

    #[inline]
    pub fn is_flipped(&self, var: usize) -> bool {
        self.values.get(var)
    }

    #[inline]
    pub fn flip(&mut self, var: usize) {
        self.values.toggle(var);
    }

    pub fn bits(&self) -> &PackedBits {
        &self.values
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.sign(i)).collect()
    }

    /// Flip every link touching `site`: the local Z2 gauge transformation.
    pub fn gauge_transform(&mut self, lat: &Lattice, site: SiteId) -> Result<()> {
        if self.model != Model::Gauge {
            return Err(Error::Mismatch("gauge transformations act on link variables".into()));
        }
        for link in lat.links_of_site(site)? {
            self.flip(link.0);
        }
        Ok(())
    }

    const MAGIC: &'static [u8; 4] = b"Z2SC";
    const VERSION: u8 = 1;

    /// Snapshot: magic, version, d, model, reserved, L (u32 LE), value count
    /// (u64 LE), packed value bits.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&[Self::VERSION, self.dim as u8, self.model.code(), 0])?;
        w.write_all(&(self.size as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.values.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read, origin: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: origin.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut head = [0u8; 20];
        r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
        if &head[0..4] != Self::MAGIC || head[4] != Self::VERSION {
            return Err(bad("not a configuration snapshot"));
        }
        let dim = head[5] as usize;
        let model = Model::from_code(head[6]).ok_or_else(|| bad("unknown model"))?;
        let size = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(head[12..20].try_into().unwrap()) as usize;
        let lat = Lattice::new(dim, size).map_err(|e| bad(&e.to_string()))?;
        if n != model.n_vars(&lat) {
            return Err(bad("value count does not match the lattice"));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let values = PackedBits::from_bytes(n, &payload).ok_or_else(|| bad("bad value payload"))?;
        Ok(Self {
            model,
            dim,
            size,
            values,
        })
    }
}

/// `E = -Σ_t η_t Π_{v ∈ t} σ_v`, an exact integer.
pub fn energy(sys: &System, cfg: &SpinConfig, dis: &Disorder) -> Result<i64> {
    sys.check_config(cfg)?;
    sys.check_disorder(dis)?;
    let violated = (0..sys.n_terms()).filter(|&t| sys.violated(cfg, dis, t)).count() as i64;
    Ok(2 * violated - sys.n_terms() as i64)
}

/// Energy change from flipping variable `var`, using only its incident terms.
pub fn delta_energy(sys: &System, cfg: &SpinConfig, dis: &Disorder, var: usize) -> Result<i64> {
    sys.check_config(cfg)?;
    sys.check_disorder(dis)?;
    if var >= sys.n_vars() {
        return Err(Error::OutOfRange {
            kind: "variable",
            id: var,
            count: sys.n_vars(),
        });
    }
    let k = sys.terms_per_var() as i64;
    let unsat = sys
        .terms_of(var)
        .iter()
        .filter(|&&t| sys.violated(cfg, dis, t as usize))
        .count() as i64;
    Ok(2 * (k - 2 * unsat))
}
