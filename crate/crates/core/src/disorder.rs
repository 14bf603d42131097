//! Quenched ±1 couplings, their probability weight, and the Nishimori line.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::bits::PackedBits;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::model::Model;
use crate::rng::{self, DISORDER_STREAM};

/// One quenched sign per coupling term (plaquette for the gauge model, bond
/// for the Ising model). Bit `1` means a wrong-sign term, `η = -1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Disorder {
    model: Model,
    dim: usize,
    size: usize,
    p: f64,
    sample_seed: u64,
    signs: PackedBits,
}

pub(crate) fn check_unit_interval(p: f64) -> Result<()> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            value: p,
            reason: "must lie in [0, 1]",
        })
    }
}

/// Draw each sign independently as `-1` with probability `p`.
pub fn sample_disorder(lat: &Lattice, model: Model, p: f64, sample_seed: u64) -> Result<Disorder> {
    check_unit_interval(p)?;
    let mut rng = rng::stream(sample_seed, DISORDER_STREAM);
    let n = model.n_terms(lat);
    let signs = PackedBits::from_fn(n, |_| rng.gen_bool(p));
    Ok(Disorder {
        model,
        dim: lat.dim(),
        size: lat.size(),
        p,
        sample_seed,
        signs,
    })
}

impl Disorder {
    /// Disorder with every coupling `+1` (the pure model).
    pub fn uniform(lat: &Lattice, model: Model) -> Self {
        Self {
            model,
            dim: lat.dim(),
            size: lat.size(),
            p: 0.0,
            sample_seed: 0,
            signs: PackedBits::zeros(model.n_terms(lat)),
        }
    }

    /// Explicit wrong-sign pattern; `wrong[t]` marks `η_t = -1`.
    pub fn from_wrong_signs(lat: &Lattice, model: Model, p: f64, wrong: &[bool]) -> Result<Self> {
        check_unit_interval(p)?;
        let n = model.n_terms(lat);
        if wrong.len() != n {
            return Err(Error::Mismatch(format!(
                "{} signs given, {model} model on this lattice has {n} terms",
                wrong.len()
            )));
        }
        Ok(Self {
            model,
            dim: lat.dim(),
            size: lat.size(),
            p,
            sample_seed: 0,
            signs: PackedBits::from_fn(n, |i| wrong[i]),
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sample_seed(&self) -> u64 {
        self.sample_seed
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    #[inline]
    pub fn is_wrong(&self, term: usize) -> bool {
        self.signs.get(term)
    }

    #[inline]
    pub fn sign(&self, term: usize) -> i8 {
        self.signs.sign(term)
    }

    pub fn n_wrong(&self) -> usize {
        self.signs.count_ones()
    }

    pub fn bits(&self) -> &PackedBits {
        &self.signs
    }

    /// Sum of all signs, `Σ η`.
    pub fn sign_sum(&self) -> i64 {
        self.len() as i64 - 2 * self.n_wrong() as i64
    }

    pub fn matches(&self, lat: &Lattice, model: Model) -> bool {
        self.model == model && self.dim == lat.dim() && self.size == lat.size()
    }

    const MAGIC: &'static [u8; 4] = b"Z2DS";
    const VERSION: u8 = 1;

    /// Compact binary form: magic, version, d, model, reserved byte, L (u32),
    /// p (f64), sample seed (u64), sign count (u64), then packed sign bits.
    /// Integers are little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&[Self::VERSION, self.dim as u8, self.model.code(), 0])?;
        w.write_all(&(self.size as u32).to_le_bytes())?;
        w.write_all(&self.p.to_le_bytes())?;
        w.write_all(&self.sample_seed.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.signs.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read, origin: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: origin.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut head = [0u8; 36];
        r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
        if &head[0..4] != Self::MAGIC {
            return Err(bad("not a disorder file"));
        }
        if head[4] != Self::VERSION {
            return Err(bad("unsupported version"));
        }
        let dim = head[5] as usize;
        let model = Model::from_code(head[6]).ok_or_else(|| bad("unknown model"))?;
        let size = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let p = f64::from_le_bytes(head[12..20].try_into().unwrap());
        let sample_seed = u64::from_le_bytes(head[20..28].try_into().unwrap());
        let n = u64::from_le_bytes(head[28..36].try_into().unwrap()) as usize;
        let lat = Lattice::new(dim, size).map_err(|e| bad(&e.to_string()))?;
        if n != model.n_terms(&lat) {
            return Err(bad("sign count does not match the lattice"));
        }
        check_unit_interval(p).map_err(|e| bad(&e.to_string()))?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let signs = PackedBits::from_bytes(n, &payload).ok_or_else(|| bad("bad sign payload"))?;
        Ok(Self {
            model,
            dim,
            size,
            p,
            sample_seed,
            signs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

/// Inverse temperature on the Nishimori line, `β = ½ ln((1 - p) / p)`.
pub fn nishimori_beta(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0 && p < 0.5) {
        return Err(Error::InvalidProbability {
            value: p,
            reason: "the Nishimori line needs 0 < p < 1/2",
        });
    }
    Ok(0.5 * ((1.0 - p) / p).ln())
}

/// `ln(2 cosh k)` without overflow for large `|k|`.
fn ln_two_cosh(k: f64) -> f64 {
    let a = k.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Exact log-probability of a sign realization under the product measure
/// with coupling `k = ½ ln((1 - p) / p)`: `k Σ η - N ln(2 cosh k)`.
pub fn disorder_log_weight(dis: &Disorder, k: f64) -> f64 {
    k * dis.sign_sum() as f64 - dis.len() as f64 * ln_two_cosh(k)
}
