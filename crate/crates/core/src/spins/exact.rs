//! Exact enumeration of small systems.
//!
//! All `2^N` configurations are visited in Gray-code order, so each step
//! flips a single variable and updates the energy and every requested loop
//! product incrementally. The enumeration records integer histograms indexed
//! by the number of unsatisfied terms, which makes the result valid for every
//! inverse temperature at once.

use crate::disorder::Disorder;
use crate::error::{Error, Result};
use crate::lattice::WilsonLoopSpec;
use crate::model::Model;

use super::{SpinConfig, System};

pub const EXACT_VAR_CAP: usize = 26;

#[derive(Clone, Debug)]
pub struct DensityOfStates {
    n_terms: usize,
    /// `counts[u]`: configurations with `u` unsatisfied terms (`E = 2u - N`).
    counts: Vec<u64>,
    loops: Vec<WilsonLoopSpec>,
    /// `loop_sums[c * (N + 1) + u]`: Σ of loop `c`'s product over those configurations.
    loop_sums: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    pub mean_energy: f64,
    pub energy_variance: f64,
    pub wilson: Vec<(WilsonLoopSpec, f64)>,
}

impl ExactResult {
    /// `β² Var(E) / n_sites`.
    pub fn specific_heat(&self, beta: f64, n_sites: usize) -> f64 {
        beta * beta * self.energy_variance / n_sites as f64
    }

    pub fn wilson_of(&self, spec: &WilsonLoopSpec) -> Option<f64> {
        self.wilson.iter().find(|(s, _)| s == spec).map(|&(_, w)| w)
    }
}

pub fn enumerate_states(sys: &System, dis: &Disorder, loops: &[WilsonLoopSpec]) -> Result<DensityOfStates> {
    let n = sys.n_vars();
    if n > EXACT_VAR_CAP {
        return Err(Error::TooManyVariables {
            vars: n,
            cap: EXACT_VAR_CAP,
        });
    }
    if !loops.is_empty() && sys.model() != Model::Gauge {
        return Err(Error::InvalidLoop("Wilson loops need link variables".into()));
    }
    let start = SpinConfig::all_plus(sys);
    sys.check_disorder(dis)?;

    let mut var_loops: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, spec) in loops.iter().enumerate() {
        for link in sys.lattice().loop_links(spec)? {
            var_loops[link.0].push(c);
        }
    }

    let n_terms = sys.n_terms();
    let width = n_terms + 1;
    let mut violated = sys.violation_bits(&start, dis);
    let mut u = violated.count_ones();
    let k = sys.terms_per_var();
    let mut loop_sign = vec![1i64; loops.len()];
    let mut counts = vec![0u64; width];
    let mut loop_sums = vec![0i64; loops.len() * width];

    let mut record = |u: usize, loop_sign: &[i64]| {
        counts[u] += 1;
        for (c, &s) in loop_sign.iter().enumerate() {
            loop_sums[c * width + u] += s;
        }
    };
    record(u, &loop_sign);
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let terms = sys.terms_of(v);
        let unsat = terms.iter().filter(|&&t| violated.get(t as usize)).count();
        for &t in terms {
            violated.toggle(t as usize);
        }
        u = u + k - 2 * unsat;
        for &c in &var_loops[v] {
            loop_sign[c] = -loop_sign[c];
        }
        record(u, &loop_sign);
    }

    Ok(DensityOfStates {
        n_terms,
        counts,
        loops: loops.to_vec(),
        loop_sums,
    })
}

impl DensityOfStates {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn at_beta(&self, beta: f64) -> ExactResult {
        let n = self.n_terms as f64;
        let width = self.n_terms + 1;
        let energy = |u: usize| 2.0 * u as f64 - n;
        // log-sum-exp over occupied energy levels
        let log_terms: Vec<Option<f64>> = self
            .counts
            .iter()
            .enumerate()
            .map(|(u, &c)| (c > 0).then(|| (c as f64).ln() - beta * energy(u)))
            .collect();
        let shift = log_terms.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let rel: Vec<f64> = log_terms
            .iter()
            .map(|t| t.map_or(0.0, |t| (t - shift).exp()))
            .collect();
        let total: f64 = rel.iter().sum();
        let log_z = shift + total.ln();
        let mean_energy = rel.iter().enumerate().map(|(u, w)| w * energy(u)).sum::<f64>() / total;
        let energy_variance = rel
            .iter()
            .enumerate()
            .map(|(u, w)| w * (energy(u) - mean_energy).powi(2))
            .sum::<f64>()
            / total;
        // per-configuration weight at level u is rel[u] / counts[u]
        let wilson = self
            .loops
            .iter()
            .enumerate()
            .map(|(c, spec)| {
                let s: f64 = (0..width)
                    .filter(|&u| self.counts[u] > 0)
                    .map(|u| self.loop_sums[c * width + u] as f64 * rel[u] / self.counts[u] as f64)
                    .sum();
                (*spec, s / total)
            })
            .collect();
        ExactResult {
            log_z,
            mean_energy,
            energy_variance,
            wilson,
        }
    }
}

/// Exact `ln Z`, `⟨E⟩`, `Var(E)` and `⟨Π_C σ⟩` by full summation.
pub fn exact_enumerate(
    sys: &System,
    dis: &Disorder,
    beta: f64,
    loops: &[WilsonLoopSpec],
) -> Result<ExactResult> {
    Ok(enumerate_states(sys, dis, loops)?.at_beta(beta))
}
