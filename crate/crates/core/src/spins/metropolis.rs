//! Single-variable Metropolis dynamics and quenched annealing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::PackedBits;
use crate::disorder::Disorder;
use crate::error::{Error, Result};

use super::{SpinConfig, System};

/// Markov chain state for one disorder sample.
///
/// Alongside the configuration it caches which terms are unsatisfied, so a
/// flip proposal reads only the incident term bits and the energy is tracked
/// exactly as `2 * n_violated - n_terms`.
#[derive(Clone, Debug)]
pub struct MetropolisChain<'a> {
    sys: &'a System,
    dis: &'a Disorder,
    cfg: SpinConfig,
    violated: PackedBits,
    n_violated: usize,
    beta: f64,
    // acceptance probability indexed by the number of unsatisfied incident terms
    accept: Vec<f64>,
}

impl<'a> MetropolisChain<'a> {
    pub fn new(sys: &'a System, dis: &'a Disorder, cfg: SpinConfig) -> Result<Self> {
        sys.check_config(&cfg)?;
        sys.check_disorder(dis)?;
        let violated = sys.violation_bits(&cfg, dis);
        let n_violated = violated.count_ones();
        let mut chain = Self {
            sys,
            dis,
            cfg,
            violated,
            n_violated,
            beta: f64::NAN,
            accept: Vec::new(),
        };
        chain.set_beta(0.0);
        Ok(chain)
    }

    pub fn config(&self) -> &SpinConfig {
        &self.cfg
    }

    pub fn into_config(self) -> SpinConfig {
        self.cfg
    }

    pub fn system(&self) -> &System {
        self.sys
    }

    pub fn disorder(&self) -> &Disorder {
        self.dis
    }

    /// Current energy, tracked incrementally.
    pub fn energy(&self) -> i64 {
        2 * self.n_violated as i64 - self.sys.n_terms() as i64
    }

    /// Unsatisfied-term bits: term `t` has `η_t Π σ = -1`.
    pub fn violated(&self) -> &PackedBits {
        &self.violated
    }

    fn set_beta(&mut self, beta: f64) {
        if beta == self.beta {
            return;
        }
        let k = self.sys.terms_per_var();
        // flipping with u unsatisfied incident terms changes E by 2k - 4u
        self.accept = (0..=k)
            .map(|u| {
                let de = 2.0 * k as f64 - 4.0 * u as f64;
                if de <= 0.0 {
                    1.0
                } else {
                    (-beta * de).exp()
                }
            })
            .collect();
        self.beta = beta;
    }

    /// One proposal per variable in index order; returns the number of
    /// accepted flips.
    pub fn sweep(&mut self, beta: f64, rng: &mut impl Rng) -> usize {
        debug_assert!(beta >= 0.0);
        self.set_beta(beta);
        let k = self.sys.terms_per_var();
        let mut accepted = 0;
        for v in 0..self.sys.n_vars() {
            let terms = self.sys.terms_of(v);
            let unsat = terms.iter().filter(|&&t| self.violated.get(t as usize)).count();
            let take = 2 * unsat >= k || rng.gen::<f64>() < self.accept[unsat];
            if take {
                self.cfg.flip(v);
                for &t in terms {
                    self.violated.toggle(t as usize);
                }
                self.n_violated = self.n_violated + k - 2 * unsat;
                accepted += 1;
            }
        }
        accepted
    }

    /// Run the schedule and leave the chain at `T_target`.
    pub fn anneal(&mut self, sched: &AnnealSchedule, rng: &mut impl Rng) -> Result<()> {
        for t in sched.temperatures()? {
            for _ in 0..sched.sweeps_per_step {
                self.sweep(1.0 / t, rng);
            }
        }
        Ok(())
    }
}

/// Geometric cooling from `t_start` to `t_target`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_start: f64,
    pub t_target: f64,
    pub cooling_factor: f64,
    pub sweeps_per_step: usize,
}

impl AnnealSchedule {
    pub const DEFAULT_T_START: f64 = 2.6;
    pub const DEFAULT_COOLING: f64 = 0.95;
    pub const DEFAULT_SWEEPS_PER_STEP: usize = 50;

    /// Default schedule ending at `t_target`.
    pub fn to_temperature(t_target: f64) -> Self {
        Self {
            t_start: Self::DEFAULT_T_START.max(t_target),
            t_target,
            cooling_factor: Self::DEFAULT_COOLING,
            sweeps_per_step: Self::DEFAULT_SWEEPS_PER_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_target.is_finite()
            && self.t_target > 0.0
            && self.t_start.is_finite()
            && self.t_start >= self.t_target
            && self.cooling_factor > 0.0
            && self.cooling_factor < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(format!(
                "need T_start >= T_target > 0 and cooling factor in (0, 1), got {self:?}"
            )))
        }
    }

    /// `T_start, T_start f, T_start f^2, ...` above the target, then `T_target`.
    pub fn temperatures(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = Vec::new();
        let mut t = self.t_start;
        while t > self.t_target {
            out.push(t);
            t *= self.cooling_factor;
        }
        out.push(self.t_target);
        Ok(out)
    }

    pub fn total_sweeps(&self) -> Result<usize> {
        Ok(self.temperatures()?.len() * self.sweeps_per_step)
    }
}

/// Metropolis sweep over a detached configuration.
pub fn metropolis_sweep(
    sys: &System,
    cfg: &mut SpinConfig,
    dis: &Disorder,
    beta: f64,
    rng: &mut impl Rng,
) -> Result<usize> {
    let mut chain = MetropolisChain::new(sys, dis, cfg.clone())?;
    let accepted = chain.sweep(beta, rng);
    *cfg = chain.into_config();
    Ok(accepted)
}

/// Anneal a detached configuration; returns the final configuration.
pub fn anneal(
    sys: &System,
    cfg: SpinConfig,
    dis: &Disorder,
    sched: &AnnealSchedule,
    rng: &mut impl Rng,
) -> Result<SpinConfig> {
    let mut chain = MetropolisChain::new(sys, dis, cfg)?;
    chain.anneal(sched, rng)?;
    Ok(chain.into_config())
}
