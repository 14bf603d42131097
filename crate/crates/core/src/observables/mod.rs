//! Measured quantities: specific heat, Wilson loops, disorder averages and
//! decay classification.

pub mod decay;
pub mod stats;
pub mod wilson;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use decay::{classify_decay, DecayClassification, Verdict};
pub use wilson::{
    default_r_max, loop_shapes, wilson_sample, wilson_table, LoopShape, WilsonEstimate, WilsonMeter,
    WilsonTableRow,
};

/// Energies recorded along one equilibrium chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub samples: Vec<f64>,
    pub beta: f64,
    pub n_sites: usize,
}

impl EnergySeries {
    pub fn new(samples: Vec<f64>, beta: f64, n_sites: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("energy series is empty".into()));
        }
        if n_sites == 0 {
            return Err(Error::InvalidInput("n_sites must be positive".into()));
        }
        Ok(Self { samples, beta, n_sites })
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.samples)
    }

    pub fn mean_error(&self) -> f64 {
        stats::binned_error(&self.samples)
    }
}

fn check_series(series: &EnergySeries) -> Result<()> {
    if series.samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "specific heat needs at least 2 measurements, got {}",
            series.samples.len()
        )));
    }
    if series.n_sites == 0 {
        return Err(Error::InvalidInput("n_sites must be positive".into()));
    }
    Ok(())
}

/// `c = β² (⟨E²⟩ − ⟨E⟩²) / n_sites`.
pub fn specific_heat(series: &EnergySeries) -> Result<f64> {
    check_series(series)?;
    Ok(heat_of(&series.samples, series.beta, series.n_sites))
}

fn heat_of(xs: &[f64], beta: f64, n_sites: usize) -> f64 {
    beta * beta * stats::population_variance(xs) / n_sites as f64
}

/// Jackknife error of [`specific_heat`] over contiguous bins.
pub fn specific_heat_error(series: &EnergySeries) -> Result<f64> {
    check_series(series)?;
    let (beta, n) = (series.beta, series.n_sites);
    Ok(stats::jackknife_error(&series.samples, |xs| heat_of(xs, beta, n)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub per_sample: Vec<f64>,
    pub ensemble_mean: f64,
    /// Population standard deviation across samples.
    pub sample_fluctuation: f64,
}

impl EnsembleSummary {
    /// Standard error of the ensemble mean from the spread between samples.
    pub fn standard_error(&self) -> f64 {
        let n = self.per_sample.len();
        if n < 2 {
            return 0.0;
        }
        self.sample_fluctuation / ((n - 1) as f64).sqrt()
    }
}

/// Unweighted average over disorder samples.
pub fn ensemble_average(per_sample: &[f64]) -> Result<EnsembleSummary> {
    if per_sample.is_empty() {
        return Err(Error::InvalidInput("ensemble average of no samples".into()));
    }
    Ok(EnsembleSummary {
        per_sample: per_sample.to_vec(),
        ensemble_mean: stats::mean(per_sample),
        sample_fluctuation: stats::population_variance(per_sample).sqrt(),
    })
}

/// Disorder average of per-sample Wilson estimates, shape by shape.
///
/// The error combines the spread between samples with the thermal errors of
/// the individual samples, taking whichever is larger.
pub fn ensemble_wilson(per_sample: &[Vec<WilsonEstimate>]) -> Result<Vec<WilsonEstimate>> {
    let first = per_sample
        .first()
        .ok_or_else(|| Error::InvalidInput("ensemble average of no samples".into()))?;
    let mut out = Vec::with_capacity(first.len());
    for (i, est) in first.iter().enumerate() {
        let mut means = Vec::with_capacity(per_sample.len());
        let mut thermal = 0.0;
        let mut count = 0;
        for sample in per_sample {
            let e = sample
                .get(i)
                .filter(|e| e.shape == est.shape)
                .ok_or_else(|| Error::Mismatch("samples measured different loop shapes".into()))?;
            means.push(e.mean);
            thermal += e.std_error * e.std_error;
            count += e.n_measurements;
        }
        let summary = ensemble_average(&means)?;
        let n = means.len() as f64;
        out.push(WilsonEstimate {
            shape: est.shape,
            mean: summary.ensemble_mean,
            std_error: summary.standard_error().max(thermal.sqrt() / n),
            n_measurements: count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn heat_trivial_cases() {
        let s = EnergySeries::new(vec![-3.0; 10], 0.8, 8).unwrap();
        assert_eq!(specific_heat(&s).unwrap(), 0.0);
        let s = EnergySeries::new(vec![-3.0, 1.0, 5.0, -7.0], 0.0, 8).unwrap();
        assert_eq!(specific_heat(&s).unwrap(), 0.0);
        let s = EnergySeries::new(vec![-1.0, 1.0], 2.0, 4).unwrap();
        assert_abs_diff_eq!(specific_heat(&s).unwrap(), 1.0, epsilon = 1e-15);
        let single = EnergySeries::new(vec![1.0], 1.0, 1).unwrap();
        assert!(specific_heat(&single).is_err());
        assert!(EnergySeries::new(vec![], 1.0, 1).is_err());
    }

    #[test]
    fn ensemble_trivial_cases() {
        let s = ensemble_average(&[0.3]).unwrap();
        assert_eq!((s.ensemble_mean, s.sample_fluctuation), (0.3, 0.0));
        let s = ensemble_average(&[1.0, -1.0]).unwrap();
        assert_eq!((s.ensemble_mean, s.sample_fluctuation), (0.0, 1.0));
        assert!(ensemble_average(&[]).is_err());
    }

    #[test]
    fn ensemble_wilson_combines_errors() {
        let shape = LoopShape::new(1, 1);
        let est = |mean, std_error| WilsonEstimate {
            shape,
            mean,
            std_error,
            n_measurements: 10,
        };
        let out = ensemble_wilson(&[vec![est(0.5, 0.01)], vec![est(0.7, 0.01)]]).unwrap();
        assert_abs_diff_eq!(out[0].mean, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].std_error, 0.1, epsilon = 1e-15);
        assert_eq!(out[0].n_measurements, 20);
        let out = ensemble_wilson(&[vec![est(0.5, 0.04)]]).unwrap();
        assert_abs_diff_eq!(out[0].std_error, 0.04, epsilon = 1e-15);
        let other = WilsonEstimate {
            shape: LoopShape::new(1, 2),
            ..est(0.5, 0.1)
        };
        assert!(ensemble_wilson(&[vec![est(0.5, 0.1)], vec![other]]).is_err());
    }

    proptest! {
        #[test]
        fn heat_ignores_order_and_repetition(xs in prop::collection::vec(-50i32..50, 2..200), beta in 0.0f64..3.0) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let c = specific_heat(&EnergySeries::new(xs.clone(), beta, 27).unwrap()).unwrap();
            let rev: Vec<f64> = xs.iter().rev().copied().collect();
            let cr = specific_heat(&EnergySeries::new(rev, beta, 27).unwrap()).unwrap();
            let twice: Vec<f64> = xs.iter().chain(&xs).copied().collect();
            let ct = specific_heat(&EnergySeries::new(twice, beta, 27).unwrap()).unwrap();
            prop_assert!((c - cr).abs() <= 1e-9 * (1.0 + c.abs()));
            prop_assert!((c - ct).abs() <= 1e-9 * (1.0 + c.abs()));
            prop_assert!(c >= 0.0);
        }

        #[test]
        fn ensemble_mean_is_arithmetic(xs in prop::collection::vec(-1.0f64..1.0, 1..50)) {
            let s = ensemble_average(&xs).unwrap();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.ensemble_mean - m).abs() < 1e-12);
            prop_assert!(s.sample_fluctuation >= 0.0);
        }
    }
}
