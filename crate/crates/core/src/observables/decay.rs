//! Area-law versus perimeter-law classification of Wilson-loop decay.

use serde::{Deserialize, Serialize};

use super::wilson::WilsonEstimate;

pub const MIN_LOOPS: usize = 6;
/// Significance, in standard deviations, required to call a coefficient nonzero.
pub const SIGNIFICANCE: f64 = 3.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AreaLaw,
    PerimeterLaw,
    Ambiguous,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AreaLaw => "area",
            Verdict::PerimeterLaw => "perimeter",
            Verdict::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayClassification {
    pub verdict: Verdict,
    /// String tension: coefficient of the area.
    #[serde(with = "nan_as_null")]
    pub alpha: f64,
    #[serde(with = "nan_as_null")]
    pub alpha_err: f64,
    /// Coefficient of the perimeter.
    #[serde(with = "nan_as_null")]
    pub gamma: f64,
    #[serde(with = "nan_as_null")]
    pub gamma_err: f64,
    #[serde(with = "nan_as_null")]
    pub intercept: f64,
    pub n_used: usize,
    #[serde(with = "nan_as_null")]
    pub chi2_per_dof: f64,
    pub diagnostic: Option<String>,
}

impl DecayClassification {
    fn ambiguous(n_used: usize, why: String) -> Self {
        Self {
            verdict: Verdict::Ambiguous,
            alpha: f64::NAN,
            alpha_err: f64::NAN,
            gamma: f64::NAN,
            gamma_err: f64::NAN,
            intercept: f64::NAN,
            n_used,
            chi2_per_dof: f64::NAN,
            diagnostic: Some(why),
        }
    }
}

/// Weighted least-squares fit of `-ln W = α A + γ P + c0`.
///
/// Loops whose mean is not at least two standard errors above zero are
/// dropped. Parameter errors are scaled by `sqrt(χ²/dof)` when the fit is
/// worse than its error bars allow. The verdict is `AreaLaw` when `α` is
/// significant, otherwise `PerimeterLaw` when `γ` is, otherwise `Ambiguous`.
pub fn classify_decay(estimates: &[WilsonEstimate]) -> DecayClassification {
    let usable: Vec<(f64, f64, f64, f64)> = estimates
        .iter()
        .filter(|e| e.std_error.is_finite() && e.mean.is_finite() && e.mean - 2.0 * e.std_error > 0.0)
        .map(|e| {
            let y = -e.mean.ln();
            let sigma = (e.std_error / e.mean).max(f64::MIN_POSITIVE.sqrt());
            (e.shape.area() as f64, e.shape.perimeter() as f64, y, sigma)
        })
        .collect();
    let n = usable.len();
    if n < MIN_LOOPS {
        return DecayClassification::ambiguous(n, format!("only {n} usable loops, need {MIN_LOOPS}"));
    }

    let mut normal = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(a, p, y, s) in &usable {
        let x = [a, p, 1.0];
        let w = 1.0 / (s * s);
        for i in 0..3 {
            rhs[i] += w * x[i] * y;
            for j in 0..3 {
                normal[i][j] += w * x[i] * x[j];
            }
        }
    }
    let Some(cov) = invert3(&normal) else {
        return DecayClassification::ambiguous(n, "loop set does not separate area from perimeter".into());
    };
    let coef: Vec<f64> = (0..3).map(|i| (0..3).map(|j| cov[i][j] * rhs[j]).sum()).collect();
    let chi2: f64 = usable
        .iter()
        .map(|&(a, p, y, s)| ((y - coef[0] * a - coef[1] * p - coef[2]) / s).powi(2))
        .sum();
    let dof = (n - 3) as f64;
    let chi2_per_dof = if dof > 0.0 { chi2 / dof } else { 0.0 };
    let scale = chi2_per_dof.max(1.0).sqrt();
    let alpha_err = cov[0][0].max(0.0).sqrt() * scale;
    let gamma_err = cov[1][1].max(0.0).sqrt() * scale;
    let (alpha, gamma) = (coef[0], coef[1]);

    let verdict = if alpha > SIGNIFICANCE * alpha_err {
        Verdict::AreaLaw
    } else if gamma > SIGNIFICANCE * gamma_err {
        Verdict::PerimeterLaw
    } else {
        Verdict::Ambiguous
    };
    DecayClassification {
        verdict,
        alpha,
        alpha_err,
        gamma,
        gamma_err,
        intercept: coef[2],
        n_used: n,
        chi2_per_dof,
        diagnostic: None,
    }
}

// JSON has no NaN; an unfitted coefficient is written as null
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    // rescale to unit diagonal so the singularity test is scale free
    let d: Vec<f64> = (0..3).map(|i| m[i][i].sqrt()).collect();
    if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return None;
    }
    let s = |i: usize, j: usize| m[i][j] / (d[i] * d[j]);
    let cof = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let minor = s(r[0], c[0]) * s(r[1], c[1]) - s(r[0], c[1]) * s(r[1], c[0]);
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let det: f64 = (0..3).map(|j| s(0, j) * cof(0, j)).sum();
    if !(det.abs() > 1e-12) {
        return None;
    }
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cof(j, i) / det / (d[i] * d[j]);
        }
    }
    Some(out)
}
