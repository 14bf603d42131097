//! Specific-heat peak location along a one-dimensional cut.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::PointSummary;

pub const MIN_POINTS: usize = 5;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakAxis {
    Beta,
    P,
}

impl PeakAxis {
    /// The coordinate that varies along the cut.
    pub fn infer(summaries: &[PointSummary]) -> Result<Self> {
        let same = |f: fn(&PointSummary) -> f64| summaries.windows(2).all(|w| f(&w[0]) == f(&w[1]));
        match (same(|s| s.p), same(|s| s.beta)) {
            (true, false) => Ok(PeakAxis::Beta),
            (false, true) => Ok(PeakAxis::P),
            _ => Err(Error::InvalidInput("summaries do not lie on a cut of constant p or beta".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakEstimate {
    /// False when the curve is monotone or peaks at an end of the cut.
    pub found: bool,
    /// Vertex of the parabola, or the coordinate of the largest value.
    pub location: f64,
    pub location_err: f64,
    pub height: f64,
    pub height_err: f64,
    pub note: Option<String>,
}

/// Locate the maximum of `c` over a cut of grid points.
pub fn locate_peak(summaries: &[PointSummary], axis: PeakAxis) -> Result<PeakEstimate> {
    let x: Vec<f64> = summaries
        .iter()
        .map(|s| match axis {
            PeakAxis::Beta => s.beta,
            PeakAxis::P => s.p,
        })
        .collect();
    let c: Vec<f64> = summaries.iter().map(|s| s.c_ensemble).collect();
    let e: Vec<f64> = summaries.iter().map(|s| s.c_err).collect();
    locate_peak_xy(&x, &c, &e)
}

/// Parabola through the largest value and its two neighbours, with errors
/// propagated linearly from the `c` errors.
pub fn locate_peak_xy(x: &[f64], c: &[f64], err: &[f64]) -> Result<PeakEstimate> {
    if x.len() != c.len() || x.len() != err.len() {
        return Err(Error::InvalidInput("peak inputs have different lengths".into()));
    }
    if x.len() < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "peak location needs at least {MIN_POINTS} points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite peak input".into()));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    if order.windows(2).any(|w| x[w[0]] == x[w[1]]) {
        return Err(Error::InvalidInput("repeated coordinate along the cut".into()));
    }
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let cs: Vec<f64> = order.iter().map(|&i| c[i]).collect();
    let es: Vec<f64> = order.iter().map(|&i| err[i]).collect();

    let k = (0..cs.len()).fold(0, |m, i| if cs[i] > cs[m] { i } else { m });
    let not_found = |note: &str| PeakEstimate {
        found: false,
        location: xs[k],
        location_err: f64::INFINITY,
        height: cs[k],
        height_err: es[k],
        note: Some(note.to_string()),
    };
    let increasing = cs.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = cs.windows(2).all(|w| w[1] <= w[0]);
    if increasing || decreasing {
        return Ok(not_found("no peak: c is monotone along the cut"));
    }
    if k == 0 || k == cs.len() - 1 {
        return Ok(not_found("no peak: maximum at an end of the cut"));
    }

    let (x0, x1, x2) = (xs[k - 1], xs[k], xs[k + 1]);
    let (y0, y1, y2) = (cs[k - 1], cs[k], cs[k + 1]);
    // y = a x² + b x + c0 through the three points, via divided differences
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return Ok(not_found("no peak: flat top"));
    }
    let b = d01 - a * (x0 + x1);
    let vertex = -b / (2.0 * a);

    // ∂a/∂y_i and ∂b/∂y_i
    let da = [
        1.0 / ((x1 - x0) * (x2 - x0)),
        -1.0 / ((x2 - x1) * (x2 - x0)) - 1.0 / ((x1 - x0) * (x2 - x0)),
        1.0 / ((x2 - x1) * (x2 - x0)),
    ];
    let dd01 = [-1.0 / (x1 - x0), 1.0 / (x1 - x0), 0.0];
    let db: Vec<f64> = (0..3).map(|i| dd01[i] - da[i] * (x0 + x1)).collect();
    let sig = [es[k - 1], es[k], es[k + 1]];
    let loc_var: f64 = (0..3)
        .map(|i| ((-db[i] - 2.0 * vertex * da[i]) / (2.0 * a) * sig[i]).powi(2))
        .sum();
    // the fitted maximum is linear in y through the Lagrange basis at the vertex
    let basis = [
        (vertex - x1) * (vertex - x2) / ((x0 - x1) * (x0 - x2)),
        (vertex - x0) * (vertex - x2) / ((x1 - x0) * (x1 - x2)),
        (vertex - x0) * (vertex - x1) / ((x2 - x0) * (x2 - x1)),
    ];
    let height = basis[0] * y0 + basis[1] * y1 + basis[2] * y2;
    let height_var: f64 = (0..3).map(|i| (basis[i] * sig[i]).powi(2)).sum();
    Ok(PeakEstimate {
        found: true,
        location: vertex,
        location_err: loc_var.sqrt(),
        height,
        height_err: height_var.sqrt(),
        note: None,
    })
}
