//! Rectangular Wilson loops averaged over translations and orientations.
//!
//! For a contractible rectangle the product of link variables around the
//! loop equals the product of the plaquette products it encloses, so each
//! measurement builds a periodic 2D prefix-parity table per lattice slice and
//! evaluates every rectangle in O(1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, PlaquetteId};
use crate::model::Model;
use crate::spins::SpinConfig;

use super::stats;

/// Loop shape `R × S` with `R <= S`; both orientations are measured.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopShape {
    pub r: usize,
    pub s: usize,
}

impl LoopShape {
    pub fn new(r: usize, s: usize) -> Self {
        Self {
            r: r.min(s),
            s: r.max(s),
        }
    }

    pub fn area(&self) -> usize {
        self.r * self.s
    }

    pub fn perimeter(&self) -> usize {
        2 * (self.r + self.s)
    }
}

/// `min(8, L / 2)`.
pub fn default_r_max(size: usize) -> usize {
    (size / 2).min(8)
}

/// Every shape `1 <= R <= S <= r_max`.
pub fn loop_shapes(r_max: usize) -> Vec<LoopShape> {
    let mut out = Vec::new();
    for r in 1..=r_max {
        for s in r..=r_max {
            out.push(LoopShape { r, s });
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonEstimate {
    pub shape: LoopShape,
    pub mean: f64,
    pub std_error: f64,
    pub n_measurements: usize,
}

/// Accumulates one translation- and orientation-averaged value per shape per
/// measured configuration.
#[derive(Clone, Debug)]
pub struct WilsonMeter {
    lattice: Lattice,
    shapes: Vec<LoopShape>,
    series: Vec<Vec<f64>>,
    plaq: Vec<u8>,
    prefix: Vec<u8>,
}

impl WilsonMeter {
    pub fn new(lattice: &Lattice, shapes: Vec<LoopShape>) -> Result<Self> {
        let max = lattice.size() - 1;
        if let Some(bad) = shapes.iter().find(|s| s.r == 0 || s.s > max || s.r > s.s) {
            return Err(Error::InvalidLoop(format!(
                "shape {}x{} not in 1 <= R <= S <= {max}",
                bad.r, bad.s
            )));
        }
        let l = lattice.size();
        Ok(Self {
            lattice: lattice.clone(),
            series: vec![Vec::new(); shapes.len()],
            shapes,
            plaq: vec![0; lattice.n_plaquettes()],
            prefix: vec![0; (2 * l + 1) * (2 * l + 1)],
        })
    }

    pub fn shapes(&self) -> &[LoopShape] {
        &self.shapes
    }

    pub fn n_measurements(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    /// Number of loop placements averaged per shape per measurement.
    pub fn placements(&self, shape: LoopShape) -> usize {
        let orient = if shape.r == shape.s { 1 } else { 2 };
        self.lattice.n_plaquettes() * orient
    }

    pub fn series(&self, index: usize) -> &[f64] {
        &self.series[index]
    }

    pub fn measure(&mut self, cfg: &SpinConfig) -> Result<()> {
        let lat = &self.lattice;
        if cfg.model() != Model::Gauge || cfg.len() != lat.n_links() {
            return Err(Error::Mismatch("Wilson loops need a gauge configuration on this lattice".into()));
        }
        for (p, slot) in self.plaq.iter_mut().enumerate() {
            let links = lat.plaquette_links_unchecked(PlaquetteId(p));
            *slot = links.iter().fold(0u8, |acc, l| acc ^ cfg.is_flipped(l.0) as u8);
        }
        let l = lat.size();
        let n = lat.n_sites();
        let w = 2 * l + 1;
        let mut odd = vec![0usize; self.shapes.len()];
        for (plane, &(a, b)) in lat.planes().iter().enumerate() {
            let stride_a = l.pow(a as u32);
            let stride_b = l.pow(b as u32);
            let third = (0..lat.dim()).find(|&c| c != a && c != b);
            let slices = if third.is_some() { l } else { 1 };
            let stride_c = third.map_or(0, |c| l.pow(c as u32));
            for k in 0..slices {
                let base = plane * n + k * stride_c;
                // prefix[(i) * w + j] = parity of the i x j block starting at the origin of the doubled torus
                for i in 0..2 * l {
                    for j in 0..2 * l {
                        let f = self.plaq[base + (i % l) * stride_a + (j % l) * stride_b];
                        self.prefix[(i + 1) * w + j + 1] =
                            self.prefix[i * w + j + 1] ^ self.prefix[(i + 1) * w + j] ^ self.prefix[i * w + j] ^ f;
                    }
                }
                let px = &self.prefix;
                let rect = |i: usize, j: usize, da: usize, db: usize| {
                    px[(i + da) * w + j + db] ^ px[i * w + j + db] ^ px[(i + da) * w + j] ^ px[i * w + j]
                };
                for (c, shape) in self.shapes.iter().enumerate() {
                    let mut count = 0usize;
                    for i in 0..l {
                        for j in 0..l {
                            count += rect(i, j, shape.r, shape.s) as usize;
                            if shape.r != shape.s {
                                count += rect(i, j, shape.s, shape.r) as usize;
                            }
                        }
                    }
                    odd[c] += count;
                }
            }
        }
        for (c, shape) in self.shapes.iter().enumerate() {
            let total = self.placements(*shape);
            let value = (total as f64 - 2.0 * odd[c] as f64) / total as f64;
            self.series[c].push(value);
        }
        Ok(())
    }

    /// Time averages with binned errors, floored at the error of fully
    /// independent placements.
    pub fn estimates(&self) -> Vec<WilsonEstimate> {
        self.shapes
            .iter()
            .zip(&self.series)
            .map(|(&shape, xs)| {
                let n = xs.len();
                if n == 0 {
                    return WilsonEstimate {
                        shape,
                        mean: f64::NAN,
                        std_error: f64::INFINITY,
                        n_measurements: 0,
                    };
                }
                let mean = stats::mean(xs);
                let draws = (n * self.placements(shape)) as f64;
                let floor = ((1.0 - mean * mean).max(1.0 / draws) / draws).sqrt();
                WilsonEstimate {
                    shape,
                    mean,
                    std_error: stats::binned_error(xs).max(floor),
                    n_measurements: n,
                }
            })
            .collect()
    }
}

/// Estimate one loop shape from a stream of equilibrium configurations.
pub fn wilson_sample<'c>(
    lattice: &Lattice,
    configs: impl IntoIterator<Item = &'c SpinConfig>,
    shape: LoopShape,
) -> Result<WilsonEstimate> {
    let mut meter = WilsonMeter::new(lattice, vec![shape])?;
    for cfg in configs {
        meter.measure(cfg)?;
    }
    Ok(meter.estimates()[0])
}

/// Row of a per-loop table: `R, S, A, P, W, err, -ln W / A, -ln W / P`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonTableRow {
    pub r: usize,
    pub s: usize,
    pub area: usize,
    pub perimeter: usize,
    pub w: f64,
    pub err: f64,
    pub neg_ln_w_over_area: f64,
    pub neg_ln_w_over_perimeter: f64,
}

pub fn wilson_table(estimates: &[WilsonEstimate]) -> Vec<WilsonTableRow> {
    estimates
        .iter()
        .map(|e| {
            let a = e.shape.area();
            let p = e.shape.perimeter();
            let nl = if e.mean > 0.0 { -e.mean.ln() } else { f64::NAN };
            WilsonTableRow {
                r: e.shape.r,
                s: e.shape.s,
                area: a,
                perimeter: p,
                w: e.mean,
                err: e.std_error,
                neg_ln_w_over_area: nl / a as f64,
                neg_ln_w_over_perimeter: nl / p as f64,
            }
        })
        .collect()
}
