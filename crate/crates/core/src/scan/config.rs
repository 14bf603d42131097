//! Scan configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::disorder::nishimori_beta;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::observables::wilson::{default_r_max, loop_shapes, LoopShape};
use crate::spins::AnnealSchedule;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanModel {
    Gauge3d,
    Ising2d,
}

impl ScanModel {
    pub fn model(self) -> Model {
        match self {
            ScanModel::Gauge3d => Model::Gauge,
            ScanModel::Ising2d => Model::Ising,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ScanModel::Gauge3d => 3,
            ScanModel::Ising2d => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScanModel::Gauge3d => "gauge3d",
            ScanModel::Ising2d => "ising2d",
        }
    }
}

impl std::str::FromStr for ScanModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauge3d" => Ok(ScanModel::Gauge3d),
            "ising2d" => Ok(ScanModel::Ising2d),
            _ => Err(Error::InvalidConfig(format!("unknown model {s:?}, expected gauge3d or ising2d"))),
        }
    }
}

/// Grid of `(p, β)` points.
///
/// Either explicit `points`, or the product of `p` and `beta` lists (p
/// outermost), or `p` with `nishimori = true` so that `β = β_N(p)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub nishimori: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<(f64, f64)>,
}

impl GridSpec {
    pub fn product(p: Vec<f64>, beta: Vec<f64>) -> Self {
        Self {
            p,
            beta,
            ..Self::default()
        }
    }

    pub fn nishimori(p: Vec<f64>) -> Self {
        Self {
            p,
            nishimori: true,
            ..Self::default()
        }
    }

    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        let raw: Vec<(f64, f64)> = if !self.points.is_empty() {
            if !self.p.is_empty() || !self.beta.is_empty() || self.nishimori {
                return bad("grid.points cannot be combined with grid.p, grid.beta or grid.nishimori");
            }
            self.points.clone()
        } else if self.nishimori {
            if !self.beta.is_empty() {
                return bad("grid.beta must be empty on the Nishimori line");
            }
            self.p
                .iter()
                .map(|&p| nishimori_beta(p).map(|b| (p, b)))
                .collect::<Result<_>>()?
        } else {
            self.p
                .iter()
                .flat_map(|&p| self.beta.iter().map(move |&b| (p, b)))
                .collect()
        };
        if raw.is_empty() {
            return bad("grid is empty");
        }
        for &(p, beta) in &raw {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability {
                    value: p,
                    reason: "grid p must lie in [0, 1]",
                });
            }
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(Error::InvalidConfig(format!("grid beta {beta} must be finite and >= 0")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &(p, b) in &raw {
            if !seen.insert((p.to_bits(), b.to_bits())) {
                return Err(Error::InvalidConfig(format!("grid point (p={p}, beta={b}) repeated")));
            }
        }
        Ok(raw
            .into_iter()
            .enumerate()
            .map(|(index, (p, beta))| GridPoint { index, p, beta })
            .collect())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub p: f64,
    pub beta: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBudget {
    #[serde(default = "SweepBudget::default_thermalization")]
    pub thermalization: usize,
    #[serde(default = "SweepBudget::default_measurement")]
    pub measurement: usize,
    /// Sweeps between Wilson-loop measurements; the energy is read every sweep.
    #[serde(default = "SweepBudget::default_interval")]
    pub interval: usize,
}

impl SweepBudget {
    fn default_thermalization() -> usize {
        1000
    }
    fn default_measurement() -> usize {
        10_000
    }
    fn default_interval() -> usize {
        10
    }
}

impl Default for SweepBudget {
    fn default() -> Self {
        Self {
            thermalization: Self::default_thermalization(),
            measurement: Self::default_measurement(),
            interval: Self::default_interval(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnealMode {
    /// Anneal when `β` exceeds [`AnnealConfig::AUTO_BETA`].
    Auto,
    Always,
    Never,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealConfig {
    #[serde(default = "AnnealConfig::default_mode")]
    pub mode: AnnealMode,
    #[serde(default = "AnnealConfig::default_t_start")]
    pub t_start: f64,
    #[serde(default = "AnnealConfig::default_cooling")]
    pub cooling_factor: f64,
    #[serde(default = "AnnealConfig::default_sweeps")]
    pub sweeps_per_step: usize,
}

impl AnnealConfig {
    pub const AUTO_BETA: f64 = 1.0;

    fn default_mode() -> AnnealMode {
        AnnealMode::Auto
    }
    fn default_t_start() -> f64 {
        AnnealSchedule::DEFAULT_T_START
    }
    fn default_cooling() -> f64 {
        AnnealSchedule::DEFAULT_COOLING
    }
    fn default_sweeps() -> usize {
        AnnealSchedule::DEFAULT_SWEEPS_PER_STEP
    }

    /// Schedule for a run at `beta`, if one applies.
    pub fn schedule(&self, beta: f64) -> Option<AnnealSchedule> {
        let on = match self.mode {
            AnnealMode::Auto => beta > Self::AUTO_BETA,
            AnnealMode::Always => beta > 0.0,
            AnnealMode::Never => false,
        };
        if !on {
            return None;
        }
        let t_target = 1.0 / beta;
        Some(AnnealSchedule {
            t_start: self.t_start.max(t_target),
            t_target,
            cooling_factor: self.cooling_factor,
            sweeps_per_step: self.sweeps_per_step,
        })
    }
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            mode: Self::default_mode(),
            t_start: Self::default_t_start(),
            cooling_factor: Self::default_cooling(),
            sweeps_per_step: Self::default_sweeps(),
        }
    }
}

/// Rectangles measured per sample.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    #[serde(default = "LoopConfig::default_enabled")]
    pub enabled: bool,
    /// Largest side; defaults to `min(8, L / 2)`.
    #[serde(default)]
    pub r_max: Option<usize>,
}

impl LoopConfig {
    fn default_enabled() -> bool {
        true
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            r_max: None,
        }
    }
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            r_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub model: ScanModel,
    #[serde(rename = "L", alias = "size")]
    pub size: usize,
    pub grid: GridSpec,
    pub n_samples: usize,
    #[serde(default)]
    pub sweeps: SweepBudget,
    #[serde(default)]
    pub anneal: AnnealConfig,
    /// Defaults to loops on for the gauge model and off for Ising.
    #[serde(default)]
    pub loops: Option<LoopConfig>,
    #[serde(default)]
    pub master_seed: u64,
    /// Output directory; not part of the configuration identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScanConfig {
    pub fn new(model: ScanModel, size: usize, grid: GridSpec, n_samples: usize, master_seed: u64) -> Self {
        Self {
            model,
            size,
            grid,
            n_samples,
            sweeps: SweepBudget::default(),
            anneal: AnnealConfig::default(),
            loops: None,
            master_seed,
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        // a relative output directory is taken relative to the config file
        if let (Some(out), Some(dir)) = (&cfg.output, path.parent()) {
            if out.is_relative() {
                cfg.output = Some(dir.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn loop_config(&self) -> LoopConfig {
        self.loops.unwrap_or(match self.model {
            ScanModel::Gauge3d => LoopConfig::default(),
            ScanModel::Ising2d => LoopConfig::disabled(),
        })
    }

    /// Shapes to measure, empty when loops are off.
    pub fn shapes(&self) -> Vec<LoopShape> {
        let lc = self.loop_config();
        if !lc.enabled {
            return Vec::new();
        }
        loop_shapes(lc.r_max.unwrap_or_else(|| default_r_max(self.size)))
    }

    /// Check everything that can be checked before simulating.
    pub fn validate(&self) -> Result<Vec<GridPoint>> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.size < 2 {
            return bad(format!("L must be at least 2, got {}", self.size));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        let s = self.sweeps;
        if s.measurement < 2 || s.interval == 0 {
            return bad(format!("need at least 2 measurement sweeps and a positive interval, got {s:?}"));
        }
        let lc = self.loop_config();
        if lc.enabled {
            if self.model != ScanModel::Gauge3d {
                return bad("Wilson loops are only defined for the gauge model".into());
            }
            let r_max = lc.r_max.unwrap_or_else(|| default_r_max(self.size));
            if r_max == 0 || r_max >= self.size {
                return bad(format!("loop r_max {r_max} must lie in 1..L for L={}", self.size));
            }
            if s.measurement < s.interval {
                return bad("measurement sweeps shorter than the Wilson interval".into());
            }
        }
        let a = self.anneal;
        if a.mode != AnnealMode::Never
            && !(a.t_start.is_finite()
                && a.t_start > 0.0
                && a.cooling_factor > 0.0
                && a.cooling_factor < 1.0
                && a.sweeps_per_step > 0)
        {
            return Err(Error::InvalidSchedule(format!(
                "need T_start > 0, cooling factor in (0, 1) and sweeps per step > 0, got {a:?}"
            )));
        }
        self.grid.points()
    }

    /// Hex SHA-256 of the canonical JSON form, excluding the output path.
    pub fn config_hash(&self) -> String {
        let canonical = Self {
            output: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
