//! Experiment driver over `(p, β)` grids.
//!
//! Every `(grid point, sample)` task is a pure function of the configuration:
//! the disorder seed depends on the master seed, `p` and the sample index, so
//! all temperatures at one `p` see the same disorder samples, and the dynamics
//! seed adds `β`. Tasks run on a bounded worker pool in ordered batches and are
//! written in `(point, sample)` order, so the outputs do not depend on the
//! number of workers. A run can be interrupted and resumed.
//!
//! Output directory layout:
//!
//! - `manifest.json`: config, config hash, RNG algorithm
//! - `records.csv`: one row per task
//! - `wilson_samples.csv`: per-sample Wilson estimates
//! - `summary.json`: one entry per grid point
//! - `wilson_p{p}_b{beta}.csv`: ensemble Wilson table per grid point
//! - `timings.csv`: wall time per task, the only non-deterministic file

pub mod config;
pub mod peak;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::sample_disorder;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::observables::{
    classify_decay, ensemble_average, ensemble_wilson, specific_heat, specific_heat_error, stats, wilson_table,
    DecayClassification, EnergySeries, LoopShape, Verdict, WilsonEstimate, WilsonMeter,
};
use crate::rng::{self, mix_seed};
use crate::spins::{MetropolisChain, SpinConfig, System};

pub use config::{AnnealConfig, AnnealMode, GridPoint, GridSpec, LoopConfig, ScanConfig, ScanModel, SweepBudget};
pub use peak::{locate_peak, locate_peak_xy, PeakAxis, PeakEstimate};

pub const WORKERS_ENV: &str = "Z2LAB_WORKERS";
pub const RECORDS_FILE: &str = "records.csv";
pub const WILSON_SAMPLES_FILE: &str = "wilson_samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.csv";

/// One `(grid point, sample)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub model: ScanModel,
    #[serde(rename = "L")]
    pub size: usize,
    pub p: f64,
    pub beta: f64,
    pub sample_index: usize,
    pub sample_seed: u64,
    /// Time average of the total energy.
    pub energy_mean: f64,
    pub energy_stderr: f64,
    /// Per site.
    pub specific_heat: f64,
    pub specific_heat_err: f64,
    /// Per-point Wilson table file, empty when loops are off.
    pub wilson_table: String,
    pub annealed: bool,
    pub thermalization_sweeps: usize,
    pub measurement_sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct WilsonSampleRow {
    p: f64,
    beta: f64,
    sample_index: usize,
    #[serde(rename = "R")]
    r: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "W")]
    w: f64,
    err: f64,
    n_measurements: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub record: ScanRecord,
    /// Per-sample estimates in the order of [`ScanConfig::shapes`].
    pub wilson: Vec<WilsonEstimate>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub area: usize,
    pub perimeter: usize,
    pub ambiguous: usize,
}

impl VerdictCounts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::AreaLaw => self.area += 1,
            Verdict::PerimeterLaw => self.perimeter += 1,
            Verdict::Ambiguous => self.ambiguous += 1,
        }
    }
}

/// Disorder-averaged results at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub p: f64,
    pub beta: f64,
    pub n_samples: usize,
    pub energy_mean: f64,
    pub c_ensemble: f64,
    /// Population standard deviation of the per-sample specific heats.
    pub c_fluctuation: f64,
    /// Standard error of `c_ensemble`.
    pub c_err: f64,
    /// Classification of the ensemble-averaged Wilson loops.
    pub decay: Option<DecayClassification>,
    /// Classification of each sample's own Wilson loops.
    pub sample_verdicts: Option<VerdictCounts>,
    pub wilson_table: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub workers: usize,
    /// Overrides `ScanConfig::output`.
    pub output: Option<PathBuf>,
    /// Stop after computing this many new tasks, leaving a resumable partial output.
    pub max_new_tasks: Option<usize>,
    /// Print one line per finished batch to stderr.
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: workers_from_env(),
            output: None,
            max_new_tasks: None,
            progress: false,
        }
    }
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

/// Worker count from `Z2LAB_WORKERS`, falling back to the available cores.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub dir: Option<PathBuf>,
    pub points: Vec<GridPoint>,
    /// In `(point, sample)` order; complete unless the run was cut short.
    pub outcomes: Vec<SampleOutcome>,
    pub summaries: Vec<PointSummary>,
    pub complete: bool,
    pub new_tasks: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    rng: String,
    version: String,
    config: ScanConfig,
}

/// Shared, immutable state of a scan.
struct ScanContext<'c> {
    cfg: &'c ScanConfig,
    points: Vec<GridPoint>,
    lattice: Lattice,
    sys: System,
    shapes: Vec<LoopShape>,
}

impl<'c> ScanContext<'c> {
    fn new(cfg: &'c ScanConfig) -> Result<Self> {
        let points = cfg.validate()?;
        let lattice = Lattice::new(cfg.model.dim(), cfg.size)?;
        let sys = System::new(lattice.clone(), cfg.model.model());
        Ok(Self {
            cfg,
            points,
            lattice,
            sys,
            shapes: cfg.shapes(),
        })
    }

    fn n_tasks(&self) -> usize {
        self.points.len() * self.cfg.n_samples
    }

    fn point_of(&self, p: f64, beta: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|g| g.p.to_bits() == p.to_bits() && g.beta.to_bits() == beta.to_bits())
    }

    fn table_name(&self, pt: &GridPoint) -> String {
        if self.shapes.is_empty() {
            String::new()
        } else {
            wilson_table_name(pt.p, pt.beta)
        }
    }
}

/// File name of the per-point Wilson table.
pub fn wilson_table_name(p: f64, beta: f64) -> String {
    format!("wilson_p{p:.6}_b{beta:.6}.csv")
}

/// Disorder seed of one sample, shared by every `β` at the same `p`.
pub fn sample_seed(master_seed: u64, p: f64, sample_index: usize) -> u64 {
    mix_seed(master_seed, p.to_bits(), sample_index as u64)
}

fn dynamics_seed(sample_seed: u64, beta: f64) -> u64 {
    mix_seed(sample_seed, beta.to_bits(), 1)
}

/// Simulate one disorder sample at one grid point.
fn run_sample(ctx: &ScanContext, pt: &GridPoint, sample_index: usize) -> Result<SampleOutcome> {
    let cfg = ctx.cfg;
    let seed = sample_seed(cfg.master_seed, pt.p, sample_index);
    let dis = sample_disorder(&ctx.lattice, cfg.model.model(), pt.p, seed)?;
    let mut r = rng::stream(dynamics_seed(seed, pt.beta), rng::DYNAMICS_STREAM);
    let start = SpinConfig::random(&ctx.sys, &mut r);
    let mut chain = MetropolisChain::new(&ctx.sys, &dis, start)?;

    let schedule = cfg.anneal.schedule(pt.beta);
    if let Some(s) = &schedule {
        chain.anneal(s, &mut r)?;
    }
    let budget = cfg.sweeps;
    for _ in 0..budget.thermalization {
        chain.sweep(pt.beta, &mut r);
    }
    let mut meter = if ctx.shapes.is_empty() {
        None
    } else {
        Some(WilsonMeter::new(&ctx.lattice, ctx.shapes.clone())?)
    };
    let mut energies = Vec::with_capacity(budget.measurement);
    for i in 1..=budget.measurement {
        chain.sweep(pt.beta, &mut r);
        energies.push(chain.energy() as f64);
        if let Some(m) = meter.as_mut() {
            if i % budget.interval == 0 {
                m.measure(chain.config())?;
            }
        }
    }
    let series = EnergySeries::new(energies, pt.beta, ctx.lattice.n_sites())?;
    let record = ScanRecord {
        model: cfg.model,
        size: cfg.size,
        p: pt.p,
        beta: pt.beta,
        sample_index,
        sample_seed: seed,
        energy_mean: series.mean(),
        energy_stderr: series.mean_error(),
        specific_heat: specific_heat(&series)?,
        specific_heat_err: specific_heat_error(&series)?,
        wilson_table: ctx.table_name(pt),
        annealed: schedule.is_some(),
        thermalization_sweeps: budget.thermalization,
        measurement_sweeps: budget.measurement,
    };
    Ok(SampleOutcome {
        record,
        wilson: meter.map(|m| m.estimates()).unwrap_or_default(),
    })
}

/// Disorder average of the outcomes of one grid point.
pub fn summarize_point(pt: &GridPoint, outcomes: &[SampleOutcome]) -> Result<PointSummary> {
    let c: Vec<f64> = outcomes.iter().map(|o| o.record.specific_heat).collect();
    let e: Vec<f64> = outcomes.iter().map(|o| o.record.energy_mean).collect();
    let cs = ensemble_average(&c)?;
    let thermal = outcomes.iter().map(|o| o.record.specific_heat_err.powi(2)).sum::<f64>().sqrt() / c.len() as f64;
    let has_loops = outcomes.first().is_some_and(|o| !o.wilson.is_empty());
    let (decay, sample_verdicts, table) = if has_loops {
        let per_sample: Vec<Vec<WilsonEstimate>> = outcomes.iter().map(|o| o.wilson.clone()).collect();
        let ens = ensemble_wilson(&per_sample)?;
        let mut counts = VerdictCounts::default();
        for w in &per_sample {
            counts.add(classify_decay(w).verdict);
        }
        (
            Some(classify_decay(&ens)),
            Some(counts),
            Some(wilson_table_name(pt.p, pt.beta)),
        )
    } else {
        (None, None, None)
    };
    Ok(PointSummary {
        p: pt.p,
        beta: pt.beta,
        n_samples: outcomes.len(),
        energy_mean: stats::mean(&e),
        c_ensemble: cs.ensemble_mean,
        c_fluctuation: cs.sample_fluctuation,
        c_err: cs.standard_error().max(thermal),
        decay,
        sample_verdicts,
        wilson_table: table,
    })
}

/// Run a scan from scratch, replacing any previous output in the directory.
pub fn run_scan(cfg: &ScanConfig, opts: &RunOptions) -> Result<ScanOutput> {
    let ctx = ScanContext::new(cfg)?;
    let dir = output_dir(cfg, opts);
    if let Some(d) = &dir {
        prepare_dir(d)?;
        let _ = fs::remove_file(d.join(TIMINGS_FILE));
    }
    execute(&ctx, dir, BTreeMap::new(), opts)
}

/// Continue a partial scan, computing only the missing tasks.
///
/// The directory must hold output of a configuration with the same hash.
/// The final files equal those of an uninterrupted run.
pub fn resume_scan(cfg: &ScanConfig, opts: &RunOptions) -> Result<ScanOutput> {
    let ctx = ScanContext::new(cfg)?;
    let dir = output_dir(cfg, opts).ok_or_else(|| Error::InvalidConfig("resume needs an output directory".into()))?;
    let manifest = read_manifest(&dir)?;
    let hash = cfg.config_hash();
    if manifest.config_hash != hash {
        return Err(Error::ConfigHashMismatch {
            expected: manifest.config_hash,
            found: hash,
        });
    }
    let existing = read_outcomes(&ctx, &dir)?;
    execute(&ctx, Some(dir), existing, opts)
}

/// Configuration stored with a scan's output.
pub fn stored_config(dir: &Path) -> Result<ScanConfig> {
    let mut cfg = read_manifest(dir)?.config;
    cfg.output = Some(dir.to_path_buf());
    Ok(cfg)
}

fn output_dir(cfg: &ScanConfig, opts: &RunOptions) -> Option<PathBuf> {
    opts.output.clone().or_else(|| cfg.output.clone())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    // fail early, before any simulation, if the directory is not writable
    let probe = dir.join(".write_probe");
    File::create(&probe)?;
    fs::remove_file(&probe)?;
    Ok(())
}

type Key = (usize, usize);

fn execute(
    ctx: &ScanContext,
    dir: Option<PathBuf>,
    mut done: BTreeMap<Key, SampleOutcome>,
    opts: &RunOptions,
) -> Result<ScanOutput> {
    let workers = opts.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    if let Some(d) = &dir {
        write_manifest(ctx.cfg, d)?;
        write_outcome_files(d, &done)?;
    }
    let mut todo: Vec<Key> = (0..ctx.points.len())
        .flat_map(|pi| (0..ctx.cfg.n_samples).map(move |s| (pi, s)))
        .filter(|k| !done.contains_key(k))
        .collect();
    if let Some(cap) = opts.max_new_tasks {
        todo.truncate(cap);
    }

    let mut new_tasks = 0;
    for batch in todo.chunks(workers * 2) {
        let results: Vec<Result<(SampleOutcome, f64)>> = pool.install(|| {
            batch
                .par_iter()
                .map(|&(pi, s)| {
                    let t0 = Instant::now();
                    let out = run_sample(ctx, &ctx.points[pi], s)?;
                    Ok((out, t0.elapsed().as_secs_f64()))
                })
                .collect()
        });
        let mut finished = Vec::with_capacity(batch.len());
        for (&key, res) in batch.iter().zip(results) {
            let (out, secs) = res?;
            finished.push((key, out, secs));
        }
        if let Some(d) = &dir {
            append_outcomes(d, &finished)?;
        }
        for (key, out, _) in finished {
            done.insert(key, out);
        }
        new_tasks += batch.len();
        if opts.progress {
            eprintln!("[scan] {}/{} tasks", done.len(), ctx.n_tasks());
        }
    }

    let complete = done.len() == ctx.n_tasks();
    let mut summaries = Vec::new();
    if complete {
        for (pi, pt) in ctx.points.iter().enumerate() {
            let outs: Vec<SampleOutcome> = (0..ctx.cfg.n_samples).map(|s| done[&(pi, s)].clone()).collect();
            summaries.push(summarize_point(pt, &outs)?);
        }
    }
    if let Some(d) = &dir {
        // the canonical rewrite also drops anything a resumed run appended out of order
        write_outcome_files(d, &done)?;
        if complete {
            write_summaries(ctx, d, &summaries, &done)?;
        }
    }
    Ok(ScanOutput {
        dir,
        points: ctx.points.clone(),
        outcomes: done.into_values().collect(),
        summaries,
        complete,
        new_tasks,
    })
}

fn write_manifest(cfg: &ScanConfig, dir: &Path) -> Result<()> {
    let m = Manifest {
        config_hash: cfg.config_hash(),
        rng: rng::RNG_ALGORITHM.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ScanConfig {
            output: None,
            ..cfg.clone()
        },
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Format {
        path: path.clone(),
        reason: format!("cannot read scan manifest: {e}"),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        reason: e.to_string(),
    })
}

fn wilson_rows(out: &SampleOutcome) -> impl Iterator<Item = WilsonSampleRow> + '_ {
    out.wilson.iter().map(|w| WilsonSampleRow {
        p: out.record.p,
        beta: out.record.beta,
        sample_index: out.record.sample_index,
        r: w.shape.r,
        s: w.shape.s,
        w: w.mean,
        err: w.std_error,
        n_measurements: w.n_measurements,
    })
}

fn create_csv(path: &Path, columns: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = BufWriter::new(File::create(path)?);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(columns)?;
    Ok(w)
}

const RECORD_COLUMNS: &[&str] = &[
    "model",
    "L",
    "p",
    "beta",
    "sample_index",
    "sample_seed",
    "energy_mean",
    "energy_stderr",
    "specific_heat",
    "specific_heat_err",
    "wilson_table",
    "annealed",
    "thermalization_sweeps",
    "measurement_sweeps",
];

const WILSON_SAMPLE_COLUMNS: &[&str] = &["p", "beta", "sample_index", "R", "S", "W", "err", "n_measurements"];

/// Rewrite `records.csv` and `wilson_samples.csv` in canonical order.
fn write_outcome_files(dir: &Path, done: &BTreeMap<Key, SampleOutcome>) -> Result<()> {
    let mut rec = create_csv(&dir.join(RECORDS_FILE), RECORD_COLUMNS)?;
    let mut wil = create_csv(&dir.join(WILSON_SAMPLES_FILE), WILSON_SAMPLE_COLUMNS)?;
    for out in done.values() {
        for row in wilson_rows(out) {
            wil.serialize(row)?;
        }
        rec.serialize(&out.record)?;
    }
    rec.flush()?;
    wil.flush()?;
    Ok(())
}

fn append_outcomes(dir: &Path, finished: &[(Key, SampleOutcome, f64)]) -> Result<()> {
    let open = |name: &str| -> Result<csv::Writer<File>> {
        let f = OpenOptions::new().append(true).create(true).open(dir.join(name))?;
        Ok(csv::WriterBuilder::new().has_headers(false).from_writer(f))
    };
    let timings_path = dir.join(TIMINGS_FILE);
    let new_timings = !timings_path.exists();
    let mut wil = open(WILSON_SAMPLES_FILE)?;
    let mut rec = open(RECORDS_FILE)?;
    let mut tim = open(TIMINGS_FILE)?;
    if new_timings {
        tim.write_record(["p", "beta", "sample_index", "wall_time"])?;
    }
    for (_, out, secs) in finished {
        // Wilson rows first: a record line marks its task as complete
        for row in wilson_rows(out) {
            wil.serialize(row)?;
        }
        wil.flush()?;
        rec.serialize(&out.record)?;
        rec.flush()?;
        tim.serialize((out.record.p, out.record.beta, out.record.sample_index, secs))?;
    }
    tim.flush()?;
    Ok(())
}

/// Contents of a CSV file up to its last complete line.
fn read_complete_lines(path: &Path) -> Result<String> {
    let mut text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(String::new()),
        Err(e) => return Err(e.into()),
    };
    let keep = text.rfind('\n').map_or(0, |i| i + 1);
    text.truncate(keep);
    Ok(text)
}

fn read_outcomes(ctx: &ScanContext, dir: &Path) -> Result<BTreeMap<Key, SampleOutcome>> {
    let bad = |path: &Path, reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let rec_path = dir.join(RECORDS_FILE);
    let text = read_complete_lines(&rec_path)?;
    let mut records: BTreeMap<Key, ScanRecord> = BTreeMap::new();
    for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<ScanRecord>() {
        let r = row?;
        let pi = ctx
            .point_of(r.p, r.beta)
            .ok_or_else(|| bad(&rec_path, format!("record at p={} beta={} is not on the grid", r.p, r.beta)))?;
        if r.sample_index >= ctx.cfg.n_samples || r.size != ctx.cfg.size || r.model != ctx.cfg.model {
            return Err(bad(&rec_path, format!("record {r:?} does not belong to this scan")));
        }
        records.insert((pi, r.sample_index), r);
    }

    let wil_path = dir.join(WILSON_SAMPLES_FILE);
    let text = read_complete_lines(&wil_path)?;
    let mut wilson: BTreeMap<Key, Vec<WilsonEstimate>> = BTreeMap::new();
    for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<WilsonSampleRow>() {
        let w = row?;
        let Some(pi) = ctx.point_of(w.p, w.beta) else {
            return Err(bad(&wil_path, format!("row at p={} beta={} is not on the grid", w.p, w.beta)));
        };
        wilson.entry((pi, w.sample_index)).or_default().push(WilsonEstimate {
            shape: LoopShape::new(w.r, w.s),
            mean: w.w,
            std_error: w.err,
            n_measurements: w.n_measurements,
        });
    }

    let mut out = BTreeMap::new();
    for (key, record) in records {
        let est = wilson.remove(&key).unwrap_or_default();
        let shapes_match = est.len() == ctx.shapes.len() && est.iter().zip(&ctx.shapes).all(|(e, s)| e.shape == *s);
        // a task whose Wilson rows are incomplete is recomputed
        if shapes_match {
            out.insert(key, SampleOutcome { record, wilson: est });
        }
    }
    Ok(out)
}

fn write_summaries(
    ctx: &ScanContext,
    dir: &Path,
    summaries: &[PointSummary],
    done: &BTreeMap<Key, SampleOutcome>,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summaries)?;
    text.push('\n');
    fs::write(dir.join(SUMMARY_FILE), text)?;
    if ctx.shapes.is_empty() {
        return Ok(());
    }
    for (pi, pt) in ctx.points.iter().enumerate() {
        let per_sample: Vec<Vec<WilsonEstimate>> =
            (0..ctx.cfg.n_samples).map(|s| done[&(pi, s)].wilson.clone()).collect();
        let ens = ensemble_wilson(&per_sample)?;
        let mut w = BufWriter::new(File::create(dir.join(wilson_table_name(pt.p, pt.beta)))?);
        writeln!(w, "R,S,A,P,W,err,neg_ln_W_over_A,neg_ln_W_over_P")?;
        for row in wilson_table(&ens) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                row.r,
                row.s,
                row.area,
                row.perimeter,
                row.w,
                row.err,
                row.neg_ln_w_over_area,
                row.neg_ln_w_over_perimeter
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Read `summary.json` from a finished scan.
pub fn read_summaries(path: &Path) -> Result<Vec<PointSummary>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Read `records.csv`.
pub fn read_records(path: &Path) -> Result<Vec<ScanRecord>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_path(path)?.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
