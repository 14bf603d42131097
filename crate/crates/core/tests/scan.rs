use std::fs;
use std::path::Path;

use z2lab::disorder::nishimori_beta;
use z2lab::error::Error;
use z2lab::observables::ensemble_average;
use z2lab::scan::{
    read_records, read_summaries, resume_scan, run_scan, GridSpec, LoopConfig, RunOptions, ScanConfig, ScanModel,
    SweepBudget, RECORDS_FILE, SUMMARY_FILE, WILSON_SAMPLES_FILE,
};

fn small_config(dir: &Path) -> ScanConfig {
    let mut cfg = ScanConfig::new(
        ScanModel::Gauge3d,
        2,
        GridSpec::product(vec![0.0, 0.1], vec![0.5, 1.2]),
        3,
        7,
    );
    cfg.sweeps = SweepBudget {
        thermalization: 50,
        measurement: 100,
        interval: 5,
    };
    cfg.loops = Some(LoopConfig {
        enabled: true,
        r_max: Some(1),
    });
    cfg.output = Some(dir.to_path_buf());
    cfg
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn outputs(dir: &Path) -> Vec<(String, String)> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "timings.csv")
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let body = read(dir, &n);
            (n, body)
        })
        .collect()
}

fn quiet(workers: usize) -> RunOptions {
    RunOptions::with_workers(workers)
}

#[test]
fn single_point_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScanConfig::new(ScanModel::Gauge3d, 2, GridSpec::product(vec![0.0], vec![0.5]), 1, 0);
    cfg.sweeps = SweepBudget {
        thermalization: 100,
        measurement: 100,
        interval: 10,
    };
    cfg.output = Some(dir.path().to_path_buf());
    let out = run_scan(&cfg, &quiet(1)).unwrap();
    assert!(out.complete);
    assert_eq!(read_records(&dir.path().join(RECORDS_FILE)).unwrap().len(), 1);
    assert_eq!(read_summaries(&dir.path().join(SUMMARY_FILE)).unwrap().len(), 1);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scan(&small_config(a.path()), &quiet(2)).unwrap();
    run_scan(&small_config(b.path()), &quiet(2)).unwrap();
    assert_eq!(outputs(a.path()), outputs(b.path()));
    // running again into a used directory replaces its contents
    run_scan(&small_config(a.path()), &quiet(1)).unwrap();
    assert_eq!(outputs(a.path()), outputs(b.path()));
}

#[test]
fn worker_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scan(&small_config(a.path()), &quiet(1)).unwrap();
    run_scan(&small_config(b.path()), &quiet(8)).unwrap();
    assert_eq!(outputs(a.path()), outputs(b.path()));
}

#[test]
fn nishimori_grid_beta_column() {
    let dir = tempfile::tempdir().unwrap();
    let ps = [0.02, 0.03, 0.04];
    let mut cfg = ScanConfig::new(ScanModel::Gauge3d, 2, GridSpec::nishimori(ps.to_vec()), 1, 3);
    cfg.sweeps = SweepBudget {
        thermalization: 10,
        measurement: 20,
        interval: 10,
    };
    cfg.anneal.sweeps_per_step = 2;
    cfg.loops = Some(LoopConfig::disabled());
    cfg.output = Some(dir.path().to_path_buf());
    run_scan(&cfg, &quiet(1)).unwrap();
    let recs = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(recs.len(), 3);
    for (rec, p) in recs.iter().zip(ps) {
        assert_eq!(rec.p, p);
        assert_eq!(rec.beta, nishimori_beta(p).unwrap());
        // e^{-2β} = p/(1-p), checked independently of the library
        assert!(((-2.0 * rec.beta).exp() - p / (1.0 - p)).abs() < 1e-15);
        assert!(rec.annealed);
    }
}

#[test]
fn resume_after_interruption_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    run_scan(&small_config(full.path()), &quiet(2)).unwrap();

    let cfg = small_config(part.path());
    let opts = RunOptions {
        max_new_tasks: Some(6),
        ..quiet(2)
    };
    let cut = run_scan(&cfg, &opts).unwrap();
    assert!(!cut.complete);
    assert_eq!(read_records(&part.path().join(RECORDS_FILE)).unwrap().len(), 6);
    assert!(!part.path().join(SUMMARY_FILE).exists());

    let done = resume_scan(&cfg, &quiet(3)).unwrap();
    assert!(done.complete);
    assert_eq!(done.new_tasks, 6);
    assert_eq!(outputs(full.path()), outputs(part.path()));
}

#[test]
fn resume_tolerates_a_torn_last_line() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    run_scan(&small_config(full.path()), &quiet(1)).unwrap();
    let cfg = small_config(part.path());
    run_scan(
        &cfg,
        &RunOptions {
            max_new_tasks: Some(4),
            ..quiet(1)
        },
    )
    .unwrap();
    for name in [RECORDS_FILE, WILSON_SAMPLES_FILE] {
        let text = read(part.path(), name);
        let torn = &text[..text.len() - 7];
        fs::write(part.path().join(name), torn).unwrap();
    }
    resume_scan(&cfg, &quiet(1)).unwrap();
    assert_eq!(outputs(full.path()), outputs(part.path()));
}

#[test]
fn resume_of_complete_run_is_noop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    run_scan(&cfg, &quiet(1)).unwrap();
    let before = outputs(dir.path());
    let again = resume_scan(&cfg, &quiet(1)).unwrap();
    assert!(again.complete);
    assert_eq!(again.new_tasks, 0);
    assert_eq!(before, outputs(dir.path()));
}

#[test]
fn resume_with_altered_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    run_scan(
        &cfg,
        &RunOptions {
            max_new_tasks: Some(2),
            ..quiet(1)
        },
    )
    .unwrap();
    let mut other = cfg.clone();
    other.n_samples = 4;
    assert!(matches!(
        resume_scan(&other, &quiet(1)),
        Err(Error::ConfigHashMismatch { .. })
    ));
    // the output directory is not part of the identity of a scan
    let mut moved = cfg.clone();
    moved.output = Some(dir.path().join("."));
    assert!(resume_scan(&moved, &quiet(1)).is_ok());
}

#[test]
fn summaries_aggregate_their_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    run_scan(&cfg, &quiet(2)).unwrap();
    let recs = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
    let sums = read_summaries(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(recs.len(), 4 * cfg.n_samples);
    assert_eq!(sums.len(), 4);
    for s in &sums {
        let c: Vec<f64> = recs
            .iter()
            .filter(|r| r.p == s.p && r.beta == s.beta)
            .map(|r| r.specific_heat)
            .collect();
        assert_eq!(c.len(), s.n_samples);
        let ens = ensemble_average(&c).unwrap();
        assert_eq!(s.c_ensemble, ens.ensemble_mean);
        assert_eq!(s.c_fluctuation, ens.sample_fluctuation);
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        assert!((s.c_ensemble - mean).abs() < 1e-12);
        assert!(s.decay.is_some());
        assert!(dir.path().join(s.wilson_table.as_ref().unwrap()).exists());
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&dir.path().join("never"));
    cfg.n_samples = 0;
    assert!(run_scan(&cfg, &quiet(1)).is_err());
    assert!(!dir.path().join("never").exists());

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = small_config(&blocker.join("sub"));
    assert!(run_scan(&cfg, &quiet(1)).is_err());
}
