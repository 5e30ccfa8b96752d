use std::fs;
use std::path::{Path, PathBuf};

use anc_sss::harness::{run_experiment, run_trial, trial_file_name, ExperimentOptions};
use anc_sss::{Error, Scenario};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn white_sss(trials: usize, iterations: usize) -> Scenario {
    let mut s = Scenario::from_file(&scenarios_dir().join("white_sss.scn")).unwrap();
    s.trials = trials;
    s.iterations = iterations;
    s
}

fn write_run(s: &Scenario, dir: &Path) {
    let opts = ExperimentOptions {
        out_dir: Some(dir.to_path_buf()),
        ..Default::default()
    };
    run_experiment(s, &opts).unwrap();
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn shipped_scenarios_parse() {
    let mut count = 0;
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scn") {
            Scenario::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 10);
}

#[test]
fn trials_do_not_depend_on_trial_count() {
    let small = tempfile::tempdir().unwrap();
    let large = tempfile::tempdir().unwrap();
    write_run(&white_sss(3, 1500), small.path());
    write_run(&white_sss(6, 1500), large.path());
    for t in 0..3 {
        let a = fs::read(small.path().join(trial_file_name(t))).unwrap();
        let b = fs::read(large.path().join(trial_file_name(t))).unwrap();
        assert_eq!(a, b, "trial {t}");
    }
}

#[test]
fn aggregate_is_mean_of_trial_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = white_sss(5, 800);
    write_run(&s, dir.path());
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    for col in ["e", "selected_mu", "J_1", "J_4"] {
        let mut sum = vec![0.0; s.iterations];
        for t in 0..s.trials {
            let csv = fs::read_to_string(dir.path().join(trial_file_name(t))).unwrap();
            for (acc, v) in sum.iter_mut().zip(column(&csv, col)) {
                *acc += v;
            }
        }
        for (a, m) in column(&agg, col).iter().zip(&sum) {
            let m = m / s.trials as f64;
            assert!((a - m).abs() <= 1e-12 * m.abs().max(1.0), "{col}: {a} vs {m}");
        }
    }
}

#[test]
fn metadata_records_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = white_sss(2, 300);
    s.seed = 9;
    write_run(&s, dir.path());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["excluded_trials"], 0);
    assert_eq!(meta["included_trials"], 2);
    let text = meta["scenario"].as_str().unwrap();
    let back = Scenario::parse(text).unwrap();
    assert_eq!(back.seed, 9);
    assert_eq!(back.algorithm, s.algorithm);
}

#[test]
fn aggregate_only_skips_trial_files() {
    let dir = tempfile::tempdir().unwrap();
    let opts = ExperimentOptions {
        out_dir: Some(dir.path().to_path_buf()),
        aggregate_only: true,
        ..Default::default()
    };
    run_experiment(&white_sss(2, 200), &opts).unwrap();
    assert!(dir.path().join("aggregate.csv").exists());
    assert!(!dir.path().join(trial_file_name(0)).exists());
}

#[test]
fn seed_changes_output() {
    let a = white_sss(1, 200);
    let mut b = a.clone();
    b.seed += 1;
    assert_ne!(run_trial(&a, 0).unwrap().to_csv(), run_trial(&b, 0).unwrap().to_csv());
}

#[test]
fn identification_mode_reports_true_msd() {
    let mut s = Scenario::from_file(&scenarios_dir().join("identification_fixed.scn")).unwrap();
    s.iterations = 3000;
    let r = run_trial(&s, 0).unwrap();
    let first = r.rows.first().unwrap().true_msd.unwrap();
    let last = r.rows.last().unwrap().true_msd.unwrap();
    assert!(last < 1e-2 * first, "{first} -> {last}");
}

#[test]
fn missing_noise_file_is_an_ingest_error() {
    let s = Scenario::from_file(&scenarios_dir().join("factory_mcc.scn")).unwrap();
    assert!(matches!(
        run_experiment(&s, &ExperimentOptions::default()),
        Err(Error::Ingest { .. } | Error::Io(_))
    ));
}
