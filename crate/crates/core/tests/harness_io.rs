//! End-to-end checks of the experiment harness: artifact determinism,
//! CSV schema, record bookkeeping, and sweep behavior.

use dampwave::config::{parse_config, ExperimentConfig};
use dampwave::harness::{run_experiment, sweep};
use dampwave::model::Profile;
use dampwave::solver::{run, RunConfig};
use dampwave::{model::InitialData, model::RadialGrid};
use std::fs;
use std::process::Command;

fn short_config() -> ExperimentConfig {
    parse_config(
        "[model]\nn = 1\nalpha = 0.5\np = 2\n\
         [grid]\nr_max = 20\npoints = 256\n\
         [run]\nt_final = 4\nrecord_every = 5\n",
    )
    .unwrap()
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let cfg = short_config();
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    run_experiment(&cfg, &out1).unwrap();
    run_experiment(&cfg, &out2).unwrap();
    for name in ["energies.csv", "prediction.txt", "fit_report.txt"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn csv_schema_and_line_endings() {
    let cfg = short_config();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("energies.csv")).unwrap();
    assert!(!text.contains('\r'), "CRLF leaked into the CSV");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,E,aL2,L2,E1,E0,Estar,Etilde,scaled_E,scaled_aL2"
    );
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 10, "bad row {line}");
        for f in fields {
            f.parse::<f64>().unwrap_or_else(|_| panic!("unparseable field {f}"));
        }
        rows += 1;
    }
    assert!(rows >= 2);
}

#[test]
fn zero_data_gives_zero_columns() {
    let mut cfg = short_config();
    cfg.run.u0 = Profile::Zero;
    cfg.run.u1 = Profile::Zero;
    let dir = tempfile::tempdir().unwrap();
    let artifacts = run_experiment(&cfg, dir.path()).unwrap();
    for rec in &artifacts.records {
        assert_eq!(rec.e, 0.0);
        assert_eq!(rec.a_l2, 0.0);
        assert_eq!(rec.estar, 0.0);
        assert_eq!(rec.etilde, 0.0);
    }
}

#[test]
fn record_count_matches_bookkeeping() {
    // With record_every dividing the step count the record total is
    // steps/record_every + 1 (the initial state plus every recorded level).
    let cfg = short_config();
    let grid = RadialGrid::new(cfg.model.domain, cfg.grid.r_max, cfg.grid.points).unwrap();
    let data = InitialData {
        u0: cfg.run.u0,
        u1: cfg.run.u1,
    };
    let mut run_cfg = RunConfig {
        t_final: 4.0,
        record_every: 5,
        ..RunConfig::default()
    };
    let output = run(&cfg.model, &grid, &data, &run_cfg).unwrap();
    let expected = output.steps / 5 + 1 + usize::from(output.steps % 5 != 0);
    assert_eq!(output.snapshots.len(), expected);
    assert_eq!(output.snapshots.last().unwrap().t, output.dt * output.steps as f64);

    // A divisor-friendly horizon: force steps % record_every == 0 by using
    // record_every = 1, where the formula is exact.
    run_cfg.record_every = 1;
    let output = run(&cfg.model, &grid, &data, &run_cfg).unwrap();
    assert_eq!(output.snapshots.len(), output.steps + 1);
}

#[test]
fn singleton_sweep_matches_run_experiment() {
    let cfg = short_config();
    let dir = tempfile::tempdir().unwrap();
    let summary = sweep(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(summary).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,lambda,region,mu_pred,log_pred,slope_fit,verdict,error"
    );
    let row = lines.next().unwrap();
    assert!(lines.next().is_none(), "1x1 sweep must give one row");

    let single_dir = dir.path().join("single");
    let artifacts = run_experiment(&cfg, &single_dir).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "2");
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], artifacts.prediction.region.to_string());
    assert_eq!(fields[7], "", "unexpected cell error: {}", fields[7]);

    // The sweep cell wrote its own artifact set, byte-identical to the
    // direct run.
    let cell = dir.path().join("cell_p2_lambda0");
    assert_eq!(
        fs::read(cell.join("energies.csv")).unwrap(),
        fs::read(single_dir.join("energies.csv")).unwrap()
    );
}

#[test]
fn sweep_rows_are_sorted_and_failures_are_contained() {
    let mut cfg = short_config();
    // Axes given out of order; the summary must come back sorted.
    cfg.sweep = Some(dampwave::config::SweepSpec {
        p: vec![3.0, 2.0],
        lambda: vec![0.5, 0.0],
    });
    let dir = tempfile::tempdir().unwrap();
    let summary = sweep(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(summary).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted, "rows not sorted by (p, lambda)");
}

#[test]
fn failing_cells_report_errors_without_aborting_the_sweep() {
    let mut cfg = short_config();
    // One admissible cell and one with p < 1; the bad cell must fill the
    // error column while the good cell completes.
    cfg.model.n = 1;
    cfg.sweep = Some(dampwave::config::SweepSpec {
        p: vec![2.0, -1.0],
        lambda: vec![0.0],
    });
    let dir = tempfile::tempdir().unwrap();
    let summary = sweep(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(summary).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let bad = rows.iter().find(|r| r.starts_with("-1")).unwrap();
    let good = rows.iter().find(|r| r.starts_with("2,")).unwrap();
    assert!(bad.split(',').last().unwrap().contains("inadmissible"), "{bad}");
    assert_eq!(good.split(',').last().unwrap(), "");
}

#[test]
fn cli_exit_codes_follow_the_contract() {
    let exe = env!("CARGO_BIN_EXE_dampwave");
    let dir = tempfile::tempdir().unwrap();

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "[model]\nn = 7\n").unwrap();
    let status = Command::new(exe)
        .args(["--config", bad.to_str().unwrap(), "classify"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    let ok = Command::new(exe).arg("classify").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let stdout = String::from_utf8(ok.stdout).unwrap();
    assert!(stdout.contains("region = branch-1"), "{stdout}");

    let missing = Command::new(exe)
        .args(["--config", "/nonexistent/path.conf", "classify"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
