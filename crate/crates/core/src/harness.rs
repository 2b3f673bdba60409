//! Experiment orchestration: runs, artifact files, sweeps, and the
//! self-check batteries behind the CLI.
//!
//! Output contract: `energies.csv` holds the energy table with 17
//! significant digits, comma separators, LF endings; `prediction.txt` the
//! classifier verdict; `fit_report.txt` one block per fitted quantity.
//! Identical configs produce identical bytes regardless of thread count;
//! sweep rows are gathered and sorted by (p, lambda) before writing.

use crate::analysis::{fit_decay, FitResult, QuantitySelector};
use crate::config::ExperimentConfig;
use crate::decay::{predict_decay, DecayPrediction, TheoremCase};
use crate::energetics::{energy_table, EnergyContext, EnergyRecord, FamilyKind};
use crate::error::{Error, Result};
use crate::kummer::{gamma_pair, kummer_m, PhiParams};
use crate::model::{InitialData, Profile, RadialGrid};
use crate::solver::run;
use crate::weights::{build_table, WeightSettings, WeightTable};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// In-memory results of one experiment, mirroring the files on disk.
#[derive(Debug)]
pub struct ExperimentArtifacts {
    pub records: Vec<EnergyRecord>,
    pub prediction: DecayPrediction,
    pub fits: Vec<(String, FitResult)>,
}

/// Process exit code for an error: 1 for configuration and validation
/// problems, 2 for runtime failures.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::Validation(_)
        | Error::Config(_)
        | Error::Domain(_)
        | Error::CaseIRange { .. } => 1,
        _ => 2,
    }
}

pub fn render_energies_csv(records: &[EnergyRecord]) -> String {
    let mut s = String::from("t,E,aL2,L2,E1,E0,Estar,Etilde,scaled_E,scaled_aL2\n");
    for r in records {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.e, r.a_l2, r.l2, r.e1, r.e0, r.estar, r.etilde, r.scaled_e, r.scaled_a_l2
        );
    }
    s
}

pub fn render_prediction(pred: &DecayPrediction, case: TheoremCase) -> String {
    let case_name = match case {
        TheoremCase::I => "i",
        TheoremCase::II => "ii",
    };
    let alt = pred
        .alt_mu
        .map_or_else(|| "none".to_string(), |v| v.to_string());
    format!(
        "case = {case_name}\nregion = {}\nmu = {}\nlog_power = {}\nl2_mu = {}\nsaturated = {}\nalt_mu = {alt}\n",
        pred.region, pred.mu, pred.log_power, pred.l2_mu, pred.saturated
    )
}

pub fn render_fit_report(fits: &[(String, FitResult)]) -> String {
    let mut s = String::new();
    for (name, fit) in fits {
        let _ = writeln!(s, "quantity = {name}");
        let _ = writeln!(s, "slope = {:.6e}", fit.slope);
        let _ = writeln!(s, "window = [{:.6e}, {:.6e}]", fit.window.0, fit.window.1);
        let _ = writeln!(s, "sup_scaled = {:.6e}", fit.sup_scaled);
        let _ = writeln!(s, "verdict = {}", fit.verdict);
        let _ = writeln!(s);
    }
    s
}

fn energy_context<'a>(cfg: &ExperimentConfig, table: &'a WeightTable) -> Result<EnergyContext<'a>> {
    match cfg.family {
        FamilyKind::Psi => EnergyContext::psi(table, cfg.model.lambda),
        FamilyKind::Theta => EnergyContext::theta(table, cfg.model.lambda),
    }
}

/// Run one experiment and write `energies.csv`, `prediction.txt`, and
/// `fit_report.txt` into `out_dir`.
///
/// The energy bound predicts one extra power for E relative to the damped
/// L2 mass, so the E fit uses `1 + mu` and the aL2 fit `mu`; the scaled
/// columns already carry their compensating powers and are fitted against
/// boundedness.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentArtifacts> {
    cfg.validate()?;
    let grid = RadialGrid::new(cfg.model.domain, cfg.grid.r_max, cfg.grid.points)?;
    let table = build_table(&cfg.model, &grid, &cfg.weight_settings())?;
    let ctx = energy_context(cfg, &table)?;
    let data = InitialData {
        u0: cfg.run.u0,
        u1: cfg.run.u1,
    };
    let output = run(&cfg.model, &grid, &data, &cfg.run.config)?;
    let records = energy_table(&output, &ctx, &cfg.model)?;
    let prediction = predict_decay(&cfg.model, cfg.run.case)?;

    let t0 = cfg.weights.t0;
    let jobs = [
        ("E", QuantitySelector::Energy, 1.0 + prediction.mu, prediction.log_power),
        ("aL2", QuantitySelector::DampedL2, prediction.mu, prediction.log_power),
        ("scaled_E", QuantitySelector::ScaledEnergy, 0.0, 0),
        ("scaled_aL2", QuantitySelector::ScaledDampedL2, 0.0, 0),
    ];
    let mut fits = Vec::new();
    for (name, selector, mu_pred, log_pred) in jobs {
        let fit = fit_decay(&records, selector, t0, mu_pred, log_pred)?;
        fits.push((name.to_string(), fit));
    }

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("energies.csv"), render_energies_csv(&records))?;
    fs::write(
        out_dir.join("prediction.txt"),
        render_prediction(&prediction, cfg.run.case),
    )?;
    fs::write(out_dir.join("fit_report.txt"), render_fit_report(&fits))?;
    Ok(ExperimentArtifacts {
        records,
        prediction,
        fits,
    })
}

fn csv_safe(msg: &str) -> String {
    msg.replace(['\n', ','], "; ")
}

struct SweepRow {
    p: f64,
    lambda: f64,
    region: String,
    mu_pred: String,
    log_pred: String,
    slope_fit: String,
    verdict: String,
    error: String,
}

/// Run the sweep grid and write `summary.csv` (rows sorted by (p, lambda)).
///
/// Cells run concurrently and independently; a failing cell fills the
/// `error` column and the sweep continues. The `slope_fit` and `verdict`
/// columns come from the damped-L2 fit, whose slope is directly comparable
/// to `mu_pred`.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let (p_axis, lambda_axis) = match &cfg.sweep {
        Some(s) => (s.p.clone(), s.lambda.clone()),
        None => (vec![cfg.model.p], vec![cfg.model.lambda]),
    };
    let mut cells = Vec::new();
    for &p in &p_axis {
        for &lambda in &lambda_axis {
            cells.push((p, lambda));
        }
    }
    fs::create_dir_all(out_dir)?;

    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(p, lambda)| {
            // The classification columns do not need the run; fill them
            // whenever the parameters classify, even for failed cells.
            let mut probe = cfg.model;
            probe.p = p;
            probe.lambda = lambda;
            let mut row = SweepRow {
                p,
                lambda,
                region: String::new(),
                mu_pred: String::new(),
                log_pred: String::new(),
                slope_fit: String::new(),
                verdict: String::new(),
                error: String::new(),
            };
            if let Ok(pred) = predict_decay(&probe, TheoremCase::II) {
                row.region = pred.region.to_string();
                row.mu_pred = pred.mu.to_string();
                row.log_pred = pred.log_power.to_string();
            }
            let mut cell_cfg = cfg.clone();
            cell_cfg.model.p = p;
            cell_cfg.model.lambda = lambda;
            cell_cfg.sweep = None;
            let cell_dir = out_dir.join(format!("cell_p{p}_lambda{lambda}"));
            match run_experiment(&cell_cfg, &cell_dir) {
                Ok(art) => {
                    if let Some((_, fit)) = art.fits.iter().find(|(name, _)| name == "aL2") {
                        row.slope_fit = format!("{:.6e}", fit.slope);
                        row.verdict = fit.verdict.to_string();
                    }
                }
                Err(err) => row.error = csv_safe(&err.to_string()),
            }
            row
        })
        .collect();

    rows.sort_by(|a, b| {
        (a.p, a.lambda)
            .partial_cmp(&(b.p, b.lambda))
            .expect("axes validated finite")
    });
    let mut text = String::from("p,lambda,region,mu_pred,log_pred,slope_fit,verdict,error\n");
    for row in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            row.p, row.lambda, row.region, row.mu_pred, row.log_pred, row.slope_fit, row.verdict,
            row.error
        );
    }
    let path = out_dir.join("summary.csv");
    fs::write(&path, text)?;
    Ok(path)
}

/// Classification-only (p, lambda) grid for phase-diagram plotting.
pub fn atlas(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let (p_axis, lambda_axis) = match &cfg.sweep {
        Some(s) => (s.p.clone(), s.lambda.clone()),
        None => {
            let p_cap = if cfg.model.n >= 3 {
                f64::from(cfg.model.n) / (f64::from(cfg.model.n) - 2.0)
            } else {
                4.0
            };
            let p_axis = (0..40)
                .map(|i| 1.02 + (p_cap - 1.02) * f64::from(i) / 39.0)
                .collect();
            let lambda_axis = (0..=40).map(|i| 0.1 * f64::from(i)).collect();
            (p_axis, lambda_axis)
        }
    };
    let mut text = String::from("p,lambda,region,mu,log_power,l2_mu,saturated,alt_mu\n");
    for &p in &p_axis {
        for &lambda in &lambda_axis {
            let mut probe = cfg.model;
            probe.p = p;
            probe.lambda = lambda;
            let pred = predict_decay(&probe, TheoremCase::II)?;
            let alt = pred
                .alt_mu
                .map_or_else(String::new, |v| v.to_string());
            let _ = writeln!(
                text,
                "{p},{lambda},{},{},{},{},{},{alt}",
                pred.region, pred.mu, pred.log_power, pred.l2_mu, pred.saturated
            );
        }
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("atlas.csv");
    fs::write(&path, text)?;
    Ok(path)
}

/// Accumulated pass/fail lines from an invariant battery.
pub struct Battery {
    report: String,
    ok: bool,
}

impl Battery {
    fn new() -> Self {
        Self {
            report: String::new(),
            ok: true,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let status = if pass { "PASS" } else { "FAIL" };
        let _ = writeln!(self.report, "{status} {name}: {detail}");
        self.ok &= pass;
    }

    pub fn report(&self) -> &str {
        &self.report
    }

    pub fn ok(&self) -> bool {
        self.ok
    }
}

/// Random compact bump vanishing near both grid ends, for the flat-weight
/// inequality battery.
pub fn random_interior_bump(grid: &RadialGrid, rng: &mut impl Rng) -> Vec<f64> {
    let span = grid.r_max - grid.r_min;
    let margin = 4.0 * grid.h + 0.05 * span;
    let width = rng.gen_range(0.05 * span..0.2 * span);
    let center = rng.gen_range(grid.r_min + margin + width..grid.r_max - margin - width);
    let amplitude = rng.gen_range(0.1..2.0f64);
    let profile = Profile::CompactBump {
        center,
        width,
        amplitude,
    };
    grid.r.iter().map(|&r| profile.eval(r)).collect()
}

/// Weight-machinery invariant battery: construction inequalities,
/// supersolution positivity, time-derivative route agreement, and the
/// flat-weight integral inequality on seeded random bumps.
pub fn verify_weights(cfg: &ExperimentConfig, bump_count: usize) -> Result<Battery> {
    let grid = RadialGrid::new(cfg.model.domain, cfg.grid.r_max, cfg.grid.points)?;
    let mut battery = Battery::new();
    let eps = cfg.weights.epsilon;

    let base = build_table(&cfg.model, &grid, &cfg.weight_settings())?;
    let report = base.invariant_report();
    battery.check(
        "construction bounds (A1)",
        report.a1_min >= 1.0 - eps && report.a1_max <= 1.0 + eps,
        format!(
            "Lap(A)/a in [{:.6}, {:.6}], target [{}, {}]",
            report.a1_min,
            report.a1_max,
            1.0 - eps,
            1.0 + eps
        ),
    );
    battery.check(
        "growth envelope (A2)",
        report.a2_min > 0.0 && report.a2_max.is_finite(),
        format!(
            "A/<r>^(2-alpha) in [{:.6}, {:.6}]",
            report.a2_min, report.a2_max
        ),
    );
    battery.check(
        "gradient bound (A3)",
        report.a3_max <= report.a3_bound,
        format!("|A'|^2/(aA) max {:.6} vs bound {:.6}", report.a3_max, report.a3_bound),
    );

    let (_, gamma) = gamma_pair(cfg.model.n, cfg.model.alpha, eps)?;
    for beta in [0.3, 0.6 * gamma] {
        let settings = WeightSettings {
            beta,
            ..cfg.weights
        };
        let table = build_table(&cfg.model, &grid, &settings)?;
        let mut min_ratio = f64::INFINITY;
        let mut max_residual = 0.0f64;
        for t in [0.0, 1.0, 10.0, 100.0] {
            let ratios = table.supersolution_residual(t)?;
            for &v in &ratios[1..ratios.len() - 1] {
                min_ratio = min_ratio.min(v);
            }
            for i in 0..grid.len() {
                let a = table.dt_phi_raised(i, t)?;
                let b = table.dt_phi_chain(i, t)?;
                max_residual = max_residual.max((a - b).abs());
            }
        }
        battery.check(
            &format!("supersolution positivity (beta = {beta})"),
            min_ratio > 0.0,
            format!("min interior ratio {min_ratio:.6e}"),
        );
        battery.check(
            &format!("time-derivative identity (beta = {beta})"),
            max_residual <= 1e-8,
            format!("max route disagreement {max_residual:.3e}"),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    for beta in [0.0, 0.3] {
        let settings = WeightSettings {
            beta,
            ..cfg.weights
        };
        let table = build_table(&cfg.model, &grid, &settings)?;
        let tol = 1e-6 + 10.0 * grid.h;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..bump_count {
            let u = random_interior_bump(&grid, &mut rng);
            for t in [0.0, 5.0] {
                let (lhs, rhs) = table.delta_phi_inequality_check(&u, t)?;
                worst = worst.max(lhs - rhs);
            }
        }
        battery.check(
            &format!("flat-weight integral inequality (beta = {beta})"),
            worst <= tol,
            format!("worst lhs-rhs gap {worst:.3e}, tolerance {tol:.3e}"),
        );
    }
    Ok(battery)
}

/// Quick special-function and energetics sanity battery used by the CLI.
pub fn selftest() -> Battery {
    let mut battery = Battery::new();

    let mut worst = 0.0f64;
    for b in [0.5, 1.0, 2.0] {
        for k in 0..=20 {
            let s = 30.0 * f64::from(k) / 20.0;
            let m = kummer_m(b, b, s).unwrap_or(f64::NAN);
            worst = worst.max((m - s.exp()).abs() / s.exp());
        }
    }
    battery.check(
        "confluent series exponential identity",
        worst <= 1e-10,
        format!("worst relative error {worst:.3e}"),
    );

    let mut worst = 0.0f64;
    for k in 1..=20 {
        let s = 10.0 * f64::from(k) / 20.0;
        let m = kummer_m(1.0, 2.0, s).unwrap_or(f64::NAN);
        let exact = (s.exp() - 1.0) / s;
        worst = worst.max((m - exact).abs() / exact);
    }
    battery.check(
        "integral closed form",
        worst <= 1e-10,
        format!("worst relative error {worst:.3e}"),
    );

    let phi = PhiParams::new(3, 0.5, 0.1, 0.3).expect("valid profile");
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let s = 0.1 + 20.0 * f64::from(k) / 20.0;
        let (v, dv, ddv) = (
            phi.phi(s).unwrap(),
            phi.phi_prime(s).unwrap(),
            phi.phi_second(s).unwrap(),
        );
        let residual = s * ddv + (phi.gamma + s) * dv + phi.beta * v;
        worst = worst.max(residual.abs());
    }
    battery.check(
        "profile differential equation",
        worst <= 1e-9,
        format!("worst residual {worst:.3e}"),
    );

    let cfg = ExperimentConfig::default();
    let grid = RadialGrid::new(cfg.model.domain, 16.0, 512).expect("grid");
    let table = build_table(&cfg.model, &grid, &cfg.weight_settings()).expect("table");
    let ctx = EnergyContext::theta(&table, 0.5).expect("context");
    let data = InitialData {
        u0: Profile::CompactBump {
            center: 4.0,
            width: 2.0,
            amplitude: 1.0,
        },
        u1: Profile::Zero,
    };
    let mut run_cfg = cfg.run.config.clone();
    run_cfg.t_final = 6.0;
    run_cfg.record_every = 20;
    match run(&cfg.model, &grid, &data, &run_cfg) {
        Ok(out) => {
            let records = energy_table(&out, &ctx, &cfg.model).expect("records");
            let monotone = records.windows(2).all(|w| {
                w[1].e <= w[0].e + 1e-10 * records[0].e + 5.0 * out.dt * out.dt
            });
            battery.check(
                "energy monotonicity",
                monotone,
                format!("{} records, E(0) = {:.6e}", records.len(), records[0].e),
            );
            let gap_ok = records.iter().all(|r| {
                r.estar >= 0.5 * r.e1 - 1e-10 * (r.e1.abs() + 1.0)
            });
            battery.check(
                "combined energy lower bound",
                gap_ok,
                "Estar >= E1/2 along the run".to_string(),
            );
        }
        Err(err) => battery.check("energy monotonicity", false, err.to_string()),
    }
    battery
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_have_seventeen_significant_digits() {
        let rec = EnergyRecord {
            t: 0.125,
            e: 1.0 / 3.0,
            a_l2: 2.0,
            l2: 3.0,
            e1: 4.0,
            e0: 5.0,
            estar: 6.0,
            etilde: 7.0,
            scaled_e: 8.0,
            scaled_a_l2: 9.0,
        };
        let text = render_energies_csv(&[rec]);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("t,E,aL2,L2,E1,E0,Estar,Etilde,scaled_E,scaled_aL2")
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.2500000000000000e-1,3.3333333333333331e-1,"));
        assert_eq!(row.split(',').count(), 10);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn exit_codes_split_validation_from_runtime() {
        assert_eq!(exit_code_for(&Error::Parse("x".into())), 1);
        assert_eq!(exit_code_for(&Error::Validation("x".into())), 1);
        assert_eq!(
            exit_code_for(&Error::CaseIRange {
                lambda: 2.0,
                limit: 1.0
            }),
            1
        );
        assert_eq!(
            exit_code_for(&Error::Blowup {
                t: 1.0,
                max_abs: 1e13
            }),
            2
        );
    }

    #[test]
    fn selftest_battery_is_green() {
        let battery = selftest();
        assert!(battery.ok(), "{}", battery.report());
    }

    #[test]
    fn verify_weights_battery_is_green() {
        let cfg = ExperimentConfig::default();
        let battery = verify_weights(&cfg, 10).unwrap();
        assert!(battery.ok(), "{}", battery.report());
    }
}
