//! Explicit time integration of the radial damped semilinear wave equation.
//!
//! The scheme is leapfrog with the damping term averaged over the two
//! outer time levels, which keeps the update explicit:
//!
//! ```text
//!     (u+ - 2u + u-)/dt^2 + a_i (u+ - u-)/(2 dt) = Lap_h(u) - |u|^{p-1} u
//! ```
//!
//! solved per node for `u+`. Stability rests on the wave CFL condition
//! `dt = cfl * h`; the damping average never amplifies. Outer boundary is
//! homogeneous Dirichlet, justified by finite propagation speed when the
//! grid contains the light cone of the data (`require_cone`).

use crate::discrete::{integrate, laplacian_at, laplacian_origin, measure_weights};
use crate::error::{Error, Result};
use crate::model::{damping_at, sample_initial_data, InitialData, ModelParams, RadialGrid};

const BLOWUP_THRESHOLD: f64 = 1e12;
pub const MAX_CFL: f64 = 0.9;

/// Two consecutive displacement levels plus bookkeeping.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub t: f64,
    pub k: usize,
    pub dt: f64,
}

/// Controls of one time-integration run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub t_final: f64,
    /// Courant factor in (0, 0.9]; dt = cfl * h.
    pub cfl: f64,
    /// Steps between recorded snapshots.
    pub record_every: usize,
    /// Slack radius added to the light cone in the propagation check and
    /// the grid-size requirement.
    pub cone_margin: f64,
    /// Demand r_max >= support radius + t_final + cone_margin, so the
    /// Dirichlet truncation is exact up to the propagation speed error.
    pub require_cone: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            cfl: 0.5,
            record_every: 1,
            cone_margin: 0.5,
            require_cone: true,
        }
    }
}

/// One recorded time level: displacement and centered velocity.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Everything a run emits.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    /// Cumulative damping dissipation `int_0^t int a |u_t|^2 dmu ds` at the
    /// snapshot times, accumulated by the trapezoid rule over every step.
    pub dissipation: Vec<f64>,
    pub dt: f64,
    /// Total leapfrog steps taken to pass t_final.
    pub steps: usize,
}

/// `|u|^{p-1} u` with exact fast paths for the common integer exponents.
#[inline]
fn absorbing_term(u: f64, p: f64) -> f64 {
    if p == 3.0 {
        u * u * u
    } else if p == 2.0 {
        u.abs() * u
    } else {
        u.abs().powf(p - 1.0) * u
    }
}

#[inline]
fn forcing(u: f64, params: &ModelParams) -> f64 {
    match params.nonlinearity {
        crate::model::Nonlinearity::Absorbing => absorbing_term(u, params.p),
        crate::model::Nonlinearity::Off => 0.0,
    }
}

/// Second-order Taylor start-up using the equation for the initial
/// acceleration: `u1 = u0 + dt u1' + dt^2/2 (Lap_h u0 - a u1' - f(u0))`.
pub fn taylor_first_step(
    u0: &[f64],
    u1: &[f64],
    a_nodes: &[f64],
    params: &ModelParams,
    grid: &RadialGrid,
    dt: f64,
) -> Vec<f64> {
    let len = grid.len();
    let mut next = vec![0.0; len];
    for i in 1..len - 1 {
        let lap = laplacian_at(u0, grid, params.n, i);
        next[i] = u0[i] + dt * u1[i] + 0.5 * dt * dt * (lap - a_nodes[i] * u1[i] - forcing(u0[i], params));
    }
    if grid.origin_node {
        let lap = laplacian_origin(u0, grid, params.n);
        next[0] = u0[0] + dt * u1[0] + 0.5 * dt * dt * (lap - a_nodes[0] * u1[0] - forcing(u0[0], params));
    }
    next
}

fn leapfrog_step(
    u: &[f64],
    u_prev: &[f64],
    a_nodes: &[f64],
    params: &ModelParams,
    grid: &RadialGrid,
    dt: f64,
    next: &mut [f64],
) {
    let len = grid.len();
    for i in 1..len - 1 {
        let lap = laplacian_at(u, grid, params.n, i);
        let half = 0.5 * a_nodes[i] * dt;
        next[i] = (2.0 * u[i] - (1.0 - half) * u_prev[i] + dt * dt * (lap - forcing(u[i], params)))
            / (1.0 + half);
    }
    next[0] = if grid.origin_node {
        let lap = laplacian_origin(u, grid, params.n);
        let half = 0.5 * a_nodes[0] * dt;
        (2.0 * u[0] - (1.0 - half) * u_prev[0] + dt * dt * (lap - forcing(u[0], params)))
            / (1.0 + half)
    } else {
        0.0
    };
    next[len - 1] = 0.0;
}

fn check_blowup(u: &[f64], t: f64) -> Result<()> {
    let max_abs = u.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max_abs > BLOWUP_THRESHOLD {
        Err(Error::Blowup { t, max_abs })
    } else {
        Ok(())
    }
}

/// Advances one leapfrog step in place. The first step from initial data
/// should come from `taylor_first_step`; this is the generic interior step.
pub fn step(state: &mut WaveState, params: &ModelParams, grid: &RadialGrid) -> Result<()> {
    let a_nodes: Vec<f64> = grid.r.iter().map(|&r| damping_at(params, r)).collect();
    let mut next = vec![0.0; grid.len()];
    leapfrog_step(&state.u, &state.u_prev, &a_nodes, params, grid, state.dt, &mut next);
    state.k += 1;
    state.t = state.k as f64 * state.dt;
    check_blowup(&next, state.t)?;
    state.u_prev = std::mem::replace(&mut state.u, next);
    Ok(())
}

fn validate_run(
    params: &ModelParams,
    grid: &RadialGrid,
    data: &InitialData,
    config: &RunConfig,
) -> Result<()> {
    params.validate()?;
    if !(config.cfl > 0.0 && config.cfl <= MAX_CFL) {
        return Err(Error::Config(format!(
            "cfl = {} outside (0, {MAX_CFL}]",
            config.cfl
        )));
    }
    if !(config.t_final >= 0.0 && config.t_final.is_finite()) {
        return Err(Error::Config(format!("t_final = {}", config.t_final)));
    }
    if config.record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    if config.require_cone {
        let support = data.support_radius().ok_or_else(|| {
            Error::Config("cone guarantee requested for data without compact support".into())
        })?;
        let needed = support + config.t_final + config.cone_margin;
        if grid.r_max < needed {
            return Err(Error::Config(format!(
                "grid radius {} below light-cone requirement {needed} \
                 (support {support} + T {} + margin {})",
                grid.r_max, config.t_final, config.cone_margin
            )));
        }
    }
    Ok(())
}

/// Full run: samples the data, integrates to `t_final`, and records
/// snapshots with centered velocities every `record_every` steps.
/// Strictly sequential and deterministic.
pub fn run(
    params: &ModelParams,
    grid: &RadialGrid,
    data: &InitialData,
    config: &RunConfig,
) -> Result<RunOutput> {
    validate_run(params, grid, data, config)?;
    let (u0, u1) = sample_initial_data(data, params, grid)?;
    let a_nodes: Vec<f64> = grid.r.iter().map(|&r| damping_at(params, r)).collect();
    let weights = measure_weights(grid, params.n);
    let len = grid.len();

    let diss_density = |v: &[f64]| -> f64 {
        let vals: Vec<f64> = (0..len).map(|i| a_nodes[i] * v[i] * v[i]).collect();
        integrate(&vals, &weights)
    };

    let mut snapshots = vec![Snapshot {
        t: 0.0,
        u: u0.clone(),
        v: u1.clone(),
    }];
    let mut dissipation = vec![0.0];

    let dt = config.cfl * grid.h;
    let steps = (config.t_final / dt).ceil() as usize;
    if steps == 0 {
        return Ok(RunOutput {
            snapshots,
            dissipation,
            dt,
            steps,
        });
    }

    let mut u_prev = u0;
    let mut u = taylor_first_step(&u_prev, &u1, &a_nodes, params, grid, dt);
    check_blowup(&u, dt)?;
    let mut f_prev = diss_density(&u1);
    let mut diss = 0.0f64;
    let mut next = vec![0.0; len];
    let mut v = vec![0.0; len];

    // At iteration k (1-based level of `u`), compute level k+1 so the
    // centered velocity at level k is available for records and for the
    // dissipation quadrature.
    for k in 1..=steps {
        let t = k as f64 * dt;
        leapfrog_step(&u, &u_prev, &a_nodes, params, grid, dt, &mut next);
        check_blowup(&next, t + dt)?;
        for i in 0..len {
            v[i] = (next[i] - u_prev[i]) / (2.0 * dt);
        }
        let f = diss_density(&v);
        diss += 0.5 * dt * (f_prev + f);
        f_prev = f;
        // The final level is always recorded so the state at t_final is
        // available even when record_every does not divide the step count.
        if k % config.record_every == 0 || k == steps {
            snapshots.push(Snapshot {
                t,
                u: u.clone(),
                v: v.clone(),
            });
            dissipation.push(diss);
        }
        std::mem::swap(&mut u_prev, &mut u);
        std::mem::swap(&mut u, &mut next);
    }

    Ok(RunOutput {
        snapshots,
        dissipation,
        dt,
        steps,
    })
}

/// Max over recorded times of the squared mass beyond the light cone
/// `r > r0 + t + margin`, where `r0` is the initial support radius.
pub fn finite_propagation_check(
    output: &RunOutput,
    grid: &RadialGrid,
    n: u32,
    r0: f64,
    margin: f64,
) -> f64 {
    let weights = measure_weights(grid, n);
    let mut worst = 0.0f64;
    for snap in &output.snapshots {
        let cone = r0 + snap.t + margin;
        let mut leak = 0.0;
        for i in 0..grid.len() {
            if grid.r[i] > cone {
                leak += weights[i] * snap.u[i] * snap.u[i];
            }
        }
        worst = worst.max(leak);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DampingProfile, Domain, Nonlinearity, Profile};

    fn free_params(n: u32) -> ModelParams {
        ModelParams {
            n,
            alpha: 0.0,
            a0: 0.0,
            a1: 0.0,
            p: 3.0,
            lambda: 0.0,
            domain: Domain::WholeSpace,
            damping: DampingProfile::Off,
            nonlinearity: Nonlinearity::Off,
        }
    }

    fn damped_params(n: u32, alpha: f64, p: f64) -> ModelParams {
        ModelParams {
            n,
            alpha,
            a0: 1.0,
            a1: 1.0,
            p,
            lambda: 0.0,
            domain: Domain::WholeSpace,
            damping: DampingProfile::PowerLaw,
            nonlinearity: Nonlinearity::Absorbing,
        }
    }

    fn bump(center: f64, width: f64, amplitude: f64) -> Profile {
        Profile::SmoothBump {
            center,
            width,
            amplitude,
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let params = damped_params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 64).unwrap();
        let mut state = WaveState {
            u: vec![0.0; 64],
            u_prev: vec![0.0; 64],
            t: 0.0,
            k: 0,
            dt: 0.5 * grid.h,
        };
        step(&mut state, &params, &grid).unwrap();
        assert!(state.u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn taylor_startup_matches_expansion() {
        let params = damped_params(1, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 128).unwrap();
        let u0: Vec<f64> = grid.r.iter().map(|&r| bump(4.0, 2.0, 1.0).eval(r)).collect();
        let u1: Vec<f64> = grid.r.iter().map(|&r| bump(5.0, 1.0, -0.3).eval(r)).collect();
        let a: Vec<f64> = grid.r.iter().map(|&r| damping_at(&params, r)).collect();
        let dt = 0.01;
        let next = taylor_first_step(&u0, &u1, &a, &params, &grid, dt);
        let i = 60;
        let lap = laplacian_at(&u0, &grid, 1, i);
        let want = u0[i] + dt * u1[i]
            + 0.5 * dt * dt * (lap - a[i] * u1[i] - u0[i].abs() * u0[i]);
        assert!((next[i] - want).abs() < 1e-15);
    }

    #[test]
    fn dalembert_pulse_splits_second_order() {
        // Free 1-d wave from a smooth bump at rest: the solution is the
        // half-sum of translates. Error must shrink at order ~2.
        let params = free_params(1);
        let profile = bump(6.0, 3.0, 1.0);
        let t_final = 5.0;
        let mut errs = Vec::new();
        for len in [512usize, 1024, 2048] {
            let grid = RadialGrid::new(Domain::WholeSpace, 16.0, len).unwrap();
            let data = InitialData {
                u0: profile,
                u1: Profile::Zero,
            };
            let config = RunConfig {
                t_final,
                record_every: usize::MAX,
                ..RunConfig::default()
            };
            let out = run(&params, &grid, &data, &config).unwrap();
            let last = out.snapshots.last().unwrap();
            let t = last.t;
            let mut worst = 0.0f64;
            for (i, &r) in grid.r.iter().enumerate() {
                let exact = 0.5 * (profile.eval((r - t).abs()) + profile.eval(r + t));
                worst = worst.max((last.u[i] - exact).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(
            order >= 1.8,
            "observed order {order} from errors {errs:?}"
        );
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn negation_symmetry_is_exact() {
        // |−u|^{p−1}(−u) = −|u|^{p−1}u holds bitwise, so negating the data
        // negates every later level bitwise as well.
        let params = damped_params(1, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 12.0, 256).unwrap();
        let config = RunConfig {
            t_final: 3.0,
            record_every: 64,
            ..RunConfig::default()
        };
        let pos = InitialData {
            u0: bump(4.0, 2.0, 0.8),
            u1: bump(3.0, 1.0, 0.4),
        };
        let neg = InitialData {
            u0: bump(4.0, 2.0, -0.8),
            u1: bump(3.0, 1.0, -0.4),
        };
        let a = run(&params, &grid, &pos, &config).unwrap();
        let b = run(&params, &grid, &neg, &config).unwrap();
        let ua = &a.snapshots.last().unwrap().u;
        let ub = &b.snapshots.last().unwrap().u;
        for i in 0..grid.len() {
            assert_eq!(ua[i], -ub[i], "node {i}");
        }
    }

    #[test]
    fn tiny_amplitude_matches_linearized_run() {
        // p = 3: the nonlinear term is amplitude^2-small relative to the
        // linear part, so a 1e-6 bump tracks the linear run to 1e-9.
        let mut nl = damped_params(1, 0.0, 3.0);
        nl.damping = DampingProfile::Constant;
        let mut lin = nl;
        lin.nonlinearity = Nonlinearity::Off;
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 512).unwrap();
        let data = InitialData {
            u0: bump(4.0, 2.0, 1e-6),
            u1: Profile::Zero,
        };
        let config = RunConfig {
            t_final: 2.0,
            record_every: usize::MAX,
            ..RunConfig::default()
        };
        let a = run(&nl, &grid, &data, &config).unwrap();
        let b = run(&lin, &grid, &data, &config).unwrap();
        let ua = &a.snapshots.last().unwrap().u;
        let ub = &b.snapshots.last().unwrap().u;
        let scale = ub.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let diff = ua
            .iter()
            .zip(ub)
            .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()));
        assert!(diff <= 1e-9 * scale, "diff {diff:e} vs scale {scale:e}");
    }

    #[test]
    fn unstable_cfl_reports_blowup() {
        // In n = 3 the origin stencil pushes the spectral radius above the
        // 1-d bound, so cfl = 0.9 is outside the stability region.
        let params = damped_params(3, 0.0, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 8.0, 128).unwrap();
        let data = InitialData {
            u0: bump(2.0, 1.0, 1.0),
            u1: Profile::Zero,
        };
        let config = RunConfig {
            t_final: 5.0,
            cfl: 0.9,
            record_every: usize::MAX,
            require_cone: false,
            ..RunConfig::default()
        };
        match run(&params, &grid, &data, &config) {
            Err(Error::Blowup { max_abs, .. }) => assert!(max_abs > 1e12),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn cone_requirement_enforced() {
        let params = damped_params(1, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 64).unwrap();
        let config = RunConfig {
            t_final: 20.0,
            ..RunConfig::default()
        };
        let compact = InitialData {
            u0: bump(2.0, 1.0, 1.0),
            u1: Profile::Zero,
        };
        assert!(matches!(
            run(&params, &grid, &compact, &config),
            Err(Error::Config(_))
        ));
        let full = InitialData {
            u0: Profile::PolyDecay {
                q: 6.0,
                amplitude: 1.0,
            },
            u1: Profile::Zero,
        };
        let short = RunConfig {
            t_final: 1.0,
            ..RunConfig::default()
        };
        assert!(matches!(
            run(&params, &grid, &full, &short),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_horizon_gives_single_record() {
        let params = damped_params(1, 0.0, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 64).unwrap();
        let data = InitialData {
            u0: bump(2.0, 1.0, 1.0),
            u1: Profile::Zero,
        };
        let config = RunConfig {
            t_final: 0.0,
            ..RunConfig::default()
        };
        let out = run(&params, &grid, &data, &config).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.steps, 0);
        assert_eq!(out.dissipation, vec![0.0]);
    }

    #[test]
    fn record_count_bookkeeping() {
        let params = damped_params(1, 0.0, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 12.0, 128).unwrap();
        let data = InitialData {
            u0: bump(2.0, 1.0, 1.0),
            u1: Profile::Zero,
        };
        let config = RunConfig {
            t_final: 4.0,
            record_every: 7,
            ..RunConfig::default()
        };
        let out = run(&params, &grid, &data, &config).unwrap();
        let expected = out.steps / 7 + 1 + usize::from(out.steps % 7 != 0);
        assert_eq!(out.snapshots.len(), expected);
        assert_eq!(out.snapshots.len(), out.dissipation.len());
        for w in out.dissipation.windows(2) {
            assert!(w[1] >= w[0], "dissipation must accumulate");
        }
    }

    #[test]
    fn propagation_leak_is_negligible() {
        let params = free_params(1);
        let data = InitialData {
            u0: bump(2.0, 1.0, 1.0),
            u1: bump(2.0, 1.0, 0.5),
        };
        let grid = RadialGrid::new(Domain::WholeSpace, 14.0, 1024).unwrap();
        let config = RunConfig {
            t_final: 10.0,
            record_every: 100,
            ..RunConfig::default()
        };
        let out = run(&params, &grid, &data, &config).unwrap();
        let leak = finite_propagation_check(&out, &grid, 1, 3.0, 0.5);
        let w = measure_weights(&grid, 1);
        let mass: f64 = (0..grid.len())
            .map(|i| {
                let u0 = data.u0.eval(grid.r[i]);
                let u1 = data.u1.eval(grid.r[i]);
                w[i] * (u0 * u0 + u1 * u1)
            })
            .sum();
        assert!(leak <= 1e-8 * mass, "leak {leak:e} vs mass {mass:e}");
    }
}
