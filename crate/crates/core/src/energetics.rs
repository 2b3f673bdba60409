//! Integral functionals of a wave state: the base energy, weighted and
//! unweighted L2 masses, the initial-data norm, and the two weighted
//! energy families built on the Psi and Theta scales.
//!
//! The families share the structure
//!
//! ```text
//!     E1 = int [ (v^2 + |u'|^2)/2 + |u|^{p+1}/(p+1) ] W^{lambda + alpha/(2-alpha)} dmu
//!     E0 = int ( 2 u v + a u^2 ) W0 dmu
//!     E* = E1 + nu E0
//!     Et = (t0+t) int [ density ] W^lambda dmu
//! ```
//!
//! where the Psi family takes `W = Psi` and `W0 = Phi^{-1+2 delta}` with
//! profile index `beta = lambda/(1-2 delta)`, and the Theta family takes
//! `W = W0-base = Theta` with plain power `lambda`. For admissible `nu` the
//! combined `E*` controls `E1` from below, which is what makes it a usable
//! Lyapunov functional; that lower bound is asserted, not assumed.

use crate::discrete::{integrate, measure_weights, radial_gradient};
use crate::error::{Error, Result};
use crate::model::{jbracket, InitialData, ModelParams, RadialGrid};
use crate::solver::RunOutput;
use crate::weights::WeightTable;

/// One row of the energy time series.
#[derive(Debug, Clone, Copy)]
pub struct EnergyRecord {
    pub t: f64,
    pub e: f64,
    pub a_l2: f64,
    pub l2: f64,
    pub e1: f64,
    pub e0: f64,
    pub estar: f64,
    pub etilde: f64,
    pub scaled_e: f64,
    pub scaled_a_l2: f64,
}

/// Which weight scale the family uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Psi,
    Theta,
}

/// A weight table bound to one family and one lambda.
#[derive(Debug, Clone, Copy)]
pub struct EnergyContext<'a> {
    pub table: &'a WeightTable,
    pub kind: FamilyKind,
    pub lambda: f64,
}

impl<'a> EnergyContext<'a> {
    /// Psi-scale family. The table must have been built with the profile
    /// index `beta = lambda/(1-2 delta)`, and that index must stay below
    /// `gamma` for the flat-weight comparability to hold.
    pub fn psi(table: &'a WeightTable, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda = {lambda} must be >= 0")));
        }
        let beta = lambda / (1.0 - 2.0 * table.delta);
        if (table.beta - beta).abs() > 1e-12 * (1.0 + beta) {
            return Err(Error::Config(format!(
                "table built with beta = {}, but lambda = {lambda} and delta = {} require {beta}",
                table.beta, table.delta
            )));
        }
        if beta >= table.phi.gamma {
            return Err(Error::Domain(format!(
                "beta = {beta} must stay below gamma = {} \
                 (lambda too large for this delta)",
                table.phi.gamma
            )));
        }
        Ok(Self {
            table,
            kind: FamilyKind::Psi,
            lambda,
        })
    }

    /// Theta-scale family; no profile index involved.
    pub fn theta(table: &'a WeightTable, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda = {lambda} must be >= 0")));
        }
        Ok(Self {
            table,
            kind: FamilyKind::Theta,
            lambda,
        })
    }
}

#[inline]
fn abs_pow(u: f64, q: f64) -> f64 {
    if q == 3.0 {
        let a = u.abs();
        a * a * a
    } else if q == 4.0 {
        let s = u * u;
        s * s
    } else {
        u.abs().powf(q)
    }
}

/// Base energy `E = int [ (v^2 + |u'|^2)/2 + |u|^{p+1}/(p+1) ] dmu`.
/// The potential term follows the configured nonlinearity.
pub fn energy_e(u: &[f64], v: &[f64], params: &ModelParams, grid: &RadialGrid) -> f64 {
    let w = measure_weights(grid, params.n);
    let du = radial_gradient(u, grid.h);
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let mut d = 0.5 * (v[i] * v[i] + du[i] * du[i]);
            if params.nonlinearity == crate::model::Nonlinearity::Absorbing {
                d += abs_pow(u[i], params.p + 1.0) / (params.p + 1.0);
            }
            d
        })
        .collect();
    integrate(&vals, &w)
}

/// Weighted initial-data norm
/// `int [ (u1^2 + |u0'|^2 + |u0|^{p+1}) <r>^{alpha} + u0^2 <r>^{-alpha} ]
///  <r>^{lambda (2-alpha)} dmu`.
///
/// Refuses with a divergence warning when the integrand fails to decay at
/// the outer edge of the grid, since the quadrature would then silently
/// depend on the truncation radius.
pub fn i0_norm(data: &InitialData, params: &ModelParams, grid: &RadialGrid) -> Result<f64> {
    let len = grid.len();
    let u0: Vec<f64> = grid.r.iter().map(|&r| data.u0.eval(r)).collect();
    let u1: Vec<f64> = grid.r.iter().map(|&r| data.u1.eval(r)).collect();
    let du0 = radial_gradient(&u0, grid.h);
    let vals: Vec<f64> = (0..len)
        .map(|i| {
            let j = jbracket(grid.r[i]);
            let strong = u1[i] * u1[i] + du0[i] * du0[i] + abs_pow(u0[i], params.p + 1.0);
            let weak = u0[i] * u0[i];
            (strong * j.powf(params.alpha) + weak * j.powf(-params.alpha))
                * j.powf(params.lambda * (2.0 - params.alpha))
        })
        .collect();
    if vals[len - 1] > 0.0 && vals[len - 1] >= vals[len - 2] {
        return Err(Error::DivergenceWarning(format!(
            "data-norm integrand is non-decreasing at r_max = {} \
             ({} -> {}); the truncated quadrature is unreliable",
            grid.r_max,
            vals[len - 2],
            vals[len - 1]
        )));
    }
    let w = measure_weights(grid, params.n);
    Ok(integrate(&vals, &w))
}

/// The four family functionals `(E1, E0, Estar, Etilde)` at time t.
pub fn energy_family(
    u: &[f64],
    v: &[f64],
    ctx: &EnergyContext,
    params: &ModelParams,
    t: f64,
) -> Result<(f64, f64, f64, f64)> {
    let table = ctx.table;
    let grid = &table.grid;
    let len = grid.len();
    let w = measure_weights(grid, params.n);
    let du = radial_gradient(u, grid.h);
    let kappa = ctx.lambda + params.alpha / (2.0 - params.alpha);

    let density: Vec<f64> = (0..len)
        .map(|i| {
            let mut d = 0.5 * (v[i] * v[i] + du[i] * du[i]);
            if params.nonlinearity == crate::model::Nonlinearity::Absorbing {
                d += abs_pow(u[i], params.p + 1.0) / (params.p + 1.0);
            }
            d
        })
        .collect();
    let cross: Vec<f64> = (0..len)
        .map(|i| 2.0 * u[i] * v[i] + table.a_nodes[i] * u[i] * u[i])
        .collect();

    let scale = |i: usize| match ctx.kind {
        FamilyKind::Psi => table.psi_eval(i, t),
        FamilyKind::Theta => table.theta_eval(i, t),
    };

    let e1_vals: Vec<f64> = (0..len).map(|i| density[i] * scale(i).powf(kappa)).collect();
    let e0_vals: Vec<f64> = match ctx.kind {
        FamilyKind::Psi => {
            let exponent = -1.0 + 2.0 * table.delta;
            (0..len)
                .map(|i| {
                    table
                        .phi_weight_eval(i, t)
                        .map(|phi| cross[i] * phi.powf(exponent))
                })
                .collect::<Result<_>>()?
        }
        FamilyKind::Theta => (0..len)
            .map(|i| cross[i] * scale(i).powf(ctx.lambda))
            .collect(),
    };
    let et_vals: Vec<f64> = (0..len)
        .map(|i| density[i] * scale(i).powf(ctx.lambda))
        .collect();

    let e1 = integrate(&e1_vals, &w);
    let e0 = integrate(&e0_vals, &w);
    let estar = e1 + table.nu * e0;
    let etilde = (table.t0 + t) * integrate(&et_vals, &w);
    Ok((e1, e0, estar, etilde))
}

/// Gap of the combined-energy lower bound
/// `Estar - E1/2 - (nu/2) int a u^2 W^lambda dmu`; admissible nu keeps it
/// nonnegative up to quadrature rounding.
pub fn estar_gap(
    u: &[f64],
    v: &[f64],
    ctx: &EnergyContext,
    params: &ModelParams,
    t: f64,
) -> Result<f64> {
    let table = ctx.table;
    let grid = &table.grid;
    let (e1, _, estar, _) = energy_family(u, v, ctx, params, t)?;
    let w = measure_weights(grid, params.n);
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let scale = match ctx.kind {
                FamilyKind::Psi => table.psi_eval(i, t),
                FamilyKind::Theta => table.theta_eval(i, t),
            };
            table.a_nodes[i] * u[i] * u[i] * scale.powf(ctx.lambda)
        })
        .collect();
    let weighted_mass = integrate(&vals, &w);
    Ok(estar - 0.5 * e1 - 0.5 * table.nu * weighted_mass)
}

/// Full energy table for a run.
pub fn energy_table(
    output: &RunOutput,
    ctx: &EnergyContext,
    params: &ModelParams,
) -> Result<Vec<EnergyRecord>> {
    let table = ctx.table;
    let grid = &table.grid;
    let w = measure_weights(grid, params.n);
    let mut rows = Vec::with_capacity(output.snapshots.len());
    for snap in &output.snapshots {
        let e = energy_e(&snap.u, &snap.v, params, grid);
        let a_vals: Vec<f64> = (0..grid.len())
            .map(|i| table.a_nodes[i] * snap.u[i] * snap.u[i])
            .collect();
        let l2_vals: Vec<f64> = (0..grid.len()).map(|i| snap.u[i] * snap.u[i]).collect();
        let a_l2 = integrate(&a_vals, &w);
        let l2 = integrate(&l2_vals, &w);
        let (e1, e0, estar, etilde) = energy_family(&snap.u, &snap.v, ctx, params, snap.t)?;
        let shift = table.t0 + snap.t;
        rows.push(EnergyRecord {
            t: snap.t,
            e,
            a_l2,
            l2,
            e1,
            e0,
            estar,
            etilde,
            scaled_e: shift.powf(1.0 + ctx.lambda) * e,
            scaled_a_l2: shift.powf(ctx.lambda) * a_l2,
        });
    }
    Ok(rows)
}

/// Worst deviation over the run of the energy identity
/// `E(t) + int_0^t int a v^2 dmu ds = E(0)`.
pub fn energy_identity_residual(output: &RunOutput, params: &ModelParams, grid: &RadialGrid) -> f64 {
    if output.snapshots.is_empty() {
        return 0.0;
    }
    let e0 = energy_e(
        &output.snapshots[0].u,
        &output.snapshots[0].v,
        params,
        grid,
    );
    output
        .snapshots
        .iter()
        .zip(&output.dissipation)
        .map(|(snap, &d)| (energy_e(&snap.u, &snap.v, params, grid) + d - e0).abs())
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DampingProfile, Domain, Nonlinearity, Profile};
    use crate::solver::{run, RunConfig};
    use crate::weights::{build_table, WeightSettings};

    fn params(n: u32, alpha: f64, p: f64) -> ModelParams {
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
    fn zero_state_has_zero_functionals() {
        let p = params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 20.0, 256).unwrap();
        let z = vec![0.0; 256];
        assert_eq!(energy_e(&z, &z, &p, &grid), 0.0);
        let table = build_table(&p, &grid, &WeightSettings::default()).unwrap();
        let ctx = EnergyContext::theta(&table, 1.0).unwrap();
        let (e1, e0, estar, etilde) = energy_family(&z, &z, &ctx, &p, 0.0).unwrap();
        assert_eq!((e1, e0, estar, etilde), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn kinetic_only_data_gives_half_l2() {
        let p = params(1, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 10.0, 512).unwrap();
        let u = vec![0.0; 512];
        let v: Vec<f64> = grid.r.iter().map(|&r| bump(4.0, 2.0, 1.3).eval(r)).collect();
        let w = measure_weights(&grid, 1);
        let half_l2: Vec<f64> = v.iter().map(|&x| 0.5 * x * x).collect();
        assert_eq!(energy_e(&u, &v, &p, &grid), integrate(&half_l2, &w));
    }

    #[test]
    fn energy_quadrature_converges_second_order() {
        let p = params(1, 0.0, 2.0);
        let profile = bump(4.0, 2.0, 1.0);
        let eval = |len: usize| {
            let grid = RadialGrid::new(Domain::WholeSpace, 10.0, len).unwrap();
            let u: Vec<f64> = grid.r.iter().map(|&r| profile.eval(r)).collect();
            let v = vec![0.0; len];
            energy_e(&u, &v, &p, &grid)
        };
        let reference = eval(16384);
        let e1 = (eval(512) - reference).abs();
        let e2 = (eval(1024) - reference).abs();
        assert!(
            e1 / e2 >= 3.5,
            "quadrature errors {e1:e}, {e2:e} not second order"
        );
    }

    #[test]
    fn psi_family_lambda_zero_cross_term_is_flat() {
        // Phi_0 == 1 makes the E0 weight exactly one, so E0 reduces to the
        // unweighted cross integral.
        let p = params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 20.0, 512).unwrap();
        let table = build_table(&p, &grid, &WeightSettings::default()).unwrap();
        let ctx = EnergyContext::psi(&table, 0.0).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| bump(6.0, 3.0, 1.0).eval(r)).collect();
        let v: Vec<f64> = grid.r.iter().map(|&r| bump(5.0, 2.0, -0.4).eval(r)).collect();
        let (_, e0, _, _) = energy_family(&u, &v, &ctx, &p, 3.0).unwrap();
        let w = measure_weights(&grid, 3);
        let direct: Vec<f64> = (0..grid.len())
            .map(|i| 2.0 * u[i] * v[i] + table.a_nodes[i] * u[i] * u[i])
            .collect();
        let want = integrate(&direct, &w);
        assert!((e0 - want).abs() <= 1e-12 * want.abs().max(1.0), "{e0} vs {want}");
    }

    #[test]
    fn psi_context_rejects_mismatched_beta() {
        let p = params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 20.0, 128).unwrap();
        let table = build_table(&p, &grid, &WeightSettings::default()).unwrap();
        // Table has beta = 0 but lambda = 0.3 needs beta = 0.5.
        assert!(EnergyContext::psi(&table, 0.3).is_err());
        // Lambda pushing beta past gamma is refused even with a matching
        // table request.
        let settings = WeightSettings {
            beta: 2.0 / 0.6,
            ..WeightSettings::default()
        };
        let table2 = build_table(&p, &grid, &settings).unwrap();
        assert!(EnergyContext::psi(&table2, 2.0).is_err());
    }

    #[test]
    fn family_scales_are_comparable() {
        let p = params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 20.0, 512).unwrap();
        let table = build_table(&p, &grid, &WeightSettings::default()).unwrap();
        let lambda = 0.8;
        let psi_ctx = EnergyContext::theta(&table, lambda).unwrap();
        let theta_ctx = EnergyContext::theta(&table, lambda).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| bump(6.0, 3.0, 1.0).eval(r)).collect();
        let v = vec![0.0; grid.len()];
        let t = 2.0;
        // Node-wise Psi/Theta ratio bounds transfer to the E1 integrals.
        let kappa = lambda + p.alpha / (2.0 - p.alpha);
        let (lo, hi) = table.comparability_constants(&[t]);
        let psi_table_ctx = EnergyContext {
            kind: FamilyKind::Psi,
            ..psi_ctx
        };
        let (e1_psi, _, _, _) = energy_family(&u, &v, &psi_table_ctx, &p, t).unwrap();
        let (e1_theta, _, _, _) = energy_family(&u, &v, &theta_ctx, &p, t).unwrap();
        let ratio = e1_psi / e1_theta;
        assert!(
            ratio >= lo.powf(kappa) * 0.99 && ratio <= hi.powf(kappa) * 1.01,
            "ratio {ratio} outside [{}, {}]",
            lo.powf(kappa),
            hi.powf(kappa)
        );
    }

    #[test]
    fn estar_dominates_half_e1_along_a_run() {
        let p = params(3, 0.5, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 16.0, 512).unwrap();
        let table = build_table(&p, &grid, &WeightSettings::default()).unwrap();
        let ctx = EnergyContext::theta(&table, 1.0).unwrap();
        let data = InitialData {
            u0: bump(4.0, 2.0, 1.0),
            u1: bump(3.0, 1.0, -0.5),
        };
        let config = RunConfig {
            t_final: 8.0,
            record_every: 50,
            ..RunConfig::default()
        };
        let out = run(&p, &grid, &data, &config).unwrap();
        for snap in &out.snapshots {
            let gap = estar_gap(&snap.u, &snap.v, &ctx, &p, snap.t).unwrap();
            let (e1, _, _, _) = energy_family(&snap.u, &snap.v, &ctx, &p, snap.t).unwrap();
            assert!(
                gap >= -1e-10 * (e1.abs() + 1.0),
                "gap {gap:e} at t = {}",
                snap.t
            );
        }
    }

    #[test]
    fn energy_identity_residual_converges() {
        // Linear constant-damping run: the identity defect is quadrature
        // plus time discretization, both second order, so halving h and dt
        // together shrinks it by about four.
        let mut p = params(1, 0.0, 3.0);
        p.damping = DampingProfile::Constant;
        p.nonlinearity = Nonlinearity::Off;
        let residual = |len: usize| {
            let grid = RadialGrid::new(Domain::WholeSpace, 14.0, len).unwrap();
            let data = InitialData {
                u0: bump(4.0, 2.0, 1.0),
                u1: bump(3.0, 1.0, 0.5),
            };
            let config = RunConfig {
                t_final: 6.0,
                record_every: 10,
                ..RunConfig::default()
            };
            let out = run(&p, &grid, &data, &config).unwrap();
            energy_identity_residual(&out, &p, &grid)
        };
        let r1 = residual(512);
        let r2 = residual(1024);
        assert!(
            r1 / r2 >= 1.8,
            "identity residuals {r1:e}, {r2:e} converge too slowly"
        );
    }

    #[test]
    fn undamped_nonlinear_energy_is_conserved() {
        let mut p = params(1, 0.0, 3.0);
        p.damping = DampingProfile::Off;
        p.a0 = 0.0;
        p.a1 = 0.0;
        let drift = |len: usize| {
            let grid = RadialGrid::new(Domain::WholeSpace, 14.0, len).unwrap();
            let data = InitialData {
                u0: bump(4.0, 2.0, 1.0),
                u1: Profile::Zero,
            };
            let config = RunConfig {
                t_final: 6.0,
                record_every: 20,
                ..RunConfig::default()
            };
            let out = run(&p, &grid, &data, &config).unwrap();
            energy_identity_residual(&out, &p, &grid)
        };
        let d1 = drift(512);
        let d2 = drift(1024);
        assert!(d1 < 1e-2, "conservation drift {d1:e}");
        assert!(d1 / d2 >= 3.0, "drift not converging: {d1:e} vs {d2:e}");
    }

    #[test]
    fn i0_reduces_to_plain_norm_without_weights() {
        let p = params(1, 0.0, 2.0);
        let grid = RadialGrid::new(Domain::WholeSpace, 12.0, 1024).unwrap();
        let data = InitialData {
            u0: bump(4.0, 2.0, 1.0),
            u1: bump(3.0, 1.0, 0.7),
        };
        let got = i0_norm(&data, &p, &grid).unwrap();
        let u0: Vec<f64> = grid.r.iter().map(|&r| data.u0.eval(r)).collect();
        let u1: Vec<f64> = grid.r.iter().map(|&r| data.u1.eval(r)).collect();
        let du0 = radial_gradient(&u0, grid.h);
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| {
                u1[i] * u1[i]
                    + du0[i] * du0[i]
                    + abs_pow(u0[i], 3.0)
                    + u0[i] * u0[i]
            })
            .collect();
        let w = measure_weights(&grid, 1);
        let want = integrate(&vals, &w);
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn i0_warns_on_divergent_tail() {
        let mut p = params(1, 0.0, 2.0);
        p.lambda = 2.0;
        let grid = RadialGrid::new(Domain::WholeSpace, 30.0, 256).unwrap();
        let data = InitialData {
            u0: Profile::PolyDecay {
                q: 1.0,
                amplitude: 1.0,
            },
            u1: Profile::Zero,
        };
        assert!(matches!(
            i0_norm(&data, &p, &grid),
            Err(Error::DivergenceWarning(_))
        ));
    }
}
