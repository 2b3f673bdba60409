//! Decay-rate classification for the damped semilinear wave model.
//!
//! The classifier sorts a parameter point `(n, alpha, p, lambda)` into one
//! of seven regimes. The weighted energy decays like
//! `(1+t)^{-mu} (log(2+t))^{log_power}` with
//!
//! ```text
//!     mu1 = (4/(2-alpha)) (1/(p-1) - (n-alpha)/4)
//!     mu2 = 2/(p-1)
//! ```
//!
//! as the two candidate saturation exponents. Their order flips at the
//! damping-critical exponent `p_subc = 1 + 2 alpha/(n-alpha)`, and the
//! flat-weight case caps the rate at `lambda` itself as long as
//! `lambda < (n-alpha)/(2-alpha)`.
//!
//! The remainder-integral growth table and its quadrature live here too:
//! the nonlinear remainder `int_0^t int a^q Theta^{lambda-q} dmu ds` with
//! `q = (p+1)/(p-1)` grows at rates that mirror the classifier branches,
//! which is what stops the energy bootstrap from improving past them.

use crate::discrete::measure_weights;
use crate::error::{Error, Result};
use crate::model::{damping_at, jbracket, ModelParams, RadialGrid};
use rayon::prelude::*;

/// Relative equality test used for boundary detection.
fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Damping-critical exponent `1 + 2 alpha/(n - alpha)`.
pub fn p_subc(n: u32, alpha: f64) -> f64 {
    1.0 + 2.0 * alpha / (f64::from(n) - alpha)
}

/// Fujita exponent `1 + 2/d` of effective dimension d.
pub fn p_fujita(d: f64) -> f64 {
    1.0 + 2.0 / d
}

/// First saturation exponent; negative once p passes the Fujita exponent
/// of the effective dimension `n - alpha`.
pub fn mu_one(params: &ModelParams) -> f64 {
    let d = f64::from(params.n) - params.alpha;
    (4.0 / (2.0 - params.alpha)) * (1.0 / (params.p - 1.0) - d / 4.0)
}

/// Second saturation exponent `2/(p-1)`.
pub fn mu_two(params: &ModelParams) -> f64 {
    2.0 / (params.p - 1.0)
}

/// Largest admissible flat-weight power `(n - alpha)/(2 - alpha)`.
pub fn lambda_limit(params: &ModelParams) -> f64 {
    (f64::from(params.n) - params.alpha) / (2.0 - params.alpha)
}

/// Which estimate the theorem applies at the given point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremCase {
    /// Flat-weight bound, valid for `lambda < (n-alpha)/(2-alpha)`.
    I,
    /// Space-time-weight bound, valid for any `lambda >= 0`.
    II,
}

/// The seven classification regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayRegion {
    CaseI,
    /// `lambda < min(mu1, mu2)`: the requested rate is attained.
    Branch1,
    /// `lambda = min(mu1, mu2)`, single critical value: one log factor.
    Branch2,
    /// `lambda = mu1 = mu2`, double critical value: two log factors.
    Branch3,
    /// `lambda > mu1` above the damping-critical exponent: rate `mu1`.
    Branch4,
    /// `lambda > mu2` at the damping-critical exponent: rate `mu2`, log.
    Branch5,
    /// `lambda > mu2` below the damping-critical exponent: rate `mu2`.
    Branch6,
}

impl std::fmt::Display for DecayRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DecayRegion::CaseI => "case-i",
            DecayRegion::Branch1 => "branch-1",
            DecayRegion::Branch2 => "branch-2",
            DecayRegion::Branch3 => "branch-3",
            DecayRegion::Branch4 => "branch-4",
            DecayRegion::Branch5 => "branch-5",
            DecayRegion::Branch6 => "branch-6",
        };
        f.write_str(name)
    }
}

/// Predicted decay rate `(1+t)^{-mu} (log(2+t))^{log_power}` for the
/// weighted energy, with the companion unweighted-L2 exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPrediction {
    pub region: DecayRegion,
    /// Stated exponent of the applied estimate. In the saturated zone of
    /// branch 4 this is mu1 itself, possibly nonpositive; see `alt_mu`.
    pub mu: f64,
    pub log_power: u32,
    /// True when the flat-weight estimate beats the branch-4 exponent
    /// (p past the Fujita exponent of dimension n - alpha).
    pub saturated: bool,
    /// The competing flat-weight exponent `min(lambda, (n-alpha)/(2-alpha))`,
    /// reported only when it beats `mu`.
    pub alt_mu: Option<f64>,
    /// Unweighted-L2 exponent `mu - alpha/(2-alpha)`, same log power.
    pub l2_mu: f64,
}

fn prediction(
    params: &ModelParams,
    region: DecayRegion,
    mu: f64,
    log_power: u32,
    saturated: bool,
    alt_mu: Option<f64>,
) -> DecayPrediction {
    DecayPrediction {
        region,
        mu,
        log_power,
        saturated,
        alt_mu,
        l2_mu: mu - params.alpha / (2.0 - params.alpha),
    }
}

/// Classify a parameter point under the requested estimate.
pub fn predict_decay(params: &ModelParams, case: TheoremCase) -> Result<DecayPrediction> {
    let lambda = params.lambda;
    match case {
        TheoremCase::I => {
            let limit = lambda_limit(params);
            if lambda >= limit {
                return Err(Error::CaseIRange { lambda, limit });
            }
            Ok(prediction(params, DecayRegion::CaseI, lambda, 0, false, None))
        }
        TheoremCase::II => {
            let mu1 = mu_one(params);
            let mu2 = mu_two(params);
            let floor = mu1.min(mu2);
            let critical = approx_eq(mu1, mu2);
            if approx_eq(lambda, floor) {
                return Ok(if critical {
                    prediction(params, DecayRegion::Branch3, lambda, 2, false, None)
                } else {
                    prediction(params, DecayRegion::Branch2, lambda, 1, false, None)
                });
            }
            if lambda < floor {
                return Ok(prediction(params, DecayRegion::Branch1, lambda, 0, false, None));
            }
            if critical {
                return Ok(prediction(params, DecayRegion::Branch5, mu2, 1, false, None));
            }
            if mu1 < mu2 {
                // Above the damping-critical exponent the rate saturates at
                // mu1, which loses to the flat-weight estimate once p
                // passes the Fujita exponent. Report both rather than
                // silently picking.
                let alt = lambda.min(lambda_limit(params));
                let saturated = alt > mu1 + 1e-12 * alt.abs().max(1.0);
                let alt_mu = saturated.then_some(alt);
                return Ok(prediction(
                    params,
                    DecayRegion::Branch4,
                    mu1,
                    0,
                    saturated,
                    alt_mu,
                ));
            }
            Ok(prediction(params, DecayRegion::Branch6, mu2, 0, false, None))
        }
    }
}

/// Growth rate `(t0+t)^{exponent} (log(t0+t))^{log_power}` of the
/// remainder integral, constants suppressed. Bounded rows return (0, 0).
pub fn badterm_growth(params: &ModelParams) -> (f64, u32) {
    let lambda = params.lambda;
    let mu1 = mu_one(params);
    let mu2 = mu_two(params);
    let floor = mu1.min(mu2);
    let critical = approx_eq(mu1, mu2);
    if approx_eq(lambda, floor) {
        return if critical { (0.0, 2) } else { (0.0, 1) };
    }
    if lambda < floor {
        return (0.0, 0);
    }
    if critical {
        return (lambda - mu2, 1);
    }
    if mu1 < mu2 {
        return (lambda - mu1, 0);
    }
    (lambda - mu2, 0)
}

/// Log-spaced time nodes in `(start, end]`, uniform in `log(t0+s)`.
fn s_mesh(t0: f64, start: f64, end: f64, per_decade: usize) -> Vec<f64> {
    let l0 = (t0 + start).ln();
    let l1 = (t0 + end).ln();
    let decades = (l1 - l0) / std::f64::consts::LN_10;
    let m = ((decades * per_decade as f64).ceil() as usize).max(2);
    let mut nodes = Vec::with_capacity(m);
    for j in 1..=m {
        let s = (l0 + (l1 - l0) * j as f64 / m as f64).exp() - t0;
        nodes.push(if j == m { end } else { s });
    }
    nodes
}

/// Space slice `int_Omega a^q Theta(s)^{lambda-q} dmu` of the remainder.
fn badterm_slice(
    a_pow: &[f64],
    bracket_pow: &[f64],
    weights: &[f64],
    exponent: f64,
    t0: f64,
    s: f64,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..a_pow.len() {
        let theta = t0 + s + bracket_pow[i];
        sum += weights[i] * a_pow[i] * theta.powf(exponent);
    }
    sum
}

/// Cumulative remainder integral at each checkpoint time.
///
/// One pass over a mesh that is log-spaced in `t0+s` and hits every
/// checkpoint exactly; the space factor uses the radial measure, the time
/// factor a trapezoid. Checkpoints must be increasing and positive.
pub fn badterm_checkpoints(
    params: &ModelParams,
    grid: &RadialGrid,
    t0: f64,
    checkpoints: &[f64],
) -> Vec<f64> {
    assert!(t0 >= 1.0, "t0 = {t0} must be at least 1");
    assert!(
        checkpoints.windows(2).all(|w| w[0] < w[1]) && checkpoints.first().is_none_or(|&c| c > 0.0),
        "checkpoints must be positive and increasing"
    );
    let q = (params.p + 1.0) / (params.p - 1.0);
    let exponent = params.lambda - q;
    let weights = measure_weights(grid, params.n);
    let a_pow: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| damping_at(params, r).powf(q))
        .collect();
    let bracket_pow: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| jbracket(r).powf(2.0 - params.alpha))
        .collect();

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut prev_s = 0.0;
    let mut prev_f = badterm_slice(&a_pow, &bracket_pow, &weights, exponent, t0, 0.0);
    for &cp in checkpoints {
        let nodes = s_mesh(t0, prev_s, cp, 120);
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|&s| badterm_slice(&a_pow, &bracket_pow, &weights, exponent, t0, s))
            .collect();
        for (&s, &f) in nodes.iter().zip(&values) {
            acc += 0.5 * (s - prev_s) * (prev_f + f);
            prev_s = s;
            prev_f = f;
        }
        out.push(acc);
    }
    out
}

/// Remainder integral `int_0^t int_Omega a^q Theta^{lambda-q} dmu ds`.
pub fn badterm_quadrature(params: &ModelParams, grid: &RadialGrid, t0: f64, t: f64) -> f64 {
    badterm_checkpoints(params, grid, t0, &[t])[0]
}

/// Least-squares slope of `log(value/log^power)` against `log(t0+t)`.
pub fn badterm_slope(t0: f64, checkpoints: &[f64], values: &[f64], log_power: u32) -> Result<f64> {
    if checkpoints.len() != values.len() || checkpoints.len() < 2 {
        return Err(Error::Window(format!(
            "need at least two checkpoints, got {}",
            checkpoints.len()
        )));
    }
    let mut xs = Vec::with_capacity(values.len());
    let mut ys = Vec::with_capacity(values.len());
    for (&t, &v) in checkpoints.iter().zip(values) {
        let shifted = t0 + t;
        let corrected = v / shifted.ln().powi(log_power as i32);
        if corrected <= 0.0 {
            return Err(Error::Window(format!(
                "nonpositive corrected value {corrected} at t = {t}"
            )));
        }
        xs.push(shifted.ln());
        ys.push(corrected.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
