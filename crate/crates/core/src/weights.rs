//! Construction of the damping potential `A_eps` and the space-time
//! weights built on it.
//!
//! `A_eps` is a positive radial function whose Laplacian reproduces the
//! damping coefficient up to a relative error eps:
//!
//! ```text
//!     (A1)  (1-eps) a(x) <= Laplace(A_eps)(x) <= (1+eps) a(x)
//!     (A2)  c <x>^{2-alpha} <= A_eps(x) <= C <x>^{2-alpha}
//!     (A3)  |grad A_eps|^2 <= ((2-alpha)/(n-alpha) + eps) a(x) A_eps(x)
//! ```
//!
//! It is assembled as `A_eps = A_0 + base + w` where
//! `base = a0 <r>^{2-alpha} / ((n-alpha)(2-alpha))` has
//! `Laplace(base) = b1 := a0 <r>^{-alpha} + a0 alpha/(n-alpha) <r>^{-alpha-2}`,
//! and `w` is the Newton-potential correction solving
//! `Laplace(w) = eta b2` with `b2 = a - b1` and `eta` a C^2 cutoff equal to
//! 1 where `|b2| > eps a` can occur. The additive constant `A_0` is doubled
//! until (A3) holds.
//!
//! On top of `A_eps` sit three weights used by the energy functionals:
//!
//! ```text
//!     Psi   = t0 + t + A_eps(r)
//!     Theta = t0 + t + <r>^{2-alpha}
//!     Phi   = (t0+t)^{-beta} phi_{beta,eps}( gamma_tilde A_eps(r) / (t0+t) )
//! ```
//!
//! `Phi` is a supersolution of the damped heat operator:
//! `a dPhi/dt - Laplace(Phi) >= c a Psi^{-beta-1}` for beta > 0.

use crate::discrete::{integrate, measure_weights, radial_gradient, radial_laplacian};
use crate::error::{Error, Result};
use crate::kummer::PhiParams;
use crate::model::{damping_at, jbracket, ModelParams, RadialGrid};

/// Tunables of the weight construction.
#[derive(Debug, Clone, Copy)]
pub struct WeightSettings {
    /// Relative tolerance of (A1)/(A3), in (0, 1/2).
    pub epsilon: f64,
    /// Interpolation parameter of the flat-weight energy, in (0, 1/2).
    pub delta: f64,
    /// Time shift of all weights, at least 1.
    pub t0: f64,
    /// Coupling of the cross term in the combined energy; None selects
    /// `0.01 * min_i a(r_i) * min(1, t0^{-alpha/(2-alpha)})`.
    pub nu: Option<f64>,
    /// Profile index of Phi; 0 makes Phi identically one.
    pub beta: f64,
}

impl Default for WeightSettings {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.2,
            t0: 10.0,
            nu: None,
            beta: 0.0,
        }
    }
}

/// Nodal tables of `A_eps` and everything derived from it.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub grid: RadialGrid,
    /// Damping coefficient at the nodes.
    pub a_nodes: Vec<f64>,
    /// `A_eps` at the nodes.
    pub a_vals: Vec<f64>,
    /// Radial derivative of `A_eps`, from the quadrature (all nodes).
    pub a_grad: Vec<f64>,
    /// Discrete radial Laplacian of `a_vals` (end nodes replicated).
    pub a_lap: Vec<f64>,
    /// Cutoff `eta` at the nodes.
    pub eta_vals: Vec<f64>,
    /// Newton-potential correction `w` at the nodes.
    pub w_vals: Vec<f64>,
    pub phi: PhiParams,
    pub epsilon: f64,
    pub delta: f64,
    pub t0: f64,
    pub nu: f64,
    pub beta: f64,
    pub alpha: f64,
    pub n: u32,
    /// Radius beyond which `|b2| <= eps a`; the cutoff ends at twice this.
    pub r_eps: f64,
    /// Additive constant `A_0` after the doubling loop.
    pub a_floor: f64,
}

/// `Laplace(base)`: the part of the damping reproduced in closed form.
fn b1_profile(params: &ModelParams, r: f64) -> f64 {
    let na = params.n as f64 - params.alpha;
    let j = jbracket(r);
    params.a0 * j.powf(-params.alpha) + params.a0 * params.alpha / na * j.powf(-params.alpha - 2.0)
}

fn base_profile(params: &ModelParams, r: f64) -> f64 {
    let na = params.n as f64 - params.alpha;
    params.a0 * jbracket(r).powf(2.0 - params.alpha) / (na * (2.0 - params.alpha))
}

fn base_gradient(params: &ModelParams, r: f64) -> f64 {
    let na = params.n as f64 - params.alpha;
    params.a0 * r * jbracket(r).powf(-params.alpha) / na
}

/// C^2 cutoff: 1 on [0, r_eps], quintic smoothstep down to 0 at 2 r_eps.
fn eta_cutoff(r: f64, r_eps: f64) -> f64 {
    if r_eps <= 0.0 {
        return 0.0;
    }
    if r <= r_eps {
        1.0
    } else if r >= 2.0 * r_eps {
        0.0
    } else {
        let x = (r - r_eps) / r_eps;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// `int_r^{r+h} s^k ds` in expanded, cancellation-free form, k = n-1 or n.
fn monomial_cell(k: u32, r: f64, h: f64) -> f64 {
    match k {
        0 => h,
        1 => h * (r + h / 2.0),
        2 => h * (r * r + r * h + h * h / 3.0),
        3 => h * (r * r * r + 1.5 * r * r * h + r * h * h + h * h * h / 4.0),
        _ => unreachable!("dimension limited to 3"),
    }
}

/// `int_r^{r+h} s^{n-1} f(s) ds` with f interpolated linearly on the cell.
/// Exact in the measure factor, so the radial degeneracy at the origin
/// introduces no quadrature defect.
fn measure_cell(n: u32, r: f64, h: f64, f_lo: f64, f_hi: f64) -> f64 {
    let slope = (f_hi - f_lo) / h;
    let mk = monomial_cell(n - 1, r, h);
    let mk1 = monomial_cell(n, r, h);
    f_lo * mk + slope * (mk1 - r * mk)
}

/// Solves the radial Poisson problem `Laplace(w) = rhs` by two nested
/// quadratures, `w'(r) = r^{1-n} int_0^r s^{n-1} rhs ds` and
/// `w(r) = int_0^r w'`, reporting values and derivatives at `targets`.
/// `targets` must be increasing and start at the first quadrature node.
fn radial_poisson(
    n: u32,
    rhs: impl Fn(f64) -> f64,
    aux: &[f64],
    targets: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut w = Vec::with_capacity(targets.len());
    let mut wp = Vec::with_capacity(targets.len());
    let mut i1 = 0.0f64;
    let mut w_acc = 0.0f64;
    let start = aux.first().copied().unwrap_or(targets[0]);
    let mut prev_r = start;
    let mut prev_f = rhs(prev_r);
    let mut prev_wp = 0.0f64;
    let mut push_if_target = |r: f64, w_val: f64, wp_val: f64| {
        if w.len() < targets.len() && (r - targets[w.len()]).abs() <= 1e-9 * (1.0 + r) {
            w.push(w_val);
            wp.push(wp_val);
        }
    };
    push_if_target(prev_r, 0.0, prev_wp);
    for &r in aux
        .iter()
        .skip(1)
        .chain(targets.iter().skip_while(move |&&t| t <= start))
    {
        let h = r - prev_r;
        if h <= 0.0 {
            continue;
        }
        let f = rhs(r);
        i1 += measure_cell(n, prev_r, h, prev_f, f);
        let wp_here = if r == 0.0 {
            0.0
        } else {
            i1 / r.powi(n as i32 - 1)
        };
        w_acc += 0.5 * h * (prev_wp + wp_here);
        push_if_target(r, w_acc, wp_here);
        prev_r = r;
        prev_f = f;
        prev_wp = wp_here;
    }
    (w, wp)
}

/// Builds the full weight table for one model on one grid.
pub fn build_table(
    params: &ModelParams,
    grid: &RadialGrid,
    settings: &WeightSettings,
) -> Result<WeightTable> {
    let WeightSettings {
        epsilon,
        delta,
        t0,
        nu,
        beta,
    } = *settings;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon = {epsilon} not in (0, 1/2)")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!("delta = {delta} not in (0, 1/2)")));
    }
    if !(t0 >= 1.0) {
        return Err(Error::Domain(format!("t0 = {t0} must be at least 1")));
    }
    let phi = PhiParams::new(params.n, params.alpha, epsilon, beta)?;
    let n = params.n;
    let nf = n as f64;
    let alpha = params.alpha;

    let a_nodes: Vec<f64> = grid.r.iter().map(|&r| damping_at(params, r)).collect();

    // Radius past which |b2| = |a - b1| is guaranteed below eps * a.  For
    // the power law, b2/a = -(alpha/(n-alpha)) <r>^{-2}.
    let ratio0 = alpha / (nf - alpha);
    let r_eps = if ratio0 <= epsilon {
        0.0
    } else {
        (ratio0 / epsilon - 1.0).sqrt()
    };
    if 2.0 * r_eps > 0.9 * grid.r_max {
        return Err(Error::ConstructionFailure(format!(
            "cutoff support [0, {:.3}] does not fit inside the grid radius {}; \
             increase r_max or epsilon",
            2.0 * r_eps,
            grid.r_max
        )));
    }

    let eta_vals: Vec<f64> = grid.r.iter().map(|&r| eta_cutoff(r, r_eps)).collect();

    // Quadrature chain from the origin: the grid itself for whole space,
    // else a uniform prefix [0, r_min] glued to the grid nodes.
    let aux: Vec<f64> = if grid.r_min == 0.0 {
        Vec::new()
    } else {
        let cells = (grid.r_min / grid.h).ceil().max(1.0) as usize;
        let ha = grid.r_min / cells as f64;
        (0..=cells).map(|i| i as f64 * ha).collect()
    };
    let rhs = |r: f64| {
        let b2 = damping_at(params, r) - b1_profile(params, r);
        eta_cutoff(r, r_eps) * b2
    };
    let (mut w_vals, w_grad) = radial_poisson(n, rhs, &aux, &grid.r);
    debug_assert_eq!(w_vals.len(), grid.len());
    // Normalize the correction to vanish at the outer radius.
    let w_far = *w_vals.last().unwrap();
    for w in &mut w_vals {
        *w -= w_far;
    }

    let mut a_floor = 1.0f64;
    let mut a_vals: Vec<f64> = grid
        .r
        .iter()
        .zip(&w_vals)
        .map(|(&r, &w)| a_floor + base_profile(params, r) + w)
        .collect();
    let a_grad: Vec<f64> = grid
        .r
        .iter()
        .zip(&w_grad)
        .map(|(&r, &wp)| base_gradient(params, r) + wp)
        .collect();

    // Grow the additive constant until the gradient inequality (A3) holds.
    let a3_bound = (2.0 - alpha) / (nf - alpha) + epsilon;
    let max_floor = (1u64 << 40) as f64;
    loop {
        if a_vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::ConstructionFailure(
                "A_eps not positive; Newton correction dominates the base".into(),
            ));
        }
        let a3_max = a_vals
            .iter()
            .zip(&a_grad)
            .zip(&a_nodes)
            .map(|((&av, &gv), &an)| gv * gv / (an * av))
            .fold(0.0f64, f64::max);
        if a3_max <= a3_bound {
            break;
        }
        if a_floor >= max_floor {
            return Err(Error::ConstructionFailure(format!(
                "gradient bound still {a3_max:.6} > {a3_bound:.6} with additive \
                 constant {a_floor:e}; grid too coarse or epsilon too small"
            )));
        }
        for v in &mut a_vals {
            *v += a_floor;
        }
        a_floor *= 2.0;
    }

    let a_lap = radial_laplacian(&a_vals, grid, n);

    let a_min = a_nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let nu = nu.unwrap_or_else(|| {
        0.01 * a_min * 1.0f64.min(t0.powf(-alpha / (2.0 - alpha)))
    });

    Ok(WeightTable {
        grid: grid.clone(),
        a_nodes,
        a_vals,
        a_grad,
        a_lap,
        eta_vals,
        w_vals,
        phi,
        epsilon,
        delta,
        t0,
        nu,
        beta,
        alpha,
        n,
        r_eps,
        a_floor,
    })
}

/// Summary of how well the construction inequalities hold on the grid.
#[derive(Debug, Clone, Copy)]
pub struct WeightReport {
    /// min and max over interior nodes of `Laplace_h(A_eps) / a`.
    pub a1_min: f64,
    pub a1_max: f64,
    /// min and max over all nodes of `A_eps / <r>^{2-alpha}`.
    pub a2_min: f64,
    pub a2_max: f64,
    /// max over all nodes of `|A_eps'|^2 / (a A_eps)`.
    pub a3_max: f64,
    pub a3_bound: f64,
}

impl WeightTable {
    /// `Psi = t0 + t + A_eps(r_i)`.
    pub fn psi_eval(&self, i: usize, t: f64) -> f64 {
        self.t0 + t + self.a_vals[i]
    }

    /// `Theta = t0 + t + <r_i>^{2-alpha}`.
    pub fn theta_eval(&self, i: usize, t: f64) -> f64 {
        self.t0 + t + jbracket(self.grid.r[i]).powf(2.0 - self.alpha)
    }

    /// Profile argument `z = gamma_tilde A_eps(r_i) / (t0 + t)`.
    fn z_arg(&self, i: usize, t: f64) -> f64 {
        self.phi.gamma_tilde * self.a_vals[i] / (self.t0 + t)
    }

    /// `Phi = (t0+t)^{-beta} phi_beta(z)`; identically 1 for beta = 0.
    pub fn phi_weight_eval(&self, i: usize, t: f64) -> Result<f64> {
        Ok((self.t0 + t).powf(-self.beta) * self.phi.phi(self.z_arg(i, t))?)
    }

    pub fn phi_weight_nodes(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.grid.len()).map(|i| self.phi_weight_eval(i, t)).collect()
    }

    /// Time derivative of Phi through the index-raising identity
    /// `dPhi/dt = -beta Phi_{beta+1}`.
    pub fn dt_phi_raised(&self, i: usize, t: f64) -> Result<f64> {
        if self.beta == 0.0 {
            return Ok(0.0);
        }
        let up = self.phi.raise_beta();
        let z = self.z_arg(i, t);
        Ok(-self.beta * (self.t0 + t).powf(-self.beta - 1.0) * up.phi(z)?)
    }

    /// Time derivative of Phi differentiated directly:
    /// `dPhi/dt = -(t0+t)^{-beta-1} (beta phi(z) + z phi'(z))`.
    pub fn dt_phi_chain(&self, i: usize, t: f64) -> Result<f64> {
        let z = self.z_arg(i, t);
        let val = self.beta * self.phi.phi(z)? + z * self.phi.phi_prime(z)?;
        Ok(-(self.t0 + t).powf(-self.beta - 1.0) * val)
    }

    /// Node-wise supersolution ratio
    /// `(a dPhi/dt - Laplace_h(Phi)) / (a Psi^{-beta-1})`.
    ///
    /// End entries replicate their neighbors (as the discrete Laplacian
    /// does); assertions should look at interior nodes. Positivity of the
    /// interior minimum is the discrete form of the supersolution bound.
    pub fn supersolution_residual(&self, t: f64) -> Result<Vec<f64>> {
        let phi_nodes = self.phi_weight_nodes(t)?;
        let lap = radial_laplacian(&phi_nodes, &self.grid, self.n);
        let mut out = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.len() {
            let lhs = self.a_nodes[i] * self.dt_phi_raised(i, t)? - lap[i];
            let scale = self.a_nodes[i] * self.psi_eval(i, t).powf(-self.beta - 1.0);
            out.push(lhs / scale);
        }
        let last = out.len() - 1;
        if !self.grid.origin_node {
            out[0] = out[1];
        }
        out[last] = out[last - 1];
        Ok(out)
    }

    /// Analytic counterpart of `a dPhi/dt - Laplace(Phi)` from the chain
    /// rule and the profile equation:
    ///
    /// ```text
    ///     a (t0+t)^{-beta-1} [ gamma_tilde (1 - 2 eps - Lap(A)/a) phi'(z)
    ///                          + (1 - gamma_tilde |A'|^2/(a A)) z phi''(z) ]
    /// ```
    ///
    /// with `Lap(A) = b1 + eta b2` exact. Used as the oracle for the
    /// discrete residual.
    pub fn supersolution_chain_oracle(&self, params: &ModelParams, t: f64) -> Result<Vec<f64>> {
        let gt = self.phi.gamma_tilde;
        let mut out = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.len() {
            let r = self.grid.r[i];
            let a = self.a_nodes[i];
            let z = self.z_arg(i, t);
            let lap_a = b1_profile(params, r) + self.eta_vals[i] * (a - b1_profile(params, r));
            let grad_q = self.a_grad[i] * self.a_grad[i] / (a * self.a_vals[i]);
            let val = gt * (1.0 - 2.0 * self.epsilon - lap_a / a) * self.phi.phi_prime(z)?
                + (1.0 - gt * grad_q) * z * self.phi.phi_second(z)?;
            out.push(a * (self.t0 + t).powf(-self.beta - 1.0) * val);
        }
        Ok(out)
    }

    /// Discrete form of the flat-weight integration-by-parts inequality:
    /// for compactly supported u and 0 < delta < 1/2,
    ///
    /// ```text
    ///     int u Lap(u) Phi^{-1+2d} dmu
    ///       <= -d/(1-d) int |u'|^2 Phi^{-1+2d} dmu
    ///          + (1-2d)/2 int u^2 Lap(Phi) Phi^{-2+2d} dmu
    /// ```
    ///
    /// Returns (lhs, rhs); the discrete defect is O(h).
    pub fn delta_phi_inequality_check(&self, u: &[f64], t: f64) -> Result<(f64, f64)> {
        let len = self.grid.len();
        if u.len() != len {
            return Err(Error::Config(format!(
                "profile length {} does not match grid {}",
                u.len(),
                len
            )));
        }
        for &i in &[0usize, 1, len - 2, len - 1] {
            if u[i] != 0.0 {
                return Err(Error::Support(format!(
                    "test profile must vanish within two nodes of the boundary; u[{i}] = {}",
                    u[i]
                )));
            }
        }
        let delta = self.delta;
        let w = measure_weights(&self.grid, self.n);
        let phi_nodes = self.phi_weight_nodes(t)?;
        let lap_u = radial_laplacian(u, &self.grid, self.n);
        let lap_phi = radial_laplacian(&phi_nodes, &self.grid, self.n);
        let grad_u = radial_gradient(u, self.grid.h);

        let lhs_vals: Vec<f64> = (0..len)
            .map(|i| u[i] * lap_u[i] * phi_nodes[i].powf(-1.0 + 2.0 * delta))
            .collect();
        let grad_vals: Vec<f64> = (0..len)
            .map(|i| grad_u[i] * grad_u[i] * phi_nodes[i].powf(-1.0 + 2.0 * delta))
            .collect();
        let mass_vals: Vec<f64> = (0..len)
            .map(|i| u[i] * u[i] * lap_phi[i] * phi_nodes[i].powf(-2.0 + 2.0 * delta))
            .collect();
        let lhs = integrate(&lhs_vals, &w);
        let rhs = -delta / (1.0 - delta) * integrate(&grad_vals, &w)
            + (1.0 - 2.0 * delta) / 2.0 * integrate(&mass_vals, &w);
        Ok((lhs, rhs))
    }

    /// Pointwise comparability of the two time-space weights over the
    /// sampled times: returns (min, max) of `Psi / Theta`. Both are
    /// positive and finite for power-law damping; the constants themselves
    /// are grid-dependent and only reported.
    pub fn comparability_constants(&self, times: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in times {
            for i in 0..self.grid.len() {
                let q = self.psi_eval(i, t) / self.theta_eval(i, t);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        (lo, hi)
    }

    /// Evaluates the construction inequalities on the grid.
    pub fn invariant_report(&self) -> WeightReport {
        let len = self.grid.len();
        let mut a1_min = f64::INFINITY;
        let mut a1_max = f64::NEG_INFINITY;
        for i in 1..len - 1 {
            let q = self.a_lap[i] / self.a_nodes[i];
            a1_min = a1_min.min(q);
            a1_max = a1_max.max(q);
        }
        if self.grid.origin_node {
            let q = self.a_lap[0] / self.a_nodes[0];
            a1_min = a1_min.min(q);
            a1_max = a1_max.max(q);
        }
        let mut a2_min = f64::INFINITY;
        let mut a2_max = f64::NEG_INFINITY;
        let mut a3_max = 0.0f64;
        for i in 0..len {
            let scale = jbracket(self.grid.r[i]).powf(2.0 - self.alpha);
            let q = self.a_vals[i] / scale;
            a2_min = a2_min.min(q);
            a2_max = a2_max.max(q);
            let g = self.a_grad[i];
            a3_max = a3_max.max(g * g / (self.a_nodes[i] * self.a_vals[i]));
        }
        WeightReport {
            a1_min,
            a1_max,
            a2_min,
            a2_max,
            a3_max,
            a3_bound: (2.0 - self.alpha) / (self.n as f64 - self.alpha) + self.epsilon,
        }
    }

    /// Exact Laplacian of the constructed potential, `b1 + eta b2`.
    pub fn analytic_lap(&self, params: &ModelParams) -> Vec<f64> {
        self.grid
            .r
            .iter()
            .zip(&self.eta_vals)
            .map(|(&r, &eta)| {
                let b1 = b1_profile(params, r);
                b1 + eta * (damping_at(params, r) - b1)
            })
            .collect()
    }
}
