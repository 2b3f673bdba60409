//! Model description: equation parameters, radial grids, initial data.
//!
//! The equation under study is the damped semilinear wave equation
//!
//! ```text
//!     u_tt - Laplace(u) + a(x) u_t + |u|^{p-1} u = 0
//! ```
//!
//! on a radially symmetric domain (whole space, or the exterior of a ball
//! with Dirichlet boundary), with space-dependent damping
//! `a(x) = a0 <x>^{-alpha}` where `<x> = sqrt(1 + |x|^2)`.
//! Radial symmetry reduces everything to functions of `r = |x|` and the
//! measure `omega_n r^{n-1} dr`.

use crate::error::{Error, Result};

/// Smoothed radius weight `<r> = sqrt(1 + r^2)`.
#[inline]
pub fn jbracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// Spatial domain of the radial problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// All of R^n; the origin is a regular grid node with even symmetry.
    WholeSpace,
    /// Exterior of the ball of radius `r0` with homogeneous Dirichlet data.
    ExteriorBall { r0: f64 },
}

/// Shape of the damping coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingProfile {
    /// `a(r) = a0 <r>^{-alpha}`.
    PowerLaw,
    /// `a(r) = a0`; only meaningful together with `alpha = 0`.
    Constant,
    /// `a(r) = 0`: the free wave equation. Outside the theory's damping
    /// hypotheses; exists for the solver's closed-form oracle runs.
    Off,
}

/// Whether the absorbing nonlinearity `|u|^{p-1} u` enters the evolution.
///
/// Disabling it turns the model into the linear damped wave equation, which
/// has closed-form reference solutions used by the solver oracle tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    Absorbing,
    Off,
}

/// Full parameter set of one model instance.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Space dimension, 1 to 3.
    pub n: u32,
    /// Damping decay exponent, `0 <= alpha < 1`.
    pub alpha: f64,
    /// Lower damping amplitude, `a0 > 0`.
    pub a0: f64,
    /// Upper damping amplitude, `a1 >= a0`; carried for hypothesis checks.
    pub a1: f64,
    /// Nonlinearity exponent, subject to `is_p_admissible`.
    pub p: f64,
    /// Weight exponent of the initial-data norm, `lambda >= 0`.
    pub lambda: f64,
    pub domain: Domain,
    pub damping: DampingProfile,
    pub nonlinearity: Nonlinearity,
}

/// Energy-subcritical admissibility of the exponent p:
/// any `p > 1` for n <= 2, and `1 < p <= n/(n-2)` for n >= 3.
pub fn is_p_admissible(n: u32, p: f64) -> bool {
    if p <= 1.0 {
        return false;
    }
    if n <= 2 {
        true
    } else {
        p <= n as f64 / (n as f64 - 2.0)
    }
}

impl ModelParams {
    /// Checks every structural constraint; returns all violations joined.
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        if !(1..=3).contains(&self.n) {
            faults.push(format!("n = {} not in 1..=3", self.n));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            faults.push(format!("alpha = {} not in [0, 1)", self.alpha));
        }
        if self.damping != DampingProfile::Off && !(self.a0 > 0.0) {
            faults.push(format!("a0 = {} must be positive", self.a0));
        }
        if self.a1 < self.a0 {
            faults.push(format!("a1 = {} below a0 = {}", self.a1, self.a0));
        }
        if !is_p_admissible(self.n, self.p) {
            faults.push(format!(
                "p = {} inadmissible for n = {} (need p > 1 and p <= n/(n-2) when n >= 3)",
                self.p, self.n
            ));
        }
        if !(self.lambda >= 0.0) {
            faults.push(format!("lambda = {} must be >= 0", self.lambda));
        }
        if let Domain::ExteriorBall { r0 } = self.domain {
            if !(r0 > 0.0) {
                faults.push(format!("exterior ball radius r0 = {r0} must be positive"));
            }
        }
        if self.damping == DampingProfile::Constant && self.alpha != 0.0 {
            faults.push(format!(
                "constant damping requires alpha = 0, got alpha = {}",
                self.alpha
            ));
        }
        if faults.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(faults.join("\n")))
        }
    }

    pub fn r_min(&self) -> f64 {
        match self.domain {
            Domain::WholeSpace => 0.0,
            Domain::ExteriorBall { r0 } => r0,
        }
    }
}

/// Damping coefficient at radius r. Positive everywhere, bounded by a0.
#[inline]
pub fn damping_at(params: &ModelParams, r: f64) -> f64 {
    match params.damping {
        DampingProfile::PowerLaw => params.a0 * jbracket(r).powf(-params.alpha),
        DampingProfile::Constant => params.a0,
        DampingProfile::Off => 0.0,
    }
}

/// Uniform radial grid on `[r_min, r_max]` with `len` nodes.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub h: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// True when the first node is the origin of the whole space, so the
    /// radial Laplacian there uses the even-symmetry limit.
    pub origin_node: bool,
}

impl RadialGrid {
    pub fn new(domain: Domain, r_max: f64, len: usize) -> Result<Self> {
        let r_min = match domain {
            Domain::WholeSpace => 0.0,
            Domain::ExteriorBall { r0 } => r0,
        };
        if len < 16 {
            return Err(Error::Config(format!("grid needs at least 16 nodes, got {len}")));
        }
        if !(r_max > r_min) {
            return Err(Error::Config(format!(
                "r_max = {r_max} must exceed r_min = {r_min}"
            )));
        }
        let h = (r_max - r_min) / (len - 1) as f64;
        let r = (0..len).map(|i| r_min + i as f64 * h).collect();
        Ok(Self {
            r,
            h,
            r_min,
            r_max,
            origin_node: matches!(domain, Domain::WholeSpace),
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Radial profile of one initial-data component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Zero,
    /// `amplitude * (1 - ((r-center)/width)^2)^3` inside `|r-center| < width`,
    /// zero outside. C^2 across the support edge.
    CompactBump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// `amplitude * exp(1 - 1/(1 - x^2))` with `x = (r-center)/width`,
    /// zero outside `|x| < 1`. Infinitely smooth, so convergence studies see
    /// the scheme's full order with no regularity ceiling.
    SmoothBump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// `amplitude * <r>^{-q}`; admissibility depends on the weighted norm.
    PolyDecay { q: f64, amplitude: f64 },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::CompactBump {
                center,
                width,
                amplitude,
            } => {
                let x = (r - center) / width;
                let inner = 1.0 - x * x;
                if inner > 0.0 {
                    amplitude * inner * inner * inner
                } else {
                    0.0
                }
            }
            Profile::SmoothBump {
                center,
                width,
                amplitude,
            } => {
                let x = (r - center) / width;
                let inner = 1.0 - x * x;
                if inner > 1e-12 {
                    amplitude * (1.0 - 1.0 / inner).exp()
                } else {
                    0.0
                }
            }
            Profile::PolyDecay { q, amplitude } => amplitude * jbracket(r).powf(-q),
        }
    }

    /// Radius beyond which the profile vanishes; None when it never does.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            Profile::Zero => Some(0.0),
            Profile::CompactBump { center, width, .. }
            | Profile::SmoothBump { center, width, .. } => Some(center + width),
            Profile::PolyDecay { amplitude, .. } => {
                if amplitude == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }
}

/// Initial displacement and velocity profiles.
#[derive(Debug, Clone, Copy)]
pub struct InitialData {
    pub u0: Profile,
    pub u1: Profile,
}

impl InitialData {
    /// Combined support radius, None when either component has full support.
    pub fn support_radius(&self) -> Option<f64> {
        match (self.u0.support_radius(), self.u1.support_radius()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        }
    }
}

/// Power of r in the far tail of the weighted-data-norm integrand
/// contributed by each polynomial-decay component.  Every entry must stay
/// below -1 for the norm to converge; compact profiles contribute nothing.
pub fn i0_tail_exponents(data: &InitialData, params: &ModelParams) -> Vec<f64> {
    let base = params.lambda * (2.0 - params.alpha) + (params.n - 1) as f64;
    let mut exps = Vec::new();
    if let Profile::PolyDecay { q, amplitude } = data.u0 {
        if amplitude != 0.0 {
            // gradient, nonlinear-potential and velocity-slot weights carry
            // <r>^{alpha}; the plain L2 term carries <r>^{-alpha}.
            exps.push(-2.0 * (q + 1.0) + params.alpha + base);
            exps.push(-q * (params.p + 1.0) + params.alpha + base);
            exps.push(-2.0 * q - params.alpha + base);
        }
    }
    if let Profile::PolyDecay { q, amplitude } = data.u1 {
        if amplitude != 0.0 {
            exps.push(-2.0 * q + params.alpha + base);
        }
    }
    exps
}

/// Evaluates both data profiles on the grid.
///
/// On an exterior domain the boundary node is forced to zero (Dirichlet
/// trace). Polynomial tails are rejected when the weighted data norm they
/// induce diverges for the configured lambda.
pub fn sample_initial_data(
    data: &InitialData,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(bad) = i0_tail_exponents(data, params)
        .into_iter()
        .find(|e| *e >= -1.0)
    {
        return Err(Error::ProfileUnsupported(format!(
            "polynomial tail gives weighted-norm integrand exponent {bad:.3} >= -1 \
             (divergent) for lambda = {}, alpha = {}",
            params.lambda, params.alpha
        )));
    }
    let mut u0: Vec<f64> = grid.r.iter().map(|&r| data.u0.eval(r)).collect();
    let mut u1: Vec<f64> = grid.r.iter().map(|&r| data.u1.eval(r)).collect();
    if matches!(params.domain, Domain::ExteriorBall { .. }) {
        u0[0] = 0.0;
        u1[0] = 0.0;
    }
    let last = grid.len() - 1;
    u0[last] = 0.0;
    u1[last] = 0.0;
    Ok((u0, u1))
}
