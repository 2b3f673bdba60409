//! Kummer's confluent hypergeometric function and the profile family
//! `phi_{beta,eps}` built from it.
//!
//! The function
//!
//! ```text
//!     M(b, c; s) = sum_{k>=0} (b)_k / (c)_k * s^k / k!
//! ```
//!
//! (with `(x)_k` the rising factorial) solves Kummer's equation
//! `s u'' + (c - s) u' - b u = 0`. Two special values anchor the tests:
//! `M(b, b; s) = e^s` and `M(1, 2; s) = (e^s - 1)/s`.
//!
//! The decay analysis uses the exponentially tilted profile
//!
//! ```text
//!     phi_{beta,eps}(s) = e^{-s} M(gamma - beta, gamma; s)
//! ```
//!
//! with `gamma = gamma_eps` derived from `(n, alpha, eps)`. It satisfies
//!
//! ```text
//!     s phi'' + (gamma + s) phi' + beta phi = 0,
//!     beta phi_beta + s phi_beta' = beta phi_{beta+1},
//! ```
//!
//! decays like `(1+s)^{-beta}` for `0 <= beta < gamma`, and has closed-form
//! derivatives
//!
//! ```text
//!     phi'  = -(beta/gamma) e^{-s} M(gamma-beta, gamma+1; s),
//!     phi'' = beta(beta+1)/(gamma(gamma+1)) e^{-s} M(gamma-beta, gamma+2; s).
//! ```

use crate::error::{Error, Result};

/// Iteration cap for the power series.
const MAX_SERIES_TERMS: usize = 10_000;
/// Relative size below which a term counts as converged.
const TERM_EPSILON: f64 = 1e-16;
/// Consecutive negligible terms required before stopping.
const STOP_STREAK: usize = 3;
/// Largest s handled by the direct series; beyond it the two-term
/// asymptotic expansion takes over (relative error below ~1e-5 there).
const SERIES_MAX_S: f64 = 500.0;
/// ln(f64::MAX); e^s overflows past this point.
const MAX_EXP_ARG: f64 = 709.782712893384;

/// Lanczos coefficients, g = 7, 9 terms. Relative accuracy is a few ulps
/// times 10 for moderate arguments, comfortably better than 1e-12.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation with reflection for
/// arguments below 1/2. Returns NaN at the poles (non-positive integers).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        return f64::NAN;
    }
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Power series for M(b, c; s), valid for any s where the terms stay
/// representable. Terms are generated by the ratio recurrence
/// `t_{k+1} = t_k (b+k) s / ((c+k)(k+1))` and summation stops after
/// `STOP_STREAK` consecutive terms below `TERM_EPSILON` relative size.
fn kummer_series(b: f64, c: f64, s: f64) -> Result<f64> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut streak = 0usize;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= (b + kf) * s / ((c + kf) * (kf + 1.0));
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Overflow(format!(
                "kummer series overflowed at term {k} for (b={b}, c={c}, s={s})"
            )));
        }
        // A zero term means the series terminated (b a non-positive
        // integer); it also ends runs where the sum itself is zero.
        if term == 0.0 || term.abs() < TERM_EPSILON * sum.abs() {
            streak += 1;
            if streak >= STOP_STREAK {
                return Ok(sum);
            }
        } else {
            streak = 0;
        }
    }
    Err(Error::Overflow(format!(
        "kummer series failed to converge for (b={b}, c={c}, s={s})"
    )))
}

/// Two-term large-s expansion of the exponentially scaled function:
/// `e^{-s} M(b, c; s) ~ s^{b-c} Gamma(c)/Gamma(b) (1 + (b-c)(b-1)/s)`.
fn kummer_asymptotic_scaled(b: f64, c: f64, s: f64) -> Result<f64> {
    let ratio = gamma(c) / gamma(b);
    if !ratio.is_finite() {
        return Err(Error::Domain(format!(
            "gamma ratio undefined for (b={b}, c={c}) in asymptotic branch"
        )));
    }
    let correction = 1.0 + (b - c) * (b - 1.0) / s;
    Ok(s.powf(b - c) * ratio * correction)
}

/// Kummer's function M(b, c; s).
///
/// Errors: `Pole` when c is a non-positive integer; `Overflow` when the
/// result (or a series intermediate) exceeds the floating-point range.
pub fn kummer_m(b: f64, c: f64, s: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Pole { c });
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if s < 0.0 {
        // Kummer transformation M(b,c;s) = e^s M(c-b, c; -s) turns the
        // alternating series into one with eventually positive terms.
        return Ok(s.exp() * kummer_m(c - b, c, -s)?);
    }
    if is_nonpositive_integer(b) || s <= SERIES_MAX_S {
        return kummer_series(b, c, s);
    }
    let scaled = kummer_asymptotic_scaled(b, c, s)?;
    let log_mag = s + scaled.abs().ln();
    if log_mag >= MAX_EXP_ARG {
        return Err(Error::Overflow(format!(
            "e^s M(b,c;s) not representable for (b={b}, c={c}, s={s})"
        )));
    }
    Ok(scaled.signum() * log_mag.exp())
}

/// Exponentially scaled variant `e^{-s} M(b, c; s)` for `s >= 0`.
///
/// This is the quantity the weight profiles actually need; computing it
/// directly keeps large-s evaluations inside the floating-point range.
pub fn kummer_m_scaled(b: f64, c: f64, s: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Pole { c });
    }
    if s < 0.0 {
        return Err(Error::Domain(format!(
            "scaled kummer evaluation needs s >= 0, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(b) || s <= SERIES_MAX_S {
        return Ok(kummer_series(b, c, s)? * (-s).exp());
    }
    kummer_asymptotic_scaled(b, c, s)
}

/// Exponent pair behind the weight profiles:
///
/// ```text
///     gamma_tilde = ((2-alpha)/(n-alpha) + 2 eps)^{-1},
///     gamma       = (1 - 2 eps) gamma_tilde.
/// ```
pub fn gamma_pair(n: u32, alpha: f64, epsilon: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("dimension n must be at least 1".into()));
    }
    let nmax = (n as f64).min(2.0);
    if !(0.0..2.0).contains(&alpha) || alpha >= nmax {
        return Err(Error::Domain(format!(
            "alpha = {alpha} not in [0, min(2, n)) for n = {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon = {epsilon} not in (0, 1/2)")));
    }
    let gamma_tilde = 1.0 / ((2.0 - alpha) / (n as f64 - alpha) + 2.0 * epsilon);
    let gamma_eps = (1.0 - 2.0 * epsilon) * gamma_tilde;
    Ok((gamma_tilde, gamma_eps))
}

/// Parameters of one `phi_{beta,eps}` profile.
#[derive(Debug, Clone, Copy)]
pub struct PhiParams {
    pub beta: f64,
    pub epsilon: f64,
    pub gamma_tilde: f64,
    pub gamma: f64,
}

impl PhiParams {
    pub fn new(n: u32, alpha: f64, epsilon: f64, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!("beta = {beta} must be >= 0")));
        }
        let (gamma_tilde, gamma_eps) = gamma_pair(n, alpha, epsilon)?;
        Ok(Self {
            beta,
            epsilon,
            gamma_tilde,
            gamma: gamma_eps,
        })
    }

    /// Same profile family with `beta` shifted by one; used by the
    /// time-derivative identity `d/dt` of the space-time weight.
    pub fn raise_beta(&self) -> Self {
        Self {
            beta: self.beta + 1.0,
            ..*self
        }
    }

    /// `phi(s) = e^{-s} M(gamma-beta, gamma; s)`; identically 1 for beta = 0.
    pub fn phi(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        if self.beta == 0.0 {
            return Ok(1.0);
        }
        kummer_m_scaled(self.gamma - self.beta, self.gamma, s)
    }

    /// Closed-form first derivative.
    pub fn phi_prime(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        if self.beta == 0.0 {
            return Ok(0.0);
        }
        let m = kummer_m_scaled(self.gamma - self.beta, self.gamma + 1.0, s)?;
        Ok(-(self.beta / self.gamma) * m)
    }

    /// Closed-form second derivative.
    pub fn phi_second(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        if self.beta == 0.0 {
            return Ok(0.0);
        }
        let m = kummer_m_scaled(self.gamma - self.beta, self.gamma + 2.0, s)?;
        Ok(self.beta * (self.beta + 1.0) / (self.gamma * (self.gamma + 1.0)) * m)
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if s < 0.0 || !s.is_finite() {
            Err(Error::Domain(format!("phi argument s = {s} must be finite and >= 0")))
        } else {
            Ok(())
        }
    }
}
