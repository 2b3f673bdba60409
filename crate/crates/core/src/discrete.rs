//! Discrete operators and quadrature on uniform radial grids.
//!
//! Everything here is second order in the grid spacing: centered differences
//! inside the domain, one-sided second-order stencils at the ends, and
//! trapezoidal quadrature against the radial measure `omega_n r^{n-1} dr`.
//! Sums run in fixed node order with compensated accumulation so results are
//! reproducible bit-for-bit regardless of thread count.

use crate::model::RadialGrid;

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Gamma at half-integer arguments, exact: `gamma_half(k) = Gamma(k/2)`.
fn gamma_half(k: u32) -> f64 {
    assert!(k >= 1);
    if k % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = k / 2;
        (1..m).map(|j| j as f64).product()
    } else {
        // Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
        let m = (k - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for j in 0..m {
            v *= j as f64 + 0.5;
        }
        v
    }
}

/// Surface measure of the unit sphere in R^n: `omega_n = 2 pi^{n/2} / Gamma(n/2)`.
/// For n = 1 this is 2, matching the two half-lines of an even function.
pub fn sphere_area(n: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Trapezoidal node weights against the radial measure `omega_n r^{n-1} dr`.
pub fn measure_weights(grid: &RadialGrid, n: u32) -> Vec<f64> {
    let omega = sphere_area(n);
    let len = grid.len();
    let mut w = Vec::with_capacity(len);
    for (i, &r) in grid.r.iter().enumerate() {
        let trap = if i == 0 || i == len - 1 {
            grid.h / 2.0
        } else {
            grid.h
        };
        let rad = if n == 1 { 1.0 } else { r.powi(n as i32 - 1) };
        w.push(omega * rad * trap);
    }
    w
}

/// Integrates nodal values against precomputed measure weights.
pub fn integrate(values: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), weights.len());
    kahan_sum(values.iter().zip(weights).map(|(v, w)| v * w))
}

/// Centered first derivative, second-order one-sided at the ends.
pub fn radial_gradient(u: &[f64], h: f64) -> Vec<f64> {
    let len = u.len();
    assert!(len >= 3);
    let mut g = vec![0.0; len];
    g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    for i in 1..len - 1 {
        g[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    g[len - 1] = (3.0 * u[len - 1] - 4.0 * u[len - 2] + u[len - 3]) / (2.0 * h);
    g
}

/// Radial Laplacian `u'' + (n-1)/r u'` at one interior node.
#[inline]
pub fn laplacian_at(u: &[f64], grid: &RadialGrid, n: u32, i: usize) -> f64 {
    let h = grid.h;
    let second = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    if n == 1 {
        second
    } else {
        let first = (u[i + 1] - u[i - 1]) / (2.0 * h);
        second + (n - 1) as f64 / grid.r[i] * first
    }
}

/// Radial Laplacian at the origin of the whole space, where even symmetry
/// gives `Laplace u (0) = n u''(0)` and a ghost node `u(-h) = u(h)`.
#[inline]
pub fn laplacian_origin(u: &[f64], grid: &RadialGrid, n: u32) -> f64 {
    n as f64 * 2.0 * (u[1] - u[0]) / (grid.h * grid.h)
}

/// Radial Laplacian on the full grid.
///
/// The first node uses the even-symmetry limit when it sits at the origin;
/// otherwise end nodes copy their interior neighbor. End values are
/// placeholders for plotting only; no invariant is evaluated there.
pub fn radial_laplacian(u: &[f64], grid: &RadialGrid, n: u32) -> Vec<f64> {
    let len = u.len();
    assert!(len >= 3);
    let mut lap = vec![0.0; len];
    for i in 1..len - 1 {
        lap[i] = laplacian_at(u, grid, n, i);
    }
    lap[0] = if grid.origin_node {
        laplacian_origin(u, grid, n)
    } else {
        lap[1]
    };
    lap[len - 1] = lap[len - 2];
    lap
}

/// Cumulative trapezoid of nodal values with uniform spacing h.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = KahanSum::new();
    out.push(0.0);
    for i in 1..f.len() {
        acc.add(0.5 * h * (f[i - 1] + f[i]));
        out.push(acc.value());
    }
    out
}
