//! The Green's kernel of `−u″ = f` on `[0, 1]` with Dirichlet conditions.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{discretize, make_grid, Kernel, Rule};
use crate::error::{Error, Result};

/// `G(x, y) = min(x, y) (1 − max(x, y))`.
pub fn green_function(x: f64, y: f64) -> f64 {
    x.min(y) * (1.0 - x.max(y))
}

/// `1 / (jπ)²`, the `j`-th eigenvalue of the Green's operator (1-based).
pub fn analytic_green_eigenvalue(j: usize) -> f64 {
    let t = j as f64 * PI;
    1.0 / (t * t)
}

/// Green's kernel on an `n`-point grid over `[0, 1]`; `n ≥ 10`.
pub fn green_1d(n: usize, rule: Rule) -> Result<Kernel> {
    if n < 10 {
        return Err(Error::InvalidConfig(format!(
            "green kernel needs at least 10 points, got {n}"
        )));
    }
    let g = make_grid(n, 0.0, 1.0, rule)?;
    discretize(green_function, &g, &g)
}

/// Least-squares slope of `log λ_j` against `log j` over `j ∈ [lo, hi]`
/// (1-based, `eigenvalues` in descending order).
pub fn weyl_slope(eigenvalues: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if lo < 1 || hi <= lo || hi > eigenvalues.len() {
        return Err(Error::InvalidConfig(format!(
            "fit range [{lo}, {hi}] does not fit {} eigenvalues",
            eigenvalues.len()
        )));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|j| ((j as f64).ln(), eigenvalues[j - 1]))
        .collect();
    if let Some(&(_, l)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "non-positive eigenvalue {l} in fit range"
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Second-difference check of the discretized Green's operator.
///
/// On a uniform trapezoid grid of spacing `h`, `u = T_G f` is compared with
/// the exact solution of `−u″ = eˣ` and `−D²u` with `f` at interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenConsistency {
    pub resolutions: [usize; 2],
    /// `max |−D²u − f|` over interior nodes, per resolution.
    pub residual: [f64; 2],
    /// `max |u − u_exact|` over all nodes, per resolution.
    pub solution_error: [f64; 2],
    /// `log(e₁/e₂) / log(h₁/h₂)` from `solution_error`.
    pub observed_order: f64,
}

pub fn green_consistency(n_coarse: usize, n_fine: usize) -> Result<GreenConsistency> {
    if n_coarse < 10 || n_fine <= n_coarse {
        return Err(Error::InvalidConfig("need 10 ≤ n_coarse < n_fine".into()));
    }
    let e = std::f64::consts::E;
    let exact = |x: f64| -x.exp() + 1.0 + (e - 1.0) * x;
    let run = |n: usize| -> Result<(f64, f64, f64)> {
        let k = green_1d(n, Rule::Trapezoid)?;
        let x = k.grid_x().points().to_vec();
        let f = DVector::from_iterator(n, x.iter().map(|t| t.exp()));
        let u = k.apply(&f)?;
        let h = 1.0 / (n - 1) as f64;
        let residual = (1..n - 1)
            .map(|i| ((2.0 * u[i] - u[i - 1] - u[i + 1]) / (h * h) - f[i]).abs())
            .fold(0.0, f64::max);
        let err = (0..n)
            .map(|i| (u[i] - exact(x[i])).abs())
            .fold(0.0, f64::max);
        Ok((h, residual, err))
    };
    let (h1, r1, e1) = run(n_coarse)?;
    let (h2, r2, e2) = run(n_fine)?;
    Ok(GreenConsistency {
        resolutions: [n_coarse, n_fine],
        residual: [r1, r2],
        solution_error: [e1, e2],
        observed_order: (e1 / e2).ln() / (h1 / h2).ln(),
    })
}
