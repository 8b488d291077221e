//! Nyström discretizations of integral operators.
//!
//! A kernel `k` sampled on grids `(xᵢ, wᵢ)` and `(yⱼ, w'ⱼ)` acts as
//! `(Tf)(yⱼ) = Σᵢ wᵢ k(xᵢ, yⱼ) f(xᵢ)` and induces the bilinear form
//! `φ(f, g) = Σⱼ w'ⱼ (Tf)(yⱼ) g(yⱼ)` on weighted ℓ² spaces. Norms and
//! spectra are taken of the weight-conjugated matrix
//! `M = D_{w'}^{1/2} Kᵀ D_w^{1/2}`, which is the same operator in
//! orthonormal coordinates.

mod green;
mod quadrature;

pub use green::{
    analytic_green_eigenvalue, green_1d, green_consistency, green_function, weyl_slope,
    GreenConsistency,
};
pub use quadrature::{make_grid, QuadratureGrid, Rule};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::config::Constants;
use crate::error::{Error, Result};
use crate::par;

/// A kernel sampled on a product grid; `values[(i, j)] = k(xᵢ, yⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    grid_x: QuadratureGrid,
    grid_y: QuadratureGrid,
    values: DMatrix<f64>,
}

/// Samples `k` on `gx × gy`. Rows are assembled independently, so the
/// result does not depend on how they are scheduled.
pub fn discretize<F>(k: F, gx: &QuadratureGrid, gy: &QuadratureGrid) -> Result<Kernel>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rows = par::map_indexed(gx.len(), |i| {
        let x = gx.points()[i];
        gy.points().iter().map(|&y| k(x, y)).collect::<Vec<_>>()
    });
    let values = DMatrix::from_fn(gx.len(), gy.len(), |i, j| rows[i][j]);
    Kernel::from_values(values, gx.clone(), gy.clone())
}

impl Kernel {
    pub fn from_values(
        values: DMatrix<f64>,
        grid_x: QuadratureGrid,
        grid_y: QuadratureGrid,
    ) -> Result<Self> {
        if values.nrows() != grid_x.len() || values.ncols() != grid_y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} values for {}x{} grid",
                values.nrows(),
                values.ncols(),
                grid_x.len(),
                grid_y.len()
            )));
        }
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFiniteKernelValue {
                        x: grid_x.points()[i],
                        y: grid_y.points()[j],
                    });
                }
            }
        }
        Ok(Self {
            grid_x,
            grid_y,
            values,
        })
    }

    pub fn grid_x(&self) -> &QuadratureGrid {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &QuadratureGrid {
        &self.grid_y
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// `(Tf)(yⱼ)`.
    pub fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        if f.len() != self.grid_x.len() {
            return Err(Error::DimensionMismatch(
                "f is not sampled on grid_x".into(),
            ));
        }
        let wf = DVector::from_iterator(
            f.len(),
            f.iter().zip(self.grid_x.weights()).map(|(a, w)| a * w),
        );
        Ok(self.values.tr_mul(&wf))
    }

    /// `φ(f, g) = Σⱼ w'ⱼ (Tf)(yⱼ) g(yⱼ)`.
    pub fn bilinear(&self, f: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
        if g.len() != self.grid_y.len() {
            return Err(Error::DimensionMismatch(
                "g is not sampled on grid_y".into(),
            ));
        }
        let tf = self.apply(f)?;
        Ok(tf
            .iter()
            .zip(g.iter())
            .zip(self.grid_y.weights())
            .map(|((t, g), w)| w * t * g)
            .sum())
    }

    /// `M = D_{w'}^{1/2} Kᵀ D_w^{1/2}`, the operator `L²(w) → L²(w')` in
    /// orthonormal coordinates.
    pub fn weighted_matrix(&self) -> DMatrix<f64> {
        let wx = self.grid_x.weights();
        let wy = self.grid_y.weights();
        DMatrix::from_fn(self.grid_y.len(), self.grid_x.len(), |j, i| {
            (wy[j] * wx[i]).sqrt() * self.values[(i, j)]
        })
    }

    /// `L²(w) → L²(w')` operator norm of the discretized operator, equal to
    /// the norm of the induced form.
    pub fn operator_norm(&self) -> f64 {
        self.weighted_matrix().singular_values().max()
    }

    /// `(Σᵢⱼ wᵢ w'ⱼ k(xᵢ, yⱼ)²)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        let wx = self.grid_x.weights();
        let wy = self.grid_y.weights();
        let mut s = 0.0;
        for (i, wi) in wx.iter().enumerate() {
            for (j, wj) in wy.iter().enumerate() {
                let k = self.values[(i, j)];
                s += wi * wj * k * k;
            }
        }
        s.sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.grid_x.same_as(&self.grid_y)
            && (0..self.values.nrows())
                .all(|i| (0..i).all(|j| (self.values[(i, j)] - self.values[(j, i)]).abs() <= tol))
    }
}

/// Both iterated sums of `φ(f, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFubini {
    /// Integrate over x first, then y.
    pub order_xy: f64,
    /// Integrate over y first, then x.
    pub order_yx: f64,
    /// `Σᵢⱼ wᵢ w'ⱼ |k f g|`.
    pub scale: f64,
}

impl KernelFubini {
    pub fn relative_gap(&self) -> f64 {
        crate::fubini::relative((self.order_xy - self.order_yx).abs(), self.scale)
    }
}

pub fn fubini_kernel_check(k: &Kernel, f: &DVector<f64>, g: &DVector<f64>) -> Result<KernelFubini> {
    let (nx, ny) = k.values.shape();
    if f.len() != nx || g.len() != ny {
        return Err(Error::DimensionMismatch(
            "f or g does not match the grids".into(),
        ));
    }
    let wx = k.grid_x.weights();
    let wy = k.grid_y.weights();
    let order_xy = (0..ny)
        .map(|j| {
            let inner: f64 = (0..nx).map(|i| wx[i] * k.values[(i, j)] * f[i]).sum();
            wy[j] * inner * g[j]
        })
        .sum();
    let order_yx = (0..nx)
        .map(|i| {
            let inner: f64 = (0..ny).map(|j| wy[j] * k.values[(i, j)] * g[j]).sum();
            wx[i] * f[i] * inner
        })
        .sum();
    let scale = (0..nx)
        .map(|i| {
            (0..ny)
                .map(|j| wx[i] * wy[j] * (k.values[(i, j)] * f[i] * g[j]).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(KernelFubini {
        order_xy,
        order_yx,
        scale,
    })
}

/// Spectral summary of a kernel operator on a single grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub hs_norm: f64,
    pub op_norm: f64,
    pub symmetric: bool,
    pub psd: bool,
    /// The form norm is at most `kg_effective`, so the containment test ran.
    pub bound_applicable: bool,
    /// Outcome of the containment test; `None` when not applicable.
    pub within_bound: Option<bool>,
    /// Eigenfunctions sampled on the grid (columns, orthonormal in
    /// `L²(w)`), in the order of `eigenvalues`.
    #[serde(skip)]
    pub eigenfunctions: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub tol: f64,
    pub keep_eigenfunctions: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            keep_eigenfunctions: false,
        }
    }
}

/// Eigendecomposition of `D^{1/2} K D^{1/2}` (its symmetric part when `K`
/// is not symmetric). When `‖φ‖ ≤ kg_effective` the spectrum is checked
/// against `[−kg − tol, kg + tol]`, and against `[−tol, kg + tol]` for PSD
/// kernels.
pub fn spectral_check(
    k: &Kernel,
    constants: &Constants,
    opts: &SpectralOptions,
) -> Result<SpectralReport> {
    if !k.grid_x.same_as(&k.grid_y) {
        return Err(Error::AsymmetricGrids);
    }
    let n = k.grid_x.len();
    let w = k.grid_x.weights();
    let s = DMatrix::from_fn(n, n, |i, j| (w[i] * w[j]).sqrt() * k.values[(i, j)]);
    let symmetric = k.is_symmetric(1e-10);
    let sym = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    // For symmetric kernels the spectrum already gives the operator norm.
    let op_norm = if symmetric {
        eigenvalues[0].abs().max(eigenvalues[n - 1].abs())
    } else {
        s.singular_values().max()
    };
    let hs_norm = k.hs_norm();
    let lmax = eigenvalues[0];
    let lmin = eigenvalues[n - 1];
    let psd = lmin >= -1e-10 * lmax.max(0.0);

    let kg = constants.kg_effective();
    let bound_applicable = op_norm <= kg;
    let within_bound = bound_applicable.then(|| {
        let lo = if psd { -opts.tol } else { -kg - opts.tol };
        eigenvalues.iter().all(|&l| l >= lo && l <= kg + opts.tol)
    });
    let eigenfunctions = opts
        .keep_eigenfunctions
        .then(|| DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])] / w[r].sqrt()));
    Ok(SpectralReport {
        eigenvalues,
        hs_norm,
        op_norm,
        symmetric,
        psd,
        bound_applicable,
        within_bound,
        eigenfunctions,
    })
}

/// Result of composing two kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub kernel: Kernel,
    /// `kg²` when both factors have form norm at most `kg_effective`.
    pub ledger_bound: Option<f64>,
}

/// `k(x, z) = Σⱼ wⱼ k₁(x, yⱼ) k₂(yⱼ, z)`; needs `k1.grid_y == k2.grid_x`.
pub fn compose(k1: &Kernel, k2: &Kernel, constants: &Constants) -> Result<Composition> {
    if !k1.grid_y.same_as(&k2.grid_x) {
        return Err(Error::GridMismatch(
            "k1's y grid differs from k2's x grid".into(),
        ));
    }
    let wy = DVector::from_column_slice(k1.grid_y.weights());
    let scaled = DMatrix::from_fn(k2.values.nrows(), k2.values.ncols(), |j, l| {
        wy[j] * k2.values[(j, l)]
    });
    let values = &k1.values * scaled;
    let kernel = Kernel::from_values(values, k1.grid_x.clone(), k2.grid_y.clone())?;
    let kg = constants.kg_effective();
    let ledger_bound = (k1.operator_norm() <= kg && k2.operator_norm() <= kg).then_some(kg * kg);
    Ok(Composition {
        kernel,
        ledger_bound,
    })
}

/// The three groupings of `∫∫ k(x,z) f(x) h(z)` for `k = k₁ ∘ k₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleIntegral {
    /// Through the composed kernel.
    pub composite: f64,
    /// `∫_Z (∫_Y (∫_X k₁ f) k₂) h`.
    pub inner_x_first: f64,
    /// `∫_X f (∫_Y k₁ (∫_Z k₂ h))`.
    pub inner_z_first: f64,
    pub scale: f64,
    /// Spread of the three values over `scale`.
    pub relative_discrepancy: f64,
}

pub fn triple_integral(
    k1: &Kernel,
    k2: &Kernel,
    f: &DVector<f64>,
    h: &DVector<f64>,
) -> Result<TripleIntegral> {
    let comp = compose(k1, k2, &Constants::default())?.kernel;
    let (nx, ny) = k1.values.shape();
    let nz = k2.values.ncols();
    if f.len() != nx || h.len() != nz {
        return Err(Error::DimensionMismatch(
            "f or h does not match the grids".into(),
        ));
    }
    let (wx, wy, wz) = (
        k1.grid_x.weights(),
        k1.grid_y.weights(),
        k2.grid_y.weights(),
    );

    let composite: f64 = (0..nx)
        .map(|i| {
            wx[i]
                * f[i]
                * (0..nz)
                    .map(|l| wz[l] * comp.values[(i, l)] * h[l])
                    .sum::<f64>()
        })
        .sum();
    let t1: Vec<f64> = (0..ny)
        .map(|j| (0..nx).map(|i| wx[i] * k1.values[(i, j)] * f[i]).sum())
        .collect();
    let inner_x_first: f64 = (0..nz)
        .map(|l| {
            wz[l]
                * h[l]
                * (0..ny)
                    .map(|j| wy[j] * t1[j] * k2.values[(j, l)])
                    .sum::<f64>()
        })
        .sum();
    let t2: Vec<f64> = (0..ny)
        .map(|j| (0..nz).map(|l| wz[l] * k2.values[(j, l)] * h[l]).sum())
        .collect();
    let inner_z_first: f64 = (0..nx)
        .map(|i| {
            wx[i]
                * f[i]
                * (0..ny)
                    .map(|j| wy[j] * k1.values[(i, j)] * t2[j])
                    .sum::<f64>()
        })
        .sum();

    let a1: Vec<f64> = (0..ny)
        .map(|j| {
            (0..nx)
                .map(|i| wx[i] * (k1.values[(i, j)] * f[i]).abs())
                .sum()
        })
        .collect();
    let scale: f64 = (0..nz)
        .map(|l| {
            wz[l]
                * h[l].abs()
                * (0..ny)
                    .map(|j| wy[j] * a1[j] * k2.values[(j, l)].abs())
                    .sum::<f64>()
        })
        .sum();
    let v = [composite, inner_x_first, inner_z_first];
    let spread = v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TripleIntegral {
        composite,
        inner_x_first,
        inner_z_first,
        scale,
        relative_discrepancy: crate::fubini::relative(spread, scale),
    })
}

/// Kernels selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Builtin {
    /// `1 / (1 + |x − y|)`.
    Inv1p,
    /// `min(x, y) (1 − max(x, y))`.
    Green1d,
    /// `exp(−(x − y)² / σ²)`.
    Gauss(f64),
    Const,
}

impl Builtin {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Builtin::Inv1p => 1.0 / (1.0 + (x - y).abs()),
            Builtin::Green1d => green_function(x, y),
            Builtin::Gauss(s) => (-(x - y).powi(2) / (s * s)).exp(),
            Builtin::Const => 1.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Inv1p => "inv1p".into(),
            Builtin::Green1d => "green1d".into(),
            Builtin::Gauss(s) => format!("gauss({s})"),
            Builtin::Const => "const".into(),
        }
    }

    pub fn discretize(&self, gx: &QuadratureGrid, gy: &QuadratureGrid) -> Result<Kernel> {
        discretize(|x, y| self.eval(x, y), gx, gy)
    }
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    /// `inv1p`, `green1d`, `const`, `gauss` (σ = 1) or `gauss(σ)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "inv1p" => return Ok(Builtin::Inv1p),
            "green1d" => return Ok(Builtin::Green1d),
            "const" => return Ok(Builtin::Const),
            "gauss" => return Ok(Builtin::Gauss(1.0)),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("gauss(").and_then(|r| r.strip_suffix(')')) {
            let sigma: f64 = arg
                .parse()
                .map_err(|_| Error::Parse(format!("bad sigma in `{s}`")))?;
            if sigma > 0.0 && sigma.is_finite() {
                return Ok(Builtin::Gauss(sigma));
            }
        }
        Err(Error::Parse(format!("unknown kernel `{s}`")))
    }
}
