//! Low-rank Grothendieck semidefinite relaxation.
//!
//! The relaxation of `max xᵀAy` over sign vectors replaces every sign by a
//! unit vector in `ℝ^d` and maximizes `Σᵢⱼ aᵢⱼ ⟨uᵢ, vⱼ⟩`. It is solved in
//! factored form: rows of `U` and `V` are updated by block ascent (gradient
//! step followed by row renormalization), which never decreases the
//! objective. Several seeded restarts run independently; the best one wins,
//! ties going to the lowest restart index.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{Constants, NormOptions};
use crate::error::{Error, Result};
use crate::spaces::{bilinear_norm, signs, BilinearForm, NormCertificate, NormWitness, SpaceSpec};
use crate::{par, rng};

/// Solver parameters for [`sdp_value`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdpParams {
    pub rank: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop once the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    /// Sign vectors `(x, y)` used as an extra starting point, embedded on
    /// the first axis.
    pub warm_start: Option<(Vec<f64>, Vec<f64>)>,
}

impl SdpParams {
    /// Defaults for an `n×m` problem: rank `⌈√(2(n+m))⌉ + 1`.
    pub fn for_shape(n: usize, m: usize) -> Self {
        Self {
            rank: default_rank(n, m),
            max_iters: 5000,
            restarts: 8,
            seed: 0,
            grad_tol: 1e-8,
            warm_start: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

pub fn default_rank(n: usize, m: usize) -> usize {
    (2.0 * (n + m) as f64).sqrt().ceil() as usize + 1
}

/// Unit-vector solution of the relaxation; `H = ℝ^rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub value: f64,
    pub rank: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Winning restart; `restarts` itself denotes the warm start.
    pub best_restart: usize,
}

/// `Σᵢⱼ aᵢⱼ ⟨uᵢ, vⱼ⟩` in a fixed summation order.
pub fn objective(a: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let av = a * v;
    (0..u.nrows()).map(|i| u.row(i).dot(&av.row(i))).sum()
}

fn normalize_rows_from(target: &mut DMatrix<f64>, grad: &DMatrix<f64>) {
    for i in 0..target.nrows() {
        let g = grad.row(i);
        let n = g.norm();
        if n > 0.0 {
            target.row_mut(i).copy_from(&(g / n));
        }
    }
}

fn riemannian_sq(grad: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (0..x.nrows())
        .map(|i| {
            let g = grad.row(i);
            let xi = x.row(i);
            let r = g - xi * g.dot(&xi);
            r.norm_squared()
        })
        .sum()
}

fn random_unit_rows(rows: usize, d: usize, r: &mut impl rand::Rng) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, d, |_, _| StandardNormal.sample(r));
    for i in 0..rows {
        let n = m.row(i).norm();
        if n > 0.0 {
            m.row_mut(i).scale_mut(1.0 / n);
        } else {
            m.row_mut(i).fill(0.0);
            m[(i, 0)] = 1.0;
        }
    }
    m
}

struct Run {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
}

fn ascend(a: &DMatrix<f64>, mut u: DMatrix<f64>, mut v: DMatrix<f64>, params: &SdpParams) -> Run {
    let at = a.transpose();
    let mut gu = a * &v;
    let mut grad_norm = (riemannian_sq(&gu, &u) + riemannian_sq(&(&at * &u), &v)).sqrt();
    let mut iterations = 0;
    while grad_norm >= params.grad_tol && iterations < params.max_iters {
        // each block update maximizes the objective exactly over that block
        normalize_rows_from(&mut u, &gu);
        let gv = &at * &u;
        normalize_rows_from(&mut v, &gv);
        gu = a * &v;
        let gv = &at * &u;
        grad_norm = (riemannian_sq(&gu, &u) + riemannian_sq(&gv, &v)).sqrt();
        iterations += 1;
    }
    Run {
        value: objective(a, &u, &v),
        u,
        v,
        grad_norm,
        iterations,
    }
}

/// Maximizes `Σᵢⱼ aᵢⱼ ⟨uᵢ, vⱼ⟩` over unit vectors in `ℝ^rank`.
///
/// The returned value is always attained by the returned vectors, hence a
/// lower bound on the relaxation optimum; `converged` reports whether the
/// gradient tolerance was met.
pub fn sdp_value(phi: &BilinearForm, params: &SdpParams) -> Result<SdpSolution> {
    if params.rank < 1 {
        return Err(Error::InvalidRank(params.rank));
    }
    let a = phi.coeffs();
    let (n, m) = a.shape();
    let d = params.rank;
    if let Some((x, y)) = &params.warm_start {
        if x.len() != n || y.len() != m {
            return Err(Error::DimensionMismatch(
                "warm start has wrong lengths".into(),
            ));
        }
    }
    let total = params.restarts.max(1) + usize::from(params.warm_start.is_some());
    let runs = par::map_indexed(total, |k| {
        let (u0, v0) = if k < params.restarts.max(1) {
            let mut r = rng::stream(params.seed, "sdp-restart", k as u64);
            let u0 = random_unit_rows(n, d, &mut r);
            let v0 = random_unit_rows(m, d, &mut r);
            (u0, v0)
        } else {
            let (x, y) = params.warm_start.as_ref().expect("warm start present");
            let mut u0 = DMatrix::zeros(n, d);
            let mut v0 = DMatrix::zeros(m, d);
            u0.column_mut(0).copy_from_slice(x);
            v0.column_mut(0).copy_from_slice(y);
            (u0, v0)
        };
        let run = ascend(a, u0, v0, params);
        (run.value, (k, run))
    });
    let (_, (best, run)) = par::argmax_first(runs).expect("at least one restart");
    Ok(SdpSolution {
        converged: run.grad_norm < params.grad_tol,
        value: run.value,
        u: run.u,
        v: run.v,
        rank: d,
        restarts_used: total,
        grad_norm: run.grad_norm,
        iterations: run.iterations,
        best_restart: best,
    })
}

/// Best sign pair found by random-hyperplane rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// `xᵀAy ≥ 0`.
    pub value: f64,
}

fn sign_of(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Draws Gaussian directions `g` and rounds to `x = sign(Ug)`, `y = sign(Vg)`.
pub fn round_signs(
    sol: &SdpSolution,
    phi: &BilinearForm,
    samples: usize,
    seed: u64,
) -> Result<Rounding> {
    let a = phi.coeffs();
    if sol.u.nrows() != a.nrows() || sol.v.nrows() != a.ncols() || sol.u.ncols() != sol.v.ncols() {
        return Err(Error::DimensionMismatch(
            "SDP solution does not match the form".into(),
        ));
    }
    let d = sol.u.ncols();
    let tries = par::map_indexed(samples.max(1), |s| {
        let mut r = rng::stream(seed, "hyperplane", s as u64);
        let g = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut r));
        let mut x = (&sol.u * &g).map(sign_of);
        let y = (&sol.v * &g).map(sign_of);
        let mut value = x.dot(&(a * &y));
        if value < 0.0 {
            x = -x;
            value = -value;
        }
        (value, (x, y))
    });
    let (value, (x, y)) = par::argmax_first(tries).expect("at least one sample");
    Ok(Rounding { x, y, value })
}

/// `sdp / ‖φ‖_{∞,∞}` together with both factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrothendieckRatio {
    pub ratio: f64,
    pub sdp: f64,
    pub norm: f64,
    pub rank: usize,
    pub converged: bool,
    /// `1 − 1e−9 ≤ ratio ≤ kg_real_upper + tol`; false signals a solver or
    /// oracle defect.
    pub consistent: bool,
    /// `ratio ≤ kg_effective + tol`.
    pub within_kg: bool,
}

/// Compares the relaxation value with the exact sign optimum on `(LInf, LInf)`.
///
/// The exact maximizing sign pair is passed to the solver as a warm start,
/// so the relaxation value never falls below the sign optimum.
pub fn grothendieck_ratio(
    phi: &BilinearForm,
    constants: &Constants,
    params: &SdpParams,
    opts: &NormOptions,
) -> Result<(GrothendieckRatio, SdpSolution)> {
    if !(phi.domain_e().is_linf() && phi.domain_f().is_linf()) {
        return Err(Error::NotInfInfDomains);
    }
    let cert = bilinear_norm(phi, opts)?;
    let norm = cert.value();
    let mut params = params.clone();
    if let Some(NormWitness::Vectors { e, f }) = &cert.witness {
        params.warm_start = Some((e.as_slice().to_vec(), f.as_slice().to_vec()));
    }
    let sol = sdp_value(phi, &params)?;
    let ratio = if norm == 0.0 { 1.0 } else { sol.value / norm };
    let report = GrothendieckRatio {
        ratio,
        sdp: sol.value,
        norm,
        rank: sol.rank,
        converged: sol.converged,
        consistent: ratio >= 1.0 - 1e-9 && ratio <= constants.kg_real_upper + 1e-6,
        within_kg: ratio <= constants.kg_effective() + 1e-6,
    };
    Ok((report, sol))
}

/// Vector families `U`, `V` with `⟨uᵢ, vⱼ⟩ = aᵢⱼ`, i.e. operators
/// `A: e ↦ Σ eᵢuᵢ` and `B: f ↦ Σ fⱼvⱼ` into `ℝ^d` with `φ(e,f) = ⟨Ae, Bf⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationWitness {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub norm_a: f64,
    pub norm_b: f64,
    pub domain_e: SpaceSpec,
    pub domain_f: SpaceSpec,
    /// `‖φ‖` on the declared domains.
    pub form_norm: NormCertificate,
    /// Whether `norm_a · norm_b ≤ kg_effective · ‖φ‖` for this witness;
    /// `None` when `‖φ‖` is only known as an interval.
    pub within_kg_bound: Option<bool>,
}

impl FactorizationWitness {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.u * self.v.transpose()
    }

    pub fn max_reconstruction_error(&self, phi: &BilinearForm) -> f64 {
        (self.reconstruction() - phi.coeffs()).amax()
    }
}

/// Operator norm of `e ↦ Σ eᵢuᵢ` from `space` into ℓ².
pub fn factor_norm(u: &DMatrix<f64>, space: &SpaceSpec, enum_limit: usize) -> Result<f64> {
    if let Some(w) = space.hilbert_weights() {
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] / w[i].sqrt());
        return Ok(scaled.singular_values().max());
    }
    if space.is_l1() {
        return Ok((0..u.nrows()).map(|i| u.row(i).norm()).fold(0.0, f64::max));
    }
    let best = signs::max_over_signs(u, enum_limit, |y| {
        y.iter().map(|v| v * v).sum::<f64>().sqrt()
    })?;
    Ok(best.value)
}

/// Balanced SVD factorization `U = PΣ^{1/2}`, `V = QΣ^{1/2}` of the
/// (weight-conjugated) coefficient matrix, with the operator norms of the
/// induced maps on the declared domains.
pub fn represent(
    phi: &BilinearForm,
    constants: &Constants,
    opts: &NormOptions,
) -> Result<FactorizationWitness> {
    let (e, f) = (phi.domain_e(), phi.domain_f());
    let (n, m) = phi.shape();
    let we = e.hilbert_weights().unwrap_or_else(|| vec![1.0; n]);
    let wf = f.hilbert_weights().unwrap_or_else(|| vec![1.0; m]);
    let a = phi.coeffs();
    let conj = DMatrix::from_fn(n, m, |i, j| a[(i, j)] / (we[i] * wf[j]).sqrt());
    let svd = conj.svd(true, true);
    let p = svd.u.expect("requested");
    let q = svd.v_t.expect("requested").transpose();
    let d = svd.singular_values.len();
    let root: Vec<f64> = svd.singular_values.iter().map(|s| s.sqrt()).collect();
    let u = DMatrix::from_fn(n, d, |i, k| we[i].sqrt() * p[(i, k)] * root[k]);
    let v = DMatrix::from_fn(m, d, |j, k| wf[j].sqrt() * q[(j, k)] * root[k]);

    let norm_a = factor_norm(&u, e, opts.enum_limit)?;
    let norm_b = factor_norm(&v, f, opts.enum_limit)?;
    let form_norm = bilinear_norm(phi, opts)?;
    let within_kg_bound = form_norm.is_exact().then(|| {
        let bound = constants.kg_effective() * form_norm.value();
        norm_a * norm_b <= bound + opts.tol * bound.max(1.0)
    });
    Ok(FactorizationWitness {
        u,
        v,
        norm_a,
        norm_b,
        domain_e: e.clone(),
        domain_f: f.clone(),
        form_norm,
        within_kg_bound,
    })
}
