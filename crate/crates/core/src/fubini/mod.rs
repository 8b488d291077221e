//! Partial-integration operators and order-of-integration checks.
//!
//! A bilinear form `φ` induces `T: E → F*`, `e ↦ φ(e, ·)` and
//! `S: F → E*`, `f ↦ φ(·, f)`. Both have operator norm `‖φ‖`, and the value
//! of the induced functional on a tensor can be computed through either of
//! them. The multilinear analogues live in [`multilinear`].

pub mod multilinear;

pub use multilinear::{
    element_sweep, multilinear_membership, multilinear_norm, partial_contract,
    permutation_evaluate, permutation_sweep, ConstantLedger, MultiTensorElement, MultilinearForm,
    PermutationSweep,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::NormOptions;
use crate::error::{Error, Result};
use crate::spaces::{
    evaluate, signs, BilinearForm, NormCertificate, NormMethod, SpaceSpec, TensorElement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `T: e ↦ φ(e, ·) ∈ F*`.
    LeftT,
    /// `S: f ↦ φ(·, f) ∈ E*`.
    RightS,
}

/// Matrix of `T` or `S`. The image of `v` is the representing vector of a
/// functional on `target_dual_of`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialOperator {
    matrix: DMatrix<f64>,
    source: SpaceSpec,
    target_dual_of: SpaceSpec,
    side: Side,
}

impl PartialOperator {
    pub fn of(phi: &BilinearForm, side: Side) -> Self {
        match side {
            Side::LeftT => Self {
                matrix: phi.coeffs().transpose(),
                source: phi.domain_e().clone(),
                target_dual_of: phi.domain_f().clone(),
                side,
            },
            Side::RightS => Self {
                matrix: phi.coeffs().clone(),
                source: phi.domain_f().clone(),
                target_dual_of: phi.domain_e().clone(),
                side,
            },
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn source(&self) -> &SpaceSpec {
        &self.source
    }

    pub fn target_dual_of(&self) -> &SpaceSpec {
        &self.target_dual_of
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a source of dimension {}",
                v.len(),
                self.source.dim()
            )));
        }
        Ok(&self.matrix * v)
    }

    /// `sup{‖Mv‖_{target*} : ‖v‖_source ≤ 1}`, computed from the operator
    /// side: extreme points of the source ball, or of the dual ball of the
    /// target when that is cheaper.
    pub fn operator_norm(&self, opts: &NormOptions) -> Result<NormCertificate> {
        let m = &self.matrix;
        let x = &self.source;
        let y = &self.target_dual_of;
        let y_norm = |w: &[f64]| y.dual_norm(w);

        if x.is_l1() {
            let v = (0..m.ncols())
                .map(|j| y_norm(m.column(j).into_owned().as_slice()))
                .fold(0.0, f64::max);
            return Ok(NormCertificate::exact(v, NormMethod::ExactReduction, None));
        }
        if y.is_l1() {
            // target* = LInf: max over coordinates of the image
            let v = (0..m.nrows())
                .map(|i| x.dual_norm(m.row(i).transpose().as_slice()))
                .fold(0.0, f64::max);
            return Ok(NormCertificate::exact(v, NormMethod::ExactReduction, None));
        }
        if let (Some(wx), Some(wy)) = (x.hilbert_weights(), y.hilbert_weights()) {
            let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                m[(i, j)] / (wy[i] * wx[j]).sqrt()
            });
            let s = scaled.singular_values().max();
            return Ok(NormCertificate::exact(s, NormMethod::ExactSVD, None));
        }
        // ‖w‖₁ = max over signs s of sᵀw, so enumerate whichever side is smaller.
        let over_source = x.is_linf() && (!y.is_linf() || m.ncols() <= m.nrows());
        let best = if over_source {
            signs::max_over_signs(&m.transpose(), opts.enum_limit, y_norm)?
        } else {
            signs::max_over_signs(m, opts.enum_limit, |w| x.dual_norm(w))?
        };
        Ok(NormCertificate::exact(
            best.value,
            NormMethod::ExactSignEnum,
            None,
        ))
    }
}

/// `μ_e = φ(e, ·)` (LeftT) or `μ_f = φ(·, f)` (RightS) as a vector.
pub fn partial_apply(phi: &BilinearForm, side: Side, v: &DVector<f64>) -> Result<DVector<f64>> {
    PartialOperator::of(phi, side).apply(v)
}

/// The three ways of computing `μ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FubiniTriple {
    pub via_t: f64,
    pub via_s: f64,
    pub direct: f64,
    /// `Σᵢ |eᵢ|ᵀ |A| |fᵢ|`, the magnitude against which rounding is measured.
    pub scale: f64,
}

impl FubiniTriple {
    pub fn spread(&self) -> f64 {
        let v = [self.via_t, self.via_s, self.direct];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// Spread divided by `scale`; zero when everything vanishes.
    pub fn relative_spread(&self) -> f64 {
        relative(self.spread(), self.scale)
    }
}

pub(crate) fn relative(spread: f64, scale: f64) -> f64 {
    if spread == 0.0 {
        0.0
    } else {
        spread / scale.max(f64::MIN_POSITIVE)
    }
}

fn check_spaces(phi: &BilinearForm, x: &TensorElement) -> Result<()> {
    if phi.domain_e().dim() != x.space_e().dim() || phi.domain_f().dim() != x.space_f().dim() {
        return Err(Error::DimensionMismatch(
            "form and tensor spaces differ".into(),
        ));
    }
    Ok(())
}

/// Evaluates `μ(x)` by integrating out `E` first (`Σᵢ T(eᵢ)(fᵢ)`), `F` first
/// (`Σᵢ S(fᵢ)(eᵢ)`) and directly.
pub fn fubini_evaluate(phi: &BilinearForm, x: &TensorElement) -> Result<FubiniTriple> {
    check_spaces(phi, x)?;
    let t = PartialOperator::of(phi, Side::LeftT);
    let s = PartialOperator::of(phi, Side::RightS);
    let mut via_t = 0.0;
    let mut via_s = 0.0;
    let mut scale = 0.0;
    let abs_a = phi.coeffs().abs();
    for (e, f) in x.terms() {
        via_t += t.apply(e)?.dot(f);
        via_s += s.apply(f)?.dot(e);
        scale += e.abs().dot(&(&abs_a * f.abs()));
    }
    Ok(FubiniTriple {
        via_t,
        via_s,
        direct: evaluate(phi, x)?,
        scale,
    })
}

/// Operator-level form of the exchange identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorFormCheck {
    pub mu: f64,
    /// Trace of `(T ⊗ I)(x) ∈ F* ⊗ F`.
    pub via_t_tensor: f64,
    /// Trace of `(I ⊗ S)(x) ∈ E ⊗ E*`.
    pub via_s_tensor: f64,
    /// Largest `|T̃ᵢⱼ − Tᵢⱼ|` for `T̃` rebuilt from basis evaluations.
    pub uniqueness_discrepancy: f64,
    pub max_discrepancy: f64,
}

/// Pushes `x` through `T ⊗ I` and `I ⊗ S` as matrices, pairs the results
/// with the trace, and compares against `μ(x)`. Also rebuilds `T` from the
/// basis values `φ(eᵢ, fⱼ)` and compares entrywise.
pub fn operator_form_check(phi: &BilinearForm, x: &TensorElement) -> Result<OperatorFormCheck> {
    check_spaces(phi, x)?;
    let (n, m) = phi.shape();
    let t = PartialOperator::of(phi, Side::LeftT);
    let s = PartialOperator::of(phi, Side::RightS);
    let mut t_tensor = DMatrix::zeros(m, m);
    let mut s_tensor = DMatrix::zeros(n, n);
    for (e, f) in x.terms() {
        t_tensor.ger(1.0, &t.apply(e)?, f, 1.0);
        s_tensor.ger(1.0, e, &s.apply(f)?, 1.0);
    }
    let mu = evaluate(phi, x)?;
    let via_t_tensor = t_tensor.trace();
    let via_s_tensor = s_tensor.trace();

    let mut uniqueness_discrepancy: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mut e = DVector::zeros(n);
            let mut f = DVector::zeros(m);
            e[i] = 1.0;
            f[j] = 1.0;
            let basis = TensorElement::simple(e, f, x.space_e().clone(), x.space_f().clone())?;
            let rebuilt = evaluate(phi, &basis)?;
            uniqueness_discrepancy =
                uniqueness_discrepancy.max((rebuilt - t.matrix()[(j, i)]).abs());
        }
    }
    let max_discrepancy = (via_t_tensor - mu)
        .abs()
        .max((via_s_tensor - mu).abs())
        .max(uniqueness_discrepancy);
    Ok(OperatorFormCheck {
        mu,
        via_t_tensor,
        via_s_tensor,
        uniqueness_discrepancy,
        max_discrepancy,
    })
}
