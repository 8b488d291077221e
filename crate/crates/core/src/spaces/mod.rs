//! Finite-dimensional normed spaces, bilinear forms and tensor elements.

mod form;
mod norm_space;
pub(crate) mod signs;
mod tensor;

pub use form::{
    bilinear_norm, is_grothendieck, total_variation_vs_norm, BilinearForm, Membership,
    TotalVariation,
};
pub use norm_space::{NormKind, SpaceSpec};
pub use tensor::{evaluate, projective_norm, TensorElement};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// How a [`NormCertificate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMethod {
    ExactSVD,
    ExactSignEnum,
    /// Closed-form reduction to extreme points of an ℓ¹ ball.
    ExactReduction,
    NuclearSVD,
    SampledDual,
    RepresentationSearch,
}

impl NormMethod {
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            NormMethod::ExactSVD
                | NormMethod::ExactSignEnum
                | NormMethod::ExactReduction
                | NormMethod::NuclearSVD
        )
    }
}

/// Point attaining (or certifying) the lower end of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum NormWitness {
    /// A pair `(e, f)` in the unit balls.
    Vectors { e: DVector<f64>, f: DVector<f64> },
    /// One unit-ball vector per mode of a multilinear form.
    Tuple(Vec<DVector<f64>>),
    /// A dual bilinear form of norm at most one.
    Matrix(DMatrix<f64>),
}

/// Interval answer `[lower, upper]` for a norm defined as a sup or inf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub lower: f64,
    pub upper: f64,
    pub method: NormMethod,
    #[serde(skip)]
    pub witness: Option<NormWitness>,
}

impl NormCertificate {
    pub fn exact(value: f64, method: NormMethod, witness: Option<NormWitness>) -> Self {
        Self {
            lower: value,
            upper: value,
            method,
            witness,
        }
    }

    pub fn interval(
        lower: f64,
        upper: f64,
        method: NormMethod,
        witness: Option<NormWitness>,
    ) -> Self {
        // Both ends estimate the same quantity; rounding can push them past
        // each other by a few ulps when the bound is tight.
        let lower = if lower > upper && lower - upper <= 1e-12 * upper.max(1.0) {
            upper
        } else {
            lower
        };
        Self {
            lower,
            upper,
            method,
            witness,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.method.is_exact()
    }

    /// Midpoint for exact certificates, `upper` otherwise.
    pub fn value(&self) -> f64 {
        if self.is_exact() {
            0.5 * (self.lower + self.upper)
        } else {
            self.upper
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn scaled(&self, c: f64) -> Self {
        let c = c.abs();
        Self {
            lower: self.lower * c,
            upper: self.upper * c,
            method: self.method,
            witness: self.witness.clone(),
        }
    }
}
