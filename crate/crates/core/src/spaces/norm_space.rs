use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    LInf,
    /// `‖v‖ = (Σ wᵢ vᵢ²)^{1/2}` with strictly positive weights.
    WeightedL2(Vec<f64>),
}

/// A real space `ℝ^dim` with one of four norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    dim: usize,
    norm: NormKind,
}

impl SpaceSpec {
    pub fn new(dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        if let NormKind::WeightedL2(w) = &norm {
            if w.len() != dim {
                return Err(Error::InvalidSpace(format!(
                    "{} weights for dimension {dim}",
                    w.len()
                )));
            }
            if let Some(i) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidSpace(format!(
                    "weight {i} is not strictly positive"
                )));
            }
        }
        Ok(Self { dim, norm })
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(dim, NormKind::L1).expect("dim >= 1")
    }

    pub fn l2(dim: usize) -> Self {
        Self::new(dim, NormKind::L2).expect("dim >= 1")
    }

    pub fn linf(dim: usize) -> Self {
        Self::new(dim, NormKind::LInf).expect("dim >= 1")
    }

    pub fn weighted_l2(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights.len(), NormKind::WeightedL2(weights))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.norm
    }

    pub fn is_linf(&self) -> bool {
        matches!(self.norm, NormKind::LInf)
    }

    pub fn is_l1(&self) -> bool {
        matches!(self.norm, NormKind::L1)
    }

    /// L2 and weighted L2.
    pub fn is_hilbertian(&self) -> bool {
        matches!(self.norm, NormKind::L2 | NormKind::WeightedL2(_))
    }

    /// Space carrying the dual norm: L1 ↔ LInf, L2 self-dual, weighted L2
    /// dual to inverse weights.
    pub fn dual(&self) -> SpaceSpec {
        let norm = match &self.norm {
            NormKind::L1 => NormKind::LInf,
            NormKind::LInf => NormKind::L1,
            NormKind::L2 => NormKind::L2,
            NormKind::WeightedL2(w) => NormKind::WeightedL2(w.iter().map(|x| 1.0 / x).collect()),
        };
        SpaceSpec {
            dim: self.dim,
            norm,
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        match &self.norm {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::WeightedL2(w) => v
                .iter()
                .zip(w)
                .map(|(x, wi)| wi * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Norm of `g` viewed as a functional on this space.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.dim);
        match &self.norm {
            NormKind::L1 => g.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::L2 => g.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::LInf => g.iter().map(|x| x.abs()).sum(),
            NormKind::WeightedL2(w) => g
                .iter()
                .zip(w)
                .map(|(x, wi)| x * x / wi)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// A unit-ball vector `v` with `gᵀv = dual_norm(g)`.
    pub fn norming_vector(&self, g: &[f64]) -> DVector<f64> {
        let n = self.dim;
        match &self.norm {
            NormKind::L1 => {
                let mut v = DVector::zeros(n);
                let (k, gk) = g.iter().enumerate().fold((0, 0.0f64), |(bk, bv), (i, x)| {
                    if x.abs() > bv.abs() {
                        (i, *x)
                    } else {
                        (bk, bv)
                    }
                });
                v[k] = if gk < 0.0 { -1.0 } else { 1.0 };
                v
            }
            NormKind::LInf => DVector::from_iterator(n, g.iter().map(|&x| sign(x))),
            NormKind::L2 => {
                let s = self.dual_norm(g);
                if s == 0.0 {
                    let mut v = DVector::zeros(n);
                    v[0] = 1.0;
                    v
                } else {
                    DVector::from_iterator(n, g.iter().map(|x| x / s))
                }
            }
            NormKind::WeightedL2(w) => {
                let s = self.dual_norm(g);
                if s == 0.0 {
                    let mut v = DVector::zeros(n);
                    v[0] = 1.0 / w[0].sqrt();
                    v
                } else {
                    DVector::from_iterator(n, g.iter().zip(w).map(|(x, wi)| x / (wi * s)))
                }
            }
        }
    }

    /// Norm of the i-th standard basis vector.
    pub fn basis_norm(&self, i: usize) -> f64 {
        match &self.norm {
            NormKind::WeightedL2(w) => w[i].sqrt(),
            _ => 1.0,
        }
    }

    /// Weights for the Hilbertian tags (ones for plain L2).
    pub(crate) fn hilbert_weights(&self) -> Option<Vec<f64>> {
        match &self.norm {
            NormKind::L2 => Some(vec![1.0; self.dim]),
            NormKind::WeightedL2(w) => Some(w.clone()),
            _ => None,
        }
    }

    /// `sup ‖v‖_∞ / ‖v‖` over nonzero `v`.
    pub(crate) fn linf_embedding_constant(&self) -> f64 {
        match &self.norm {
            NormKind::WeightedL2(w) => w.iter().fold(0.0f64, |m, x| m.max(1.0 / x.sqrt())),
            _ => 1.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self.norm {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
            NormKind::WeightedL2(_) => "wl2",
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.norm {
            NormKind::WeightedL2(w) => Some(w),
            _ => None,
        }
    }

    /// Parses `l1 | l2 | linf | wl2`; `wl2` requires weights.
    pub fn from_tag(tag: &str, dim: usize, weights: Option<Vec<f64>>) -> Result<Self> {
        let norm = match tag.to_ascii_lowercase().as_str() {
            "l1" => NormKind::L1,
            "l2" => NormKind::L2,
            "linf" => NormKind::LInf,
            "wl2" => NormKind::WeightedL2(
                weights.ok_or_else(|| Error::InvalidSpace("wl2 requires weights".into()))?,
            ),
            other => return Err(Error::InvalidSpace(format!("unknown norm tag `{other}`"))),
        };
        Self::new(dim, norm)
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}
