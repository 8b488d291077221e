use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::form::{bilinear_norm, BilinearForm};
use super::{NormCertificate, NormMethod, NormWitness, SpaceSpec};
use crate::config::NormOptions;
use crate::error::{check_finite, Error, Result};
use crate::{par, rng};

/// A finite sum `Σᵢ eᵢ ⊗ fᵢ` in `E ⊗ F`. The representation is not unique;
/// two elements with the same [`coefficient_matrix`](Self::coefficient_matrix)
/// are the same tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorElement {
    terms: Vec<(DVector<f64>, DVector<f64>)>,
    space_e: SpaceSpec,
    space_f: SpaceSpec,
}

impl TensorElement {
    pub fn new(
        terms: Vec<(DVector<f64>, DVector<f64>)>,
        space_e: SpaceSpec,
        space_f: SpaceSpec,
    ) -> Result<Self> {
        for (k, (e, f)) in terms.iter().enumerate() {
            if e.len() != space_e.dim() || f.len() != space_f.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "term {k} has lengths ({}, {}), spaces have ({}, {})",
                    e.len(),
                    f.len(),
                    space_e.dim(),
                    space_f.dim()
                )));
            }
            check_finite(e.as_slice(), "e")?;
            check_finite(f.as_slice(), "f")?;
        }
        Ok(Self {
            terms,
            space_e,
            space_f,
        })
    }

    pub fn zero(space_e: SpaceSpec, space_f: SpaceSpec) -> Self {
        Self {
            terms: Vec::new(),
            space_e,
            space_f,
        }
    }

    pub fn simple(
        e: DVector<f64>,
        f: DVector<f64>,
        space_e: SpaceSpec,
        space_f: SpaceSpec,
    ) -> Result<Self> {
        Self::new(vec![(e, f)], space_e, space_f)
    }

    /// Row representation `Σᵢ δᵢ ⊗ cᵢ` of a coefficient matrix.
    pub fn from_matrix(c: &DMatrix<f64>, space_e: SpaceSpec, space_f: SpaceSpec) -> Result<Self> {
        let n = c.nrows();
        let terms = (0..n)
            .filter(|&i| c.row(i).iter().any(|&x| x != 0.0))
            .map(|i| {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                (e, c.row(i).transpose())
            })
            .collect();
        Self::new(terms, space_e, space_f)
    }

    pub fn terms(&self) -> &[(DVector<f64>, DVector<f64>)] {
        &self.terms
    }

    pub fn space_e(&self) -> &SpaceSpec {
        &self.space_e
    }

    pub fn space_f(&self) -> &SpaceSpec {
        &self.space_f
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σᵢ eᵢ fᵢᵀ`.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.space_e.dim(), self.space_f.dim());
        for (e, f) in &self.terms {
            c.ger(1.0, e, f, 1.0);
        }
        c
    }

    /// `Σᵢ ‖eᵢ‖_E ‖fᵢ‖_F` for this particular representation.
    pub fn representation_cost(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, f)| self.space_e.norm(e.as_slice()) * self.space_f.norm(f.as_slice()))
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, f)| (e * c, f.clone())).collect(),
            space_e: self.space_e.clone(),
            space_f: self.space_f.clone(),
        }
    }

    /// `self − other`, by concatenating representations.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.space_e.dim() != other.space_e.dim() || self.space_f.dim() != other.space_f.dim() {
            return Err(Error::DimensionMismatch("tensor spaces differ".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(e, f)| (-e, f.clone())));
        Ok(Self {
            terms,
            space_e: self.space_e.clone(),
            space_f: self.space_f.clone(),
        })
    }
}

/// `μ(x) = Σᵢ φ(eᵢ, fᵢ)`.
pub fn evaluate(phi: &BilinearForm, x: &TensorElement) -> Result<f64> {
    if phi.domain_e().dim() != x.space_e.dim() || phi.domain_f().dim() != x.space_f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "form is {}x{}, tensor lives in {}x{}",
            phi.domain_e().dim(),
            phi.domain_f().dim(),
            x.space_e.dim(),
            x.space_f.dim()
        )));
    }
    let a = phi.coeffs();
    Ok(x.terms.iter().map(|(e, f)| e.dot(&(a * f))).sum())
}

fn frobenius_pairing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn nuclear(c: &DMatrix<f64>, we: &[f64], wf: &[f64]) -> NormCertificate {
    let m = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| {
        c[(i, j)] * (we[i] * wf[j]).sqrt()
    });
    let svd = m.svd(true, true);
    let total: f64 = svd.singular_values.iter().sum();
    let dual = svd.u.expect("requested") * svd.v_t.expect("requested");
    let psi = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| {
        dual[(i, j)] * (we[i] * wf[j]).sqrt()
    });
    NormCertificate::exact(
        total,
        NormMethod::NuclearSVD,
        Some(NormWitness::Matrix(psi)),
    )
}

/// Best rank-one dual form `a bᵀ` with `‖a‖_{E*}, ‖b‖_{F*} ≤ 1` by
/// alternating maximization.
fn rank_one_dual(c: &DMatrix<f64>, e: &SpaceSpec, f: &SpaceSpec) -> DMatrix<f64> {
    let (_, _, q) = super::form::top_singular(c);
    let e_dual = e.dual();
    let f_dual = f.dual();
    let scale = f.dual_norm(q.as_slice());
    let mut b = if scale > 0.0 { q / scale } else { q };
    let mut a = e_dual.norming_vector((c * &b).as_slice());
    let mut value = a.dot(&(c * &b));
    for _ in 0..200 {
        let nb = f_dual.norming_vector((c.transpose() * &a).as_slice());
        let na = e_dual.norming_vector((c * &nb).as_slice());
        let v = na.dot(&(c * &nb));
        if v <= value * (1.0 + 1e-15) {
            break;
        }
        a = na;
        b = nb;
        value = v;
    }
    &a * b.transpose()
}

/// `‖x‖_π = inf Σ ‖eᵢ‖ ‖fᵢ‖` over representations of `x`.
///
/// Hilbertian pairs (L2 or weighted L2 on both sides) are exact: the nuclear
/// norm of the weight-conjugated coefficient matrix. Pairs with an L1 factor
/// are exact by the row (or column) reduction `ℓ¹ ⊗_π F = ℓ¹(F)`. Remaining
/// pairs return an interval: the upper end is the cheapest of several
/// explicit representations, the lower end the best `|⟨ψ, x⟩| / ‖ψ‖` over
/// candidate dual forms `ψ`.
pub fn projective_norm(x: &TensorElement, opts: &NormOptions) -> Result<NormCertificate> {
    let (e, f) = (&x.space_e, &x.space_f);
    let c = x.coefficient_matrix();
    if x.is_empty() || c.iter().all(|&v| v == 0.0) {
        let method = if e.is_hilbertian() && f.is_hilbertian() {
            NormMethod::NuclearSVD
        } else {
            NormMethod::RepresentationSearch
        };
        return Ok(NormCertificate::exact(0.0, method, None));
    }
    if let (Some(we), Some(wf)) = (e.hilbert_weights(), f.hilbert_weights()) {
        return Ok(nuclear(&c, &we, &wf));
    }

    let (n, m) = c.shape();
    let svd = c.clone().svd(true, true);
    let (u, v_t) = (
        svd.u.as_ref().expect("requested"),
        svd.v_t.as_ref().expect("requested"),
    );
    let svd_cost: f64 = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = u.column(k).into_owned();
            let q = v_t.row(k).transpose();
            s * e.norm(p.as_slice()) * f.norm(q.as_slice())
        })
        .sum();
    let row_cost: f64 = (0..n)
        .map(|i| e.basis_norm(i) * f.norm(c.row(i).transpose().as_slice()))
        .sum();
    let col_cost: f64 = (0..m)
        .map(|j| f.basis_norm(j) * e.norm(c.column(j).into_owned().as_slice()))
        .sum();
    let upper = [x.representation_cost(), svd_cost, row_cost, col_cost]
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let mut candidates: Vec<DMatrix<f64>> = Vec::new();
    candidates.push(rank_one_dual(&c, e, f));
    let f_dual = f.dual();
    let e_dual = e.dual();
    let rows: Vec<DVector<f64>> = (0..n)
        .map(|i| f_dual.norming_vector(c.row(i).transpose().as_slice()))
        .collect();
    candidates.push(DMatrix::from_fn(n, m, |i, j| rows[i][j]));
    let cols: Vec<DVector<f64>> = (0..m)
        .map(|j| e_dual.norming_vector(c.column(j).into_owned().as_slice()))
        .collect();
    candidates.push(DMatrix::from_fn(n, m, |i, j| cols[j][i]));
    candidates.push(c.map(|v| if v < 0.0 { -1.0 } else { 1.0 }));
    candidates
        .push(u.columns(0, svd.singular_values.len()) * v_t.rows(0, svd.singular_values.len()));
    for s in 0..opts.samples {
        let mut r = rng::stream(opts.seed, "projective-dual", s as u64);
        candidates.push(DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut r)));
    }

    let scored = par::map_indexed(candidates.len(), |k| {
        let psi = &candidates[k];
        let form = BilinearForm::new(psi.clone(), e.clone(), f.clone()).ok()?;
        let norm = bilinear_norm(&form, opts).ok()?;
        if norm.upper <= 0.0 {
            return None;
        }
        Some(frobenius_pairing(psi, &c).abs() / norm.upper)
    });
    let (lower, k) = par::argmax_first(
        scored
            .into_iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|v| (v, k))),
    )
    .unwrap_or((0.0, 0));
    let witness = {
        let psi = &candidates[k];
        let sign = if frobenius_pairing(psi, &c) < 0.0 {
            -1.0
        } else {
            1.0
        };
        let scale = if lower > 0.0 {
            lower / frobenius_pairing(psi, &c).abs()
        } else {
            0.0
        };
        NormWitness::Matrix(psi * (sign * scale))
    };
    let method = if e.is_l1() || f.is_l1() {
        NormMethod::ExactReduction
    } else {
        NormMethod::RepresentationSearch
    };
    Ok(NormCertificate::interval(
        lower,
        upper,
        method,
        Some(witness),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn evaluate_examples() {
        let chsh = BilinearForm::l2(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])).unwrap();
        let zero = TensorElement::zero(SpaceSpec::l2(2), SpaceSpec::l2(2));
        assert_eq!(evaluate(&chsh, &zero).unwrap(), 0.0);

        let x = TensorElement::simple(
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            SpaceSpec::l2(2),
            SpaceSpec::l2(2),
        )
        .unwrap();
        assert_eq!(evaluate(&chsh, &x).unwrap(), 1.0);

        let id = BilinearForm::l2(DMatrix::identity(2, 2)).unwrap();
        let trace = TensorElement::from_matrix(
            &DMatrix::identity(2, 2),
            SpaceSpec::l2(2),
            SpaceSpec::l2(2),
        )
        .unwrap();
        assert_eq!(evaluate(&id, &trace).unwrap(), 2.0);

        let wrong = TensorElement::zero(SpaceSpec::l2(3), SpaceSpec::l2(2));
        assert!(matches!(
            evaluate(&id, &wrong),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn nuclear_norm_examples() {
        let o = NormOptions::default();
        let id = TensorElement::from_matrix(
            &DMatrix::identity(4, 4),
            SpaceSpec::l2(4),
            SpaceSpec::l2(4),
        )
        .unwrap();
        let c = projective_norm(&id, &o).unwrap();
        assert_eq!(c.method, NormMethod::NuclearSVD);
        assert_relative_eq!(c.upper, 4.0, max_relative = 1e-14);

        let chsh = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let x = TensorElement::from_matrix(&chsh, SpaceSpec::l2(2), SpaceSpec::l2(2)).unwrap();
        assert_relative_eq!(
            projective_norm(&x, &o).unwrap().upper,
            2.0 * 2f64.sqrt(),
            max_relative = 1e-14
        );

        let empty = TensorElement::zero(SpaceSpec::linf(2), SpaceSpec::l1(3));
        let c = projective_norm(&empty, &o).unwrap();
        assert_eq!((c.lower, c.upper), (0.0, 0.0));
    }

    #[test]
    fn simple_tensor_norm_is_product_of_norms() {
        let o = NormOptions::default();
        let e = v(&[1.0, -3.0, 0.5]);
        let f = v(&[2.0, 0.25]);
        let spaces = [
            SpaceSpec::l1(3),
            SpaceSpec::l2(3),
            SpaceSpec::linf(3),
            SpaceSpec::weighted_l2(vec![0.5, 1.0, 2.0]).unwrap(),
        ];
        let spaces_f = [
            SpaceSpec::l1(2),
            SpaceSpec::l2(2),
            SpaceSpec::linf(2),
            SpaceSpec::weighted_l2(vec![3.0, 0.1]).unwrap(),
        ];
        for se in &spaces {
            for sf in &spaces_f {
                let x =
                    TensorElement::simple(e.clone(), f.clone(), se.clone(), sf.clone()).unwrap();
                let want = se.norm(e.as_slice()) * sf.norm(f.as_slice());
                let c = projective_norm(&x, &o).unwrap();
                assert_relative_eq!(c.lower, want, max_relative = 1e-12);
                assert_relative_eq!(c.upper, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn l1_factor_is_exact() {
        let o = NormOptions::default();
        let c = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.0, 3.0, -1.0, 1.0]);
        let x = TensorElement::from_matrix(&c, SpaceSpec::l1(3), SpaceSpec::linf(2)).unwrap();
        let cert = projective_norm(&x, &o).unwrap();
        assert_eq!(cert.method, NormMethod::ExactReduction);
        // Σ rows of max|·|: 2 + 3 + 1
        assert_relative_eq!(cert.upper, 6.0, max_relative = 1e-14);
        assert_relative_eq!(cert.lower, 6.0, max_relative = 1e-12);

        let x = TensorElement::from_matrix(&c, SpaceSpec::l1(3), SpaceSpec::l1(2)).unwrap();
        let cert = projective_norm(&x, &o).unwrap();
        assert_relative_eq!(cert.lower, 8.0, max_relative = 1e-12);
        assert_relative_eq!(cert.upper, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn linf_pair_interval_is_ordered() {
        let o = NormOptions::default();
        let c = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0, -1.0, 1.0, 2.0]);
        let x = TensorElement::from_matrix(&c, SpaceSpec::linf(3), SpaceSpec::linf(3)).unwrap();
        let cert = projective_norm(&x, &o).unwrap();
        assert_eq!(cert.method, NormMethod::RepresentationSearch);
        assert!(cert.lower > 0.0);
        assert!(cert.lower <= cert.upper + 1e-12 * cert.upper.max(1.0));
    }
}
