use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::norm_space::sign;
use super::signs::{self, max_over_signs};
use super::{NormCertificate, NormMethod, NormWitness, SpaceSpec};
use crate::config::{Constants, NormOptions};
use crate::error::{check_finite, Error, Result};
use crate::{par, rng};

/// A bilinear form `φ(e, f) = eᵀ A f` on `E × F`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    coeffs: DMatrix<f64>,
    domain_e: SpaceSpec,
    domain_f: SpaceSpec,
}

impl BilinearForm {
    pub fn new(coeffs: DMatrix<f64>, domain_e: SpaceSpec, domain_f: SpaceSpec) -> Result<Self> {
        if coeffs.nrows() != domain_e.dim() || coeffs.ncols() != domain_f.dim() {
            return Err(Error::DimensionMismatch(format!(
                "coefficients are {}x{} but spaces have dimensions {} and {}",
                coeffs.nrows(),
                coeffs.ncols(),
                domain_e.dim(),
                domain_f.dim()
            )));
        }
        check_finite(coeffs.as_slice(), "coeffs")?;
        Ok(Self {
            coeffs,
            domain_e,
            domain_f,
        })
    }

    /// Builds an `n×m` form from row-major entries.
    pub fn from_rows(rows: &[Vec<f64>], domain_e: SpaceSpec, domain_f: SpaceSpec) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged coefficient rows".into()));
        }
        let coeffs = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        Self::new(coeffs, domain_e, domain_f)
    }

    /// Square form on `(LInf, LInf)`.
    pub fn linf(coeffs: DMatrix<f64>) -> Result<Self> {
        let (n, m) = coeffs.shape();
        Self::new(coeffs, SpaceSpec::linf(n), SpaceSpec::linf(m))
    }

    pub fn l2(coeffs: DMatrix<f64>) -> Result<Self> {
        let (n, m) = coeffs.shape();
        Self::new(coeffs, SpaceSpec::l2(n), SpaceSpec::l2(m))
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn domain_e(&self) -> &SpaceSpec {
        &self.domain_e
    }

    pub fn domain_f(&self) -> &SpaceSpec {
        &self.domain_f
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs.shape()
    }

    pub fn apply(&self, e: &DVector<f64>, f: &DVector<f64>) -> Result<f64> {
        if e.len() != self.domain_e.dim() || f.len() != self.domain_f.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vectors of length {} and {} for a {}x{} form",
                e.len(),
                f.len(),
                self.domain_e.dim(),
                self.domain_f.dim()
            )));
        }
        Ok(e.dot(&(&self.coeffs * f)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coeffs: &self.coeffs * c,
            domain_e: self.domain_e.clone(),
            domain_f: self.domain_f.clone(),
        }
    }

    /// The form on `F × E` with the transposed matrix.
    pub fn transpose(&self) -> Self {
        Self {
            coeffs: self.coeffs.transpose(),
            domain_e: self.domain_f.clone(),
            domain_f: self.domain_e.clone(),
        }
    }

    pub fn with_domains(&self, domain_e: SpaceSpec, domain_f: SpaceSpec) -> Result<Self> {
        Self::new(self.coeffs.clone(), domain_e, domain_f)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == 0.0)
    }
}

/// `D_e^{-1/2} A D_f^{-1/2}`: the matrix of the form after mapping both
/// weighted spaces isometrically onto plain ℓ².
pub(crate) fn conjugate(a: &DMatrix<f64>, we: &[f64], wf: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] / (we[i] * wf[j]).sqrt()
    })
}

/// Largest singular value with its singular vectors.
pub(crate) fn top_singular(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let k = svd.singular_values.iter().enumerate().fold(0, |b, (i, s)| {
        if *s > svd.singular_values[b] {
            i
        } else {
            b
        }
    });
    (
        svd.singular_values[k],
        u.column(k).into_owned(),
        v_t.row(k).transpose(),
    )
}

fn hilbert_norm(phi: &BilinearForm, we: &[f64], wf: &[f64]) -> NormCertificate {
    let m = conjugate(&phi.coeffs, we, wf);
    let (s, p, q) = top_singular(&m);
    let e = DVector::from_iterator(p.len(), p.iter().zip(we).map(|(x, w)| x / w.sqrt()));
    let f = DVector::from_iterator(q.len(), q.iter().zip(wf).map(|(x, w)| x / w.sqrt()));
    NormCertificate::exact(s, NormMethod::ExactSVD, Some(NormWitness::Vectors { e, f }))
}

fn basis(n: usize, i: usize, s: f64) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = s;
    v
}

/// `sup_{x ∈ {±1}^n} ‖Aᵀx‖_{F*}` where `E = LInf`.
fn linf_rows_norm(phi: &BilinearForm, opts: &NormOptions) -> Result<NormCertificate> {
    let f = &phi.domain_f;
    let best = max_over_signs(&phi.coeffs, opts.enum_limit, |y| f.dual_norm(y))?;
    let e = DVector::from_vec(best.signs);
    let fv = f.norming_vector(&best.image);
    Ok(NormCertificate::exact(
        best.value,
        NormMethod::ExactSignEnum,
        Some(NormWitness::Vectors { e, f: fv }),
    ))
}

fn swap_witness(mut cert: NormCertificate) -> NormCertificate {
    if let Some(NormWitness::Vectors { e, f }) = cert.witness.take() {
        cert.witness = Some(NormWitness::Vectors { e: f, f: e });
    }
    cert
}

/// `(LInf, Hilbertian)` pair too large to enumerate: polished random sign
/// vectors below, `√n · ‖φ‖_{(ℓ², F)}` above.
fn linf_hilbert_sampled(phi: &BilinearForm, opts: &NormOptions) -> NormCertificate {
    let a = &phi.coeffs;
    let f = &phi.domain_f;
    let n = a.nrows();
    let wf = f.hilbert_weights().expect("hilbertian");
    let upper = (n as f64).sqrt() * hilbert_norm(phi, &vec![1.0; n], &wf).upper;

    let trials = par::map_indexed(opts.samples.max(1), |s| {
        let mut r = rng::stream(opts.seed, "bilinear-sampled-dual", s as u64);
        let mut x = DVector::from_fn(n, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 });
        let mut value = f.dual_norm((a.transpose() * &x).as_slice());
        for _ in 0..100 {
            let fv = f.norming_vector((a.transpose() * &x).as_slice());
            let next = (a * &fv).map(sign);
            let v = f.dual_norm((a.transpose() * &next).as_slice());
            if v <= value {
                break;
            }
            value = v;
            x = next;
        }
        (value, x)
    });
    let (lower, x) = par::argmax_first(trials).expect("at least one sample");
    let fv = f.norming_vector((a.transpose() * &x).as_slice());
    NormCertificate::interval(
        lower,
        upper,
        NormMethod::SampledDual,
        Some(NormWitness::Vectors { e: x, f: fv }),
    )
}

/// `‖φ‖ = sup{|φ(e,f)| : ‖e‖_E ≤ 1, ‖f‖_F ≤ 1}`.
///
/// Exact for every pair of norm tags except an `(LInf, L2/WL2)` pair whose
/// LInf side exceeds the enumeration limit, which yields a `SampledDual`
/// interval. `(LInf, LInf)` enumerates the smaller side and fails with
/// [`Error::EnumLimitExceeded`] when that side is still too large.
pub fn bilinear_norm(phi: &BilinearForm, opts: &NormOptions) -> Result<NormCertificate> {
    let (e, f) = (&phi.domain_e, &phi.domain_f);
    let a = &phi.coeffs;

    if let (Some(we), Some(wf)) = (e.hilbert_weights(), f.hilbert_weights()) {
        return Ok(hilbert_norm(phi, &we, &wf));
    }
    if e.is_l1() {
        let (i, v) = (0..a.nrows())
            .map(|i| (i, f.dual_norm(a.row(i).transpose().as_slice())))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let fv = f.norming_vector(a.row(i).transpose().as_slice());
        let witness = NormWitness::Vectors {
            e: basis(a.nrows(), i, 1.0),
            f: fv,
        };
        return Ok(NormCertificate::exact(
            v,
            NormMethod::ExactReduction,
            Some(witness),
        ));
    }
    if f.is_l1() {
        return bilinear_norm(&phi.transpose(), opts).map(swap_witness);
    }
    if e.is_linf() && f.is_linf() {
        let (n, m) = a.shape();
        signs::check_limit(n.min(m), opts.enum_limit)?;
        return if n <= m {
            linf_rows_norm(phi, opts)
        } else {
            linf_rows_norm(&phi.transpose(), opts).map(swap_witness)
        };
    }
    if e.is_linf() {
        return if a.nrows() <= opts.enum_limit {
            linf_rows_norm(phi, opts)
        } else {
            Ok(linf_hilbert_sampled(phi, opts))
        };
    }
    bilinear_norm(&phi.transpose(), opts).map(swap_witness)
}

/// Outcome of a membership test `‖φ‖ ≤ kg_effective`.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// `‖φ‖`, which equals the Grothendieck norm of the induced functional.
    pub norm: NormCertificate,
}

/// Decides whether `φ` induces a Grothendieck functional integral, i.e.
/// whether `‖φ‖ ≤ kg_effective`. An interval that straddles the threshold
/// is reported as [`Error::InexactNorm`].
pub fn is_grothendieck(
    phi: &BilinearForm,
    constants: &Constants,
    opts: &NormOptions,
) -> Result<Membership> {
    let norm = bilinear_norm(phi, opts)?;
    let kg = constants.kg_effective();
    let slack = opts.tol * kg.max(1.0);
    if norm.upper <= kg + slack {
        Ok(Membership { member: true, norm })
    } else if norm.lower > kg + slack {
        Ok(Membership {
            member: false,
            norm,
        })
    } else {
        Err(Error::InexactNorm {
            lower: norm.lower,
            upper: norm.upper,
            threshold: kg,
        })
    }
}

/// Total variation of a discrete bimeasure against its `C(S)×C(T)` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalVariation {
    pub tv: f64,
    pub norm: f64,
    /// `tv / norm`; defined as 1 for the zero measure.
    pub ratio: f64,
}

pub fn total_variation_vs_norm(rho: &BilinearForm, opts: &NormOptions) -> Result<TotalVariation> {
    if !(rho.domain_e.is_linf() && rho.domain_f.is_linf()) {
        return Err(Error::NotInfInfDomains);
    }
    let tv: f64 = rho.coeffs.iter().map(|x| x.abs()).sum();
    let norm = bilinear_norm(rho, opts)?.value();
    let ratio = if tv == 0.0 { 1.0 } else { tv / norm };
    Ok(TotalVariation { tv, norm, ratio })
}
