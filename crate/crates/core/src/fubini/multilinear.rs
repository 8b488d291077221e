//! Dense multilinear forms and the multiple order-exchange check.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::relative;
use crate::config::{Constants, NormOptions};
use crate::error::{check_finite, Error, Result};
use crate::spaces::{
    bilinear_norm, signs, BilinearForm, Membership, NormCertificate, NormMethod, NormWitness,
    SpaceSpec,
};
use crate::{par, rng};

pub const MAX_ORDER: usize = 8;
pub const MAX_ENTRIES: usize = 10_000_000;

/// Advisory bound `scale · kg^(order−1)` carried through contractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    pub kg: f64,
    /// Norm of the originating form times the norms of every vector it has
    /// been contracted with.
    pub scale: f64,
}

impl ConstantLedger {
    pub fn bound(&self, order: usize) -> f64 {
        self.scale * self.kg.powi(order as i32 - 1)
    }
}

/// An order-n form `μ(x₁, …, xₙ) = Σ t[i₁…iₙ] x₁[i₁] ⋯ xₙ[iₙ]`, stored
/// row-major. Contractions may produce order-1 forms (linear functionals).
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearForm {
    dims: Vec<usize>,
    entries: Vec<f64>,
    spaces: Vec<SpaceSpec>,
    ledger: Option<ConstantLedger>,
}

/// Terms `Σₖ e₁ᵏ ⊗ ⋯ ⊗ eₙᵏ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTensorElement {
    pub terms: Vec<Vec<DVector<f64>>>,
}

impl MultiTensorElement {
    pub fn check(&self, dims: &[usize]) -> Result<()> {
        for (k, t) in self.terms.iter().enumerate() {
            if t.len() != dims.len() || t.iter().zip(dims).any(|(v, &d)| v.len() != d) {
                return Err(Error::DimensionMismatch(format!(
                    "term {k} does not match dims {dims:?}"
                )));
            }
        }
        Ok(())
    }
}

impl MultilinearForm {
    pub fn new(dims: Vec<usize>, entries: Vec<f64>, spaces: Vec<SpaceSpec>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "order {} < 2",
                dims.len()
            )));
        }
        Self::build(dims, entries, spaces)
    }

    fn build(dims: Vec<usize>, entries: Vec<f64>, spaces: Vec<SpaceSpec>) -> Result<Self> {
        if dims.len() > MAX_ORDER {
            return Err(Error::DimensionMismatch(format!(
                "order {} > {MAX_ORDER}",
                dims.len()
            )));
        }
        if dims.len() != spaces.len() {
            return Err(Error::DimensionMismatch(
                "one space per mode required".into(),
            ));
        }
        if let Some(k) = dims.iter().zip(&spaces).position(|(d, s)| *d != s.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "mode {k}: dim differs from its space"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| {
                acc.checked_mul(d).filter(|&t| t <= MAX_ENTRIES)
            })
            .ok_or_else(|| Error::DimensionMismatch(format!("more than {MAX_ENTRIES} entries")))?;
        if entries.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for dims {dims:?}",
                entries.len()
            )));
        }
        check_finite(&entries, "entries")?;
        Ok(Self {
            dims,
            entries,
            spaces,
            ledger: None,
        })
    }

    /// All modes carry the same norm kind as `template` (resized per mode).
    pub fn with_uniform_spaces(dims: Vec<usize>, entries: Vec<f64>, tag: &str) -> Result<Self> {
        let spaces = dims
            .iter()
            .map(|&d| SpaceSpec::from_tag(tag, d, None))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims, entries, spaces)
    }

    pub fn from_bilinear(phi: &BilinearForm) -> Self {
        let (n, m) = phi.shape();
        let a = phi.coeffs();
        let entries = (0..n)
            .flat_map(|i| (0..m).map(move |j| a[(i, j)]))
            .collect();
        Self {
            dims: vec![n, m],
            entries,
            spaces: vec![phi.domain_e().clone(), phi.domain_f().clone()],
            ledger: None,
        }
    }

    pub fn to_bilinear(&self) -> Result<BilinearForm> {
        if self.order() != 2 {
            return Err(Error::DimensionMismatch("not an order-2 form".into()));
        }
        let (n, m) = (self.dims[0], self.dims[1]);
        let a = DMatrix::from_fn(n, m, |i, j| self.entries[i * m + j]);
        BilinearForm::new(a, self.spaces[0].clone(), self.spaces[1].clone())
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn spaces(&self) -> &[SpaceSpec] {
        &self.spaces
    }

    pub fn ledger(&self) -> Option<&ConstantLedger> {
        self.ledger.as_ref()
    }

    pub fn with_ledger(mut self, ledger: ConstantLedger) -> Self {
        self.ledger = Some(ledger);
        self
    }

    /// Starts a ledger at `kg^(n−1) · ‖μ‖`, using the upper end of the norm.
    pub fn attach_ledger(self, constants: &Constants, opts: &NormOptions) -> Result<Self> {
        let scale = multilinear_norm(&self, opts)?.upper;
        Ok(self.with_ledger(ConstantLedger {
            kg: constants.kg_effective(),
            scale,
        }))
    }

    pub fn tracked_bound(&self) -> Option<f64> {
        self.ledger.map(|l| l.bound(self.order()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    fn check_vectors(&self, vectors: &[DVector<f64>]) -> Result<()> {
        if vectors.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors for an order-{} form",
                vectors.len(),
                self.order()
            )));
        }
        if let Some(k) = vectors
            .iter()
            .zip(&self.dims)
            .position(|(v, &d)| v.len() != d)
        {
            return Err(Error::DimensionMismatch(format!(
                "vector {k} has the wrong length"
            )));
        }
        Ok(())
    }

    /// `Σ t[i] Π xₖ[iₖ]` summed entry by entry in storage order.
    pub fn full_contraction(&self, vectors: &[DVector<f64>]) -> Result<f64> {
        self.check_vectors(vectors)?;
        Ok(self.entrywise_sum(vectors, |t, p| t * p))
    }

    /// `Σ |t[i]| Π |xₖ[iₖ]|`.
    pub fn abs_contraction(&self, vectors: &[DVector<f64>]) -> Result<f64> {
        self.check_vectors(vectors)?;
        Ok(self.entrywise_sum(vectors, |t, p| (t * p).abs()))
    }

    fn entrywise_sum(&self, vectors: &[DVector<f64>], f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.order();
        let mut idx = vec![0usize; n];
        let mut total = 0.0;
        for &t in &self.entries {
            let p: f64 = idx.iter().zip(vectors).map(|(&i, v)| v[i]).product();
            total += f(t, p);
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        total
    }

    /// Value of an order-1 form.
    pub fn apply_linear(&self, v: &DVector<f64>) -> Result<f64> {
        if self.order() != 1 || v.len() != self.dims[0] {
            return Err(Error::DimensionMismatch(
                "apply_linear needs an order-1 form".into(),
            ));
        }
        Ok(self.entries.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
    }

    fn contract_raw(&self, mode: usize, v: &[f64]) -> Vec<f64> {
        let mid = self.dims[mode];
        let outer: usize = self.dims[..mode].iter().product();
        let inner: usize = self.dims[mode + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (i, &vi) in v.iter().enumerate().take(mid) {
                let src = &self.entries[(o * mid + i) * inner..(o * mid + i + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += vi * s;
                }
            }
        }
        out
    }

    /// Contracts every mode except `keep` with the given vectors.
    fn contract_all_but(&self, keep: usize, vectors: &[DVector<f64>]) -> DVector<f64> {
        let mut dims = self.dims.clone();
        let mut entries = self.entries.clone();
        // Walking from the back, every mode below `k` is still in place.
        for k in (0..self.order()).rev().filter(|&k| k != keep) {
            let form = MultilinearForm {
                dims: dims.clone(),
                entries,
                spaces: Vec::new(),
                ledger: None,
            };
            entries = form.contract_raw(k, vectors[k].as_slice());
            dims.remove(k);
        }
        DVector::from_vec(entries)
    }
}

/// Contracts mode `mode` (0-based) with `v`, giving an order `n−1` form.
/// A ledger, when present, has its scale multiplied by `‖v‖` in that mode.
pub fn partial_contract(
    mu: &MultilinearForm,
    mode: usize,
    v: &DVector<f64>,
) -> Result<MultilinearForm> {
    let n = mu.order();
    if mode >= n || n < 2 {
        return Err(Error::IndexOutOfRange {
            index: mode,
            order: n,
        });
    }
    if v.len() != mu.dims[mode] {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for mode {mode} of dimension {}",
            v.len(),
            mu.dims[mode]
        )));
    }
    check_finite(v.as_slice(), "v")?;
    let entries = mu.contract_raw(mode, v.as_slice());
    let mut dims = mu.dims.clone();
    let mut spaces = mu.spaces.clone();
    dims.remove(mode);
    let space = spaces.remove(mode);
    let ledger = mu.ledger.map(|l| ConstantLedger {
        kg: l.kg,
        scale: l.scale * space.norm(v.as_slice()),
    });
    Ok(MultilinearForm {
        dims,
        entries,
        spaces,
        ledger,
    })
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} for order {n}",
            sigma.len()
        )));
    }
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidPermutation(format!(
                "{sigma:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Integrates out the modes one at a time in the order `sigma` (0-based).
pub fn permutation_evaluate(
    mu: &MultilinearForm,
    sigma: &[usize],
    vectors: &[DVector<f64>],
) -> Result<f64> {
    check_permutation(sigma, mu.order())?;
    mu.check_vectors(vectors)?;
    let mut remaining: Vec<usize> = (0..mu.order()).collect();
    let mut form = mu.clone();
    form.ledger = None;
    for &k in &sigma[..sigma.len() - 1] {
        let pos = remaining
            .iter()
            .position(|&r| r == k)
            .expect("valid permutation");
        form = partial_contract(&form, pos, &vectors[k])?;
        remaining.remove(pos);
    }
    form.apply_linear(&vectors[sigma[sigma.len() - 1]])
}

/// Every integration order of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationSweep {
    /// `(order, value)` for all `n!` orders, lexicographic.
    pub values: Vec<(Vec<usize>, f64)>,
    /// Entry-by-entry contraction.
    pub full: f64,
    /// `Σ |t| Π |x|`.
    pub scale: f64,
    /// Largest minus smallest over all orders and the full contraction.
    pub spread: f64,
    pub relative_spread: f64,
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

pub fn permutation_sweep(
    mu: &MultilinearForm,
    vectors: &[DVector<f64>],
) -> Result<PermutationSweep> {
    let full = mu.full_contraction(vectors)?;
    let scale = mu.abs_contraction(vectors)?;
    let perms = permutations(mu.order());
    let values = par::map_indexed(perms.len(), |k| {
        permutation_evaluate(mu, &perms[k], vectors)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = values
        .iter()
        .fold((full, full), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(PermutationSweep {
        values: perms.into_iter().zip(values).collect(),
        full,
        scale,
        spread: hi - lo,
        relative_spread: relative(hi - lo, scale),
    })
}

/// [`permutation_sweep`] summed over the terms of `x`.
pub fn element_sweep(mu: &MultilinearForm, x: &MultiTensorElement) -> Result<PermutationSweep> {
    x.check(&mu.dims)?;
    let mut values: Vec<(Vec<usize>, f64)> = permutations(mu.order())
        .into_iter()
        .map(|p| (p, 0.0))
        .collect();
    let (mut full, mut scale) = (0.0, 0.0);
    for t in &x.terms {
        let s = permutation_sweep(mu, t)?;
        for (acc, (_, v)) in values.iter_mut().zip(&s.values) {
            acc.1 += v;
        }
        full += s.full;
        scale += s.scale;
    }
    let (lo, hi) = values
        .iter()
        .fold((full, full), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    Ok(PermutationSweep {
        values,
        full,
        scale,
        spread: hi - lo,
        relative_spread: relative(hi - lo, scale),
    })
}

/// Reorders modes so that `order[k]` becomes mode `k`.
fn permute_modes(mu: &MultilinearForm, order: &[usize]) -> MultilinearForm {
    let n = mu.order();
    let dims: Vec<usize> = order.iter().map(|&k| mu.dims[k]).collect();
    let mut strides = vec![1usize; n];
    for k in (0..n - 1).rev() {
        strides[k] = strides[k + 1] * mu.dims[k + 1];
    }
    let total = mu.entries.len();
    let mut entries = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let src: usize = idx.iter().zip(order).map(|(&i, &k)| i * strides[k]).sum();
        entries.push(mu.entries[src]);
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    MultilinearForm {
        dims,
        entries,
        spaces: order.iter().map(|&k| mu.spaces[k].clone()).collect(),
        ledger: None,
    }
}

fn sign_vector(bits: u64, offset: u32, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |i, _| {
        if (bits >> (offset as usize + i)) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    })
}

/// All-LInf norm: enumerate signs on every mode but the largest, which is
/// then optimized in closed form (ℓ¹ norm of the contracted vector). The
/// last enumerated mode goes through the Gray-code enumerator.
fn linf_norm(mu: &MultilinearForm, opts: &NormOptions) -> Result<NormCertificate> {
    let n = mu.order();
    let free = (0..n).fold(0, |b, k| if mu.dims[k] > mu.dims[b] { k } else { b });
    let others: Vec<usize> = (0..n).filter(|&k| k != free).collect();
    let enumerated: usize = others.iter().map(|&k| mu.dims[k]).sum();
    signs::check_limit(enumerated, opts.enum_limit)?;

    let inner = *others.last().expect("order >= 2");
    let outer = &others[..others.len() - 1];
    let mut order: Vec<usize> = outer.to_vec();
    order.push(inner);
    order.push(free);
    let arranged = permute_modes(mu, &order);
    let outer_bits: usize = outer.iter().map(|&k| mu.dims[k]).sum();

    let results = par::map_indexed(1usize << outer_bits, |pattern| -> Result<_> {
        let mut form = arranged.clone();
        let mut offset = 0u32;
        let mut outer_signs = Vec::with_capacity(outer.len());
        for &k in outer {
            let s = sign_vector(pattern as u64, offset, mu.dims[k]);
            offset += mu.dims[k] as u32;
            form = partial_contract(&form, 0, &s)?;
            outer_signs.push(s);
        }
        let (di, df) = (form.dims[0], form.dims[1]);
        let rows = DMatrix::from_fn(di, df, |i, j| form.entries[i * df + j]);
        let best =
            signs::max_over_signs(&rows, opts.enum_limit, |y| y.iter().map(|v| v.abs()).sum())?;
        Ok((best.value, (outer_signs, best.signs, best.image)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (value, (outer_signs, inner_signs, image)) =
        par::argmax_first(results).expect("at least one pattern");

    let mut witness = vec![DVector::zeros(0); n];
    for (k, s) in outer.iter().zip(outer_signs) {
        witness[*k] = s;
    }
    witness[inner] = DVector::from_vec(inner_signs);
    witness[free] = DVector::from_iterator(
        image.len(),
        image.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }),
    );
    Ok(NormCertificate::exact(
        value,
        NormMethod::ExactSignEnum,
        Some(NormWitness::Tuple(witness)),
    ))
}

/// Alternating ascent: each mode is set to the norming vector of the form
/// contracted with all other modes.
fn ascent_lower(mu: &MultilinearForm, opts: &NormOptions) -> (f64, Vec<DVector<f64>>) {
    let n = mu.order();
    let starts = opts.samples.clamp(1, 16);
    let runs = par::map_indexed(starts, |s| {
        let mut r = rng::stream(opts.seed, "multilinear-ascent", s as u64);
        let mut xs: Vec<DVector<f64>> = (0..n)
            .map(|k| {
                let g = DVector::from_fn(mu.dims[k], |_, _| StandardNormal.sample(&mut r));
                let nrm = mu.spaces[k].norm(g.as_slice());
                if nrm > 0.0 {
                    g / nrm
                } else {
                    g
                }
            })
            .collect();
        let mut value = mu.full_contraction(&xs).expect("shapes match").abs();
        for _ in 0..500 {
            for k in 0..n {
                let g = mu.contract_all_but(k, &xs);
                xs[k] = mu.spaces[k].norming_vector(g.as_slice());
            }
            let v = mu.full_contraction(&xs).expect("shapes match").abs();
            let done = v <= value * (1.0 + 1e-14);
            value = value.max(v);
            if done {
                break;
            }
        }
        (value, xs)
    });
    par::argmax_first(runs).expect("at least one start")
}

/// `sup |μ(x₁,…,xₙ)|` over unit balls.
///
/// Order 2 defers to [`bilinear_norm`]. All-LInf forms are exact by sign
/// enumeration. Anything else returns a `SampledDual` interval: alternating
/// ascent below; above, the Frobenius norm of the weight-conjugated tensor
/// when every mode is Hilbertian, and `Σ|t| · Π supₓ ‖x‖_∞/‖x‖` always.
pub fn multilinear_norm(mu: &MultilinearForm, opts: &NormOptions) -> Result<NormCertificate> {
    if mu.order() == 2 {
        return bilinear_norm(&mu.to_bilinear()?, opts);
    }
    if mu.order() < 2 {
        let v = mu.spaces[0].dual_norm(&mu.entries);
        return Ok(NormCertificate::exact(v, NormMethod::ExactReduction, None));
    }
    if mu.is_zero() {
        return Ok(NormCertificate::exact(0.0, NormMethod::ExactSignEnum, None));
    }
    if mu.spaces.iter().all(SpaceSpec::is_linf) {
        return linf_norm(mu, opts);
    }
    let abs_sum: f64 = mu.entries.iter().map(|x| x.abs()).sum();
    let mut upper = abs_sum
        * mu.spaces
            .iter()
            .map(SpaceSpec::linf_embedding_constant)
            .product::<f64>();
    if mu.spaces.iter().all(SpaceSpec::is_hilbertian) {
        let weights: Vec<Vec<f64>> = mu
            .spaces
            .iter()
            .map(|s| s.hilbert_weights().expect("hilbertian"))
            .collect();
        let n = mu.order();
        let mut idx = vec![0usize; n];
        let mut frob = 0.0;
        for &t in &mu.entries {
            let w: f64 = idx.iter().zip(&weights).map(|(&i, w)| w[i]).product();
            frob += t * t / w;
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < mu.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        upper = upper.min(frob.sqrt());
    }
    let (lower, xs) = ascent_lower(mu, opts);
    Ok(NormCertificate::interval(
        lower,
        upper,
        NormMethod::SampledDual,
        Some(NormWitness::Tuple(xs)),
    ))
}

/// `‖μ‖ ≤ kg^(n−1)`, with the same straddle rule as the bilinear test.
pub fn multilinear_membership(
    mu: &MultilinearForm,
    constants: &Constants,
    opts: &NormOptions,
) -> Result<Membership> {
    let norm = multilinear_norm(mu, opts)?;
    let bound = constants.kg_effective().powi(mu.order() as i32 - 1);
    let slack = opts.tol * bound.max(1.0);
    if norm.upper <= bound + slack {
        Ok(Membership { member: true, norm })
    } else if norm.lower > bound + slack {
        Ok(Membership {
            member: false,
            norm,
        })
    } else {
        Err(Error::InexactNorm {
            lower: norm.lower,
            upper: norm.upper,
            threshold: bound,
        })
    }
}
