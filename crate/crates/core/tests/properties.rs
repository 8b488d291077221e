use gkit_core::fubini::{
    fubini_evaluate, multilinear_norm, partial_apply, partial_contract, permutation_sweep,
    MultilinearForm, PartialOperator, Side,
};
use gkit_core::kernels::{
    compose, discretize, fubini_kernel_check, make_grid, spectral_check, Kernel, Rule,
    SpectralOptions,
};
use gkit_core::sdp::{default_rank, represent, round_signs, sdp_value, SdpParams};
use gkit_core::spaces::{
    bilinear_norm, evaluate, is_grothendieck, projective_norm, BilinearForm, NormWitness,
    SpaceSpec, TensorElement,
};
use gkit_core::{rng, Constants, Error, NormOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TAGS: [&str; 4] = ["l1", "l2", "linf", "wl2"];

fn space(tag: &str, dim: usize) -> SpaceSpec {
    let w = (tag == "wl2").then(|| (0..dim).map(|i| 0.5 + 0.75 * i as f64).collect());
    SpaceSpec::from_tag(tag, dim, w).unwrap()
}

fn gaussian_matrix(seed: u64, label: &str, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, m, &rng::gaussians(seed, label, 0, n * m))
}

fn gaussian_vec(seed: u64, label: &str, index: u64, n: usize) -> DVector<f64> {
    DVector::from_vec(rng::gaussians(seed, label, index, n))
}

fn random_tensor(seed: u64, e: &SpaceSpec, f: &SpaceSpec, terms: usize) -> TensorElement {
    let t = (0..terms as u64)
        .map(|k| {
            (
                gaussian_vec(seed, "te", k, e.dim()),
                gaussian_vec(seed, "tf", k, f.dim()),
            )
        })
        .collect();
    TensorElement::new(t, e.clone(), f.clone()).unwrap()
}

fn instance() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    (any::<u64>(), 1usize..6, 1usize..6, 0usize..4, 0usize..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_absolutely_homogeneous((seed, n, m, te, tf) in instance(), c in -4.0f64..4.0) {
        let phi = BilinearForm::new(gaussian_matrix(seed, "a", n, m), space(TAGS[te], n), space(TAGS[tf], m)).unwrap();
        let opts = NormOptions::default();
        let base = bilinear_norm(&phi, &opts).unwrap();
        let scaled = bilinear_norm(&phi.scaled(c), &opts).unwrap();
        if base.is_exact() {
            let want = c.abs() * base.value();
            prop_assert!((scaled.value() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn dual_forms_never_exceed_the_projective_norm((seed, n, m, te, tf) in instance(), terms in 0usize..4) {
        let (e, f) = (space(TAGS[te], n), space(TAGS[tf], m));
        let x = random_tensor(seed, &e, &f, terms);
        let pi = projective_norm(&x, &NormOptions::default()).unwrap();
        prop_assert!(pi.lower <= pi.upper + 1e-12);
        for k in 0..4 {
            let psi = BilinearForm::new(gaussian_matrix(seed ^ k, "psi", n, m), e.clone(), f.clone()).unwrap();
            let norm = bilinear_norm(&psi, &NormOptions::default()).unwrap().upper;
            if norm == 0.0 {
                continue;
            }
            let v = evaluate(&psi.scaled(1.0 / norm), &x).unwrap();
            prop_assert!(v.abs() <= pi.upper + 1e-10, "{v} > {pi:?}");
        }
    }

    #[test]
    fn nuclear_norm_is_attained_by_its_dual_witness((seed, n, m, _, _) in instance()) {
        let c = gaussian_matrix(seed, "c", n, m);
        let x = TensorElement::from_matrix(&c, SpaceSpec::l2(n), SpaceSpec::l2(m)).unwrap();
        let cert = projective_norm(&x, &NormOptions::default()).unwrap();
        prop_assert!(cert.is_exact());
        let Some(NormWitness::Matrix(w)) = &cert.witness else { panic!("no dual witness") };
        let spectral = w.singular_values().max();
        prop_assert!((spectral - 1.0).abs() < 1e-10);
        prop_assert!((c.dot(w) - cert.value()).abs() < 1e-10 * cert.value().max(1.0));
    }

    #[test]
    fn representation_does_not_matter((seed, n, m, _, _) in instance(), terms in 1usize..5) {
        let (e, f) = (SpaceSpec::l2(n), SpaceSpec::l2(m));
        let x = random_tensor(seed, &e, &f, terms);
        let y = TensorElement::from_matrix(&x.coefficient_matrix(), e.clone(), f.clone()).unwrap();
        let phi = BilinearForm::l2(gaussian_matrix(seed, "phi", n, m)).unwrap();
        let (vx, vy) = (evaluate(&phi, &x).unwrap(), evaluate(&phi, &y).unwrap());
        prop_assert!((vx - vy).abs() <= 1e-12 * vx.abs().max(1.0));
        let opts = NormOptions::default();
        let (px, py) = (projective_norm(&x, &opts).unwrap().value(), projective_norm(&y, &opts).unwrap().value());
        prop_assert!((px - py).abs() <= 1e-12 * px.max(1.0));
    }

    #[test]
    fn membership_is_scale_monotone((seed, n, m, te, tf) in instance(), c in 0.0f64..=1.0) {
        let phi = BilinearForm::new(gaussian_matrix(seed, "a", n, m), space(TAGS[te], n), space(TAGS[tf], m)).unwrap();
        let (k, opts) = (Constants::default(), NormOptions::default());
        let norm = bilinear_norm(&phi, &opts).unwrap().value();
        // Rescale so that membership holds, then shrink.
        let phi = if norm > 0.0 { phi.scaled(1.5 / norm) } else { phi };
        if let Ok(mem) = is_grothendieck(&phi, &k, &opts) {
            if mem.member {
                prop_assert!(is_grothendieck(&phi.scaled(c), &k, &opts).unwrap().member);
            }
        }
    }

    #[test]
    fn factorization_reproduces_every_basis_pair((seed, n, m, te, tf) in instance(), c in 0.01f64..10.0) {
        let phi = BilinearForm::new(gaussian_matrix(seed, "a", n, m), space(TAGS[te], n), space(TAGS[tf], m)).unwrap();
        let (k, opts) = (Constants::default(), NormOptions::default());
        let w = represent(&phi, &k, &opts).unwrap();
        for i in 0..n {
            for j in 0..m {
                let ip = w.u.row(i).dot(&w.v.row(j));
                prop_assert!((ip - phi.coeffs()[(i, j)]).abs() <= 1e-10);
            }
        }
        let ws = represent(&phi.scaled(c), &k, &opts).unwrap();
        let r = c.sqrt();
        prop_assert!((ws.norm_a - r * w.norm_a).abs() <= 1e-10 * (r * w.norm_a).max(1.0));
        prop_assert!((ws.norm_b - r * w.norm_b).abs() <= 1e-10 * (r * w.norm_b).max(1.0));
    }

    #[test]
    fn fubini_orders_agree((seed, n, m, te, tf) in instance(), terms in 0usize..5) {
        let (e, f) = (space(TAGS[te], n), space(TAGS[tf], m));
        let phi = BilinearForm::new(gaussian_matrix(seed, "a", n, m), e.clone(), f.clone()).unwrap();
        let t = fubini_evaluate(&phi, &random_tensor(seed, &e, &f, terms)).unwrap();
        prop_assert!(t.relative_spread() <= 1e-12, "{t:?}");
    }

    #[test]
    fn kernel_norm_relations(seed in any::<u64>(), nx in 2usize..40, ny in 2usize..40, gl in any::<bool>()) {
        let rule = if gl { Rule::GaussLegendre } else { Rule::Trapezoid };
        let gx = make_grid(nx, 0.0, 1.0, rule).unwrap();
        let gy = make_grid(ny, -1.0, 2.0, rule).unwrap();
        let k = Kernel::from_values(gaussian_matrix(seed, "k", nx, ny), gx, gy).unwrap();
        prop_assert!(k.hs_norm() >= k.operator_norm() - 1e-10);
        let frob = k.weighted_matrix().norm();
        prop_assert!((k.hs_norm() - frob).abs() <= 1e-12 * frob.max(1.0));
        let c = fubini_kernel_check(&k, &gaussian_vec(seed, "f", 0, nx), &gaussian_vec(seed, "g", 0, ny)).unwrap();
        prop_assert!(c.relative_gap() <= 1e-12);
    }
}

#[test]
fn sdp_value_is_monotone_in_rank_above_the_default() {
    for seed in 0..20 {
        let (n, m) = (2 + seed as usize % 5, 3 + seed as usize % 4);
        let phi = BilinearForm::linf(gaussian_matrix(seed, "a", n, m)).unwrap();
        let d0 = default_rank(n, m);
        let mut prev = f64::NEG_INFINITY;
        for d in d0..d0 + 4 {
            let v = sdp_value(
                &phi,
                &SdpParams::for_shape(n, m).with_rank(d).with_seed(seed),
            )
            .unwrap()
            .value;
            assert!(v >= prev - 1e-8, "seed {seed} rank {d}: {v} < {prev}");
            prev = v;
        }
    }
}

#[test]
fn sdp_dominates_the_sign_optimum_and_rounding_does_not() {
    let opts = NormOptions::default();
    for seed in 0..40 {
        let (n, m) = (1 + seed as usize % 6, 1 + (seed as usize / 6) % 6);
        let phi = BilinearForm::linf(gaussian_matrix(seed, "a", n, m)).unwrap();
        let norm = bilinear_norm(&phi, &opts).unwrap().value();
        let sol = sdp_value(&phi, &SdpParams::for_shape(n, m).with_seed(seed)).unwrap();
        assert!(
            sol.value >= norm - 1e-8,
            "seed {seed}: {} < {norm}",
            sol.value
        );
        let r = round_signs(&sol, &phi, 32, seed).unwrap();
        assert!(r.value <= norm + 1e-12 * norm.max(1.0));
    }
}

#[test]
fn partial_operator_norm_equals_form_norm() {
    let opts = NormOptions::default();
    for te in TAGS {
        for tf in TAGS {
            for seed in 0..100u64 {
                let (n, m) = (1 + seed as usize % 5, 1 + (seed as usize / 5) % 5);
                let phi =
                    BilinearForm::new(gaussian_matrix(seed, "a", n, m), space(te, n), space(tf, m))
                        .unwrap();
                let form = bilinear_norm(&phi, &opts).unwrap();
                let op = PartialOperator::of(&phi, Side::LeftT)
                    .operator_norm(&opts)
                    .unwrap();
                if form.is_exact() && op.is_exact() {
                    assert!(
                        (form.value() - op.value()).abs() <= 1e-10 * form.value().max(1.0),
                        "{te}/{tf} seed {seed}: {form:?} vs {op:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn evaluation_is_continuous_in_the_projective_norm() {
    let opts = NormOptions::default();
    for seed in 0..10u64 {
        let (e, f) = (SpaceSpec::linf(3), SpaceSpec::l1(4));
        let phi =
            BilinearForm::new(gaussian_matrix(seed, "a", 3, 4), e.clone(), f.clone()).unwrap();
        let norm = bilinear_norm(&phi, &opts).unwrap().upper;
        let x = random_tensor(seed, &e, &f, 3);
        let y = random_tensor(seed ^ 0xabc, &e, &f, 2);
        let mu = evaluate(&phi, &x).unwrap();
        for k in 1..=8 {
            let step = 0.5f64.powi(k);
            let xn = TensorElement::new(
                x.terms()
                    .iter()
                    .cloned()
                    .chain(y.terms().iter().map(|(a, b)| (a * step, b.clone())))
                    .collect(),
                e.clone(),
                f.clone(),
            )
            .unwrap();
            let dist = projective_norm(&xn.difference(&x).unwrap(), &opts)
                .unwrap()
                .upper;
            let lhs = (evaluate(&phi, &xn).unwrap() - mu).abs();
            assert!(
                lhs <= norm * dist + 1e-12,
                "seed {seed} step {step}: {lhs} > {}",
                norm * dist
            );
        }
    }
}

#[test]
fn permutation_spread_up_to_order_five() {
    for seed in 0..20u64 {
        let order = 3 + seed as usize % 3;
        let dims: Vec<usize> = (0..order).map(|k| 2 + (seed as usize + k) % 2).collect();
        let total = dims.iter().product();
        let mu = MultilinearForm::with_uniform_spaces(
            dims.clone(),
            rng::gaussians(seed, "t", 0, total),
            "linf",
        )
        .unwrap();
        let xs: Vec<_> = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| gaussian_vec(seed, "x", k as u64, d))
            .collect();
        let s = permutation_sweep(&mu, &xs).unwrap();
        assert_eq!(s.values.len(), (1..=order).product::<usize>());
        assert!(s.relative_spread <= 1e-12, "{s:?}");
    }
}

#[test]
fn ledger_bounds_every_contraction() {
    let (k, opts) = (Constants::default(), NormOptions::default());
    for seed in 0..10u64 {
        let dims = vec![2, 3, 2, 2];
        let mu = MultilinearForm::with_uniform_spaces(
            dims.clone(),
            rng::gaussians(seed, "t", 0, 24),
            "linf",
        )
        .unwrap()
        .attach_ledger(&k, &opts)
        .unwrap();
        let scale0 = mu.ledger().unwrap().scale;
        let mut cur = mu;
        let mut vnorms = 1.0;
        for step in 0..3 {
            let v = gaussian_vec(seed, "v", step, cur.dims()[0]);
            vnorms *= cur.spaces()[0].norm(v.as_slice());
            cur = partial_contract(&cur, 0, &v).unwrap();
            let left = 4 - 1 - (step as i32 + 1);
            let want = k.kg_effective().powi(left) * scale0 * vnorms;
            let tracked = cur.tracked_bound().unwrap();
            assert!((tracked - want).abs() <= 1e-12 * want.max(1.0));
            let actual = multilinear_norm(&cur, &opts).unwrap().upper;
            assert!(
                actual <= tracked + 1e-10,
                "seed {seed} step {step}: {actual} > {tracked}"
            );
        }
    }
}

#[test]
fn order_two_forms_agree_with_bilinear_routines() {
    let opts = NormOptions::default();
    for seed in 0..20u64 {
        let (te, tf) = (TAGS[seed as usize % 4], TAGS[(seed as usize / 4) % 4]);
        let (n, m) = (2 + seed as usize % 3, 1 + seed as usize % 4);
        let phi = BilinearForm::new(gaussian_matrix(seed, "a", n, m), space(te, n), space(tf, m))
            .unwrap();
        let mu = MultilinearForm::from_bilinear(&phi);
        let (e, f) = (gaussian_vec(seed, "e", 0, n), gaussian_vec(seed, "f", 0, m));
        let a = partial_contract(&mu, 0, &e).unwrap();
        let b = partial_apply(&phi, Side::LeftT, &e).unwrap();
        for (x, y) in a.entries().iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        let full = mu.full_contraction(&[e.clone(), f.clone()]).unwrap();
        assert!((full - phi.apply(&e, &f).unwrap()).abs() <= 1e-12 * full.abs().max(1.0));
        let (x, y) = (
            multilinear_norm(&mu, &opts).unwrap(),
            bilinear_norm(&phi, &opts).unwrap(),
        );
        assert!((x.lower - y.lower).abs() <= 1e-12 * y.upper.max(1.0));
        assert!((x.upper - y.upper).abs() <= 1e-12 * y.upper.max(1.0));
    }
}

fn shared_grid_kernel(seed: u64, label: &str, n: usize) -> Kernel {
    let g = make_grid(n, 0.0, 1.0, Rule::GaussLegendre).unwrap();
    let a = gaussian_matrix(seed, label, n, n);
    discretize(|x, y| x + y, &g, &g).unwrap(); // smoke: closure path
    Kernel::from_values(a, g.clone(), g).unwrap()
}

#[test]
fn composition_is_associative_and_submultiplicative() {
    let k = Constants::default();
    for seed in 0..10u64 {
        let n = 8 + seed as usize;
        let (a, b, c) = (
            shared_grid_kernel(seed, "a", n),
            shared_grid_kernel(seed, "b", n),
            shared_grid_kernel(seed, "c", n),
        );
        let ab_c = compose(&compose(&a, &b, &k).unwrap().kernel, &c, &k)
            .unwrap()
            .kernel;
        let a_bc = compose(&a, &compose(&b, &c, &k).unwrap().kernel, &k)
            .unwrap()
            .kernel;
        let scale = ab_c.values().amax().max(1.0);
        assert!((ab_c.values() - a_bc.values()).amax() <= 1e-11 * scale);
        let ab = compose(&a, &b, &k).unwrap().kernel;
        assert!(ab.operator_norm() <= a.operator_norm() * b.operator_norm() + 1e-9);
    }
}

#[test]
fn spectra_lie_within_the_operator_norm() {
    let opts = SpectralOptions::default();
    for seed in 0..20u64 {
        let n = 5 + seed as usize;
        let g = make_grid(n, 0.0, 1.0, Rule::Trapezoid).unwrap();
        let a = gaussian_matrix(seed, "s", n, n);
        let sym = (&a + a.transpose()) * 0.5;
        // Every other instance is a Gram matrix, hence PSD.
        let vals = if seed % 2 == 0 {
            &sym * sym.transpose()
        } else {
            sym
        };
        let k = Kernel::from_values(vals, g.clone(), g).unwrap();
        let r = spectral_check(&k, &Constants::default(), &opts).unwrap();
        let tol = 1e-9 * r.op_norm.max(1.0);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.eigenvalues.iter().all(|&l| l.abs() <= r.op_norm + tol));
        if r.psd {
            assert!(r.eigenvalues.iter().all(|&l| l >= -tol));
        }
        let sq: f64 = r.eigenvalues.iter().map(|l| l * l).sum();
        assert!((sq.sqrt() - r.hs_norm).abs() <= 1e-9 * r.hs_norm.max(1.0));
        assert!((r.eigenvalues[0].abs().max(r.eigenvalues[n - 1].abs()) - r.op_norm).abs() <= 1e-9);
    }
}

#[test]
fn error_variants_surface() {
    let opts = NormOptions::default().with_enum_limit(3);
    let phi = BilinearForm::linf(DMatrix::from_element(5, 4, 1.0)).unwrap();
    assert!(matches!(
        bilinear_norm(&phi, &opts),
        Err(Error::EnumLimitExceeded { dims: 4, limit: 3 })
    ));
    let p = SdpParams::for_shape(5, 4).with_rank(0);
    assert!(matches!(sdp_value(&phi, &p), Err(Error::InvalidRank(0))));
}
