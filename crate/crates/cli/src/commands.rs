use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gkit_core::fubini::{
    element_sweep, fubini_evaluate, multilinear_membership, multilinear_norm, operator_form_check,
    MultiTensorElement, MultilinearForm, OperatorFormCheck,
};
use gkit_core::kernels::{
    analytic_green_eigenvalue, compose, fubini_kernel_check, green_1d, green_consistency,
    make_grid, spectral_check, triple_integral, weyl_slope, Builtin, GreenConsistency, Kernel,
    KernelFubini, QuadratureGrid, Rule, SpectralOptions, TripleIntegral,
};
use gkit_core::sdp::{grothendieck_ratio, represent, round_signs, SdpParams};
use gkit_core::spaces::{
    bilinear_norm, is_grothendieck, projective_norm, total_variation_vs_norm, BilinearForm,
    NormCertificate, SpaceSpec, TensorElement, TotalVariation,
};
use gkit_core::{io, rng, Error};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Command, FileKind, Format, GenKind, GridArgs, Outcome, RunConfig};

const SCHEMA: u32 = io::SCHEMA;

pub(crate) fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let needs_json = !matches!(
        cmd,
        Command::Sdp { .. }
            | Command::Represent { .. }
            | Command::Kernel { .. }
            | Command::Green { .. }
            | Command::Compose { .. }
            | Command::Canon { .. }
    );
    if needs_json && cfg.format == Format::Csv {
        bail!(
            "--format csv is only available for sdp, represent, kernel, green, compose and canon"
        );
    }
    match cmd {
        Command::Norm { form } => norm(form, cfg),
        Command::Projective { tensor, form } => projective(tensor, form.as_deref(), cfg),
        Command::Grothendieck { form } => membership(form, cfg),
        Command::Tv { form } => tv(form, cfg),
        Command::Sdp {
            form,
            rank,
            restarts,
            max_iters,
            samples,
            witness_file,
        } => sdp(
            form,
            *rank,
            *restarts,
            *max_iters,
            *samples,
            witness_file.as_deref(),
            cfg,
        ),
        Command::Represent { form } => represent_cmd(form, cfg),
        Command::Fubini {
            form,
            tensor,
            random,
            terms,
        } => fubini(
            form.as_deref(),
            tensor.as_deref(),
            random.as_deref(),
            *terms,
            cfg,
        ),
        Command::Multifubini {
            form,
            element,
            random,
            terms,
        } => multifubini(
            form.as_deref(),
            element.as_deref(),
            random.as_deref(),
            *terms,
            cfg,
        ),
        Command::Multinorm { form } => multinorm(form, cfg),
        Command::Kernel {
            source,
            grid,
            refine,
            spectral,
            top,
        } => kernel(source, grid, *refine, *spectral, *top, cfg),
        Command::Green {
            n,
            rule,
            weyl,
            consistency,
            top,
        } => green(*n, rule, *weyl, *consistency, *top, cfg),
        Command::Compose { k1, k2, grid, top } => compose_cmd(k1, k2, grid, *top, cfg),
        Command::Gen { what } => gen(what, cfg),
        Command::Canon { kind, file } => canon(*kind, file, cfg),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_form(path: &Path) -> Result<BilinearForm> {
    io::form_from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad dimension list `{s}`"))?;
    if dims.contains(&0) {
        bail!("dimensions must be positive");
    }
    Ok(dims)
}

fn rule_of(s: &str) -> Result<Rule> {
    Ok(s.parse::<Rule>()?)
}

#[derive(Serialize)]
struct CertificateReport<'a> {
    schema: u32,
    #[serde(flatten)]
    cert: &'a NormCertificate,
    exact: bool,
}

fn certificate_json(cert: &NormCertificate) -> String {
    io::to_json(&CertificateReport {
        schema: SCHEMA,
        cert,
        exact: cert.is_exact(),
    })
}

fn norm(form: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let phi = load_form(form)?;
    Ok(Outcome::ok(certificate_json(&bilinear_norm(
        &phi, &cfg.opts,
    )?)))
}

fn projective(tensor: &Path, form: Option<&Path>, cfg: &RunConfig) -> Result<Outcome> {
    let phi = form.map(load_form).transpose()?;
    let spaces = phi.as_ref().map(|p| (p.domain_e(), p.domain_f()));
    let x = io::tensor_from_json(&read(tensor)?, spaces)?;
    Ok(Outcome::ok(certificate_json(&projective_norm(
        &x, &cfg.opts,
    )?)))
}

#[derive(Serialize)]
struct MembershipReport<'a> {
    schema: u32,
    member: Option<bool>,
    bound: f64,
    norm: &'a NormCertificate,
}

fn membership(form: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let phi = load_form(form)?;
    let m = is_grothendieck(&phi, &cfg.constants, &cfg.opts)?;
    Ok(Outcome::ok(io::to_json(&MembershipReport {
        schema: SCHEMA,
        member: Some(m.member),
        bound: cfg.constants.kg_effective(),
        norm: &m.norm,
    })))
}

#[derive(Serialize)]
struct TvReport {
    schema: u32,
    #[serde(flatten)]
    tv: TotalVariation,
}

fn tv(form: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let phi = load_form(form)?;
    let tv = total_variation_vs_norm(&phi, &cfg.opts)?;
    Ok(Outcome::ok(io::to_json(&TvReport { schema: SCHEMA, tv })))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[derive(Serialize)]
struct WitnessJson {
    schema: u32,
    d: usize,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn factors_json(u: &DMatrix<f64>, v: &DMatrix<f64>) -> String {
    io::to_json(&WitnessJson {
        schema: SCHEMA,
        d: u.ncols(),
        u: matrix_rows(u),
        v: matrix_rows(v),
    })
}

#[derive(Serialize)]
struct SdpReport {
    schema: u32,
    sdp_value: f64,
    norm: f64,
    ratio: f64,
    rank: usize,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    rounded_value: f64,
    kg_effective: f64,
    within_kg: bool,
    consistent: bool,
    witness_file: Option<String>,
}

fn sdp(
    form: &Path,
    rank: Option<usize>,
    restarts: usize,
    max_iters: usize,
    samples: usize,
    witness_file: Option<&Path>,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let phi = load_form(form)?;
    let (n, m) = phi.shape();
    let mut params = SdpParams::for_shape(n, m)
        .with_seed(cfg.seed)
        .with_restarts(restarts);
    params.max_iters = max_iters;
    if let Some(r) = rank {
        params = params.with_rank(r);
    }
    let (ratio, sol) = grothendieck_ratio(&phi, &cfg.constants, &params, &cfg.opts)?;
    let rounding = round_signs(
        &sol,
        &phi,
        samples,
        rng::derive_seed(cfg.seed, "sdp-rounding", 0),
    )?;
    if let Some(p) = witness_file {
        let text = if p.extension().is_some_and(|e| e == "csv") {
            io::factors_to_csv(&sol.u, &sol.v)
        } else {
            factors_json(&sol.u, &sol.v)
        };
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    let pass = ratio.within_kg && ratio.consistent;
    if cfg.format == Format::Csv {
        return Ok(Outcome {
            text: io::factors_to_csv(&sol.u, &sol.v),
            pass,
        });
    }
    let report = SdpReport {
        schema: SCHEMA,
        sdp_value: ratio.sdp,
        norm: ratio.norm,
        ratio: ratio.ratio,
        rank: ratio.rank,
        converged: ratio.converged,
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
        rounded_value: rounding.value,
        kg_effective: cfg.constants.kg_effective(),
        within_kg: ratio.within_kg,
        consistent: ratio.consistent,
        witness_file: witness_file.map(|p| p.display().to_string()),
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

#[derive(Serialize)]
struct RepresentReport<'a> {
    schema: u32,
    rank: usize,
    norm_a: f64,
    norm_b: f64,
    product: f64,
    form_norm: &'a NormCertificate,
    within_kg_bound: Option<bool>,
    max_reconstruction_error: f64,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn represent_cmd(form: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let phi = load_form(form)?;
    let w = represent(&phi, &cfg.constants, &cfg.opts)?;
    let err = w.max_reconstruction_error(&phi);
    let pass = err <= 1e-10 * phi.coeffs().amax().max(1.0) && w.within_kg_bound != Some(false);
    if cfg.format == Format::Csv {
        return Ok(Outcome {
            text: io::witness_to_csv(&w),
            pass,
        });
    }
    let report = RepresentReport {
        schema: SCHEMA,
        rank: w.rank(),
        norm_a: w.norm_a,
        norm_b: w.norm_b,
        product: w.norm_a * w.norm_b,
        form_norm: &w.form_norm,
        within_kg_bound: w.within_kg_bound,
        max_reconstruction_error: err,
        u: matrix_rows(&w.u),
        v: matrix_rows(&w.v),
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

fn random_form(
    dims: (usize, usize),
    tag_e: &str,
    tag_f: &str,
    signs: bool,
    seed: u64,
) -> Result<BilinearForm> {
    let (n, m) = dims;
    let data = if signs {
        rng::signs(seed, "gen-form", 0, n * m)
    } else {
        rng::gaussians(seed, "gen-form", 0, n * m)
    };
    let e = gen_space(tag_e, n, seed, "gen-weights-e")?;
    let f = gen_space(tag_f, m, seed, "gen-weights-f")?;
    Ok(BilinearForm::new(
        DMatrix::from_row_slice(n, m, &data),
        e,
        f,
    )?)
}

/// Weighted spaces get log-normal weights from their own stream.
fn gen_space(tag: &str, dim: usize, seed: u64, label: &str) -> Result<SpaceSpec> {
    let weights = (tag == "wl2").then(|| {
        rng::gaussians(seed, label, 0, dim)
            .into_iter()
            .map(|g| (0.5 * g).exp())
            .collect()
    });
    Ok(SpaceSpec::from_tag(tag, dim, weights)?)
}

fn random_tensor(e: &SpaceSpec, f: &SpaceSpec, terms: usize, seed: u64) -> Result<TensorElement> {
    let t = (0..terms)
        .map(|k| {
            (
                DVector::from_vec(rng::gaussians(seed, "gen-tensor-e", k as u64, e.dim())),
                DVector::from_vec(rng::gaussians(seed, "gen-tensor-f", k as u64, f.dim())),
            )
        })
        .collect();
    Ok(TensorElement::new(t, e.clone(), f.clone())?)
}

fn random_multi(dims: &[usize], tag: &str, seed: u64) -> Result<MultilinearForm> {
    let total = dims.iter().product();
    Ok(MultilinearForm::with_uniform_spaces(
        dims.to_vec(),
        rng::gaussians(seed, "gen-multi", 0, total),
        tag,
    )?)
}

fn random_multi_element(dims: &[usize], terms: usize, seed: u64) -> MultiTensorElement {
    MultiTensorElement {
        terms: (0..terms)
            .map(|k| {
                dims.iter()
                    .enumerate()
                    .map(|(mode, &d)| {
                        let index = (k * dims.len() + mode) as u64;
                        DVector::from_vec(rng::gaussians(seed, "gen-multi-element", index, d))
                    })
                    .collect()
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct FubiniReport {
    schema: u32,
    via_t: f64,
    via_s: f64,
    direct: f64,
    scale: f64,
    spread: f64,
    relative_spread: f64,
    operator_form: OperatorFormCheck,
    pass: bool,
}

fn fubini(
    form: Option<&Path>,
    tensor: Option<&Path>,
    random: Option<&str>,
    terms: usize,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let (phi, x) = match (form, tensor, random) {
        (_, _, Some(r)) => {
            let d = parse_dims(r)?;
            if d.len() != 2 {
                bail!("--random for fubini takes two dimensions");
            }
            let phi = random_form((d[0], d[1]), "linf", "linf", false, cfg.seed)?;
            let x = random_tensor(phi.domain_e(), phi.domain_f(), terms, cfg.seed)?;
            (phi, x)
        }
        (Some(f), Some(t), None) => {
            let phi = load_form(f)?;
            let x = io::tensor_from_json(&read(t)?, Some((phi.domain_e(), phi.domain_f())))?;
            (phi, x)
        }
        _ => bail!("fubini needs a form and a tensor file, or --random"),
    };
    let t = fubini_evaluate(&phi, &x)?;
    let op = operator_form_check(&phi, &x)?;
    let pass = t.relative_spread() <= cfg.tol;
    Ok(Outcome {
        text: io::to_json(&FubiniReport {
            schema: SCHEMA,
            via_t: t.via_t,
            via_s: t.via_s,
            direct: t.direct,
            scale: t.scale,
            spread: t.spread(),
            relative_spread: t.relative_spread(),
            operator_form: op,
            pass,
        }),
        pass,
    })
}

#[derive(Serialize)]
struct OrderValue {
    /// 1-based mode order.
    order: Vec<usize>,
    value: f64,
}

#[derive(Serialize)]
struct MultiFubiniReport {
    schema: u32,
    dims: Vec<usize>,
    orders: Vec<OrderValue>,
    full: f64,
    scale: f64,
    spread: f64,
    relative_spread: f64,
    pass: bool,
}

fn multifubini(
    form: Option<&Path>,
    element: Option<&Path>,
    random: Option<&str>,
    terms: usize,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let (mu, x) = match (form, element, random) {
        (_, _, Some(r)) => {
            let dims = parse_dims(r)?;
            (
                random_multi(&dims, "linf", cfg.seed)?,
                random_multi_element(&dims, terms, cfg.seed),
            )
        }
        (Some(f), Some(e), None) => {
            let mu = io::multilinear_from_json(&read(f)?)?;
            let x = io::multi_tensor_from_json(&read(e)?, mu.dims())?;
            (mu, x)
        }
        _ => bail!("multifubini needs a form and an element file, or --random"),
    };
    let s = element_sweep(&mu, &x)?;
    let pass = s.relative_spread <= cfg.tol;
    let report = MultiFubiniReport {
        schema: SCHEMA,
        dims: mu.dims().to_vec(),
        orders: s
            .values
            .iter()
            .map(|(o, v)| OrderValue {
                order: o.iter().map(|k| k + 1).collect(),
                value: *v,
            })
            .collect(),
        full: s.full,
        scale: s.scale,
        spread: s.spread,
        relative_spread: s.relative_spread,
        pass,
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

fn multinorm(form: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let mu = io::multilinear_from_json(&read(form)?)?;
    let bound = cfg.constants.kg_effective().powi(mu.order() as i32 - 1);
    let (member, norm) = match multilinear_membership(&mu, &cfg.constants, &cfg.opts) {
        Ok(m) => (Some(m.member), m.norm),
        Err(Error::InexactNorm { .. }) => (None, multilinear_norm(&mu, &cfg.opts)?),
        Err(e) => return Err(e.into()),
    };
    Ok(Outcome::ok(io::to_json(&MembershipReport {
        schema: SCHEMA,
        member,
        bound,
        norm: &norm,
    })))
}

fn grid_of(g: &GridArgs, n: usize) -> Result<QuadratureGrid> {
    Ok(make_grid(n, g.a, g.b, rule_of(&g.rule)?)?)
}

/// A built-in name, or a path to a kernel CSV.
enum Source {
    Builtin(Builtin),
    File(PathBuf),
}

impl Source {
    fn parse(s: &str) -> Source {
        match s.parse::<Builtin>() {
            Ok(b) => Source::Builtin(b),
            Err(_) => Source::File(PathBuf::from(s)),
        }
    }

    fn name(&self) -> String {
        match self {
            Source::Builtin(b) => b.name(),
            Source::File(p) => p.display().to_string(),
        }
    }

    fn load(&self, gx: &QuadratureGrid, gy: &QuadratureGrid) -> Result<Kernel> {
        match self {
            Source::Builtin(b) => Ok(b.discretize(gx, gy)?),
            Source::File(p) => Ok(io::kernel_from_csv(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))?),
        }
    }
}

#[derive(Serialize)]
struct Refinement {
    n: Vec<usize>,
    op_norm: Vec<f64>,
    /// `|op_norm(2n) − op_norm(n)|`.
    gaps: Vec<f64>,
    monotone_increasing: bool,
    gaps_shrinking: bool,
}

#[derive(Serialize)]
struct SpectralSummary {
    eigenvalues: Vec<f64>,
    hs_norm: f64,
    op_norm: f64,
    symmetric: bool,
    psd: bool,
    bound_applicable: bool,
    within_bound: Option<bool>,
}

#[derive(Serialize)]
struct KernelReport {
    schema: u32,
    kernel: String,
    n: usize,
    rule: Option<Rule>,
    op_norm: f64,
    hs_norm: f64,
    /// Both iterated sums of `φ(1, 1)`.
    fubini: KernelFubini,
    fubini_relative_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<Refinement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral: Option<SpectralSummary>,
}

fn spectral_summary(k: &Kernel, top: usize, cfg: &RunConfig) -> Result<SpectralSummary> {
    let opts = SpectralOptions {
        tol: 1e-9,
        keep_eigenfunctions: false,
    };
    let r = spectral_check(k, &cfg.constants, &opts)?;
    Ok(SpectralSummary {
        eigenvalues: r.eigenvalues.iter().take(top).copied().collect(),
        hs_norm: r.hs_norm,
        op_norm: r.op_norm,
        symmetric: r.symmetric,
        psd: r.psd,
        bound_applicable: r.bound_applicable,
        within_bound: r.within_bound,
    })
}

fn refinement(src: &Source, g: &GridArgs, n0: usize) -> Result<Refinement> {
    if n0 < 2 || n0 > g.n {
        bail!("--refine start {n0} must lie in [2, --n]");
    }
    let mut ns = vec![n0];
    while ns.last().unwrap() * 2 <= g.n {
        ns.push(ns.last().unwrap() * 2);
    }
    let norms = ns
        .iter()
        .map(|&n| {
            let grid = grid_of(g, n)?;
            Ok(src.load(&grid, &grid)?.operator_norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(Refinement {
        monotone_increasing: norms.windows(2).all(|w| w[1] >= w[0]),
        gaps_shrinking: gaps.windows(2).all(|w| w[1] < w[0]),
        n: ns,
        op_norm: norms,
        gaps,
    })
}

fn kernel(
    source: &str,
    g: &GridArgs,
    refine: Option<usize>,
    spectral: bool,
    top: usize,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let src = Source::parse(source);
    let grid = grid_of(g, g.n)?;
    let k = src.load(&grid, &grid)?;
    if cfg.format == Format::Csv {
        return Ok(Outcome::ok(io::kernel_to_csv(&k)));
    }
    let refinement = match (refine, &src) {
        (None, _) => None,
        (Some(n0), Source::Builtin(_)) => Some(refinement(&src, g, n0)?),
        (Some(_), Source::File(_)) => bail!("--refine needs a built-in kernel"),
    };
    let spectral = spectral
        .then(|| spectral_summary(&k, top, cfg))
        .transpose()?;
    let f = DVector::from_element(k.grid_x().len(), 1.0);
    let h = DVector::from_element(k.grid_y().len(), 1.0);
    let fub = fubini_kernel_check(&k, &f, &h)?;
    let pass = fub.relative_gap() <= cfg.tol
        && spectral
            .as_ref()
            .is_none_or(|s| s.within_bound != Some(false));
    let report = KernelReport {
        schema: SCHEMA,
        kernel: src.name(),
        n: k.grid_x().len(),
        rule: k.grid_x().rule(),
        op_norm: k.operator_norm(),
        hs_norm: k.hs_norm(),
        fubini_relative_gap: fub.relative_gap(),
        fubini: fub,
        refinement,
        spectral,
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

#[derive(Serialize)]
struct EigenRow {
    j: usize,
    value: f64,
    analytic: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct GreenReport {
    schema: u32,
    n: usize,
    rule: Rule,
    op_norm: f64,
    hs_norm: f64,
    /// `(Σ 1/(jπ)⁴)^{1/2} = 1/√90`.
    hs_norm_analytic: f64,
    psd: bool,
    within_bound: Option<bool>,
    eigenvalues: Vec<EigenRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weyl_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistency: Option<GreenConsistency>,
}

fn green(
    n: usize,
    rule: &str,
    weyl: bool,
    consistency: bool,
    top: usize,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let rule = rule_of(rule)?;
    let k = green_1d(n, rule)?;
    if cfg.format == Format::Csv {
        return Ok(Outcome::ok(io::kernel_to_csv(&k)));
    }
    let r = spectral_check(&k, &cfg.constants, &SpectralOptions::default())?;
    let eigenvalues = r
        .eigenvalues
        .iter()
        .take(top)
        .enumerate()
        .map(|(i, &value)| {
            let analytic = analytic_green_eigenvalue(i + 1);
            EigenRow {
                j: i + 1,
                value,
                analytic,
                relative_error: (value - analytic).abs() / analytic,
            }
        })
        .collect();
    let weyl_slope = weyl
        .then(|| weyl_slope(&r.eigenvalues, 2, 20))
        .transpose()?;
    let consistency = consistency
        .then(|| green_consistency(n, 2 * n - 1))
        .transpose()?;
    let pass = r.within_bound != Some(false);
    let report = GreenReport {
        schema: SCHEMA,
        n,
        rule,
        op_norm: r.op_norm,
        hs_norm: r.hs_norm,
        hs_norm_analytic: 1.0 / 90f64.sqrt(),
        psd: r.psd,
        within_bound: r.within_bound,
        eigenvalues,
        weyl_slope,
        consistency,
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

#[derive(Serialize)]
struct ComposeReport {
    schema: u32,
    k1: String,
    k2: String,
    n: usize,
    op_norm_k1: f64,
    op_norm_k2: f64,
    op_norm: f64,
    submultiplicative: bool,
    ledger_bound: Option<f64>,
    /// Three groupings of `∫∫ k(x,z) f(x) h(z)` for Gaussian `f`, `h`.
    groupings: TripleIntegral,
    eigenvalues: Option<Vec<f64>>,
    pass: bool,
}

fn compose_cmd(k1: &str, k2: &str, g: &GridArgs, top: usize, cfg: &RunConfig) -> Result<Outcome> {
    let grid = grid_of(g, g.n)?;
    let (s1, s2) = (Source::parse(k1), Source::parse(k2));
    let a = s1.load(&grid, &grid)?;
    let b = s2.load(&grid, &grid)?;
    let c = compose(&a, &b, &cfg.constants)?;
    if cfg.format == Format::Csv {
        return Ok(Outcome::ok(io::kernel_to_csv(&c.kernel)));
    }
    let f = DVector::from_vec(rng::gaussians(cfg.seed, "compose-f", 0, a.grid_x().len()));
    let h = DVector::from_vec(rng::gaussians(cfg.seed, "compose-h", 0, b.grid_y().len()));
    let groupings = triple_integral(&a, &b, &f, &h)?;
    let (na, nb, nc) = (
        a.operator_norm(),
        b.operator_norm(),
        c.kernel.operator_norm(),
    );
    let eigenvalues = if c.kernel.grid_x().same_as(c.kernel.grid_y()) {
        Some(spectral_summary(&c.kernel, top, cfg)?.eigenvalues)
    } else {
        None
    };
    let submultiplicative = nc <= na * nb + 1e-9;
    let pass = groupings.relative_discrepancy <= cfg.tol && submultiplicative;
    let report = ComposeReport {
        schema: SCHEMA,
        k1: s1.name(),
        k2: s2.name(),
        n: grid.len(),
        op_norm_k1: na,
        op_norm_k2: nb,
        op_norm: nc,
        submultiplicative,
        ledger_bound: c.ledger_bound,
        groupings,
        eigenvalues,
        pass,
    };
    Ok(Outcome {
        text: io::to_json(&report),
        pass,
    })
}

fn gen(what: &GenKind, cfg: &RunConfig) -> Result<Outcome> {
    let text = match what {
        GenKind::Form {
            rows,
            cols,
            domain_e,
            domain_f,
            signs,
        } => io::form_to_json(&random_form(
            (*rows, *cols),
            domain_e,
            domain_f,
            *signs,
            cfg.seed,
        )?),
        GenKind::Tensor {
            rows,
            cols,
            terms,
            domain_e,
            domain_f,
        } => {
            let e = gen_space(domain_e, *rows, cfg.seed, "gen-weights-e")?;
            let f = gen_space(domain_f, *cols, cfg.seed, "gen-weights-f")?;
            io::tensor_to_json(&random_tensor(&e, &f, *terms, cfg.seed)?)
        }
        GenKind::Multi { dims, space } => {
            io::multilinear_to_json(&random_multi(&parse_dims(dims)?, space, cfg.seed)?)
        }
    };
    Ok(Outcome::ok(text))
}

fn canon(kind: FileKind, file: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let text = read(file)?;
    let out = match kind {
        FileKind::Form => io::form_to_json(&io::form_from_json(&text)?),
        FileKind::Tensor => io::tensor_to_json(&io::tensor_from_json(&text, None)?),
        FileKind::Multi => io::multilinear_to_json(&io::multilinear_from_json(&text)?),
        FileKind::Kernel => io::kernel_to_csv(&io::kernel_from_csv(&text)?),
        FileKind::Witness => {
            let w = io::witness_from_csv(&text)?;
            match cfg.format {
                Format::Csv => io::factors_to_csv(&w.u, &w.v),
                Format::Json => factors_json(&w.u, &w.v),
            }
        }
    };
    Ok(Outcome::ok(out))
}
