//! File formats: JSON for forms and tensors, CSV for kernels and
//! factorization witnesses. Every format carries `schema = 1`; inputs
//! without a schema field are read as version 1.
//!
//! Writers emit shortest round-trip decimal representations, so
//! parse → emit is a fixed point for anything this module wrote.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fubini::{MultiTensorElement, MultilinearForm};
use crate::kernels::{Kernel, QuadratureGrid};
use crate::sdp::FactorizationWitness;
use crate::spaces::{BilinearForm, SpaceSpec, TensorElement};

pub const SCHEMA: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA
}

fn check_schema(schema: u32) -> Result<()> {
    if schema == SCHEMA {
        Ok(())
    } else {
        Err(Error::Parse(format!("unsupported schema version {schema}")))
    }
}

fn space_from(tag: &str, dim: usize, weights: Option<Vec<f64>>) -> Result<SpaceSpec> {
    SpaceSpec::from_tag(tag, dim, weights)
}

fn weights_of(s: &SpaceSpec) -> Option<Vec<f64>> {
    s.weights().map(<[f64]>::to_vec)
}

#[derive(Debug, Serialize, Deserialize)]
struct FormFile {
    #[serde(default = "default_schema")]
    schema: u32,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<f64>>,
    domain_e: String,
    domain_f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_f: Option<Vec<f64>>,
}

pub fn form_from_json(text: &str) -> Result<BilinearForm> {
    let f: FormFile = serde_json::from_str(text)?;
    check_schema(f.schema)?;
    if f.entries.len() != f.rows || f.entries.iter().any(|r| r.len() != f.cols) {
        return Err(Error::DimensionMismatch(format!(
            "entries do not form a {}x{} matrix",
            f.rows, f.cols
        )));
    }
    let e = space_from(&f.domain_e, f.rows, f.weights_e)?;
    let g = space_from(&f.domain_f, f.cols, f.weights_f)?;
    if f.rows == 0 || f.cols == 0 {
        return BilinearForm::new(DMatrix::zeros(f.rows, f.cols), e, g);
    }
    BilinearForm::from_rows(&f.entries, e, g)
}

pub fn form_to_json(phi: &BilinearForm) -> String {
    let (rows, cols) = phi.shape();
    let a = phi.coeffs();
    let f = FormFile {
        schema: SCHEMA,
        rows,
        cols,
        entries: (0..rows)
            .map(|i| (0..cols).map(|j| a[(i, j)]).collect())
            .collect(),
        domain_e: phi.domain_e().tag().into(),
        domain_f: phi.domain_f().tag().into(),
        weights_e: weights_of(phi.domain_e()),
        weights_f: weights_of(phi.domain_f()),
    };
    to_json(&f)
}

#[derive(Debug, Serialize, Deserialize)]
struct Term {
    e: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorFile {
    #[serde(default = "default_schema")]
    schema: u32,
    terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_f: Option<Vec<f64>>,
}

/// Reads a tensor element. Spaces come from the file when it names them,
/// otherwise from `spaces` (typically the domains of the form it is paired
/// with). When both are present they must agree.
pub fn tensor_from_json(
    text: &str,
    spaces: Option<(&SpaceSpec, &SpaceSpec)>,
) -> Result<TensorElement> {
    let t: TensorFile = serde_json::from_str(text)?;
    check_schema(t.schema)?;
    let dims = t.terms.first().map(|x| (x.e.len(), x.f.len()));
    let named = match (&t.domain_e, &t.domain_f) {
        (Some(de), Some(df)) => {
            let (n, m) = match (dims, spaces) {
                (Some(d), _) => d,
                (None, Some((e, f))) => (e.dim(), f.dim()),
                (None, None) => (0, 0),
            };
            Some((
                space_from(de, n, t.weights_e.clone())?,
                space_from(df, m, t.weights_f.clone())?,
            ))
        }
        (None, None) => None,
        _ => return Err(Error::Parse("tensor names only one of its domains".into())),
    };
    let (se, sf) = match (named, spaces) {
        (Some((e, f)), Some((pe, pf))) => {
            if &e != pe || &f != pf {
                return Err(Error::DimensionMismatch(
                    "tensor domains differ from the form's".into(),
                ));
            }
            (e, f)
        }
        (Some(p), None) => p,
        (None, Some((e, f))) => (e.clone(), f.clone()),
        (None, None) => {
            let (n, m) = dims.ok_or_else(|| Error::Parse("empty tensor without domains".into()))?;
            (SpaceSpec::l2(n), SpaceSpec::l2(m))
        }
    };
    let terms = t
        .terms
        .into_iter()
        .map(|x| (DVector::from_vec(x.e), DVector::from_vec(x.f)))
        .collect();
    TensorElement::new(terms, se, sf)
}

pub fn tensor_to_json(x: &TensorElement) -> String {
    let t = TensorFile {
        schema: SCHEMA,
        terms: x
            .terms()
            .iter()
            .map(|(e, f)| Term {
                e: e.as_slice().to_vec(),
                f: f.as_slice().to_vec(),
            })
            .collect(),
        domain_e: Some(x.space_e().tag().into()),
        domain_f: Some(x.space_f().tag().into()),
        weights_e: weights_of(x.space_e()),
        weights_f: weights_of(x.space_f()),
    };
    to_json(&t)
}

#[derive(Debug, Serialize, Deserialize)]
struct MultiFile {
    #[serde(default = "default_schema")]
    schema: u32,
    dims: Vec<usize>,
    entries: Vec<f64>,
    spaces: Vec<String>,
    /// Per-mode weights for `wl2` modes, `null` elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Option<Vec<f64>>>>,
}

pub fn multilinear_from_json(text: &str) -> Result<MultilinearForm> {
    let f: MultiFile = serde_json::from_str(text)?;
    check_schema(f.schema)?;
    if f.spaces.len() != f.dims.len() {
        return Err(Error::DimensionMismatch(
            "one space tag per mode required".into(),
        ));
    }
    let mut weights = f.weights.unwrap_or_default();
    weights.resize(f.dims.len(), None);
    let spaces = f
        .dims
        .iter()
        .zip(&f.spaces)
        .zip(weights)
        .map(|((&d, tag), w)| space_from(tag, d, w))
        .collect::<Result<Vec<_>>>()?;
    MultilinearForm::new(f.dims, f.entries, spaces)
}

pub fn multilinear_to_json(mu: &MultilinearForm) -> String {
    let weights: Vec<Option<Vec<f64>>> = mu.spaces().iter().map(weights_of).collect();
    let f = MultiFile {
        schema: SCHEMA,
        dims: mu.dims().to_vec(),
        entries: mu.entries().to_vec(),
        spaces: mu.spaces().iter().map(|s| s.tag().to_string()).collect(),
        weights: weights.iter().any(Option::is_some).then_some(weights),
    };
    to_json(&f)
}

#[derive(Debug, Serialize, Deserialize)]
struct MultiTensorFile {
    #[serde(default = "default_schema")]
    schema: u32,
    /// Each term lists one vector per mode.
    terms: Vec<Vec<Vec<f64>>>,
}

pub fn multi_tensor_from_json(text: &str, dims: &[usize]) -> Result<MultiTensorElement> {
    let f: MultiTensorFile = serde_json::from_str(text)?;
    check_schema(f.schema)?;
    let x = MultiTensorElement {
        terms: f
            .terms
            .into_iter()
            .map(|t| t.into_iter().map(DVector::from_vec).collect())
            .collect(),
    };
    x.check(dims)?;
    Ok(x)
}

pub fn multi_tensor_to_json(x: &MultiTensorElement) -> String {
    let f = MultiTensorFile {
        schema: SCHEMA,
        terms: x
            .terms
            .iter()
            .map(|t| t.iter().map(|v| v.as_slice().to_vec()).collect())
            .collect(),
    };
    to_json(&f)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn push_row(out: &mut String, label: Option<&str>, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    if let Some(l) = label {
        out.push_str(l);
        first = false;
    }
    for v in values {
        if !first {
            out.push(',');
        }
        let _ = write!(out, "{v:?}");
        first = false;
    }
    out.push('\n');
}

fn csv_records(text: &str) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

fn parse_numbers(cells: &[String], what: &str) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{c}` in {what}")))
        })
        .collect()
}

/// Drops a leading `schema,<v>` record after checking the version.
fn strip_schema(records: &mut Vec<Vec<String>>) -> Result<()> {
    if records
        .first()
        .is_some_and(|r| r.first().map(String::as_str) == Some("schema"))
    {
        let r = records.remove(0);
        let v = r
            .get(1)
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| Error::Parse("bad schema record".into()))?;
        check_schema(v)?;
    }
    Ok(())
}

pub fn kernel_to_csv(k: &Kernel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema,{SCHEMA}");
    push_row(
        &mut out,
        Some("x_points"),
        k.grid_x().points().iter().copied(),
    );
    push_row(
        &mut out,
        Some("x_weights"),
        k.grid_x().weights().iter().copied(),
    );
    push_row(
        &mut out,
        Some("y_points"),
        k.grid_y().points().iter().copied(),
    );
    push_row(
        &mut out,
        Some("y_weights"),
        k.grid_y().weights().iter().copied(),
    );
    let v = k.values();
    for i in 0..v.nrows() {
        push_row(&mut out, None, (0..v.ncols()).map(|j| v[(i, j)]));
    }
    out
}

pub fn kernel_from_csv(text: &str) -> Result<Kernel> {
    let mut recs = csv_records(text)?;
    strip_schema(&mut recs)?;
    let mut header = |name: &str| -> Result<Vec<f64>> {
        if recs.is_empty() || recs[0][0] != name {
            return Err(Error::Parse(format!("expected a `{name}` row")));
        }
        let r = recs.remove(0);
        parse_numbers(&r[1..], name)
    };
    let xp = header("x_points")?;
    let xw = header("x_weights")?;
    let yp = header("y_points")?;
    let yw = header("y_weights")?;
    let gx = QuadratureGrid::from_parts(xp, xw)?;
    let gy = QuadratureGrid::from_parts(yp, yw)?;
    if recs.len() != gx.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} value rows for {} x points",
            recs.len(),
            gx.len()
        )));
    }
    let mut data = Vec::with_capacity(gx.len() * gy.len());
    for (i, r) in recs.iter().enumerate() {
        if r.len() != gy.len() {
            return Err(Error::DimensionMismatch(format!(
                "value row {i} has {} entries",
                r.len()
            )));
        }
        data.extend(parse_numbers(r, "values")?);
    }
    let values = DMatrix::from_row_slice(gx.len(), gy.len(), &data);
    Kernel::from_values(values, gx, gy)
}

/// Factor matrices `U` (n×d) and `V` (m×d) of a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFactors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// `d=<rank>` header, then one record per row: `u,…` for the rows of `U`
/// and `v,…` for the rows of `V`.
pub fn witness_to_csv(w: &FactorizationWitness) -> String {
    factors_to_csv(&w.u, &w.v)
}

pub fn factors_to_csv(u: &DMatrix<f64>, v: &DMatrix<f64>) -> String {
    let mut out = format!("d={}\n", u.ncols());
    for (label, m) in [("u", u), ("v", v)] {
        for i in 0..m.nrows() {
            push_row(&mut out, Some(label), (0..m.ncols()).map(|j| m[(i, j)]));
        }
    }
    out
}

pub fn witness_from_csv(text: &str) -> Result<WitnessFactors> {
    let recs = csv_records(text)?;
    let d: usize = recs
        .first()
        .and_then(|r| r.first())
        .and_then(|h| h.strip_prefix("d="))
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse("witness CSV must start with `d=<rank>`".into()))?;
    let mut u = Vec::new();
    let mut v = Vec::new();
    let (mut nu, mut nv) = (0, 0);
    for r in &recs[1..] {
        let vals = parse_numbers(&r[1..], "witness")?;
        if vals.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "witness row has {} entries, d={d}",
                vals.len()
            )));
        }
        match r[0].as_str() {
            "u" => {
                u.extend(vals);
                nu += 1;
            }
            "v" => {
                v.extend(vals);
                nv += 1;
            }
            other => return Err(Error::Parse(format!("unknown witness row label `{other}`"))),
        }
    }
    Ok(WitnessFactors {
        u: DMatrix::from_row_slice(nu, d, &u),
        v: DMatrix::from_row_slice(nv, d, &v),
    })
}
