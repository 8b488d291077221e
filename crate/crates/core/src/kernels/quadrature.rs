use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trapezoid" | "trap" => Ok(Rule::Trapezoid),
            "gauss" | "gl" | "gausslegendre" | "gauss-legendre" => Ok(Rule::GaussLegendre),
            other => Err(Error::Parse(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

/// Nodes and positive weights on `[a, b]`; the weights are the discrete
/// measure the kernel operators integrate against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    rule: Option<Rule>,
    a: f64,
    b: f64,
}

impl QuadratureGrid {
    /// Grid from explicit nodes and weights (e.g. read from a file).
    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::GridMismatch(format!(
                "{} points and {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::GridMismatch(
                "points must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::GridMismatch("weights must be positive".into()));
        }
        let a = points[0];
        let b = points[points.len() - 1];
        Ok(Self {
            points,
            weights,
            rule: None,
            a,
            b,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> Option<Rule> {
        self.rule
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same nodes and weights, bit for bit.
    pub fn same_as(&self, other: &Self) -> bool {
        self.points == other.points && self.weights == other.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Legendre nodes and weights on `[-1, 1]` by Newton iteration on `Pₙ`.
fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `n`-point rule on `[a, b]`. Trapezoid: uniform nodes with halved end
/// weights. Gauss–Legendre: Legendre roots mapped affinely.
pub fn make_grid(n: usize, a: f64, b: f64, rule: Rule) -> Result<QuadratureGrid> {
    if n < 2 || !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b, n });
    }
    let (points, weights) = match rule {
        Rule::Trapezoid => {
            let h = (b - a) / (n - 1) as f64;
            let points = (0..n)
                .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
                .collect();
            let mut weights = vec![h; n];
            weights[0] = 0.5 * h;
            weights[n - 1] = 0.5 * h;
            (points, weights)
        }
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre_reference(n);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            (
                x.iter().map(|t| mid + half * t).collect(),
                w.iter().map(|wi| half * wi).collect(),
            )
        }
    };
    Ok(QuadratureGrid {
        points,
        weights,
        rule: Some(rule),
        a,
        b,
    })
}
