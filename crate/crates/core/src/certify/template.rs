use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::Matrix;

/// Log values below this are clamped; hitting the clamp marks a certificate
/// degenerate.
pub const LOG_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Copositive,
    Quadratic,
}

impl TemplateKind {
    pub fn name(&self) -> &'static str {
        match self {
            TemplateKind::Copositive => "copositive",
            TemplateKind::Quadratic => "quadratic",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "copositive" => Ok(TemplateKind::Copositive),
            "quadratic" => Ok(TemplateKind::Quadratic),
            other => Err(Error::InvalidArgument(format!("unknown template `{other}`"))),
        }
    }
}

/// Dual copositive norms `f_a(x) = max_j x_j / v_{a,j}` on the nonnegative
/// orthant, one positive vector per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopositiveTemplate {
    vectors: Vec<Vec<f64>>,
}

impl CopositiveTemplate {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let t = Self { vectors };
        t.check()?;
        Ok(t)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let dim = self.vectors.first().map_or(0, Vec::len);
        for (a, v) in self.vectors.iter().enumerate() {
            if v.len() != dim || dim == 0 {
                return Err(Error::DimensionMismatch(format!("template vector {a} has length {}", v.len())));
            }
            if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::NegativeEntries(format!("template vector of node {a} is not strictly positive")));
            }
        }
        Ok(())
    }

    /// Builds from log-coordinates, scaled so the first entry of the first
    /// node's vector is 1.
    pub(crate) fn from_log(u: &[f64], nodes: usize, dim: usize) -> Self {
        let shift = u[0];
        let vectors = (0..nodes)
            .map(|a| (0..dim).map(|j| (u[a * dim + j] - shift).exp()).collect())
            .collect();
        Self { vectors }
    }

    pub(crate) fn to_log(&self) -> Vec<f64> {
        self.vectors.iter().flatten().map(|x| x.ln()).collect()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn node_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn eval(&self, node: usize, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.vectors[node])
            .map(|(xi, vi)| xi / vi)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Quadratic norms `f_a(x) = √(xᵀ Q_a x)`, one positive definite matrix per
/// node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTemplate {
    /// Row-major matrices.
    matrices: Vec<Vec<Vec<f64>>>,
}

impl QuadraticTemplate {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let rows = matrices
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect();
        let t = Self { matrices: rows };
        t.check()?;
        Ok(t)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let dim = self.dim();
        for (a, m) in self.matrices.iter().enumerate() {
            if dim == 0 || m.len() != dim || m.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch(format!("template matrix {a} is not {dim}x{dim}")));
            }
            let q = self.matrix(a);
            if (&q - q.transpose()).amax() > 1e-9 * q.amax().max(1.0) {
                return Err(Error::NotPositiveDefinite(a));
            }
            if q.iter().any(|v| !v.is_finite()) || q.cholesky().is_none() {
                return Err(Error::NotPositiveDefinite(a));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, Vec::len)
    }

    pub fn matrix(&self, node: usize) -> Matrix {
        let rows = &self.matrices[node];
        let n = rows.len();
        Matrix::from_fn(n, n, |i, j| rows[i][j])
    }

    pub fn eval(&self, node: usize, x: &[f64]) -> f64 {
        let rows = &self.matrices[node];
        let mut s = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                s += x[i] * q * x[j];
            }
        }
        s.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Template {
    Copositive(CopositiveTemplate),
    Quadratic(QuadraticTemplate),
}

impl Template {
    pub fn kind(&self) -> TemplateKind {
        match self {
            Template::Copositive(_) => TemplateKind::Copositive,
            Template::Quadratic(_) => TemplateKind::Quadratic,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Template::Copositive(t) => t.node_count(),
            Template::Quadratic(t) => t.node_count(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Template::Copositive(t) => t.dim(),
            Template::Quadratic(t) => t.dim(),
        }
    }

    /// `f_node(x)`.
    pub fn eval(&self, node: usize, x: &[f64]) -> f64 {
        match self {
            Template::Copositive(t) => t.eval(node, x),
            Template::Quadratic(t) => t.eval(node, x),
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self {
            Template::Copositive(t) => t.check(),
            Template::Quadratic(t) => t.check(),
        }
    }

    /// Re-indexes per-node parameters: node `v` of the result takes the
    /// parameters of node `source[v]`.
    pub(crate) fn reindex(&self, source: &[usize]) -> Template {
        match self {
            Template::Copositive(t) => Template::Copositive(CopositiveTemplate {
                vectors: source.iter().map(|&s| t.vectors[s].clone()).collect(),
            }),
            Template::Quadratic(t) => Template::Quadratic(QuadraticTemplate {
                matrices: source.iter().map(|&s| t.matrices[s].clone()).collect(),
            }),
        }
    }
}
