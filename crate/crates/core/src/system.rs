//! Switched linear systems `x(k+1) = A_{σ_k} x(k)` whose switching sequence is
//! generated by a [`StochasticGraph`].

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::graph::{NodeDistribution, StochasticGraph};
use crate::word::LabelWord;

pub type Matrix = DMatrix<f64>;

/// Above this size the mean-square operator is applied matrix-free.
const EXPLICIT_OPERATOR_MAX: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    graph: StochasticGraph,
    matrices: Vec<Matrix>,
    dim: usize,
}

impl SwitchedSystem {
    /// `matrices[i]` is the matrix of label `i + 1`.
    pub fn new(graph: StochasticGraph, matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.len() != graph.alphabet() as usize {
            return Err(Error::MatrixLabelMismatch(format!(
                "{} matrices for an alphabet of {}",
                matrices.len(),
                graph.alphabet()
            )));
        }
        let dim = matrices[0].nrows();
        if dim == 0 {
            return Err(Error::DimensionMismatch("matrices must be at least 1x1".into()));
        }
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("matrix {} has a non-finite entry", i + 1)));
            }
        }
        Ok(Self { graph, matrices, dim })
    }

    pub fn graph(&self) -> &StochasticGraph {
        &self.graph
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, label: u32) -> &Matrix {
        &self.matrices[label as usize - 1]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when every matrix is elementwise nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.matrices.iter().all(|m| m.iter().all(|&v| v >= 0.0))
    }

    /// `A(w) = A_{i_{k-1}} ··· A_{i_0}`; the oldest symbol acts first.
    pub fn word_product(&self, word: &LabelWord) -> Matrix {
        word.oldest_first()
            .fold(Matrix::identity(self.dim, self.dim), |acc, s| self.matrix(s) * acc)
    }

    /// Label-marginal average `Σ_i (Σ_{a,b} ξ(a) p_{a,b,i}) A_i`.
    pub fn averaged_matrix(&self, xi: &NodeDistribution) -> Matrix {
        let weights = self.label_weights(xi);
        self.matrices
            .iter()
            .zip(&weights)
            .fold(Matrix::zeros(self.dim, self.dim), |acc, (m, &w)| acc + m * w)
    }

    /// Probability of each label at the first step when starting from `ξ`.
    pub fn label_weights(&self, xi: &NodeDistribution) -> Vec<f64> {
        let mut w = vec![0.0; self.matrices.len()];
        for e in self.graph.edges() {
            w[e.label as usize - 1] += xi.weights()[e.from] * e.prob.value();
        }
        w
    }

    /// `√ρ(T)` for the coupled second-moment operator
    /// `T(Q)_a = Σ_{b,i} p_{a,b,i} A_iᵀ Q_b A_i`. The coupled mean-square
    /// Lyapunov inequalities are feasible iff this is below 1.
    pub fn mean_square_operator_radius(&self) -> Result<f64> {
        if !self.graph.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let n = self.dim;
        let s = self.graph.node_count();
        if n * n * s <= EXPLICIT_OPERATOR_MAX {
            let block = n * n;
            let mut op = Matrix::zeros(block * s, block * s);
            for e in self.graph.edges() {
                let at = self.matrix(e.label).transpose();
                let k = at.kronecker(&at) * e.prob.value();
                let mut view = op.view_mut((e.from * block, e.to * block), (block, block));
                view += k;
            }
            return Ok(spectral_radius(&op)?.sqrt());
        }
        self.mean_square_power_iteration().map(f64::sqrt)
    }

    fn apply_second_moment(&self, q: &[Matrix]) -> Vec<Matrix> {
        let n = self.dim;
        let mut out = vec![Matrix::zeros(n, n); q.len()];
        for e in self.graph.edges() {
            let a = self.matrix(e.label);
            out[e.from] += a.transpose() * &q[e.to] * a * e.prob.value();
        }
        out
    }

    /// Shifted power iteration `Q ← T(Q) + cQ` from identity tuples with trace
    /// normalization. The shift makes the Perron root strictly dominant even
    /// when the graph is periodic.
    fn mean_square_power_iteration(&self) -> Result<f64> {
        let n = self.dim;
        let s = self.graph.node_count();
        let trace = |q: &[Matrix]| q.iter().map(|m| m.trace()).sum::<f64>();
        let mut q: Vec<Matrix> = vec![Matrix::identity(n, n); s];
        let t0 = self.apply_second_moment(&q);
        let shift = (trace(&t0) / trace(&q)).max(1e-12);
        let mut estimate = f64::NAN;
        for _ in 0..1_000_000 {
            let tq = self.apply_second_moment(&q);
            let tr = trace(&q);
            let next_estimate = trace(&tq) / tr;
            if (next_estimate - estimate).abs() <= 1e-13 * next_estimate.max(1e-300) || next_estimate == 0.0 {
                return Ok(next_estimate);
            }
            estimate = next_estimate;
            let mut next: Vec<Matrix> = tq.into_iter().zip(&q).map(|(t, qi)| t + qi * shift).collect();
            let norm = trace(&next);
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::NoConvergence("mean-square power iteration"));
            }
            next.iter_mut().for_each(|m| *m /= norm);
            q = next;
        }
        Err(Error::NoConvergence("mean-square power iteration"))
    }
}

/// Largest eigenvalue modulus. Closed form up to 2x2, real Schur
/// decomposition beyond.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("spectral radius of a non-square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has a non-finite entry".into()));
    }
    match m.nrows() {
        0 => Ok(0.0),
        1 => Ok(m[(0, 0)].abs()),
        2 => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let half_trace = 0.5 * (a + d);
            let det = a * d - b * c;
            let disc = half_trace * half_trace - det;
            if disc >= 0.0 {
                let root = disc.sqrt();
                Ok((half_trace + root).abs().max((half_trace - root).abs()))
            } else {
                Ok(det.sqrt())
            }
        }
        _ => {
            // Francis iterations can stall on spectra symmetric under
            // rotation (periodic graphs give ±λ pairs). Squaring merges such
            // pairs, and ρ(M) = ρ(M²)^{1/2}.
            let mut p = m.clone();
            let mut log_scale = 0.0;
            let mut power = 1.0;
            for _ in 0..4 {
                if let Some(schur) = p.clone().try_schur(1e-15, 10_000) {
                    let r = schur
                        .complex_eigenvalues()
                        .iter()
                        .map(|z: &Complex<f64>| z.norm())
                        .fold(0.0, f64::max);
                    return Ok(if r == 0.0 { 0.0 } else { ((r.ln() + log_scale) / power).exp() });
                }
                let s = p.norm();
                if s == 0.0 {
                    return Ok(0.0);
                }
                p /= s;
                p = &p * &p;
                log_scale = 2.0 * (log_scale + s.ln());
                power *= 2.0;
            }
            Err(Error::NoConvergence("Schur decomposition"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_radius_of_bipartite_block() {
        // [[0, B], [B, 0]] has eigenvalues ±eig(B); ρ = ρ(B) = 3.
        let b = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 3.0, 1.0, 0.0, 0.0, 2.0]);
        let mut m = Matrix::zeros(6, 6);
        m.view_mut((0, 3), (3, 3)).copy_from(&b);
        m.view_mut((3, 0), (3, 3)).copy_from(&b);
        assert!((spectral_radius(&m).unwrap() - 3.0).abs() < 1e-12);
    }
    use crate::graph::EdgeSpec;
    use crate::prob::Scalar;

    fn single(m: Matrix) -> SwitchedSystem {
        let g = StochasticGraph::new(
            1,
            vec!["s".into()],
            vec![EdgeSpec::new("s", "s", 1, Scalar::one())],
        )
        .unwrap();
        SwitchedSystem::new(g, vec![m]).unwrap()
    }

    fn section_five() -> SwitchedSystem {
        let g = StochasticGraph::new(
            2,
            vec!["a".into(), "b".into()],
            vec![
                EdgeSpec::new("a", "a", 1, Scalar::new_ratio(1, 3)),
                EdgeSpec::new("a", "b", 2, Scalar::new_ratio(2, 3)),
                EdgeSpec::new("b", "a", 1, Scalar::new_ratio(1, 4)),
                EdgeSpec::new("b", "b", 2, Scalar::new_ratio(3, 4)),
            ],
        )
        .unwrap();
        SwitchedSystem::new(
            g,
            vec![
                Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]),
                Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.1, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn word_products() {
        let sys = section_five();
        assert_eq!(sys.word_product(&LabelWord::empty()), Matrix::identity(2, 2));
        // A2 A1
        let w = LabelWord::from_recent_first(vec![2, 1]);
        let expected = Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.05, 0.6]);
        assert!((sys.word_product(&w) - expected).amax() < 1e-15);
        let w = LabelWord::from_recent_first(vec![1, 1]);
        let expected = Matrix::from_row_slice(2, 2, &[0.25, 1.0, 0.0, 0.25]);
        assert!((sys.word_product(&w) - expected).amax() < 1e-15);
    }

    #[test]
    fn averaged_matrix_is_schur_unstable() {
        let sys = section_five();
        let xi = sys.graph().invariant_measure().unwrap();
        let b = sys.averaged_matrix(&xi);
        let expected = Matrix::from_row_slice(2, 2, &[19.0 / 22.0, 3.0 / 11.0, 4.0 / 55.0, 19.0 / 22.0]);
        assert!((&b - expected).amax() < 1e-12);
        // d ± sqrt(bc) with d = 19/22
        let closed = 19.0 / 22.0 + (3.0f64 / 11.0 * 4.0 / 55.0).sqrt();
        let rho = spectral_radius(&b).unwrap();
        assert!((rho - closed).abs() < 1e-12);
        assert!((rho - 1.0045).abs() < 1e-3);
        let one = single(Matrix::identity(2, 2) * 0.3);
        let xi = NodeDistribution::uniform(one.graph());
        assert_eq!(one.averaged_matrix(&xi), Matrix::identity(2, 2) * 0.3);
    }

    #[test]
    fn spectral_radius_cases() {
        let tri = Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        assert!((spectral_radius(&tri).unwrap() - 0.5).abs() < 1e-15);
        assert!((spectral_radius(&Matrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        let rot = Matrix::from_row_slice(3, 3, &[0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((spectral_radius(&rot).unwrap() - 2.0).abs() < 1e-12);
        assert!(spectral_radius(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn mean_square_radius_cases() {
        let half = single(Matrix::identity(2, 2) * 0.5);
        assert!((half.mean_square_operator_radius().unwrap() - 0.5).abs() < 1e-12);
        let nil = single(Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(nil.mean_square_operator_radius().unwrap() < 1e-6);
        assert!(section_five().mean_square_operator_radius().unwrap() > 1.0);
    }

    #[test]
    fn matrix_free_agrees_with_explicit() {
        let sys = section_five();
        let explicit = sys.mean_square_operator_radius().unwrap();
        let free = sys.mean_square_power_iteration().unwrap().sqrt();
        assert!((explicit - free).abs() < 1e-8, "{explicit} vs {free}");
    }

    #[test]
    fn rejects_bad_shapes() {
        let g = StochasticGraph::new(
            2,
            vec!["s".into()],
            vec![
                EdgeSpec::new("s", "s", 1, Scalar::new_ratio(1, 2)),
                EdgeSpec::new("s", "s", 2, Scalar::new_ratio(1, 2)),
            ],
        )
        .unwrap();
        assert!(matches!(
            SwitchedSystem::new(g.clone(), vec![Matrix::identity(2, 2)]),
            Err(Error::MatrixLabelMismatch(_))
        ));
        assert!(matches!(
            SwitchedSystem::new(g, vec![Matrix::identity(2, 2), Matrix::identity(3, 3)]),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
