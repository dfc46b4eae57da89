use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::template::{QuadraticTemplate, Template, LOG_FLOOR};
use super::{finalize, Certificate, OptimizerMeta};
use crate::error::{Error, Result};
use crate::system::{Matrix, SwitchedSystem};

/// Parameters are kept inside `[-BOX, BOX]`; diagonal entries are stored as
/// logarithms.
const BOX: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConfig {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub seed: u64,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_evaluations: 20_000,
            initial_step: 0.5,
            min_step: 1e-8,
            seed: 0,
        }
    }
}

/// `‖A‖_{Q_a→Q_b} = max_x √(xᵀAᵀQ_bAx) / √(xᵀQ_ax)`, or `None` when either
/// matrix is not positive definite.
pub fn induced_norm(qa: &Matrix, qb: &Matrix, a: &Matrix) -> Option<f64> {
    let la = qa.clone().cholesky()?.l();
    let lb = qb.clone().cholesky()?.l();
    let la_inv_t = la.solve_lower_triangular(&Matrix::identity(la.nrows(), la.ncols()))?.transpose();
    Some(factored_norm(&lb, a, &la_inv_t))
}

/// `σ_max(L_bᵀ A L_a^{-T})`.
fn factored_norm(lb: &Matrix, a: &Matrix, la_inv_t: &Matrix) -> f64 {
    let n = lb.transpose() * a * la_inv_t;
    sym_lambda_max(&(n.transpose() * &n)).max(0.0).sqrt()
}

fn sym_lambda_max(c: &Matrix) -> f64 {
    match c.nrows() {
        1 => c[(0, 0)],
        2 => {
            let half = 0.5 * (c[(0, 0)] + c[(1, 1)]);
            let diff = 0.5 * (c[(0, 0)] - c[(1, 1)]);
            half + (diff * diff + c[(0, 1)] * c[(1, 0)]).max(0.0).sqrt()
        }
        _ => c
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

struct Problem {
    nodes: usize,
    dim: usize,
    edges: Vec<(usize, usize, f64, Matrix)>,
}

impl Problem {
    fn new(system: &SwitchedSystem) -> Self {
        let edges = system
            .graph()
            .edges()
            .iter()
            .map(|e| (e.from, e.to, e.prob.value(), system.matrix(e.label).clone()))
            .collect();
        Self {
            nodes: system.graph().node_count(),
            dim: system.dim(),
            edges,
        }
    }

    fn per_node(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    fn factor(&self, x: &[f64], node: usize) -> Matrix {
        let n = self.dim;
        let p = &x[node * self.per_node()..][..self.per_node()];
        let mut l = Matrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = if i == j { p[idx].exp() } else { p[idx] };
                idx += 1;
            }
        }
        l
    }

    fn params_of(&self, template: &QuadraticTemplate) -> Option<Vec<f64>> {
        let mut x = Vec::with_capacity(self.nodes * self.per_node());
        for a in 0..self.nodes {
            let l = template.matrix(a).cholesky()?.l();
            for i in 0..self.dim {
                for j in 0..=i {
                    x.push(if i == j { l[(i, j)].ln() } else { l[(i, j)] });
                }
            }
        }
        Some(x)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.smoothed(x, None)
    }

    /// Worst node rate, or its log-sum-exp smoothing `(1/β) log Σ_a e^{β r_a}`.
    fn smoothed(&self, x: &[f64], beta: Option<f64>) -> f64 {
        let ls: Vec<Matrix> = (0..self.nodes).map(|a| self.factor(x, a)).collect();
        let inv_t: Vec<Matrix> = ls
            .iter()
            .map(|l| {
                l.solve_lower_triangular(&Matrix::identity(self.dim, self.dim))
                    .expect("positive diagonal")
                    .transpose()
            })
            .collect();
        let mut rates = vec![0.0; self.nodes];
        for (from, to, p, m) in &self.edges {
            let norm = factored_norm(&ls[*to], m, &inv_t[*from]);
            let log = if norm > 0.0 { norm.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
            rates[*from] += p * log;
        }
        let worst = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match beta {
            None => worst,
            Some(b) => worst + rates.iter().map(|r| (b * (r - worst)).exp()).sum::<f64>().ln() / b,
        }
    }

    fn template(&self, x: &[f64]) -> Result<QuadraticTemplate> {
        let qs: Vec<Matrix> = (0..self.nodes)
            .map(|a| {
                let l = self.factor(x, a);
                &l * l.transpose()
            })
            .collect();
        let scale = self.dim as f64 / qs[0].trace();
        QuadraticTemplate::new(qs.into_iter().map(|q| q * scale).collect())
    }
}

/// Minimizes the quadratic multi-function rate on `system` by pattern search,
/// first on log-sum-exp smoothings of the node maximum and then on the maximum
/// itself, over per-node Cholesky factors, with random restarts.
pub fn quadratic_bound(system: &SwitchedSystem, config: &QuadraticConfig) -> Result<Certificate> {
    quadratic_bound_from(system, config, None)
}

/// As [`quadratic_bound`], with restart 0 started from `warm` when its shape
/// fits.
pub fn quadratic_bound_from(
    system: &SwitchedSystem,
    config: &QuadraticConfig,
    warm: Option<&QuadraticTemplate>,
) -> Result<Certificate> {
    let problem = Problem::new(system);
    let size = problem.nodes * problem.per_node();
    let warm = warm
        .filter(|t| t.node_count() == problem.nodes && t.dim() == problem.dim)
        .and_then(|t| problem.params_of(t));
    let restarts = config.restarts.max(1);
    let spread = Normal::new(0.0, 0.5).expect("valid normal");
    let results: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let start = match (&warm, r) {
                (Some(w), 0) => w.clone(),
                (None, 0) => vec![0.0; size],
                _ => (0..size).map(|_| spread.sample(&mut rng)).collect(),
            };
            search(&problem, start, config, &mut rng)
        })
        .collect();
    let (best_restart, (value, x)) = results
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, (f64, Vec<f64>))>, (i, res)| match acc {
            Some((j, b)) if b.0 <= res.0 => Some((j, b)),
            _ => Some((i, res)),
        })
        .expect("at least one restart");
    if !value.is_finite() {
        return Err(Error::NoConvergence("quadratic template search"));
    }
    let template = Template::Quadratic(problem.template(&x)?);
    finalize(
        system,
        template,
        OptimizerMeta {
            method: "pattern-search".into(),
            seed: config.seed,
            restarts,
            iterations: config.max_evaluations,
            best_restart,
        },
    )
}

/// Smoothing levels of the continuation, followed by the exact max.
const BETAS: [Option<f64>; 5] = [Some(30.0), Some(300.0), Some(3e3), Some(3e4), None];

fn search(problem: &Problem, mut x: Vec<f64>, config: &QuadraticConfig, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let budget = config.max_evaluations / BETAS.len();
    for beta in BETAS {
        x = poll(problem, x, beta, budget, config, rng);
    }
    (problem.objective(&x), x)
}

fn poll(
    problem: &Problem,
    mut x: Vec<f64>,
    beta: Option<f64>,
    budget: usize,
    config: &QuadraticConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let d = x.len();
    let mut fx = problem.smoothed(&x, beta);
    let mut h = config.initial_step;
    let mut evals = 1;
    let mut trial = x.clone();
    while h > config.min_step && evals < budget {
        let mut improved = false;
        for i in 0..d {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] = (trial[i] + sign * h).clamp(-BOX, BOX);
                let ft = problem.smoothed(&trial, beta);
                evals += 1;
                if ft < fx {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for _ in 0..d {
                let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                for sign in [1.0, -1.0] {
                    for (t, (xi, di)) in trial.iter_mut().zip(x.iter().zip(&dir)) {
                        *t = (xi + sign * h * di / norm).clamp(-BOX, BOX);
                    }
                    let ft = problem.smoothed(&trial, beta);
                    evals += 1;
                    if ft < fx {
                        x.copy_from_slice(&trial);
                        fx = ft;
                        improved = true;
                        break;
                    }
                }
                if improved {
                    break;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn induced_norm_matches_definition() {
        let qa = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let qb = Matrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 0.5]);
        let a = Matrix::from_row_slice(2, 2, &[0.7, 1.1, -0.4, 0.2]);
        let norm = induced_norm(&qa, &qb, &a).unwrap();
        let mut best: f64 = 0.0;
        for k in 0..20_000 {
            let t = k as f64 * std::f64::consts::PI / 20_000.0;
            let x = nalgebra::DVector::from_vec(vec![t.cos(), t.sin()]);
            let y = &a * &x;
            let num = (y.transpose() * &qb * &y)[(0, 0)];
            let den = (x.transpose() * &qa * &x)[(0, 0)];
            best = best.max((num / den).sqrt());
        }
        assert!((norm - best).abs() < 1e-6, "{norm} vs {best}");
    }

    #[test]
    fn induced_norm_with_identity_is_spectral_norm() {
        let a = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.5, 0.3, 0.0, 1.0]);
        let i = Matrix::identity(3, 3);
        let expected = a.singular_values().max();
        assert!((induced_norm(&i, &i, &a).unwrap() - expected).abs() < 1e-12);
        assert!(induced_norm(&(-i.clone()), &i, &a).is_none());
    }

    #[test]
    fn params_round_trip() {
        let g = crate::graph::StochasticGraph::new(
            1,
            vec!["s".into()],
            vec![crate::graph::EdgeSpec::new("s", "s", 1, crate::prob::Scalar::one())],
        )
        .unwrap();
        let sys = SwitchedSystem::new(g, vec![Matrix::identity(2, 2)]).unwrap();
        let p = Problem::new(&sys);
        let q = Matrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.5]);
        let t = QuadraticTemplate::new(vec![q.clone()]).unwrap();
        let x = p.params_of(&t).unwrap();
        let back = p.template(&x).unwrap().matrix(0);
        assert!((back - q * (2.0 / 2.0)).amax() < 1e-12);
    }
}
