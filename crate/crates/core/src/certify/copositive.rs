use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::template::{CopositiveTemplate, Template, LOG_FLOOR};
use super::{finalize, require_nonnegative, Certificate, OptimizerMeta};
use crate::error::Result;
use crate::system::SwitchedSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct CopositiveConfig {
    pub restarts: usize,
    pub iterations: usize,
    /// Scale `c` of the step size `c / √t`.
    pub step: f64,
    pub seed: u64,
}

impl Default for CopositiveConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 50_000,
            step: 0.5,
            seed: 0,
        }
    }
}

struct Problem {
    nodes: usize,
    dim: usize,
    /// `(from, to, prob, matrix row-major)` per edge.
    edges: Vec<(usize, usize, f64, Vec<f64>)>,
}

impl Problem {
    fn new(system: &SwitchedSystem) -> Self {
        let n = system.dim();
        let edges = system
            .graph()
            .edges()
            .iter()
            .map(|e| {
                let m = system.matrix(e.label);
                let rows = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| m[(j, k)]).collect();
                (e.from, e.to, e.prob.value(), rows)
            })
            .collect();
        Self {
            nodes: system.graph().node_count(),
            dim: n,
            edges,
        }
    }

    /// Per-node rates at `u = log v`; with `grad`, also a subgradient of the
    /// worst node's rate.
    fn evaluate(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let n = self.dim;
        let mut rates = vec![0.0; self.nodes];
        let v: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        let mut y = vec![0.0; n];
        for (from, to, p, m) in &self.edges {
            rates[*from] += p * self.term(m, &v[from * n..][..n], &u[to * n..][..n], &mut y).0;
        }
        let (worst, value) = rates
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (a, r)| if r > acc.1 { (a, r) } else { acc });
        if let Some(g) = grad.as_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
            for (from, to, p, m) in self.edges.iter().filter(|e| e.0 == worst) {
                let va = &v[from * n..][..n];
                let (_, jstar) = self.term(m, va, &u[to * n..][..n], &mut y);
                let Some(j) = jstar else { continue };
                for k in 0..n {
                    g[from * n + k] += p * m[j * n + k] * va[k] / y[j];
                }
                g[to * n + j] -= p;
            }
        }
        value
    }

    /// `log max_j (A v_a)_j / v_{b,j}` and the maximizing row.
    fn term(&self, m: &[f64], va: &[f64], ub: &[f64], y: &mut [f64]) -> (f64, Option<usize>) {
        let n = self.dim;
        let mut best = (f64::NEG_INFINITY, None);
        for j in 0..n {
            y[j] = (0..n).map(|k| m[j * n + k] * va[k]).sum();
            if y[j] > 0.0 && y[j].ln() - ub[j] > best.0 {
                best = (y[j].ln() - ub[j], Some(j));
            }
        }
        (best.0.max(LOG_FLOOR), best.1)
    }
}

/// Minimizes the copositive multi-function rate on `system` by
/// subgradient descent in `log v` with step `c / √t`, with random restarts.
pub fn copositive_bound(system: &SwitchedSystem, config: &CopositiveConfig) -> Result<Certificate> {
    copositive_bound_from(system, config, None)
}

/// As [`copositive_bound`], with restart 0 started from `warm` when its shape
/// fits.
pub fn copositive_bound_from(
    system: &SwitchedSystem,
    config: &CopositiveConfig,
    warm: Option<&CopositiveTemplate>,
) -> Result<Certificate> {
    require_nonnegative(system)?;
    let problem = Problem::new(system);
    let size = problem.nodes * problem.dim;
    let warm = warm
        .filter(|t| t.node_count() == problem.nodes && t.dim() == problem.dim)
        .map(CopositiveTemplate::to_log);
    let restarts = config.restarts.max(1);
    let results: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let start = match (&warm, r) {
                (Some(w), 0) => w.clone(),
                (None, 0) => vec![0.0; size],
                _ => (0..size).map(|_| StandardNormal.sample(&mut rng)).collect(),
            };
            descend(&problem, start, config)
        })
        .collect();
    let (best_restart, (_, u)) = results
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, (f64, Vec<f64>))>, (i, res)| match acc {
            Some((j, b)) if b.0 <= res.0 => Some((j, b)),
            _ => Some((i, res)),
        })
        .expect("at least one restart");
    let template = Template::Copositive(CopositiveTemplate::from_log(&u, problem.nodes, problem.dim));
    finalize(
        system,
        template,
        OptimizerMeta {
            method: "subgradient".into(),
            seed: config.seed,
            restarts,
            iterations: config.iterations,
            best_restart,
        },
    )
}

fn descend(problem: &Problem, mut u: Vec<f64>, config: &CopositiveConfig) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; u.len()];
    let mut best = (problem.evaluate(&u, None), u.clone());
    for t in 1..=config.iterations {
        let value = problem.evaluate(&u, Some(&mut grad));
        if value < best.0 {
            best = (value, u.clone());
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = config.step / (t as f64).sqrt() / norm;
        for (x, g) in u.iter_mut().zip(&grad) {
            *x -= step * g;
        }
        // The rate is invariant under a common shift of u.
        let shift = u[0];
        u.iter_mut().for_each(|x| *x -= shift);
    }
    let value = problem.evaluate(&u, None);
    if value < best.0 {
        best = (value, u);
    }
    best
}
