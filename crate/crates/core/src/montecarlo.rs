//! Monte Carlo estimates of the top Lyapunov exponent.
//!
//! Random streams: every run starts from `ChaCha8Rng::seed_from_u64(seed)`;
//! trial `t` uses stream `t` of that generator (`set_stream(t)`), and a single
//! [`sample_path`] uses stream 0. Results are therefore reproducible across
//! platforms and independent of the thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::LOG_FLOOR;
use crate::error::{Error, Result};
use crate::graph::{NodeDistribution, StochasticGraph};
use crate::system::{Matrix, SwitchedSystem};
use crate::word::LabelWord;

/// Largest number of words tabulated by [`empirical_cylinder_check`].
pub const CYLINDER_WORD_LIMIT: f64 = 1e4;

/// |z| above which a cylinder frequency is flagged.
pub const Z_FLAG: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    /// `T + 1` node indices.
    pub nodes: Vec<usize>,
    /// `T` labels.
    pub word: LabelWord,
    pub log_prob: f64,
    pub seed: u64,
}

/// Walks the graph: start node from `ξ`, then one outgoing edge per step.
struct Walker<'a> {
    graph: &'a StochasticGraph,
    start: Vec<f64>,
    /// Per node: cumulative probabilities and edge indices of outgoing edges.
    out: Vec<(Vec<f64>, Vec<usize>)>,
}

impl<'a> Walker<'a> {
    fn new(graph: &'a StochasticGraph, xi: &NodeDistribution) -> Result<Self> {
        if xi.len() != graph.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "distribution has {} entries, graph has {} nodes",
                xi.len(),
                graph.node_count()
            )));
        }
        let start = cumulative(xi.weights().iter().copied());
        let out = (0..graph.node_count())
            .map(|a| {
                let idx: Vec<usize> = graph
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.from == a)
                    .map(|(i, _)| i)
                    .collect();
                (cumulative(idx.iter().map(|&i| graph.edges()[i].prob.value())), idx)
            })
            .collect();
        Ok(Self { graph, start, out })
    }

    fn first(&self, rng: &mut ChaCha8Rng) -> usize {
        pick(&self.start, rng.gen())
    }

    /// Edge index taken from `node`.
    fn step(&self, node: usize, rng: &mut ChaCha8Rng) -> usize {
        let (cum, idx) = &self.out[node];
        idx[pick(cum, rng.gen())]
    }
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// First index whose cumulative weight exceeds `u`, scaled by the total so
/// rounding in the weights never leaves a gap at the top.
fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum.last().copied().unwrap_or(0.0);
    cum.iter()
        .position(|&c| target < c)
        .unwrap_or_else(|| cum.iter().rposition(|&c| c > 0.0).unwrap_or(0))
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn walk(walker: &Walker, horizon: usize, rng: &mut ChaCha8Rng, seed: u64) -> SampledPath {
    let mut node = walker.first(rng);
    let mut nodes = Vec::with_capacity(horizon + 1);
    let mut labels = Vec::with_capacity(horizon);
    let mut log_prob = 0.0;
    nodes.push(node);
    for _ in 0..horizon {
        let e = &walker.graph.edges()[walker.step(node, rng)];
        labels.push(e.label);
        log_prob += e.prob.value().ln();
        node = e.to;
        nodes.push(node);
    }
    SampledPath {
        nodes,
        word: LabelWord::from_oldest_first(labels),
        log_prob,
        seed,
    }
}

/// Samples one switching path of `horizon` steps.
pub fn sample_path(graph: &StochasticGraph, xi: &NodeDistribution, horizon: usize, seed: u64) -> Result<SampledPath> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let walker = Walker::new(graph, xi)?;
    Ok(walk(&walker, horizon, &mut stream(seed, 0), seed))
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub trials: usize,
    pub horizon: usize,
    /// Half-width of the 95% confidence interval, `1.96·sd/√N`.
    pub half_width: f64,
    /// `e^{mean}`.
    pub radius: f64,
    /// Some trial's product vanished and its logs were clamped.
    pub degenerate: bool,
    pub seed: u64,
}

impl ExponentEstimate {
    pub fn interval(&self) -> (f64, f64) {
        (self.mean - self.half_width, self.mean + self.half_width)
    }
}

/// One trial: `(1/T) log ‖A(σ_T)⋯A(σ_1)‖₂`, with per-step Frobenius
/// renormalization.
fn trial_exponent(system: &SwitchedSystem, walker: &Walker, horizon: usize, rng: &mut ChaCha8Rng) -> (f64, bool) {
    let n = system.dim();
    let mut prod = Matrix::identity(n, n);
    let mut tmp = Matrix::zeros(n, n);
    let mut acc = 0.0;
    let mut degenerate = false;
    let mut node = walker.first(rng);
    for _ in 0..horizon {
        let e = &walker.graph.edges()[walker.step(node, rng)];
        node = e.to;
        system.matrix(e.label).mul_to(&prod, &mut tmp);
        std::mem::swap(&mut prod, &mut tmp);
        let fro = prod.norm();
        if fro > 0.0 && fro.is_finite() {
            acc += fro.ln();
            prod /= fro;
        } else {
            acc += LOG_FLOOR;
            degenerate = true;
        }
    }
    let top = prod.singular_values().max();
    let last = if top > 0.0 { top.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
    degenerate |= top <= 0.0;
    ((acc + last) / horizon as f64, degenerate)
}

/// Estimates the top Lyapunov exponent from `trials` independent paths of
/// `horizon` steps started from `ξ`.
pub fn estimate_lyapunov_exponent(
    system: &SwitchedSystem,
    xi: &NodeDistribution,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    if horizon < 10 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is below 10")));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("{trials} trials, need at least 2")));
    }
    if !system.graph().is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let walker = Walker::new(system.graph(), xi)?;
    let results: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| trial_exponent(system, &walker, horizon, &mut stream(seed, t)))
        .collect();
    let n = trials as f64;
    let mean = compensated_sum(results.iter().map(|r| r.0)) / n;
    let var = compensated_sum(results.iter().map(|r| (r.0 - mean).powi(2))) / (n - 1.0);
    let std_dev = var.sqrt();
    Ok(ExponentEstimate {
        mean,
        std_dev,
        trials,
        horizon,
        half_width: 1.96 * std_dev / n.sqrt(),
        radius: mean.exp(),
        degenerate: results.iter().any(|r| r.1),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRow {
    pub word: LabelWord,
    pub analytic: f64,
    pub empirical: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderCheck {
    pub length: usize,
    pub samples: usize,
    pub seed: u64,
    /// Words with positive analytic measure or at least one observation, in
    /// lexicographic order of their oldest-first reading.
    pub rows: Vec<CylinderRow>,
}

impl CylinderCheck {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Compares empirical word frequencies of `samples` sampled paths of length
/// `k` with the analytic cylinder measures.
pub fn empirical_cylinder_check(
    graph: &StochasticGraph,
    xi: &NodeDistribution,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<CylinderCheck> {
    let count = (graph.alphabet() as f64).powi(k as i32);
    if count > CYLINDER_WORD_LIMIT {
        return Err(Error::ExplosionLimit {
            what: "cylinder table",
            count,
            limit: CYLINDER_WORD_LIMIT,
        });
    }
    if k == 0 || samples == 0 {
        return Err(Error::InvalidArgument("word length and sample count must be positive".into()));
    }
    let walker = Walker::new(graph, xi)?;
    let words: Vec<LabelWord> = (0..samples as u64)
        .into_par_iter()
        .map(|t| walk(&walker, k, &mut stream(seed, t), seed).word)
        .collect();
    let mut counts: BTreeMap<LabelWord, usize> = BTreeMap::new();
    for w in words {
        *counts.entry(w).or_default() += 1;
    }
    let n = samples as f64;
    let rows = LabelWord::all(graph.alphabet(), k)
        .into_iter()
        .filter_map(|word| {
            let analytic = graph.cylinder_measure(xi, &word);
            let hits = counts.get(&word).copied().unwrap_or(0);
            if analytic <= 0.0 && hits == 0 {
                return None;
            }
            let empirical = hits as f64 / n;
            let se = (analytic * (1.0 - analytic) / n).max(0.0).sqrt();
            let diff = empirical - analytic;
            let z = if se > 0.0 {
                diff / se
            } else if diff.abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            };
            Some(CylinderRow {
                word,
                analytic,
                empirical,
                z,
                flagged: z.abs() > Z_FLAG,
            })
        })
        .collect();
    Ok(CylinderCheck {
        length: k,
        samples,
        seed,
        rows,
    })
}
