#![allow(dead_code)]

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switchcert::certify::Template;
use switchcert::{EdgeSpec, Matrix, NodeDistribution, Scalar, StochasticGraph, SwitchedSystem};

pub const FANG_H: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fang_h.json");
pub const HALF_IDENTITY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/half_identity.json");
pub const EXPANDING: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/expanding.json");

pub fn h_graph() -> StochasticGraph {
    StochasticGraph::new(
        2,
        vec!["a".into(), "b".into()],
        vec![
            EdgeSpec::new("a", "a", 1, Scalar::new_ratio(1, 3)),
            EdgeSpec::new("a", "b", 2, Scalar::new_ratio(2, 3)),
            EdgeSpec::new("b", "a", 1, Scalar::new_ratio(1, 4)),
            EdgeSpec::new("b", "b", 2, Scalar::new_ratio(3, 4)),
        ],
    )
    .unwrap()
}

pub fn h_system() -> SwitchedSystem {
    SwitchedSystem::new(
        h_graph(),
        vec![
            Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]),
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.1, 1.0]),
        ],
    )
    .unwrap()
}

pub fn single(m: Matrix) -> SwitchedSystem {
    let g = StochasticGraph::new(1, vec!["s".into()], vec![EdgeSpec::new("s", "s", 1, Scalar::one())]).unwrap();
    SwitchedSystem::new(g, vec![m]).unwrap()
}

/// Random strongly connected graph with exact rational probabilities: a
/// directed cycle through all nodes plus random extra edges, each node's
/// outgoing weights drawn from 1..=6 and normalized.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, max_alphabet: u32) -> StochasticGraph {
    let n = rng.gen_range(1..=max_nodes);
    let m = rng.gen_range(1..=max_alphabet);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut triples = BTreeSet::new();
    for i in 0..n {
        triples.insert((i, (i + 1) % n, rng.gen_range(1..=m)));
    }
    let extra = rng.gen_range(0..=n * m as usize);
    for _ in 0..extra {
        triples.insert((rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..=m)));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        let out: Vec<_> = triples.iter().filter(|t| t.0 == a).copied().collect();
        let weights: Vec<i64> = out.iter().map(|_| rng.gen_range(1..=6)).collect();
        let total: i64 = weights.iter().sum();
        for (t, w) in out.iter().zip(weights) {
            edges.push(EdgeSpec::new(names[t.0].clone(), names[t.1].clone(), t.2, Scalar::new_ratio(w, total)));
        }
    }
    StochasticGraph::new(m, names, edges).unwrap()
}

/// Random matrices, one per label. Nonnegative entries in `[0, scale)` when
/// `positive`, otherwise standard-normal-like entries times `scale`.
pub fn random_matrices(rng: &mut ChaCha8Rng, count: u32, dim: usize, positive: bool, scale: f64) -> Vec<Matrix> {
    (0..count)
        .map(|_| {
            Matrix::from_fn(dim, dim, |_, _| {
                if positive {
                    rng.gen::<f64>() * scale
                } else {
                    (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>() - 1.5) * 2.0 * scale
                }
            })
        })
        .collect()
}

pub fn random_system(seed: u64, max_nodes: usize, max_alphabet: u32, dim: usize, positive: bool) -> SwitchedSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(&mut rng, max_nodes, max_alphabet);
    let ms = random_matrices(&mut rng, g.alphabet(), dim, positive, 0.7);
    SwitchedSystem::new(g, ms).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive random distribution.
pub fn random_distribution(rng: &mut ChaCha8Rng, graph: &StochasticGraph) -> NodeDistribution {
    let w: Vec<f64> = (0..graph.node_count()).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    NodeDistribution::new(graph, w.into_iter().map(|x| x / total).collect()).unwrap()
}

pub type RationalMatrix = Vec<Vec<BigRational>>;

pub fn rational_mul(a: &RationalMatrix, b: &RationalMatrix) -> RationalMatrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(BigRational::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

pub fn rational_pow(p: &RationalMatrix, k: usize) -> RationalMatrix {
    let mut out = p.clone();
    for _ in 1..k {
        out = rational_mul(&out, p);
    }
    out
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// ln κ where ‖Π‖ ≤ κ ρ^T for every product certified by the template.
pub fn equivalence_log_constant(template: &Template) -> f64 {
    match template {
        Template::Copositive(t) => {
            let all: Vec<f64> = t.vectors().iter().flatten().copied().collect();
            let hi = all.iter().cloned().fold(f64::MIN, f64::max);
            let lo = all.iter().cloned().fold(f64::MAX, f64::min);
            (t.dim() as f64 * hi / lo).ln()
        }
        Template::Quadratic(t) => {
            let eig: Vec<f64> = (0..t.node_count())
                .flat_map(|a| t.matrix(a).symmetric_eigenvalues().iter().copied().collect::<Vec<_>>())
                .collect();
            let hi = eig.iter().cloned().fold(f64::MIN, f64::max);
            let lo = eig.iter().cloned().fold(f64::MAX, f64::min);
            0.5 * (hi / lo).ln()
        }
    }
}
