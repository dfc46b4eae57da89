//! Stochastic graphs: nodes joined by labeled edges carrying probabilities.
//!
//! Nodes are kept in lexicographic order of their identifiers, and every
//! matrix or vector indexed by nodes follows that order. Edges are sorted by
//! `(from, to, label)`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::prob::Scalar;
use crate::word::LabelWord;

/// Row sums and distribution totals must match 1 within this tolerance.
pub const PROB_TOL: f64 = 1e-12;

/// Default cap on the number of objects a combinatorial construction may
/// create (paths, lifted labels, word prefixes).
pub const DEFAULT_EXPLOSION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: u32,
    pub prob: Scalar,
}

/// Edge description by node name, used when building a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub label: u32,
    pub prob: Scalar,
}

impl EdgeSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>, label: u32, prob: Scalar) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            label,
            prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGraph {
    alphabet: u32,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
}

impl StochasticGraph {
    /// Builds and validates a graph.
    pub fn new(alphabet: u32, nodes: Vec<String>, edges: Vec<EdgeSpec>) -> Result<Self> {
        let graph = Self::assemble(alphabet, nodes, edges)?;
        graph.validate()?;
        Ok(graph)
    }

    /// Builds a graph without checking the probability invariants. Unknown
    /// node names are still rejected.
    pub fn assemble(alphabet: u32, nodes: Vec<String>, edges: Vec<EdgeSpec>) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidArgument("alphabet size must be positive".into()));
        }
        let unique: BTreeSet<String> = nodes.iter().cloned().collect();
        if unique.len() != nodes.len() {
            return Err(Error::InvalidArgument("duplicate node identifier".into()));
        }
        if unique.is_empty() {
            return Err(Error::InvalidArgument("graph has no nodes".into()));
        }
        let nodes: Vec<String> = unique.into_iter().collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.into()));
        let mut built = Vec::with_capacity(edges.len());
        for e in edges {
            built.push(Edge {
                from: lookup(&e.from)?,
                to: lookup(&e.to)?,
                label: e.label,
                prob: e.prob,
            });
        }
        built.sort_by_key(|e| (e.from, e.to, e.label));
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (k, e) in built.iter().enumerate() {
            outgoing[e.from].push(k);
        }
        Ok(Self {
            alphabet,
            nodes,
            index,
            edges: built,
            outgoing,
        })
    }

    /// Checks labels, probabilities, edge uniqueness and per-node outflow.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_tol(PROB_TOL)
    }

    /// As [`Self::validate`], with row sums compared against 1 within `tol`.
    pub fn validate_with_tol(&self, tol: f64) -> Result<()> {
        for pair in self.edges.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if (a.from, a.to, a.label) == (b.from, b.to, b.label) {
                return Err(Error::DuplicateEdge {
                    from: self.nodes[a.from].clone(),
                    to: self.nodes[a.to].clone(),
                    label: a.label,
                });
            }
        }
        for e in &self.edges {
            if e.label == 0 || e.label > self.alphabet {
                return Err(Error::BadLabel {
                    from: self.nodes[e.from].clone(),
                    to: self.nodes[e.to].clone(),
                    label: e.label,
                    alphabet: self.alphabet,
                });
            }
            let p = e.prob.value();
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::NonPositiveProbability {
                    from: self.nodes[e.from].clone(),
                    to: self.nodes[e.to].clone(),
                    label: e.label,
                    prob: p,
                });
            }
        }
        for (a, out) in self.outgoing.iter().enumerate() {
            let sum: f64 = out.iter().map(|&k| self.edges[k].prob.value()).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowSumViolation {
                    node: self.nodes[a].clone(),
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, index: usize) -> &str {
        &self.nodes[index]
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.into()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges leaving `node`, in `(to, label)` order.
    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing[node].iter().map(move |&k| &self.edges[k])
    }

    /// `p_{a,b,i}`, zero when the edge is absent.
    pub fn prob(&self, from: usize, to: usize, label: u32) -> f64 {
        self.outgoing(from)
            .find(|e| e.to == to && e.label == label)
            .map_or(0.0, |e| e.prob.value())
    }

    /// True when every edge probability carries an exact rational.
    pub fn is_exact(&self) -> bool {
        self.edges.iter().all(|e| e.prob.exact().is_some())
    }

    /// Node-to-node transition matrix, `P[a][b] = Σ_i p_{a,b,i}`.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut p = DMatrix::zeros(n, n);
        for e in &self.edges {
            p[(e.from, e.to)] += e.prob.value();
        }
        p
    }

    /// Exact transition matrix, when all probabilities are rational.
    pub fn exact_transition_matrix(&self) -> Option<Vec<Vec<BigRational>>> {
        let n = self.node_count();
        let mut p = vec![vec![BigRational::zero(); n]; n];
        for e in &self.edges {
            p[e.from][e.to] += e.prob.exact()?;
        }
        Some(p)
    }

    /// Every ordered pair of nodes is joined by a directed path.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.node_count();
        let mut forward = vec![Vec::new(); n];
        let mut backward = vec![Vec::new(); n];
        for e in &self.edges {
            forward[e.from].push(e.to);
            backward[e.to].push(e.from);
        }
        reaches_all(&forward) && reaches_all(&backward)
    }

    /// The unique stationary distribution of [`Self::transition_matrix`].
    ///
    /// Solved directly with LU on `(Pᵀ − I)ξ = 0` plus a normalization row;
    /// falls back to power iteration on the lazy chain `(P + I)/2` if the
    /// direct answer is not accurate.
    pub fn invariant_measure(&self) -> Result<NodeDistribution> {
        if !self.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let n = self.node_count();
        let p = self.transition_matrix();
        let mut system = p.transpose() - DMatrix::identity(n, n);
        for j in 0..n {
            system[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        if let Some(xi) = system.lu().solve(&rhs) {
            let weights: Vec<f64> = xi.iter().copied().collect();
            if stationary_residual(&p, &weights) <= PROB_TOL && weights.iter().all(|&w| w > 0.0) {
                return NodeDistribution::from_weights(normalized(weights));
            }
        }
        let lazy = (p.clone() + DMatrix::identity(n, n)) * 0.5;
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..1_000_000 {
            let next = lazy.transpose() * &x;
            let diff = (&next - &x).amax();
            x = next;
            if diff < 1e-14 {
                let weights = normalized(x.iter().copied().collect());
                return NodeDistribution::from_weights(weights);
            }
        }
        Err(Error::NoConvergence("invariant measure power iteration"))
    }

    /// `P_{G,ξ}(s, w)` for every node `s`: the probability of sitting at `s`
    /// after reading `w`, starting from `ξ`.
    pub fn word_state_distribution(&self, xi: &NodeDistribution, word: &LabelWord) -> Vec<f64> {
        let mut dist = xi.weights().to_vec();
        for label in word.oldest_first() {
            let mut next = vec![0.0; self.node_count()];
            for e in self.edges.iter().filter(|e| e.label == label) {
                next[e.to] += dist[e.from] * e.prob.value();
            }
            dist = next;
        }
        dist
    }

    /// `P_{G,ξ}(s, w)`.
    pub fn node_word_measure(&self, xi: &NodeDistribution, node: usize, word: &LabelWord) -> f64 {
        self.word_state_distribution(xi, word)[node]
    }

    /// Measure of the cylinder `[w]`: `Σ_s P_{G,ξ}(s, w)`.
    pub fn cylinder_measure(&self, xi: &NodeDistribution, word: &LabelWord) -> f64 {
        self.word_state_distribution(xi, word).iter().sum()
    }

    /// Measure of the shift preimage `ℓ^{-R}([w])`: the sum of cylinder
    /// measures over every word that starts with `shift` arbitrary symbols and
    /// then reads `w`.
    pub fn shift_preimage_measure(
        &self,
        xi: &NodeDistribution,
        word: &LabelWord,
        shift: usize,
    ) -> Result<f64> {
        let count = (self.alphabet as f64).powi(shift as i32);
        if count > DEFAULT_EXPLOSION_LIMIT {
            return Err(Error::ExplosionLimit {
                what: "shift preimage prefixes",
                count,
                limit: DEFAULT_EXPLOSION_LIMIT,
            });
        }
        Ok(LabelWord::all(self.alphabet, shift)
            .iter()
            .map(|prefix| self.cylinder_measure(xi, &prefix.then(word)))
            .sum())
    }

    /// All paths with `len` edges, optionally restricted to a start node.
    pub fn enumerate_paths(&self, len: usize, start: Option<usize>) -> Result<Vec<GraphPath>> {
        self.enumerate_paths_with_limit(len, start, DEFAULT_EXPLOSION_LIMIT)
    }

    pub fn enumerate_paths_with_limit(
        &self,
        len: usize,
        start: Option<usize>,
        limit: f64,
    ) -> Result<Vec<GraphPath>> {
        if len == 0 {
            return Err(Error::InvalidArgument("path length must be at least 1".into()));
        }
        let count = (self.edges.len() as f64).powi(len as i32);
        if count > limit {
            return Err(Error::ExplosionLimit {
                what: "path enumeration",
                count,
                limit,
            });
        }
        let starts: Vec<usize> = match start {
            Some(s) => vec![s],
            None => (0..self.node_count()).collect(),
        };
        let mut frontier: Vec<GraphPath> = starts
            .into_iter()
            .map(|s| GraphPath {
                nodes: vec![s],
                edges: Vec::new(),
                word: LabelWord::empty(),
                prob: Scalar::one(),
            })
            .collect();
        for _ in 0..len {
            let mut next = Vec::new();
            for path in &frontier {
                for &k in &self.outgoing[path.end()] {
                    let e = &self.edges[k];
                    let mut nodes = path.nodes.clone();
                    nodes.push(e.to);
                    let mut edges = path.edges.clone();
                    edges.push(k);
                    next.push(GraphPath {
                        nodes,
                        edges,
                        word: path.word.push_recent(e.label),
                        prob: path.prob.mul(&e.prob),
                    });
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn stationary_residual(p: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(xi);
    (p.transpose() * &v - &v).amax()
}

fn normalized(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// A path in a stochastic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath {
    /// Visited nodes, `len + 1` of them.
    pub nodes: Vec<usize>,
    /// Indices into [`StochasticGraph::edges`].
    pub edges: Vec<usize>,
    pub word: LabelWord,
    /// Product of the edge probabilities.
    pub prob: Scalar,
}

impl GraphPath {
    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().unwrap()
    }
}

/// A probability vector over the nodes of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDistribution {
    weights: Vec<f64>,
}

impl NodeDistribution {
    /// Checks the dimension against `graph` as well as the simplex constraints.
    pub fn new(graph: &StochasticGraph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "distribution has {} entries for {} nodes",
                weights.len(),
                graph.node_count()
            )));
        }
        Self::from_weights(weights)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("distribution has a negative entry".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidArgument(format!("distribution sums to {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(graph: &StochasticGraph) -> Self {
        let n = graph.node_count();
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// All mass on one node.
    pub fn point(graph: &StochasticGraph, node: usize) -> Self {
        let mut weights = vec![0.0; graph.node_count()];
        weights[node] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
