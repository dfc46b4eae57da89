//! Graph lifts of a switched system.
//!
//! * The K-step lift keeps the nodes and replaces single labels by words of
//!   length K; the matrix of a lifted label is the product along its word.
//!   Bounds obtained on it transfer back through a K-th root.
//! * The path lift of degree R turns paths of length R into nodes, adding
//!   memory while keeping the original alphabet and matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, GraphPath, NodeDistribution, StochasticGraph, DEFAULT_EXPLOSION_LIMIT};
use crate::prob::Scalar;
use crate::system::SwitchedSystem;
use crate::word::LabelWord;

/// Which lift produced a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiftKind {
    /// The system itself.
    Identity,
    Step(usize),
    Path(usize),
}

impl LiftKind {
    /// Converts a bound computed on the lifted system into a bound on the
    /// original probabilistic spectral radius.
    pub fn adjust_bound(&self, raw: f64) -> f64 {
        match *self {
            LiftKind::Step(k) if k > 1 => raw.powf(1.0 / k as f64),
            _ => raw,
        }
    }

    /// Short label, e.g. `step:2`, `path:1`, `none`.
    pub fn tag(&self) -> String {
        match self {
            LiftKind::Identity => "none".into(),
            LiftKind::Step(k) => format!("step:{k}"),
            LiftKind::Path(r) => format!("path:{r}"),
        }
    }

    pub fn parse_tag(tag: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown lift `{tag}`"));
        match tag.split_once(':') {
            None if tag == "none" => Ok(LiftKind::Identity),
            Some(("step", k)) => Ok(LiftKind::Step(k.parse().map_err(|_| bad())?)),
            Some(("path", r)) => Ok(LiftKind::Path(r.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }

    /// Builds the lifted system.
    pub fn apply(&self, system: &SwitchedSystem) -> Result<SwitchedSystem> {
        match *self {
            LiftKind::Identity => Ok(system.clone()),
            LiftKind::Step(k) => Ok(step_lift(system, k)?.system),
            LiftKind::Path(r) => Ok(path_lift(system, r)?.system),
        }
    }
}

impl Serialize for LiftKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for LiftKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        LiftKind::parse_tag(&tag).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
pub struct StepLift {
    pub k: usize,
    /// Lifted system; label `j` stands for `words[j - 1]`.
    pub system: SwitchedSystem,
    pub words: Vec<LabelWord>,
    source_alphabet: u32,
}

impl StepLift {
    /// Rewrites a word over the source alphabet whose length is a multiple of
    /// K as a word over the lifted alphabet.
    pub fn lift_word(&self, word: &LabelWord) -> Option<LabelWord> {
        if !word.len().is_multiple_of(self.k) {
            return None;
        }
        let oldest: Vec<u32> = word.oldest_first().collect();
        let lifted = oldest
            .chunks(self.k)
            .map(|chunk| word_index(chunk.iter().copied(), self.source_alphabet) as u32 + 1)
            .collect();
        Some(LabelWord::from_oldest_first(lifted))
    }

    /// The source word a lifted label stands for.
    pub fn word_of(&self, label: u32) -> &LabelWord {
        &self.words[label as usize - 1]
    }
}

/// Position of a word in the oldest-first lexicographic enumeration.
fn word_index(oldest_first: impl Iterator<Item = u32>, alphabet: u32) -> usize {
    oldest_first.fold(0, |acc, s| acc * alphabet as usize + (s as usize - 1))
}

/// The K-step lift, computed by dynamic programming over word length:
/// `p^K_{a,b,w} = Σ_c p^{K-1}_{a,c,w⁻} p_{c,b,w_f}`.
pub fn step_lift(system: &SwitchedSystem, k: usize) -> Result<StepLift> {
    step_lift_with_limit(system, k, DEFAULT_EXPLOSION_LIMIT)
}

pub fn step_lift_with_limit(system: &SwitchedSystem, k: usize, limit: f64) -> Result<StepLift> {
    if k == 0 {
        return Err(Error::InvalidArgument("step lift needs K >= 1".into()));
    }
    let graph = system.graph();
    let m = graph.alphabet();
    let count = (m as f64).powi(k as i32);
    if count > limit || count > u32::MAX as f64 {
        return Err(Error::ExplosionLimit {
            what: "step-lift alphabet",
            count,
            limit,
        });
    }
    let words = LabelWord::all(m, k);
    if k == 1 {
        return Ok(StepLift {
            k,
            system: system.clone(),
            words,
            source_alphabet: m,
        });
    }

    // (start, end, word index) -> probability
    let mut table: BTreeMap<(usize, usize, usize), Scalar> =
        (0..graph.node_count()).map(|a| ((a, a, 0), Scalar::one())).collect();
    for _ in 0..k {
        let mut next: BTreeMap<(usize, usize, usize), Scalar> = BTreeMap::new();
        for (&(a, c, w), p) in &table {
            for e in graph.outgoing(c) {
                let key = (a, e.to, w * m as usize + (e.label as usize - 1));
                let contrib = p.mul(&e.prob);
                next.entry(key)
                    .and_modify(|acc| *acc = acc.add(&contrib))
                    .or_insert(contrib);
            }
        }
        table = next;
    }

    let edges = table
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|((a, b, w), p)| EdgeSpec::new(graph.node_name(a), graph.node_name(b), w as u32 + 1, p))
        .collect();
    let lifted_graph = StochasticGraph::assemble(count as u32, graph.nodes().to_vec(), edges)?;
    let matrices = words.iter().map(|w| system.word_product(w)).collect();
    Ok(StepLift {
        k,
        system: SwitchedSystem::new(lifted_graph, matrices)?,
        words,
        source_alphabet: m,
    })
}

#[derive(Debug, Clone)]
pub struct PathLift {
    pub r: usize,
    /// Lifted system over the source alphabet and matrices.
    pub system: SwitchedSystem,
    /// `paths[v]` is the source path behind lifted node `v`.
    pub paths: Vec<GraphPath>,
}

impl PathLift {
    /// Source node where the path behind lifted node `v` ends.
    pub fn end_node(&self, v: usize) -> usize {
        self.paths[v].end()
    }

    /// Source node where the path behind lifted node `v` starts.
    pub fn start_node(&self, v: usize) -> usize {
        self.paths[v].start()
    }
}

/// Identifier of a lifted node: the start node followed by `-label->node` for
/// every edge, e.g. `a-2->b-1->a`.
pub fn path_node_id(graph: &StochasticGraph, path: &GraphPath) -> String {
    let mut id = graph.node_name(path.start()).to_string();
    for &k in &path.edges {
        let e = &graph.edges()[k];
        id.push_str(&format!("-{}->{}", e.label, graph.node_name(e.to)));
    }
    id
}

/// The path lift of degree R.
pub fn path_lift(system: &SwitchedSystem, r: usize) -> Result<PathLift> {
    path_lift_with_limit(system, r, DEFAULT_EXPLOSION_LIMIT)
}

pub fn path_lift_with_limit(system: &SwitchedSystem, r: usize, limit: f64) -> Result<PathLift> {
    if r == 0 {
        return Err(Error::InvalidArgument("path lift needs R >= 1".into()));
    }
    let graph = system.graph();
    let long = graph.enumerate_paths_with_limit(r + 1, None, limit)?;
    let short = graph.enumerate_paths_with_limit(r, None, limit)?;

    let id_of_edges = |edges: &[usize]| {
        let first = &graph.edges()[edges[0]];
        let mut id = graph.node_name(first.from).to_string();
        for &k in edges {
            let e = &graph.edges()[k];
            id.push_str(&format!("-{}->{}", e.label, graph.node_name(e.to)));
        }
        id
    };

    let mut by_id: BTreeMap<String, GraphPath> = BTreeMap::new();
    for p in short {
        by_id.insert(path_node_id(graph, &p), p);
    }
    let nodes: Vec<String> = by_id.keys().cloned().collect();
    let edges = long
        .iter()
        .map(|p| {
            let last = &graph.edges()[*p.edges.last().unwrap()];
            EdgeSpec::new(
                id_of_edges(&p.edges[..r]),
                id_of_edges(&p.edges[1..]),
                last.label,
                last.prob.clone(),
            )
        })
        .collect();
    let lifted_graph = StochasticGraph::assemble(graph.alphabet(), nodes, edges)?;
    // assemble sorts nodes the same way the BTreeMap does
    let paths: Vec<GraphPath> = by_id.into_values().collect();
    debug_assert!(paths
        .iter()
        .enumerate()
        .all(|(v, p)| lifted_graph.node_name(v) == path_node_id(graph, p)));
    Ok(PathLift {
        r,
        system: SwitchedSystem::new(lifted_graph, system.matrices().to_vec())?,
        paths,
    })
}

/// The path-lift measure `ξ_R(s_q) = ξ(st(q)) p(q)`.
pub fn lift_distribution(lift: &PathLift, xi: &NodeDistribution) -> Result<NodeDistribution> {
    let weights: Vec<f64> = lift
        .paths
        .iter()
        .map(|p| xi.weights()[p.start()] * p.prob.value())
        .collect();
    NodeDistribution::new(lift.system.graph(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Matrix;

    fn h_system() -> SwitchedSystem {
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
    fn two_step_lift_of_h() {
        let lift = step_lift(&h_system(), 2).unwrap();
        lift.system.graph().validate().unwrap();
        let g = lift.system.graph();
        // (from, to, word read most recent first as in the figure, probability)
        let mut found: Vec<(String, String, String, String)> = g
            .edges()
            .iter()
            .map(|e| {
                let w = lift.word_of(e.label);
                let recent: String = w.recent_first().iter().map(|s| s.to_string()).collect();
                (
                    g.node_name(e.from).to_string(),
                    g.node_name(e.to).to_string(),
                    recent,
                    e.prob.to_string(),
                )
            })
            .collect();
        found.sort();
        let expected = [
            ("a", "a", "11", "1/9"),
            ("a", "a", "12", "1/6"),
            ("a", "b", "21", "2/9"),
            ("a", "b", "22", "1/2"),
            ("b", "a", "11", "1/12"),
            ("b", "a", "12", "3/16"),
            ("b", "b", "21", "1/6"),
            ("b", "b", "22", "9/16"),
        ];
        let expected: Vec<_> = expected
            .iter()
            .map(|(a, b, w, p)| (a.to_string(), b.to_string(), w.to_string(), p.to_string()))
            .collect();
        assert_eq!(found, expected);
    }

    #[test]
    fn lifted_matrix_is_word_product() {
        let lift = step_lift(&h_system(), 2).unwrap();
        let w = LabelWord::from_recent_first(vec![2, 1]);
        let label = lift.lift_word(&w).unwrap().final_label().unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.05, 0.6]);
        assert!((lift.system.matrix(label) - expected).amax() < 1e-15);
        assert!(lift.lift_word(&LabelWord::single(1)).is_none());
    }

    #[test]
    fn one_step_lift_is_identity() {
        let sys = h_system();
        let lift = step_lift(&sys, 1).unwrap();
        assert_eq!(lift.system, sys);
        assert!(step_lift(&sys, 0).is_err());
        assert!(matches!(
            step_lift_with_limit(&sys, 30, 1e7),
            Err(Error::ExplosionLimit { .. })
        ));
    }

    #[test]
    fn path_lift_of_h() {
        let lift = path_lift(&h_system(), 1).unwrap();
        let g = lift.system.graph();
        g.validate().unwrap();
        assert_eq!(g.nodes(), &["a-1->a", "a-2->b", "b-1->a", "b-2->b"]);
        assert_eq!(g.edges().len(), 8);
        let aa = g.node_index("a-1->a").unwrap();
        let ab = g.node_index("a-2->b").unwrap();
        let bb = g.node_index("b-2->b").unwrap();
        let ba = g.node_index("b-1->a").unwrap();
        assert!((g.prob(aa, ab, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.prob(bb, ba, 1) - 0.25).abs() < 1e-15);
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn path_lift_distribution() {
        let sys = h_system();
        let lift = path_lift(&sys, 1).unwrap();
        let xi = sys.graph().invariant_measure().unwrap();
        let lifted = lift_distribution(&lift, &xi).unwrap();
        let expected = [1.0 / 11.0, 2.0 / 11.0, 2.0 / 11.0, 6.0 / 11.0];
        for (w, e) in lifted.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
        let point = NodeDistribution::point(sys.graph(), 0);
        let lifted = lift_distribution(&lift, &point).unwrap();
        let expected = [1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0];
        for (w, e) in lifted.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn single_loop_lifts_stay_single() {
        let g = StochasticGraph::new(1, vec!["s".into()], vec![EdgeSpec::new("s", "s", 1, Scalar::one())]).unwrap();
        let sys = SwitchedSystem::new(g, vec![Matrix::identity(2, 2) * 0.5]).unwrap();
        for r in 1..=3 {
            let lift = path_lift(&sys, r).unwrap();
            assert_eq!(lift.system.graph().node_count(), 1);
            assert_eq!(lift.system.graph().edges().len(), 1);
            let xi = NodeDistribution::uniform(sys.graph());
            assert_eq!(lift_distribution(&lift, &xi).unwrap().weights(), &[1.0]);
        }
    }

    #[test]
    fn lift_tags() {
        for kind in [LiftKind::Identity, LiftKind::Step(3), LiftKind::Path(2)] {
            assert_eq!(LiftKind::parse_tag(&kind.tag()).unwrap(), kind);
        }
        assert!(LiftKind::parse_tag("spiral:2").is_err());
        assert!((LiftKind::Step(2).adjust_bound(0.81) - 0.9).abs() < 1e-15);
        assert_eq!(LiftKind::Path(2).adjust_bound(0.81), 0.81);
    }
}
