//! The JSON system description.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "alphabet": 2,
//!   "nodes": ["a", "b"],
//!   "edges": [{"from": "a", "to": "b", "label": 2, "prob": "2/3"}, ...],
//!   "matrices": {"1": [[0.5, 1], [0, 0.5]], "2": [["1", "0"], ["1/10", "1"]]},
//!   "initial_distribution": {"a": "1/2", "b": "1/2"},
//!   "analysis": {"template": "quadratic", "steps": [2]}
//! }
//! ```
//!
//! Probabilities and matrix entries are JSON numbers (kept as floats) or
//! strings holding `p/q` or integers (kept exactly). `initial_distribution`,
//! `analysis` and `lift_meta` are optional.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::certify::TemplateKind;
use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, NodeDistribution, StochasticGraph, PROB_TOL};
use crate::lift::{path_lift, step_lift, LiftKind};
use crate::prob::Scalar;
use crate::system::{Matrix, SwitchedSystem};

pub const SCHEMA_VERSION: u64 = 1;

/// Defaults for the certify pipeline carried by the description.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// How a lifted description relates to its source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftMeta {
    /// `step` or `path`.
    pub kind: String,
    pub parameter: usize,
    /// Lifted node → source node (the node a lifted path ends at).
    pub node_map: BTreeMap<String, String>,
    /// Lifted label → source word, oldest symbol first.
    pub label_map: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescription {
    pub schema_version: u64,
    pub alphabet: u32,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    /// Label → row-major entries.
    pub matrices: BTreeMap<u32, Vec<Vec<Scalar>>>,
    /// Node → weight.
    pub initial_distribution: Option<BTreeMap<String, Scalar>>,
    pub analysis: Option<AnalysisDefaults>,
    pub lift_meta: Option<LiftMeta>,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::SchemaError {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn scalar(v: &Value, ptr: &str) -> Result<Scalar> {
    let parsed = match v {
        Value::Number(n) => Scalar::parse(&n.to_string()),
        Value::String(s) => Scalar::parse(s),
        _ => return Err(schema(ptr, "expected a number or a numeric string")),
    };
    parsed.map_err(|e| schema(ptr, e.to_string()))
}

fn scalar_json(s: &Scalar) -> Value {
    match s.exact_text() {
        Some(t) => Value::String(t),
        None => json!(s.value()),
    }
}

fn uint(v: &Value, ptr: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| schema(ptr, "expected a nonnegative integer"))
}

fn string(v: &Value, ptr: &str) -> Result<String> {
    v.as_str().map(str::to_owned).ok_or_else(|| schema(ptr, "expected a string"))
}

fn array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(ptr, "expected an array"))
}

fn object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(ptr, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, ptr: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(ptr, format!("missing field `{key}`")))
}

impl SystemDescription {
    /// Parses JSON text. Structural problems are reported with the JSON
    /// pointer of the offending value; probability invariants are checked
    /// later, by [`Self::system`].
    pub fn parse(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| schema("", e.to_string()))?;
        let top = object(&root, "")?;
        const KNOWN: [&str; 8] = [
            "schema_version",
            "alphabet",
            "nodes",
            "edges",
            "matrices",
            "initial_distribution",
            "analysis",
            "lift_meta",
        ];
        if let Some(k) = top.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(schema(format!("/{}", escape(k)), "unknown field"));
        }
        let schema_version = match top.get("schema_version") {
            Some(v) => uint(v, "/schema_version")?,
            None => SCHEMA_VERSION,
        };
        if schema_version != SCHEMA_VERSION {
            return Err(schema("/schema_version", format!("unsupported version {schema_version}")));
        }
        let alphabet = uint(field(top, "alphabet", "")?, "/alphabet")?;
        let alphabet = u32::try_from(alphabet)
            .ok()
            .filter(|&m| m > 0)
            .ok_or_else(|| schema("/alphabet", "alphabet must be between 1 and 2^32-1"))?;
        let nodes = array(field(top, "nodes", "")?, "/nodes")?
            .iter()
            .enumerate()
            .map(|(i, v)| string(v, &format!("/nodes/{i}")))
            .collect::<Result<Vec<_>>>()?;
        let mut edges = Vec::new();
        for (i, e) in array(field(top, "edges", "")?, "/edges")?.iter().enumerate() {
            let ptr = format!("/edges/{i}");
            let o = object(e, &ptr)?;
            if let Some(k) = o.keys().find(|k| !["from", "to", "label", "prob"].contains(&k.as_str())) {
                return Err(schema(format!("{ptr}/{}", escape(k)), "unknown field"));
            }
            let label = uint(field(o, "label", &ptr)?, &format!("{ptr}/label"))?;
            edges.push(EdgeSpec {
                from: string(field(o, "from", &ptr)?, &format!("{ptr}/from"))?,
                to: string(field(o, "to", &ptr)?, &format!("{ptr}/to"))?,
                label: u32::try_from(label).map_err(|_| schema(format!("{ptr}/label"), "label too large"))?,
                prob: scalar(field(o, "prob", &ptr)?, &format!("{ptr}/prob"))?,
            });
        }
        let matrices = Self::parse_matrices(field(top, "matrices", "")?, alphabet)?;
        let initial_distribution = match top.get("initial_distribution") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let mut weights = BTreeMap::new();
                for (k, w) in object(v, "/initial_distribution")? {
                    weights.insert(k.clone(), scalar(w, &format!("/initial_distribution/{}", escape(k)))?);
                }
                Some(weights)
            }
        };
        let analysis = match top.get("analysis") {
            None | Some(Value::Null) => None,
            Some(v) => Some(AnalysisDefaults::deserialize(v).map_err(|e| schema("/analysis", e.to_string()))?),
        };
        let lift_meta = match top.get("lift_meta") {
            None | Some(Value::Null) => None,
            Some(v) => Some(LiftMeta::deserialize(v).map_err(|e| schema("/lift_meta", e.to_string()))?),
        };
        Ok(Self {
            schema_version,
            alphabet,
            nodes,
            edges,
            matrices,
            initial_distribution,
            analysis,
            lift_meta,
        })
    }

    fn parse_matrices(v: &Value, alphabet: u32) -> Result<BTreeMap<u32, Vec<Vec<Scalar>>>> {
        let mut out = BTreeMap::new();
        for (key, m) in object(v, "/matrices")? {
            let ptr = format!("/matrices/{}", escape(key));
            let label: u32 = key
                .parse()
                .map_err(|_| Error::MatrixLabelMismatch(format!("matrix key `{key}` is not a label")))?;
            if label == 0 || label > alphabet {
                return Err(Error::MatrixLabelMismatch(format!(
                    "label {label} is outside 1..={alphabet}"
                )));
            }
            let rows = array(m, &ptr)?
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let rp = format!("{ptr}/{i}");
                    array(row, &rp)?
                        .iter()
                        .enumerate()
                        .map(|(j, x)| scalar(x, &format!("{rp}/{j}")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let n = rows.len();
            if n == 0 {
                return Err(schema(&ptr, "matrix is empty"));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return Err(schema(format!("{ptr}/{i}"), format!("expected {n} entries in a square matrix")));
            }
            if out.insert(label, rows).is_some() {
                return Err(Error::MatrixLabelMismatch(format!("label {label} given twice")));
            }
        }
        let missing: Vec<String> = (1..=alphabet)
            .filter(|l| !out.contains_key(l))
            .map(|l| l.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MatrixLabelMismatch(format!("missing labels {}", missing.join(", "))));
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| schema("", format!("input is not UTF-8: {e}")))?;
        Self::parse(text)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// The canonical JSON form; parsing it gives back an equal description.
    pub fn to_json(&self) -> Value {
        let mut top = Map::new();
        top.insert("schema_version".into(), json!(self.schema_version));
        top.insert("alphabet".into(), json!(self.alphabet));
        top.insert("nodes".into(), json!(self.nodes));
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| json!({"from": e.from, "to": e.to, "label": e.label, "prob": scalar_json(&e.prob)}))
            .collect();
        top.insert("edges".into(), Value::Array(edges));
        let matrices: Map<String, Value> = self
            .matrices
            .iter()
            .map(|(l, rows)| {
                let rows: Vec<Value> = rows.iter().map(|r| r.iter().map(scalar_json).collect()).collect();
                (l.to_string(), Value::Array(rows))
            })
            .collect();
        top.insert("matrices".into(), Value::Object(matrices));
        if let Some(d) = &self.initial_distribution {
            let d: Map<String, Value> = d.iter().map(|(k, w)| (k.clone(), scalar_json(w))).collect();
            top.insert("initial_distribution".into(), Value::Object(d));
        }
        if let Some(a) = &self.analysis {
            top.insert("analysis".into(), serde_json::to_value(a).expect("plain struct"));
        }
        if let Some(m) = &self.lift_meta {
            top.insert("lift_meta".into(), serde_json::to_value(m).expect("plain struct"));
        }
        Value::Object(top)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json value");
        s.push('\n');
        s
    }

    /// Builds and validates the switched system.
    pub fn system(&self) -> Result<SwitchedSystem> {
        self.system_with_tol(PROB_TOL)
    }

    /// As [`Self::system`], with row sums checked against 1 within `tol`.
    pub fn system_with_tol(&self, tol: f64) -> Result<SwitchedSystem> {
        let graph = StochasticGraph::assemble(self.alphabet, self.nodes.clone(), self.edges.clone())?;
        graph.validate_with_tol(tol)?;
        let matrices = self
            .matrices
            .values()
            .map(|rows| {
                let n = rows.len();
                Matrix::from_fn(n, n, |i, j| rows[i][j].value())
            })
            .collect();
        SwitchedSystem::new(graph, matrices)
    }

    /// The declared initial distribution, in the graph's node order.
    pub fn initial(&self, graph: &StochasticGraph) -> Result<Option<NodeDistribution>> {
        let Some(d) = &self.initial_distribution else {
            return Ok(None);
        };
        for k in d.keys() {
            graph.node_index(k)?;
        }
        let weights = graph
            .nodes()
            .iter()
            .map(|n| d.get(n).map_or(0.0, Scalar::value))
            .collect();
        NodeDistribution::new(graph, weights).map(Some)
    }

    /// Describes an in-memory system; matrix entries are written as floats.
    pub fn from_system(system: &SwitchedSystem) -> Self {
        let graph = system.graph();
        let edges = graph
            .edges()
            .iter()
            .map(|e| EdgeSpec::new(graph.node_name(e.from), graph.node_name(e.to), e.label, e.prob.clone()))
            .collect();
        let matrices = system
            .matrices()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let rows = m.row_iter().map(|r| r.iter().map(|&x| Scalar::from_f64(x)).collect()).collect();
                (i as u32 + 1, rows)
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            alphabet: graph.alphabet(),
            nodes: graph.nodes().to_vec(),
            edges,
            matrices,
            initial_distribution: None,
            analysis: None,
            lift_meta: None,
        }
    }
}

/// Describes the lift of `system`, with a `lift_meta` block.
pub fn lift_description(system: &SwitchedSystem, lift: LiftKind) -> Result<SystemDescription> {
    match lift {
        LiftKind::Identity => Ok(SystemDescription::from_system(system)),
        LiftKind::Step(k) => {
            let l = step_lift(system, k)?;
            let mut desc = SystemDescription::from_system(&l.system);
            let node_map = l.system.graph().nodes().iter().map(|n| (n.clone(), n.clone())).collect();
            let label_map = (1..=l.system.graph().alphabet())
                .map(|label| (label, l.word_of(label).to_string()))
                .collect();
            desc.lift_meta = Some(LiftMeta {
                kind: "step".into(),
                parameter: k,
                node_map,
                label_map,
            });
            Ok(desc)
        }
        LiftKind::Path(r) => {
            let l = path_lift(system, r)?;
            let mut desc = SystemDescription::from_system(&l.system);
            let lg = l.system.graph();
            let node_map = lg
                .nodes()
                .iter()
                .enumerate()
                .map(|(v, name)| (name.clone(), system.graph().node_name(l.end_node(v)).to_owned()))
                .collect();
            let label_map = (1..=lg.alphabet()).map(|label| (label, label.to_string())).collect();
            desc.lift_meta = Some(LiftMeta {
                kind: "path".into(),
                parameter: r,
                node_map,
                label_map,
            });
            Ok(desc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: &str = r#"{
      "schema_version": 1,
      "alphabet": 2,
      "nodes": ["a", "b"],
      "edges": [
        {"from": "a", "to": "a", "label": 1, "prob": "1/3"},
        {"from": "a", "to": "b", "label": 2, "prob": "2/3"},
        {"from": "b", "to": "a", "label": 1, "prob": "1/4"},
        {"from": "b", "to": "b", "label": 2, "prob": 0.75}
      ],
      "matrices": {"1": [[0.5, 1], [0, 0.5]], "2": [[1, 0], ["1/10", 1]]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let d = SystemDescription::parse(H).unwrap();
        assert_eq!(d.alphabet, 2);
        assert_eq!(d.edges[0].prob.exact_text().as_deref(), Some("1/3"));
        assert_eq!(d.edges[3].prob.exact_text(), None);
        let again = SystemDescription::parse(&d.to_json_string()).unwrap();
        assert_eq!(again, d);
        let sys = d.system().unwrap();
        assert_eq!(sys.dim(), 2);
        assert_eq!(sys.matrix(2)[(1, 0)], 0.1);
    }

    #[test]
    fn missing_matrix_label() {
        let text = H.replace(r#", "2": [[1, 0], ["1/10", 1]]"#, "");
        assert!(matches!(SystemDescription::parse(&text), Err(Error::MatrixLabelMismatch(_))));
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let text = H.replace(r#""prob": 0.75"#, r#""prob": true"#);
        match SystemDescription::parse(&text) {
            Err(Error::SchemaError { pointer, .. }) => assert_eq!(pointer, "/edges/3/prob"),
            other => panic!("{other:?}"),
        }
        let text = H.replace(r#"[[0.5, 1], [0, 0.5]]"#, r#"[[0.5, 1], [0]]"#);
        match SystemDescription::parse(&text) {
            Err(Error::SchemaError { pointer, .. }) => assert_eq!(pointer, "/matrices/1/1"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            SystemDescription::parse(r#"{"alphabet": 1}"#),
            Err(Error::SchemaError { .. })
        ));
    }

    #[test]
    fn tolerance_is_configurable() {
        let text = H.replace(r#""prob": 0.75"#, r#""prob": 0.7500001"#);
        let d = SystemDescription::parse(&text).unwrap();
        assert!(matches!(d.system(), Err(Error::RowSumViolation { .. })));
        assert!(d.system_with_tol(1e-6).is_ok());
    }

    #[test]
    fn lift_description_round_trips() {
        let sys = SystemDescription::parse(H).unwrap().system().unwrap();
        for lift in [LiftKind::Step(2), LiftKind::Path(1)] {
            let d = lift_description(&sys, lift).unwrap();
            let again = SystemDescription::parse(&d.to_json_string()).unwrap();
            assert_eq!(again, d);
            assert_eq!(again.system().unwrap(), lift.apply(&sys).unwrap());
        }
        let d = lift_description(&sys, LiftKind::Step(2)).unwrap();
        assert_eq!(d.lift_meta.unwrap().label_map[&2], "1 2");
    }
}
