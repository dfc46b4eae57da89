//! System descriptions, the certify pipeline and its reports.

mod description;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::{hierarchical_bound, BoundConfig, BoundReport, BoundVerdict, LiftStrategy, TemplateKind};
use crate::error::{Error, Result};
use crate::graph::{NodeDistribution, PROB_TOL};
use crate::montecarlo::{estimate_lyapunov_exponent, ExponentEstimate};
use crate::system::spectral_radius;

pub use description::{lift_description, AnalysisDefaults, LiftMeta, SystemDescription, SCHEMA_VERSION};

/// Exit code for a certified-stable verdict.
pub const EXIT_CERTIFIED: i32 = 0;
/// Exit code for errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit code for an inconclusive verdict.
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Start distribution for simulations.
#[derive(Debug, Clone, PartialEq)]
pub enum DistChoice {
    Invariant,
    Uniform,
    /// The description's `initial_distribution`.
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    /// Templates to run; empty means quadratic, plus copositive when every
    /// matrix is nonnegative.
    pub templates: Vec<TemplateKind>,
    pub strategy: LiftStrategy,
    pub horizon: usize,
    /// Monte Carlo trials; 0 skips the simulation.
    pub trials: usize,
    pub seed: u64,
    /// Row-sum tolerance used when validating the graph.
    pub tol: f64,
    pub dist: DistChoice,
    /// Include the `meta` block (version, timestamp, threads).
    pub meta: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            templates: Vec::new(),
            strategy: LiftStrategy {
                steps: vec![1],
                paths: Vec::new(),
            },
            horizon: 10_000,
            trials: 100,
            seed: 0,
            tol: PROB_TOL,
            dist: DistChoice::Invariant,
            meta: true,
        }
    }
}

impl CertifyOptions {
    /// Options taken from the description's `analysis` block, falling back to
    /// the defaults.
    pub fn from_description(desc: &SystemDescription) -> Self {
        let mut o = Self::default();
        if let Some(a) = &desc.analysis {
            if let Some(t) = a.template {
                o.templates = vec![t];
            }
            if a.steps.is_some() || a.paths.is_some() {
                o.strategy = LiftStrategy {
                    steps: a.steps.clone().unwrap_or_default(),
                    paths: a.paths.clone().unwrap_or_default(),
                };
            }
            o.horizon = a.horizon.unwrap_or(o.horizon);
            o.trials = a.trials.unwrap_or(o.trials);
            o.seed = a.seed.unwrap_or(o.seed);
        }
        if desc.initial_distribution.is_some() {
            o.dist = DistChoice::File;
        }
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Some verified certificate has lift-adjusted rate below 1.
    CertifiedStable,
    Inconclusive,
}

impl Verdict {
    pub fn describe(&self) -> &'static str {
        match self {
            Verdict::CertifiedStable => "almost-surely-stable (certified)",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::CertifiedStable => EXIT_CERTIFIED,
            Verdict::Inconclusive => EXIT_INCONCLUSIVE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub nodes: usize,
    pub edges: usize,
    pub alphabet: u32,
    pub dimension: usize,
    pub strongly_connected: bool,
    pub nonnegative: bool,
    pub exact_probabilities: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeWeight {
    pub node: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub generated_unix: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// `sha256:` of the canonical description.
    pub input_digest: String,
    pub validation: Validation,
    pub invariant_measure: Vec<NodeWeight>,
    pub bounds: Vec<BoundReport>,
    pub best_bound: Option<f64>,
    pub mean_square_radius: f64,
    pub averaged_radius: f64,
    pub monte_carlo: Option<ExponentEstimate>,
    pub verdict: Verdict,
    pub evidence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ReportMeta>,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// `sha256:<hex>` of the canonical JSON form of `desc`.
pub fn digest(desc: &SystemDescription) -> String {
    let hash = Sha256::digest(desc.to_json_string().as_bytes());
    let mut out = String::from("sha256:");
    for b in hash {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// The start distribution requested by `choice`.
pub fn start_distribution(
    desc: &SystemDescription,
    system: &crate::system::SwitchedSystem,
    choice: &DistChoice,
) -> Result<NodeDistribution> {
    let graph = system.graph();
    match choice {
        DistChoice::Invariant => graph.invariant_measure(),
        DistChoice::Uniform => Ok(NodeDistribution::uniform(graph)),
        DistChoice::File => desc.initial(graph)?.ok_or_else(|| {
            Error::InvalidArgument("the description has no initial_distribution".into())
        }),
    }
}

/// Validates, bounds, simulates and concludes.
pub fn run_certify(desc: &SystemDescription, options: &CertifyOptions) -> Result<AnalysisReport> {
    let system = desc.system_with_tol(options.tol)?;
    let graph = system.graph();
    let mut evidence = Vec::new();
    let validation = Validation {
        nodes: graph.node_count(),
        edges: graph.edges().len(),
        alphabet: graph.alphabet(),
        dimension: system.dim(),
        strongly_connected: graph.is_strongly_connected(),
        nonnegative: system.is_nonnegative(),
        exact_probabilities: graph.is_exact(),
    };
    evidence.push(format!(
        "validated: {} nodes, {} edges, alphabet {}, dimension {}",
        validation.nodes, validation.edges, validation.alphabet, validation.dimension
    ));
    let xi = graph.invariant_measure()?;
    evidence.push("graph is strongly connected; invariant measure computed".into());
    let invariant_measure = graph
        .nodes()
        .iter()
        .zip(xi.weights())
        .map(|(n, &w)| NodeWeight {
            node: n.clone(),
            weight: w,
        })
        .collect();

    let templates = if options.templates.is_empty() {
        let mut t = vec![TemplateKind::Quadratic];
        if validation.nonnegative {
            t.insert(0, TemplateKind::Copositive);
        }
        t
    } else {
        options.templates.clone()
    };
    let config = BoundConfig::with_seed(options.seed);
    let mut bounds = Vec::new();
    for kind in templates {
        let report = hierarchical_bound(&system, kind, &options.strategy, &config)?;
        for e in &report.entries {
            evidence.push(format!(
                "{} on {}: raw rho {:.6}, adjusted {:.6}, {}",
                kind.name(),
                e.lift.tag(),
                e.raw_rho,
                e.adjusted_rho,
                if e.verified { "verified" } else { "not verified" }
            ));
        }
        if !report.monotone {
            evidence.push(format!("{}: a lifted bound exceeds the unlifted one beyond slack", kind.name()));
        }
        bounds.push(report);
    }
    let best_bound = bounds
        .iter()
        .filter_map(|b| b.best_bound)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let verdict = if bounds.iter().any(|b| b.verdict == BoundVerdict::CertifiedStable) {
        Verdict::CertifiedStable
    } else {
        Verdict::Inconclusive
    };

    let averaged_radius = spectral_radius(&system.averaged_matrix(&xi))?;
    evidence.push(format!(
        "averaged matrix spectral radius {averaged_radius:.6}{}",
        if averaged_radius > 1.0 { " (> 1: first moment unstable)" } else { "" }
    ));
    let mean_square_radius = system.mean_square_operator_radius()?;
    evidence.push(format!(
        "mean-square radius {mean_square_radius:.6}{}",
        if mean_square_radius >= 1.0 { " (>= 1: mean-square certificates infeasible)" } else { " (< 1: mean-square stable)" }
    ));

    let monte_carlo = if options.trials > 0 {
        let start = start_distribution(desc, &system, &options.dist)?;
        let est = estimate_lyapunov_exponent(&system, &start, options.horizon, options.trials, options.seed)?;
        let (lo, hi) = est.interval();
        evidence.push(format!(
            "Monte Carlo: exponent {:.6} with 95% interval [{lo:.6}, {hi:.6}], radius {:.6}{}",
            est.mean,
            est.radius,
            if est.degenerate { " (degenerate products clamped)" } else { "" }
        ));
        if let Some(best) = best_bound {
            let consistent = est.mean < best.ln() + 3.0 * est.half_width;
            evidence.push(format!(
                "Monte Carlo {} the best certified bound {best:.6}",
                if consistent { "is consistent with" } else { "CONTRADICTS" }
            ));
        }
        Some(est)
    } else {
        None
    };
    evidence.push(format!("verdict: {}", verdict.describe()));

    let meta = options.meta.then(|| ReportMeta {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        generated_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        threads: rayon::current_num_threads(),
    });
    Ok(AnalysisReport {
        input_digest: digest(desc),
        validation,
        invariant_measure,
        bounds,
        best_bound,
        mean_square_radius,
        averaged_radius,
        monte_carlo,
        verdict,
        evidence,
        meta,
    })
}

/// Header of the bounds table.
pub const CSV_HEADER: &str = "lift,template,raw_rho,adjusted_rho";

/// One row per lift and template.
pub fn bounds_csv(bounds: &[BoundReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for report in bounds {
        for e in &report.entries {
            let _ = writeln!(out, "{},{},{},{}", e.lift.tag(), e.template.name(), e.raw_rho, e.adjusted_rho);
        }
    }
    out
}

/// Renders a report. JSON is the complete form; CSV is the bounds table.
pub fn emit_report(report: &AnalysisReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => bounds_csv(&report.bounds),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "input      {}", report.input_digest);
            let measure: Vec<String> = report
                .invariant_measure
                .iter()
                .map(|w| format!("{}={:.6}", w.node, w.weight))
                .collect();
            let _ = writeln!(out, "invariant  {}", measure.join(" "));
            let _ = writeln!(out, "averaged   {:.6}", report.averaged_radius);
            let _ = writeln!(out, "mean-sq    {:.6}", report.mean_square_radius);
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<10} {:<11} {:>12} {:>12}  verified", "lift", "template", "raw rho", "adjusted");
            for b in &report.bounds {
                for e in &b.entries {
                    let _ = writeln!(
                        out,
                        "{:<10} {:<11} {:>12.6} {:>12.6}  {}",
                        e.lift.tag(),
                        e.template.name(),
                        e.raw_rho,
                        e.adjusted_rho,
                        if e.verified { "yes" } else { "no" }
                    );
                }
            }
            let _ = writeln!(out);
            if let Some(mc) = &report.monte_carlo {
                let _ = writeln!(
                    out,
                    "exponent   {:.6} ± {:.6} (T={}, N={}), radius {:.6}",
                    mc.mean, mc.half_width, mc.horizon, mc.trials, mc.radius
                );
            }
            if let Some(b) = report.best_bound {
                let _ = writeln!(out, "best bound {b:.6}");
            }
            let _ = writeln!(out, "verdict    {}", report.verdict.describe());
            out
        }
    }
}
