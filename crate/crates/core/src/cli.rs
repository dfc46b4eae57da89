//! The `switchcert` command line.
//!
//! Every subcommand reads one JSON system description. Results go to stdout;
//! errors go to stderr together with the stage that raised them. Exit codes:
//! 0 certified (or success), 2 inconclusive, 1 error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::certify::{hierarchical_bound, BoundConfig, BoundReport, BoundVerdict, LiftStrategy, TemplateKind};
use crate::error::{Error, Result};
use crate::graph::PROB_TOL;
use crate::lift::LiftKind;
use crate::montecarlo::{empirical_cylinder_check, estimate_lyapunov_exponent};
use crate::report::{
    bounds_csv, emit_report, lift_description, run_certify, start_distribution, CertifyOptions, DistChoice, Format,
    SystemDescription, EXIT_CERTIFIED, EXIT_ERROR, EXIT_INCONCLUSIVE,
};
use crate::word::LabelWord;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SWITCHCERT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "switchcert", version, about = "Almost-sure stability certificates for graph-switched linear systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the description and the graph invariants.
    Validate(Common),
    /// Transition matrix and invariant measure.
    Measure(Common),
    /// Cylinder measures, optionally against sampled frequencies.
    Cylinder(CylinderArgs),
    /// Emit a lifted system description.
    Lift(LiftArgs),
    /// Bound the probabilistic spectral radius with one template family.
    Bound(BoundArgs),
    /// Monte Carlo estimate of the top Lyapunov exponent.
    Simulate(SimulateArgs),
    /// Full pipeline: bounds, comparison radii, simulation, verdict.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// System description (JSON).
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Tolerance on outgoing probability sums.
    #[arg(long, default_value_t = PROB_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    Copositive,
    Quadratic,
}

impl From<TemplateArg> for TemplateKind {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::Copositive => TemplateKind::Copositive,
            TemplateArg::Quadratic => TemplateKind::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistArg {
    Invariant,
    Uniform,
    File,
}

impl From<DistArg> for DistChoice {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Invariant => DistChoice::Invariant,
            DistArg::Uniform => DistChoice::Uniform,
            DistArg::File => DistChoice::File,
        }
    }
}

#[derive(Debug, Args)]
pub struct CylinderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Words to measure, oldest symbol first (e.g. "2 1").
    #[arg(long = "word", value_name = "W")]
    pub words: Vec<String>,
    /// Tabulate every word of this length.
    #[arg(long)]
    pub length: Option<usize>,
    /// Also sample this many paths of the tabulated length.
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "invariant")]
    pub dist: DistArg,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    /// System description (JSON).
    pub file: PathBuf,
    #[arg(long, value_name = "K", conflicts_with = "path", required_unless_present = "path")]
    pub step: Option<usize>,
    #[arg(long, value_name = "R")]
    pub path: Option<usize>,
    #[arg(long, default_value_t = PROB_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LiftSelection {
    /// Step-lift depths.
    #[arg(long = "step", value_name = "K", num_args = 1..)]
    pub steps: Vec<usize>,
    /// Path-lift degrees.
    #[arg(long = "path", value_name = "R", num_args = 1..)]
    pub paths: Vec<usize>,
}

impl LiftSelection {
    fn strategy(&self) -> Option<LiftStrategy> {
        (!self.steps.is_empty() || !self.paths.is_empty()).then(|| LiftStrategy {
            steps: self.steps.clone(),
            paths: self.paths.clone(),
        })
    }
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub template: TemplateArg,
    #[command(flatten)]
    pub lifts: LiftSelection,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "invariant")]
    pub dist: DistArg,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Template families; repeat to run several.
    #[arg(long = "template", value_enum)]
    pub templates: Vec<TemplateArg>,
    #[command(flatten)]
    pub lifts: LiftSelection,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    /// Leave out the metadata block (version, timestamp, threads).
    #[arg(long)]
    pub no_meta: bool,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: EXIT_ERROR,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code: 0,
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok((stdout, code)) => Outcome {
            stdout,
            stderr: String::new(),
            code,
        },
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error [{}]: {e}\n", e.module()),
            code: EXIT_ERROR,
        },
    }
}

fn load(common: &Common) -> Result<SystemDescription> {
    SystemDescription::from_path(&common.file)
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn require_not_csv(format: FormatArg, command: &str) -> Result<()> {
    match format {
        FormatArg::Csv => Err(Error::InvalidArgument(format!("`{command}` has no csv output"))),
        _ => Ok(()),
    }
}

fn execute(command: &Command) -> Result<(String, i32)> {
    match command {
        Command::Validate(c) => validate(c),
        Command::Measure(c) => measure(c),
        Command::Cylinder(a) => cylinder(a),
        Command::Lift(a) => lift(a),
        Command::Bound(a) => bound(a),
        Command::Simulate(a) => simulate(a),
        Command::Certify(a) => certify(a),
    }
}

fn validate(c: &Common) -> Result<(String, i32)> {
    require_not_csv(c.format, "validate")?;
    let desc = load(c)?;
    let system = desc.system_with_tol(c.tol)?;
    let g = system.graph();
    let connected = g.is_strongly_connected();
    let out = match c.format {
        FormatArg::Json => pretty(&json!({
            "valid": true,
            "nodes": g.node_count(),
            "edges": g.edges().len(),
            "alphabet": g.alphabet(),
            "dimension": system.dim(),
            "strongly_connected": connected,
            "nonnegative": system.is_nonnegative(),
            "exact_probabilities": g.is_exact(),
        })),
        _ => format!(
            "valid: {} nodes, {} edges, alphabet {}, dimension {}\nstrongly connected: {}\nnonnegative matrices: {}\n",
            g.node_count(),
            g.edges().len(),
            g.alphabet(),
            system.dim(),
            if connected { "yes" } else { "no" },
            if system.is_nonnegative() { "yes" } else { "no" },
        ),
    };
    Ok((out, EXIT_CERTIFIED))
}

fn measure(c: &Common) -> Result<(String, i32)> {
    require_not_csv(c.format, "measure")?;
    let desc = load(c)?;
    let system = desc.system_with_tol(c.tol)?;
    let g = system.graph();
    let xi = g.invariant_measure()?;
    let p = g.transition_matrix();
    let exact = g.exact_transition_matrix().map(|rows| {
        rows.iter()
            .map(|r| r.iter().map(|x| format!("{}/{}", x.numer(), x.denom())).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    });
    let rows: Vec<Vec<f64>> = p.row_iter().map(|r| r.iter().copied().collect()).collect();
    let out = match c.format {
        FormatArg::Json => pretty(&json!({
            "nodes": g.nodes(),
            "transition_matrix": rows,
            "transition_matrix_exact": exact,
            "invariant_measure": xi.weights(),
        })),
        _ => {
            let mut s = String::from("transition matrix\n");
            for (name, row) in g.nodes().iter().zip(&rows) {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
                let _ = writeln!(s, "  {name:<8} {}", cells.join(" "));
            }
            s.push_str("invariant measure\n");
            for (name, w) in g.nodes().iter().zip(xi.weights()) {
                let _ = writeln!(s, "  {name:<8} {w:.12}");
            }
            s
        }
    };
    Ok((out, EXIT_CERTIFIED))
}

fn cylinder(a: &CylinderArgs) -> Result<(String, i32)> {
    let desc = load(&a.common)?;
    let system = desc.system_with_tol(a.common.tol)?;
    let g = system.graph();
    let xi = start_distribution(&desc, &system, &a.dist.into())?;
    let mut words = a
        .words
        .iter()
        .map(|w| LabelWord::parse_oldest_first(w))
        .collect::<Result<Vec<_>>>()?;
    if let Some(k) = a.length {
        if a.trials > 0 {
            let check = empirical_cylinder_check(g, &xi, k, a.trials, a.seed)?;
            let out = match a.common.format {
                FormatArg::Json => pretty(&check),
                FormatArg::Csv => {
                    let mut s = String::from("word,analytic,empirical,z,flagged\n");
                    for r in &check.rows {
                        let _ = writeln!(s, "{},{},{},{},{}", r.word, r.analytic, r.empirical, r.z, r.flagged);
                    }
                    s
                }
                FormatArg::Text => {
                    let mut s = format!("{:<12} {:>12} {:>12} {:>8}\n", "word", "analytic", "empirical", "z");
                    for r in &check.rows {
                        let _ = writeln!(
                            s,
                            "{:<12} {:>12.6} {:>12.6} {:>8.2}{}",
                            r.word.to_string(),
                            r.analytic,
                            r.empirical,
                            r.z,
                            if r.flagged { "  !" } else { "" }
                        );
                    }
                    s
                }
            };
            return Ok((out, if check.any_flagged() { EXIT_INCONCLUSIVE } else { EXIT_CERTIFIED }));
        }
        words.extend(LabelWord::all(g.alphabet(), k));
    }
    if words.is_empty() {
        return Err(Error::InvalidArgument("give --word or --length".into()));
    }
    let rows: Vec<(String, f64)> = words
        .iter()
        .map(|w| (w.to_string(), g.cylinder_measure(&xi, w)))
        .collect();
    let out = match a.common.format {
        FormatArg::Json => pretty(&rows.iter().map(|(w, m)| json!({"word": w, "measure": m})).collect::<Vec<_>>()),
        FormatArg::Csv => {
            let mut s = String::from("word,measure\n");
            for (w, m) in &rows {
                let _ = writeln!(s, "{w},{m}");
            }
            s
        }
        FormatArg::Text => {
            let mut s = String::new();
            for (w, m) in &rows {
                let _ = writeln!(s, "{w:<12} {m:.12}");
            }
            s
        }
    };
    Ok((out, EXIT_CERTIFIED))
}

fn lift(a: &LiftArgs) -> Result<(String, i32)> {
    let desc = SystemDescription::from_path(&a.file)?;
    let system = desc.system_with_tol(a.tol)?;
    let kind = match (a.step, a.path) {
        (Some(k), _) => LiftKind::Step(k),
        (None, Some(r)) => LiftKind::Path(r),
        (None, None) => return Err(Error::InvalidArgument("give --step or --path".into())),
    };
    Ok((lift_description(&system, kind)?.to_json_string(), EXIT_CERTIFIED))
}

fn bound_text(report: &BoundReport) -> String {
    let mut s = format!("{:<10} {:>12} {:>12}  verified\n", "lift", "raw rho", "adjusted");
    for e in &report.entries {
        let _ = writeln!(
            s,
            "{:<10} {:>12.6} {:>12.6}  {}",
            e.lift.tag(),
            e.raw_rho,
            e.adjusted_rho,
            if e.verified { "yes" } else { "no" }
        );
    }
    if let Some(b) = report.best_bound {
        let _ = writeln!(s, "best bound {b:.6}");
    }
    let _ = writeln!(
        s,
        "verdict    {}",
        match report.verdict {
            BoundVerdict::CertifiedStable => "certified-stable",
            BoundVerdict::Inconclusive => "inconclusive",
        }
    );
    s
}

fn bound(a: &BoundArgs) -> Result<(String, i32)> {
    let desc = load(&a.common)?;
    let system = desc.system_with_tol(a.common.tol)?;
    let strategy = a.lifts.strategy().unwrap_or(LiftStrategy {
        steps: vec![1],
        paths: Vec::new(),
    });
    let report = hierarchical_bound(&system, a.template.into(), &strategy, &BoundConfig::with_seed(a.seed))?;
    let out = match a.common.format {
        FormatArg::Json => pretty(&report),
        FormatArg::Csv => bounds_csv(std::slice::from_ref(&report)),
        FormatArg::Text => bound_text(&report),
    };
    let code = match report.verdict {
        BoundVerdict::CertifiedStable => EXIT_CERTIFIED,
        BoundVerdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Ok((out, code))
}

fn simulate(a: &SimulateArgs) -> Result<(String, i32)> {
    require_not_csv(a.common.format, "simulate")?;
    let desc = load(&a.common)?;
    let system = desc.system_with_tol(a.common.tol)?;
    let xi = start_distribution(&desc, &system, &a.dist.into())?;
    let est = estimate_lyapunov_exponent(&system, &xi, a.horizon, a.trials, a.seed)?;
    let out = match a.common.format {
        FormatArg::Json => pretty(&est),
        _ => {
            let (lo, hi) = est.interval();
            format!(
                "exponent   {:.6}\n95% CI     [{lo:.6}, {hi:.6}]\nstd dev    {:.6}\nradius     {:.6}\ntrials     {} x horizon {}{}\n",
                est.mean,
                est.std_dev,
                est.radius,
                est.trials,
                est.horizon,
                if est.degenerate { "\ndegenerate products were clamped" } else { "" }
            )
        }
    };
    Ok((out, EXIT_CERTIFIED))
}

fn certify(a: &CertifyArgs) -> Result<(String, i32)> {
    let desc = load(&a.common)?;
    let mut options = CertifyOptions::from_description(&desc);
    if !a.templates.is_empty() {
        options.templates = a.templates.iter().map(|&t| t.into()).collect();
    }
    if let Some(s) = a.lifts.strategy() {
        options.strategy = s;
    }
    options.horizon = a.horizon.unwrap_or(options.horizon);
    options.trials = a.trials.unwrap_or(options.trials);
    options.seed = a.seed.unwrap_or(options.seed);
    if let Some(d) = a.dist {
        options.dist = d.into();
    }
    options.tol = a.common.tol;
    options.meta = !a.no_meta;
    let report = run_certify(&desc, &options)?;
    Ok((emit_report(&report, a.common.format.into()), report.exit_code()))
}
