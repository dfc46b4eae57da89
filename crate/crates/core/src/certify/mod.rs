//! Lyapunov multi-function certificates.
//!
//! A family `{f_a}` (one function per graph node) certifies rate `ρ` when for
//! every node `a` and every `x`
//!
//! ```text
//! Π_{i,b} f_b(A_i x)^{p_{a,b,i}} ≤ ρ f_a(x)
//! ```
//!
//! and then `ρ` bounds the probabilistic spectral radius from above. Two
//! template families are searched:
//!
//! * dual copositive norms, for systems with nonnegative matrices, where the
//!   condition only needs checking at `x = v_a` and the search over
//!   `log v` is convex;
//! * quadratic norms, certified through the product of induced norms
//!   `Π ‖A_i‖_{Q_a→Q_b}^{p_{a,b,i}} ≤ ρ`, which implies the pointwise
//!   condition.
//!
//! Bounds found on a K-step lift transfer through a K-th root, bounds found on
//! a path lift transfer unchanged; [`hierarchical_bound`] runs both kinds.

mod copositive;
mod quadratic;
mod template;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{path_lift, step_lift, LiftKind};
use crate::system::{Matrix, SwitchedSystem};

pub use copositive::{copositive_bound, copositive_bound_from, CopositiveConfig};
pub use quadratic::{induced_norm, quadratic_bound, quadratic_bound_from, QuadraticConfig};
pub use template::{CopositiveTemplate, QuadraticTemplate, Template, TemplateKind, LOG_FLOOR};

/// Margin below which a stored certificate no longer verifies.
pub const VERIFY_TOL: f64 = -1e-9;

/// Slack allowed when comparing lift-adjusted bounds with the unlifted one.
pub const MONOTONE_SLACK: f64 = 0.02;

/// Seed of the pointwise sampling backstop in [`check_lmf`].
const POINTWISE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, PartialEq)]
pub struct LmfCheck {
    /// `log ρ − max_a r_a`; nonnegative when the condition holds.
    pub margin: f64,
    /// Per-node log rate `r_a`.
    pub node_log_rates: Vec<f64>,
    /// Some log term hit [`LOG_FLOOR`].
    pub degenerate: bool,
    /// Quadratic only: `log ρ` minus the largest sampled pointwise log ratio.
    pub pointwise_margin: Option<f64>,
}

impl LmfCheck {
    pub fn holds(&self) -> bool {
        self.margin >= VERIFY_TOL
    }
}

fn check_shape(system: &SwitchedSystem, template: &Template) -> Result<()> {
    if template.node_count() != system.graph().node_count() {
        return Err(Error::DimensionMismatch(format!(
            "template has {} nodes, graph has {}",
            template.node_count(),
            system.graph().node_count()
        )));
    }
    if template.dim() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "template dimension {} differs from system dimension {}",
            template.dim(),
            system.dim()
        )));
    }
    Ok(())
}

pub(crate) fn require_nonnegative(system: &SwitchedSystem) -> Result<()> {
    for (i, m) in system.matrices().iter().enumerate() {
        if m.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeEntries(format!("matrix for label {}", i + 1)));
        }
    }
    Ok(())
}

/// Per-node log rates of a template, plus whether any term was clamped.
pub(crate) fn node_log_rates(system: &SwitchedSystem, template: &Template) -> Result<(Vec<f64>, bool)> {
    let graph = system.graph();
    let mut rates = vec![0.0; graph.node_count()];
    let mut degenerate = false;
    match template {
        Template::Copositive(t) => {
            for e in graph.edges() {
                let va = &t.vectors()[e.from];
                let y = system.matrix(e.label) * nalgebra::DVector::from_column_slice(va);
                let val = t.eval(e.to, y.as_slice());
                let log = if val > 0.0 { val.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
                degenerate |= log <= LOG_FLOOR;
                rates[e.from] += e.prob.value() * log;
            }
        }
        Template::Quadratic(t) => {
            let qs: Vec<Matrix> = (0..t.node_count()).map(|a| t.matrix(a)).collect();
            for e in graph.edges() {
                let norm = induced_norm(&qs[e.from], &qs[e.to], system.matrix(e.label))
                    .ok_or(Error::NotPositiveDefinite(e.from))?;
                let log = if norm > 0.0 { norm.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
                degenerate |= log <= LOG_FLOOR;
                rates[e.from] += e.prob.value() * log;
            }
        }
    }
    Ok((rates, degenerate))
}

/// Checks the multi-function condition for `template` at rate `rho`.
///
/// Copositive templates are checked exactly at the vertices `x = v_a`.
/// Quadratic templates are checked through induced norms, and additionally at
/// 10⁴ random unit vectors per node.
pub fn check_lmf(system: &SwitchedSystem, template: &Template, rho: f64) -> Result<LmfCheck> {
    check_shape(system, template)?;
    template.check()?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("rate {rho} must be finite and positive")));
    }
    if template.kind() == TemplateKind::Copositive {
        require_nonnegative(system)?;
    }
    let (rates, degenerate) = node_log_rates(system, template)?;
    let worst = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pointwise_margin = match template.kind() {
        TemplateKind::Quadratic => {
            Some(rho.ln() - pointwise_log_ratio_max(system, template, 10_000, POINTWISE_SEED)?)
        }
        TemplateKind::Copositive => None,
    };
    Ok(LmfCheck {
        margin: rho.ln() - worst,
        node_log_rates: rates,
        degenerate,
        pointwise_margin,
    })
}

/// Largest sampled value of `Σ_{i,b} p_{a,b,i} log f_b(A_i x) − log f_a(x)`
/// over all nodes `a` and `samples` random points `x` per node. Points are
/// drawn from the unit cube for copositive templates (the nonnegative orthant
/// up to scale) and from the unit sphere for quadratic ones.
pub fn pointwise_log_ratio_max(
    system: &SwitchedSystem,
    template: &Template,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_shape(system, template)?;
    let graph = system.graph();
    let n = system.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let safe_ln = |v: f64| if v > 0.0 { v.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
    for a in 0..graph.node_count() {
        for _ in 0..samples {
            let x: Vec<f64> = match template.kind() {
                TemplateKind::Copositive => (0..n).map(|_| rng.gen::<f64>()).collect(),
                TemplateKind::Quadratic => {
                    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    g.into_iter().map(|v| v / norm).collect()
                }
            };
            let fx = template.eval(a, &x);
            if !(fx > 0.0) {
                continue;
            }
            let xv = nalgebra::DVector::from_column_slice(&x);
            let lhs: f64 = graph
                .outgoing(a)
                .map(|e| {
                    let y = system.matrix(e.label) * &xv;
                    e.prob.value() * safe_ln(template.eval(e.to, y.as_slice()))
                })
                .sum();
            worst = worst.max(lhs - fx.ln());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateStatus {
    Certified,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub method: String,
    pub seed: u64,
    pub restarts: usize,
    /// Iterations (subgradient) or evaluation budget (pattern search) per restart.
    pub iterations: usize,
    pub best_restart: usize,
}

/// A template with the rate it certifies on a given lift of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub template: Template,
    pub rho: f64,
    pub margin: f64,
    pub lift: LiftKind,
    pub status: CertificateStatus,
    pub degenerate: bool,
    pub optimizer: OptimizerMeta,
}

impl Certificate {
    /// Rate in the original system's scale.
    pub fn adjusted_rho(&self) -> f64 {
        self.lift.adjust_bound(self.rho)
    }
}

/// Smallest certified rate for `template` on `system`, inflated by a relative
/// 1e-12 so the returned certificate checks with a nonnegative margin.
pub(crate) fn finalize(
    system: &SwitchedSystem,
    template: Template,
    optimizer: OptimizerMeta,
) -> Result<Certificate> {
    let (rates, _) = node_log_rates(system, &template)?;
    let worst = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho = worst.exp() * (1.0 + 1e-12);
    let check = check_lmf(system, &template, rho)?;
    let status = if check.holds() && check.pointwise_margin.is_none_or(|m| m >= VERIFY_TOL) {
        CertificateStatus::Certified
    } else {
        CertificateStatus::Violated
    };
    Ok(Certificate {
        template,
        rho,
        margin: check.margin,
        lift: LiftKind::Identity,
        status,
        degenerate: check.degenerate,
        optimizer,
    })
}

/// Rebuilds the certificate's lift of `system` and re-checks it at the stored
/// rate. Returns whether it holds and the margin.
pub fn verify_certificate(system: &SwitchedSystem, certificate: &Certificate) -> Result<(bool, f64)> {
    certificate.template.check()?;
    let lifted = certificate.lift.apply(system)?;
    if certificate.template.node_count() != lifted.graph().node_count() || certificate.template.dim() != lifted.dim() {
        return Err(Error::LiftMismatch(format!(
            "template has {} nodes of dimension {}, lift `{}` has {} nodes of dimension {}",
            certificate.template.node_count(),
            certificate.template.dim(),
            certificate.lift.tag(),
            lifted.graph().node_count(),
            lifted.dim()
        )));
    }
    let check = check_lmf(&lifted, &certificate.template, certificate.rho)?;
    let ok = check.holds() && check.pointwise_margin.is_none_or(|m| m >= VERIFY_TOL);
    Ok((ok, check.margin))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundConfig {
    pub copositive: CopositiveConfig,
    pub quadratic: QuadraticConfig,
}

impl BoundConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut c = Self::default();
        c.copositive.seed = seed;
        c.quadratic.seed = seed;
        c
    }
}

/// Runs the optimizer of `kind` on `system`, optionally warm-started.
pub fn template_bound(
    system: &SwitchedSystem,
    kind: TemplateKind,
    config: &BoundConfig,
    warm: Option<&Template>,
) -> Result<Certificate> {
    match kind {
        TemplateKind::Copositive => {
            let warm = match warm {
                Some(Template::Copositive(t)) => Some(t),
                _ => None,
            };
            copositive_bound_from(system, &config.copositive, warm)
        }
        TemplateKind::Quadratic => {
            let warm = match warm {
                Some(Template::Quadratic(t)) => Some(t),
                _ => None,
            };
            quadratic_bound_from(system, &config.quadratic, warm)
        }
    }
}

/// Which lifts to try.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftStrategy {
    pub steps: Vec<usize>,
    pub paths: Vec<usize>,
}

impl LiftStrategy {
    pub fn lifts(&self) -> Vec<LiftKind> {
        self.steps
            .iter()
            .map(|&k| LiftKind::Step(k))
            .chain(self.paths.iter().map(|&r| LiftKind::Path(r)))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.paths.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVerdict {
    CertifiedStable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub lift: LiftKind,
    pub template: TemplateKind,
    /// Certified rate on the lifted system.
    pub raw_rho: f64,
    /// Bound on the original system: K-th root for step lifts.
    pub adjusted_rho: f64,
    pub verified: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub template: TemplateKind,
    pub entries: Vec<BoundEntry>,
    pub best_bound: Option<f64>,
    pub verdict: BoundVerdict,
    /// Every lifted bound stays within [`MONOTONE_SLACK`] of the unlifted one
    /// (vacuously true without an unlifted entry).
    pub monotone: bool,
}

/// Bounds the probabilistic spectral radius on each requested lift.
///
/// The unlifted certificate warm-starts every lifted search: on a step lift
/// it applies as is, on a path lift each lifted node takes the function of the
/// source node its path ends at.
pub fn hierarchical_bound(
    system: &SwitchedSystem,
    kind: TemplateKind,
    strategy: &LiftStrategy,
    config: &BoundConfig,
) -> Result<BoundReport> {
    let mut entries = Vec::new();
    let mut base: Option<Certificate> = None;
    if !strategy.is_empty() {
        base = Some(template_bound(system, kind, config, None)?);
    }
    for lift in strategy.lifts() {
        let (lifted, warm) = match lift {
            LiftKind::Step(k) => {
                let l = step_lift(system, k)?;
                let warm = base.as_ref().map(|c| c.template.clone());
                (l.system, warm)
            }
            LiftKind::Path(r) => {
                let l = path_lift(system, r)?;
                let ends: Vec<usize> = (0..l.paths.len()).map(|v| l.end_node(v)).collect();
                let warm = base.as_ref().map(|c| c.template.reindex(&ends));
                (l.system, warm)
            }
            LiftKind::Identity => (system.clone(), None),
        };
        let mut cert = match (lift, &base) {
            (LiftKind::Step(1), Some(b)) => b.clone(),
            _ => template_bound(&lifted, kind, config, warm.as_ref())?,
        };
        cert.lift = lift;
        let (verified, _) = verify_certificate(system, &cert)?;
        entries.push(BoundEntry {
            lift,
            template: kind,
            raw_rho: cert.rho,
            adjusted_rho: cert.adjusted_rho(),
            verified,
            certificate: cert,
        });
    }
    let best_bound = entries
        .iter()
        .filter(|e| e.verified)
        .map(|e| e.adjusted_rho)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let verdict = match best_bound {
        Some(b) if b < 1.0 => BoundVerdict::CertifiedStable,
        _ => BoundVerdict::Inconclusive,
    };
    let unlifted = entries
        .iter()
        .find(|e| matches!(e.lift, LiftKind::Step(1) | LiftKind::Identity))
        .map(|e| e.adjusted_rho);
    let monotone = unlifted.is_none_or(|u| entries.iter().all(|e| e.adjusted_rho <= u + MONOTONE_SLACK));
    Ok(BoundReport {
        template: kind,
        entries,
        best_bound,
        verdict,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, StochasticGraph};
    use crate::prob::Scalar;

    fn single(m: Matrix) -> SwitchedSystem {
        let g = StochasticGraph::new(1, vec!["s".into()], vec![EdgeSpec::new("s", "s", 1, Scalar::one())]).unwrap();
        SwitchedSystem::new(g, vec![m]).unwrap()
    }

    fn fast() -> BoundConfig {
        BoundConfig {
            copositive: CopositiveConfig {
                restarts: 4,
                iterations: 5_000,
                ..Default::default()
            },
            quadratic: QuadraticConfig {
                restarts: 4,
                max_evaluations: 5_000,
                ..Default::default()
            },
        }
    }

    #[test]
    fn copositive_check_is_tight_at_alpha() {
        let sys = single(Matrix::identity(2, 2) * 0.5);
        let t = Template::Copositive(CopositiveTemplate::new(vec![vec![1.0, 1.0]]).unwrap());
        let c = check_lmf(&sys, &t, 0.5).unwrap();
        assert!(c.margin.abs() < 1e-15);
        let c = check_lmf(&sys, &t, 0.4).unwrap();
        assert!((c.margin - (0.4f64 / 0.5).ln()).abs() < 1e-15);
        assert!(!c.holds());
    }

    #[test]
    fn copositive_check_rejects_negative_matrices() {
        let sys = single(Matrix::from_row_slice(2, 2, &[0.5, -0.1, 0.0, 0.5]));
        let t = Template::Copositive(CopositiveTemplate::new(vec![vec![1.0, 1.0]]).unwrap());
        assert!(matches!(check_lmf(&sys, &t, 1.0), Err(Error::NegativeEntries(_))));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let sys = single(Matrix::identity(3, 3));
        let t = Template::Copositive(CopositiveTemplate::new(vec![vec![1.0, 1.0]]).unwrap());
        assert!(matches!(check_lmf(&sys, &t, 1.0), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn scalar_systems_bound_exactly() {
        for alpha in [0.5, 1.3] {
            let sys = single(Matrix::identity(2, 2) * alpha);
            let c = copositive_bound(&sys, &fast().copositive).unwrap();
            assert!((c.rho - alpha).abs() < 1e-9, "{}", c.rho);
            let q = quadratic_bound(&sys, &fast().quadratic).unwrap();
            assert!((q.rho - alpha).abs() < 1e-9, "{}", q.rho);
            assert_eq!(q.status, CertificateStatus::Certified);
        }
    }

    #[test]
    fn nilpotent_quadratic_goes_below_half() {
        let sys = single(Matrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]));
        let q = quadratic_bound(&sys, &QuadraticConfig::default()).unwrap();
        assert!(q.rho <= 0.5, "{}", q.rho);
        assert!(verify_certificate(&sys, &q).unwrap().0);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let sys = single(Matrix::zeros(2, 2));
        let c = copositive_bound(&sys, &fast().copositive).unwrap();
        assert!(c.degenerate);
        assert!(c.rho > 0.0);
    }

    #[test]
    fn tampering_breaks_verification() {
        let sys = single(Matrix::from_row_slice(2, 2, &[0.5, 0.2, 0.1, 0.4]));
        let mut c = copositive_bound(&sys, &fast().copositive).unwrap();
        assert!(verify_certificate(&sys, &c).unwrap().0);
        c.rho *= 0.9;
        assert!(!verify_certificate(&sys, &c).unwrap().0);
        c.template = Template::Copositive(serde_json::from_str(r#"{"vectors":[[1.0,-1.0]]}"#).unwrap());
        assert!(matches!(verify_certificate(&sys, &c), Err(Error::NegativeEntries(_))));
        let mut c = copositive_bound(&sys, &fast().copositive).unwrap();
        c.lift = LiftKind::Path(1);
        assert!(verify_certificate(&sys, &c).is_ok());
        c.template = Template::Copositive(CopositiveTemplate::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        assert!(matches!(verify_certificate(&sys, &c), Err(Error::LiftMismatch(_))));
    }

    #[test]
    fn hierarchical_on_scalar_system() {
        let sys = single(Matrix::identity(2, 2) * 0.5);
        let strategy = LiftStrategy {
            steps: vec![1, 2],
            paths: vec![1],
        };
        for kind in [TemplateKind::Copositive, TemplateKind::Quadratic] {
            let report = hierarchical_bound(&sys, kind, &strategy, &fast()).unwrap();
            assert_eq!(report.entries.len(), 3);
            for e in &report.entries {
                assert!((e.adjusted_rho - 0.5).abs() < 1e-9);
            }
            assert_eq!(report.verdict, BoundVerdict::CertifiedStable);
            assert!(report.monotone);
        }
        let empty = hierarchical_bound(&sys, TemplateKind::Copositive, &LiftStrategy::default(), &fast()).unwrap();
        assert!(empty.entries.is_empty());
        assert_eq!(empty.best_bound, None);
        assert_eq!(empty.verdict, BoundVerdict::Inconclusive);
    }

    #[test]
    fn certificate_json_round_trip() {
        let sys = single(Matrix::identity(2, 2) * 0.5);
        let mut c = copositive_bound(&sys, &fast().copositive).unwrap();
        c.lift = LiftKind::Step(2);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#""lift":"step:2""#));
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
