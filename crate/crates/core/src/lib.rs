//! Almost-sure stability certificates for switched linear systems whose
//! switching is driven by a stochastic graph.
//!
//! The toolkit bounds the probabilistic spectral radius `ρ₀` (equivalently the
//! top Lyapunov exponent `λ₀ = log ρ₀`) from above by synthesizing one
//! Lyapunov function per graph node, optionally on a lifted graph, and
//! cross-checks every bound against a Monte Carlo estimate of `λ₀`.
//!
//! Modules, bottom-up:
//!
//! * [`graph`]: stochastic graphs, invariant measures, cylinder measures.
//! * [`system`]: the switched system, word products, comparison radii.
//! * [`lift`]: K-step lifts and path lifts.
//! * [`certify`]: copositive and quadratic multi-function certificates.
//! * [`montecarlo`]: sampled switching paths and exponent estimates.
//! * [`report`]: JSON system descriptions, the certify pipeline, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod error;
pub mod graph;
pub mod lift;
pub mod montecarlo;
pub mod prob;
pub mod report;
pub mod system;
pub mod word;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeSpec, GraphPath, NodeDistribution, StochasticGraph};
pub use lift::{lift_distribution, path_lift, step_lift, LiftKind, PathLift, StepLift};
pub use prob::Scalar;
pub use system::{spectral_radius, Matrix, SwitchedSystem};
pub use word::LabelWord;
