//! fairscm: a toolkit for comparing counterfactual-fairness and
//! demographic-parity predictors over structural causal models.
//!
//! The crate covers the full pipeline:
//!
//! - [`scm`]: typed causal DAGs with generalized-linear governing equations,
//!   validation, seeded sampling, exact enumeration, and do-interventions.
//! - [`latent`]: closed-form Gaussian latent-factor inference with EM.
//! - [`estimators`]: six predictors (three counterfactual-fairness levels,
//!   two demographic-parity transforms, one unconstrained baseline) plus the
//!   wrapper that makes any demographic-parity predictor counterfactually
//!   fair.
//! - [`metrics`]: Kruskal-Wallis tests, approximate counterfactual fairness,
//!   rMSE, and within-group order preservation.
//! - [`counterexample`]: exact verification that counterfactual fairness can
//!   invert within-group orderings.
//! - [`harness`]: the config-driven experiment pipeline and report emitters.
//! - [`configs`]: three shipped example models.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `fairscm` binary exposes the same pipeline as subcommands.

pub mod configs;
pub mod counterexample;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod latent;
pub mod linear;
pub mod metrics;
pub mod scm;
pub mod special;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, EstimatorSpec, Predictor};
pub use harness::{ExperimentConfig, FairnessReport};
pub use latent::{LatentModelParams, LatentPosterior};
pub use metrics::{AcfResult, KwResult, OrderReport};
pub use scm::{Family, Link, NodeRole, NodeSpec, StructuralModel};
