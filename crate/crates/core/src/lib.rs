//! Continual linear regression by exact projection.
//!
//! A learner holds a single weight vector and fits tasks `X_m w = y_m` one at
//! a time by projecting onto each task's solution space. This crate provides
//! the projection step, diagnostics (loss, distance, forgetting, regret),
//! ordering policies (random, greedy, hybrid), generators for random and
//! adversarial task collections, and brute-force/bound-checking oracles.
//!
//! ```
//! use ordlab_core::{gen_isotropic, run_policy, GreedyRule, OrderingPolicy, RunOptions};
//!
//! let g = gen_isotropic(20, 4, 10, 42).unwrap();
//! let run = run_policy(
//!     &g.collection,
//!     OrderingPolicy::greedy(GreedyRule::MaxDistance),
//!     RunOptions::steps(10),
//! )
//! .unwrap();
//! assert_eq!(run.state.step(), 10);
//! ```

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generators;
pub mod learner;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod orderings;
pub mod simulate;
pub mod task;

pub use nalgebra;

pub use error::{Error, Result};
pub use generators::{
    gen_adversarial_3d, gen_adversarial_highdim, gen_anisotropic, gen_isotropic, gen_rank_dminus1,
    xk_tilde,
};
pub use learner::{fit_task, LearnerState, StepRecord};
pub use linalg::FeatureMatrix;
pub use metrics::{avg_loss, distance_sq, forgetting, regret, MetricsRow};
pub use oracle::{BoundReport, Objective};
pub use orderings::{
    beta_min_threshold, md_score, mr_score, BetaMin, GreedyRule, HybridRule, HybridState,
    OrderingPolicy, Phase, Selector,
};
pub use simulate::{replay, run_policy, Run, RunOptions};
pub use task::{CollectionOptions, ProjectorCache, Task, TaskCollection};
