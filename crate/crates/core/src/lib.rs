//! Tracking the minimizer of a temporally weighted streaming objective with
//! budgeted gradient descent.
//!
//! A stream of strongly convex, smooth per-sample losses `f_1, f_2, ...`
//! defines the objective `F_t(w) = sum_i a_i(t) f_i(w)` for a weighting rule
//! `a_i(t)`. After each new sample the tracker runs `E` fixed-step gradient
//! updates on `F_t`. [`theory`] evaluates the resulting tracking-error
//! envelopes and [`harness`] checks them against seeded Monte-Carlo runs.

pub mod error;
pub mod harness;
pub mod losses;
pub mod objective;
pub mod streamgen;
pub mod theory;
pub mod tracker;
pub mod weights;

pub use error::{Error, Result};
pub use harness::{
    bound_check, empirical_ate, run_experiment, run_experiment_with, AggregateTrace, BoundReport,
    Execution, ExperimentConfig, ExperimentResult, SeriesResult,
};
pub use losses::{LossConstants, QuadraticLoss, SampleLoss};
pub use objective::StreamingObjective;
pub use streamgen::{RandomWalk, RandomWalkConfig};
pub use theory::{BoundEnvelope, EnvelopeKind, TheoryParams};
pub use tracker::{TrackerConfig, TrackerState};
pub use weights::{RecursionCoefficients, WeightScheme};
