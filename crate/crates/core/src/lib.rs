//! Nonlinear Markov recombination on finite product spaces.
//!
//! Words `x ∈ X = ∏_i K_i` exchange the letters of a frame `I ⊆ Λ` with a
//! partner drawn from the current law of the process, at a rate scaled by a
//! symmetric similarity `φ_I`. The law `μ^t` then obeys a quadratic master
//! equation whose fixed points are exactly the measures under which every
//! frame is independent of its complement. This crate provides:
//!
//! * [`space`] and [`measure`]: product spaces, the word codec and dense measures;
//! * [`info`]: entropy and KL divergence;
//! * [`frames`]: frame systems, legends, the T0 property, quotients and separation checks;
//! * [`dynamics`] and [`integrate`]: the master equation, RK4 integration and
//!   convergence diagnostics;
//! * [`particles`]: the mean-field `N`-particle simulation;
//! * [`reach`]: closure of word sets under recombination.

pub mod dynamics;
pub mod error;
pub mod frames;
pub mod info;
pub mod integrate;
pub mod measure;
pub mod particles;
pub mod random;
pub mod reach;
pub mod space;

pub use dynamics::{entropy_decomposition, EntropyDecomposition, MasterEquation, RateQuery};
pub use error::{Error, Result};
pub use frames::{
    Frame, FrameSystem, Legend, Quotient, SeparationReport, SimilarityMatrix, T0Verdict,
};
pub use info::{entropy, kl_divergence};
pub use integrate::{
    entropy_trace_check, integrate, run_to_convergence, ConvergenceOptions, ConvergenceReport,
    IntegratorConfig, LimitTarget, TargetKind, TrajectoryRecord,
};
pub use measure::{DenseMeasure, MarginalTable};
pub use particles::{Event, EventLog, ParticleEnsemble};
pub use reach::{closure, recombine, Closure, RecombinationStep, WordSet};
pub use space::{ProductSpace, Word};
