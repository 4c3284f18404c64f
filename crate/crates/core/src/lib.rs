//! Desk-scale laboratory for short discrete logarithm recovery from a single
//! run of the quantum step, done entirely classically: the measurement
//! distribution is sampled exactly when the logarithm is known, the lattice
//! and meet-in-the-middle post-processing recovers it, and the bounds module
//! evaluates the proven success-probability and work bounds.

pub mod bounds;
pub mod distribution;
pub mod error;
pub mod group;
pub mod lattice;
pub mod numutil;
pub mod oracle;
pub mod postprocess;
pub mod simulator;

pub use bounds::BoundRow;
pub use error::{Error, Result};
pub use group::{GroupContext, GroupElement, InstanceKind, ProblemInstance};
pub use lattice::{LatticeSpec, ReducedBasis};
pub use postprocess::{RecoveryParams, RecoveryReport};
pub use simulator::{Sample, SampleOutcome, SimulatorConfig, TailPolicy};
