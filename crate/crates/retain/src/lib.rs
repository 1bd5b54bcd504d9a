//! Solver for retention problems over finite disturbed dynamical systems.
//!
//! An instance describes a finite time grid, a finite trajectory set, a
//! finite set of admissible disturbances, a system map assigning to every
//! (time, history, disturbance) the nonempty bundle of trajectories still
//! possible, and a constraint naming the allowed (time, history) pairs. The
//! retention question: from which states can a controller — choosing, for
//! each disturbance it cannot yet distinguish, a nonempty set of admitted
//! continuations without reacting to information it does not have — keep
//! the process inside the constraint at every future time?
//!
//! No structure is assumed on the disturbance set. In particular it need
//! not be closed under splicing two admissible disturbances at a time point
//! (constant disturbances are the standard example of such a set), which is
//! what breaks the classical stepwise constructions and motivates solving
//! by operator iteration instead.
//!
//! The crate is organized around one central cross-check:
//!
//! * [`absorb`] computes the kernel by iterating an absorption pass that
//!   discards states some disturbance can force out of the target.
//! * [`oracle`] recomputes the same set by exhaustive search over all
//!   control procedures, sharing no code with the fixpoint engine.
//!
//! Agreement of the two on a corpus of instances is the strongest evidence
//! the implementation offers, and the `verify` CLI command runs exactly
//! that comparison. [`model`] holds the instance encoding and derived sets,
//! [`parse`] and [`validate`] the file format and its laws, [`strategy`]
//! the control procedures extracted from kernels, and [`report`] the CLI
//! engine.
//!
//! All public computations are pure functions over immutable instances;
//! parallel evaluation modes must produce bit-identical results to
//! sequential ones.

pub mod absorb;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod report;
pub mod strategy;
pub mod validate;

use thiserror::Error;

pub use absorb::{
    absorb, absorb_with, iterate_to_fixpoint, iterate_to_fixpoint_with, program_bundle, ExecMode,
    KernelResult,
};
pub use model::{DistId, Instance, State, StateSet, TimeIdx, TrajId};
pub use oracle::{
    enumerate_quasistrategies, is_decomposable, oracle_kernel, DecomposabilityReport,
    DEFAULT_BUDGET,
};
pub use parse::{parse_instance, parse_instance_with, ParseError, ParseOptions};
pub use strategy::{
    build_quasistrategy, check_quasistrategy, check_retention, solvable, MembershipReport,
    Quasistrategy, Verdict,
};
pub use validate::{validate_axioms, ValidationReport, Violation};

/// Faults raised by computations on parsed instances.
///
/// Validation breaches are not errors — [`validate::validate_axioms`]
/// reports them as data. Errors here mean a caller broke a precondition
/// (out-of-range id, unreachable state, incompatible disturbance, state
/// outside the kernel), a computation was refused (budget), or an internal
/// guarantee failed (missing or conflicting bundle on a supposedly valid
/// instance, unstable iteration).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Error {
    #[error("time index {t} out of range (grid has {len} points)")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("trajectory id {x} out of range ({len} declared)")]
    UnknownTrajectory { x: usize, len: usize },
    #[error("disturbance id {omega} out of range ({len} declared)")]
    UnknownDisturbance { omega: usize, len: usize },
    #[error("no bundle for time index {t}, trajectory class of {x}, disturbance {omega}")]
    MissingBundle { t: usize, x: usize, omega: usize },
    #[error("conflicting bundles for time index {t}, trajectory class of {x}, disturbance {omega}")]
    ConflictingBundle { t: usize, x: usize, omega: usize },
    #[error("state {0} is not reachable from the initial history")]
    Unreachable(State),
    #[error("disturbance {nu} is not compatible with state {state}")]
    Incompatible { state: State, nu: usize },
    #[error("state {0} is not in the kernel")]
    NotInKernel(State),
    #[error("certification needs {required} candidate assignments, budget allows {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("absorption failed to stabilize within {limit} passes")]
    Unstable { limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
