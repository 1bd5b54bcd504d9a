//! Small embedded instances used throughout the test suites and docs.
//!
//! All four are hand-checked valid instances:
//!
//! * `copycat` — two-point grid; the next value copies the disturbance;
//!   two constant disturbances; the constraint keeps value 0. The smallest
//!   instance with a non-splice-closed disturbance set and a nontrivial
//!   kernel.
//! * `copycat_unconstrained` — same dynamics with an all-permissive
//!   constraint, so everything reachable is retained.
//! * `branching` — three-point grid; every continuation of the current
//!   history is admitted regardless of the disturbance, so control has real
//!   choices and non-anticipation bites.
//! * `allmaps` — copy dynamics where every disturbance sequence is
//!   admissible; the canonical splice-closed disturbance set.

use crate::model::Instance;
use crate::parse::parse_instance;

pub const COPYCAT_JSON: &str = include_str!("../fixtures/copycat.json");
pub const COPYCAT_UNCONSTRAINED_JSON: &str =
    include_str!("../fixtures/copycat_unconstrained.json");
pub const BRANCHING_JSON: &str = include_str!("../fixtures/branching.json");
pub const ALLMAPS_JSON: &str = include_str!("../fixtures/allmaps.json");

/// Parse embedded or test-local instance text, panicking on failure.
/// Intended for fixtures and tests, where malformed input is a bug.
pub fn parse_str(text: &str) -> Instance {
    parse_instance(text).expect("fixture text must parse")
}

pub fn copycat() -> Instance {
    parse_str(COPYCAT_JSON)
}

pub fn copycat_unconstrained() -> Instance {
    parse_str(COPYCAT_UNCONSTRAINED_JSON)
}

pub fn branching() -> Instance {
    parse_str(BRANCHING_JSON)
}

pub fn allmaps() -> Instance {
    parse_str(ALLMAPS_JSON)
}

/// Every embedded fixture with its name, for sweep-style tests.
pub fn all() -> Vec<(&'static str, Instance)> {
    vec![
        ("copycat", copycat()),
        ("copycat_unconstrained", copycat_unconstrained()),
        ("branching", branching()),
        ("allmaps", allmaps()),
    ]
}
