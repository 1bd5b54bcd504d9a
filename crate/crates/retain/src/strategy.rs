//! Control procedures built on the kernel, and their verification.
//!
//! A [`Quasistrategy`] anchored at a state assigns to every disturbance
//! compatible with that state a nonempty set of admitted trajectories, and
//! may not react to information it cannot yet have: whenever two
//! disturbances are indistinguishable through the initial bundles up to some
//! time, the assigned trajectory sets must be indistinguishable up to that
//! time as well.
//!
//! [`build_quasistrategy`] extracts the canonical such procedure from a
//! stable kernel; [`check_quasistrategy`] verifies any candidate against the
//! three defining conditions and returns concrete witnesses for breaches;
//! [`check_retention`] tests whether a procedure actually keeps the process
//! inside a given set; [`solvable`] renders the overall verdict for the
//! initial history.

use std::collections::BTreeMap;
use std::fmt;

use crate::absorb::{program_bundle, KernelResult};
use crate::model::{Bundle, DistId, Instance, State, StateSet, TimeIdx, TrajId};
use crate::{Error, Result};

/// A multivalued control procedure anchored at one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quasistrategy {
    anchor: State,
    mapping: BTreeMap<DistId, Bundle>,
}

impl Quasistrategy {
    /// Assemble a procedure from explicit parts. No conditions are checked
    /// here; run [`check_quasistrategy`] to vet the result.
    pub fn from_parts(anchor: State, mapping: BTreeMap<DistId, Bundle>) -> Self {
        Quasistrategy { anchor, mapping }
    }

    pub fn anchor(&self) -> &State {
        &self.anchor
    }

    pub fn mapping(&self) -> &BTreeMap<DistId, Bundle> {
        &self.mapping
    }

    /// The trajectories assigned to `nu`; empty if `nu` is unmapped.
    pub fn value(&self, nu: DistId) -> Bundle {
        self.mapping.get(&nu).cloned().unwrap_or_default()
    }
}

/// One breach of the quasistrategy conditions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MembershipViolation {
    /// The value for `nu` is empty or missing.
    EmptyValue { nu: DistId },
    /// The value for `nu` contains `h`, which the system does not admit at
    /// the anchor under `nu`.
    ValueEscape { nu: DistId, h: TrajId },
    /// `nu1` and `nu2` are indistinguishable up to `tau`, but the assigned
    /// sets differ there.
    Anticipation { nu1: DistId, nu2: DistId, tau: TimeIdx },
}

impl fmt::Display for MembershipViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipViolation::EmptyValue { nu } => {
                write!(f, "no trajectory assigned to disturbance {nu}")
            }
            MembershipViolation::ValueEscape { nu, h } => write!(
                f,
                "assigned trajectory {h} is not admitted under disturbance {nu} at the anchor"
            ),
            MembershipViolation::Anticipation { nu1, nu2, tau } => write!(
                f,
                "disturbances {nu1} and {nu2} are indistinguishable up to time index {tau}, but the assigned sets differ there"
            ),
        }
    }
}

/// Verdict of [`check_quasistrategy`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MembershipReport {
    violations: Vec<MembershipViolation>,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[MembershipViolation] {
        &self.violations
    }
}

/// Outcome for the initial history: either some initial-time state lies in
/// the kernel and the extracted procedure witnesses it, or none does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Solvable { omega0: DistId, strategy: Quasistrategy },
    Unsolvable,
}

impl Verdict {
    pub fn is_solvable(&self) -> bool {
        matches!(self, Verdict::Solvable { .. })
    }
}

/// Extract the kernel-induced procedure at `s`: each compatible disturbance
/// is assigned the admitted trajectories that stay inside the kernel.
///
/// `s` must lie in `kernel` and `kernel` must be a stable fixpoint; that is
/// exactly what guarantees every assigned set is nonempty.
pub fn build_quasistrategy(
    inst: &Instance,
    kernel: &StateSet,
    s: &State,
) -> Result<Quasistrategy> {
    if !kernel.contains(s) {
        return Err(Error::NotInKernel(*s));
    }
    let mut mapping = BTreeMap::new();
    for nu in inst.compatible_disturbances(s)? {
        mapping.insert(nu, program_bundle(inst, kernel, s, nu)?);
    }
    Ok(Quasistrategy { anchor: *s, mapping })
}

/// Verify the three quasistrategy conditions, collecting every breach.
///
/// The domain of record is the anchor's compatible-disturbance set:
/// unmapped compatible disturbances count as empty values, and mapped keys
/// outside that set are ignored. Anticipation is checked for every
/// disturbance pair at every grid point, with indistinguishability taken
/// through the prefixes of the initial-history bundles.
pub fn check_quasistrategy(inst: &Instance, qs: &Quasistrategy) -> Result<MembershipReport> {
    let anchor = qs.anchor();
    let compatible = inst.compatible_disturbances(anchor)?;
    let mut violations = Vec::new();

    for &nu in &compatible {
        let value = qs.value(nu);
        if value.is_empty() {
            violations.push(MembershipViolation::EmptyValue { nu });
            continue;
        }
        let admitted = inst.bundle(anchor.t, anchor.x, nu)?;
        for &h in &value {
            if !admitted.contains(&h) {
                violations.push(MembershipViolation::ValueEscape { nu, h });
            }
        }
    }

    let t0 = inst.time().t0();
    let x0 = inst.x0();
    for &nu1 in &compatible {
        for &nu2 in &compatible {
            if nu2 <= nu1 {
                continue;
            }
            let b1 = inst.bundle(t0, x0, nu1)?;
            let b2 = inst.bundle(t0, x0, nu2)?;
            for tau in inst.time().indices() {
                if inst.prefix_set(b1.iter().copied(), tau)
                    != inst.prefix_set(b2.iter().copied(), tau)
                {
                    continue;
                }
                let v1 = qs.value(nu1);
                let v2 = qs.value(nu2);
                if inst.prefix_set(v1.iter().copied(), tau)
                    != inst.prefix_set(v2.iter().copied(), tau)
                {
                    violations.push(MembershipViolation::Anticipation { nu1, nu2, tau });
                }
            }
        }
    }

    Ok(MembershipReport { violations })
}

/// Does the procedure keep the process inside `N`? True iff every assigned
/// trajectory, under its disturbance, lies in `N` at every grid point from
/// the anchor time on.
pub fn check_retention(inst: &Instance, qs: &Quasistrategy, n_set: &StateSet) -> Result<bool> {
    let anchor = qs.anchor();
    for nu in inst.compatible_disturbances(anchor)? {
        for h in qs.value(nu) {
            for tau in inst.time().from(anchor.t) {
                let state = State::new(tau, inst.canonical_rep(tau, h)?, nu);
                if !n_set.contains(&state) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Decide solvability for the initial history: scan disturbances in index
/// order for an initial-time state inside the kernel and extract the
/// procedure at the first hit. The lowest index wins so reruns are
/// reproducible.
pub fn solvable(inst: &Instance, kr: &KernelResult) -> Result<Verdict> {
    let t0 = inst.time().t0();
    for omega in inst.disturbance_ids() {
        let s0 = inst.canonical_state(t0, inst.x0(), omega)?;
        if kr.kernel.contains(&s0) {
            let strategy = build_quasistrategy(inst, &kr.kernel, &s0)?;
            return Ok(Verdict::Solvable { omega0: omega, strategy });
        }
    }
    Ok(Verdict::Unsolvable)
}
