//! Semantic validation of parsed instances.
//!
//! A parsed instance is structurally sound but may still describe an
//! impossible system. The validator checks every law the solver relies on
//! and reports each breach with a concrete witness instead of failing fast,
//! so a corrupted file yields a complete diagnosis in one run.
//!
//! Checked laws, by category:
//!
//! * [`Violation::MissingBundle`] — the system map must be total: one bundle
//!   for every (time, history class, disturbance).
//! * [`Violation::BundleConflict`] — entries declared through different
//!   members of the same history class must agree.
//! * [`Violation::EmptyBundle`] — every bundle is nonempty.
//! * [`Violation::HistoryMismatch`] — every bundle member continues the
//!   history it was declared for.
//! * [`Violation::RestartEscape`] — a bundle member, restarted from its own
//!   history at any later time under the same disturbance, is re-admitted.
//! * [`Violation::GraftEscape`] — if two disturbances are indistinguishable
//!   through a bundle up to some later time, continuations grafted at that
//!   time under one must already be admitted under the other.
//! * [`Violation::ConstraintNotClosed`] — the constraint cannot distinguish
//!   trajectories sharing the same history.
//! * [`Violation::InitialNotAllowed`] — the constraint admits the initial
//!   history.

use std::fmt;

use crate::model::{DistId, Instance, TimeIdx, TrajId};

/// One law breach with a concrete witness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// No bundle declared for (t, class of x, omega).
    MissingBundle { t: TimeIdx, x: TrajId, omega: DistId },
    /// Two different bundles declared for (t, class of x, omega).
    BundleConflict { t: TimeIdx, x: TrajId, omega: DistId },
    /// The bundle at (t, x, omega) is empty.
    EmptyBundle { t: TimeIdx, x: TrajId, omega: DistId },
    /// Bundle member h disagrees with x at some grid point <= t.
    HistoryMismatch { t: TimeIdx, x: TrajId, omega: DistId, h: TrajId },
    /// h is admitted at (t, x, omega) but not at (tau, h, omega), tau >= t.
    RestartEscape { t: TimeIdx, x: TrajId, omega: DistId, h: TrajId, tau: TimeIdx },
    /// Bundles of omega1/omega2 at (t, x) share prefixes up to tau, h is in
    /// the omega1 bundle, h2 continues h at tau under omega2, yet h2 is not
    /// in the omega2 bundle at (t, x).
    GraftEscape {
        t: TimeIdx,
        x: TrajId,
        omega1: DistId,
        omega2: DistId,
        tau: TimeIdx,
        h: TrajId,
        h2: TrajId,
    },
    /// (t, x) is allowed but its history-mate (t, peer) is not.
    ConstraintNotClosed { t: TimeIdx, x: TrajId, peer: TrajId },
    /// The constraint does not contain the initial history.
    InitialNotAllowed { t0: TimeIdx, x0: TrajId },
}

impl Violation {
    /// Stable machine-readable discriminant for reports and tests.
    pub fn category(&self) -> &'static str {
        match self {
            Violation::MissingBundle { .. } => "missing_bundle",
            Violation::BundleConflict { .. } => "bundle_conflict",
            Violation::EmptyBundle { .. } => "empty_bundle",
            Violation::HistoryMismatch { .. } => "history_mismatch",
            Violation::RestartEscape { .. } => "restart_escape",
            Violation::GraftEscape { .. } => "graft_escape",
            Violation::ConstraintNotClosed { .. } => "constraint_not_closed",
            Violation::InitialNotAllowed { .. } => "initial_not_allowed",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingBundle { t, x, omega } => write!(
                f,
                "no bundle declared for time index {t}, trajectory class of {x}, disturbance {omega}"
            ),
            Violation::BundleConflict { t, x, omega } => write!(
                f,
                "conflicting bundles declared for time index {t}, trajectory class of {x}, disturbance {omega}"
            ),
            Violation::EmptyBundle { t, x, omega } => write!(
                f,
                "empty bundle at time index {t}, trajectory class of {x}, disturbance {omega}"
            ),
            Violation::HistoryMismatch { t, x, omega, h } => write!(
                f,
                "bundle member {h} disagrees with the history of {x} at or before time index {t} (disturbance {omega})"
            ),
            Violation::RestartEscape { t, x, omega, h, tau } => write!(
                f,
                "trajectory {h} admitted at time index {t} (history {x}, disturbance {omega}) is not re-admitted from its own history at time index {tau}"
            ),
            Violation::GraftEscape { t, x, omega1, omega2, tau, h, h2 } => write!(
                f,
                "disturbances {omega1} and {omega2} agree through the bundle of {x} up to time index {tau}, but grafting {h2} onto {h} at {tau} escapes the bundle at time index {t}"
            ),
            Violation::ConstraintNotClosed { t, x, peer } => write!(
                f,
                "constraint allows (time index {t}, trajectory {x}) but not trajectory {peer}, which has the same history"
            ),
            Violation::InitialNotAllowed { t0, x0 } => write!(
                f,
                "constraint does not contain the initial history (time index {t0}, trajectory {x0})"
            ),
        }
    }
}

/// Outcome of [`validate_axioms`]: valid iff no violations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// The distinct categories present, in first-appearance order.
    pub fn categories(&self) -> Vec<&'static str> {
        let mut seen = Vec::new();
        for v in &self.violations {
            let c = v.category();
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen
    }

    pub fn contains_category(&self, category: &str) -> bool {
        self.violations.iter().any(|v| v.category() == category)
    }
}

/// Check every semantic law of a parsed instance, exhaustively.
///
/// Never fails: breaches become report entries. Laws that presuppose an
/// intact system map (member, restart, and graft checks) are evaluated only
/// on keys whose bundle is present, unique, and nonempty; the prerequisite
/// breach is reported for the rest.
pub fn validate_axioms(inst: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    check_map_shape(inst, &mut violations);
    check_member_histories(inst, &mut violations);
    check_restarts(inst, &mut violations);
    check_grafts(inst, &mut violations);
    check_constraint(inst, &mut violations);
    ValidationReport { violations }
}

/// Totality over (t, class, omega), uniqueness, nonemptiness.
fn check_map_shape(inst: &Instance, out: &mut Vec<Violation>) {
    for t in inst.time().indices() {
        for x in inst.class_reps(t) {
            for omega in inst.disturbance_ids() {
                match inst.system().variants(t, x, omega) {
                    None => out.push(Violation::MissingBundle { t, x, omega }),
                    Some(vs) if vs.len() > 1 => {
                        out.push(Violation::BundleConflict { t, x, omega })
                    }
                    Some(vs) => {
                        if vs.iter().next().expect("nonempty variant set").is_empty() {
                            out.push(Violation::EmptyBundle { t, x, omega });
                        }
                    }
                }
            }
        }
    }
}

/// Every bundle member must continue the history it is declared for.
fn check_member_histories(inst: &Instance, out: &mut Vec<Violation>) {
    for_each_intact_bundle(inst, |t, x, omega, bundle| {
        for &h in bundle {
            if inst.prefix(h, t) != inst.prefix(x, t) {
                out.push(Violation::HistoryMismatch { t, x, omega, h });
            }
        }
    });
}

/// A member admitted at t must stay admitted from its own history later on.
fn check_restarts(inst: &Instance, out: &mut Vec<Violation>) {
    for_each_intact_bundle(inst, |t, x, omega, bundle| {
        for &h in bundle {
            for tau in inst.time().from(t) {
                let rep = inst.rep_unchecked(tau, h);
                if let Ok(later) = inst.system().get(tau, rep, omega) {
                    if !later.contains(&h) {
                        out.push(Violation::RestartEscape { t, x, omega, h, tau });
                    }
                }
            }
        }
    });
}

/// Continuations grafted at a time where two disturbances are still
/// indistinguishable must already be admitted under the other disturbance.
fn check_grafts(inst: &Instance, out: &mut Vec<Violation>) {
    for t in inst.time().indices() {
        for x in inst.class_reps(t) {
            for omega1 in inst.disturbance_ids() {
                let Ok(b1) = inst.system().get(t, x, omega1) else { continue };
                for omega2 in inst.disturbance_ids() {
                    let Ok(b2) = inst.system().get(t, x, omega2) else { continue };
                    for tau in inst.time().from(t) {
                        let p1 = inst.prefix_set(b1.iter().copied(), tau);
                        let p2 = inst.prefix_set(b2.iter().copied(), tau);
                        if p1 != p2 {
                            continue;
                        }
                        for &h in b1 {
                            let rep = inst.rep_unchecked(tau, h);
                            let Ok(grafts) = inst.system().get(tau, rep, omega2) else {
                                continue;
                            };
                            for &h2 in grafts {
                                if !b2.contains(&h2) {
                                    out.push(Violation::GraftEscape {
                                        t,
                                        x,
                                        omega1,
                                        omega2,
                                        tau,
                                        h,
                                        h2,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Prefix closure of the constraint, and membership of the initial history.
fn check_constraint(inst: &Instance, out: &mut Vec<Violation>) {
    for &(t, x) in inst.constraint().iter() {
        for peer in inst.trajectory_ids() {
            if inst.prefix(peer, t) == inst.prefix(x, t) && !inst.constraint().contains(t, peer)
            {
                out.push(Violation::ConstraintNotClosed { t, x, peer });
            }
        }
    }
    let t0 = inst.time().t0();
    if !inst.constraint().contains(t0, inst.x0()) {
        out.push(Violation::InitialNotAllowed { t0, x0: inst.x0() });
    }
}

/// Visit every key whose bundle is present, unique, and nonempty.
fn for_each_intact_bundle(
    inst: &Instance,
    mut f: impl FnMut(TimeIdx, TrajId, DistId, &crate::model::Bundle),
) {
    for (&(t, x, omega), variants) in inst.system().iter() {
        if variants.len() == 1 {
            let bundle = variants.iter().next().expect("nonempty variant set");
            if !bundle.is_empty() {
                f(t, x, omega, bundle);
            }
        }
    }
}
