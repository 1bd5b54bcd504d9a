//! Brute-force certification, independent of the fixpoint engine.
//!
//! [`oracle_kernel`] recomputes the set of retainable states from first
//! principles: for each candidate state it searches exhaustively for a
//! control procedure that keeps the process inside the target. It shares
//! only the instance model and the [`Quasistrategy`] value type with the
//! rest of the crate and never invokes the fixpoint engine, so agreement
//! between the two results certifies both implementations on any instance
//! small enough to enumerate.
//!
//! The search restricts each candidate set to trajectories that never leave
//! the target: a retaining procedure can only ever assign such trajectories,
//! and any non-anticipating assignment of them retains, so the restriction
//! is exact while cutting the search space sharply. The budget, however, is
//! charged against the unrestricted subset count, which bounds the work in
//! the worst case.
//!
//! [`is_decomposable`] settles a property of the disturbance set alone:
//! whether splicing any two admissible disturbances at any time yields an
//! admissible disturbance. Sets of constant disturbances are the canonical
//! counterexample.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::absorb::ExecMode;
use crate::model::{Bundle, DistId, Instance, State, StateSet, TimeIdx, TrajId};
use crate::strategy::Quasistrategy;
use crate::{Error, Result};

/// Default cap on the number of candidate assignments examined per state.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Whether the disturbance set is closed under splicing, with the first
/// counterexample when it is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposabilityReport {
    pub decomposable: bool,
    /// First failing triple in (omega1, omega2, t) order: splicing omega1
    /// (through t) with omega2 (after t) leaves the declared set.
    pub witness: Option<(DistId, DistId, TimeIdx)>,
}

/// The number of candidate assignments at `s` before any filtering: the
/// product over compatible disturbances of the subset count of each bundle.
pub fn enumeration_cost(inst: &Instance, s: &State) -> Result<u128> {
    let mut cost: u128 = 1;
    for nu in inst.compatible_disturbances(s)? {
        let n = inst.bundle(s.t, s.x, nu)?.len() as u32;
        let factor = 2u128.checked_pow(n).unwrap_or(u128::MAX);
        cost = cost.saturating_mul(factor);
    }
    Ok(cost)
}

/// All control procedures at `s`: every assignment of a nonempty subset of
/// the admitted trajectories per compatible disturbance that passes the
/// non-anticipation condition. Exhaustive, so guarded by `DEFAULT_BUDGET`.
pub fn enumerate_quasistrategies(inst: &Instance, s: &State) -> Result<Vec<Quasistrategy>> {
    enumerate_quasistrategies_with(inst, s, DEFAULT_BUDGET)
}

/// All control procedures at `s`, with an explicit budget.
pub fn enumerate_quasistrategies_with(
    inst: &Instance,
    s: &State,
    budget: u64,
) -> Result<Vec<Quasistrategy>> {
    let compatible: Vec<DistId> = inst.compatible_disturbances(s)?.into_iter().collect();
    charge_budget(inst, s, budget)?;
    let mut choices = Vec::with_capacity(compatible.len());
    for &nu in &compatible {
        let members: Vec<TrajId> = inst.bundle(s.t, s.x, nu)?.iter().copied().collect();
        choices.push((nu, nonempty_subsets(&members)));
    }
    let schedule = coincidence_schedule(inst, &compatible)?;
    let mut out = Vec::new();
    for_each_assignment(&choices, |mapping| {
        if anticipation_free(inst, &schedule, mapping) {
            out.push(Quasistrategy::from_parts(*s, mapping.clone()));
        }
        false
    });
    Ok(out)
}

/// The retainable states, certified by exhaustive search over the target.
pub fn oracle_kernel(inst: &Instance) -> Result<StateSet> {
    oracle_kernel_with(inst, DEFAULT_BUDGET, ExecMode::Sequential)
}

/// The retainable states, with explicit budget and scheduling.
pub fn oracle_kernel_with(inst: &Instance, budget: u64, mode: ExecMode) -> Result<StateSet> {
    oracle_kernel_from(inst, &inst.target_set()?, budget, mode)
}

/// The states of `n_set` from which some control procedure keeps the
/// process inside `n_set`; exhaustive search, no fixpoint machinery.
pub fn oracle_kernel_from(
    inst: &Instance,
    n_set: &StateSet,
    budget: u64,
    mode: ExecMode,
) -> Result<StateSet> {
    let decide = |s: &State| -> Result<Option<State>> {
        Ok(retainable(inst, n_set, s, budget)?.then_some(*s))
    };
    let decided: Vec<Option<State>> = match mode {
        ExecMode::Sequential => n_set.iter().map(decide).collect::<Result<_>>()?,
        ExecMode::Parallel => {
            let members: Vec<&State> = n_set.iter().collect();
            members.into_par_iter().map(decide).collect::<Result<_>>()?
        }
    };
    Ok(decided.into_iter().flatten().collect())
}

/// Is there a non-anticipating assignment at `s` whose every trajectory
/// stays inside `n_set` from `s.t` on?
fn retainable(inst: &Instance, n_set: &StateSet, s: &State, budget: u64) -> Result<bool> {
    let compatible: Vec<DistId> = inst.compatible_disturbances(s)?.into_iter().collect();
    charge_budget(inst, s, budget)?;

    let mut choices = Vec::with_capacity(compatible.len());
    for &nu in &compatible {
        let mut staying = Vec::new();
        for &h in inst.bundle(s.t, s.x, nu)? {
            let stays = inst
                .time()
                .from(s.t)
                .all(|tau| n_set.contains(&State::new(tau, inst.rep_unchecked(tau, h), nu)));
            if stays {
                staying.push(h);
            }
        }
        if staying.is_empty() {
            // Every procedure must assign this disturbance a nonempty set,
            // and nothing it could assign stays inside the target.
            return Ok(false);
        }
        choices.push((nu, nonempty_subsets(&staying)));
    }

    let schedule = coincidence_schedule(inst, &compatible)?;
    Ok(for_each_assignment(&choices, |mapping| {
        anticipation_free(inst, &schedule, mapping)
    }))
}

/// Splice two disturbances: values of `omega1` through grid index `t`
/// inclusive, values of `omega2` after it.
pub fn spliced_values(inst: &Instance, omega1: DistId, omega2: DistId, t: TimeIdx) -> Vec<usize> {
    let head = &inst.disturbances()[omega1.0].values()[..=t.0];
    let tail = &inst.disturbances()[omega2.0].values()[t.0 + 1..];
    head.iter().chain(tail.iter()).copied().collect()
}

/// Check closure of the disturbance set under splicing at every grid point,
/// scanning (omega1, omega2, t) in ascending order and reporting the first
/// escape.
pub fn is_decomposable(inst: &Instance) -> DecomposabilityReport {
    for omega1 in inst.disturbance_ids() {
        for omega2 in inst.disturbance_ids() {
            for t in inst.time().indices() {
                let spliced = spliced_values(inst, omega1, omega2, t);
                let declared = inst
                    .disturbances()
                    .iter()
                    .any(|d| d.values() == spliced.as_slice());
                if !declared {
                    return DecomposabilityReport {
                        decomposable: false,
                        witness: Some((omega1, omega2, t)),
                    };
                }
            }
        }
    }
    DecomposabilityReport { decomposable: true, witness: None }
}

fn charge_budget(inst: &Instance, s: &State, budget: u64) -> Result<()> {
    let required = enumeration_cost(inst, s)?;
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Every nonempty subset of `members`, in ascending bitmask order.
fn nonempty_subsets(members: &[TrajId]) -> Vec<Bundle> {
    let n = members.len();
    let mut subsets = Vec::with_capacity((1usize << n).saturating_sub(1));
    for mask in 1..(1u64 << n) {
        let subset: Bundle = members
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &h)| h)
            .collect();
        subsets.push(subset);
    }
    subsets
}

/// The disturbance pairs and grid points at which the initial-history
/// bundles are indistinguishable, i.e. where non-anticipation constrains an
/// assignment.
fn coincidence_schedule(
    inst: &Instance,
    compatible: &[DistId],
) -> Result<Vec<(DistId, DistId, TimeIdx)>> {
    let t0 = inst.time().t0();
    let x0 = inst.x0();
    let mut schedule = Vec::new();
    for (i, &nu1) in compatible.iter().enumerate() {
        for &nu2 in &compatible[i + 1..] {
            let b1 = inst.bundle(t0, x0, nu1)?;
            let b2 = inst.bundle(t0, x0, nu2)?;
            for tau in inst.time().indices() {
                if inst.prefix_set(b1.iter().copied(), tau)
                    == inst.prefix_set(b2.iter().copied(), tau)
                {
                    schedule.push((nu1, nu2, tau));
                }
            }
        }
    }
    Ok(schedule)
}

fn anticipation_free(
    inst: &Instance,
    schedule: &[(DistId, DistId, TimeIdx)],
    mapping: &BTreeMap<DistId, Bundle>,
) -> bool {
    schedule.iter().all(|&(nu1, nu2, tau)| {
        let v1 = &mapping[&nu1];
        let v2 = &mapping[&nu2];
        inst.prefix_set(v1.iter().copied(), tau) == inst.prefix_set(v2.iter().copied(), tau)
    })
}

/// Visit the cartesian product of the per-disturbance choices; `f` returns
/// true to stop early. Returns whether it stopped.
fn for_each_assignment(
    choices: &[(DistId, Vec<Bundle>)],
    mut f: impl FnMut(&BTreeMap<DistId, Bundle>) -> bool,
) -> bool {
    if choices.iter().any(|(_, subsets)| subsets.is_empty()) {
        return false;
    }
    let mut idx = vec![0usize; choices.len()];
    loop {
        let mapping: BTreeMap<DistId, Bundle> = choices
            .iter()
            .zip(&idx)
            .map(|((nu, subsets), &i)| (*nu, subsets[i].clone()))
            .collect();
        if f(&mapping) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return false;
            }
            idx[k] += 1;
            if idx[k] < choices[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorb::iterate_to_fixpoint;
    use crate::fixtures;
    use crate::strategy::check_quasistrategy;

    fn st(t: usize, x: usize, omega: usize) -> State {
        State::new(TimeIdx(t), TrajId(x), DistId(omega))
    }

    #[test]
    fn copycat_admits_exactly_one_procedure_per_anchor() {
        let inst = fixtures::copycat();

        let initial = enumerate_quasistrategies(&inst, &st(0, 0, 0)).unwrap();
        assert_eq!(initial.len(), 1);
        let only = &initial[0];
        assert_eq!(only.value(DistId(0)), [TrajId(0)].into_iter().collect());
        assert_eq!(only.value(DistId(1)), [TrajId(1)].into_iter().collect());

        let late = enumerate_quasistrategies(&inst, &st(1, 0, 0)).unwrap();
        assert_eq!(late.len(), 1);
        assert_eq!(late[0].mapping().len(), 1);
    }

    #[test]
    fn indistinguishable_bundles_force_identical_choices() {
        // Both disturbances admit the same continuations at every point, so
        // only the diagonal assignments survive: one per nonempty subset.
        let inst = fixtures::branching();
        let all = enumerate_quasistrategies(&inst, &st(0, 0, 0)).unwrap();
        assert_eq!(all.len(), 15);
        for qs in &all {
            assert_eq!(qs.value(DistId(0)), qs.value(DistId(1)));
        }
    }

    #[test]
    fn every_enumerated_procedure_passes_the_checker() {
        for (name, inst) in fixtures::all() {
            for s in &inst.target_set().unwrap() {
                for qs in enumerate_quasistrategies(&inst, s).unwrap() {
                    let report = check_quasistrategy(&inst, &qs).unwrap();
                    assert!(report.is_member(), "{name} at {s}: {:?}", report.violations());
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced_per_state() {
        let inst = fixtures::copycat();
        let err = enumerate_quasistrategies_with(&inst, &st(0, 0, 0), 1).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 4, budget: 1 }));
        let err = oracle_kernel_with(&inst, 1, ExecMode::Sequential).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn oracle_matches_the_fixpoint_on_all_fixtures() {
        for (name, inst) in fixtures::all() {
            let target = inst.target_set().unwrap();
            let fixpoint = iterate_to_fixpoint(&inst, &target).unwrap().kernel;
            let oracle = oracle_kernel(&inst).unwrap();
            assert_eq!(oracle, fixpoint, "{name}: oracle and fixpoint disagree");
        }
    }

    #[test]
    fn copycat_oracle_kernel_is_the_single_late_state() {
        let inst = fixtures::copycat();
        let expected: StateSet = [st(1, 0, 0)].into_iter().collect();
        assert_eq!(oracle_kernel(&inst).unwrap(), expected);
    }

    #[test]
    fn unconstrained_oracle_kernel_is_everything_reachable() {
        let inst = fixtures::copycat_unconstrained();
        assert_eq!(oracle_kernel(&inst).unwrap(), inst.reachable_states().unwrap());
    }

    #[test]
    fn empty_candidate_set_yields_an_empty_kernel() {
        let inst = fixtures::copycat();
        let empty = StateSet::new();
        let out =
            oracle_kernel_from(&inst, &empty, DEFAULT_BUDGET, ExecMode::Sequential).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn parallel_oracle_agrees_with_sequential() {
        for (name, inst) in fixtures::all() {
            let seq = oracle_kernel_with(&inst, DEFAULT_BUDGET, ExecMode::Sequential).unwrap();
            let par = oracle_kernel_with(&inst, DEFAULT_BUDGET, ExecMode::Parallel).unwrap();
            assert_eq!(seq, par, "{name}: oracle modes must agree");
        }
    }

    #[test]
    fn constant_disturbances_are_not_splice_closed() {
        let inst = fixtures::copycat();
        let report = is_decomposable(&inst);
        assert!(!report.decomposable);
        let (o1, o2, t) = report.witness.unwrap();
        assert_eq!((o1, o2, t), (DistId(0), DistId(1), TimeIdx(0)));
        // Re-splice the witness by hand and confirm it leaves the set.
        let spliced = spliced_values(&inst, o1, o2, t);
        assert_eq!(spliced, vec![0, 1]);
        assert!(inst.disturbances().iter().all(|d| d.values() != spliced.as_slice()));
    }

    #[test]
    fn full_function_space_is_splice_closed() {
        let report = is_decomposable(&fixtures::allmaps());
        assert!(report.decomposable);
        assert!(report.witness.is_none());
    }

    #[test]
    fn singleton_disturbance_sets_are_splice_closed() {
        let inst = fixtures::parse_str(
            r#"{
                "times": [0, 1], "t0": 0,
                "states": [0],
                "trajectories": [[0, 0]],
                "disturbance_values": [0, 1],
                "disturbances": [[1, 0]],
                "system": [
                    {"t": 0, "x": 0, "omega": 0, "bundle": [0]},
                    {"t": 1, "x": 0, "omega": 0, "bundle": [0]}
                ],
                "constraint": [{"t": 0, "x": 0}, {"t": 1, "x": 0}],
                "x0": 0
            }"#,
        );
        assert!(is_decomposable(&inst).decomposable);
    }
}
