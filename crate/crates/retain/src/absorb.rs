//! The absorption operator and its fixpoint iteration.
//!
//! Given a state set `H`, one absorption pass keeps exactly the states at
//! which, for every compatible disturbance, some admitted trajectory stays
//! inside `H` at all future grid points. Iterating the pass from the target
//! set shrinks it monotonically; the stable set it reaches is the kernel:
//! the states from which retention inside the target is enforceable.
//!
//! The pass is a pure function of (instance, H), so evaluation order cannot
//! change the result; [`ExecMode::Parallel`] fans the per-state work out via
//! rayon and must agree with [`ExecMode::Sequential`] bit for bit.

use rayon::prelude::*;

use crate::model::{Bundle, DistId, Instance, State, StateSet};
use crate::{Error, Result};

/// How set-level passes schedule their per-state work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExecMode {
    #[default]
    Sequential,
    Parallel,
}

/// Kernel computation outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelResult {
    /// The stable set, canonicalized.
    pub kernel: StateSet,
    /// Raw state-count after each pass; entry 0 is the input set, counted
    /// over whole history classes (one per (time, trajectory, disturbance)
    /// triple, not one per class).
    pub trace: Vec<usize>,
    /// Number of absorption passes applied, including the final confirming
    /// pass.
    pub iterations: usize,
    /// True when the last pass returned its input unchanged.
    pub stable: bool,
}

/// The trajectories admitted at `s` under disturbance `nu` that stay inside
/// `H` at every grid point from `s.t` on. May be empty.
///
/// `nu` must be compatible with `s`; `H` should hold canonical states, as
/// produced by the derived-set constructors.
pub fn program_bundle(inst: &Instance, h_set: &StateSet, s: &State, nu: DistId) -> Result<Bundle> {
    if !inst.compatible_disturbances(s)?.contains(&nu) {
        return Err(Error::Incompatible { state: *s, nu: nu.0 });
    }
    let candidates = inst.bundle(s.t, s.x, nu)?;
    let mut kept = Bundle::new();
    for &h in candidates {
        let stays = inst
            .time()
            .from(s.t)
            .all(|tau| h_set.contains(&State::new(tau, inst.rep_unchecked(tau, h), nu)));
        if stays {
            kept.insert(h);
        }
    }
    Ok(kept)
}

/// One absorption pass over `H`, sequential.
pub fn absorb(inst: &Instance, h_set: &StateSet) -> Result<StateSet> {
    absorb_with(inst, h_set, ExecMode::Sequential)
}

/// One absorption pass over `H`.
///
/// Keeps `s` iff `program_bundle(inst, H, s, nu)` is nonempty for every
/// compatible `nu`. Errors if `H` contains a state outside the reachable
/// set.
pub fn absorb_with(inst: &Instance, h_set: &StateSet, mode: ExecMode) -> Result<StateSet> {
    let keep = |s: &State| -> Result<Option<State>> {
        for nu in inst.compatible_disturbances(s)? {
            if program_bundle(inst, h_set, s, nu)?.is_empty() {
                return Ok(None);
            }
        }
        Ok(Some(*s))
    };
    let kept: Vec<Option<State>> = match mode {
        ExecMode::Sequential => h_set.iter().map(keep).collect::<Result<_>>()?,
        ExecMode::Parallel => {
            let members: Vec<&State> = h_set.iter().collect();
            members.into_par_iter().map(keep).collect::<Result<_>>()?
        }
    };
    Ok(kept.into_iter().flatten().collect())
}

/// Iterate absorption passes from `N` until the set stops changing,
/// sequentially.
pub fn iterate_to_fixpoint(inst: &Instance, n_set: &StateSet) -> Result<KernelResult> {
    iterate_to_fixpoint_with(inst, n_set, ExecMode::Sequential)
}

/// Iterate absorption passes from `N` until the set stops changing.
///
/// Each pass either strictly shrinks the set or confirms stability, so at
/// most `|N| + 1` passes can ever run; a guard faults past that bound
/// because only a broken pass could reach it.
pub fn iterate_to_fixpoint_with(
    inst: &Instance,
    n_set: &StateSet,
    mode: ExecMode,
) -> Result<KernelResult> {
    let limit = n_set.len() + 1;
    let mut current = n_set.clone();
    let mut trace = vec![current.expanded_len(inst)];
    let mut iterations = 0;
    loop {
        if iterations >= limit {
            return Err(Error::Unstable { limit });
        }
        let next = absorb_with(inst, &current, mode)?;
        iterations += 1;
        trace.push(next.expanded_len(inst));
        if next == current {
            return Ok(KernelResult { kernel: next, trace, iterations, stable: true });
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{TimeIdx, TrajId};

    fn st(t: usize, x: usize, omega: usize) -> State {
        State::new(TimeIdx(t), TrajId(x), DistId(omega))
    }

    fn ids(bundle: &Bundle) -> Vec<usize> {
        bundle.iter().map(|h| h.0).collect()
    }

    #[test]
    fn program_bundle_filters_by_future_membership() {
        let inst = fixtures::copycat();
        let target = inst.target_set().unwrap();
        // Under the second disturbance the only admitted continuation ends
        // at value 1, which the target excludes.
        let escape = program_bundle(&inst, &target, &st(0, 0, 0), DistId(1)).unwrap();
        assert!(escape.is_empty());
        // Under the first it stays at 0 throughout.
        let stays = program_bundle(&inst, &target, &st(0, 0, 0), DistId(0)).unwrap();
        assert_eq!(ids(&stays), vec![0]);
    }

    #[test]
    fn program_bundle_over_the_empty_set_is_empty() {
        let inst = fixtures::copycat();
        let empty = StateSet::new();
        for s in &inst.reachable_states().unwrap() {
            let kept = program_bundle(&inst, &empty, s, s.omega).unwrap();
            assert!(kept.is_empty());
        }
    }

    #[test]
    fn program_bundle_rejects_incompatible_disturbances() {
        let inst = fixtures::copycat();
        let target = inst.target_set().unwrap();
        // At time 1 the two disturbances are already distinguishable.
        let err = program_bundle(&inst, &target, &st(1, 0, 0), DistId(1)).unwrap_err();
        assert!(matches!(err, Error::Incompatible { .. }));
    }

    #[test]
    fn absorb_keeps_only_defensible_states() {
        let inst = fixtures::copycat();
        let target = inst.target_set().unwrap();
        let kept = absorb(&inst, &target).unwrap();
        let expected: StateSet = [st(1, 0, 0)].into_iter().collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn absorb_of_empty_is_empty() {
        let inst = fixtures::copycat();
        assert!(absorb(&inst, &StateSet::new()).unwrap().is_empty());
    }

    #[test]
    fn absorb_fixes_the_reachable_set_when_nothing_is_forbidden() {
        let inst = fixtures::copycat_unconstrained();
        let sysp = inst.reachable_states().unwrap();
        assert_eq!(absorb(&inst, &sysp).unwrap(), sysp);
    }

    #[test]
    fn absorb_rejects_unreachable_members() {
        let inst = fixtures::copycat();
        let mut bad = StateSet::new();
        bad.insert(st(1, 2, 0));
        assert!(matches!(absorb(&inst, &bad), Err(Error::Unreachable(_))));
    }

    #[test]
    fn copycat_kernel_trace_and_count() {
        let inst = fixtures::copycat();
        let result = iterate_to_fixpoint(&inst, &inst.target_set().unwrap()).unwrap();
        let expected: StateSet = [st(1, 0, 0)].into_iter().collect();
        assert_eq!(result.kernel, expected);
        assert_eq!(result.trace, vec![5, 1, 1]);
        assert_eq!(result.iterations, 2);
        assert!(result.stable);
    }

    #[test]
    fn unconstrained_copycat_is_already_stable() {
        let inst = fixtures::copycat_unconstrained();
        let result = iterate_to_fixpoint(&inst, &inst.target_set().unwrap()).unwrap();
        assert_eq!(result.kernel, inst.reachable_states().unwrap());
        assert_eq!(result.trace, vec![6, 6]);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn empty_start_is_a_fixpoint() {
        let inst = fixtures::copycat();
        let result = iterate_to_fixpoint(&inst, &StateSet::new()).unwrap();
        assert!(result.kernel.is_empty());
        assert_eq!(result.trace, vec![0, 0]);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn passes_contract_and_traces_decrease() {
        for (name, inst) in fixtures::all() {
            let target = inst.target_set().unwrap();
            let once = absorb(&inst, &target).unwrap();
            assert!(once.is_subset(&target), "{name}: pass must contract");
            let result = iterate_to_fixpoint(&inst, &target).unwrap();
            assert!(
                result.trace.windows(2).all(|w| w[0] >= w[1]),
                "{name}: trace must be non-increasing"
            );
            assert!(result.iterations <= target.len() + 1, "{name}: pass bound");
            let confirm = absorb(&inst, &result.kernel).unwrap();
            assert_eq!(confirm, result.kernel, "{name}: kernel must be a fixpoint");
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        for (name, inst) in fixtures::all() {
            let target = inst.target_set().unwrap();
            let seq = iterate_to_fixpoint_with(&inst, &target, ExecMode::Sequential).unwrap();
            let par = iterate_to_fixpoint_with(&inst, &target, ExecMode::Parallel).unwrap();
            assert_eq!(seq, par, "{name}: execution modes must agree");
        }
    }
}
