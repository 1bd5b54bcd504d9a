//! Finite encoding of an abstract disturbed dynamical system.
//!
//! An instance consists of a time grid, a trajectory alphabet and a finite
//! trajectory set, a disturbance alphabet and a finite disturbance set, an
//! extensional system map, a constraint set, and an initial history. The
//! system map assigns to every triple (time, trajectory prefix, disturbance)
//! the bundle of full trajectories consistent with that history under that
//! disturbance.
//!
//! Two trajectories that agree at every grid point up to `t` are
//! indistinguishable at `t`; the quotient is the prefix class. All derived
//! state sets store one canonical representative per class (the smallest
//! trajectory id), so equality of [`State`] values is prefix-class equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Integer time label; only the ordering of labels matters.
pub type TimeLabel = i64;

/// Index into the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeIdx(pub usize);

/// Identifier of a declared trajectory (its position in the instance file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrajId(pub usize);

/// Identifier of a declared disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistId(pub usize);

impl fmt::Display for TimeIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TrajId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DistId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A value of the state or disturbance alphabet as written in instance files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Text(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Strictly increasing finite sequence of time labels, with the position of
/// the initial time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeGrid {
    points: Vec<TimeLabel>,
    t0: TimeIdx,
}

impl TimeGrid {
    /// Invariants (nonempty, strictly increasing, t0 in range) are enforced
    /// by the parser.
    pub(crate) fn new(points: Vec<TimeLabel>, t0: TimeIdx) -> Self {
        debug_assert!(!points.is_empty());
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(t0.0 < points.len());
        TimeGrid { points, t0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[TimeLabel] {
        &self.points
    }

    pub fn t0(&self) -> TimeIdx {
        self.t0
    }

    pub fn label(&self, t: TimeIdx) -> TimeLabel {
        self.points[t.0]
    }

    pub fn index_of(&self, label: TimeLabel) -> Option<TimeIdx> {
        self.points.binary_search(&label).ok().map(TimeIdx)
    }

    /// All grid indices in order.
    pub fn indices(&self) -> impl Iterator<Item = TimeIdx> {
        (0..self.points.len()).map(TimeIdx)
    }

    /// Grid indices at or after `t` (the future horizon of `t`).
    pub fn from(&self, t: TimeIdx) -> impl Iterator<Item = TimeIdx> {
        (t.0..self.points.len()).map(TimeIdx)
    }
}

/// One declared trajectory: a state value per grid point, stored as indices
/// into the state alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub(crate) values: Vec<usize>,
}

impl Trajectory {
    pub fn values(&self) -> &[usize] {
        &self.values
    }
}

/// One declared disturbance realization, stored as indices into the
/// disturbance alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disturbance {
    pub(crate) values: Vec<usize>,
}

impl Disturbance {
    pub fn values(&self) -> &[usize] {
        &self.values
    }
}

/// A bundle: the set of trajectories the system admits for one history and
/// one disturbance.
pub type Bundle = BTreeSet<TrajId>;

/// Extensional system map, keyed by canonical prefix-class representative.
///
/// Every bundle ever declared for a key is retained, so redundant entries for
/// equivalent representatives can be cross-checked by the validator. A key of
/// a well-formed instance holds exactly one bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SystemMap {
    entries: BTreeMap<(TimeIdx, TrajId, DistId), BTreeSet<Bundle>>,
}

impl SystemMap {
    pub(crate) fn insert(&mut self, t: TimeIdx, rep: TrajId, omega: DistId, bundle: Bundle) {
        self.entries.entry((t, rep, omega)).or_default().insert(bundle);
    }

    /// The unique bundle for a canonical key, if the key is present and
    /// unambiguous.
    pub fn get(&self, t: TimeIdx, rep: TrajId, omega: DistId) -> Result<&Bundle> {
        let variants = self.entries.get(&(t, rep, omega)).ok_or(Error::MissingBundle {
            t: t.0,
            x: rep.0,
            omega: omega.0,
        })?;
        if variants.len() != 1 {
            return Err(Error::ConflictingBundle { t: t.0, x: rep.0, omega: omega.0 });
        }
        Ok(variants.iter().next().expect("nonempty variant set"))
    }

    pub fn variants(&self, t: TimeIdx, rep: TrajId, omega: DistId) -> Option<&BTreeSet<Bundle>> {
        self.entries.get(&(t, rep, omega))
    }

    pub fn contains_key(&self, t: TimeIdx, rep: TrajId, omega: DistId) -> bool {
        self.entries.contains_key(&(t, rep, omega))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(TimeIdx, TrajId, DistId), &BTreeSet<Bundle>)> {
        self.entries.iter()
    }
}

/// The allowed (time, trajectory) pairs. Must be prefix-closed and contain
/// the initial history; the validator checks both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraint {
    allowed: BTreeSet<(TimeIdx, TrajId)>,
}

impl Constraint {
    pub(crate) fn from_pairs(pairs: impl IntoIterator<Item = (TimeIdx, TrajId)>) -> Self {
        Constraint { allowed: pairs.into_iter().collect() }
    }

    pub fn contains(&self, t: TimeIdx, x: TrajId) -> bool {
        self.allowed.contains(&(t, x))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(TimeIdx, TrajId)> {
        self.allowed.iter()
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }
}

/// One state of the controlled process: a time, a trajectory standing for
/// its prefix class at that time, and the disturbance acting on the process.
///
/// Canonical form keeps the smallest trajectory id of the class, so `==` on
/// canonical states decides prefix-class equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub t: TimeIdx,
    pub x: TrajId,
    pub omega: DistId,
}

impl State {
    pub fn new(t: TimeIdx, x: TrajId, omega: DistId) -> Self {
        State { t, x, omega }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, x={}, omega={})", self.t, self.x, self.omega)
    }
}

/// A finite set of canonical states, ordered for deterministic iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateSet {
    members: BTreeSet<State>,
}

impl StateSet {
    pub fn new() -> Self {
        StateSet::default()
    }

    pub fn insert(&mut self, s: State) -> bool {
        self.members.insert(s)
    }

    pub fn contains(&self, s: &State) -> bool {
        self.members.contains(s)
    }

    /// Number of canonical members (prefix classes).
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &State> {
        self.members.iter()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Number of raw (time, trajectory, disturbance) triples represented,
    /// counting every trajectory of each member's prefix class.
    pub fn expanded_len(&self, inst: &Instance) -> usize {
        self.members
            .iter()
            .map(|s| inst.class_size_unchecked(s.t, s.x))
            .sum()
    }
}

impl FromIterator<State> for StateSet {
    fn from_iter<I: IntoIterator<Item = State>>(iter: I) -> Self {
        StateSet { members: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a StateSet {
    type Item = &'a State;
    type IntoIter = std::collections::btree_set::Iter<'a, State>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

impl IntoIterator for StateSet {
    type Item = State;
    type IntoIter = std::collections::btree_set::IntoIter<State>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.into_iter()
    }
}

/// A complete, structurally resolved problem instance.
///
/// Immutable after construction; every derived computation reads it without
/// mutation, so instances can be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    time: TimeGrid,
    state_labels: Vec<Label>,
    trajectories: Vec<Trajectory>,
    disturbance_labels: Vec<Label>,
    disturbances: Vec<Disturbance>,
    system: SystemMap,
    constraint: Constraint,
    x0: TrajId,
    /// reps[t][x] = smallest trajectory id agreeing with x at all points <= t.
    reps: Vec<Vec<TrajId>>,
}

impl Instance {
    // One parameter per instance field; a builder would add nothing here.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        time: TimeGrid,
        state_labels: Vec<Label>,
        trajectories: Vec<Trajectory>,
        disturbance_labels: Vec<Label>,
        disturbances: Vec<Disturbance>,
        raw_system: Vec<(TimeIdx, TrajId, DistId, Bundle)>,
        constraint: Constraint,
        x0: TrajId,
    ) -> Self {
        let reps = prefix_reps(&time, &trajectories);
        let mut system = SystemMap::default();
        for (t, x, omega, bundle) in raw_system {
            let rep = reps[t.0][x.0];
            system.insert(t, rep, omega, bundle);
        }
        Instance {
            time,
            state_labels,
            trajectories,
            disturbance_labels,
            disturbances,
            system,
            constraint,
            x0,
            reps,
        }
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn state_labels(&self) -> &[Label] {
        &self.state_labels
    }

    pub fn disturbance_labels(&self) -> &[Label] {
        &self.disturbance_labels
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn disturbances(&self) -> &[Disturbance] {
        &self.disturbances
    }

    pub fn trajectory_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn disturbance_count(&self) -> usize {
        self.disturbances.len()
    }

    pub fn system(&self) -> &SystemMap {
        &self.system
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn x0(&self) -> TrajId {
        self.x0
    }

    pub fn trajectory_ids(&self) -> impl Iterator<Item = TrajId> {
        (0..self.trajectories.len()).map(TrajId)
    }

    pub fn disturbance_ids(&self) -> impl Iterator<Item = DistId> {
        (0..self.disturbances.len()).map(DistId)
    }

    fn check_time(&self, t: TimeIdx) -> Result<()> {
        if t.0 >= self.time.len() {
            return Err(Error::TimeOutOfRange { t: t.0, len: self.time.len() });
        }
        Ok(())
    }

    fn check_traj(&self, x: TrajId) -> Result<()> {
        if x.0 >= self.trajectories.len() {
            return Err(Error::UnknownTrajectory { x: x.0, len: self.trajectories.len() });
        }
        Ok(())
    }

    fn check_dist(&self, omega: DistId) -> Result<()> {
        if omega.0 >= self.disturbances.len() {
            return Err(Error::UnknownDisturbance {
                omega: omega.0,
                len: self.disturbances.len(),
            });
        }
        Ok(())
    }

    /// Do `x` and `x2` agree at every grid point up to and including `t`?
    pub fn prefix_equal(&self, x: TrajId, x2: TrajId, t: TimeIdx) -> Result<bool> {
        self.check_time(t)?;
        self.check_traj(x)?;
        self.check_traj(x2)?;
        Ok(self.prefix(x, t) == self.prefix(x2, t))
    }

    /// Value prefix of `x` up to and including grid index `t`.
    /// Callers must pass ids and indices in range.
    pub fn prefix(&self, x: TrajId, t: TimeIdx) -> &[usize] {
        &self.trajectories[x.0].values[..=t.0]
    }

    /// Smallest trajectory id in the prefix class of `x` at `t`.
    pub fn canonical_rep(&self, t: TimeIdx, x: TrajId) -> Result<TrajId> {
        self.check_time(t)?;
        self.check_traj(x)?;
        Ok(self.reps[t.0][x.0])
    }

    pub(crate) fn rep_unchecked(&self, t: TimeIdx, x: TrajId) -> TrajId {
        self.reps[t.0][x.0]
    }

    /// Number of trajectories in the prefix class of `x` at `t`.
    pub fn class_size(&self, t: TimeIdx, x: TrajId) -> Result<usize> {
        self.check_time(t)?;
        self.check_traj(x)?;
        Ok(self.class_size_unchecked(t, x))
    }

    fn class_size_unchecked(&self, t: TimeIdx, x: TrajId) -> usize {
        let rep = self.reps[t.0][x.0];
        self.reps[t.0].iter().filter(|r| **r == rep).count()
    }

    /// All prefix-class representatives at `t`, in increasing id order.
    pub fn class_reps(&self, t: TimeIdx) -> Vec<TrajId> {
        let mut reps: Vec<TrajId> = self.reps[t.0].clone();
        reps.sort_unstable();
        reps.dedup();
        reps
    }

    /// The canonical state for a (time, trajectory, disturbance) triple.
    pub fn canonical_state(&self, t: TimeIdx, x: TrajId, omega: DistId) -> Result<State> {
        self.check_dist(omega)?;
        Ok(State::new(t, self.canonical_rep(t, x)?, omega))
    }

    /// The bundle the system admits for history `x` up to `t` under `omega`.
    /// Looked up via the canonical prefix-class representative.
    pub fn bundle(&self, t: TimeIdx, x: TrajId, omega: DistId) -> Result<&Bundle> {
        self.check_dist(omega)?;
        let rep = self.canonical_rep(t, x)?;
        self.system.get(t, rep, omega)
    }

    /// The set of value prefixes `{h|<=t : h in trajs}`.
    pub fn prefix_set(
        &self,
        trajs: impl IntoIterator<Item = TrajId>,
        t: TimeIdx,
    ) -> BTreeSet<&[usize]> {
        trajs.into_iter().map(|h| self.prefix(h, t)).collect()
    }

    /// Prefix set of the initial bundle under `omega`, cut at `t`.
    fn initial_prefixes(&self, omega: DistId, t: TimeIdx) -> Result<BTreeSet<&[usize]>> {
        let b0 = self.bundle(self.time.t0(), self.x0, omega)?;
        Ok(self.prefix_set(b0.iter().copied(), t))
    }

    /// Is the state reachable from the initial history, i.e. does its prefix
    /// occur in the initial bundle of its disturbance at its time?
    pub fn is_reachable(&self, s: &State) -> Result<bool> {
        self.check_time(s.t)?;
        self.check_traj(s.x)?;
        self.check_dist(s.omega)?;
        if s.t < self.time.t0() {
            return Ok(false);
        }
        Ok(self.initial_prefixes(s.omega, s.t)?.contains(self.prefix(s.x, s.t)))
    }

    /// Every state of the controlled process arising from the initial
    /// history under some admissible disturbance, canonicalized.
    pub fn reachable_states(&self) -> Result<StateSet> {
        let mut out = StateSet::new();
        for omega in self.disturbance_ids() {
            for t in self.time.from(self.time.t0()) {
                let prefixes = self.initial_prefixes(omega, t)?;
                for x in self.trajectory_ids() {
                    if prefixes.contains(self.prefix(x, t)) {
                        out.insert(State::new(t, self.rep_unchecked(t, x), omega));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Disturbances indistinguishable from the state's own through the
    /// prefixes of the initial bundles at the state's time. Always contains
    /// the state's own disturbance.
    pub fn compatible_disturbances(&self, s: &State) -> Result<BTreeSet<DistId>> {
        if !self.is_reachable(s)? {
            return Err(Error::Unreachable(*s));
        }
        let own = self.initial_prefixes(s.omega, s.t)?;
        let mut out = BTreeSet::new();
        for nu in self.disturbance_ids() {
            if self.initial_prefixes(nu, s.t)? == own {
                out.insert(nu);
            }
        }
        Ok(out)
    }

    /// The reachable states whose (time, trajectory) pair the constraint
    /// allows: the target the process must be retained in.
    pub fn target_set(&self) -> Result<StateSet> {
        Ok(self
            .reachable_states()?
            .into_iter()
            .filter(|s| self.constraint.contains(s.t, s.x))
            .collect())
    }
}

/// For each grid index, map every trajectory to the smallest id of its
/// prefix class.
fn prefix_reps(time: &TimeGrid, trajectories: &[Trajectory]) -> Vec<Vec<TrajId>> {
    let n = trajectories.len();
    let mut reps = Vec::with_capacity(time.len());
    for t in 0..time.len() {
        let mut at_t = vec![TrajId(0); n];
        for x in 0..n {
            let mut rep = x;
            for y in 0..x {
                if trajectories[y].values[..=t] == trajectories[x].values[..=t] {
                    rep = y;
                    break;
                }
            }
            at_t[x] = TrajId(rep);
        }
        reps.push(at_t);
    }
    reps
}
