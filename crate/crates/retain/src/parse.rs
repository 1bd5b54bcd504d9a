//! Instance file parsing.
//!
//! An instance file is a single JSON document:
//!
//! ```json
//! {
//!   "times": [0, 1],
//!   "t0": 0,
//!   "states": [0, 1],
//!   "trajectories": [[0, 0], [0, 1], [1, 0], [1, 1]],
//!   "disturbance_values": [0, 1],
//!   "disturbances": [[0, 0], [1, 1]],
//!   "system": [{"t": 0, "x": 0, "omega": 0, "bundle": [0]}],
//!   "constraint": [{"t": 0, "x": 0}],
//!   "x0": 0
//! }
//! ```
//!
//! `times` lists the grid labels in strictly increasing order. `t0` and every
//! `t` field hold a grid *label*, resolved against `times`; `x`, `omega`,
//! `x0`, and `bundle` entries are 0-based indices into the declaring arrays.
//! Trajectory and disturbance rows spell one value per grid point, drawn
//! from `states` / `disturbance_values` respectively.
//!
//! Parsing resolves structure only. Dynamics laws, system-map totality, and
//! constraint closure are checked separately by [`crate::validate`].

use std::collections::BTreeSet;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    Bundle, Constraint, DistId, Disturbance, Instance, Label, TimeGrid, TimeIdx, TrajId,
    Trajectory,
};

/// Why a file was rejected before any semantic checking.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    /// Malformed document: bad JSON, missing or unknown fields, empty
    /// required arrays, duplicate declarations.
    #[error("syntax error: {0}")]
    Syntax(String),
    /// A label or index that does not resolve to a declared item.
    #[error("reference error: {0}")]
    Reference(String),
    /// A per-grid-point sequence whose length differs from the grid.
    #[error("arity error: {0}")]
    Arity(String),
}

impl ParseError {
    /// Stable machine-readable discriminant for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax(_) => "syntax",
            ParseError::Reference(_) => "reference",
            ParseError::Arity(_) => "arity",
        }
    }
}

/// Knobs applied while building the [`Instance`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Complete the constraint to its prefix closure instead of leaving
    /// non-closed input for the validator to reject.
    pub close_constraint: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileInstance {
    times: Vec<i64>,
    t0: i64,
    states: Vec<Label>,
    trajectories: Vec<Vec<Label>>,
    disturbance_values: Vec<Label>,
    disturbances: Vec<Vec<Label>>,
    system: Vec<FileSystemEntry>,
    constraint: Vec<FileConstraintEntry>,
    x0: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSystemEntry {
    t: i64,
    x: usize,
    omega: usize,
    bundle: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConstraintEntry {
    t: i64,
    x: usize,
}

/// Parse an instance file with default options.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    parse_instance_with(text, &ParseOptions::default())
}

/// Parse an instance file.
pub fn parse_instance_with(text: &str, opts: &ParseOptions) -> Result<Instance, ParseError> {
    let file: FileInstance =
        serde_json::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;

    let time = resolve_time(&file)?;
    let state_labels = resolve_alphabet(&file.states, "states")?;
    let dist_labels = resolve_alphabet(&file.disturbance_values, "disturbance_values")?;

    let trajectories = resolve_rows(
        &file.trajectories,
        &state_labels,
        time.len(),
        "trajectory",
        "states",
    )?
    .into_iter()
    .map(|values| Trajectory { values })
    .collect::<Vec<_>>();
    let disturbances = resolve_rows(
        &file.disturbances,
        &dist_labels,
        time.len(),
        "disturbance",
        "disturbance_values",
    )?
    .into_iter()
    .map(|values| Disturbance { values })
    .collect::<Vec<_>>();

    if file.x0 >= trajectories.len() {
        return Err(ParseError::Reference(format!(
            "x0 = {} but only {} trajectories are declared",
            file.x0,
            trajectories.len()
        )));
    }

    let system = resolve_system(&file, &time, trajectories.len(), disturbances.len())?;
    let constraint =
        resolve_constraint(&file, &time, &trajectories, opts.close_constraint)?;

    Ok(Instance::assemble(
        time,
        state_labels,
        trajectories,
        dist_labels,
        disturbances,
        system,
        constraint,
        TrajId(file.x0),
    ))
}

fn resolve_time(file: &FileInstance) -> Result<TimeGrid, ParseError> {
    if file.times.is_empty() {
        return Err(ParseError::Syntax("`times` must be nonempty".into()));
    }
    if !file.times.windows(2).all(|w| w[0] < w[1]) {
        return Err(ParseError::Syntax(
            "`times` must be strictly increasing with no duplicates".into(),
        ));
    }
    let t0 = file
        .times
        .binary_search(&file.t0)
        .map_err(|_| {
            ParseError::Reference(format!("initial time t0 = {} is not a grid point", file.t0))
        })
        .map(TimeIdx)?;
    Ok(TimeGrid::new(file.times.clone(), t0))
}

fn resolve_alphabet(labels: &[Label], field: &str) -> Result<Vec<Label>, ParseError> {
    if labels.is_empty() {
        return Err(ParseError::Syntax(format!("`{field}` must be nonempty")));
    }
    let distinct: BTreeSet<&Label> = labels.iter().collect();
    if distinct.len() != labels.len() {
        return Err(ParseError::Syntax(format!("`{field}` contains duplicate labels")));
    }
    Ok(labels.to_vec())
}

/// Resolve label rows (trajectories or disturbances) to alphabet indices.
fn resolve_rows(
    rows: &[Vec<Label>],
    alphabet: &[Label],
    grid_len: usize,
    row_kind: &str,
    alphabet_field: &str,
) -> Result<Vec<Vec<usize>>, ParseError> {
    if rows.is_empty() {
        return Err(ParseError::Syntax(format!(
            "at least one {row_kind} must be declared"
        )));
    }
    let mut resolved = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != grid_len {
            return Err(ParseError::Arity(format!(
                "{row_kind} {i} has {} values but the grid has {grid_len} points",
                row.len()
            )));
        }
        let mut values = Vec::with_capacity(row.len());
        for (k, label) in row.iter().enumerate() {
            let idx = alphabet.iter().position(|l| l == label).ok_or_else(|| {
                ParseError::Reference(format!(
                    "{row_kind} {i}, point {k}: value {label} is not in `{alphabet_field}`"
                ))
            })?;
            values.push(idx);
        }
        resolved.push(values);
    }
    let distinct: BTreeSet<&Vec<usize>> = resolved.iter().collect();
    if distinct.len() != resolved.len() {
        return Err(ParseError::Syntax(format!(
            "duplicate {row_kind} rows (the declared set must not repeat members)"
        )));
    }
    Ok(resolved)
}

fn resolve_system(
    file: &FileInstance,
    time: &TimeGrid,
    n_traj: usize,
    n_dist: usize,
) -> Result<Vec<(TimeIdx, TrajId, DistId, Bundle)>, ParseError> {
    let mut out = Vec::with_capacity(file.system.len());
    for (i, e) in file.system.iter().enumerate() {
        let t = time.index_of(e.t).ok_or_else(|| {
            ParseError::Reference(format!("system entry {i}: t = {} is not a grid point", e.t))
        })?;
        if e.x >= n_traj {
            return Err(ParseError::Reference(format!(
                "system entry {i}: trajectory {} of {n_traj}",
                e.x
            )));
        }
        if e.omega >= n_dist {
            return Err(ParseError::Reference(format!(
                "system entry {i}: disturbance {} of {n_dist}",
                e.omega
            )));
        }
        let mut bundle = Bundle::new();
        for &h in &e.bundle {
            if h >= n_traj {
                return Err(ParseError::Reference(format!(
                    "system entry {i}: bundle member {h} of {n_traj}"
                )));
            }
            bundle.insert(TrajId(h));
        }
        out.push((t, TrajId(e.x), DistId(e.omega), bundle));
    }
    Ok(out)
}

fn resolve_constraint(
    file: &FileInstance,
    time: &TimeGrid,
    trajectories: &[Trajectory],
    close: bool,
) -> Result<Constraint, ParseError> {
    let mut pairs = BTreeSet::new();
    for (i, e) in file.constraint.iter().enumerate() {
        let t = time.index_of(e.t).ok_or_else(|| {
            ParseError::Reference(format!(
                "constraint entry {i}: t = {} is not a grid point",
                e.t
            ))
        })?;
        if e.x >= trajectories.len() {
            return Err(ParseError::Reference(format!(
                "constraint entry {i}: trajectory {} of {}",
                e.x,
                trajectories.len()
            )));
        }
        pairs.insert((t, TrajId(e.x)));
    }
    if close {
        let mut closed = BTreeSet::new();
        for &(t, x) in &pairs {
            let prefix = &trajectories[x.0].values[..=t.0];
            for (y, traj) in trajectories.iter().enumerate() {
                if &traj.values[..=t.0] == prefix {
                    closed.insert((t, TrajId(y)));
                }
            }
        }
        pairs = closed;
    }
    Ok(Constraint::from_pairs(pairs))
}
