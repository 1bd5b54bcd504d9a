//! Shared support for the integration suites: a seeded random-instance
//! generator, JSON surgery helpers for corrupting fixtures, and reorderings
//! for determinism checks.
//!
//! Each suite compiles this module independently, so helpers used by only
//! one suite would otherwise warn in the others.
#![allow(dead_code)]
//!
//! The generator builds instances from per-step successor tables
//! g[k][state][disturbance-value] (nonempty, at most two successors). The
//! trajectory set is every path through the union table from a chosen set of
//! start states, and the bundle at (t, x, omega) is every such path that
//! continues x's history using only omega-labelled steps. Systems of this
//! shape satisfy all the structural laws by construction — the suites
//! re-validate every one as a safety net — while covering varied grids,
//! alphabets, disturbance sets, and constraints.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use retain::model::Instance;
use retain::parse::parse_instance;
use retain::validate::validate_axioms;

pub struct Generated {
    pub seed: u64,
    pub json: String,
    pub instance: Instance,
}

/// Deterministically generate a valid instance from a seed. Draws that
/// produce too many trajectories are rejected and retried with a derived
/// sub-seed, so every seed terminates with an instance.
pub fn random_instance(seed: u64) -> Generated {
    for attempt in 0u64.. {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        if let Some(json_text) = try_generate(&mut rng) {
            let instance = parse_instance(&json_text).expect("generated instance must parse");
            let report = validate_axioms(&instance);
            assert!(
                report.is_valid(),
                "generated instance (seed {seed}) violates laws: {:?}\n{json_text}",
                report.violations()
            );
            return Generated { seed, json: json_text, instance };
        }
    }
    unreachable!("rejection sampling terminates");
}

fn try_generate(rng: &mut ChaCha8Rng) -> Option<String> {
    let n_times = rng.random_range(1..=3usize);
    let mut labels = Vec::with_capacity(n_times);
    let mut label = rng.random_range(-2..=2i64);
    for _ in 0..n_times {
        labels.push(label);
        label += rng.random_range(1..=3i64);
    }
    let t0_idx = if n_times > 1 && rng.random_bool(0.25) {
        rng.random_range(1..n_times)
    } else {
        0
    };

    let n_states = rng.random_range(1..=3usize);
    let n_values = rng.random_range(1..=3usize);

    // Successor tables: at most two successors per (step, state, value).
    let mut steps: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
    for _ in 0..n_times.saturating_sub(1) {
        let mut per_state = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            let mut per_value = Vec::with_capacity(n_values);
            for _ in 0..n_values {
                per_value.push(pick_subset(rng, n_states));
            }
            per_state.push(per_value);
        }
        steps.push(per_state);
    }

    let mut starts: Vec<usize> = (0..n_states).filter(|_| rng.random_bool(0.6)).collect();
    if starts.is_empty() {
        starts.push(rng.random_range(0..n_states));
    }

    // All paths through the union table.
    let mut paths: Vec<Vec<usize>> = starts.iter().map(|&s| vec![s]).collect();
    for step in &steps {
        let mut extended = Vec::new();
        for path in &paths {
            let here = *path.last().expect("paths are nonempty");
            let mut successors: Vec<usize> =
                step[here].iter().flatten().copied().collect();
            successors.sort_unstable();
            successors.dedup();
            for s in successors {
                let mut longer = path.clone();
                longer.push(s);
                extended.push(longer);
            }
        }
        paths = extended;
        if paths.len() > 64 {
            return None;
        }
    }
    paths.sort();
    if paths.is_empty() || paths.len() > 9 {
        return None;
    }

    let n_omega = rng.random_range(1..=4usize);
    let mut omega_rows: BTreeSet<Vec<usize>> = BTreeSet::new();
    for _ in 0..n_omega {
        omega_rows.insert((0..n_times).map(|_| rng.random_range(0..n_values)).collect());
    }
    let omegas: Vec<Vec<usize>> = omega_rows.into_iter().collect();

    let x0 = rng.random_range(0..paths.len());

    // History classes per time index: map prefix -> member ids.
    let classes: Vec<BTreeMap<&[usize], Vec<usize>>> = (0..n_times)
        .map(|t| {
            let mut at_t: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
            for (i, p) in paths.iter().enumerate() {
                at_t.entry(&p[..=t]).or_default().push(i);
            }
            at_t
        })
        .collect();

    let mut system = Vec::new();
    for (t, at_t) in classes.iter().enumerate() {
        for members in at_t.values() {
            for (w, omega) in omegas.iter().enumerate() {
                let bundle: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| {
                        (t..n_times - 1).all(|k| {
                            steps[k][paths[i][k]][omega[k]].contains(&paths[i][k + 1])
                        })
                    })
                    .collect();
                assert!(!bundle.is_empty(), "step tables always admit a continuation");
                // Declare through a random class member to exercise history
                // normalization; occasionally declare redundantly through
                // another member with the same bundle.
                let declared = members[rng.random_range(0..members.len())];
                system.push(json!({
                    "t": labels[t], "x": declared, "omega": w, "bundle": bundle,
                }));
                if members.len() > 1 && rng.random_bool(0.15) {
                    let other = members[rng.random_range(0..members.len())];
                    system.push(json!({
                        "t": labels[t], "x": other, "omega": w, "bundle": bundle,
                    }));
                }
            }
        }
    }

    // Whole-class inclusion keeps the constraint prefix-closed; the class of
    // the initial history is always allowed.
    let mut constraint = Vec::new();
    for (t, at_t) in classes.iter().enumerate() {
        for members in at_t.values() {
            let forced = t == t0_idx && members.contains(&x0);
            if forced || rng.random_bool(0.75) {
                for &i in members {
                    constraint.push(json!({"t": labels[t], "x": i}));
                }
            }
        }
    }

    let doc = json!({
        "times": labels,
        "t0": labels[t0_idx],
        "states": (0..n_states).collect::<Vec<_>>(),
        "trajectories": paths,
        "disturbance_values": (0..n_values).collect::<Vec<_>>(),
        "disturbances": omegas,
        "system": system,
        "constraint": constraint,
        "x0": x0,
    });
    Some(serde_json::to_string_pretty(&doc).expect("document serializes"))
}

fn pick_subset(rng: &mut ChaCha8Rng, n_states: usize) -> Vec<usize> {
    let size = if n_states > 1 && rng.random_bool(0.4) { 2 } else { 1 };
    let mut all: Vec<usize> = (0..n_states).collect();
    all.shuffle(rng);
    all.truncate(size);
    all.sort_unstable();
    all
}

/// Reorder the `system` and `constraint` arrays without changing meaning.
pub fn shuffle_entry_order(json_text: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc: Value = serde_json::from_str(json_text).expect("valid instance text");
    for field in ["system", "constraint"] {
        let entries = doc[field].as_array_mut().expect("array field");
        entries.shuffle(&mut rng);
    }
    doc.to_string()
}

/// Renumber trajectories and disturbances by random permutations, rewriting
/// every reference. Returns the new text plus the new-id-of-old-id maps.
pub fn permute_identities(json_text: &str, seed: u64) -> (String, Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc: Value = serde_json::from_str(json_text).expect("valid instance text");

    let n_traj = doc["trajectories"].as_array().expect("trajectories").len();
    let n_dist = doc["disturbances"].as_array().expect("disturbances").len();
    let traj_new_of_old = random_permutation(&mut rng, n_traj);
    let dist_new_of_old = random_permutation(&mut rng, n_dist);

    doc["trajectories"] = permute_array(&doc["trajectories"], &traj_new_of_old);
    doc["disturbances"] = permute_array(&doc["disturbances"], &dist_new_of_old);
    doc["x0"] = json!(traj_new_of_old[doc["x0"].as_u64().expect("x0") as usize]);
    for entry in doc["system"].as_array_mut().expect("system") {
        entry["x"] = json!(traj_new_of_old[entry["x"].as_u64().expect("x") as usize]);
        entry["omega"] = json!(dist_new_of_old[entry["omega"].as_u64().expect("omega") as usize]);
        let bundle: Vec<usize> = entry["bundle"]
            .as_array()
            .expect("bundle")
            .iter()
            .map(|h| traj_new_of_old[h.as_u64().expect("member") as usize])
            .collect();
        entry["bundle"] = json!(bundle);
    }
    for entry in doc["constraint"].as_array_mut().expect("constraint") {
        entry["x"] = json!(traj_new_of_old[entry["x"].as_u64().expect("x") as usize]);
    }
    (doc.to_string(), traj_new_of_old, dist_new_of_old)
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(rng);
    let mut new_of_old = vec![0; n];
    for (new, &old) in positions.iter().enumerate() {
        new_of_old[old] = new;
    }
    new_of_old
}

fn permute_array(old: &Value, new_of_old: &[usize]) -> Value {
    let items = old.as_array().expect("array");
    let mut reordered = vec![Value::Null; items.len()];
    for (i, item) in items.iter().enumerate() {
        reordered[new_of_old[i]] = item.clone();
    }
    Value::Array(reordered)
}

/// Apply a JSON edit to instance text and return the new text.
pub fn mutate_json(base: &str, f: impl FnOnce(&mut Value)) -> String {
    let mut doc: Value = serde_json::from_str(base).expect("valid instance text");
    f(&mut doc);
    doc.to_string()
}

/// Replace the bundle of the system entry matching (t, x, omega).
pub fn set_bundle(doc: &mut Value, t: i64, x: u64, omega: u64, bundle: &[u64]) {
    let entries = doc["system"].as_array_mut().expect("system");
    let entry = entries
        .iter_mut()
        .find(|e| e["t"] == t && e["x"] == x && e["omega"] == omega)
        .expect("no such system entry");
    entry["bundle"] = json!(bundle);
}

/// Remove the system entry matching (t, x, omega).
pub fn remove_entry(doc: &mut Value, t: i64, x: u64, omega: u64) {
    let entries = doc["system"].as_array_mut().expect("system");
    let before = entries.len();
    entries.retain(|e| !(e["t"] == t && e["x"] == x && e["omega"] == omega));
    assert!(entries.len() < before, "no such system entry");
}

/// Append a system entry.
pub fn push_entry(doc: &mut Value, t: i64, x: u64, omega: u64, bundle: &[u64]) {
    doc["system"]
        .as_array_mut()
        .expect("system")
        .push(json!({"t": t, "x": x, "omega": omega, "bundle": bundle}));
}

/// Replace the whole constraint.
pub fn set_constraint(doc: &mut Value, pairs: &[(i64, u64)]) {
    let entries: Vec<Value> = pairs.iter().map(|&(t, x)| json!({"t": t, "x": x})).collect();
    doc["constraint"] = Value::Array(entries);
}

/// Remove one constraint pair.
pub fn remove_constraint_pair(doc: &mut Value, t: i64, x: u64) {
    let entries = doc["constraint"].as_array_mut().expect("constraint");
    let before = entries.len();
    entries.retain(|e| !(e["t"] == t && e["x"] == x));
    assert!(entries.len() < before, "no such constraint pair");
}
