//! Command dispatch and report rendering for the CLI.
//!
//! [`run`] is a pure function from (command, file text, options) to a
//! [`RunReport`]; the binary only adds file reading, printing, and timing.
//! Reports carry no wall-clock data, so identical inputs produce identical
//! documents and tests can diff them bytewise.
//!
//! Exit codes: 0 success (and, for `verify`, agreement), 1 validation
//! failure, 2 unreadable or unparsable input, 3 certification budget
//! exceeded, 4 verify disagreement. A disagreement would mean the fixpoint
//! engine and the exhaustive search proved different kernels, which is an
//! implementation bug by construction, hence its own loud exit code.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::absorb::{iterate_to_fixpoint, ExecMode, KernelResult};
use crate::model::{DistId, Instance, State, StateSet};
use crate::oracle::{is_decomposable, oracle_kernel_with, DecomposabilityReport, DEFAULT_BUDGET};
use crate::parse::{parse_instance_with, ParseOptions};
use crate::strategy::{build_quasistrategy, solvable, Quasistrategy, Verdict};
use crate::validate::{validate_axioms, Violation};
use crate::Error;

/// The four CLI commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Solve,
    Verify,
    Decomposable,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Decomposable => "decomposable",
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Complete the constraint to its prefix closure before validation.
    pub close_constraint: bool,
    /// Per-state cap on exhaustive certification work (`verify`).
    pub budget: u64,
    /// For `solve`: list every kernel state with its procedure value sizes.
    pub all_states: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { close_constraint: false, budget: DEFAULT_BUDGET, all_states: false }
    }
}

/// Outcome of one command invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub command: Command,
    /// Content hash of the input file, absent when it could not be read.
    pub digest: Option<String>,
    pub exit_code: i32,
    pub payload: Value,
}

impl RunReport {
    /// The full document printed to standard output.
    pub fn document(&self) -> Value {
        json!({
            "command": self.command.name(),
            "digest": self.digest,
            "exit_code": self.exit_code,
            "payload": self.payload,
        })
    }

    /// One-line human summary for the diagnostic stream.
    pub fn summary(&self) -> String {
        match (&self.payload["error"], self.command) {
            (err, _) if !err.is_null() => format!(
                "{}: error ({}): {}",
                self.command.name(),
                err["kind"].as_str().unwrap_or("unknown"),
                err["message"].as_str().unwrap_or("")
            ),
            (_, Command::Validate) => {
                if self.payload["valid"].as_bool() == Some(true) {
                    "validate: instance satisfies every law".into()
                } else {
                    let n = self.payload["violations"].as_array().map_or(0, Vec::len);
                    format!("validate: {n} violation(s) found")
                }
            }
            (_, Command::Solve) => {
                let kernel = self.payload["kernel"].as_array().map_or(0, Vec::len);
                let verdict = if self.payload["verdict"]["solvable"].as_bool() == Some(true) {
                    format!("solvable with omega0={}", self.payload["verdict"]["omega0"])
                } else {
                    "unsolvable from the initial history".into()
                };
                format!("solve: kernel has {kernel} state(s); {verdict}")
            }
            (_, Command::Verify) => {
                if self.payload["agree"].as_bool() == Some(true) {
                    "verify: exhaustive search confirms the fixpoint kernel".into()
                } else {
                    "verify: DISAGREEMENT between fixpoint and exhaustive search".into()
                }
            }
            (_, Command::Decomposable) => {
                if self.payload["decomposable"].as_bool() == Some(true) {
                    "decomposable: the disturbance set is splice-closed".into()
                } else {
                    format!(
                        "decomposable: splice witness {}",
                        self.payload["witness"]
                    )
                }
            }
        }
    }
}

/// Report for a file that could not be read at all.
pub fn io_error_report(command: Command, message: &str) -> RunReport {
    RunReport {
        command,
        digest: None,
        exit_code: 2,
        payload: json!({"error": {"kind": "io", "message": message}}),
    }
}

/// Execute a command against instance file text.
pub fn run(command: Command, text: &str, opts: &Options) -> RunReport {
    let hash = Sha256::digest(text.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let digest = Some(format!("sha256:{hex}"));
    let report = |exit_code: i32, payload: Value| RunReport {
        command,
        digest: digest.clone(),
        exit_code,
        payload,
    };

    let parse_opts = ParseOptions { close_constraint: opts.close_constraint };
    let inst = match parse_instance_with(text, &parse_opts) {
        Ok(inst) => inst,
        Err(e) => {
            return report(2, json!({"error": {"kind": e.kind(), "message": e.to_string()}}))
        }
    };

    // Splice closure is a property of the disturbance set alone, checkable
    // on any parsed instance.
    if command == Command::Decomposable {
        return report(0, decomposability_json(&inst, &is_decomposable(&inst)));
    }

    let validation = validate_axioms(&inst);
    let violations: Vec<Value> =
        validation.violations().iter().map(|v| violation_json(&inst, v)).collect();
    if command == Command::Validate {
        let exit = if validation.is_valid() { 0 } else { 1 };
        return report(exit, json!({"valid": validation.is_valid(), "violations": violations}));
    }
    if !validation.is_valid() {
        return report(
            1,
            json!({
                "error": {"kind": "validation", "message": "instance violates structural laws"},
                "violations": violations,
            }),
        );
    }

    match command {
        Command::Solve => match solve_payload(&inst, opts) {
            Ok(payload) => report(0, payload),
            Err(e) => report_error(report, e),
        },
        Command::Verify => match verify_payload(&inst, opts) {
            Ok((payload, agree)) => report(if agree { 0 } else { 4 }, payload),
            Err(e) => report_error(report, e),
        },
        Command::Validate | Command::Decomposable => unreachable!("handled above"),
    }
}

fn report_error(report: impl Fn(i32, Value) -> RunReport, e: Error) -> RunReport {
    match e {
        Error::BudgetExceeded { required, budget } => report(
            3,
            json!({"error": {
                "kind": "budget",
                "message": e.to_string(),
                "required": required.to_string(),
                "budget": budget,
            }}),
        ),
        // Unreachable after validation; kept graceful for robustness.
        other => report(
            1,
            json!({"error": {"kind": "internal", "message": other.to_string()}}),
        ),
    }
}

fn solve_payload(inst: &Instance, opts: &Options) -> Result<Value, Error> {
    let target = inst.target_set()?;
    let kr = iterate_to_fixpoint(inst, &target)?;
    let verdict = solvable(inst, &kr)?;
    let mut payload = json!({
        "target_size": target.expanded_len(inst),
        "kernel": states_json(inst, &kr.kernel),
        "trace": kr.trace,
        "iterations": kr.iterations,
        "stable": kr.stable,
        "verdict": verdict_json(inst, &verdict),
    });
    if opts.all_states {
        payload["strategies"] = kernel_strategies_json(inst, &kr)?;
    }
    Ok(payload)
}

/// Per kernel state, the extracted procedure's value sizes — enough to
/// audit nonemptiness from the command line without more tooling.
fn kernel_strategies_json(inst: &Instance, kr: &KernelResult) -> Result<Value, Error> {
    let mut all = Vec::new();
    for s in &kr.kernel {
        let qs = build_quasistrategy(inst, &kr.kernel, s)?;
        let sizes: Vec<Value> = qs
            .mapping()
            .iter()
            .map(|(nu, value)| json!({"nu": nu.0, "size": value.len()}))
            .collect();
        all.push(json!({"state": state_json(inst, s), "value_sizes": sizes}));
    }
    Ok(Value::Array(all))
}

fn verify_payload(inst: &Instance, opts: &Options) -> Result<(Value, bool), Error> {
    let target = inst.target_set()?;
    let fixpoint = iterate_to_fixpoint(inst, &target)?.kernel;
    let oracle = oracle_kernel_with(inst, opts.budget, ExecMode::Sequential)?;
    let agree = fixpoint == oracle;
    let payload = json!({
        "fixpoint_kernel": states_json(inst, &fixpoint),
        "oracle_kernel": states_json(inst, &oracle),
        "agree": agree,
    });
    Ok((payload, agree))
}

fn state_json(inst: &Instance, s: &State) -> Value {
    json!({"t": inst.time().label(s.t), "x": s.x.0, "omega": s.omega.0})
}

fn states_json(inst: &Instance, set: &StateSet) -> Value {
    Value::Array(set.iter().map(|s| state_json(inst, s)).collect())
}

fn verdict_json(inst: &Instance, verdict: &Verdict) -> Value {
    match verdict {
        Verdict::Solvable { omega0, strategy } => json!({
            "solvable": true,
            "omega0": omega0.0,
            "strategy": strategy_json(inst, strategy),
        }),
        Verdict::Unsolvable => json!({"solvable": false, "omega0": null, "strategy": null}),
    }
}

fn strategy_json(inst: &Instance, qs: &Quasistrategy) -> Value {
    let mapping: Vec<Value> = qs
        .mapping()
        .iter()
        .map(|(nu, value)| {
            let ids: Vec<usize> = value.iter().map(|h| h.0).collect();
            json!({"nu": nu.0, "trajectories": ids})
        })
        .collect();
    json!({"anchor": state_json(inst, qs.anchor()), "mapping": mapping})
}

fn decomposability_json(inst: &Instance, report: &DecomposabilityReport) -> Value {
    let witness = report.witness.map(|(o1, o2, t)| {
        json!({"omega1": o1.0, "omega2": o2.0, "t": inst.time().label(t)})
    });
    json!({"decomposable": report.decomposable, "witness": witness})
}

fn violation_json(inst: &Instance, v: &Violation) -> Value {
    let label = |t: &crate::model::TimeIdx| inst.time().label(*t);
    let mut doc = match v {
        Violation::MissingBundle { t, x, omega }
        | Violation::BundleConflict { t, x, omega }
        | Violation::EmptyBundle { t, x, omega } => {
            json!({"t": label(t), "x": x.0, "omega": omega.0})
        }
        Violation::HistoryMismatch { t, x, omega, h } => {
            json!({"t": label(t), "x": x.0, "omega": omega.0, "h": h.0})
        }
        Violation::RestartEscape { t, x, omega, h, tau } => {
            json!({"t": label(t), "x": x.0, "omega": omega.0, "h": h.0, "tau": label(tau)})
        }
        Violation::GraftEscape { t, x, omega1, omega2, tau, h, h2 } => json!({
            "t": label(t), "x": x.0, "omega1": omega1.0, "omega2": omega2.0,
            "tau": label(tau), "h": h.0, "h2": h2.0,
        }),
        Violation::ConstraintNotClosed { t, x, peer } => {
            json!({"t": label(t), "x": x.0, "peer": peer.0})
        }
        Violation::InitialNotAllowed { t0, x0 } => {
            json!({"t": label(t0), "x": x0.0})
        }
    };
    doc["category"] = Value::String(v.category().into());
    doc["detail"] = Value::String(v.to_string());
    doc
}

/// Convenience accessor used by tests: the omega index a solvable verdict
/// settled on.
pub fn verdict_omega0(verdict: &Verdict) -> Option<DistId> {
    match verdict {
        Verdict::Solvable { omega0, .. } => Some(*omega0),
        Verdict::Unsolvable => None,
    }
}
