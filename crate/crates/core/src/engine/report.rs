//! The result of running one round of a schedule, as a serializable report
//! and as a plain-text table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::agents::ComparisonTimePolicy;
use crate::amplitude::{Amplitude, ExactReal};
use crate::hilbert::{TermDump, Token};
use crate::protocol::canonical_fr_schedule;
use crate::time::TimeStamp;

use super::{canonical_expected, BranchSummary, Certification, Engine, EngineError, Mode};

/// A number in exact form (when available) and as a float.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumberDump {
    pub exact: Option<String>,
    pub float: f64,
}

impl NumberDump {
    pub fn of<A: Amplitude>(a: &A) -> Self {
        NumberDump {
            exact: A::EXACT.then(|| a.exact_string()),
            float: a.to_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub max_rounds: u64,
    pub seed: Option<u64>,
    pub checkpoints: Vec<TimeStamp>,
    pub comparison_time_policy: ComparisonTimePolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Exact,
            max_rounds: 1000,
            seed: None,
            checkpoints: Vec::new(),
            comparison_time_policy: ComparisonTimePolicy::default(),
        }
    }
}

/// The state at one checkpoint: raw terms, then the branches as presented
/// in the bases measured so far.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointDump {
    pub time: TimeStamp,
    pub state: Vec<TermDump>,
    pub bases: Vec<String>,
    pub branches: Vec<BranchSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaltDump {
    pub outcome: String,
    pub probability: NumberDump,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub source: String,
    pub config: RunConfig,
    pub checkpoints: Vec<CheckpointDump>,
    /// Keyed by the comma-joined values recorded in the halt registers.
    pub distribution: BTreeMap<String, NumberDump>,
    pub halt: HaltDump,
    pub violations: Vec<BranchSummary>,
    pub certifications: Vec<Certification>,
    pub notes: Vec<String>,
}

fn dump_distribution<A: Amplitude>(d: &BTreeMap<Vec<Token>, A>) -> BTreeMap<String, NumberDump> {
    d.iter().map(|(k, p)| (k.join(","), NumberDump::of(p))).collect()
}

/// Checkpoints, distribution, violations and certifications of one round.
type Parts = (
    Vec<CheckpointDump>,
    BTreeMap<String, NumberDump>,
    Vec<BranchSummary>,
    Vec<Certification>,
);

fn unitary_parts<A: Amplitude>(engine: &Engine, config: &RunConfig) -> Result<Parts, EngineError> {
    let trace = engine.evolve_round::<A>()?;
    let policy = config.comparison_time_policy;
    let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
    for &t in &config.checkpoints {
        let psi = trace.state_at(t);
        checkpoints.push(CheckpointDump {
            time: t,
            state: psi.dump(),
            bases: engine
                .presentation_bases(t)
                .iter()
                .map(|b| b.name().to_string())
                .collect(),
            branches: engine.branches(psi, t, policy)?.iter().map(|b| b.summary()).collect(),
        });
    }
    let end = engine.steps().last().map(|s| s.at).unwrap_or(TimeStamp::at(0));
    let psi = trace.final_state();
    let distribution = dump_distribution(&engine.outcome_distribution(psi)?);
    let violations = engine
        .detect_violations(psi, end, policy)?
        .iter()
        .map(|b| b.summary())
        .collect();
    let certifications = engine.certifications(&trace)?;
    Ok((checkpoints, distribution, violations, certifications))
}

/// Runs one round as configured. `source` names the schedule in the report.
pub fn build_report(engine: &Engine, config: &RunConfig, source: &str) -> Result<RunReport, EngineError> {
    let mut notes = Vec::new();
    let (checkpoints, distribution, violations, certifications) = match config.mode {
        Mode::Exact => unitary_parts::<ExactReal>(engine, config)?,
        Mode::Float => unitary_parts::<f64>(engine, config)?,
        Mode::Collapse => {
            notes.push(
                "collapse mode: every recorded measurement or read splits the state; checkpoints and rule-Q audits are not produced"
                    .to_string(),
            );
            let end = engine.steps().last().map(|s| s.at).unwrap_or(TimeStamp::at(0));
            let mut violations = Vec::new();
            for member in engine.collapse_ensemble()? {
                for b in engine.detect_violations(&member, end, config.comparison_time_policy)? {
                    violations.push(b.summary());
                }
            }
            let distribution = dump_distribution(&engine.collapse_distribution()?);
            (Vec::new(), distribution, violations, Vec::new())
        }
    };
    if *engine.schedule() == canonical_fr_schedule() {
        for exp in canonical_expected() {
            let Ok(t) = exp.time() else { continue };
            if checkpoints.iter().any(|c| c.time == t) {
                notes.extend(exp.notes.iter().map(|n| format!("{}: {n}", exp.checkpoint)));
            }
        }
    }
    let outcome = engine.halt_key().join(",");
    let probability = distribution.get(&outcome).cloned().unwrap_or_else(|| {
        if config.mode == Mode::Float {
            NumberDump::of(&0.0f64)
        } else {
            NumberDump::of(&ExactReal::zero())
        }
    });
    Ok(RunReport {
        source: source.to_string(),
        config: config.clone(),
        checkpoints,
        distribution,
        halt: HaltDump { outcome, probability },
        violations,
        certifications,
        notes,
    })
}

fn number(n: &NumberDump) -> String {
    match &n.exact {
        Some(e) => format!("{e} ({:.6})", n.float),
        None => format!("{:.12}", n.float),
    }
}

fn labels(l: &BTreeMap<String, String>) -> String {
    l.iter().map(|(r, t)| format!("{r}={t}")).collect::<Vec<_>>().join(" ")
}

/// Human-readable rendering of a report.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schedule {}  mode {}", report.source, report.config.mode);
    for c in &report.checkpoints {
        let _ = writeln!(out, "\ncheckpoint {}", c.time);
        if c.bases.is_empty() {
            let _ = writeln!(out, "  computational basis");
        } else {
            let _ = writeln!(out, "  presented in {}", c.bases.join(", "));
        }
        for b in &c.branches {
            let _ = writeln!(out, "  {:>24}  |{}>", number(&b.amplitude), labels(&b.labels));
            for r in b.records.iter().filter(|r| r.description != "(empty)") {
                let _ = writeln!(out, "      {} ({}): {}", r.agent, r.register, r.description);
            }
        }
    }
    let _ = writeln!(out, "\noutcome distribution");
    for (k, p) in &report.distribution {
        let _ = writeln!(out, "  {k:<20} {}", number(p));
    }
    let _ = writeln!(
        out,
        "halt on {}: probability {}",
        report.halt.outcome,
        number(&report.halt.probability)
    );
    let _ = writeln!(out, "\nrule S violations: {}", report.violations.len());
    for v in &report.violations {
        let _ = writeln!(out, "  p = {}  |{}>", number(&v.probability), labels(&v.labels));
        for x in &v.violations {
            let _ = writeln!(out, "    {}\n    {}", x.first, x.second);
        }
    }
    if !report.certifications.is_empty() {
        let _ = writeln!(out, "\nrule Q audit");
        for c in &report.certifications {
            let p = c
                .probability
                .as_ref()
                .map(number)
                .unwrap_or_else(|| "unreachable".into());
            let _ = writeln!(
                out,
                "  {} at {} ({}): {} = {} at {}  p = {}  {}",
                c.agent,
                c.step_time,
                c.token,
                c.variable,
                c.value,
                c.time,
                p,
                if c.certified { "certified" } else { "NOT certified" }
            );
        }
    }
    if !report.notes.is_empty() {
        let _ = writeln!(out, "\nnotes");
        for n in &report.notes {
            let _ = writeln!(out, "  {n}");
        }
    }
    out
}
