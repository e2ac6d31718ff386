//! Reference checkpoint states of the built-in schedule and their comparison
//! with the evolved state.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::amplitude::{AmplitudeError, ExactReal};
use crate::hilbert::{HilbertError, Label, StateVector};
use crate::time::TimeStamp;

use super::{Engine, EngineError, RoundTrace};

const CANONICAL_FILES: [&str; 7] = [
    include_str!("../../data/expected/n02.json"),
    include_str!("../../data/expected/n12.json"),
    include_str!("../../data/expected/n14.json"),
    include_str!("../../data/expected/n24.json"),
    include_str!("../../data/expected/n25.json"),
    include_str!("../../data/expected/n28.json"),
    include_str!("../../data/expected/n31.json"),
];

/// A state at one time, listed term by term. Registers missing from a
/// term hold their ready token; repeated labels are summed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedCheckpoint {
    pub checkpoint: String,
    /// Names of measured bases the state is presented in, in order.
    pub rewrite: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub terms: Vec<ExpectedTerm>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedTerm {
    pub labels: BTreeMap<String, String>,
    /// `sqrt(p/q)`, `-sqrt(p/q)`, or an exact value such as `1/6*sqrt3`.
    pub amplitude: String,
}

impl ExpectedCheckpoint {
    pub fn time(&self) -> Result<TimeStamp, EngineError> {
        self.checkpoint
            .parse()
            .map_err(|e| EngineError::Provenance(format!("bad checkpoint time: {e}")))
    }
}

/// Reference states of the built-in schedule.
pub fn canonical_expected() -> Vec<ExpectedCheckpoint> {
    CANONICAL_FILES
        .iter()
        .map(|s| serde_json::from_str(s).expect("embedded checkpoint data is valid"))
        .collect()
}

pub fn parse_amplitude(s: &str) -> Result<ExactReal, AmplitudeError> {
    let t = s.trim();
    let (negative, rest) = match t.strip_prefix('-') {
        Some(r) => (true, r.trim()),
        None => (false, t),
    };
    if let Some(inner) = rest.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let r: BigRational = inner.trim().parse().map_err(|_| AmplitudeError::Parse(s.to_string()))?;
        let v = ExactReal::from_sqrt(&r)?;
        return Ok(if negative { -v } else { v });
    }
    t.parse()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub labels: BTreeMap<String, String>,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointCheck {
    pub checkpoint: String,
    pub rewrite: Vec<String>,
    pub passed: bool,
    pub mismatches: Vec<Mismatch>,
    pub notes: Vec<String>,
}

impl Engine {
    /// Compares the evolved state at the checkpoint time with `expected`,
    /// after presenting it in the listed bases.
    pub fn check_checkpoint(
        &self,
        trace: &RoundTrace<ExactReal>,
        expected: &ExpectedCheckpoint,
    ) -> Result<CheckpointCheck, EngineError> {
        let t = expected.time()?;
        let mut bases = Vec::new();
        for name in &expected.rewrite {
            let b = self
                .basis(name)
                .ok_or_else(|| EngineError::Provenance(format!("no measured basis named {name}")))?;
            bases.push(b.clone());
        }
        let actual = match self.present(trace.state_at(t), &bases) {
            Ok(a) => a,
            // The reference lies in the span of its bases, so a state with
            // support outside them cannot match it.
            Err(EngineError::Hilbert(e @ HilbertError::SupportLeakage { .. })) => {
                return Ok(CheckpointCheck {
                    checkpoint: expected.checkpoint.clone(),
                    rewrite: expected.rewrite.clone(),
                    passed: false,
                    mismatches: Vec::new(),
                    notes: vec![e.to_string()],
                })
            }
            Err(e) => return Err(e),
        };
        let space = actual.space().clone();
        let mut terms = Vec::new();
        for term in &expected.terms {
            for name in term.labels.keys() {
                if !space.registers().iter().any(|r| r.id.as_str() == name) {
                    return Err(HilbertError::UnknownRegister(name.clone()).into());
                }
            }
            let label: Label = space
                .registers()
                .iter()
                .map(|r| {
                    term.labels
                        .get(r.id.as_str())
                        .cloned()
                        .unwrap_or_else(|| r.ready.clone())
                })
                .collect();
            let amp = parse_amplitude(&term.amplitude).map_err(HilbertError::from)?;
            terms.push((label, amp));
        }
        let want = StateVector::from_terms(space.clone(), terms)?;

        let keys: BTreeSet<&Label> = want.terms().keys().chain(actual.terms().keys()).collect();
        let mut mismatches = Vec::new();
        for key in keys {
            let (e, a) = (want.amplitude(key), actual.amplitude(key));
            if e != a {
                mismatches.push(Mismatch {
                    labels: space
                        .registers()
                        .iter()
                        .zip(key)
                        .map(|(r, t)| (r.id.to_string(), t.clone()))
                        .collect(),
                    expected: e.to_string(),
                    actual: a.to_string(),
                });
            }
        }
        Ok(CheckpointCheck {
            checkpoint: expected.checkpoint.clone(),
            rewrite: expected.rewrite.clone(),
            passed: mismatches.is_empty(),
            mismatches,
            notes: expected.notes.clone(),
        })
    }
}
