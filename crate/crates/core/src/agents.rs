//! Certainty statements, the inference rules Q, C and S, and compilation of
//! an agent's inference table into a unitary on its memory register.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::amplitude::Amplitude;
use crate::hilbert::{
    born_distribution, BasisMapOperator, HilbertError, Label, MeasurementBasis, Register, StateVector, Token,
};
use crate::time::TimeStamp;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId::new(s)
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

/// Which rule licensed a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    /// Born probability 1 for the outcome.
    #[serde(rename = "Q-i")]
    QPrediction,
    /// The agent observed the outcome.
    #[serde(rename = "Q-ii")]
    QObservation,
    /// Inherited from another agent's certainty.
    #[serde(rename = "C")]
    C,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::QPrediction => "Q-i",
            Rule::QObservation => "Q-ii",
            Rule::C => "C",
        })
    }
}

/// "I am certain that `variable` = `value` at `time`", with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CertaintyStatement {
    pub agent: AgentId,
    pub variable: String,
    pub value: Token,
    pub time: TimeStamp,
    pub rule: Rule,
    pub premises: Vec<CertaintyStatement>,
}

impl CertaintyStatement {
    pub fn same_claim(&self, other: &CertaintyStatement) -> bool {
        self.variable == other.variable && self.value == other.value && self.time == other.time
    }

    /// True when every C step of the provenance chain ends in a Q statement.
    pub fn grounded_in_q(&self) -> bool {
        match self.rule {
            Rule::QPrediction | Rule::QObservation => true,
            Rule::C => {
                self.premises.len() == 1 && self.premises[0].agent != self.agent && self.premises[0].grounded_in_q()
            }
        }
    }
}

impl fmt::Display for CertaintyStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: certain {} = {} at {} [{}]",
            self.agent, self.variable, self.value, self.time, self.rule
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("prepared state is not normalized")]
    NotNormalized,
    #[error("agent {0} cannot lift its own certainty with rule C")]
    SelfLift(AgentId),
    #[error("inference table lists trigger {0} twice")]
    DuplicateTrigger(Token),
    #[error("inference table maps two triggers to {0}")]
    NonInjectiveTable(Token),
    #[error("token {token} is not in the alphabet of {register}")]
    UnknownToken { register: String, token: Token },
}

/// Rule Q(i): certainty about the outcome of measuring `basis` on
/// `prepared`, when exactly one outcome has Born probability 1.
pub fn rule_q_certify<A: Amplitude>(
    agent: &AgentId,
    variable: &str,
    prepared: &StateVector<A>,
    basis: &MeasurementBasis,
    time: TimeStamp,
) -> Result<Option<CertaintyStatement>, AgentError> {
    if !prepared.is_normalized() {
        return Err(AgentError::NotNormalized);
    }
    let dist = born_distribution(prepared, basis)?;
    let mut certain = dist.iter().filter(|(_, p)| p.is_one());
    Ok(match (certain.next(), certain.next()) {
        (Some((value, _)), None) => Some(CertaintyStatement {
            agent: agent.clone(),
            variable: variable.to_string(),
            value: value.clone(),
            time,
            rule: Rule::QPrediction,
            premises: Vec::new(),
        }),
        _ => None,
    })
}

/// Rule Q(ii): the agent observed `outcome`.
pub fn rule_q_observed(agent: &AgentId, variable: &str, outcome: &str, time: TimeStamp) -> CertaintyStatement {
    CertaintyStatement {
        agent: agent.clone(),
        variable: variable.to_string(),
        value: outcome.to_string(),
        time,
        rule: Rule::QObservation,
        premises: Vec::new(),
    }
}

/// Rule C: `agent` is certain that `inner.agent` is certain of `inner`'s
/// claim, so `agent` is certain of that claim.
pub fn rule_c_lift(agent: &AgentId, inner: &CertaintyStatement) -> Result<CertaintyStatement, AgentError> {
    if &inner.agent == agent {
        return Err(AgentError::SelfLift(agent.clone()));
    }
    Ok(CertaintyStatement {
        agent: agent.clone(),
        variable: inner.variable.clone(),
        value: inner.value.clone(),
        time: inner.time,
        rule: Rule::C,
        premises: vec![inner.clone()],
    })
}

/// Every pair of statements with the same variable and time but different
/// values. Empty means consistent.
pub fn rule_s_check(records: &[CertaintyStatement]) -> Vec<(CertaintyStatement, CertaintyStatement)> {
    rule_s_check_with_policy(records, ComparisonTimePolicy::exact())
}

/// Controls the time at which an observed value (Q-ii) is compared with
/// predictions about the same variable. An observation completed at tick
/// `t` is compared as holding at `t + observation_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComparisonTimePolicy {
    pub observation_offset: u32,
}

impl ComparisonTimePolicy {
    pub fn exact() -> Self {
        ComparisonTimePolicy { observation_offset: 0 }
    }

    fn comparison_time(&self, s: &CertaintyStatement) -> TimeStamp {
        match s.rule {
            Rule::QObservation => s.time.plus_ticks(self.observation_offset),
            _ => s.time,
        }
    }
}

/// Default: the observation holds from the tick after the measurement,
/// which is when the recorded value is compared with earlier predictions.
impl Default for ComparisonTimePolicy {
    fn default() -> Self {
        ComparisonTimePolicy { observation_offset: 1 }
    }
}

pub fn rule_s_check_with_policy(
    records: &[CertaintyStatement],
    policy: ComparisonTimePolicy,
) -> Vec<(CertaintyStatement, CertaintyStatement)> {
    let mut out = Vec::new();
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            if a.variable == b.variable && policy.comparison_time(a) == policy.comparison_time(b) && a.value != b.value
            {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// How a conclusion in an inference table is licensed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConclusionRule {
    Q,
    C { via: AgentId },
}

/// A certainty an inference row records, before provenance is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conclusion {
    pub variable: String,
    pub value: Token,
    pub time: TimeStamp,
    pub rule: ConclusionRule,
}

/// `trigger` becomes `output`; an empty `conclusions` list is the
/// "no conclusion drawn" record, which is still a distinct token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceRow {
    pub trigger: Token,
    pub output: Token,
    pub conclusions: Vec<Conclusion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InferenceTable {
    pub rows: Vec<InferenceRow>,
}

impl InferenceTable {
    pub fn new(rows: Vec<InferenceRow>) -> Self {
        InferenceTable { rows }
    }

    pub fn check(&self) -> Result<(), AgentError> {
        let mut triggers = BTreeSet::new();
        let mut outputs = BTreeSet::new();
        for r in &self.rows {
            if !triggers.insert(&r.trigger) {
                return Err(AgentError::DuplicateTrigger(r.trigger.clone()));
            }
            if !outputs.insert(&r.output) {
                return Err(AgentError::NonInjectiveTable(r.output.clone()));
            }
        }
        Ok(())
    }

    pub fn row(&self, trigger: &str) -> Option<&InferenceRow> {
        self.rows.iter().find(|r| r.trigger == trigger)
    }
}

/// Extends an injective partial map on `alphabet` to a permutation: tokens
/// outside the domain are sent, in alphabet order, to tokens outside the
/// image.
fn complete_permutation(register: &Register, partial: &[(Token, Token)]) -> Result<Vec<(Token, Token)>, AgentError> {
    let mut map = BTreeMap::new();
    let mut image = BTreeSet::new();
    for (from, to) in partial {
        for t in [from, to] {
            if !register.contains(t) {
                return Err(AgentError::UnknownToken {
                    register: register.id.to_string(),
                    token: t.clone(),
                });
            }
        }
        if map.insert(from.clone(), to.clone()).is_some() {
            return Err(AgentError::DuplicateTrigger(from.clone()));
        }
        if !image.insert(to.clone()) {
            return Err(AgentError::NonInjectiveTable(to.clone()));
        }
    }
    // Untouched tokens stay put; each chain a -> ... -> c of the table is
    // closed into a cycle by sending c back to a.
    let mut out: Vec<(Token, Token)> = partial.to_vec();
    for t in &register.alphabet {
        if !map.contains_key(t) && !image.contains(t) {
            out.push((t.clone(), t.clone()));
        }
    }
    for start in map.keys().filter(|t| !image.contains(*t)) {
        let mut end = start;
        while let Some(next) = map.get(end) {
            end = next;
        }
        out.push((end.clone(), start.clone()));
    }
    Ok(out)
}

/// The unitary on `memory` that carries each trigger token to its output
/// token. It is a permutation of the alphabet, so an empty table gives the
/// identity.
pub fn compile_inference_unitary(table: &InferenceTable, memory: &Register) -> Result<BasisMapOperator, AgentError> {
    table.check()?;
    if table.rows.is_empty() {
        return Ok(BasisMapOperator::identity(vec![memory.id.clone()]));
    }
    let partial: Vec<(Token, Token)> = table
        .rows
        .iter()
        .map(|r| (r.trigger.clone(), r.output.clone()))
        .collect();
    let perm = complete_permutation(memory, &partial)?;
    let pairs = perm
        .into_iter()
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (vec![a], vec![b]));
    Ok(BasisMapOperator::permutation(vec![memory.id.clone()], pairs)?)
}

/// Reading `source` into `dest`: for each listed source token `s`, the
/// ready token of `dest` becomes the row output. Source tokens without a
/// row leave `dest` unchanged.
pub fn compile_access_unitary(
    table: &InferenceTable,
    source: &Register,
    dest: &Register,
) -> Result<BasisMapOperator, AgentError> {
    table.check()?;
    let mut pairs: Vec<(Label, Label)> = Vec::new();
    for r in &table.rows {
        if !source.contains(&r.trigger) {
            return Err(AgentError::UnknownToken {
                register: source.id.to_string(),
                token: r.trigger.clone(),
            });
        }
        let perm = complete_permutation(dest, &[(dest.ready.clone(), r.output.clone())])?;
        for (from, to) in perm {
            pairs.push((vec![r.trigger.clone(), from], vec![r.trigger.clone(), to]));
        }
    }
    Ok(BasisMapOperator::permutation(
        vec![source.id.clone(), dest.id.clone()],
        pairs,
    )?)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::amplitude::ExactReal;
    use crate::hilbert::{LabelVector, RegisterSpace};

    fn t(tick: u32) -> TimeStamp {
        TimeStamp::at(tick)
    }

    fn s(agent: &str, var: &str, value: &str, time: TimeStamp, rule: Rule) -> CertaintyStatement {
        CertaintyStatement {
            agent: agent.into(),
            variable: var.into(),
            value: value.into(),
            time,
            rule,
            premises: vec![],
        }
    }

    fn spin_space() -> Arc<RegisterSpace> {
        Arc::new(RegisterSpace::new(vec![Register::new("S", &["up", "down"], "up")]).unwrap())
    }

    fn zbasis() -> MeasurementBasis {
        MeasurementBasis::computational(spin_space().get(&"S".into()).unwrap())
    }

    #[test]
    fn q_certify_needs_probability_one() {
        let down = StateVector::<ExactReal>::product(spin_space(), vec!["down".into()]).unwrap();
        let st = rule_q_certify(&"F".into(), "z", &down, &zbasis(), t(10))
            .unwrap()
            .unwrap();
        assert_eq!(st.value, "down");
        assert_eq!(st.rule, Rule::QPrediction);

        let h = ExactReal::sqrt_ratio(1, 2).unwrap();
        let right = StateVector::from_terms(
            spin_space(),
            [(vec!["up".into()], h.clone()), (vec!["down".into()], h.clone())],
        )
        .unwrap();
        assert_eq!(
            rule_q_certify(&"F".into(), "z", &right, &zbasis(), t(10)).unwrap(),
            None
        );

        // |→> is certain in its own {ok, fail}-style basis
        let lab = MeasurementBasis::new(
            "L",
            vec!["S".into()],
            vec![
                (
                    "ok".into(),
                    LabelVector::from_terms([(h.clone(), vec!["down".into()]), (-h.clone(), vec!["up".into()])]),
                ),
                (
                    "fail".into(),
                    LabelVector::from_terms([(h.clone(), vec!["down".into()]), (h.clone(), vec!["up".into()])]),
                ),
            ],
        )
        .unwrap();
        let st = rule_q_certify(&"Fbar".into(), "w", &right, &lab, t(31))
            .unwrap()
            .unwrap();
        assert_eq!((st.value.as_str(), st.time), ("fail", t(31)));

        let unnormalized = right.scale(&ExactReal::from_integer(2));
        assert_eq!(
            rule_q_certify(&"F".into(), "z", &unnormalized, &zbasis(), t(10)),
            Err(AgentError::NotNormalized)
        );
    }

    #[test]
    fn q_observed_records_outcome() {
        let st = rule_q_observed(&"W".into(), "w", "ok", t(30));
        assert_eq!(st, s("W", "w", "ok", t(30), Rule::QObservation));
        let st = rule_q_observed(&"F".into(), "z", "up", t(10));
        assert_eq!((st.value.as_str(), st.time), ("up", t(10)));
    }

    #[test]
    fn c_lift_chains() {
        let fbar = s("Fbar", "w", "fail", t(31), Rule::QPrediction);
        let f = rule_c_lift(&"F".into(), &fbar).unwrap();
        let wbar = rule_c_lift(&"Wbar".into(), &f).unwrap();
        let w = rule_c_lift(&"W".into(), &wbar).unwrap();
        assert_eq!((w.variable.as_str(), w.value.as_str(), w.time), ("w", "fail", t(31)));
        assert_eq!(w.rule, Rule::C);
        assert!(w.grounded_in_q());
        assert_eq!(w.premises[0].premises[0].premises[0], fbar);
        assert_eq!(
            rule_c_lift(&"Fbar".into(), &fbar),
            Err(AgentError::SelfLift("Fbar".into()))
        );
    }

    #[test]
    fn s_check_examples() {
        let fail = s("W", "w", "fail", t(31), Rule::C);
        let ok_next = s("W", "w", "ok", t(31), Rule::QObservation);
        assert_eq!(rule_s_check(&[fail.clone(), ok_next.clone()]).len(), 1);
        assert!(rule_s_check(std::slice::from_ref(&fail)).is_empty());
        let other = s("W", "wbar", "okbar", t(20), Rule::QObservation);
        assert!(rule_s_check(&[fail.clone(), other]).is_empty());

        let observed = s("W", "w", "ok", t(30), Rule::QObservation);
        assert!(rule_s_check(&[fail.clone(), observed.clone()]).is_empty());
        let pairs = rule_s_check_with_policy(&[fail, observed], ComparisonTimePolicy::default());
        assert_eq!(pairs.len(), 1);
    }

    fn memory() -> Register {
        Register::new(
            "FMem",
            &["ready", "z_plus", "z_minus", "z_plus_r_tails", "z_minus_noconcl"],
            "ready",
        )
    }

    fn row(trigger: &str, output: &str) -> InferenceRow {
        InferenceRow {
            trigger: trigger.into(),
            output: output.into(),
            conclusions: vec![],
        }
    }

    #[test]
    fn compile_table_to_permutation() {
        let table = InferenceTable::new(vec![row("z_plus", "z_plus_r_tails"), row("z_minus", "z_minus_noconcl")]);
        let op = compile_inference_unitary(&table, &memory()).unwrap();
        assert!(op.is_identity_on_unlisted());
        let space = Arc::new(RegisterSpace::new(vec![memory()]).unwrap());
        let psi = StateVector::<ExactReal>::product(space, vec!["z_plus".into()]).unwrap();
        let out = op.apply(&psi).unwrap();
        assert_eq!(out.terms().keys().next().unwrap(), &vec!["z_plus_r_tails".to_string()]);

        let empty = compile_inference_unitary(&InferenceTable::default(), &memory()).unwrap();
        assert!(empty.rows().is_empty());
    }

    #[test]
    fn table_must_be_injective() {
        let table = InferenceTable::new(vec![row("z_plus", "ready"), row("z_minus", "ready")]);
        assert_eq!(
            compile_inference_unitary(&table, &memory()),
            Err(AgentError::NonInjectiveTable("ready".into()))
        );
        let dup = InferenceTable::new(vec![row("z_plus", "ready"), row("z_plus", "z_minus")]);
        assert!(matches!(dup.check(), Err(AgentError::DuplicateTrigger(_))));
        let unknown = InferenceTable::new(vec![row("z_plus", "nope")]);
        assert!(matches!(
            compile_inference_unitary(&unknown, &memory()),
            Err(AgentError::UnknownToken { .. })
        ));
    }

    #[test]
    fn access_writes_into_ready_dest() {
        let src = Register::new("WbarMem", &["ready", "a", "b"], "ready");
        let dest = Register::new("WMem", &["ready", "x", "y"], "ready");
        let table = InferenceTable::new(vec![row("a", "x"), row("b", "y")]);
        let op = compile_access_unitary(&table, &src, &dest).unwrap();
        let space = Arc::new(RegisterSpace::new(vec![src, dest]).unwrap());
        let h = ExactReal::sqrt_ratio(1, 2).unwrap();
        let psi = StateVector::from_terms(
            space.clone(),
            [
                (vec!["a".into(), "ready".into()], h.clone()),
                (vec!["b".into(), "ready".into()], h.clone()),
            ],
        )
        .unwrap();
        let out = op.apply(&psi).unwrap();
        let expected = StateVector::from_terms(
            space,
            [
                (vec!["a".into(), "x".into()], h.clone()),
                (vec!["b".into(), "y".into()], h),
            ],
        )
        .unwrap();
        assert_eq!(out, expected);
    }
}
