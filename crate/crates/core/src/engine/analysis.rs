use std::collections::BTreeMap;

use serde::Serialize;

use crate::agents::{
    rule_q_certify, rule_s_check_with_policy, AgentId, CertaintyStatement, ComparisonTimePolicy, ConclusionRule,
};
use crate::amplitude::Amplitude;
use crate::hilbert::{born_distribution, rewrite_in_basis, MeasurementBasis, RegisterId, StateVector, Token};
use crate::protocol::Action;
use crate::time::TimeStamp;

use super::report::NumberDump;
use super::{Engine, EngineError, RoundTrace};

/// One agent's memory in one branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentRecord {
    pub agent: AgentId,
    pub register: RegisterId,
    pub token: Token,
    pub description: String,
    pub statements: Vec<CertaintyStatement>,
}

/// Two statements of one agent that rule S forbids holding together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub agent: AgentId,
    pub first: CertaintyStatement,
    pub second: CertaintyStatement,
}

/// A term of the presented global state, decoded into agents' records.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport<A> {
    pub labels: Vec<(RegisterId, Token)>,
    pub amplitude: A,
    pub probability: A,
    pub records: Vec<AgentRecord>,
    pub violations: Vec<Violation>,
}

impl<A: Amplitude> BranchReport<A> {
    pub fn token(&self, register: &str) -> Option<&str> {
        self.labels
            .iter()
            .find(|(r, _)| r.as_str() == register)
            .map(|(_, t)| t.as_str())
    }
}

/// Serializable form of a [`BranchReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSummary {
    pub labels: BTreeMap<String, String>,
    pub amplitude: NumberDump,
    pub probability: NumberDump,
    pub records: Vec<AgentRecord>,
    pub violations: Vec<Violation>,
}

impl<A: Amplitude> BranchReport<A> {
    pub fn summary(&self) -> BranchSummary {
        BranchSummary {
            labels: self.labels.iter().map(|(r, t)| (r.to_string(), t.clone())).collect(),
            amplitude: NumberDump::of(&self.amplitude),
            probability: NumberDump::of(&self.probability),
            records: self.records.clone(),
            violations: self.violations.clone(),
        }
    }
}

/// Audit of one rule-Q conclusion in an inference table: conditioned on the
/// row's output token, does the predicted value have Born probability 1?
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub agent: AgentId,
    pub step_time: TimeStamp,
    pub token: Token,
    pub variable: String,
    pub value: Token,
    pub time: TimeStamp,
    /// False when the row's output token never occurs in the evolved state.
    pub reachable: bool,
    pub probability: Option<NumberDump>,
    pub certified: bool,
}

impl Engine {
    /// `psi` rewritten in each of `bases` in turn.
    pub fn present<A: Amplitude>(
        &self,
        psi: &StateVector<A>,
        bases: &[MeasurementBasis],
    ) -> Result<StateVector<A>, EngineError> {
        let mut out = psi.clone();
        for b in bases {
            out = rewrite_in_basis(&out, b)?;
        }
        Ok(out)
    }

    /// Every branch of `psi` (the state at `t`), presented in the bases
    /// measured so far and decoded into memory records.
    pub fn branches<A: Amplitude>(
        &self,
        psi: &StateVector<A>,
        t: TimeStamp,
        policy: ComparisonTimePolicy,
    ) -> Result<Vec<BranchReport<A>>, EngineError> {
        let presented = self.present(psi, &self.presentation_bases(t))?;
        let space = presented.space().clone();
        let mut out = Vec::with_capacity(presented.len());
        for (label, amp) in presented.terms() {
            let labels: Vec<(RegisterId, Token)> = space
                .registers()
                .iter()
                .zip(label)
                .map(|(r, t)| (r.id.clone(), t.clone()))
                .collect();
            let mut records = Vec::new();
            let mut violations = Vec::new();
            for (register, token) in &labels {
                let Some(agent) = self.book.owner(register) else {
                    continue;
                };
                let statements = self.book.statements(register, token).to_vec();
                for (first, second) in rule_s_check_with_policy(&statements, policy) {
                    violations.push(Violation {
                        agent: agent.clone(),
                        first,
                        second,
                    });
                }
                records.push(AgentRecord {
                    agent: agent.clone(),
                    register: register.clone(),
                    token: token.clone(),
                    description: self.book.describe(register, token),
                    statements,
                });
            }
            out.push(BranchReport {
                labels,
                amplitude: amp.clone(),
                probability: amp.mul(amp),
                records,
                violations,
            });
        }
        Ok(out)
    }

    /// Branches in which some agent's records break rule S.
    pub fn detect_violations<A: Amplitude>(
        &self,
        psi: &StateVector<A>,
        t: TimeStamp,
        policy: ComparisonTimePolicy,
    ) -> Result<Vec<BranchReport<A>>, EngineError> {
        Ok(self
            .branches(psi, t, policy)?
            .into_iter()
            .filter(|b| !b.violations.is_empty())
            .collect())
    }

    /// Joint probability of the values recorded in the halt registers.
    pub fn outcome_distribution<A: Amplitude>(
        &self,
        psi: &StateVector<A>,
    ) -> Result<BTreeMap<Vec<Token>, A>, EngineError> {
        let registers: Vec<RegisterId> = self.halt.iter().map(|c| c.register.clone()).collect();
        let marginal = psi.marginal(&registers)?;
        let mut out: BTreeMap<Vec<Token>, A> = BTreeMap::new();
        for (label, p) in marginal {
            let key: Vec<Token> = registers
                .iter()
                .zip(&label)
                .map(|(r, t)| self.book.observed_value(r, t).to_string())
                .collect();
            let e = out.entry(key).or_insert_with(A::zero);
            *e = e.add(&p);
        }
        Ok(out)
    }

    /// Probability that a round ends with the halt predicate satisfied.
    pub fn halt_probability<A: Amplitude>(&self, psi: &StateVector<A>) -> Result<A, EngineError> {
        Ok(self
            .outcome_distribution(psi)?
            .remove(&self.halt_key())
            .unwrap_or_else(A::zero))
    }

    /// The step that measures or reads `variable`, preferring the last one
    /// at or before `time`, and the basis it uses.
    fn defining_step(&self, variable: &str, time: TimeStamp) -> Option<(usize, MeasurementBasis)> {
        let candidates: Vec<(usize, MeasurementBasis)> = self
            .schedule
            .steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match &s.action {
                Action::Measure { basis, variable: v, .. } if v == variable => basis.build().ok().map(|b| (i, b)),
                Action::AccessMemory {
                    source,
                    variable: Some(v),
                    ..
                } if v == variable => self.space.get(source).map(|r| (i, MeasurementBasis::computational(r))),
                _ => None,
            })
            .collect();
        let before = candidates.iter().rfind(|(i, _)| self.steps[*i].at <= time).cloned();
        before.or_else(|| candidates.into_iter().next())
    }

    /// Checks every rule-Q conclusion of the schedule against the state.
    /// Predictions about a later measurement evolve the conditioned state up
    /// to that measurement; claims about an earlier one are read off the
    /// conditioned state directly.
    pub fn certifications<A: Amplitude>(&self, trace: &RoundTrace<A>) -> Result<Vec<Certification>, EngineError> {
        let mut out = Vec::new();
        for (i, step) in self.schedule.steps.iter().enumerate() {
            let (agent, table) = match &step.action {
                Action::Infer { agent, table, .. } | Action::AccessMemory { agent, table, .. } => (agent, table),
                _ => continue,
            };
            let memory = self
                .schedule
                .agent(agent)
                .map(|a| a.memory.clone())
                .expect("validated agent");
            let state = &trace.after[i].1;
            for row in &table.rows {
                for c in &row.conclusions {
                    if c.rule != ConclusionRule::Q {
                        continue;
                    }
                    let mut cert = Certification {
                        agent: agent.clone(),
                        step_time: step.at,
                        token: row.output.clone(),
                        variable: c.variable.clone(),
                        value: c.value.clone(),
                        time: c.time,
                        reachable: false,
                        probability: None,
                        certified: false,
                    };
                    let conditioned = state.restrict(&memory, &row.output)?;
                    let weight = conditioned.norm_sqr();
                    if weight.is_negligible() {
                        out.push(cert);
                        continue;
                    }
                    let conditioned =
                        conditioned.scale(&weight.inv_sqrt().map_err(crate::hilbert::HilbertError::from)?);
                    let (j, basis) = self
                        .defining_step(&c.variable, c.time)
                        .ok_or_else(|| EngineError::UndefinedVariable(c.variable.clone()))?;
                    let evaluated = if j > i {
                        self.evolve_steps(&conditioned, i + 1..j)?
                    } else {
                        conditioned
                    };
                    let p = born_distribution(&evaluated, &basis)?
                        .remove(&c.value)
                        .unwrap_or_else(A::zero);
                    let statement = rule_q_certify(agent, &c.variable, &evaluated, &basis, c.time)?;
                    cert.reachable = true;
                    cert.probability = Some(NumberDump::of(&p));
                    cert.certified = statement.is_some_and(|s| s.value == c.value);
                    out.push(cert);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::ExactReal;
    use crate::protocol::canonical_fr_schedule;

    fn engine() -> Engine {
        Engine::new(canonical_fr_schedule()).unwrap()
    }

    #[test]
    fn distribution_of_recorded_outcomes() {
        let e = engine();
        let trace = e.evolve_round::<ExactReal>().unwrap();
        let d = e.outcome_distribution(trace.final_state()).unwrap();
        let key = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
        assert_eq!(d[&key("okbar", "ok")], ExactReal::from_ratio(1, 12));
        assert_eq!(d[&key("okbar", "fail")], ExactReal::from_ratio(1, 12));
        assert_eq!(d[&key("failbar", "ok")], ExactReal::from_ratio(1, 12));
        assert_eq!(d[&key("failbar", "fail")], ExactReal::from_ratio(3, 4));
        assert_eq!(
            e.halt_probability(trace.final_state()).unwrap(),
            ExactReal::from_ratio(1, 12)
        );
    }

    #[test]
    fn single_violating_branch() {
        let e = engine();
        let trace = e.evolve_round::<ExactReal>().unwrap();
        let t = TimeStamp::at(31);
        let v = e
            .detect_violations(trace.final_state(), t, ComparisonTimePolicy::default())
            .unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].probability, ExactReal::from_ratio(1, 12));
        assert_eq!(v[0].token("WMem"), Some("w_fail_ok"));
        assert_eq!(v[0].violations[0].agent.as_str(), "W");
        let exact = e
            .detect_violations(trace.final_state(), t, ComparisonTimePolicy::exact())
            .unwrap();
        assert!(exact.is_empty());
    }

    #[test]
    fn every_rule_q_conclusion_is_certified() {
        let e = engine();
        let trace = e.evolve_round::<ExactReal>().unwrap();
        let certs = e.certifications(&trace).unwrap();
        assert_eq!(certs.len(), 3);
        for c in &certs {
            assert!(c.certified, "{c:?}");
            assert_eq!(c.probability.as_ref().unwrap().exact.as_deref(), Some("1"));
        }
    }
}
