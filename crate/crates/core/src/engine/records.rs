//! What each memory token means: the certainty statements an agent holds
//! when its memory register is in that basis state. The catalogue is built
//! from the schedule alone, before any state is evolved.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::agents::{rule_c_lift, rule_q_observed, AgentId, CertaintyStatement, ConclusionRule, InferenceTable, Rule};
use crate::hilbert::{RegisterId, Token};
use crate::protocol::{Action, Schedule};
use crate::time::TimeStamp;

use super::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MemoryEntry {
    pub statements: Vec<CertaintyStatement>,
    /// Outcome value the token records, if it records an observation.
    pub observed: Option<Token>,
}

#[derive(Debug, Clone, Default)]
pub struct RecordBook {
    entries: BTreeMap<(RegisterId, Token), MemoryEntry>,
    owners: BTreeMap<RegisterId, AgentId>,
}

impl RecordBook {
    pub fn build(schedule: &Schedule) -> Result<Self, EngineError> {
        let mut book = RecordBook::default();
        for a in &schedule.agents {
            book.owners.insert(a.memory.clone(), a.id.clone());
            if let Some(r) = schedule.register(&a.memory) {
                book.entries
                    .insert((a.memory.clone(), r.ready.clone()), MemoryEntry::default());
            }
        }
        for step in &schedule.steps {
            match &step.action {
                Action::Measure {
                    agent,
                    basis,
                    dest,
                    variable,
                    record,
                } => {
                    let ready = schedule.register(dest).map(|r| r.ready.clone()).unwrap_or_default();
                    let rules: Vec<(Token, Token, Token)> = if record.is_empty() {
                        basis
                            .outcomes
                            .iter()
                            .map(|(o, _)| (ready.clone(), o.clone(), o.clone()))
                            .collect()
                    } else {
                        record
                            .iter()
                            .map(|r| {
                                let prior = r.prior.clone().unwrap_or_else(|| ready.clone());
                                (prior, r.outcome.clone(), r.token.clone())
                            })
                            .collect()
                    };
                    for (prior, outcome, token) in rules {
                        let mut entry = book.entry(dest, &prior).cloned().unwrap_or_default();
                        entry
                            .statements
                            .push(rule_q_observed(agent, variable, &outcome, step.at));
                        entry.observed = Some(outcome);
                        book.define(dest, &token, entry)?;
                    }
                }
                Action::Infer { agent, table, .. } => {
                    let memory = book.memory_of(schedule, agent)?;
                    for row in &table.rows {
                        let base = book.entry(&memory, &row.trigger).cloned().unwrap_or_default();
                        let entry = book.conclude(schedule, agent, base, table, &row.trigger)?;
                        book.define(&memory, &row.output, entry)?;
                    }
                }
                Action::AccessMemory {
                    agent, variable, table, ..
                } => {
                    let memory = book.memory_of(schedule, agent)?;
                    let ready = schedule.register(&memory).map(|r| r.ready.clone()).unwrap_or_default();
                    for row in &table.rows {
                        let mut base = book.entry(&memory, &ready).cloned().unwrap_or_default();
                        if let Some(v) = variable {
                            base.statements.push(rule_q_observed(agent, v, &row.trigger, step.at));
                            base.observed = Some(row.trigger.clone());
                        }
                        let entry = book.conclude(schedule, agent, base, table, &row.trigger)?;
                        book.define(&memory, &row.output, entry)?;
                    }
                }
                _ => {}
            }
        }
        Ok(book)
    }

    fn memory_of(&self, schedule: &Schedule, agent: &AgentId) -> Result<RegisterId, EngineError> {
        schedule
            .agent(agent)
            .map(|a| a.memory.clone())
            .ok_or_else(|| EngineError::Provenance(format!("agent {agent} is not declared")))
    }

    /// Appends the conclusions of the row for `trigger` to `base`.
    fn conclude(
        &self,
        schedule: &Schedule,
        agent: &AgentId,
        mut base: MemoryEntry,
        table: &InferenceTable,
        trigger: &str,
    ) -> Result<MemoryEntry, EngineError> {
        let row = table.row(trigger).expect("row for trigger");
        let evidence = base.statements.clone();
        for c in &row.conclusions {
            let statement = match &c.rule {
                ConclusionRule::Q => CertaintyStatement {
                    agent: agent.clone(),
                    variable: c.variable.clone(),
                    value: c.value.clone(),
                    time: c.time,
                    rule: Rule::QPrediction,
                    premises: evidence.clone(),
                },
                ConclusionRule::C { via } => {
                    let memory = self.memory_of(schedule, via)?;
                    let premise = self
                        .entries
                        .range((memory.clone(), String::new())..)
                        .take_while(|((r, _), _)| r == &memory)
                        .flat_map(|(_, e)| e.statements.iter())
                        .find(|s| {
                            &s.agent == via
                                && s.variable == c.variable
                                && s.value == c.value
                                && s.time == c.time
                        })
                        .ok_or_else(|| {
                            EngineError::Provenance(format!(
                                "{agent} concludes {} = {} at {} by rule C via {via}, but no memory state of {via} holds that certainty",
                                c.variable, c.value, c.time
                            ))
                        })?;
                    rule_c_lift(agent, premise)?
                }
            };
            base.statements.push(statement);
        }
        Ok(base)
    }

    fn define(&mut self, register: &RegisterId, token: &str, entry: MemoryEntry) -> Result<(), EngineError> {
        let key = (register.clone(), token.to_string());
        match self.entries.get(&key) {
            Some(prev) if prev != &entry => Err(EngineError::RecordConflict {
                register: register.to_string(),
                token: token.to_string(),
            }),
            _ => {
                self.entries.insert(key, entry);
                Ok(())
            }
        }
    }

    pub fn entry(&self, register: &RegisterId, token: &str) -> Option<&MemoryEntry> {
        self.entries.get(&(register.clone(), token.to_string()))
    }

    pub fn statements(&self, register: &RegisterId, token: &str) -> &[CertaintyStatement] {
        self.entry(register, token)
            .map(|e| e.statements.as_slice())
            .unwrap_or(&[])
    }

    /// The recorded outcome, or the token itself when it records none.
    pub fn observed_value<'a>(&'a self, register: &RegisterId, token: &'a str) -> &'a str {
        self.entry(register, token)
            .and_then(|e| e.observed.as_deref())
            .unwrap_or(token)
    }

    pub fn owner(&self, register: &RegisterId) -> Option<&AgentId> {
        self.owners.get(register)
    }

    pub fn memories(&self) -> impl Iterator<Item = (&RegisterId, &AgentId)> {
        self.owners.iter()
    }

    /// Human-readable content of a memory state, generated from its statements.
    pub fn describe(&self, register: &RegisterId, token: &str) -> String {
        let statements = self.statements(register, token);
        if statements.is_empty() {
            return "(empty)".into();
        }
        let parts: Vec<String> = statements.iter().map(describe_statement).collect();
        let mut s = parts.join("; ");
        let concluded = statements.iter().any(|s| s.rule != Rule::QObservation);
        if !concluded {
            s.push_str("; no conclusion");
        }
        s
    }

    /// Every statement recorded by some token of `register`, with the token.
    pub fn catalogue(&self, register: &RegisterId) -> Vec<(&Token, &MemoryEntry)> {
        self.entries
            .iter()
            .filter(|((r, _), _)| r == register)
            .map(|((_, t), e)| (t, e))
            .collect()
    }

    pub fn time_of(&self, register: &RegisterId, token: &str) -> Option<TimeStamp> {
        self.statements(register, token).iter().map(|s| s.time).max()
    }
}

fn describe_statement(s: &CertaintyStatement) -> String {
    match s.rule {
        Rule::QObservation => format!("observed {} = {} at {}", s.variable, s.value, s.time),
        Rule::QPrediction => format!("certain {} = {} at {} (rule Q)", s.variable, s.value, s.time),
        Rule::C => format!(
            "certain {} = {} at {} (rule C via {})",
            s.variable,
            s.value,
            s.time,
            s.premises.first().map(|p| p.agent.as_str()).unwrap_or("?")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::canonical_fr_schedule;

    #[test]
    fn canonical_catalogue() {
        let book = RecordBook::build(&canonical_fr_schedule()).unwrap();
        let w = book.statements(&"WMem".into(), "w_fail_ok");
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].rule, Rule::C);
        assert!(w[0].grounded_in_q());
        // W <- Wbar <- F <- Fbar, whose prediction rests on observing r
        let chain: Vec<(&str, Rule)> = std::iter::successors(Some(&w[0]), |s| s.premises.first())
            .map(|s| (s.agent.as_str(), s.rule))
            .collect();
        assert_eq!(
            chain,
            [
                ("W", Rule::C),
                ("Wbar", Rule::C),
                ("F", Rule::C),
                ("Fbar", Rule::QPrediction),
                ("Fbar", Rule::QObservation),
            ]
        );
        assert_eq!(w[1].rule, Rule::QObservation);
        assert_eq!((w[1].value.as_str(), w[1].time), ("ok", TimeStamp::at(30)));

        assert_eq!(book.observed_value(&"WbarMem".into(), "okbar_w_fail"), "okbar");
        assert_eq!(book.observed_value(&"WMem".into(), "w_fail_ok"), "ok");
        assert_eq!(book.observed_value(&"WMem".into(), "noconcl"), "noconcl");
        assert_eq!(
            book.describe(&"FMem".into(), "z_minus_noconcl"),
            "observed z = down at 0:10; no conclusion"
        );
        assert_eq!(
            book.describe(&"FbarMem".into(), "tails_w_fail"),
            "observed r = tails at 0:02; certain w = fail at 0:31 (rule Q)"
        );
        assert_eq!(book.owner(&"FMem".into()).map(|a| a.as_str()), Some("F"));
    }

    #[test]
    fn missing_rule_c_premise_is_an_error() {
        let mut s = canonical_fr_schedule();
        // Fbar no longer concludes anything about w.
        if let Action::AccessMemory { table, .. } = &mut s.steps[2].action {
            table.rows[1].conclusions.clear();
        }
        assert!(matches!(RecordBook::build(&s), Err(EngineError::Provenance(_))));
    }
}
