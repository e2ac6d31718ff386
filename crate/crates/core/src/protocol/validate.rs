use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::agents::{AgentId, ConclusionRule, InferenceTable};
use crate::amplitude::ExactReal;
use crate::hilbert::{LabelVector, Register, RegisterId};
use crate::time::TimeStamp;

use super::{Action, Schedule};

/// A semantic problem, attached to the offending step when there is one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub step: Option<usize>,
    pub at: Option<TimeStamp>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.step, self.at) {
            (Some(i), Some(t)) => write!(f, "step {} at {}: {}", i + 1, t, self.message),
            _ => f.write_str(&self.message),
        }
    }
}

struct Checker<'a> {
    schedule: &'a Schedule,
    out: Vec<Diagnostic>,
    step: Option<(usize, TimeStamp)>,
}

impl<'a> Checker<'a> {
    fn report(&mut self, message: impl Into<String>) {
        self.out.push(Diagnostic {
            step: self.step.map(|s| s.0),
            at: self.step.map(|s| s.1),
            message: message.into(),
        });
    }

    fn register(&mut self, id: &RegisterId) -> Option<&'a Register> {
        let r = self.schedule.register(id);
        if r.is_none() {
            self.report(format!("register {id} is not declared"));
        }
        r
    }

    fn memory_of(&mut self, agent: &AgentId) -> Option<&'a Register> {
        match self.schedule.agent(agent) {
            Some(a) => self.register(&a.memory),
            None => {
                self.report(format!("agent {agent} is not declared"));
                None
            }
        }
    }

    fn token(&mut self, register: &Register, token: &str) -> bool {
        let ok = register.contains(token);
        if !ok {
            self.report(format!("token {token} is not in the alphabet of {}", register.id));
        }
        ok
    }

    /// Tokens of `v` against `registers`, one per register.
    fn vector(&mut self, v: &LabelVector, registers: &[&Register], what: &str) {
        if v.is_empty() {
            self.report(format!("{what} is the zero vector"));
        }
        for (label, _) in v.iter() {
            if label.len() != registers.len() {
                self.report(format!(
                    "{what} has a ket with {} tokens on {} registers",
                    label.len(),
                    registers.len()
                ));
                continue;
            }
            for (r, t) in registers.iter().zip(label) {
                self.token(r, t);
            }
        }
    }

    fn normalized(&mut self, v: &LabelVector, what: &str) {
        if v.norm_sqr() != ExactReal::one() {
            self.report(format!("{what} is not normalized (norm squared {})", v.norm_sqr()));
        }
    }

    fn table(&mut self, table: &InferenceTable, inputs: &Register, outputs: &Register) {
        if let Err(e) = table.check() {
            self.report(e.to_string());
        }
        for row in &table.rows {
            self.token(inputs, &row.trigger);
            self.token(outputs, &row.output);
        }
    }
}

/// Every semantic problem in `schedule`; empty means it can be run.
pub fn validate(schedule: &Schedule) -> Vec<Diagnostic> {
    let mut c = Checker {
        schedule,
        out: Vec::new(),
        step: None,
    };

    let mut names = BTreeSet::new();
    for r in &schedule.registers {
        if !names.insert(&r.id) {
            c.report(format!("register {} is declared twice", r.id));
        }
        if let Err(e) = r.check() {
            c.report(e.to_string());
        }
    }
    let mut agents = BTreeSet::new();
    let mut memories = BTreeSet::new();
    for a in &schedule.agents {
        if !agents.insert(&a.id) {
            c.report(format!("agent {} is declared twice", a.id));
        }
        if !memories.insert(&a.memory) {
            c.report(format!("register {} is the memory of two agents", a.memory));
        }
        c.register(&a.memory);
    }

    check_timeline(&mut c);

    // Variables defined by measurements and reads, for rule-Q conclusions.
    let mut defined: BTreeSet<&str> = BTreeSet::new();
    let mut bases: BTreeMap<&str, &super::BasisSpec> = BTreeMap::new();
    for step in &schedule.steps {
        match &step.action {
            Action::Measure { variable, .. } => {
                defined.insert(variable);
            }
            Action::AccessMemory { variable: Some(v), .. } => {
                defined.insert(v);
            }
            _ => {}
        }
    }

    for (i, step) in schedule.steps.iter().enumerate() {
        c.step = Some((i, step.at));
        match &step.action {
            Action::PrepareRandom { register, state } => {
                if let Some(r) = c.register(register) {
                    c.vector(state, &[r], "prepared state");
                    c.normalized(state, "prepared state");
                }
            }
            Action::ConditionalPrepare {
                source,
                target,
                branches,
            } => {
                if source == target {
                    c.report("source and target are the same register");
                }
                let (s, t) = (c.register(source), c.register(target));
                let mut seen = BTreeSet::new();
                for (tok, v) in branches {
                    if !seen.insert(tok) {
                        c.report(format!("branch {tok} is listed twice"));
                    }
                    if let Some(s) = s {
                        c.token(s, tok);
                    }
                    if let Some(t) = t {
                        c.vector(v, &[t], &format!("branch {tok}"));
                    }
                    c.normalized(v, &format!("branch {tok}"));
                }
            }
            Action::Measure {
                agent,
                basis,
                dest,
                record,
                ..
            } => {
                let memory = c.memory_of(agent);
                if memory.is_some_and(|m| &m.id != dest) {
                    c.report(format!("{agent} records into {dest}, which is not its memory"));
                }
                if let Some(prev) = bases.insert(&basis.name, basis) {
                    if prev != basis {
                        c.report(format!("basis {} is defined twice differently", basis.name));
                    }
                }
                let targets: Vec<&Register> = basis.targets.iter().filter_map(|t| c.register(t)).collect();
                if basis.targets.contains(dest) {
                    c.report(format!("{dest} is both measured and written"));
                }
                if targets.len() == basis.targets.len() {
                    for (tok, v) in &basis.outcomes {
                        c.vector(v, &targets, &format!("outcome {tok} of basis {}", basis.name));
                    }
                    if let Err(e) = basis.build() {
                        c.report(e.to_string());
                    }
                }
                if let Some(d) = c.register(dest) {
                    let outcomes: BTreeSet<&String> = basis.outcomes.iter().map(|o| &o.0).collect();
                    if record.is_empty() {
                        for o in &outcomes {
                            c.token(d, o);
                        }
                    }
                    let mut written = BTreeSet::new();
                    let mut keys = BTreeSet::new();
                    for r in record {
                        let prior = r.prior.as_deref().unwrap_or(&d.ready);
                        c.token(d, prior);
                        c.token(d, &r.token);
                        if !outcomes.contains(&r.outcome) {
                            c.report(format!("{} is not an outcome of basis {}", r.outcome, basis.name));
                        }
                        if !keys.insert((prior, &r.outcome)) {
                            c.report(format!("record entry {prior}/{} is listed twice", r.outcome));
                        }
                        if !written.insert((&r.outcome, &r.token)) {
                            c.report(format!("record map writes {} twice for outcome {}", r.token, r.outcome));
                        }
                    }
                }
            }
            Action::Infer { agent, table, .. } => {
                if let Some(m) = c.memory_of(agent) {
                    c.table(table, m, m);
                }
                check_conclusions(&mut c, agent, table, &defined);
            }
            Action::AccessMemory {
                agent, source, table, ..
            } => {
                let m = c.memory_of(agent);
                let s = c.register(source);
                if m.is_some_and(|m| &m.id == source) {
                    c.report(format!("{agent} reads its own memory"));
                }
                if let (Some(m), Some(s)) = (m, s) {
                    c.table(table, s, m);
                }
                check_conclusions(&mut c, agent, table, &defined);
            }
            Action::HaltCheck { conditions } => {
                if conditions.is_empty() {
                    c.report("halt check has no conditions");
                }
                for cond in conditions {
                    let Some(r) = c.register(&cond.register) else {
                        continue;
                    };
                    let recorded = schedule.steps.iter().any(|s| match &s.action {
                        Action::Measure { basis, dest, .. } => {
                            dest == &cond.register && basis.outcomes.iter().any(|o| o.0 == cond.value)
                        }
                        _ => false,
                    });
                    if !recorded && !r.contains(&cond.value) {
                        c.report(format!(
                            "{} is neither a token of {} nor an outcome recorded into it",
                            cond.value, cond.register
                        ));
                    }
                }
            }
        }
    }
    c.out
}

fn check_timeline(c: &mut Checker<'_>) {
    let steps = &c.schedule.steps;
    if steps.is_empty() {
        c.report("schedule has no steps");
        return;
    }
    let round = steps[0].at.round();
    for (i, pair) in steps.windows(2).enumerate() {
        if pair[1].at <= pair[0].at {
            c.step = Some((i + 1, pair[1].at));
            c.report(format!("time {} does not follow {}", pair[1].at, pair[0].at));
        }
    }
    for (i, s) in steps.iter().enumerate() {
        if s.at.round() != round {
            c.step = Some((i, s.at));
            c.report(format!(
                "step is in round {}, the schedule starts in round {round}",
                s.at.round()
            ));
        }
    }
    let halts: Vec<usize> = steps
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.action, Action::HaltCheck { .. }))
        .map(|(i, _)| i)
        .collect();
    c.step = None;
    match halts.as_slice() {
        [i] if *i == steps.len() - 1 => {}
        [] => c.report("schedule has no halt check"),
        [_] => c.report("the halt check must be the last step"),
        _ => c.report("schedule has more than one halt check"),
    }
}

fn check_conclusions(c: &mut Checker<'_>, agent: &AgentId, table: &InferenceTable, defined: &BTreeSet<&str>) {
    for row in &table.rows {
        for concl in &row.conclusions {
            match &concl.rule {
                ConclusionRule::Q => {
                    if !defined.contains(concl.variable.as_str()) {
                        c.report(format!(
                            "no step measures or reads {}, so rule Q cannot certify it",
                            concl.variable
                        ));
                    }
                }
                ConclusionRule::C { via } => match c.schedule.agent(via) {
                    None => c.report(format!("rule C via undeclared agent {via}")),
                    Some(_) if via == agent => c.report(format!("{agent} cannot apply rule C to itself")),
                    Some(a) if !a.conforming => c.report(format!("rule C via {via}, which is not a conforming agent")),
                    Some(_) => {}
                },
            }
        }
    }
}
