//! Runs a schedule: compiles every step to an operator on the global state,
//! evolves one round, and extracts checkpoints, outcome statistics and
//! rule-S violations.

mod analysis;
mod collapse;
mod expected;
mod records;
mod report;
mod rng;
mod sampling;

use std::sync::Arc;

use thiserror::Error;

use crate::agents::{compile_access_unitary, compile_inference_unitary, AgentError, AgentId};
use crate::amplitude::Amplitude;
use crate::hilbert::{
    record_measurement, BasisMapOperator, HilbertError, MeasurementBasis, RecordMap, RegisterId, RegisterSpace,
    StateVector,
};
use crate::protocol::{validate, Action, Diagnostic, HaltCondition, Schedule};
use crate::time::TimeStamp;

pub use analysis::{AgentRecord, BranchReport, BranchSummary, Certification, Violation};
pub use expected::{canonical_expected, CheckpointCheck, ExpectedCheckpoint, ExpectedTerm, Mismatch};
pub use records::{MemoryEntry, RecordBook};
pub use report::{build_report, render_table, CheckpointDump, HaltDump, NumberDump, RunConfig, RunReport};
pub use rng::SplitMix64;
pub use sampling::{RunSample, SamplingSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("schedule is invalid:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("{0}")]
    Provenance(String),
    #[error("memory token {token} of {register} is given two different meanings")]
    RecordConflict { register: String, token: String },
    #[error("no step defines variable {0}")]
    UndefinedVariable(String),
    #[error("run {} did not halt within {} rounds", .partial.run, .partial.rounds)]
    MaxRoundsExceeded { partial: Box<RunSample> },
    #[error("the outcome distribution does not sum to one")]
    NotNormalized,
}

/// How rounds are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact amplitudes in ℚ[√2, √3].
    Exact,
    /// The same unitary evolution with `f64` amplitudes.
    Float,
    /// Every recorded measurement or read collapses the state.
    Collapse,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
            Mode::Collapse => "collapse",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            "collapse" => Ok(Mode::Collapse),
            _ => Err(format!("unknown mode {s:?}; expected exact, float or collapse")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    Unitary(BasisMapOperator),
    Record {
        basis: MeasurementBasis,
        dest: RegisterId,
        map: RecordMap,
    },
    /// Rule-S check by `agent`; leaves the state unchanged.
    Check {
        agent: AgentId,
    },
    Halt,
}

#[derive(Debug, Clone)]
pub struct CompiledStep {
    pub index: usize,
    pub at: TimeStamp,
    pub op: Op,
    /// Register whose content this step records, if any.
    pub records_into: Option<RegisterId>,
}

impl CompiledStep {
    pub fn apply<A: Amplitude>(&self, psi: &StateVector<A>) -> Result<StateVector<A>, EngineError> {
        Ok(match &self.op {
            Op::Unitary(u) => u.apply(psi)?,
            Op::Record { basis, dest, map } => record_measurement(psi, basis, dest, map)?,
            Op::Check { .. } | Op::Halt => psi.clone(),
        })
    }
}

/// The state after each step of one round.
#[derive(Debug, Clone)]
pub struct RoundTrace<A> {
    pub initial: StateVector<A>,
    pub after: Vec<(TimeStamp, StateVector<A>)>,
}

impl<A: Amplitude> RoundTrace<A> {
    /// State after the last step at or before `t`.
    pub fn state_at(&self, t: TimeStamp) -> &StateVector<A> {
        self.after
            .iter()
            .rev()
            .find(|(at, _)| *at <= t)
            .map(|(_, s)| s)
            .unwrap_or(&self.initial)
    }

    pub fn final_state(&self) -> &StateVector<A> {
        self.after.last().map(|(_, s)| s).unwrap_or(&self.initial)
    }
}

/// A validated schedule with every step compiled.
#[derive(Debug, Clone)]
pub struct Engine {
    schedule: Schedule,
    space: Arc<RegisterSpace>,
    steps: Vec<CompiledStep>,
    book: RecordBook,
    halt: Vec<HaltCondition>,
}

impl Engine {
    pub fn new(schedule: Schedule) -> Result<Self, EngineError> {
        let diagnostics = validate(&schedule);
        if !diagnostics.is_empty() {
            return Err(EngineError::Invalid(diagnostics));
        }
        Self::unvalidated(schedule)
    }

    /// Compiles `schedule` without the semantic checks, for ablations of a
    /// valid schedule (a removed measurement leaves predictions about its
    /// variable uncertifiable). Steps that cannot be compiled still fail.
    pub fn unvalidated(schedule: Schedule) -> Result<Self, EngineError> {
        let space = Arc::new(schedule.space()?);
        let mut steps = Vec::with_capacity(schedule.steps.len());
        for (index, step) in schedule.steps.iter().enumerate() {
            let (op, records_into) = compile_step(&schedule, &space, &step.action)?;
            steps.push(CompiledStep {
                index,
                at: step.at,
                op,
                records_into,
            });
        }
        let book = RecordBook::build(&schedule)?;
        let halt = schedule.halt_conditions().map(|c| c.to_vec()).unwrap_or_default();
        Ok(Engine {
            schedule,
            space,
            steps,
            book,
            halt,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn space(&self) -> &Arc<RegisterSpace> {
        &self.space
    }

    pub fn steps(&self) -> &[CompiledStep] {
        &self.steps
    }

    pub fn records(&self) -> &RecordBook {
        &self.book
    }

    pub fn halt_conditions(&self) -> &[HaltCondition] {
        &self.halt
    }

    /// Outcome values that end the round, in halt-condition order.
    pub fn halt_key(&self) -> Vec<String> {
        self.halt.iter().map(|c| c.value.clone()).collect()
    }

    pub fn initial_state<A: Amplitude>(&self) -> StateVector<A> {
        StateVector::ready(self.space.clone())
    }

    /// One round of unitary evolution from the all-ready state.
    pub fn evolve_round<A: Amplitude>(&self) -> Result<RoundTrace<A>, EngineError> {
        let initial = self.initial_state::<A>();
        let mut after = Vec::with_capacity(self.steps.len());
        let mut psi = initial.clone();
        for step in &self.steps {
            psi = step.apply(&psi)?;
            after.push((step.at, psi.clone()));
        }
        Ok(RoundTrace { initial, after })
    }

    /// Like [`Engine::evolve_round`], but stops at the first failing step and
    /// returns the states reached so far with the time and error of that step.
    pub fn evolve_round_partial<A: Amplitude>(&self) -> (RoundTrace<A>, Option<(TimeStamp, EngineError)>) {
        let initial = self.initial_state::<A>();
        let mut after = Vec::with_capacity(self.steps.len());
        let mut psi = initial.clone();
        for step in &self.steps {
            match step.apply(&psi) {
                Ok(next) => psi = next,
                Err(e) => return (RoundTrace { initial, after }, Some((step.at, e))),
            }
            after.push((step.at, psi.clone()));
        }
        (RoundTrace { initial, after }, None)
    }

    /// Applies the steps with index in `range` to `psi`.
    pub fn evolve_steps<A: Amplitude>(
        &self,
        psi: &StateVector<A>,
        range: std::ops::Range<usize>,
    ) -> Result<StateVector<A>, EngineError> {
        let mut psi = psi.clone();
        for step in &self.steps[range] {
            psi = step.apply(&psi)?;
        }
        Ok(psi)
    }

    /// Bases of the multi-register measurements executed up to `t`, the
    /// natural presentation of the state at `t`.
    pub fn presentation_bases(&self, t: TimeStamp) -> Vec<MeasurementBasis> {
        self.steps
            .iter()
            .filter(|s| s.at <= t)
            .filter_map(|s| match &s.op {
                Op::Record { basis, .. } if basis.targets().len() > 1 => Some(basis.clone()),
                _ => None,
            })
            .collect()
    }

    /// A basis measured somewhere in the schedule, by name.
    pub fn basis(&self, name: &str) -> Option<&MeasurementBasis> {
        self.steps.iter().find_map(|s| match &s.op {
            Op::Record { basis, .. } if basis.name() == name => Some(basis),
            _ => None,
        })
    }
}

fn compile_step(
    schedule: &Schedule,
    space: &RegisterSpace,
    action: &Action,
) -> Result<(Op, Option<RegisterId>), EngineError> {
    Ok(match action {
        Action::PrepareRandom { register, state } => {
            let ready = space.register(register)?.ready.clone();
            let op = BasisMapOperator::new(vec![register.clone()], vec![(vec![ready], state.clone())])?;
            (Op::Unitary(op), None)
        }
        Action::ConditionalPrepare {
            source,
            target,
            branches,
        } => {
            let ready = space.register(target)?.ready.clone();
            let rows = branches
                .iter()
                .map(|(tok, v)| {
                    let out = crate::hilbert::LabelVector::from_terms(
                        v.iter().map(|(l, c)| (c.clone(), vec![tok.clone(), l[0].clone()])),
                    );
                    (vec![tok.clone(), ready.clone()], out)
                })
                .collect();
            let op = BasisMapOperator::new(vec![source.clone(), target.clone()], rows)?;
            (Op::Unitary(op), None)
        }
        Action::Measure {
            basis, dest, record, ..
        } => {
            let basis = basis.build()?;
            let ready = space.register(dest)?.ready.clone();
            let map = if record.is_empty() {
                RecordMap::copy_outcomes(&ready, basis.outcome_tokens())
            } else {
                let mut m = RecordMap::new();
                for r in record {
                    m.insert(r.prior.as_deref().unwrap_or(&ready), &r.outcome, &r.token);
                }
                m
            };
            (
                Op::Record {
                    basis,
                    dest: dest.clone(),
                    map,
                },
                Some(dest.clone()),
            )
        }
        Action::Infer {
            agent,
            table,
            check_consistency,
        } => {
            let memory = agent_memory(schedule, agent)?;
            let op = compile_inference_unitary(table, space.register(&memory)?)?;
            if *check_consistency && table.rows.is_empty() {
                (Op::Check { agent: agent.clone() }, None)
            } else {
                (Op::Unitary(op), None)
            }
        }
        Action::AccessMemory {
            agent, source, table, ..
        } => {
            let memory = agent_memory(schedule, agent)?;
            let op = compile_access_unitary(table, space.register(source)?, space.register(&memory)?)?;
            (Op::Unitary(op), Some(memory))
        }
        Action::HaltCheck { .. } => (Op::Halt, None),
    })
}

fn agent_memory(schedule: &Schedule, agent: &AgentId) -> Result<RegisterId, EngineError> {
    schedule
        .agent(agent)
        .map(|a| a.memory.clone())
        .ok_or_else(|| EngineError::Provenance(format!("agent {agent} is not declared")))
}
