//! The timed protocol: schedule data model, the built-in four-agent
//! schedule, and the text format.

mod canonical;
mod parser;
mod serialize;
mod validate;

use std::fmt;

use crate::agents::{AgentId, InferenceTable};
use crate::hilbert::{HilbertError, LabelVector, MeasurementBasis, Register, RegisterId, RegisterSpace, Token};
use crate::time::TimeStamp;

pub use canonical::{canonical_fr_schedule, CANONICAL_FR_SOURCE};
pub use parser::{parse_schedule, parse_unchecked, ParseError};
pub use serialize::to_dsl;
pub use validate::{validate, Diagnostic};

/// An agent and the register holding its memory. `conforming` declares
/// that the agent reasons with rules Q, C and S, which rule C requires of
/// the agent it trusts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDecl {
    pub id: AgentId,
    pub memory: RegisterId,
    pub conforming: bool,
}

/// A basis as written in a schedule; it may still fail orthonormality,
/// which [`validate`] reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub name: String,
    pub targets: Vec<RegisterId>,
    pub outcomes: Vec<(Token, LabelVector)>,
}

impl BasisSpec {
    pub fn build(&self) -> Result<MeasurementBasis, HilbertError> {
        MeasurementBasis::new(self.name.clone(), self.targets.clone(), self.outcomes.clone())
    }
}

/// `prior/outcome -> token`; a missing prior means the register's ready token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordRule {
    pub prior: Option<Token>,
    pub outcome: Token,
    pub token: Token,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltCondition {
    pub register: RegisterId,
    pub value: Token,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Rotates `register` from its ready token into `state`.
    PrepareRandom {
        register: RegisterId,
        state: LabelVector,
    },
    /// While `target` holds its ready token, prepares it according to the
    /// token held by `source`.
    ConditionalPrepare {
        source: RegisterId,
        target: RegisterId,
        branches: Vec<(Token, LabelVector)>,
    },
    /// Unitary measurement of `basis`, recorded into `dest`. An empty
    /// `record` copies each outcome token into a ready `dest`.
    Measure {
        agent: AgentId,
        basis: BasisSpec,
        dest: RegisterId,
        variable: String,
        record: Vec<RecordRule>,
    },
    /// Rewrites the agent's own memory; `check_consistency` runs rule S on
    /// every branch after the table is applied.
    Infer {
        agent: AgentId,
        table: InferenceTable,
        check_consistency: bool,
    },
    /// The agent reads `source` and writes into its own ready memory. With
    /// a `variable`, the read value also counts as an observation of it.
    AccessMemory {
        agent: AgentId,
        source: RegisterId,
        variable: Option<String>,
        table: InferenceTable,
    },
    HaltCheck {
        conditions: Vec<HaltCondition>,
    },
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::PrepareRandom { .. } => "prepare",
            Action::ConditionalPrepare { .. } => "condprepare",
            Action::Measure { .. } => "measure",
            Action::Infer { .. } => "infer",
            Action::AccessMemory { .. } => "access",
            Action::HaltCheck { .. } => "halt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub at: TimeStamp,
    pub action: Action,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.at, self.action.kind())
    }
}

/// Register declarations, agents, and the steps of one round.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub registers: Vec<Register>,
    pub agents: Vec<AgentDecl>,
    pub steps: Vec<Step>,
}

impl Schedule {
    pub fn space(&self) -> Result<RegisterSpace, HilbertError> {
        RegisterSpace::new(self.registers.clone())
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentDecl> {
        self.agents.iter().find(|a| &a.id == id)
    }

    pub fn register(&self, id: &RegisterId) -> Option<&Register> {
        self.registers.iter().find(|r| &r.id == id)
    }

    pub fn halt_conditions(&self) -> Option<&[HaltCondition]> {
        self.steps.iter().find_map(|s| match &s.action {
            Action::HaltCheck { conditions } => Some(conditions.as_slice()),
            _ => None,
        })
    }

    /// Copy without the steps matching `pred`.
    pub fn without_steps(&self, pred: impl Fn(&Step) -> bool) -> Schedule {
        Schedule {
            steps: self.steps.iter().filter(|s| !pred(s)).cloned().collect(),
            ..self.clone()
        }
    }
}
