//! Labeled registers, sparse tensor-product states, basis-map isometries and
//! Born-rule extraction.

mod basis;
mod operator;
mod space;
mod state;

use thiserror::Error;

use crate::amplitude::AmplitudeError;

pub use basis::{
    born_distribution, expand_from_basis, project, project_unnormalized, record_measurement, rewrite_in_basis,
    MeasurementBasis, RecordMap,
};
pub use operator::BasisMapOperator;
pub use space::{Register, RegisterId, RegisterSpace};
pub use state::{check_orthonormal, LabelVector, StateVector, TermDump};

/// A basis token of one register.
pub type Token = String;
/// One token per register, in register-space order.
pub type Label = Vec<Token>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("unknown register {0}")]
    UnknownRegister(String),
    #[error("register {0} declared twice")]
    DuplicateRegister(String),
    #[error("register {0} has an empty alphabet")]
    EmptyAlphabet(String),
    #[error("token {token} appears twice in register {register}")]
    DuplicateToken { register: String, token: String },
    #[error("token {token} is not in the alphabet of {register}")]
    UnknownToken { register: String, token: String },
    #[error("label has {got} tokens, expected {expected}")]
    LabelArity { expected: usize, got: usize },
    #[error("isometry violation: {0}")]
    IsometryViolation(String),
    #[error("basis {basis} is not orthonormal: {detail}")]
    NonOrthonormalBasis { basis: String, detail: String },
    #[error("state has support outside the span of basis {basis}")]
    SupportLeakage { basis: String },
    #[error("outcome {0} has probability zero")]
    ZeroProbabilityOutcome(String),
    #[error("unknown outcome {0}")]
    UnknownOutcome(String),
    #[error("register {register} holds {token}, which has no record entry for outcome {outcome}")]
    DestNotReady {
        register: String,
        token: String,
        outcome: String,
    },
    #[error("memory register {0} is one of the measured registers")]
    DestIsTarget(String),
    #[error("record map writes {token} twice for outcome {outcome}")]
    NonInjectiveRecord { outcome: String, token: String },
    #[error("operator is not defined on label {label:?}")]
    OutsideDomain { label: Label },
    #[error("states live in different register spaces")]
    SpaceMismatch,
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
}
