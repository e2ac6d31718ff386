//! Exact simulation of the extended Wigner's-friend protocol: agents are
//! quantum registers, measurements and inferences are unitaries, and the
//! rule-S inconsistency is read off the final global state.

pub mod agents;
pub mod amplitude;
pub mod cli;
pub mod engine;
pub mod hilbert;
pub mod protocol;
pub mod time;

pub use amplitude::{Amplitude, AmplitudeError, ExactReal};
pub use time::TimeStamp;
