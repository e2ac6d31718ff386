//! Collapse semantics: every step that records into a register splits the
//! state into one unnormalized branch per recorded token, so later steps act
//! on mixtures instead of superpositions. Used as a contrast with the
//! unitary model.

use std::collections::BTreeMap;

use crate::amplitude::{Amplitude, ExactReal};
use crate::hilbert::{StateVector, Token};

use super::{Engine, EngineError};

impl Engine {
    /// Branches (unnormalized, with squared norms as weights) after the
    /// whole round under collapse semantics.
    pub fn collapse_ensemble(&self) -> Result<Vec<StateVector<ExactReal>>, EngineError> {
        let mut ensemble = vec![self.initial_state::<ExactReal>()];
        for step in &self.steps {
            let mut next = Vec::with_capacity(ensemble.len());
            for member in &ensemble {
                let evolved = step.apply(member)?;
                match &step.records_into {
                    Some(register) => {
                        let reg = self.space.register(register)?;
                        for token in &reg.alphabet {
                            let part = evolved.restrict(register, token)?;
                            if !part.is_empty() {
                                next.push(part);
                            }
                        }
                    }
                    None => next.push(evolved),
                }
            }
            ensemble = next;
        }
        Ok(ensemble)
    }

    /// Joint distribution of the recorded halt values under collapse.
    pub fn collapse_distribution(&self) -> Result<BTreeMap<Vec<Token>, ExactReal>, EngineError> {
        let mut out: BTreeMap<Vec<Token>, ExactReal> = BTreeMap::new();
        for member in self.collapse_ensemble()? {
            for (key, p) in self.outcome_distribution(&member)? {
                let e = out.entry(key).or_insert_with(ExactReal::zero);
                *e = Amplitude::add(e, &p);
            }
        }
        Ok(out)
    }
}
