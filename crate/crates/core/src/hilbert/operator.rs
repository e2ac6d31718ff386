use std::collections::{BTreeMap, BTreeSet};

use crate::amplitude::{Amplitude, ExactReal};

use super::state::check_orthonormal;
use super::{HilbertError, Label, LabelVector, RegisterId, StateVector};

/// An isometry on a few registers, defined by its action on product labels.
///
/// Labels without a row are left unchanged when that is consistent with
/// unitarity, i.e. when every row output lies inside the span of the listed
/// inputs. Otherwise the operator is only defined on the span of its listed
/// inputs and applying it to a state with support elsewhere is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMapOperator {
    registers: Vec<RegisterId>,
    rows: BTreeMap<Label, LabelVector>,
    identity_on_unlisted: bool,
}

impl BasisMapOperator {
    pub fn new(registers: Vec<RegisterId>, rows: Vec<(Label, LabelVector)>) -> Result<Self, HilbertError> {
        let mut map = BTreeMap::new();
        for (input, output) in rows {
            if input.len() != registers.len() {
                return Err(HilbertError::LabelArity {
                    expected: registers.len(),
                    got: input.len(),
                });
            }
            if let Some(l) = output.terms().keys().find(|l| l.len() != registers.len()) {
                return Err(HilbertError::LabelArity {
                    expected: registers.len(),
                    got: l.len(),
                });
            }
            if map.insert(input.clone(), output).is_some() {
                return Err(HilbertError::IsometryViolation(format!(
                    "input label {input:?} listed twice"
                )));
            }
        }
        let named: Vec<(String, &LabelVector)> = map.iter().map(|(l, v)| (format!("{l:?}"), v)).collect();
        check_orthonormal(named.iter().map(|(n, v)| (n.as_str(), *v))).map_err(HilbertError::IsometryViolation)?;
        let inputs: BTreeSet<&Label> = map.keys().collect();
        let identity_on_unlisted = map.values().all(|out| out.terms().keys().all(|l| inputs.contains(l)));
        Ok(BasisMapOperator {
            registers,
            rows: map,
            identity_on_unlisted,
        })
    }

    pub fn identity(registers: Vec<RegisterId>) -> Self {
        BasisMapOperator {
            registers,
            rows: BTreeMap::new(),
            identity_on_unlisted: true,
        }
    }

    /// Permutation of product labels; `pairs` must be a bijection on the
    /// labels it mentions.
    pub fn permutation(
        registers: Vec<RegisterId>,
        pairs: impl IntoIterator<Item = (Label, Label)>,
    ) -> Result<Self, HilbertError> {
        let rows = pairs
            .into_iter()
            .map(|(from, to)| (from, LabelVector::basis(to)))
            .collect();
        BasisMapOperator::new(registers, rows)
    }

    pub fn registers(&self) -> &[RegisterId] {
        &self.registers
    }

    pub fn rows(&self) -> &BTreeMap<Label, LabelVector> {
        &self.rows
    }

    pub fn is_identity_on_unlisted(&self) -> bool {
        self.identity_on_unlisted
    }

    /// Linear extension of the row map to `psi`.
    pub fn apply<A: Amplitude>(&self, psi: &StateVector<A>) -> Result<StateVector<A>, HilbertError> {
        let space = psi.space();
        let pos = space.positions(&self.registers)?;
        for (input, out) in &self.rows {
            space.check_sublabel(&self.registers, input)?;
            for l in out.terms().keys() {
                space.check_sublabel(&self.registers, l)?;
            }
        }
        let mut acc: Vec<(Label, A)> = Vec::new();
        for (label, amp) in psi.terms() {
            let sub: Label = pos.iter().map(|&p| label[p].clone()).collect();
            match self.rows.get(&sub) {
                Some(out) => {
                    for (o, c) in out.terms() {
                        let mut l = label.clone();
                        for (k, &p) in pos.iter().enumerate() {
                            l[p] = o[k].clone();
                        }
                        acc.push((l, amp.mul(&A::from_exact(c))));
                    }
                }
                None if self.identity_on_unlisted => acc.push((label.clone(), amp.clone())),
                None => return Err(HilbertError::OutsideDomain { label: sub }),
            }
        }
        StateVector::from_terms(space.clone(), acc)
    }

    /// Coefficient `<to| U |from>` of the completed operator.
    pub fn matrix_element(&self, from: &Label, to: &Label) -> Option<ExactReal> {
        match self.rows.get(from) {
            Some(out) => Some(out.coefficient(to)),
            None if self.identity_on_unlisted => Some(if from == to {
                ExactReal::one()
            } else {
                ExactReal::zero()
            }),
            None => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hilbert::{Register, RegisterSpace};

    fn l(ts: &[&str]) -> Label {
        ts.iter().map(|t| t.to_string()).collect()
    }

    fn space() -> Arc<RegisterSpace> {
        Arc::new(
            RegisterSpace::new(vec![
                Register::new("R", &["heads", "tails"], "heads"),
                Register::new("M", &["ready", "a", "b"], "ready"),
            ])
            .unwrap(),
        )
    }

    fn superposed() -> StateVector<ExactReal> {
        StateVector::from_terms(
            space(),
            [
                (l(&["heads", "ready"]), ExactReal::sqrt_ratio(1, 3).unwrap()),
                (l(&["tails", "a"]), ExactReal::sqrt_ratio(2, 3).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_rows_leave_state_alone() {
        let psi = superposed();
        let id = BasisMapOperator::identity(vec!["R".into(), "M".into()]);
        assert_eq!(id.apply(&psi).unwrap(), psi);
    }

    #[test]
    fn swap_is_an_involution() {
        let psi = superposed();
        let swap = BasisMapOperator::permutation(
            vec!["M".into()],
            [(l(&["ready"]), l(&["b"])), (l(&["b"]), l(&["ready"]))],
        )
        .unwrap();
        assert!(swap.is_identity_on_unlisted());
        let once = swap.apply(&psi).unwrap();
        assert_ne!(once, psi);
        assert_eq!(swap.apply(&once).unwrap(), psi);
    }

    #[test]
    fn rejects_non_isometry() {
        let err = BasisMapOperator::new(
            vec!["R".into()],
            vec![
                (l(&["heads"]), LabelVector::basis(l(&["tails"]))),
                (l(&["tails"]), LabelVector::basis(l(&["tails"]))),
            ],
        );
        assert!(matches!(err, Err(HilbertError::IsometryViolation(_))));
        let unnormalized = BasisMapOperator::new(
            vec!["R".into()],
            vec![(
                l(&["heads"]),
                LabelVector::from_terms([
                    (ExactReal::from_ratio(1, 2), l(&["heads"])),
                    (ExactReal::from_ratio(1, 2), l(&["tails"])),
                ]),
            )],
        );
        assert!(matches!(unnormalized, Err(HilbertError::IsometryViolation(_))));
    }

    #[test]
    fn partial_isometry_refuses_unlisted_support() {
        // heads -> (heads + tails)/sqrt2 is not completable by the identity on tails.
        let h = ExactReal::sqrt_ratio(1, 2).unwrap();
        let op = BasisMapOperator::new(
            vec!["R".into()],
            vec![(
                l(&["heads"]),
                LabelVector::from_terms([(h.clone(), l(&["heads"])), (h, l(&["tails"]))]),
            )],
        )
        .unwrap();
        assert!(!op.is_identity_on_unlisted());
        let ok = StateVector::<ExactReal>::ready(space());
        let out = op.apply(&ok).unwrap();
        assert_eq!(out.norm_sqr(), ExactReal::one());
        let bad = superposed();
        assert!(matches!(op.apply(&bad), Err(HilbertError::OutsideDomain { .. })));
    }
}
