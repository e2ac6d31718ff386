use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::amplitude::{Amplitude, ExactReal};

use super::{HilbertError, Label, RegisterId, RegisterSpace};

/// Exact linear combination of product labels over some fixed list of
/// registers. Identical labels are merged and zero coefficients dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector {
    terms: BTreeMap<Label, ExactReal>,
}

impl LabelVector {
    pub fn new() -> Self {
        LabelVector::default()
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (ExactReal, Label)>,
    {
        let mut v = LabelVector::new();
        for (c, l) in terms {
            v.add_term(l, &c);
        }
        v
    }

    pub fn basis(label: Label) -> Self {
        LabelVector::from_terms([(ExactReal::one(), label)])
    }

    pub fn add_term(&mut self, label: Label, c: &ExactReal) {
        let sum = match self.terms.get(&label) {
            Some(prev) => prev + c,
            None => c.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&label);
        } else {
            self.terms.insert(label, sum);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Label, ExactReal> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &ExactReal)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, label: &Label) -> ExactReal {
        self.terms.get(label).cloned().unwrap_or_default()
    }

    pub fn inner(&self, other: &LabelVector) -> ExactReal {
        self.terms
            .iter()
            .filter_map(|(l, a)| other.terms.get(l).map(|b| a * b))
            .fold(ExactReal::zero(), |acc, x| &acc + &x)
    }

    pub fn norm_sqr(&self) -> ExactReal {
        self.inner(self)
    }

    pub fn arity(&self) -> Option<usize> {
        self.terms.keys().next().map(|l| l.len())
    }
}

/// Checks that `vectors` are pairwise orthonormal, exactly. Returns a short
/// description of the first failure.
pub fn check_orthonormal<'a, I>(vectors: I) -> Result<(), String>
where
    I: IntoIterator<Item = (&'a str, &'a LabelVector)>,
{
    let vs: Vec<_> = vectors.into_iter().collect();
    for (i, (ni, vi)) in vs.iter().enumerate() {
        let n = vi.norm_sqr();
        if n != ExactReal::one() {
            return Err(format!("vector {ni} has squared norm {n}, expected 1"));
        }
        for (nj, vj) in &vs[i + 1..] {
            let ip = vi.inner(vj);
            if !ip.is_zero() {
                return Err(format!("vectors {ni} and {nj} have inner product {ip}"));
            }
        }
    }
    Ok(())
}

/// Sparse state over a register space: label tuple to amplitude.
///
/// Canonical form is maintained on construction: duplicate labels are
/// merged and negligible amplitudes dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<A> {
    space: Arc<RegisterSpace>,
    terms: BTreeMap<Label, A>,
}

impl<A: Amplitude> StateVector<A> {
    /// Product state with the given label.
    pub fn product(space: Arc<RegisterSpace>, label: Label) -> Result<Self, HilbertError> {
        space.check_label(&label)?;
        let mut terms = BTreeMap::new();
        terms.insert(label, A::one());
        Ok(StateVector { space, terms })
    }

    /// The all-ready product state of `space`.
    pub fn ready(space: Arc<RegisterSpace>) -> Self {
        let label = space.ready_label();
        let mut terms = BTreeMap::new();
        terms.insert(label, A::one());
        StateVector { space, terms }
    }

    pub fn from_terms<I>(space: Arc<RegisterSpace>, terms: I) -> Result<Self, HilbertError>
    where
        I: IntoIterator<Item = (Label, A)>,
    {
        let mut acc: BTreeMap<Label, A> = BTreeMap::new();
        for (l, a) in terms {
            space.check_label(&l)?;
            match acc.get_mut(&l) {
                Some(prev) => *prev = prev.add(&a),
                None => {
                    acc.insert(l, a);
                }
            }
        }
        acc.retain(|_, a| !a.is_negligible());
        Ok(StateVector { space, terms: acc })
    }

    pub fn space(&self) -> &Arc<RegisterSpace> {
        &self.space
    }

    pub fn terms(&self) -> &BTreeMap<Label, A> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, label: &Label) -> A {
        self.terms.get(label).cloned().unwrap_or_else(A::zero)
    }

    pub fn norm_sqr(&self) -> A {
        self.terms.values().fold(A::zero(), |acc, a| acc.add(&a.mul(a)))
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_sqr().is_one()
    }

    pub fn scale(&self, c: &A) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(l, a)| (l.clone(), a.mul(c)))
            .filter(|(_, a)| !a.is_negligible())
            .collect();
        StateVector {
            space: self.space.clone(),
            terms,
        }
    }

    /// Same state with amplitudes converted, e.g. exact to `f64`.
    pub fn map_amplitudes<B: Amplitude>(&self, f: impl Fn(&A) -> B) -> StateVector<B> {
        let terms = self
            .terms
            .iter()
            .map(|(l, a)| (l.clone(), f(a)))
            .filter(|(_, b)| !b.is_negligible())
            .collect();
        StateVector {
            space: self.space.clone(),
            terms,
        }
    }

    /// Probability of each sub-label on `registers` (in the given order).
    pub fn marginal(&self, registers: &[RegisterId]) -> Result<BTreeMap<Label, A>, HilbertError> {
        let pos = self.space.positions(registers)?;
        let mut out: BTreeMap<Label, A> = BTreeMap::new();
        for (l, a) in &self.terms {
            let key: Label = pos.iter().map(|&p| l[p].clone()).collect();
            let p = a.mul(a);
            match out.get_mut(&key) {
                Some(prev) => *prev = prev.add(&p),
                None => {
                    out.insert(key, p);
                }
            }
        }
        Ok(out)
    }

    /// Keeps only the terms where `register` holds `token` (no renormalization).
    pub fn restrict(&self, register: &RegisterId, token: &str) -> Result<Self, HilbertError> {
        let reg = self.space.register(register)?;
        if !reg.contains(token) {
            return Err(HilbertError::UnknownToken {
                register: register.to_string(),
                token: token.to_string(),
            });
        }
        let p = self.space.position(register).expect("register exists");
        let terms = self
            .terms
            .iter()
            .filter(|(l, _)| l[p] == token)
            .map(|(l, a)| (l.clone(), a.clone()))
            .collect();
        Ok(StateVector {
            space: self.space.clone(),
            terms,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        if self.space != other.space {
            return Err(HilbertError::SpaceMismatch);
        }
        let all = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|(l, a)| (l.clone(), a.clone()));
        StateVector::from_terms(self.space.clone(), all)
    }

    /// JSON-ready dump, sorted by register name then token.
    pub fn dump(&self) -> Vec<TermDump> {
        let mut order: Vec<usize> = (0..self.space.len()).collect();
        let regs = self.space.registers();
        order.sort_by(|&a, &b| regs[a].id.cmp(&regs[b].id));
        let mut rows: Vec<(Vec<(&str, &str)>, TermDump)> = self
            .terms
            .iter()
            .map(|(l, a)| {
                let key: Vec<(&str, &str)> = order.iter().map(|&i| (regs[i].id.as_str(), l[i].as_str())).collect();
                let labels = key.iter().map(|(r, t)| (r.to_string(), t.to_string())).collect();
                (
                    key,
                    TermDump {
                        labels,
                        amplitude_exact: a.exact_string(),
                        amplitude_float: a.to_f64(),
                    },
                )
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows.into_iter().map(|(_, t)| t).collect()
    }
}

impl StateVector<ExactReal> {
    pub fn to_float(&self) -> StateVector<f64> {
        self.map_amplitudes(|a| a.to_f64())
    }
}

/// One term of a state dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermDump {
    pub labels: BTreeMap<String, String>,
    pub amplitude_exact: String,
    pub amplitude_float: f64,
}
