use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HilbertError, Label, Token};

/// Name of a register, e.g. `R`, `S`, `FbarMem`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterId(String);

impl RegisterId {
    pub fn new(name: impl Into<String>) -> Self {
        RegisterId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegisterId {
    fn from(s: &str) -> Self {
        RegisterId::new(s)
    }
}

/// A finite register with an enumerated basis. `ready` is the token the
/// register holds in the initial product state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub id: RegisterId,
    pub alphabet: Vec<Token>,
    pub ready: Token,
}

impl Register {
    pub fn new(id: impl Into<RegisterId>, alphabet: &[&str], ready: &str) -> Self {
        Register {
            id: id.into(),
            alphabet: alphabet.iter().map(|t| t.to_string()).collect(),
            ready: ready.to_string(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.alphabet.iter().any(|t| t == token)
    }

    pub fn check(&self) -> Result<(), HilbertError> {
        if self.alphabet.is_empty() {
            return Err(HilbertError::EmptyAlphabet(self.id.to_string()));
        }
        let mut seen = HashSet::new();
        for t in &self.alphabet {
            if !seen.insert(t) {
                return Err(HilbertError::DuplicateToken {
                    register: self.id.to_string(),
                    token: t.clone(),
                });
            }
        }
        if !self.contains(&self.ready) {
            return Err(HilbertError::UnknownToken {
                register: self.id.to_string(),
                token: self.ready.clone(),
            });
        }
        Ok(())
    }
}

impl From<String> for RegisterId {
    fn from(s: String) -> Self {
        RegisterId(s)
    }
}

/// Ordered list of registers; every state label has one token per register
/// in this order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSpace {
    registers: Vec<Register>,
}

impl RegisterSpace {
    pub fn new(registers: Vec<Register>) -> Result<Self, HilbertError> {
        let mut seen = HashSet::new();
        for r in &registers {
            r.check()?;
            if !seen.insert(r.id.clone()) {
                return Err(HilbertError::DuplicateRegister(r.id.to_string()));
            }
        }
        Ok(RegisterSpace { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn position(&self, id: &RegisterId) -> Option<usize> {
        self.registers.iter().position(|r| &r.id == id)
    }

    pub fn get(&self, id: &RegisterId) -> Option<&Register> {
        self.registers.iter().find(|r| &r.id == id)
    }

    pub fn register(&self, id: &RegisterId) -> Result<&Register, HilbertError> {
        self.get(id)
            .ok_or_else(|| HilbertError::UnknownRegister(id.to_string()))
    }

    pub fn positions(&self, ids: &[RegisterId]) -> Result<Vec<usize>, HilbertError> {
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let p = self
                .position(id)
                .ok_or_else(|| HilbertError::UnknownRegister(id.to_string()))?;
            if out.contains(&p) {
                return Err(HilbertError::DuplicateRegister(id.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn ready_label(&self) -> Label {
        self.registers.iter().map(|r| r.ready.clone()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.registers.iter().map(|r| r.alphabet.len()).product()
    }

    /// Checks arity and that every token belongs to its register.
    pub fn check_label(&self, label: &[Token]) -> Result<(), HilbertError> {
        check_tokens(&self.registers.iter().collect::<Vec<_>>(), label)
    }

    /// Checks a label over a subset of registers, given in `ids` order.
    pub fn check_sublabel(&self, ids: &[RegisterId], label: &[Token]) -> Result<(), HilbertError> {
        let regs = ids.iter().map(|id| self.register(id)).collect::<Result<Vec<_>, _>>()?;
        check_tokens(&regs, label)
    }

    /// Replaces `targets` by one composite register placed where the first
    /// target was.
    pub fn replace_with(&self, targets: &[RegisterId], composite: Register) -> Result<RegisterSpace, HilbertError> {
        let pos = self.positions(targets)?;
        let first = *pos.iter().min().expect("at least one target register");
        let mut out = Vec::with_capacity(self.registers.len() + 1 - pos.len());
        for (i, r) in self.registers.iter().enumerate() {
            if i == first {
                out.push(composite.clone());
            }
            if !pos.contains(&i) {
                out.push(r.clone());
            }
        }
        RegisterSpace::new(out)
    }

    /// Every label of the full product space, in alphabet order.
    pub fn all_labels(&self) -> Vec<Label> {
        let mut out: Vec<Label> = vec![Vec::new()];
        for r in &self.registers {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    r.alphabet.iter().map(move |t| {
                        let mut l = prefix.clone();
                        l.push(t.clone());
                        l
                    })
                })
                .collect();
        }
        out
    }
}

fn check_tokens(regs: &[&Register], label: &[Token]) -> Result<(), HilbertError> {
    if regs.len() != label.len() {
        return Err(HilbertError::LabelArity {
            expected: regs.len(),
            got: label.len(),
        });
    }
    for (r, t) in regs.iter().zip(label) {
        if !r.contains(t) {
            return Err(HilbertError::UnknownToken {
                register: r.id.to_string(),
                token: t.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_declarations() {
        assert!(matches!(
            RegisterSpace::new(vec![Register::new("R", &[], "x")]),
            Err(HilbertError::EmptyAlphabet(_))
        ));
        assert!(matches!(
            RegisterSpace::new(vec![Register::new("R", &["a", "a"], "a")]),
            Err(HilbertError::DuplicateToken { .. })
        ));
        assert!(matches!(
            RegisterSpace::new(vec![Register::new("R", &["a"], "a"), Register::new("R", &["b"], "b")]),
            Err(HilbertError::DuplicateRegister(_))
        ));
        assert!(matches!(
            RegisterSpace::new(vec![Register::new("R", &["a"], "b")]),
            Err(HilbertError::UnknownToken { .. })
        ));
    }

    #[test]
    fn replace_keeps_order() {
        let space = RegisterSpace::new(vec![
            Register::new("A", &["0", "1"], "0"),
            Register::new("B", &["0", "1"], "0"),
            Register::new("C", &["x", "y", "z"], "x"),
        ])
        .unwrap();
        assert_eq!(space.dimension(), 12);
        assert_eq!(space.all_labels().len(), 12);
        let lab = space
            .replace_with(&["C".into(), "A".into()], Register::new("L", &["p", "q"], "p"))
            .unwrap();
        let ids: Vec<_> = lab.registers().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["L", "B"]);
    }
}
