use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::amplitude::Amplitude;

use super::state::check_orthonormal;
use super::{HilbertError, Label, LabelVector, Register, RegisterId, StateVector, Token};

/// A (possibly partial) orthonormal basis over the joint space of
/// `targets`, each vector tagged with its outcome token.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    name: String,
    targets: Vec<RegisterId>,
    outcomes: Vec<(Token, LabelVector)>,
}

impl MeasurementBasis {
    pub fn new(
        name: impl Into<String>,
        targets: Vec<RegisterId>,
        outcomes: Vec<(Token, LabelVector)>,
    ) -> Result<Self, HilbertError> {
        let name = name.into();
        let mut seen = BTreeSet::new();
        for (tok, v) in &outcomes {
            if !seen.insert(tok) {
                return Err(HilbertError::NonOrthonormalBasis {
                    basis: name.clone(),
                    detail: format!("outcome {tok} declared twice"),
                });
            }
            if let Some(l) = v.terms().keys().find(|l| l.len() != targets.len()) {
                return Err(HilbertError::LabelArity {
                    expected: targets.len(),
                    got: l.len(),
                });
            }
        }
        check_orthonormal(outcomes.iter().map(|(t, v)| (t.as_str(), v))).map_err(|detail| {
            HilbertError::NonOrthonormalBasis {
                basis: name.clone(),
                detail,
            }
        })?;
        Ok(MeasurementBasis {
            name,
            targets,
            outcomes,
        })
    }

    /// The standard basis of one register; outcome tokens are its alphabet.
    pub fn computational(register: &Register) -> Self {
        MeasurementBasis {
            name: register.id.to_string(),
            targets: vec![register.id.clone()],
            outcomes: register
                .alphabet
                .iter()
                .map(|t| (t.clone(), LabelVector::basis(vec![t.clone()])))
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn targets(&self) -> &[RegisterId] {
        &self.targets
    }

    pub fn outcomes(&self) -> &[(Token, LabelVector)] {
        &self.outcomes
    }

    pub fn outcome_tokens(&self) -> impl Iterator<Item = &Token> {
        self.outcomes.iter().map(|(t, _)| t)
    }

    pub fn vector(&self, outcome: &str) -> Option<&LabelVector> {
        self.outcomes.iter().find(|(t, _)| t == outcome).map(|(_, v)| v)
    }

    /// The composite register that replaces the targets in a rewritten
    /// presentation. It is named after the basis.
    pub fn composite_register(&self) -> Register {
        let alphabet: Vec<Token> = self.outcomes.iter().map(|(t, _)| t.clone()).collect();
        Register {
            id: RegisterId::new(self.name.clone()),
            ready: alphabet.first().cloned().unwrap_or_default(),
            alphabet,
        }
    }
}

/// Presents `psi` with the basis targets replaced by one register whose
/// tokens are the basis outcomes. Fails if any amplitude lies outside the
/// span of the declared outcome vectors.
pub fn rewrite_in_basis<A: Amplitude>(
    psi: &StateVector<A>,
    basis: &MeasurementBasis,
) -> Result<StateVector<A>, HilbertError> {
    let space = psi.space();
    let pos = space.positions(basis.targets())?;
    for (_, v) in basis.outcomes() {
        for l in v.terms().keys() {
            space.check_sublabel(basis.targets(), l)?;
        }
    }
    let new_space = Arc::new(space.replace_with(basis.targets(), basis.composite_register())?);
    let first = *pos.iter().min().expect("basis has targets");

    // Group psi by the labels of the remaining registers.
    let mut grouped: BTreeMap<Label, BTreeMap<Label, A>> = BTreeMap::new();
    for (label, amp) in psi.terms() {
        let sub: Label = pos.iter().map(|&p| label[p].clone()).collect();
        let rest: Label = label
            .iter()
            .enumerate()
            .filter(|(i, _)| !pos.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        grouped.entry(rest).or_default().insert(sub, amp.clone());
    }

    let mut out = Vec::new();
    for (rest, local) in &grouped {
        let mut residual = local.clone();
        for (tok, v) in basis.outcomes() {
            let mut c = A::zero();
            for (l, vc) in v.terms() {
                if let Some(a) = local.get(l) {
                    c = c.add(&a.mul(&A::from_exact(vc)));
                }
            }
            if c.is_negligible() {
                continue;
            }
            for (l, vc) in v.terms() {
                let e = residual.entry(l.clone()).or_insert_with(A::zero);
                *e = e.sub(&c.mul(&A::from_exact(vc)));
            }
            let mut key = Vec::with_capacity(rest.len() + 1);
            key.extend_from_slice(&rest[..first]);
            key.push(tok.clone());
            key.extend_from_slice(&rest[first..]);
            out.push((key, c));
        }
        if residual.values().any(|a| !a.is_negligible()) {
            return Err(HilbertError::SupportLeakage {
                basis: basis.name().to_string(),
            });
        }
    }
    StateVector::from_terms(new_space, out)
}

/// Inverse of [`rewrite_in_basis`]: expands the composite register back into
/// the target registers of `original`.
pub fn expand_from_basis<A: Amplitude>(
    presented: &StateVector<A>,
    basis: &MeasurementBasis,
    original: &Arc<super::RegisterSpace>,
) -> Result<StateVector<A>, HilbertError> {
    let expected = original.replace_with(basis.targets(), basis.composite_register())?;
    if **presented.space() != expected {
        return Err(HilbertError::SpaceMismatch);
    }
    let pos = original.positions(basis.targets())?;
    let first = *pos.iter().min().expect("basis has targets");
    let mut out = Vec::new();
    for (label, amp) in presented.terms() {
        let tok = &label[first];
        let v = basis
            .vector(tok)
            .ok_or_else(|| HilbertError::UnknownOutcome(tok.clone()))?;
        let rest: Vec<&Token> = label
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != first)
            .map(|(_, t)| t)
            .collect();
        for (sub, c) in v.terms() {
            let mut full = Vec::with_capacity(original.len());
            let mut rest_iter = rest.iter();
            for i in 0..original.len() {
                match pos.iter().position(|&p| p == i) {
                    Some(k) => full.push(sub[k].clone()),
                    None => full.push((*rest_iter.next().expect("arity")).clone()),
                }
            }
            out.push((full, amp.mul(&A::from_exact(c))));
        }
    }
    StateVector::from_terms(original.clone(), out)
}

/// Born probability of every declared outcome (including zero ones).
pub fn born_distribution<A: Amplitude>(
    psi: &StateVector<A>,
    basis: &MeasurementBasis,
) -> Result<BTreeMap<Token, A>, HilbertError> {
    let presented = rewrite_in_basis(psi, basis)?;
    let marginal = presented.marginal(&[RegisterId::new(basis.name())])?;
    Ok(basis
        .outcome_tokens()
        .map(|t| {
            let p = marginal.get(&vec![t.clone()]).cloned().unwrap_or_else(A::zero);
            (t.clone(), p)
        })
        .collect())
}

/// Projects onto `outcome` and renormalizes. Returns the outcome probability
/// together with the conditional state.
pub fn project<A: Amplitude>(
    psi: &StateVector<A>,
    basis: &MeasurementBasis,
    outcome: &str,
) -> Result<(A, StateVector<A>), HilbertError> {
    let (p, unnormalized) = project_unnormalized(psi, basis, outcome)?;
    if p.is_negligible() {
        return Err(HilbertError::ZeroProbabilityOutcome(outcome.to_string()));
    }
    let scale = p.inv_sqrt()?;
    Ok((p, unnormalized.scale(&scale)))
}

/// Projection without renormalization; the returned weight is its squared norm.
pub fn project_unnormalized<A: Amplitude>(
    psi: &StateVector<A>,
    basis: &MeasurementBasis,
    outcome: &str,
) -> Result<(A, StateVector<A>), HilbertError> {
    if basis.vector(outcome).is_none() {
        return Err(HilbertError::UnknownOutcome(outcome.to_string()));
    }
    let presented = rewrite_in_basis(psi, basis)?;
    let kept = presented.restrict(&RegisterId::new(basis.name()), outcome)?;
    let projected = expand_from_basis(&kept, basis, psi.space())?;
    Ok((projected.norm_sqr(), projected))
}

/// How a measurement writes into a memory register: `(prior token, outcome)`
/// to the new token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecordMap {
    entries: BTreeMap<(Token, Token), Token>,
}

impl RecordMap {
    pub fn new() -> Self {
        RecordMap::default()
    }

    /// `ready` becomes the outcome token itself.
    pub fn copy_outcomes<'a>(ready: &str, outcomes: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut m = RecordMap::new();
        for o in outcomes {
            m.insert(ready, o, o);
        }
        m
    }

    pub fn insert(&mut self, prior: &str, outcome: &str, token: &str) -> Option<Token> {
        self.entries
            .insert((prior.to_string(), outcome.to_string()), token.to_string())
    }

    pub fn get(&self, prior: &str, outcome: &str) -> Option<&Token> {
        self.entries.get(&(prior.to_string(), outcome.to_string()))
    }

    pub fn entries(&self) -> &BTreeMap<(Token, Token), Token> {
        &self.entries
    }

    /// For each outcome the prior→token map must be injective, so the whole
    /// record operation is a controlled permutation.
    pub fn check_injective(&self) -> Result<(), HilbertError> {
        let mut seen = BTreeSet::new();
        for ((_, outcome), tok) in &self.entries {
            if !seen.insert((outcome, tok)) {
                return Err(HilbertError::NonInjectiveRecord {
                    outcome: outcome.clone(),
                    token: tok.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Unitary measurement: each outcome component of `psi` is tagged in
/// `dest` with the token given by `map`. Nothing collapses.
pub fn record_measurement<A: Amplitude>(
    psi: &StateVector<A>,
    basis: &MeasurementBasis,
    dest: &RegisterId,
    map: &RecordMap,
) -> Result<StateVector<A>, HilbertError> {
    if basis.targets().contains(dest) {
        return Err(HilbertError::DestIsTarget(dest.to_string()));
    }
    map.check_injective()?;
    let dest_reg = psi.space().register(dest)?;
    for tok in map.entries().values() {
        if !dest_reg.contains(tok) {
            return Err(HilbertError::UnknownToken {
                register: dest.to_string(),
                token: tok.clone(),
            });
        }
    }
    let presented = rewrite_in_basis(psi, basis)?;
    let space = presented.space().clone();
    let outcome_pos = space
        .position(&RegisterId::new(basis.name()))
        .expect("composite register present");
    let dest_pos = space.position(dest).expect("dest present");
    let mut out = Vec::with_capacity(presented.len());
    for (label, amp) in presented.terms() {
        let outcome = &label[outcome_pos];
        let prior = &label[dest_pos];
        let tok = map.get(prior, outcome).ok_or_else(|| HilbertError::DestNotReady {
            register: dest.to_string(),
            token: prior.clone(),
            outcome: outcome.clone(),
        })?;
        let mut l = label.clone();
        l[dest_pos] = tok.clone();
        out.push((l, amp.clone()));
    }
    let recorded = StateVector::from_terms(space, out)?;
    expand_from_basis(&recorded, basis, psi.space())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::ExactReal;
    use crate::hilbert::RegisterSpace;

    fn l(ts: &[&str]) -> Label {
        ts.iter().map(|t| t.to_string()).collect()
    }

    fn sq(n: i64, d: i64) -> ExactReal {
        ExactReal::sqrt_ratio(n, d).unwrap()
    }

    fn space() -> Arc<RegisterSpace> {
        Arc::new(
            RegisterSpace::new(vec![
                Register::new("R", &["heads", "tails"], "heads"),
                Register::new("M", &["ready", "heads", "tails", "x"], "ready"),
            ])
            .unwrap(),
        )
    }

    fn init_r() -> StateVector<ExactReal> {
        StateVector::from_terms(
            space(),
            [(l(&["heads", "ready"]), sq(1, 3)), (l(&["tails", "ready"]), sq(2, 3))],
        )
        .unwrap()
    }

    fn r_basis() -> MeasurementBasis {
        MeasurementBasis::computational(space().get(&"R".into()).unwrap())
    }

    fn plus_minus() -> MeasurementBasis {
        MeasurementBasis::new(
            "pm",
            vec!["R".into()],
            vec![
                (
                    "plus".into(),
                    LabelVector::from_terms([(sq(1, 2), l(&["heads"])), (sq(1, 2), l(&["tails"]))]),
                ),
                (
                    "minus".into(),
                    LabelVector::from_terms([(sq(1, 2), l(&["heads"])), (-sq(1, 2), l(&["tails"]))]),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn born_on_init_state() {
        let d = born_distribution(&init_r(), &r_basis()).unwrap();
        assert_eq!(d["heads"], ExactReal::from_ratio(1, 3));
        assert_eq!(d["tails"], ExactReal::from_ratio(2, 3));
    }

    #[test]
    fn born_sums_to_one_in_rotated_basis() {
        let d = born_distribution(&init_r(), &plus_minus()).unwrap();
        let total = d.values().fold(ExactReal::zero(), |a, b| &a + b);
        assert_eq!(total, ExactReal::one());
    }

    #[test]
    fn project_examples() {
        let (p, post) = project(&init_r(), &r_basis(), "tails").unwrap();
        assert_eq!(p, ExactReal::from_ratio(2, 3));
        assert_eq!(post, StateVector::product(space(), l(&["tails", "ready"])).unwrap());
        let only_heads = StateVector::<ExactReal>::ready(space());
        assert!(matches!(
            project(&only_heads, &r_basis(), "tails"),
            Err(HilbertError::ZeroProbabilityOutcome(_))
        ));
    }

    #[test]
    fn rewrite_round_trips() {
        let psi = init_r();
        let presented = rewrite_in_basis(&psi, &plus_minus()).unwrap();
        assert_eq!(presented.space().registers()[0].id.as_str(), "pm");
        assert_eq!(expand_from_basis(&presented, &plus_minus(), psi.space()).unwrap(), psi);
    }

    #[test]
    fn partial_basis_leakage_is_an_error() {
        let partial = MeasurementBasis::new(
            "h",
            vec!["R".into()],
            vec![("h".into(), LabelVector::basis(l(&["heads"])))],
        )
        .unwrap();
        assert!(matches!(
            rewrite_in_basis(&init_r(), &partial),
            Err(HilbertError::SupportLeakage { .. })
        ));
        assert!(matches!(
            born_distribution(&init_r(), &partial),
            Err(HilbertError::SupportLeakage { .. })
        ));
    }

    #[test]
    fn record_entangles_without_collapse() {
        let basis = r_basis();
        let map = RecordMap::copy_outcomes("ready", basis.outcome_tokens());
        let out = record_measurement(&init_r(), &basis, &"M".into(), &map).unwrap();
        let expected = StateVector::from_terms(
            space(),
            [(l(&["heads", "heads"]), sq(1, 3)), (l(&["tails", "tails"]), sq(2, 3))],
        )
        .unwrap();
        assert_eq!(out, expected);
        // a second record finds dest occupied
        assert!(matches!(
            record_measurement(&out, &basis, &"M".into(), &map),
            Err(HilbertError::DestNotReady { .. })
        ));
    }

    #[test]
    fn record_on_certain_outcome_is_deterministic() {
        let basis = r_basis();
        let map = RecordMap::copy_outcomes("ready", basis.outcome_tokens());
        let psi = StateVector::<ExactReal>::ready(space());
        let out = record_measurement(&psi, &basis, &"M".into(), &map).unwrap();
        assert_eq!(out, StateVector::product(space(), l(&["heads", "heads"])).unwrap());
    }

    #[test]
    fn record_map_must_be_injective() {
        let mut map = RecordMap::new();
        map.insert("ready", "heads", "x");
        map.insert("tails", "heads", "x");
        assert!(matches!(
            record_measurement(&init_r(), &r_basis(), &"M".into(), &map),
            Err(HilbertError::NonInjectiveRecord { .. })
        ));
    }
}
