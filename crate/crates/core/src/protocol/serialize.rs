use std::fmt::Write;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::agents::{Conclusion, ConclusionRule, InferenceTable};
use crate::amplitude::ExactReal;
use crate::hilbert::{LabelVector, RegisterId};

use super::{Action, BasisSpec, Schedule};

/// Text form accepted by [`super::parse_unchecked`]. Bases are emitted as
/// declarations; every other vector is written inline.
pub fn to_dsl(schedule: &Schedule) -> String {
    let mut out = String::new();
    for r in &schedule.registers {
        let alphabet: Vec<String> = r.alphabet.iter().map(|t| quote(t)).collect();
        let _ = writeln!(
            out,
            "register {} alphabet {{{}}} init {}",
            quote(r.id.as_str()),
            alphabet.join(", "),
            quote(&r.ready)
        );
    }
    for a in &schedule.agents {
        let _ = writeln!(
            out,
            "agent {} memory {}{}",
            quote(a.id.as_str()),
            quote(a.memory.as_str()),
            if a.conforming { "" } else { " nonconforming" }
        );
    }

    let mut emitted: Vec<&BasisSpec> = Vec::new();
    for step in &schedule.steps {
        if let Action::Measure { basis, .. } = &step.action {
            if !emitted.iter().any(|b| b.name == basis.name) {
                emitted.push(basis);
            }
        }
    }
    for b in emitted {
        let _ = writeln!(out, "basis {} on {} {{", quote(&b.name), register_list(&b.targets));
        for (i, (tok, v)) in b.outcomes.iter().enumerate() {
            let sep = if i + 1 < b.outcomes.len() { "," } else { "" };
            let _ = writeln!(out, "  {} = {}{}", quote(tok), vector(v), sep);
        }
        out.push_str("}\n");
    }

    for step in &schedule.steps {
        let _ = write!(out, "at {} ", step.at);
        match &step.action {
            Action::PrepareRandom { register, state } => {
                let _ = write!(out, "prepare {} as {}", quote(register.as_str()), vector(state));
            }
            Action::ConditionalPrepare {
                source,
                target,
                branches,
            } => {
                let items: Vec<String> = branches
                    .iter()
                    .map(|(t, v)| format!("{} -> {}", quote(t), vector(v)))
                    .collect();
                let _ = write!(
                    out,
                    "condprepare {} from {} {{ {} }}",
                    quote(target.as_str()),
                    quote(source.as_str()),
                    items.join(", ")
                );
            }
            Action::Measure {
                agent,
                basis,
                dest,
                variable,
                record,
            } => {
                let _ = write!(
                    out,
                    "measure {} on {} basis {} into {} as {}",
                    quote(agent.as_str()),
                    register_list(&basis.targets),
                    quote(&basis.name),
                    quote(dest.as_str()),
                    quote(variable)
                );
                if !record.is_empty() {
                    let items: Vec<String> = record
                        .iter()
                        .map(|r| {
                            let prior = r.prior.as_ref().map(|p| format!("{}/", quote(p))).unwrap_or_default();
                            format!("{prior}{} -> {}", quote(&r.outcome), quote(&r.token))
                        })
                        .collect();
                    let _ = write!(out, " {{ {} }}", items.join(", "));
                }
            }
            Action::Infer {
                agent,
                table,
                check_consistency,
            } => {
                let _ = write!(out, "infer {} {}", quote(agent.as_str()), rows(table));
                if *check_consistency {
                    out.push_str(" check");
                }
            }
            Action::AccessMemory {
                agent,
                source,
                variable,
                table,
            } => {
                let _ = write!(out, "access {} from {}", quote(agent.as_str()), quote(source.as_str()));
                if let Some(v) = variable {
                    let _ = write!(out, " as {}", quote(v));
                }
                let _ = write!(out, " {}", rows(table));
            }
            Action::HaltCheck { conditions } => {
                let items: Vec<String> = conditions
                    .iter()
                    .map(|c| format!("{} = {}", quote(c.register.as_str()), quote(&c.value)))
                    .collect();
                let _ = write!(out, "halt when {}", items.join(" and "));
            }
        }
        out.push('\n');
    }
    out
}

fn is_plain(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn quote(s: &str) -> String {
    if is_plain(s) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn register_list(ids: &[RegisterId]) -> String {
    if ids.len() == 1 {
        quote(ids[0].as_str())
    } else {
        let names: Vec<String> = ids.iter().map(|r| quote(r.as_str())).collect();
        format!("({})", names.join(", "))
    }
}

fn rows(table: &InferenceTable) -> String {
    if table.rows.is_empty() {
        return "{ }".into();
    }
    let items: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            let mut s = format!("{} -> {}", quote(&r.trigger), quote(&r.output));
            if !r.conclusions.is_empty() {
                let cs: Vec<String> = r.conclusions.iter().map(conclusion).collect();
                s.push_str(" : ");
                s.push_str(&cs.join("; "));
            }
            s
        })
        .collect();
    format!("{{ {} }}", items.join(", "))
}

fn conclusion(c: &Conclusion) -> String {
    let rule = match &c.rule {
        ConclusionRule::Q => "Q".to_string(),
        ConclusionRule::C { via } => format!("C via {}", quote(via.as_str())),
    };
    format!(
        "certain {} = {} at {} rule {}",
        quote(&c.variable),
        quote(&c.value),
        c.time,
        rule
    )
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Magnitude of one non-zero component `c·√k`, as `p/q` or `sqrt(p/q)`.
fn component(c: &BigRational, k: u8) -> String {
    let c = c.abs();
    if k == 1 {
        fmt_rational(&c)
    } else {
        let radicand = &c * &c * BigRational::from_integer(k.into());
        format!("sqrt({})", fmt_rational(&radicand))
    }
}

fn components(x: &ExactReal) -> Vec<(bool, String)> {
    [1u8, 2, 3, 6]
        .iter()
        .filter(|k| !x.coeff(**k).is_zero())
        .map(|k| (x.coeff(*k).is_negative(), component(x.coeff(*k), *k)))
        .collect()
}

/// Sign and coefficient text; the text is empty for a unit magnitude.
fn coefficient(x: &ExactReal) -> (bool, String) {
    let parts = components(x);
    match parts.as_slice() {
        [(neg, text)] if text == "1" => (*neg, String::new()),
        [(neg, text)] => (*neg, text.clone()),
        _ => {
            let mut s = String::from("(");
            for (i, (neg, text)) in parts.iter().enumerate() {
                match (i, neg) {
                    (0, true) => s.push('-'),
                    (0, false) => {}
                    (_, true) => s.push_str(" - "),
                    (_, false) => s.push_str(" + "),
                }
                s.push_str(text);
            }
            s.push(')');
            (false, s)
        }
    }
}

fn vector(v: &LabelVector) -> String {
    let mut s = String::new();
    for (i, (label, c)) in v.iter().enumerate() {
        let (neg, text) = coefficient(c);
        match (i, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(&text);
        let tokens: Vec<String> = label.iter().map(|t| quote(t)).collect();
        let _ = write!(s, "|{}>", tokens.join(", "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_render_as_radicals() {
        let h = ExactReal::sqrt_ratio(1, 2).unwrap();
        assert_eq!(coefficient(&h), (false, "sqrt(1/2)".into()));
        assert_eq!(coefficient(&-&h), (true, "sqrt(1/2)".into()));
        assert_eq!(coefficient(&ExactReal::one()), (false, String::new()));
        assert_eq!(coefficient(&ExactReal::from_ratio(-1, 3)), (true, "1/3".into()));
        let mixed = &ExactReal::from_ratio(1, 2) - &ExactReal::sqrt_ratio(1, 12).unwrap();
        assert_eq!(coefficient(&mixed), (false, "(1/2 - sqrt(1/12))".into()));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("z_plus"), "z_plus");
        assert_eq!(quote("z=+1/2"), "\"z=+1/2\"");
        assert_eq!(quote("0"), "\"0\"");
        assert_eq!(quote("a\"b"), "\"a\\\"b\"");
    }
}
