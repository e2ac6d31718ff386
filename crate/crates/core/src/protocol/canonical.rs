use crate::agents::{Conclusion, ConclusionRule, InferenceRow, InferenceTable};
use crate::amplitude::ExactReal;
use crate::hilbert::{LabelVector, Register};
use crate::time::TimeStamp;

use super::{Action, AgentDecl, BasisSpec, HaltCondition, RecordRule, Schedule, Step};

/// Text form of [`canonical_fr_schedule`].
pub const CANONICAL_FR_SOURCE: &str = include_str!("../../data/canonical.fr");

fn half() -> ExactReal {
    ExactReal::sqrt_ratio(1, 2).expect("sqrt(1/2)")
}

fn ket(tokens: &[&str]) -> Vec<String> {
    tokens.iter().map(|t| t.to_string()).collect()
}

fn vector(terms: &[(ExactReal, &[&str])]) -> LabelVector {
    LabelVector::from_terms(terms.iter().map(|(c, l)| (c.clone(), ket(l))))
}

/// `sqrt(1/2)|a> ∓ sqrt(1/2)|b>`, the `ok`/`fail` pair of a lab basis.
fn lab_pair(a: &[&str], b: &[&str], ok: &str, fail: &str) -> Vec<(String, LabelVector)> {
    vec![
        (ok.to_string(), vector(&[(half(), a), (-half(), b)])),
        (fail.to_string(), vector(&[(half(), a), (half(), b)])),
    ]
}

fn row(trigger: &str, output: &str, conclusions: Vec<Conclusion>) -> InferenceRow {
    InferenceRow {
        trigger: trigger.into(),
        output: output.into(),
        conclusions,
    }
}

fn certain(variable: &str, value: &str, tick: u32, rule: ConclusionRule) -> Conclusion {
    Conclusion {
        variable: variable.into(),
        value: value.into(),
        time: TimeStamp::at(tick),
        rule,
    }
}

fn via(agent: &str) -> ConclusionRule {
    ConclusionRule::C { via: agent.into() }
}

fn step(tick: u32, action: Action) -> Step {
    Step {
        at: TimeStamp::at(tick),
        action,
    }
}

/// The four-agent protocol: Fbar prepares R and S, F measures S, Wbar
/// measures Fbar's lab, W measures F's lab, and the round halts on
/// (okbar, ok).
pub fn canonical_fr_schedule() -> Schedule {
    let registers = vec![
        Register::new("R", &["heads", "tails"], "heads"),
        Register::new("FbarMem", &["ready", "heads_noconcl", "tails_w_fail"], "ready"),
        Register::new("S", &["up", "down"], "up"),
        Register::new(
            "FMem",
            &[
                "ready",
                "z_plus",
                "z_minus",
                "z_plus_r_tails",
                "z_minus_noconcl",
                "z_plus_w_fail",
            ],
            "ready",
        ),
        Register::new(
            "WbarMem",
            &["ready", "okbar", "failbar", "okbar_w_fail", "failbar_noconcl"],
            "ready",
        ),
        Register::new(
            "WMem",
            &[
                "ready",
                "noconcl",
                "w_fail",
                "noconcl_ok",
                "noconcl_fail",
                "w_fail_ok",
                "w_fail_fail",
            ],
            "ready",
        ),
    ];
    let agents = [("Fbar", "FbarMem"), ("F", "FMem"), ("Wbar", "WbarMem"), ("W", "WMem")]
        .iter()
        .map(|(a, m)| AgentDecl {
            id: (*a).into(),
            memory: (*m).into(),
            conforming: true,
        })
        .collect();

    let zbasis = BasisSpec {
        name: "zbasis".into(),
        targets: vec!["S".into()],
        outcomes: vec![
            ("up".into(), LabelVector::basis(ket(&["up"]))),
            ("down".into(), LabelVector::basis(ket(&["down"]))),
        ],
    };
    let lbar = BasisSpec {
        name: "Lbar".into(),
        targets: vec!["R".into(), "FbarMem".into()],
        outcomes: lab_pair(
            &["heads", "heads_noconcl"],
            &["tails", "tails_w_fail"],
            "okbar",
            "failbar",
        ),
    };
    let l = BasisSpec {
        name: "L".into(),
        targets: vec!["S".into(), "FMem".into()],
        outcomes: lab_pair(&["down", "z_minus_noconcl"], &["up", "z_plus_w_fail"], "ok", "fail"),
    };

    let steps = vec![
        step(
            0,
            Action::PrepareRandom {
                register: "R".into(),
                state: vector(&[
                    (ExactReal::sqrt_ratio(1, 3).expect("sqrt(1/3)"), &["heads"]),
                    (ExactReal::sqrt_ratio(2, 3).expect("sqrt(2/3)"), &["tails"]),
                ]),
            },
        ),
        step(
            1,
            Action::ConditionalPrepare {
                source: "R".into(),
                target: "S".into(),
                branches: vec![
                    ("heads".into(), LabelVector::basis(ket(&["down"]))),
                    ("tails".into(), vector(&[(half(), &["down"]), (half(), &["up"])])),
                ],
            },
        ),
        step(
            2,
            Action::AccessMemory {
                agent: "Fbar".into(),
                source: "R".into(),
                variable: Some("r".into()),
                table: InferenceTable::new(vec![
                    row("heads", "heads_noconcl", vec![]),
                    row(
                        "tails",
                        "tails_w_fail",
                        vec![certain("w", "fail", 31, ConclusionRule::Q)],
                    ),
                ]),
            },
        ),
        step(
            10,
            Action::Measure {
                agent: "F".into(),
                basis: zbasis,
                dest: "FMem".into(),
                variable: "z".into(),
                record: vec![
                    RecordRule {
                        prior: None,
                        outcome: "up".into(),
                        token: "z_plus".into(),
                    },
                    RecordRule {
                        prior: None,
                        outcome: "down".into(),
                        token: "z_minus".into(),
                    },
                ],
            },
        ),
        step(
            11,
            Action::Infer {
                agent: "F".into(),
                table: InferenceTable::new(vec![
                    row(
                        "z_plus",
                        "z_plus_r_tails",
                        vec![certain("r", "tails", 10, ConclusionRule::Q)],
                    ),
                    row("z_minus", "z_minus_noconcl", vec![]),
                ]),
                check_consistency: false,
            },
        ),
        step(
            13,
            Action::Infer {
                agent: "F".into(),
                table: InferenceTable::new(vec![row(
                    "z_plus_r_tails",
                    "z_plus_w_fail",
                    vec![certain("w", "fail", 31, via("Fbar"))],
                )]),
                check_consistency: false,
            },
        ),
        step(
            20,
            Action::Measure {
                agent: "Wbar".into(),
                basis: lbar,
                dest: "WbarMem".into(),
                variable: "wbar".into(),
                record: vec![],
            },
        ),
        step(
            21,
            Action::Infer {
                agent: "Wbar".into(),
                table: InferenceTable::new(vec![
                    row(
                        "okbar",
                        "okbar_w_fail",
                        vec![
                            certain("z", "up", 10, ConclusionRule::Q),
                            certain("w", "fail", 31, via("F")),
                        ],
                    ),
                    row("failbar", "failbar_noconcl", vec![]),
                ]),
                check_consistency: false,
            },
        ),
        step(
            26,
            Action::AccessMemory {
                agent: "W".into(),
                source: "WbarMem".into(),
                variable: None,
                table: InferenceTable::new(vec![
                    row("okbar_w_fail", "w_fail", vec![certain("w", "fail", 31, via("Wbar"))]),
                    row("failbar_noconcl", "noconcl", vec![]),
                ]),
            },
        ),
        step(
            30,
            Action::Measure {
                agent: "W".into(),
                basis: l,
                dest: "WMem".into(),
                variable: "w".into(),
                record: [
                    ("noconcl", "ok", "noconcl_ok"),
                    ("noconcl", "fail", "noconcl_fail"),
                    ("w_fail", "ok", "w_fail_ok"),
                    ("w_fail", "fail", "w_fail_fail"),
                ]
                .iter()
                .map(|(p, o, t)| RecordRule {
                    prior: Some((*p).into()),
                    outcome: (*o).into(),
                    token: (*t).into(),
                })
                .collect(),
            },
        ),
        step(
            31,
            Action::Infer {
                agent: "W".into(),
                table: InferenceTable::default(),
                check_consistency: true,
            },
        ),
        step(
            40,
            Action::HaltCheck {
                conditions: vec![
                    HaltCondition {
                        register: "WbarMem".into(),
                        value: "okbar".into(),
                    },
                    HaltCondition {
                        register: "WMem".into(),
                        value: "ok".into(),
                    },
                ],
            },
        ),
    ];

    Schedule {
        registers,
        agents,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{parse_schedule, to_dsl, validate};

    #[test]
    fn builder_matches_source_file() {
        let parsed = parse_schedule(CANONICAL_FR_SOURCE).unwrap();
        assert_eq!(parsed, canonical_fr_schedule());
    }

    #[test]
    fn canonical_is_valid_and_round_trips() {
        let s = canonical_fr_schedule();
        assert!(validate(&s).is_empty(), "{:?}", validate(&s));
        assert_eq!(parse_schedule(&to_dsl(&s)).unwrap(), s);
        assert_eq!(s.space().unwrap().dimension(), 2 * 3 * 2 * 6 * 5 * 7);
    }
}
