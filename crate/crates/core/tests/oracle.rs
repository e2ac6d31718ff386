//! The engine against the independent dense simulation.

mod support;

use wignerbox::engine::Engine;
use wignerbox::protocol::canonical_fr_schedule;
use wignerbox::ExactReal;

const TOL: f64 = 1e-12;

fn engine() -> Engine {
    Engine::new(canonical_fr_schedule()).unwrap()
}

#[test]
fn dense_steps_are_orthogonal() {
    for (i, op) in support::steps().iter().enumerate() {
        assert!(op.orthogonality_defect() < 1e-14, "step {i}");
    }
}

#[test]
fn every_step_matches_dense_evolution() {
    let e = engine();
    let exact = e.evolve_round::<ExactReal>().unwrap();
    let float = e.evolve_round::<f64>().unwrap();
    let dense = support::evolve();
    assert_eq!(e.space().dimension(), support::dimension());
    assert_eq!(exact.after.len(), dense.len());
    for (k, want) in dense.iter().enumerate() {
        assert_eq!(exact.after[k].0.tick() as u32, support::TICKS[k]);
        let d = support::max_diff(&support::densify(&exact.after[k].1), want);
        assert!(d < TOL, "exact step {k}: {d}");
        let d = support::max_diff(&support::densify(&float.after[k].1), want);
        assert!(d < TOL, "float step {k}: {d}");
    }
}

#[test]
fn outcome_distribution_matches_dense() {
    let e = engine();
    let trace = e.evolve_round::<ExactReal>().unwrap();
    let got = e.outcome_distribution(trace.final_state()).unwrap();
    let want = support::outcome_distribution(support::evolve().last().unwrap());
    assert_eq!(got.len(), want.len());
    for ((wbar, w), p) in &want {
        let exact = &got[&vec![wbar.clone(), w.clone()]];
        assert!((exact.to_f64() - p).abs() < TOL, "{wbar},{w}");
    }
    let sum: f64 = want.values().sum();
    assert!((sum - 1.0).abs() < TOL);
    let p = |a: &str, b: &str| want[&(a.to_string(), b.to_string())];
    assert!((p("okbar", "ok") - 1.0 / 12.0).abs() < TOL);
    assert!((p("okbar", "fail") - 1.0 / 12.0).abs() < TOL);
    assert!((p("failbar", "ok") - 1.0 / 12.0).abs() < TOL);
    assert!((p("failbar", "fail") - 0.75).abs() < TOL);
}

#[test]
fn merged_final_amplitudes() {
    let e = engine();
    let trace = e.evolve_round::<ExactReal>().unwrap();
    let bases = [e.basis("Lbar").unwrap().clone(), e.basis("L").unwrap().clone()];
    let presented = e.present(trace.final_state(), &bases).unwrap();
    let dense = support::evolve();
    let psi = dense.last().unwrap();
    let find = |lbar: &str, wbar_mem: &str, l: &str, w_mem: &str| {
        let space = presented.space();
        let label: Vec<String> = space
            .registers()
            .iter()
            .map(|r| {
                match r.id.as_str() {
                    "Lbar" => lbar,
                    "WbarMem" => wbar_mem,
                    "L" => l,
                    "WMem" => w_mem,
                    other => panic!("unexpected register {other}"),
                }
                .to_string()
            })
            .collect();
        presented.amplitude(&label)
    };
    let cases = [
        (
            "failbar",
            "failbar_noconcl",
            "fail",
            "noconcl_fail",
            ExactReal::sqrt_ratio(3, 4),
        ),
        (
            "failbar",
            "failbar_noconcl",
            "ok",
            "noconcl_ok",
            ExactReal::sqrt_ratio(1, 12),
        ),
    ];
    for (lbar, wm, l, m, want) in cases {
        let want = want.unwrap();
        assert_eq!(find(lbar, wm, l, m), want);
        let oracle = support::presented_amplitude(psi, lbar, wm, l, m);
        assert!((oracle - want.to_f64()).abs() < TOL, "{lbar} {l}: {oracle}");
    }
    // The violating branch.
    let v = find("okbar", "okbar_w_fail", "ok", "w_fail_ok");
    let oracle = support::presented_amplitude(psi, "okbar", "okbar_w_fail", "ok", "w_fail_ok");
    assert!((v.to_f64() - oracle).abs() < TOL);
    assert!((oracle * oracle - 1.0 / 12.0).abs() < TOL);
}

#[test]
fn wbar_measurement_leaves_f_memory_alone() {
    let dense = support::evolve();
    // Steps 5 and 6 are F's rule-C inference (0:13) and Wbar's measurement (0:20).
    let before = support::marginal(&dense[5], support::F_MEM);
    let after = support::marginal(&dense[6], support::F_MEM);
    assert!(support::max_diff(&before, &after) < TOL);

    let e = engine();
    let trace = e.evolve_round::<ExactReal>().unwrap();
    let fmem = [wignerbox::hilbert::RegisterId::new("FMem")];
    assert_eq!(
        trace.after[5].1.marginal(&fmem).unwrap(),
        trace.after[6].1.marginal(&fmem).unwrap()
    );
}
