use causal_cones::causal_subspaces::*;
use causal_cones::model_zoo::*;
use causal_cones::operator_core::*;

fn zero_psi() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

#[test]
fn w_act_is_valid_and_c_first() {
    let w = w_act();
    let scn = act_scenario();
    assert!(w.min_eigenvalue() > -1e-12);
    assert!((w.trace() - 4.0).abs() < 1e-12);
    assert!(k_first_subspace(&scn, "C").unwrap().contains(&w, 1e-12).unwrap());
    let e = TraceReplaceExpr::new()
        .one_minus(&[SystemLabel::output("A", 2)])
        .replace(&[
            SystemLabel::input("B", 2),
            SystemLabel::output("B", 2),
            SystemLabel::input("C", 2),
        ]);
    assert!(e.apply(&w).unwrap().max_abs() < 1e-14);
}

#[test]
fn w_act_hs_coefficients() {
    let coeffs = hs_decompose(&w_act(), 1e-12);
    // Canonical order: A_I A_O B_I B_O C_I C_O.
    let digits = |s: &str| -> Vec<usize> {
        s.chars().map(|c| match c { '1' => 0, 'x' => 1, 'y' => 2, 'z' => 3, _ => unreachable!() }).collect()
    };
    let get = |s: &str| coeffs.get(&digits(s)).cloned().unwrap_or(0.0);
    assert!((get("111111") - 1.0 / 8.0).abs() < 1e-12);
    assert!((get("z1z111") + 1.0 / 8.0).abs() < 1e-12);
    assert!((get("xzx111") - 3f64.sqrt() / 32.0).abs() < 1e-12);
    assert!((get("z111z1") - 1.0 / 16.0).abs() < 1e-12);
    assert!((get("xzy1x1") - 1.0 / 32.0).abs() < 1e-12);
    assert_eq!(coeffs.len(), 12);
}

#[test]
fn switch_is_valid_process() {
    let w = switch4(zero_psi()).unwrap();
    let scn = Scenario::from_space(w.space().clone()).unwrap();
    assert!(validity_subspace(&scn).unwrap().contains(&w, 1e-12).unwrap());
    assert!(w.min_eigenvalue() > -1e-12);
}

#[test]
fn traced_switch_terms_cancel_in_validity() {
    let (a, b) = trd_switch_terms(zero_psi()).unwrap();
    let t = |p: &str, out: bool| {
        if out { SystemLabel::output(p, 2).with_tag("t") } else { SystemLabel::input(p, 2).with_tag("t") }
    };
    let e = TraceReplaceExpr::new()
        .one_minus(&[SystemLabel::output("A", 2).with_tag("c")])
        .replace(&[t("B", false), t("B", true), t("C", false), t("C", true)]);
    let ea = e.apply(&a).unwrap();
    let eb = e.apply(&b).unwrap();
    assert!(ea.hs_norm() > 0.1);
    assert!((&ea + &eb).max_abs() < 1e-14);
}

#[test]
fn w_gap_properties() {
    let w = w_gap();
    let scn = gap_scenario();
    let ev = w.eigenvalues();
    assert!(ev[0] > -1e-12);
    assert!((ev[ev.len() - 1] - 0.25).abs() < 1e-12);
    assert!(k_first_subspace(&scn, "A").unwrap().contains(&w, 1e-12).unwrap());
    let s = s_gap();
    let noise = white_noise(&scn);
    assert!((s.hs_inner(&noise) - 1.0).abs() < 1e-12);
}

#[test]
fn relabeled_gap_is_ordered_both_ways() {
    let w = w_gap();
    let target = SystemLabel::ancilla("D", "p", 2);
    let r = relabel_teleport(&w, &[SystemLabel::input("A", 1), SystemLabel::output("A", 2)], &target).unwrap();
    let scn = Scenario::from_space(r.space().clone()).unwrap();
    assert_eq!(scn.n_parties(), 3);
    for chain in [["B", "C", "D"], ["C", "B", "D"]] {
        let l = order_subspace(&scn, &CausalOrderSpec::chain(&chain)).unwrap();
        assert!(l.contains(&r, 1e-12).unwrap(), "{chain:?}");
    }
}

#[test]
fn fixed_order_channel_is_ordered() {
    let scn = Scenario::qubits(&["A", "B", "C"]).unwrap();
    let w = fixed_order_channel(&scn, &["B", "A", "C"]).unwrap();
    assert!((w.trace() - 8.0).abs() < 1e-12);
    let l = order_subspace(&scn, &CausalOrderSpec::chain(&["B", "A", "C"])).unwrap();
    assert!(l.contains(&w, 1e-12).unwrap());
    let wrong = order_subspace(&scn, &CausalOrderSpec::chain(&["A", "B", "C"])).unwrap();
    assert!(!wrong.contains(&w, 1e-6).unwrap());
}

#[test]
fn sampler_outputs_valid_processes() {
    let scn = Scenario::qubits(&["A", "B", "C"]).unwrap();
    let l = validity_subspace(&scn).unwrap();
    for seed in 0..3 {
        let w = sample_random_process(&scn, seed, None).unwrap();
        assert!(w.min_eigenvalue() > -1e-9);
        assert!((w.trace() - 8.0).abs() < 1e-9);
        assert!(l.contains(&w, 1e-9).unwrap());
    }
    let a = sample_random_process(&scn, 7, None).unwrap();
    let b = sample_random_process(&scn, 7, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn symmetric_sampler_is_invariant() {
    let scn = Scenario::new(&[("A", 1, 2), ("B", 2, 2), ("C", 2, 2)]).unwrap();
    let w = sample_random_process(&scn, 3, Some(&["B", "C"])).unwrap();
    let swapped = symmetrize_parties(&w, &["B", "C"]).unwrap();
    assert!(w.max_abs_diff(&swapped) < 1e-12);
}
