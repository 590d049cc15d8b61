mod common;

use causal_cones::causal_subspaces::*;
use causal_cones::operator_core::*;
use common::*;
use proptest::prelude::*;

fn names(scn: &Scenario) -> Vec<String> {
    scn.party_names()
}

fn all_bipartitions(scn: &Scenario) -> Vec<(Vec<String>, Vec<String>)> {
    let p = names(scn);
    let n = p.len();
    (1..(1u32 << n) - 1)
        .map(|m| {
            let pick = |inside: bool| {
                (0..n).filter(|i| (m & (1 << i) != 0) == inside).map(|i| p[i].clone()).collect()
            };
            (pick(true), pick(false))
        })
        .collect()
}

fn order_spec(first: &[String], second: &[String]) -> CausalOrderSpec {
    CausalOrderSpec { blocks: vec![first.to_vec(), second.to_vec()] }
}

#[test]
fn projectors_are_idempotent_and_self_adjoint() {
    let mut r = rng(1);
    for n in 1..=3 {
        for scn in binary_scenarios(n) {
            let mut subs = vec![validity_subspace(&scn).unwrap()];
            for p in names(&scn) {
                subs.push(k_first_subspace(&scn, &p).unwrap());
            }
            for s in subs.clone() {
                subs.push(s.complement());
            }
            for l in &subs {
                let x = random_hermitian(scn.space(), &mut r);
                let y = random_hermitian(scn.space(), &mut r);
                let px = l.project(&x).unwrap();
                let py = l.project(&y).unwrap();
                let scale = x.hs_norm().max(1.0);
                assert!(l.project(&px).unwrap().max_abs_diff(&px) < 1e-11 * scale, "{l}");
                assert!((px.hs_inner(&y) - x.hs_inner(&py)).abs() < 1e-11 * scale * y.hs_norm(), "{l}");
                assert!(l.contains(&px, 1e-11).unwrap(), "{l}");
            }
        }
    }
}

#[test]
fn allowed_terms_match_constraint_masks() {
    for n in 1..=4 {
        for scn in binary_scenarios(n) {
            let valid = allowed_terms(&SubspaceKind::Valid, &scn).unwrap().mask();
            assert_eq!(valid, validity_subspace(&scn).unwrap().mask().unwrap(), "{}", scn.space());
            if n == 1 {
                continue;
            }
            for (first, second) in all_bipartitions(&scn) {
                let kind = SubspaceKind::Order { first: first.clone(), second: second.clone() };
                let allowed = allowed_terms(&kind, &scn).unwrap().mask();
                let l = order_subspace(&scn, &order_spec(&first, &second)).unwrap();
                assert_eq!(allowed, l.mask().unwrap(), "{first:?} < {second:?} on {}", scn.space());
            }
        }
    }
}

/// Applies every constraint to single basis strings with explicit partial
/// traces: the strings annihilated by all of them must be exactly the
/// allowed ones, and no map may mix strings.
fn check_null_space(l: &SubspaceSpec, allowed: &[bool], strings: impl Iterator<Item = usize>) {
    let t = HsTransform::new(&l.space.dims());
    let total = t.n_strings();
    for s in strings {
        let mut e = vec![0.0; total];
        e[s] = 1.0;
        let b = ProcessOperator::new(l.space.clone(), t.from_coords(&e)).unwrap();
        let mut annihilated = true;
        for c in &l.constraints {
            let img = c.apply(&b).unwrap();
            let coords = t.to_coords(img.data());
            let own = coords[s];
            assert!(own.abs() < 1e-12 || (own - 1.0).abs() < 1e-12, "eigenvalue {own}");
            let others: f64 = coords.iter().enumerate().filter(|(i, _)| *i != s).map(|(_, v)| v.abs()).sum();
            assert!(others < 1e-12, "map mixes string {s}");
            annihilated &= own.abs() < 1e-12;
        }
        assert_eq!(annihilated, allowed[s], "string {s} of {}", l.name);
    }
}

#[test]
fn allowed_terms_span_the_null_space_small() {
    for n in 1..=3 {
        for scn in binary_scenarios(n).into_iter().step_by(if n == 3 { 7 } else { 1 }) {
            let l = validity_subspace(&scn).unwrap();
            let allowed = allowed_terms(&SubspaceKind::Valid, &scn).unwrap().mask();
            check_null_space(&l, &allowed, 0..allowed.len());
        }
    }
}

#[test]
fn allowed_terms_span_the_null_space_four_qubit_parties() {
    use rand::Rng;
    let scn = Scenario::qubits(&["A", "B", "C", "D"]).unwrap();
    let l = validity_subspace(&scn).unwrap();
    let allowed = allowed_terms(&SubspaceKind::Valid, &scn).unwrap().mask();
    let mut r = rng(7);
    let picks: Vec<usize> = (0..60).map(|_| r.gen_range(0..allowed.len())).collect();
    check_null_space(&l, &allowed, picks.into_iter());
    let kind = SubspaceKind::Order { first: vec!["A".into(), "C".into()], second: vec!["B".into(), "D".into()] };
    let allowed = allowed_terms(&kind, &scn).unwrap().mask();
    let lo = order_subspace(&scn, &CausalOrderSpec::parse("A,C<B,D").unwrap()).unwrap();
    let picks: Vec<usize> = (0..60).map(|_| r.gen_range(0..allowed.len())).collect();
    check_null_space(&lo, &allowed, picks.into_iter());
}

#[test]
fn trivial_input_party_is_first() {
    let mut r = rng(3);
    for n in 2..=4 {
        for scn in binary_scenarios(n) {
            let valid = validity_subspace(&scn).unwrap();
            for p in scn.parties().iter().filter(|p| p.d_in() == 1) {
                let kf = k_first_subspace(&scn, &p.name).unwrap();
                assert_eq!(valid.mask().unwrap(), kf.mask().unwrap(), "{} first in {}", p.name, scn.space());
                if n <= 3 {
                    let x = random_hermitian(scn.space(), &mut r);
                    let d = valid.project(&x).unwrap().max_abs_diff(&kf.project(&x).unwrap());
                    assert!(d < 1e-11);
                }
            }
        }
    }
}

#[test]
fn trivial_output_party_is_last() {
    let mut r = rng(4);
    for n in 2..=4 {
        for scn in binary_scenarios(n) {
            let valid = validity_subspace(&scn).unwrap();
            for p in scn.parties().iter().filter(|p| p.d_out() == 1) {
                let rest: Vec<String> = names(&scn).into_iter().filter(|q| *q != p.name).collect();
                let lo = order_subspace(&scn, &order_spec(&rest, &[p.name.clone()])).unwrap();
                assert_eq!(valid.mask().unwrap(), lo.mask().unwrap(), "{} last in {}", p.name, scn.space());
                if n <= 3 {
                    let x = random_hermitian(scn.space(), &mut r);
                    let d = valid.project(&x).unwrap().max_abs_diff(&lo.project(&x).unwrap());
                    assert!(d < 1e-11);
                }
            }
        }
    }
}

#[test]
fn order_inside_first_inside_valid() {
    let scn = Scenario::qubits(&["A", "B", "C"]).unwrap();
    let chain = order_subspace(&scn, &CausalOrderSpec::chain(&["A", "B", "C"])).unwrap().mask().unwrap();
    let first = k_first_subspace(&scn, "A").unwrap().mask().unwrap();
    let valid = validity_subspace(&scn).unwrap().mask().unwrap();
    for i in 0..valid.len() {
        assert!(!chain[i] || first[i]);
        assert!(!first[i] || valid[i]);
    }
    assert!(chain.iter().filter(|b| **b).count() < first.iter().filter(|b| **b).count());
}

#[test]
fn forbidden_output_term_is_rejected() {
    let scn = Scenario::qubits(&["A", "B"]).unwrap();
    let sys = scn.space().systems().to_vec();
    // Canonical order A_I A_O B_I B_O.
    let z_out = ProcessOperator::pauli(&sys, "1z11").unwrap();
    let valid = validity_subspace(&scn).unwrap();
    assert!(!valid.contains(&z_out, 1e-6).unwrap());
    let e = TraceReplaceExpr::new().one_minus(&[SystemLabel::output("A", 2)]).replace(&[
        SystemLabel::input("A", 2),
        SystemLabel::input("B", 2),
        SystemLabel::output("B", 2),
    ]);
    assert!(e.apply(&z_out).unwrap().hs_norm() > 0.5);
    let noise = ProcessOperator::identity(scn.space().clone()).scaled(0.25);
    assert!(valid.contains(&noise, 1e-12).unwrap());
}

#[test]
fn reduced_operators_of_valid_processes_are_valid() {
    let mut r = rng(5);
    let scn = Scenario::qubits(&["A", "B", "C"]).unwrap();
    let valid = validity_subspace(&scn).unwrap();
    for _ in 0..5 {
        let w = valid.project(&random_hermitian(scn.space(), &mut r)).unwrap();
        for drop in ["A", "B", "C"] {
            let sys = scn.space().party_systems(drop);
            let reduced = w.partial_trace(&sys).unwrap();
            let sub = Scenario::from_space(reduced.space().clone()).unwrap();
            assert!(validity_subspace(&sub).unwrap().contains(&reduced, 1e-11).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_nearest_point(code in 0usize..64, seed in 0u64..1000) {
        let scn = &binary_scenarios(3)[code];
        let mut r = rng(seed);
        let x = random_hermitian(scn.space(), &mut r);
        let l = validity_subspace(scn).unwrap();
        let px = l.project(&x).unwrap();
        let y = l.project(&random_hermitian(scn.space(), &mut r)).unwrap();
        // x − Px is orthogonal to every element of L.
        let resid = &x - &px;
        prop_assert!(resid.hs_inner(&y).abs() < 1e-10 * x.hs_norm() * y.hs_norm().max(1.0));
        let perp = l.complement().project(&x).unwrap();
        prop_assert!(perp.max_abs_diff(&resid) < 1e-11 * x.hs_norm());
    }

    #[test]
    fn complement_projectors_add_to_identity(code in 0usize..16, seed in 0u64..1000) {
        let scn = &binary_scenarios(2)[code];
        let mut r = rng(seed);
        let x = random_hermitian(scn.space(), &mut r);
        let l = k_first_subspace(scn, "B").unwrap();
        let sum = &l.project(&x).unwrap() + &l.complement().project(&x).unwrap();
        prop_assert!(sum.max_abs_diff(&x) < 1e-11 * x.hs_norm());
    }
}
