//! End-to-end acceptance checks, one line per criterion.
//!
//! `CAUSALCONES_ACCEPT_SAMPLES=tri,quad` overrides the sample counts of the
//! gap search (defaults 100 and 50). Runs below the defaults report
//! REDUCED instead of PASS.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use causal_cones::causal_subspaces::*;
use causal_cones::cli_io::write_gap_report;
use causal_cones::model_zoo::*;
use causal_cones::operator_core::*;
use causal_cones::robustness::*;
use causal_cones::sep_cones::*;
use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const ACT_TOL: f64 = 1e-4;
const ACT_SECONDS: f64 = 30.0;
const SWITCH_VALUE: f64 = 2.343;
const SWITCH_TOL: f64 = 5e-3;
const CLOSED_FORM_TOL: f64 = 1e-12;
const DECOMPOSITION_TOL: f64 = 1e-8;
const DUALITY_TOL: f64 = 1e-6;
const GAP_TOL: f64 = 1e-4;
const SUBSPACE_TOL: f64 = 1e-11;
const TELEPORT_TOL: f64 = 1e-11;
const CONDITIONAL_TOL: f64 = 1e-10;

enum Status {
    Pass,
    Fail,
    Reduced,
}

type Check = Result<(Status, String), causal_cones::Error>;

fn pass_if(ok: bool, detail: String) -> Check {
    Ok((if ok { Status::Pass } else { Status::Fail }, detail))
}

fn psi0() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

fn act_robustness() -> Check {
    let target = 4.0 / 3f64.sqrt() - 2.0;
    let t0 = Instant::now();
    let res = random_robustness(&w_act(), &tripartite_sep_cone(&act_scenario())?, &RobustnessOptions::default())?;
    let secs = t0.elapsed().as_secs_f64();
    let closed = s_act().hs_inner(&w_act()) + target;
    pass_if(
        (res.r_star - target).abs() < ACT_TOL && closed.abs() < CLOSED_FORM_TOL && secs < ACT_SECONDS && res.verdict == Verdict::Nonseparable,
        format!("r* = {:.9} (target {target:.9}), Tr[S·W] + r = {closed:.1e}, {secs:.1}s", res.r_star),
    )
}

fn switch_robustness() -> Check {
    let w = switch4(psi0())?;
    let cone = restricted_cone(&Scenario::from_space(w.space().clone())?)?;
    let res = random_robustness(&w, &cone, &RobustnessOptions::default())?;
    pass_if((res.r_star - SWITCH_VALUE).abs() < SWITCH_TOL, format!("r* = {:.6} in {}", res.r_star, cone.name))
}

fn traced_switch_decomposition() -> Check {
    let w = trd_switch(psi0())?;
    let scn = Scenario::from_space(w.space().clone())?;
    let (t1, t2) = trd_switch_terms(psi0())?;
    let Membership::Member(dec) = membership(&build_cone(&ConeChoice::Auto, &scn)?, &w, &RobustnessOptions::default())? else {
        return pass_if(false, "not found to be a member".into());
    };
    let parts = dec.nonzero(1e-6);
    if parts.len() != 2 {
        return pass_if(false, format!("{} nonzero components", parts.len()));
    }
    let (a, b) = (&parts[0].operator, &parts[1].operator);
    let err = (a.max_abs_diff(&t1).max(b.max_abs_diff(&t2))).min(a.max_abs_diff(&t2).max(b.max_abs_diff(&t1)));
    let valid = validity_subspace(&scn)?;
    let invalid = !valid.contains(a, 1e-3)? && !valid.contains(b, 1e-3)?;
    pass_if(err < DECOMPOSITION_TOL && invalid, format!("2 components, max deviation {err:.1e}, each invalid: {invalid}"))
}

fn gap_process() -> Check {
    let gs = gap_scenario();
    let closed = s_gap().hs_inner(&w_gap()) - (1.0 - 2f64.sqrt());
    let nec = random_robustness(&w_gap(), &necessary_cone(&gs)?, &RobustnessOptions::default())?;
    let verified = nec.witness_check.as_ref().is_some_and(|c| c.accepted);
    let weak = necessary_cone_with(&gs, &Branches::to_last(&gs), 5)?;
    let weak_res = random_robustness(&w_gap(), &weak, &RobustnessOptions::default())?;
    pass_if(
        closed.abs() < CLOSED_FORM_TOL && nec.r_star > 0.0 && verified && weak_res.r_star <= 1e-6,
        format!(
            "Tr[S·W] − (1−√2) = {closed:.1e}, necessary r* = {:.9} (witness verified: {verified}), weak r* = {:.1e}",
            nec.r_star, weak_res.r_star
        ),
    )
}

fn strong_duality() -> Check {
    let opts = RobustnessOptions::default();
    let sw = switch4(psi0())?;
    let sw_scn = Scenario::from_space(sw.space().clone())?;
    let cases: Vec<(Scenario, Vec<ProcessOperator>)> = vec![
        (act_scenario(), vec![w_act(), white_noise(&act_scenario())]),
        (sw_scn, vec![sw]),
        (gap_scenario(), vec![w_gap()]),
    ];
    let (mut worst, mut n) = (0.0f64, 0);
    for (scn, named) in cases {
        let cone = build_cone(&ConeChoice::Auto, &scn)?;
        let mut ops = named;
        ops.extend((0..20).map(|s| sample_random_process(&scn, 1000 + s, None)).collect::<Result<Vec<_>, _>>()?);
        for w in &ops {
            let rep = duality_gap_report(w, &cone, &opts)?;
            worst = worst.max(rep.gap / (1.0 + rep.r_star.abs()));
            n += 1;
        }
    }
    pass_if(worst <= DUALITY_TOL, format!("{n} solves, max |r* + Tr[S*W]| / (1 + |r*|) = {worst:.1e}"))
}

fn sample_counts() -> (usize, usize) {
    std::env::var("CAUSALCONES_ACCEPT_SAMPLES")
        .ok()
        .and_then(|v| {
            let (a, b) = v.split_once(',')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        })
        .unwrap_or((100, 50))
}

fn gap_search_equivalence() -> Check {
    let (n_tri, n_quad) = sample_counts();
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let mut detail = Vec::new();
    let mut ok = true;
    let scenarios = [
        ("tripartite", Scenario::qubits(&["A", "B", "C"])?, n_tri),
        ("restricted-4", Scenario::new(&[("A", 1, 2), ("B", 2, 2), ("C", 2, 2), ("D", 2, 2)])?, n_quad),
    ];
    for (name, scn, n) in scenarios {
        let t0 = Instant::now();
        let mut cfg = GapSearchConfig::for_scenario(&scn);
        cfg.flag_threshold = GAP_TOL;
        let report = gap_search(&scn, n, 2024, &cfg)?;
        let dumped = write_gap_report(&dir.join(name), &report)?;
        let failed = report.count(SampleStatus::Failed);
        let worst = report.max_abs_gap();
        ok &= failed == 0 && worst <= GAP_TOL;
        detail.push(format!(
            "{name}: {n} samples, max |gap| {worst:.1e}, {failed} failed, {} dumped ({:.0}s)",
            dumped.len(),
            t0.elapsed().as_secs_f64()
        ));
    }
    let status = match (ok, (n_tri, n_quad) >= (100, 50)) {
        (false, _) => Status::Fail,
        (true, true) => Status::Pass,
        (true, false) => Status::Reduced,
    };
    Ok((status, detail.join("; ")))
}

fn subspace_suite() -> Check {
    let mut r = rng(1);
    let (mut worst, mut count) = (0.0f64, 0);
    for n in 1..=3 {
        for scn in binary_scenarios(n) {
            let mut subs = vec![validity_subspace(&scn)?];
            for p in scn.party_names() {
                subs.push(k_first_subspace(&scn, &p)?);
            }
            for s in subs.clone() {
                subs.push(s.complement());
            }
            for l in &subs {
                let x = random_hermitian(scn.space(), &mut r);
                let y = random_hermitian(scn.space(), &mut r);
                let (px, py) = (l.project(&x)?, l.project(&y)?);
                let scale = x.hs_norm().max(1.0) * y.hs_norm().max(1.0);
                worst = worst
                    .max(l.project(&px)?.max_abs_diff(&px) / scale)
                    .max((px.hs_inner(&y) - x.hs_inner(&py)).abs() / scale)
                    .max(l.complement().project(&px)?.max_abs() / scale);
                count += 1;
            }
        }
    }
    pass_if(worst < SUBSPACE_TOL, format!("{count} projectors, max idempotence/adjointness/complement defect {worst:.1e}"))
}

fn phi_plus(left: &[SystemLabel], right: &SystemLabel) -> ProcessOperator {
    let d: usize = left.iter().map(|s| s.dim).product();
    let n = d * d;
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..d {
        for j in 0..d {
            data[(i * d + i) * n + j * d + j] = C64::new(1.0 / d as f64, 0.0);
        }
    }
    let mut order = left.to_vec();
    order.push(right.clone());
    ProcessOperator::from_ordered(order, data).unwrap()
}

fn teleport_error(scn: &Scenario, k: &str, k2: &str, seed: u64) -> f64 {
    let mut r = rng(seed);
    let w = sample_random_process(scn, seed, None).unwrap();
    let io = w.space().party_systems(k);
    let d: usize = io.iter().map(|s| s.dim).product();
    let target = SystemLabel::ancilla(k2, "t", d);
    let inner = SystemLabel::ancilla(k, "tt", d);
    let extra = vec![SystemLabel::ancilla(k, "x", 2)];
    let rho = random_psd(&LabeledSpace::new(extra.clone()).unwrap(), &mut r);
    let rho = rho.scaled(1.0 / rho.trace());
    let full = w.tensor(&phi_plus(&[inner.clone()], &target)).unwrap().tensor(&rho).unwrap();
    let m = phi_plus(&io, &inner).tensor(&ProcessOperator::identity(LabeledSpace::new(extra).unwrap())).unwrap();
    let cond = conditional_matrix(&full, &m).unwrap();
    let expected = relabel_teleport(&w, &io, &target).unwrap().scaled(1.0 / (d * d) as f64);
    cond.max_abs_diff(&expected)
}

fn teleportation() -> Check {
    let ab = Scenario::qubits(&["A", "B"])?;
    let abc = Scenario::qubits(&["A", "B", "C"])?;
    let mut worst = 0.0f64;
    for seed in 0..3 {
        worst = worst.max(teleport_error(&ab, "A", "B", seed)).max(teleport_error(&abc, "B", "C", 10 + seed));
    }
    pass_if(worst < TELEPORT_TOL, format!("max entrywise deviation {worst:.1e}"))
}

fn random_bloch(r: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

fn conditional_regression() -> Check {
    let mut r = rng(13);
    let ab = Scenario::qubits(&["A", "B"])?;
    let a_first = order_subspace(&ab, &CausalOrderSpec::chain(&["A", "B"]))?;
    let b_first = order_subspace(&ab, &CausalOrderSpec::chain(&["B", "A"]))?;
    let mut worst = 0.0f64;
    let mut ordered = true;
    for _ in 0..20 {
        let cv = random_bloch(&mut r);
        let data = vec![
            C64::new(1.0 + cv[2], 0.0),
            C64::new(cv[0], -cv[1]),
            C64::new(cv[0], cv[1]),
            C64::new(1.0 - cv[2], 0.0),
        ];
        let m = ProcessOperator::from_ordered(vec![SystemLabel::input("C", 2)], data)?;
        let cond = conditional_matrix(&w_act(), &m)?;
        let (wab, wba) = act_conditional_terms(cv);
        worst = worst.max(cond.max_abs_diff(&(&wab.scaled(0.5) + &wba.scaled(0.5))));
        ordered &= a_first.contains(&wab, CONDITIONAL_TOL)? && b_first.contains(&wba, CONDITIONAL_TOL)?;
    }
    pass_if(worst < CONDITIONAL_TOL && ordered, format!("20 outcomes, max deviation {worst:.1e}, terms ordered: {ordered}"))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [(&str, fn() -> Check); 9] = [
        ("ACT robustness in the tripartite cone", act_robustness),
        ("quantum switch robustness in its restricted cone", switch_robustness),
        ("traced switch decomposition", traced_switch_decomposition),
        ("gap process: closed form, necessary bound, weak system", gap_process),
        ("strong duality", strong_duality),
        ("necessary vs sufficient bounds on random samples", gap_search_equivalence),
        ("subspace projectors", subspace_suite),
        ("teleportation identity", teleportation),
        ("ACT conditional matrix", conditional_regression),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (tag, detail) = match f() {
            Ok((Status::Pass, d)) => ("PASS", d),
            Ok((Status::Reduced, d)) => ("REDUCED", d),
            Ok((Status::Fail, d)) => {
                failures += 1;
                ("FAIL", d)
            }
            Err(e) => {
                failures += 1;
                ("FAIL", format!("error: {e}"))
            }
        };
        println!("criterion {}: {tag} {name}: {detail} [{:.1}s]", i + 1, t0.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
