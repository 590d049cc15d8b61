use std::path::Path;

use clap::Parser;
use causal_cones::causal_subspaces::Scenario;
use causal_cones::cli_io::*;
use causal_cones::conic_solver::*;
use causal_cones::model_zoo::*;
use causal_cones::operator_core::*;
use causal_cones::sep_cones::*;
use causal_cones::Error;

fn cli(dir: &Path, args: &[&str]) -> causal_cones::Result<Outcome> {
    let mut v = vec!["causalcones", "--out-dir", dir.to_str().unwrap()];
    v.extend_from_slice(args);
    run(&Cli::try_parse_from(v).expect("arguments parse"))
}

#[test]
fn operator_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.json");
    for w in [w_act(), trd_switch([C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap()] {
        save_operator(&p, &w).unwrap();
        let back = load_operator(&p).unwrap();
        assert_eq!(back, w);
    }
}

#[test]
fn load_reorders_systems_canonically() {
    let a = SystemLabel::output("A", 2);
    let b = SystemLabel::input("B", 3);
    let mut m = vec![C64::new(0.0, 0.0); 36];
    // |B=2, A=1⟩ sits at 2·2 + 1 = 5 in (B, A) order and at 1·3 + 2 = 5 in (A, B).
    m[5 * 6 + 5] = C64::new(1.0, 0.0);
    let j = OperatorJson {
        systems: vec![b.clone(), a.clone()],
        re: (0..6).map(|i| (0..6).map(|k| m[i * 6 + k].re).collect()).collect(),
        im: vec![vec![0.0; 6]; 6],
    };
    let w = j.to_operator("inline").unwrap();
    assert_eq!(w.space().systems(), &[a, b]);
    assert_eq!(w.get(5, 5), C64::new(1.0, 0.0));
    let mut j2 = j.clone();
    j2.re = vec![vec![0.0; 6]; 6];
    j2.re[1][1] = 1.0; // |B=0, A=1⟩ → canonical index 1·3 + 0 = 3
    let w2 = j2.to_operator("inline").unwrap();
    assert_eq!(w2.get(3, 3), C64::new(1.0, 0.0));
    assert_eq!(w2.get(1, 1), C64::new(0.0, 0.0));
}

#[test]
fn non_hermitian_input_reports_asymmetry() {
    let mut j = OperatorJson::from_operator(&w_act());
    j.im[0][3] += 0.25;
    match j.to_operator("x") {
        Err(Error::NotHermitian(a)) => assert!((a - 0.25).abs() < 1e-12, "{a}"),
        other => panic!("expected NotHermitian, got {other:?}"),
    }
    j.re.pop();
    assert!(matches!(j.to_operator("x"), Err(Error::Schema { .. })));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"systems\": [],\n  \"re\": [1,\n}").unwrap();
    let msg = load_operator(&p).unwrap_err().to_string();
    assert!(msg.contains("line 4"), "{msg}");
}

#[test]
fn scenario_specs() {
    let s = parse_scenario("A:1:2, B:2:2,C:2").unwrap();
    assert_eq!(s.n_parties(), 3);
    assert_eq!(s.d_in_total(), 4);
    assert_eq!(s.d_out_total(), 8);
    assert_eq!(parse_scenario("A,B").unwrap(), Scenario::qubits(&["A", "B"]).unwrap());
    assert!(parse_scenario("A:x").is_err());
    assert!(parse_scenario("").is_err());
}

#[test]
fn robustness_verb_writes_replayable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["robustness", "--example", "wact", "--cone", "b1", "--format", "csv"]).unwrap();
    assert_eq!(out, Outcome::Definitive);
    let res = load_result(&dir.path().join("robustness.json")).unwrap();
    assert!((res.r_star - (4.0 / 3f64.sqrt() - 2.0)).abs() < 1e-6);
    assert_eq!(res.verdict, causal_cones::robustness::Verdict::Nonseparable);
    let csv = std::fs::read_to_string(dir.path().join("robustness.csv")).unwrap();
    assert!(csv.starts_with("cone,r_star,verdict"));

    // Replay: the stored witness alone certifies the verdict.
    let s = res.witness.unwrap().to_operator("witness").unwrap();
    assert!((s.hs_inner(&w_act()) + res.r_star).abs() < 1e-6);
    let out = cli(dir.path(), &["verify-witness", "--witness", dir.path().join("witness.json").to_str().unwrap(), "--cone", "b1"]);
    assert_eq!(out.unwrap(), Outcome::Definitive);

    let dec: DecompositionJson = causal_cones::cli_io::json::read_json(&dir.path().join("decomposition.json")).unwrap();
    let (sum_err, min_eig) = dec.recheck().unwrap();
    assert!(sum_err < 1e-6 && min_eig > -1e-7, "{sum_err:e} {min_eig:e}");
}

#[test]
fn validate_and_examples_verbs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["validate", "--example", "switch4"]).unwrap(), Outcome::Definitive);
    let v: serde_json::Value = causal_cones::cli_io::json::read_json(&dir.path().join("validate.json")).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["normalized"], true);

    let f = dir.path().join("gap.json");
    cli(dir.path(), &["examples", "build", "w-gap", "--out", f.to_str().unwrap()]).unwrap();
    assert_eq!(load_operator(&f).unwrap(), w_gap());
    let psi = dir.path().join("sw.json");
    cli(dir.path(), &["examples", "build", "switch4", "--psi", "0.6,0,0,0.8", "--out", psi.to_str().unwrap()]).unwrap();
    assert_eq!(load_operator(&psi).unwrap(), switch4([C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap());
    assert!(cli(dir.path(), &["examples", "build", "switch4", "--psi", "1,0,1,0", "--out", "x.json"]).is_err());
}

#[test]
fn decompose_verb_splits_the_traced_switch() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["decompose", "--example", "trd-switch", "--cone", "tripartite"]).unwrap();
    assert_eq!(out, Outcome::Definitive);
    let dec: DecompositionJson = causal_cones::cli_io::json::read_json(&dir.path().join("decomposition.json")).unwrap();
    assert_eq!(dec.components.len(), 2);
    assert!(dec.recheck().unwrap().0 < 1e-7);
}

#[test]
fn auto_refuses_general_four_party_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scn = Scenario::qubits(&["A", "B", "C", "D"]).unwrap();
    let f = dir.path().join("w.json");
    save_operator(&f, &white_noise(&scn)).unwrap();
    let err = cli(dir.path(), &["robustness", "--input", f.to_str().unwrap()]).unwrap_err();
    assert!(matches!(err, Error::ConeSelection(_)));
    assert!(err.to_string().contains("necessary"));
}

#[test]
fn declared_scenario_must_match_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let err = cli(dir.path(), &["validate", "--example", "wact", "--scenario", "A,B,C"]).unwrap_err();
    assert!(matches!(err, Error::SpaceMismatch(_)));
    assert!(cli(dir.path(), &["validate", "--example", "wact", "--scenario", "A:2:2,B:2:2,C:2:1"]).is_ok());
}

#[test]
fn evaluate_verb() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    save_operator(&s, &s_gap()).unwrap();
    cli(dir.path(), &["evaluate", "--witness", s.to_str().unwrap(), "--example", "wgap", "--format", "csv"]).unwrap();
    let v: serde_json::Value = causal_cones::cli_io::json::read_json(&dir.path().join("evaluate.json")).unwrap();
    assert!((v["value"].as_f64().unwrap() - (1.0 - 2f64.sqrt())).abs() < 1e-12);
    assert!((v["witness_trace_on_noise"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sample_search_writes_csv_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let inject = dir.path().join("inj.json");
    save_operator(&inject, &w_gap()).unwrap();
    let out = cli(
        dir.path(),
        &["sample-search", "--scenario", "A:1:2,B:2:2,C:2:2,D:2:1", "--samples", "2", "--seed", "3", "--flag", "-1", "--inject", inject.to_str().unwrap()],
    )
    .unwrap();
    assert_eq!(out, Outcome::Definitive);
    let mut rdr = csv::Reader::from_path(dir.path().join("gap_search.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["seed", "r_plus", "r_minus", "gap", "status"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    // A negative threshold flags everything, so every operator is dumped.
    for r in &rows {
        assert_eq!(&r[4], "flagged");
        assert!(dir.path().join(format!("flagged_{}.json", &r[0])).exists());
    }
    let gap_row = &rows[2];
    assert!((gap_row[1].parse::<f64>().unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-6);
}

/// Re-checks an exported problem from its JSON alone: the solver's primal
/// point satisfies the triplet equalities and reproduces the objective.
#[test]
fn exported_problem_replays_offline() {
    let cone = restricted_cone(&act_scenario()).unwrap();
    let nf = NormalForm::build(&cone, &w_act(), Some(&white_noise(&cone.scenario))).unwrap();
    let sol = solve(&nf.problem, &SolverConfig::default()).unwrap();
    let v = nf.to_json();
    let p = &v["problem"];
    let rows = p["n_rows"].as_u64().unwrap() as usize;
    let mut ax = vec![0.0; rows];
    for t in p["triplets"].as_array().unwrap() {
        let t = t.as_array().unwrap();
        ax[t[0].as_u64().unwrap() as usize] += t[2].as_f64().unwrap() * sol.x[t[1].as_u64().unwrap() as usize];
    }
    let b: Vec<f64> = p["rhs"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let err = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err:e}");
    let obj: f64 = p["objective"].as_array().unwrap().iter().map(|e| e[1].as_f64().unwrap() * sol.x[e[0].as_u64().unwrap() as usize]).sum();
    assert!((obj - sol.objective).abs() < 1e-9, "{obj} vs {}", sol.objective);
    assert!((nf.t_value(&sol) - (4.0 / 3f64.sqrt() - 2.0)).abs() < 1e-6);
    let back: SDPProblem = serde_json::from_value(p.clone()).unwrap();
    let again = solve(&back, &SolverConfig::default()).unwrap();
    assert!((again.objective - sol.objective).abs() < 1e-6);
}
