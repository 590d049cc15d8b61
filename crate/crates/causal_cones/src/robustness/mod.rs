//! Random robustness `r* = min {r : W + r𝟙° ∈ C}` and optimal witnesses
//! `S ∈ C*` with `Tr[S·𝟙°] = 1`, each certified independently.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::causal_subspaces::{validity_subspace, Scenario};
use crate::conic_solver::{solve, Residuals, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::model_zoo::white_noise;
use crate::operator_core::ProcessOperator;
use crate::sep_cones::{dual_cone, ConeSpec, DecompositionReport, NormalForm, SepDecomposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Separable,
    Nonseparable,
    Undecided,
}

#[derive(Clone, Debug)]
pub struct RobustnessOptions {
    pub solver: SolverConfig,
    /// `r*` above this certifies nonseparability (given a verified witness).
    pub threshold: f64,
    /// Largest `t*` accepted when checking `S + t𝟙° ∈ C*`.
    pub witness_tol: f64,
    /// Tolerance of the decomposition checks (sum and constraints).
    pub decomposition_tol: f64,
    pub eigenvalue_floor: f64,
    /// Run the independent witness verification.
    pub verify: bool,
    /// Reject inputs that are not valid normalized process matrices.
    pub check_input: bool,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        RobustnessOptions {
            solver: SolverConfig::default(),
            threshold: 1e-6,
            witness_tol: 1e-6,
            decomposition_tol: 1e-7,
            eigenvalue_floor: 1e-9,
            verify: true,
            check_input: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// `min t` with `S + t𝟙° ∈ C*`; the witness is in the dual cone iff `t* ≤ 0`.
    pub t_star: f64,
    pub accepted: bool,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub primal_seconds: f64,
    pub verify_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RobustnessResult {
    pub r_star: f64,
    pub verdict: Verdict,
    pub witness: Option<ProcessOperator>,
    /// `Tr[S·W]` of the returned witness.
    pub witness_value: Option<f64>,
    pub witness_check: Option<WitnessCheck>,
    /// Decomposition of `W + r*𝟙°`.
    pub decomposition: Option<SepDecomposition>,
    pub decomposition_report: Option<DecompositionReport>,
    pub residuals: Residuals,
    pub status: SolveStatus,
    pub iterations: usize,
    pub cone_used: String,
    pub timings: Timings,
}

impl RobustnessResult {
    /// The random robustness proper, `max(r*, 0)`.
    pub fn robustness(&self) -> f64 {
        self.r_star.max(0.0)
    }

    /// `|r* + Tr[S·W]|`.
    pub fn duality_gap(&self) -> Option<f64> {
        self.witness_value.map(|v| (self.r_star + v).abs())
    }
}

/// Checks that `w` is PSD, valid and normalized to `d_O`.
pub fn check_process(w: &ProcessOperator, scn: &Scenario) -> Result<()> {
    let expected = scn.d_out_total() as f64;
    if (w.trace() - expected).abs() > 1e-8 * expected {
        return Err(Error::InvalidProcess(format!("trace {} instead of {expected}", w.trace())));
    }
    let lam = w.min_eigenvalue();
    if lam < -1e-9 * w.hs_norm().max(1.0) {
        return Err(Error::InvalidProcess(format!("negative eigenvalue {lam:e}")));
    }
    let res = validity_subspace(scn)?.residual(w)?;
    if res > 1e-8 {
        return Err(Error::InvalidProcess(format!("validity residual {res:e}")));
    }
    Ok(())
}

/// White noise `𝟙/d_I` over the cone's scenario.
pub fn noise_of(cone: &ConeSpec) -> ProcessOperator {
    white_noise(&cone.scenario)
}

/// Normalizes `s` to `Tr[S·𝟙°] = 1`.
fn normalize_witness(s: &ProcessOperator, noise: &ProcessOperator) -> Result<ProcessOperator> {
    let v = s.hs_inner(noise);
    if !(v.abs() > 1e-12) {
        return Err(Error::NonCertifying(format!("Tr[S·𝟙°] = {v:e}")));
    }
    Ok(s.scaled(1.0 / v))
}

pub fn random_robustness(w: &ProcessOperator, cone: &ConeSpec, opts: &RobustnessOptions) -> Result<RobustnessResult> {
    if opts.check_input {
        check_process(w, &cone.scenario)?;
    }
    let noise = noise_of(cone);
    let t0 = Instant::now();
    let nf = NormalForm::build(cone, w, Some(&noise))?;
    let sol = solve(&nf.problem, &opts.solver)?;
    let primal_seconds = t0.elapsed().as_secs_f64();
    log::info!(
        "{}: r* = {:.9} ({:?}, {} iterations, {:.2}s)",
        cone.name,
        sol.objective,
        sol.status,
        sol.iterations,
        primal_seconds
    );
    let r_star = nf.t_value(&sol);

    let raw = nf.dual_operator(&sol)?;
    let witness = normalize_witness(&raw, &noise).ok();
    let witness_value = witness.as_ref().map(|s| s.hs_inner(w));

    let decomposition = nf.decomposition(&sol)?;
    let report = decomposition.verify()?;

    let t1 = Instant::now();
    let mut verdict = Verdict::Undecided;
    let mut witness_check = None;
    if r_star > opts.threshold {
        if let (Some(s), Some(val)) = (&witness, witness_value) {
            if val < -opts.threshold {
                if opts.verify {
                    let chk = verify_witness(s, &dual_cone(cone), opts)?;
                    if chk.accepted {
                        verdict = Verdict::Nonseparable;
                    }
                    witness_check = Some(chk);
                } else if sol.status == SolveStatus::Optimal {
                    verdict = Verdict::Nonseparable;
                }
            }
        }
    } else if report.passes(opts.decomposition_tol, opts.eigenvalue_floor, opts.decomposition_tol) {
        verdict = Verdict::Separable;
    }
    Ok(RobustnessResult {
        r_star,
        verdict,
        witness,
        witness_value,
        witness_check,
        decomposition: Some(decomposition),
        decomposition_report: Some(report),
        residuals: sol.residuals,
        status: sol.status,
        iterations: sol.iterations,
        cone_used: cone.name.clone(),
        timings: Timings { primal_seconds, verify_seconds: t1.elapsed().as_secs_f64() },
    })
}

/// Optimal witness `S*` of `w` for the cone, normalized to `Tr[S*·𝟙°] = 1`.
pub fn find_witness(w: &ProcessOperator, cone: &ConeSpec, opts: &RobustnessOptions) -> Result<ProcessOperator> {
    let o = RobustnessOptions { verify: false, ..opts.clone() };
    let res = random_robustness(w, cone, &o)?;
    if res.status != SolveStatus::Optimal {
        return Err(Error::SolverFailure(format!(
            "solver stopped with {:?} (residuals {:?})",
            res.status, res.residuals
        )));
    }
    res.witness.ok_or_else(|| Error::NonCertifying("no usable dual multipliers".into()))
}

/// Solves `min t  s.t.  S + t𝟙° ∈ cone_dual`; `S` is accepted when
/// `t* ≤ witness_tol`.
pub fn verify_witness(s: &ProcessOperator, cone_dual: &ConeSpec, opts: &RobustnessOptions) -> Result<WitnessCheck> {
    let t0 = Instant::now();
    let noise = noise_of(cone_dual);
    let nf = NormalForm::build(cone_dual, s, Some(&noise))?;
    let cfg = SolverConfig { residual_log: None, warm_start: None, ..opts.solver.clone() };
    let sol = solve(&nf.problem, &cfg)?;
    let t_star = nf.t_value(&sol);
    Ok(WitnessCheck {
        t_star,
        accepted: t_star <= opts.witness_tol && sol.status != SolveStatus::Infeasible,
        status: sol.status,
        residuals: sol.residuals,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub r_star: f64,
    pub witness_value: f64,
    /// `|r* + Tr[S*·W]|`.
    pub gap: f64,
    pub residuals: Residuals,
    pub decomposition: DecompositionReport,
}

pub fn duality_gap_report(w: &ProcessOperator, cone: &ConeSpec, opts: &RobustnessOptions) -> Result<DualityReport> {
    let o = RobustnessOptions { verify: false, ..opts.clone() };
    let res = random_robustness(w, cone, &o)?;
    let witness_value = res.witness_value.ok_or_else(|| Error::NonCertifying("no witness".into()))?;
    Ok(DualityReport {
        r_star: res.r_star,
        witness_value,
        gap: (res.r_star + witness_value).abs(),
        residuals: res.residuals,
        decomposition: res.decomposition_report.unwrap_or_default(),
    })
}
