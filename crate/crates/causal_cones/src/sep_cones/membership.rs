use crate::conic_solver::{solve, Residuals, SolveStatus};
use crate::error::{Error, Result};
use crate::operator_core::ProcessOperator;
use crate::robustness::{random_robustness, RobustnessOptions, Verdict};

use super::{ConeSpec, DecompositionReport, NormalForm, SepDecomposition};

#[derive(Clone, Debug)]
pub enum Membership {
    /// Feasible, with a decomposition that passed the independent checks.
    Member(SepDecomposition),
    /// `W + r*𝟙°` is the closest noisy operator in the cone and the witness
    /// `S` (with `Tr[S·W] = −r*`) was verified in the dual cone.
    NotMember { r_star: f64, witness: ProcessOperator },
    Undecided { residuals: Residuals, report: Option<DecompositionReport> },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// Decides `w ∈ cone`: a feasibility solve first, then the robustness
/// problem when no verified decomposition comes out of it.
pub fn membership(cone: &ConeSpec, w: &ProcessOperator, opts: &RobustnessOptions) -> Result<Membership> {
    if w.space() != cone.scenario.space() {
        return Err(Error::SpaceMismatch(format!("{} vs {}", w.space(), cone.scenario.space())));
    }
    let nf = NormalForm::build(cone, w, None)?;
    let sol = solve(&nf.problem, &opts.solver)?;
    let mut report = None;
    if sol.status == SolveStatus::Optimal {
        let dec = nf.decomposition(&sol)?;
        let rep = dec.verify()?;
        if rep.passes(opts.decomposition_tol, opts.eigenvalue_floor, opts.decomposition_tol) {
            return Ok(Membership::Member(dec));
        }
        report = Some(rep);
    }
    let o = RobustnessOptions { check_input: false, ..opts.clone() };
    let res = random_robustness(w, cone, &o)?;
    if res.verdict == Verdict::Nonseparable {
        if let Some(witness) = res.witness {
            return Ok(Membership::NotMember { r_star: res.r_star, witness });
        }
    }
    Ok(Membership::Undecided { residuals: sol.residuals, report })
}
