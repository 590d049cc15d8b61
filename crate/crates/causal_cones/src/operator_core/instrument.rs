//! Local operations in CJ form, conditional matrices and the Born rule.

use serde::{Deserialize, Serialize};

use super::operator::{ProcessOperator, C64};
use super::system::{offsets, LabeledSpace, Role};
use crate::error::{Error, Result};

/// One setting of a party's instrument: a CP map (CJ matrix) per outcome.
#[derive(Clone, Debug)]
pub struct Instrument {
    space: LabeledSpace,
    elements: Vec<ProcessOperator>,
}

impl Instrument {
    /// Checks positivity of every element and the CPTP condition
    /// `Tr_O Σ_a M_a = 𝟙` on the incoming (and ancillary) systems.
    pub fn new(elements: Vec<ProcessOperator>, tol: f64) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::BadParams("instrument without elements".into()))?;
        let space = first.space().clone();
        for m in &elements {
            m.same_space(first)?;
            let lo = m.min_eigenvalue();
            if lo < -tol {
                return Err(Error::BadParams(format!("instrument element has eigenvalue {lo:e}")));
            }
        }
        let mut total = ProcessOperator::zeros(space.clone());
        for m in &elements {
            total = &total + m;
        }
        let outs: Vec<_> =
            space.systems().iter().filter(|s| s.role == Role::Out).cloned().collect();
        let reduced = total.partial_trace(&outs)?;
        let id = ProcessOperator::identity(reduced.space().clone());
        let dev = reduced.max_abs_diff(&id);
        if dev > tol {
            return Err(Error::BadParams(format!(
                "instrument is not trace preserving (deviation {dev:e})"
            )));
        }
        Ok(Instrument { space, elements })
    }

    /// Skips the CPTP check; used for single CP maps.
    pub fn unchecked(elements: Vec<ProcessOperator>) -> Result<Self> {
        let space = elements
            .first()
            .ok_or_else(|| Error::BadParams("instrument without elements".into()))?
            .space()
            .clone();
        for m in &elements {
            if m.space() != &space {
                return Err(Error::SpaceMismatch("instrument elements differ in space".into()));
            }
        }
        Ok(Instrument { space, elements })
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn elements(&self) -> &[ProcessOperator] {
        &self.elements
    }

    pub fn n_outcomes(&self) -> usize {
        self.elements.len()
    }
}

/// `Tr_k[(M ⊗ 𝟙) W]` for `M` acting on a subset of `W`'s systems.
pub fn conditional_matrix(w: &ProcessOperator, m: &ProcessOperator) -> Result<ProcessOperator> {
    let space = w.space();
    for s in m.space().systems() {
        if !space.contains(s) {
            return Err(Error::SpaceMismatch(format!("{s} is not a system of the process")));
        }
    }
    let pos = space.positions(m.space().systems())?;
    let dims = space.dims();
    let strides = space.strides();
    let kept: Vec<usize> = (0..dims.len()).filter(|p| !pos.contains(p)).collect();
    let off_m = offsets(&dims, &strides, &pos);
    let off_r = offsets(&dims, &strides, &kept);
    let n = w.dim();
    let dm = off_m.len();
    let r = off_r.len();
    let wd = w.data();
    let md = m.data();
    let mut out = vec![C64::new(0.0, 0.0); r * r];
    for s in 0..dm {
        for t in 0..dm {
            let coef = md[s * dm + t];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            // (M W)_{(s,a),(s,b)} summed over s: Σ_t M_st W_{(t,a),(s,b)}.
            let (os, ot) = (off_m[s], off_m[t]);
            for (a, &ra) in off_r.iter().enumerate() {
                let row = (ra + ot) * n;
                for (b, &cb) in off_r.iter().enumerate() {
                    out[a * r + b] += coef * wd[row + cb + os];
                }
            }
        }
    }
    ProcessOperator::new(space.without(m.space().systems()), out)
}

/// `P(a⃗|x⃗)` with outcomes and settings flattened party by party
/// (first party most significant).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub n_outcomes: Vec<Vec<usize>>,
    /// One column per joint setting; each column lists joint outcomes.
    pub columns: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    pub fn column_sums(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.columns.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Generalized Born rule `P = Tr[(⊗_k M_{a_k|x_k}) W]`; `parties[k][x]` is
/// party k's instrument for setting x.
pub fn born_rule(w: &ProcessOperator, parties: &[Vec<Instrument>], tol: f64) -> Result<ProbabilityTable> {
    let mut covered = Vec::new();
    for settings in parties {
        let first = settings
            .first()
            .ok_or_else(|| Error::BadParams("party without settings".into()))?;
        for inst in settings {
            if inst.space() != first.space() {
                return Err(Error::SpaceMismatch("settings of one party act on different systems".into()));
            }
        }
        covered.extend_from_slice(first.space().systems());
    }
    let tiled = LabeledSpace::new(covered).map_err(|_| Error::SpaceMismatch("instrument spaces overlap".into()))?;
    if &tiled != w.space() {
        return Err(Error::SpaceMismatch(format!(
            "instruments cover {tiled}, process lives on {}",
            w.space()
        )));
    }
    let expected: f64 = w
        .space()
        .systems()
        .iter()
        .filter(|s| s.role == Role::Out)
        .map(|s| s.dim as f64)
        .product();
    let trace = w.trace();
    if (trace - expected).abs() > tol * expected.max(1.0) {
        return Err(Error::NotNormalized { trace, expected });
    }

    let settings: Vec<usize> = parties.iter().map(|p| p.len()).collect();
    let n_outcomes: Vec<Vec<usize>> =
        parties.iter().map(|p| p.iter().map(|i| i.n_outcomes()).collect()).collect();
    let mut columns = Vec::new();
    for x in joint_indices(&settings) {
        let counts: Vec<usize> = x.iter().enumerate().map(|(k, &xk)| n_outcomes[k][xk]).collect();
        let mut col = Vec::new();
        for a in joint_indices(&counts) {
            let mut cur = w.clone();
            for (k, (&xk, &ak)) in x.iter().zip(&a).enumerate() {
                cur = conditional_matrix(&cur, &parties[k][xk].elements()[ak])?;
            }
            col.push(cur.trace());
        }
        columns.push(col);
    }
    Ok(ProbabilityTable { n_outcomes, columns })
}

fn joint_indices(radix: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in radix {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}
