//! JSON artifacts: operators, robustness results, decompositions and
//! witness checks.
//!
//! Operators are stored as `{"systems": [...], "re": [[...]], "im": [[...]]}`
//! with rows in the order of `systems`. Floats use the shortest decimal
//! that round-trips exactly, so save followed by load is the identity.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_core::operator::max_asymmetry;
use crate::operator_core::{ProcessOperator, SystemLabel, C64};
use crate::conic_solver::{Residuals, SolveStatus};
use crate::robustness::{RobustnessResult, Verdict, WitnessCheck};
use crate::sep_cones::{DecompositionReport, SepDecomposition};

/// Relative asymmetry above which a loaded matrix is rejected.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub systems: Vec<SystemLabel>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn from_operator(w: &ProcessOperator) -> Self {
        let n = w.dim();
        let rows = |f: fn(&C64) -> f64| (0..n).map(|i| w.data()[i * n..(i + 1) * n].iter().map(f).collect()).collect();
        OperatorJson { systems: w.space().systems().to_vec(), re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    /// Validates the shape, rejects non-Hermitian data and reorders the
    /// systems canonically. `origin` names the source in error messages.
    pub fn to_operator(&self, origin: &str) -> Result<ProcessOperator> {
        let schema = |msg: String| Error::Schema { path: origin.to_string(), msg };
        if self.systems.is_empty() {
            return Err(schema("no systems listed".into()));
        }
        if let Some(s) = self.systems.iter().find(|s| s.dim == 0) {
            return Err(schema(format!("system {s} has dimension 0")));
        }
        let n: usize = self.systems.iter().map(|s| s.dim).product();
        for (name, m) in [("re", &self.re), ("im", &self.im)] {
            if m.len() != n {
                return Err(schema(format!("'{name}' has {} rows, expected {n}", m.len())));
            }
            if let Some((i, r)) = m.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(schema(format!("'{name}' row {i} has {} entries, expected {n}", r.len())));
            }
        }
        let data: Vec<C64> = self
            .re
            .iter()
            .zip(&self.im)
            .flat_map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)))
            .collect();
        let asym = max_asymmetry(&data, n);
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        ProcessOperator::from_ordered(self.systems.clone(), data)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| Error::Json { path: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.display().to_string(), source })
}

pub fn load_operator(path: &Path) -> Result<ProcessOperator> {
    read_json::<OperatorJson>(path)?.to_operator(&path.display().to_string())
}

pub fn save_operator(path: &Path, w: &ProcessOperator) -> Result<()> {
    write_json(path, &OperatorJson::from_operator(w))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentJson {
    pub label: String,
    pub psd: bool,
    pub operator: OperatorJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub cone: String,
    pub target: OperatorJson,
    pub components: Vec<ComponentJson>,
    pub report: Option<ReportJson>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReportJson {
    pub sum_residual: f64,
    pub min_eigenvalue: f64,
    pub constraint_residual: f64,
}

impl From<DecompositionReport> for ReportJson {
    fn from(r: DecompositionReport) -> Self {
        ReportJson { sum_residual: r.sum_residual, min_eigenvalue: r.min_eigenvalue, constraint_residual: r.constraint_residual }
    }
}

impl DecompositionJson {
    /// Keeps components with norm above `cutoff` relative to the target.
    pub fn new(dec: &SepDecomposition, report: Option<DecompositionReport>, cutoff: f64) -> Self {
        DecompositionJson {
            cone: dec.cone.clone(),
            target: OperatorJson::from_operator(&dec.target),
            components: dec
                .nonzero(cutoff)
                .into_iter()
                .map(|c| ComponentJson { label: c.label.clone(), psd: c.psd, operator: OperatorJson::from_operator(&c.operator) })
                .collect(),
            report: report.map(Into::into),
        }
    }

    /// `‖Σ components − target‖` and the most negative eigenvalue of the
    /// PSD components, recomputed from the stored operators.
    pub fn recheck(&self) -> Result<(f64, f64)> {
        let target = self.target.to_operator("target")?;
        let mut sum = ProcessOperator::zeros(target.space().clone());
        let mut min_eig = f64::INFINITY;
        for c in &self.components {
            let op = c.operator.to_operator(&c.label)?;
            if c.psd {
                min_eig = min_eig.min(op.min_eigenvalue());
            }
            sum = &sum + &op;
        }
        Ok(((&sum - &target).hs_norm(), min_eig))
    }
}

/// Serializable form of a robustness result; the witness is embedded so
/// a verdict can be replayed from the file alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultJson {
    pub cone: String,
    pub r_star: f64,
    pub robustness: f64,
    pub verdict: Verdict,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub witness_value: Option<f64>,
    pub duality_gap: Option<f64>,
    pub witness_check: Option<WitnessCheck>,
    pub decomposition: Option<ReportJson>,
    pub primal_seconds: f64,
    pub verify_seconds: f64,
    pub witness: Option<OperatorJson>,
}

impl From<&RobustnessResult> for ResultJson {
    fn from(r: &RobustnessResult) -> Self {
        ResultJson {
            cone: r.cone_used.clone(),
            r_star: r.r_star,
            robustness: r.robustness(),
            verdict: r.verdict,
            status: r.status,
            iterations: r.iterations,
            residuals: r.residuals,
            witness_value: r.witness_value,
            duality_gap: r.duality_gap(),
            witness_check: r.witness_check.clone(),
            decomposition: r.decomposition_report.map(Into::into),
            primal_seconds: r.timings.primal_seconds,
            verify_seconds: r.timings.verify_seconds,
            witness: r.witness.as_ref().map(OperatorJson::from_operator),
        }
    }
}

pub fn save_result(path: &Path, r: &RobustnessResult) -> Result<()> {
    write_json(path, &ResultJson::from(r))
}

pub fn load_result(path: &Path) -> Result<ResultJson> {
    read_json(path)
}
