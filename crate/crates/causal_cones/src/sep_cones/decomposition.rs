use serde::Serialize;

use crate::causal_subspaces::SubspaceSpec;
use crate::error::Result;
use crate::operator_core::ProcessOperator;

#[derive(Clone, Debug)]
pub struct Component {
    pub label: String,
    pub operator: ProcessOperator,
    /// Whether the component must be positive semidefinite.
    pub psd: bool,
    /// Subspaces the component must lie in on its own.
    pub subspaces: Vec<SubspaceSpec>,
}

/// A linear requirement on sums of components, indices into `components`.
#[derive(Clone, Debug)]
pub enum Requirement {
    SumsToTarget { terms: Vec<usize> },
    InSubspace { terms: Vec<usize>, subspace: SubspaceSpec },
    Equal { left: Vec<usize>, right: Vec<usize> },
}

/// Unnormalized terms of a cone membership certificate.
#[derive(Clone, Debug)]
pub struct SepDecomposition {
    pub cone: String,
    pub target: ProcessOperator,
    pub components: Vec<Component>,
    pub requirements: Vec<Requirement>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DecompositionReport {
    /// `‖Σ − target‖ / max(1, ‖target‖)`.
    pub sum_residual: f64,
    /// Most negative eigenvalue of a PSD component, relative to `max(1, ‖target‖)`.
    pub min_eigenvalue: f64,
    /// Largest relative subspace or equality violation.
    pub constraint_residual: f64,
}

impl DecompositionReport {
    pub fn passes(&self, sum_tol: f64, eig_floor: f64, constraint_tol: f64) -> bool {
        self.sum_residual <= sum_tol && self.min_eigenvalue >= -eig_floor && self.constraint_residual <= constraint_tol
    }
}

fn sum_of(components: &[Component], terms: &[usize], like: &ProcessOperator) -> ProcessOperator {
    terms.iter().fold(ProcessOperator::zeros(like.space().clone()), |acc, &i| &acc + &components[i].operator)
}

impl SepDecomposition {
    /// Re-evaluates every requirement with explicit operator maps,
    /// independently of the solver's coordinates.
    pub fn verify(&self) -> Result<DecompositionReport> {
        let scale = self.target.hs_norm().max(1.0);
        let mut rep = DecompositionReport::default();
        for c in &self.components {
            if c.psd {
                rep.min_eigenvalue = rep.min_eigenvalue.min(c.operator.min_eigenvalue() / scale);
            }
            for l in &c.subspaces {
                let res = l.residual(&c.operator)? * c.operator.hs_norm() / scale;
                rep.constraint_residual = rep.constraint_residual.max(res);
            }
        }
        for r in &self.requirements {
            match r {
                Requirement::SumsToTarget { terms } => {
                    let s = sum_of(&self.components, terms, &self.target);
                    rep.sum_residual = rep.sum_residual.max((&s - &self.target).hs_norm() / scale);
                }
                Requirement::InSubspace { terms, subspace } => {
                    let s = sum_of(&self.components, terms, &self.target);
                    let res = subspace.residual(&s)? * s.hs_norm() / scale;
                    rep.constraint_residual = rep.constraint_residual.max(res);
                }
                Requirement::Equal { left, right } => {
                    let a = sum_of(&self.components, left, &self.target);
                    let b = sum_of(&self.components, right, &self.target);
                    rep.constraint_residual = rep.constraint_residual.max((&a - &b).hs_norm() / scale);
                }
            }
        }
        Ok(rep)
    }

    /// Components whose norm exceeds `cutoff · max(1, ‖target‖)`.
    pub fn nonzero(&self, cutoff: f64) -> Vec<&Component> {
        let scale = self.target.hs_norm().max(1.0);
        self.components.iter().filter(|c| c.operator.hs_norm() > cutoff * scale).collect()
    }
}
