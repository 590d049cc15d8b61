//! Expansion of a cone expression into the solver's normal form.
//!
//! Every PSD leaf becomes a block variable, every bare subspace a set of
//! free coordinates. Sums add variables; an intersection equates the
//! expressions of its non-subspace children and constrains the first of
//! them. Since all constraint maps are diagonal in the product basis, each
//! equality row involves a single basis string.

use std::collections::HashMap;

use serde::Serialize;

use super::cone::{ConeNode, ConeSpec};
use super::decomposition::{Component, Requirement, SepDecomposition};
use crate::causal_subspaces::SubspaceSpec;
use crate::conic_solver::{PsdBlock, SDPProblem, SDPSolution};
use crate::error::{Error, Result};
use crate::operator_core::basis::{string_digits, string_support, HsTransform};
use crate::operator_core::trace_replace::{Mode, ResolvedExpr};
use crate::operator_core::{ProcessOperator, SystemLabel};

#[derive(Clone, Debug, Serialize)]
pub enum VarKind {
    /// PSD block acting as the identity on the `removed` systems.
    Psd { removed: u64 },
    /// Free coordinates in the intersection of the listed subspaces.
    Free { subspaces: Vec<SubspaceSpec> },
}

#[derive(Clone, Debug, Serialize)]
pub struct Variable {
    pub label: String,
    pub kind: VarKind,
}

#[derive(Clone, Debug, Serialize)]
pub enum Relation {
    /// `Σ terms − t·noise = target`.
    Top { terms: Vec<usize> },
    InSubspace { terms: Vec<usize>, subspace: SubspaceSpec },
    Equal { left: Vec<usize>, right: Vec<usize> },
}

/// Column of variable `v` at basis string `s`.
enum ColumnMap {
    Psd { offset: usize, kept: Vec<usize>, removed: u64 },
    Free(HashMap<usize, usize>),
}

pub struct NormalForm {
    pub cone_name: String,
    pub problem: SDPProblem,
    pub variables: Vec<Variable>,
    pub relations: Vec<Relation>,
    /// Column of the free scalar `t` when the problem optimizes it.
    pub t_col: Option<usize>,
    target: ProcessOperator,
    noise: ProcessOperator,
    dims: Vec<usize>,
    columns: Vec<ColumnMap>,
    /// Row of the top relation at each string.
    top_rows: Vec<Option<usize>>,
}

struct Flattener {
    variables: Vec<Variable>,
    relations: Vec<Relation>,
}

impl Flattener {
    fn flatten(&mut self, node: &ConeNode) -> Result<Vec<usize>> {
        match node {
            ConeNode::Psd { label } => {
                self.variables.push(Variable { label: label.clone(), kind: VarKind::Psd { removed: 0 } });
                Ok(vec![self.variables.len() - 1])
            }
            ConeNode::Subspace(l) => {
                self.variables.push(Variable {
                    label: l.name.clone(),
                    kind: VarKind::Free { subspaces: vec![l.clone()] },
                });
                Ok(vec![self.variables.len() - 1])
            }
            ConeNode::Sum(ch) => {
                let mut out = Vec::new();
                for c in ch {
                    out.extend(self.flatten(c)?);
                }
                Ok(out)
            }
            ConeNode::Dual(inner) => self.flatten(&inner.expand().dual()),
            ConeNode::Intersect(ch) => {
                let subs: Vec<&SubspaceSpec> = ch
                    .iter()
                    .filter_map(|c| if let ConeNode::Subspace(l) = c { Some(l) } else { None })
                    .collect();
                let others: Vec<&ConeNode> =
                    ch.iter().filter(|c| !matches!(c, ConeNode::Subspace(_))).collect();
                if others.is_empty() {
                    let label = subs.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join("∩");
                    self.variables.push(Variable {
                        label,
                        kind: VarKind::Free { subspaces: subs.into_iter().cloned().collect() },
                    });
                    return Ok(vec![self.variables.len() - 1]);
                }
                let mut exprs = Vec::new();
                for c in others {
                    exprs.push(self.flatten(c)?);
                }
                let first = exprs[0].clone();
                for e in &exprs[1..] {
                    self.relations.push(Relation::Equal { left: first.clone(), right: e.clone() });
                }
                for l in subs {
                    self.relations.push(Relation::InSubspace { terms: first.clone(), subspace: l.clone() });
                }
                Ok(first)
            }
        }
    }
}

/// Systems on which a PSD variable constrained by `[1−X] W = 0` acts as
/// the identity.
fn identity_factor(l: &SubspaceSpec, resolved: &[ResolvedExpr]) -> u64 {
    if l.complement {
        return 0;
    }
    let mut removed = 0;
    for r in resolved {
        if r.factors.len() == 1 && r.factors[0].mode == Mode::OneMinusReplace {
            removed |= r.factors[0].nontrivial;
        }
    }
    removed
}

impl NormalForm {
    /// `min t  s.t.  target + t·noise ∈ cone`, or the plain feasibility
    /// problem `target ∈ cone` when `noise` is `None`.
    pub fn build(cone: &ConeSpec, target: &ProcessOperator, noise: Option<&ProcessOperator>) -> Result<Self> {
        let space = cone.scenario.space();
        if target.space() != space {
            return Err(Error::SpaceMismatch(format!("operator on {}, cone on {}", target.space(), space)));
        }
        if let Some(nz) = noise {
            nz.same_space(target)?;
        }
        let dims = space.dims();
        let n = space.total_dim();
        let n_str = n * n;
        let supports: Vec<u64> = (0..n_str).map(|s| string_support(&dims, s)).collect();

        let mut fl = Flattener { variables: Vec::new(), relations: Vec::new() };
        let root = fl.flatten(&cone.node.expand())?;
        fl.relations.insert(0, Relation::Top { terms: root });
        let Flattener { mut variables, relations } = fl;

        // Identity factors of single-variable constraints.
        for rel in &relations {
            if let Relation::InSubspace { terms, subspace } = rel {
                if terms.len() == 1 {
                    if let VarKind::Psd { removed } = &mut variables[terms[0]].kind {
                        *removed |= identity_factor(subspace, &subspace.resolved()?);
                    }
                }
            }
        }

        // Columns.
        let nontrivial: Vec<usize> = (0..dims.len()).filter(|&k| dims[k] > 1).collect();
        let mut blocks = Vec::new();
        let mut columns = Vec::with_capacity(variables.len());
        let mut offset = 0;
        for v in &variables {
            if let VarKind::Psd { removed } = v.kind {
                let kept: Vec<usize> = nontrivial.iter().cloned().filter(|&k| removed & (1 << k) == 0).collect();
                let mut bd: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
                if bd.is_empty() {
                    bd.push(1);
                }
                let blk = PsdBlock { dims: bd, label: v.label.clone() };
                columns.push(Some(ColumnMap::Psd { offset, kept, removed }));
                offset += blk.n_coords();
                blocks.push(blk);
            } else {
                columns.push(None);
            }
        }
        let mut free = 0;
        for (i, v) in variables.iter().enumerate() {
            if let VarKind::Free { subspaces } = &v.kind {
                let resolved = subspaces.iter().map(|l| l.resolved()).collect::<Result<Vec<_>>>()?;
                let mut map = HashMap::new();
                for (s, &sup) in supports.iter().enumerate() {
                    let ok = subspaces
                        .iter()
                        .zip(&resolved)
                        .all(|(l, r)| SubspaceSpec::allows_support(r, l.complement, sup));
                    if ok {
                        map.insert(s, offset + free);
                        free += 1;
                    }
                }
                columns[i] = Some(ColumnMap::Free(map));
            }
        }
        let columns: Vec<ColumnMap> = columns.into_iter().map(|c| c.unwrap()).collect();
        let t_col = noise.map(|_| offset + free);
        let free_scalars = free + usize::from(noise.is_some());

        let tr = HsTransform::new(&dims);
        let b = tr.to_coords(target.data());
        let nz = noise.map(|z| tr.to_coords(z.data()));

        let col_of = |v: usize, s: usize| -> Option<usize> {
            match &columns[v] {
                ColumnMap::Psd { offset, kept, removed } => {
                    if supports[s] & removed != 0 {
                        return None;
                    }
                    let digits = string_digits(&dims, s);
                    Some(offset + kept.iter().fold(0, |acc, &k| acc * dims[k] * dims[k] + digits[k]))
                }
                ColumnMap::Free(map) => map.get(&s).copied(),
            }
        };

        let mut triplets = Vec::new();
        let mut rhs = Vec::new();
        let mut top_rows = vec![None; n_str];
        for rel in &relations {
            match rel {
                Relation::Top { terms } => {
                    for s in 0..n_str {
                        let row = rhs.len();
                        for &v in terms {
                            if let Some(j) = col_of(v, s) {
                                triplets.push((row, j, 1.0));
                            }
                        }
                        if let (Some(t), Some(nz)) = (t_col, &nz) {
                            if nz[s] != 0.0 {
                                triplets.push((row, t, -nz[s]));
                            }
                        }
                        top_rows[s] = Some(row);
                        rhs.push(b[s]);
                    }
                }
                Relation::InSubspace { terms, subspace } => {
                    let resolved = subspace.resolved()?;
                    for (s, &sup) in supports.iter().enumerate() {
                        if SubspaceSpec::allows_support(&resolved, subspace.complement, sup) {
                            continue;
                        }
                        let row = rhs.len();
                        for &v in terms {
                            if let Some(j) = col_of(v, s) {
                                triplets.push((row, j, 1.0));
                            }
                        }
                        rhs.push(0.0);
                    }
                }
                Relation::Equal { left, right } => {
                    for s in 0..n_str {
                        let row = rhs.len();
                        for &v in left {
                            if let Some(j) = col_of(v, s) {
                                triplets.push((row, j, 1.0));
                            }
                        }
                        for &v in right {
                            if let Some(j) = col_of(v, s) {
                                triplets.push((row, j, -1.0));
                            }
                        }
                        rhs.push(0.0);
                    }
                }
            }
        }
        let mut problem = SDPProblem {
            psd_blocks: blocks,
            free_scalars,
            n_rows: rhs.len(),
            triplets,
            rhs,
            objective: t_col.map(|t| vec![(t, 1.0)]).unwrap_or_default(),
        };
        let map = problem.normalize_rows();
        let top_rows = top_rows.into_iter().map(|r| r.and_then(|r| map[r])).collect();
        Ok(NormalForm {
            cone_name: cone.name.clone(),
            problem,
            variables,
            relations,
            t_col,
            target: target.clone(),
            noise: noise.cloned().unwrap_or_else(|| ProcessOperator::zeros(space.clone())),
            dims,
            columns,
            top_rows,
        })
    }

    pub fn n_psd_blocks(&self) -> usize {
        self.problem.psd_blocks.len()
    }

    pub fn target(&self) -> &ProcessOperator {
        &self.target
    }

    /// Optimal `t` of the solution (0 for feasibility problems).
    pub fn t_value(&self, sol: &SDPSolution) -> f64 {
        self.t_col.map(|t| sol.x[t]).unwrap_or(0.0)
    }

    fn full_coords(&self, v: usize, x: &[f64]) -> Vec<f64> {
        let n_str = self.dims.iter().map(|d| d * d).product::<usize>();
        let mut out = vec![0.0; n_str];
        match &self.columns[v] {
            ColumnMap::Psd { offset, kept, removed } => {
                for (s, o) in out.iter_mut().enumerate() {
                    if string_support(&self.dims, s) & removed != 0 {
                        continue;
                    }
                    let digits = string_digits(&self.dims, s);
                    let j = offset + kept.iter().fold(0, |acc, &k| acc * self.dims[k] * self.dims[k] + digits[k]);
                    *o = x[j];
                }
            }
            ColumnMap::Free(map) => {
                for (&s, &j) in map {
                    out[s] = x[j];
                }
            }
        }
        out
    }

    /// Operator value of every variable at the primal point `x`.
    pub fn variable_values(&self, x: &[f64]) -> Result<Vec<ProcessOperator>> {
        let tr = HsTransform::new(&self.dims);
        let space = self.target.space().clone();
        (0..self.variables.len())
            .map(|v| ProcessOperator::new(space.clone(), tr.from_coords(&self.full_coords(v, x))))
            .collect()
    }

    /// The decomposition of `target + t·noise` read off the primal point.
    pub fn decomposition(&self, sol: &SDPSolution) -> Result<SepDecomposition> {
        let values = self.variable_values(&sol.x)?;
        let t = self.t_value(sol);
        let decomposed = self.target.axpy(t, &self.noise)?;
        let components = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, op)| Component {
                label: v.label.clone(),
                psd: matches!(v.kind, VarKind::Psd { .. }),
                subspaces: match &v.kind {
                    VarKind::Free { subspaces } => subspaces.clone(),
                    VarKind::Psd { .. } => Vec::new(),
                },
                operator: op,
            })
            .collect();
        let requirements = self
            .relations
            .iter()
            .map(|r| match r {
                Relation::Top { terms } => Requirement::SumsToTarget { terms: terms.clone() },
                Relation::InSubspace { terms, subspace } => {
                    Requirement::InSubspace { terms: terms.clone(), subspace: subspace.clone() }
                }
                Relation::Equal { left, right } => {
                    Requirement::Equal { left: left.clone(), right: right.clone() }
                }
            })
            .collect();
        Ok(SepDecomposition { cone: self.cone_name.clone(), target: decomposed, components, requirements })
    }

    /// The operator `−Y` built from the multipliers of the top relation.
    /// For the robustness problem it satisfies `Tr[S·noise] = 1` at optimality.
    pub fn dual_operator(&self, sol: &SDPSolution) -> Result<ProcessOperator> {
        let coords: Vec<f64> =
            self.top_rows.iter().map(|r| r.map(|i| -sol.y[i]).unwrap_or(0.0)).collect();
        let tr = HsTransform::new(&self.dims);
        ProcessOperator::new(self.target.space().clone(), tr.from_coords(&coords))
    }

    /// JSON description: the sparse problem plus the variable and relation
    /// bookkeeping needed to map a solution back.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cone": self.cone_name,
            "basis": "orthonormal product basis; qubit factors are {1, x, y, z}/sqrt(2)",
            "systems": self.target.space().systems().iter().map(SystemLabel::to_string).collect::<Vec<_>>(),
            "problem": self.problem,
            "t_column": self.t_col,
            "variables": self.variables.iter().map(|v| &v.label).collect::<Vec<_>>(),
        })
    }
}
