use std::fmt;

use serde::{Deserialize, Serialize};

use super::scenario::{subsets, Scenario};
use crate::error::{Error, Result};
use crate::operator_core::basis::{string_support, HsTransform};
use crate::operator_core::trace_replace::ResolvedExpr;
use crate::operator_core::{LabeledSpace, ProcessOperator, SystemLabel, TraceReplaceExpr};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Linear subspace `{W : e(W) = 0 for every constraint e}`, or its
/// orthogonal complement when `complement` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub space: LabeledSpace,
    pub constraints: Vec<TraceReplaceExpr>,
    pub name: String,
    #[serde(default)]
    pub complement: bool,
}

impl SubspaceSpec {
    /// Drops constraints that vanish identically and duplicates.
    pub fn new(space: LabeledSpace, constraints: Vec<TraceReplaceExpr>, name: &str) -> Result<Self> {
        let mut kept: Vec<TraceReplaceExpr> = Vec::new();
        let mut seen: Vec<ResolvedExpr> = Vec::new();
        for c in constraints {
            let r = c.resolve(&space)?;
            if r.is_zero_map() || seen.iter().any(|s| same_map(s, &r)) {
                continue;
            }
            seen.push(r);
            kept.push(c);
        }
        Ok(SubspaceSpec { space, constraints: kept, name: name.to_string(), complement: false })
    }

    /// The whole operator space.
    pub fn full(space: LabeledSpace, name: &str) -> Self {
        SubspaceSpec { space, constraints: Vec::new(), name: name.to_string(), complement: false }
    }

    pub fn complement(&self) -> Self {
        let mut c = self.clone();
        c.complement = !c.complement;
        c.name = if self.complement {
            self.name.trim_end_matches("^perp").to_string()
        } else {
            format!("{}^perp", self.name)
        };
        c
    }

    /// Conjunction of the constraints of two (non-complemented) subspaces.
    pub fn intersect(&self, other: &SubspaceSpec, name: &str) -> Result<Self> {
        if self.complement || other.complement || self.space != other.space {
            return Err(Error::SpaceMismatch("cannot intersect these subspaces symbolically".into()));
        }
        let mut all = self.constraints.clone();
        all.extend(other.constraints.iter().cloned());
        Self::new(self.space.clone(), all, name)
    }

    pub fn resolved(&self) -> Result<Vec<ResolvedExpr>> {
        self.constraints.iter().map(|c| c.resolve(&self.space)).collect()
    }

    /// Whether basis strings with this support lie in the subspace.
    pub fn allows_support(resolved: &[ResolvedExpr], complement: bool, support: u64) -> bool {
        let forbidden = resolved.iter().any(|r| r.active_on(support));
        forbidden == complement
    }

    /// In-subspace flag for every basis string.
    pub fn mask(&self) -> Result<Vec<bool>> {
        let resolved = self.resolved()?;
        let dims = self.space.dims();
        let n = self.space.total_dim();
        Ok((0..n * n)
            .map(|s| Self::allows_support(&resolved, self.complement, string_support(&dims, s)))
            .collect())
    }

    pub fn dimension(&self) -> Result<usize> {
        Ok(self.mask()?.into_iter().filter(|&b| b).count())
    }

    /// Orthogonal (Hilbert-Schmidt) projection.
    pub fn project(&self, w: &ProcessOperator) -> Result<ProcessOperator> {
        if w.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "operator on {}, subspace on {}",
                w.space(),
                self.space
            )));
        }
        let t = HsTransform::new(&self.space.dims());
        let mut coords = t.to_coords(w.data());
        for (c, keep) in coords.iter_mut().zip(self.mask()?) {
            if !keep {
                *c = 0.0;
            }
        }
        ProcessOperator::new(self.space.clone(), t.from_coords(&coords))
    }

    /// Largest constraint violation relative to `‖W‖_HS`, evaluated with
    /// explicit trace-and-replace maps.
    pub fn residual(&self, w: &ProcessOperator) -> Result<f64> {
        if w.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "operator on {}, subspace on {}",
                w.space(),
                self.space
            )));
        }
        let norm = w.hs_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if self.complement {
            // W ∈ L⊥ iff its component in L vanishes.
            let mut in_l = w.clone();
            for c in &self.constraints {
                in_l = &in_l - &c.apply(&in_l)?;
            }
            return Ok(in_l.hs_norm() / norm);
        }
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            worst = worst.max(c.apply(w)?.hs_norm() / norm);
        }
        Ok(worst)
    }

    pub fn contains(&self, w: &ProcessOperator, tol: f64) -> Result<bool> {
        Ok(self.residual(w)? <= tol)
    }
}

impl fmt::Display for SubspaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}: ", self.name, if self.complement { " (complement)" } else { "" })?;
        let parts: Vec<String> = self.constraints.iter().map(|c| format!("{c} W = 0")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

fn same_map(a: &ResolvedExpr, b: &ResolvedExpr) -> bool {
    let mut fa = a.factors.clone();
    let mut fb = b.factors.clone();
    fa.sort_by_key(|f| (f.mask, f.mode));
    fb.sort_by_key(|f| (f.mask, f.mode));
    fa == fb
}

/// `∏_{i∈one_minus}[1−A_O^i]` followed by replacing the systems of the
/// `replace` parties and `extra`.
pub fn tr_expr(scn: &Scenario, one_minus: u32, replace: u32, extra: &[SystemLabel]) -> TraceReplaceExpr {
    let mut e = TraceReplaceExpr::new();
    for i in 0..scn.n_parties() {
        if one_minus & (1 << i) != 0 {
            e = e.one_minus(scn.outputs_of(i));
        }
    }
    let mut rep = scn.io_of(replace);
    rep.extend_from_slice(extra);
    e.replace(&rep)
}

/// `∀ X ⊆ universe, X ≠ ∅: ∏_X[1−A_O] (universe∖X ∪ also)_{IO} W = 0`.
pub fn validity_family(scn: &Scenario, universe: u32, also: u32) -> Vec<TraceReplaceExpr> {
    subsets(universe).map(|x| tr_expr(scn, x, (universe & !x) | also, &[])).collect()
}

pub fn validity_subspace(scn: &Scenario) -> Result<SubspaceSpec> {
    SubspaceSpec::new(scn.space().clone(), validity_family(scn, scn.all_parties(), 0), "valid")
}

/// Constraints for party `k` acting first.
pub fn k_first_constraints(scn: &Scenario, k: usize) -> Vec<TraceReplaceExpr> {
    let rest = scn.all_parties() & !(1 << k);
    let mut v = vec![tr_expr(scn, 1 << k, rest, &[])];
    v.extend(validity_family(scn, rest, 0));
    v
}

pub fn k_first_subspace(scn: &Scenario, k: &str) -> Result<SubspaceSpec> {
    let i = scn.index_of(k)?;
    SubspaceSpec::new(scn.space().clone(), k_first_constraints(scn, i), &format!("{k}-first"))
}

/// Disjoint blocks of parties `K_1 ≺ K_2 ≺ ⋯`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalOrderSpec {
    pub blocks: Vec<Vec<String>>,
}

impl CausalOrderSpec {
    pub fn chain(names: &[&str]) -> Self {
        CausalOrderSpec { blocks: names.iter().map(|n| vec![n.to_string()]).collect() }
    }

    /// Parses `A<B<C` or `A,B<C`.
    pub fn parse(s: &str) -> Result<Self> {
        let blocks: Vec<Vec<String>> = s
            .split('<')
            .map(|b| b.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())
            .collect();
        if blocks.iter().any(|b: &Vec<String>| b.is_empty()) {
            return Err(Error::BadParams(format!("empty block in order '{s}'")));
        }
        Ok(CausalOrderSpec { blocks })
    }

    pub fn block_masks(&self, scn: &Scenario) -> Result<Vec<u32>> {
        let mut seen = 0u32;
        let mut out = Vec::new();
        for b in &self.blocks {
            let mut m = 0u32;
            for p in b {
                let bit = 1 << scn.index_of(p)?;
                if seen & bit != 0 {
                    return Err(Error::OverlappingBlocks(p.clone()));
                }
                seen |= bit;
                m |= bit;
            }
            out.push(m);
        }
        Ok(out)
    }
}

impl fmt::Display for CausalOrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.join(",")).collect();
        write!(f, "{}", parts.join("<"))
    }
}

/// Constraints of `K_1 ≺ K_2` for disjoint (possibly non-covering) sets.
pub fn two_block_constraints(scn: &Scenario, k1: u32, k2: u32) -> Vec<TraceReplaceExpr> {
    let all = scn.all_parties();
    let mut v = validity_family(scn, all & !k2, k2);
    for x2 in subsets(all & !k1) {
        if x2 & k2 != 0 {
            v.push(tr_expr(scn, x2, all & !k1 & !x2, &[]));
        }
    }
    v
}

pub fn order_constraints(scn: &Scenario, blocks: &[u32]) -> Vec<TraceReplaceExpr> {
    let covered = blocks.iter().fold(0u32, |a, b| a | b);
    if covered == scn.all_parties() {
        let mut v = Vec::new();
        for (k, &b) in blocks.iter().enumerate() {
            let later = blocks[k + 1..].iter().fold(0u32, |a, b| a | b);
            v.extend(validity_family(scn, b, later));
        }
        v
    } else if blocks.len() < 2 {
        validity_family(scn, scn.all_parties(), 0)
    } else {
        let mut v = Vec::new();
        for k in 1..blocks.len() {
            let before = blocks[..k].iter().fold(0u32, |a, b| a | b);
            let after = blocks[k..].iter().fold(0u32, |a, b| a | b);
            v.extend(two_block_constraints(scn, before, after));
        }
        v
    }
}

pub fn order_subspace(scn: &Scenario, spec: &CausalOrderSpec) -> Result<SubspaceSpec> {
    let blocks = spec.block_masks(scn)?;
    SubspaceSpec::new(scn.space().clone(), order_constraints(scn, &blocks), &spec.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bipartite_validity_has_three_constraints() {
        let scn = Scenario::qubits(&["A", "B"]).unwrap();
        let l = validity_subspace(&scn).unwrap();
        assert_eq!(l.constraints.len(), 3);
        let names: Vec<String> = l.constraints.iter().map(|c| c.to_string()).collect();
        assert!(names.contains(&"_{[1-A_O] B_I B_O}".to_string()));
        assert!(names.contains(&"_{[1-A_O] [1-B_O]}".to_string()));
    }

    #[test]
    fn trivial_outputs_prune_constraints() {
        let scn = Scenario::new(&[("A", 2, 2), ("B", 2, 1)]).unwrap();
        assert_eq!(validity_subspace(&scn).unwrap().constraints.len(), 1);
    }

    #[test]
    fn overlapping_blocks_are_rejected() {
        let scn = Scenario::qubits(&["A", "B"]).unwrap();
        let spec = CausalOrderSpec::parse("A<A,B").unwrap();
        assert!(matches!(order_subspace(&scn, &spec), Err(Error::OverlappingBlocks(_))));
    }
}
