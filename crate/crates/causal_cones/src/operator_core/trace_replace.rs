//! Trace-and-replace maps `_X W = Tr_X W ⊗ 𝟙^X/d_X` and their products.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::operator::{ProcessOperator, C64};
use super::system::{offsets, LabeledSpace, SystemLabel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Replace,
    OneMinusReplace,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrFactor {
    pub systems: Vec<SystemLabel>,
    pub mode: Mode,
}

/// Product of commuting factors `_X` and `_[1−X]` on disjoint subsets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceReplaceExpr {
    pub factors: Vec<TrFactor>,
}

impl TraceReplaceExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn replace(mut self, systems: &[SystemLabel]) -> Self {
        if !systems.is_empty() {
            self.factors.push(TrFactor { systems: systems.to_vec(), mode: Mode::Replace });
        }
        self
    }

    pub fn one_minus(mut self, systems: &[SystemLabel]) -> Self {
        self.factors.push(TrFactor { systems: systems.to_vec(), mode: Mode::OneMinusReplace });
        self
    }

    /// Resolves labels against a space, checking disjointness.
    pub fn resolve(&self, space: &LabeledSpace) -> Result<ResolvedExpr> {
        let mut used = 0u64;
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let mut mask = 0u64;
            let mut nontrivial = 0u64;
            for l in &f.systems {
                let p = space.position(l)?;
                if used & (1 << p) != 0 {
                    return Err(Error::BadParams(format!(
                        "system {l} appears in two factors of one expression"
                    )));
                }
                used |= 1 << p;
                mask |= 1 << p;
                if space.systems()[p].dim > 1 {
                    nontrivial |= 1 << p;
                }
            }
            factors.push(ResolvedFactor { mask, nontrivial, mode: f.mode });
        }
        Ok(ResolvedExpr { factors })
    }

    /// Applies the map to an operator by direct partial traces.
    pub fn apply(&self, w: &ProcessOperator) -> Result<ProcessOperator> {
        let space = w.space().clone();
        let mut data = w.data().to_vec();
        for f in &self.factors {
            let pos = space.positions(&f.systems)?;
            let replaced = replace_data(&data, &space, &pos);
            match f.mode {
                Mode::Replace => data = replaced,
                Mode::OneMinusReplace => {
                    for (d, r) in data.iter_mut().zip(&replaced) {
                        *d -= r;
                    }
                }
            }
        }
        Ok(ProcessOperator::from_raw(space, data))
    }

    pub fn display(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TraceReplaceExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for fac in &self.factors {
            let names: Vec<String> = fac.systems.iter().map(|s| s.to_string()).collect();
            match fac.mode {
                Mode::Replace => parts.push(names.join(" ")),
                Mode::OneMinusReplace => parts.push(format!("[1-{}]", names.join(" "))),
            }
        }
        write!(f, "_{{{}}}", parts.join(" "))
    }
}

/// `_X` on raw row-major data; `pos` are canonical positions of X.
pub(crate) fn replace_data(data: &[C64], space: &LabeledSpace, pos: &[usize]) -> Vec<C64> {
    let dims = space.dims();
    let strides = space.strides();
    let n = space.total_dim();
    let kept: Vec<usize> = (0..dims.len()).filter(|p| !pos.contains(p)).collect();
    let off_k = offsets(&dims, &strides, &kept);
    let off_x = offsets(&dims, &strides, pos);
    let dx = off_x.len() as f64;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for &ra in &off_k {
        for &cb in &off_k {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &off_x {
                acc += data[(ra + t) * n + cb + t];
            }
            let v = acc / dx;
            for &t in &off_x {
                out[(ra + t) * n + cb + t] = v;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ResolvedFactor {
    pub mask: u64,
    /// Systems of the factor with dimension > 1.
    pub nontrivial: u64,
    pub mode: Mode,
}

/// An expression with systems replaced by position bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResolvedExpr {
    pub factors: Vec<ResolvedFactor>,
}

impl ResolvedExpr {
    /// True when the map vanishes identically (some `[1−X]` acts only on
    /// trivial systems).
    pub fn is_zero_map(&self) -> bool {
        self.factors.iter().any(|f| f.mode == Mode::OneMinusReplace && f.nontrivial == 0)
    }

    /// Whether the basis strings with the given support lie in the range
    /// of the map (the map is diagonal in the product basis, with
    /// eigenvalue 1 there and 0 elsewhere).
    pub fn active_on(&self, support: u64) -> bool {
        self.factors.iter().all(|f| match f.mode {
            Mode::Replace => support & f.mask == 0,
            Mode::OneMinusReplace => support & f.mask != 0,
        })
    }
}
