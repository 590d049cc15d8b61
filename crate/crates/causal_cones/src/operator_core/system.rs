use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a subsystem within its party. The declaration order is the
/// canonical order used when sorting systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    In,
    AncillaIn,
    Out,
}

impl Role {
    pub fn short(self) -> &'static str {
        match self {
            Role::In => "I",
            Role::AncillaIn => "I'",
            Role::Out => "O",
        }
    }
}

/// One tensor factor of an operator space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub party: String,
    pub role: Role,
    #[serde(default)]
    pub tag: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(party: &str, role: Role, tag: &str, dim: usize) -> Self {
        SystemLabel { party: party.to_string(), role, tag: tag.to_string(), dim }
    }

    pub fn input(party: &str, dim: usize) -> Self {
        Self::new(party, Role::In, "", dim)
    }

    pub fn output(party: &str, dim: usize) -> Self {
        Self::new(party, Role::Out, "", dim)
    }

    pub fn ancilla(party: &str, tag: &str, dim: usize) -> Self {
        Self::new(party, Role::AncillaIn, tag, dim)
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tag = tag.to_string();
        self
    }

    /// Same party, role and tag (dimension ignored).
    pub fn same_system(&self, other: &SystemLabel) -> bool {
        self.party == other.party && self.role == other.role && self.tag == other.tag
    }

    pub fn canonical_cmp(&self, other: &SystemLabel) -> Ordering {
        (&self.party, self.role, &self.tag).cmp(&(&other.party, other.role, &other.tag))
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 1
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tag.is_empty() {
            write!(f, "{}_{}", self.party, self.role.short())
        } else {
            write!(f, "{}_{}^{}", self.party, self.role.short(), self.tag)
        }
    }
}

/// Ordered registry of subsystems; always kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSpace {
    systems: Vec<SystemLabel>,
}

impl LabeledSpace {
    pub fn new(mut systems: Vec<SystemLabel>) -> Result<Self> {
        for s in &systems {
            if s.dim == 0 {
                return Err(Error::InvalidLabel(format!("{s} has dimension 0")));
            }
            if s.party.is_empty() {
                return Err(Error::InvalidLabel("empty party identifier".into()));
            }
        }
        systems.sort_by(|a, b| a.canonical_cmp(b));
        for w in systems.windows(2) {
            if w[0].same_system(&w[1]) {
                return Err(Error::LabelCollision(w[0].to_string()));
            }
        }
        Ok(LabeledSpace { systems })
    }

    pub fn empty() -> Self {
        LabeledSpace { systems: Vec::new() }
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.systems.iter().map(|s| s.dim).product()
    }

    /// Row-major strides: the first system is the most significant digit.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.dims())
    }

    pub fn position(&self, label: &SystemLabel) -> Result<usize> {
        let pos = self
            .systems
            .iter()
            .position(|s| s.same_system(label))
            .ok_or_else(|| Error::UnknownSystem(label.to_string()))?;
        if self.systems[pos].dim != label.dim {
            return Err(Error::DimensionMismatch(format!(
                "{label} has dimension {} in the space, {} requested",
                self.systems[pos].dim, label.dim
            )));
        }
        Ok(pos)
    }

    pub fn positions(&self, labels: &[SystemLabel]) -> Result<Vec<usize>> {
        let mut out = labels.iter().map(|l| self.position(l)).collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn contains(&self, label: &SystemLabel) -> bool {
        self.systems.iter().any(|s| s.same_system(label))
    }

    pub fn find(&self, party: &str, role: Role) -> Vec<SystemLabel> {
        self.systems.iter().filter(|s| s.party == party && s.role == role).cloned().collect()
    }

    pub fn party_systems(&self, party: &str) -> Vec<SystemLabel> {
        self.systems.iter().filter(|s| s.party == party).cloned().collect()
    }

    /// Distinct parties in canonical order.
    pub fn parties(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.systems {
            if out.last() != Some(&s.party) {
                out.push(s.party.clone());
            }
        }
        out
    }

    pub fn dim_of(&self, labels: &[SystemLabel]) -> usize {
        labels.iter().map(|l| l.dim).product()
    }

    /// Space made of the systems not listed in `labels`.
    pub fn without(&self, labels: &[SystemLabel]) -> LabeledSpace {
        LabeledSpace {
            systems: self
                .systems
                .iter()
                .filter(|s| !labels.iter().any(|l| l.same_system(s)))
                .cloned()
                .collect(),
        }
    }

    pub fn overlaps(&self, other: &LabeledSpace) -> Option<SystemLabel> {
        self.systems.iter().find(|s| other.contains(s)).cloned()
    }
}

impl fmt::Display for LabeledSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> =
            self.systems.iter().map(|s| format!("{}({})", s, s.dim)).collect();
        write!(f, "[{}]", names.join(" "))
    }
}

pub fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// Flat offsets of every joint index of the systems at `positions`
/// (first listed position most significant).
pub fn offsets(dims: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for i in 0..dims[p] {
                next.push(base + i * strides[p]);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_sorts_party_then_role_then_tag() {
        let space = LabeledSpace::new(vec![
            SystemLabel::output("A", 2),
            SystemLabel::input("C", 2),
            SystemLabel::ancilla("A", "p", 2),
            SystemLabel::input("A", 2),
        ])
        .unwrap();
        let names: Vec<String> = space.systems().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["A_I", "A_I'^p", "A_O", "C_I"]);
    }

    #[test]
    fn duplicate_labels_collide() {
        let err = LabeledSpace::new(vec![SystemLabel::input("A", 2), SystemLabel::input("A", 3)]);
        assert!(matches!(err, Err(Error::LabelCollision(_))));
    }

    #[test]
    fn offsets_enumerate_mixed_radix() {
        let dims = [2, 3, 2];
        let strides = strides_of(&dims);
        assert_eq!(strides, vec![6, 2, 1]);
        assert_eq!(offsets(&dims, &strides, &[0, 2]), vec![0, 1, 6, 7]);
    }
}
