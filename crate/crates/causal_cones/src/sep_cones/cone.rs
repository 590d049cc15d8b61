use std::fmt;

use serde::{Deserialize, Serialize};

use crate::causal_subspaces::{Scenario, SubspaceSpec};

/// Algebraic description of a closed convex cone of operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConeNode {
    /// Positive semidefinite operators; the label names the variable.
    Psd { label: String },
    Subspace(SubspaceSpec),
    Intersect(Vec<ConeNode>),
    Sum(Vec<ConeNode>),
    Dual(Box<ConeNode>),
}

impl ConeNode {
    pub fn intersect(mut children: Vec<ConeNode>) -> ConeNode {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            ConeNode::Intersect(children)
        }
    }

    pub fn sum(mut children: Vec<ConeNode>) -> ConeNode {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            ConeNode::Sum(children)
        }
    }

    /// Structural dual: `(C₁+C₂)* = C₁*∩C₂*`, `(C₁∩C₂)* = C₁*+C₂*`,
    /// PSD is self-dual and a subspace maps to its complement.
    pub fn dual(&self) -> ConeNode {
        match self {
            ConeNode::Psd { label } => ConeNode::Psd { label: dual_label(label) },
            ConeNode::Subspace(l) => ConeNode::Subspace(l.complement()),
            ConeNode::Intersect(ch) => ConeNode::Sum(ch.iter().map(|c| c.dual()).collect()),
            ConeNode::Sum(ch) => ConeNode::Intersect(ch.iter().map(|c| c.dual()).collect()),
            ConeNode::Dual(inner) => (**inner).clone(),
        }
    }

    /// Replaces every `Dual` node by the structural dual of its content.
    pub fn expand(&self) -> ConeNode {
        match self {
            ConeNode::Dual(inner) => inner.expand().dual(),
            ConeNode::Intersect(ch) => ConeNode::Intersect(ch.iter().map(|c| c.expand()).collect()),
            ConeNode::Sum(ch) => ConeNode::Sum(ch.iter().map(|c| c.expand()).collect()),
            other => other.clone(),
        }
    }

    pub fn psd_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<String>) {
        match self {
            ConeNode::Psd { label } => out.push(label.clone()),
            ConeNode::Subspace(_) => {}
            ConeNode::Intersect(ch) | ConeNode::Sum(ch) => ch.iter().for_each(|c| c.collect_labels(out)),
            ConeNode::Dual(inner) => inner.expand().dual().collect_labels(out),
        }
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            ConeNode::Psd { label } => writeln!(f, "{pad}PSD {label}"),
            ConeNode::Subspace(l) => writeln!(f, "{pad}{l}"),
            ConeNode::Intersect(ch) => {
                writeln!(f, "{pad}intersect")?;
                ch.iter().try_for_each(|c| c.write_tree(f, depth + 1))
            }
            ConeNode::Sum(ch) => {
                writeln!(f, "{pad}sum")?;
                ch.iter().try_for_each(|c| c.write_tree(f, depth + 1))
            }
            ConeNode::Dual(inner) => {
                writeln!(f, "{pad}dual")?;
                inner.write_tree(f, depth + 1)
            }
        }
    }
}

fn dual_label(label: &str) -> String {
    match label.strip_prefix("S+") {
        Some(rest) if rest.starts_with('[') && rest.ends_with(']') => rest[1..rest.len() - 1].to_string(),
        _ => format!("S+[{label}]"),
    }
}

/// A cone over the operator space of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSpec {
    pub name: String,
    pub scenario: Scenario,
    pub node: ConeNode,
}

impl ConeSpec {
    pub fn new(name: &str, scenario: Scenario, node: ConeNode) -> Self {
        ConeSpec { name: name.to_string(), scenario, node }
    }
}

pub fn dual_cone(c: &ConeSpec) -> ConeSpec {
    let name = match c.name.strip_suffix('*') {
        Some(base) => base.to_string(),
        None => format!("{}*", c.name),
    };
    ConeSpec { name, scenario: c.scenario.clone(), node: c.node.expand().dual() }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cone {} over {}", self.name, self.scenario.space())?;
        self.node.write_tree(f, 1)
    }
}
