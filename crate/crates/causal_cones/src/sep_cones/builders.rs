use std::fmt;
use std::str::FromStr;

use super::cone::{ConeNode, ConeSpec};
use crate::causal_subspaces::{
    k_first_constraints, order_constraints, tr_expr, validity_family, CausalOrderSpec, Scenario,
    SubspaceSpec,
};
use crate::error::{Error, Result};
use crate::model_zoo::permutations;
use crate::operator_core::TraceReplaceExpr;

/// Default cap on the number of parties for the recursive cones.
pub const DEFAULT_PARTY_CAP: usize = 5;

fn bit(i: usize) -> u32 {
    1 << i
}

fn subspace(scn: &Scenario, constraints: Vec<TraceReplaceExpr>, name: &str) -> Result<Option<ConeNode>> {
    let l = SubspaceSpec::new(scn.space().clone(), constraints, name)?;
    Ok(if l.constraints.is_empty() { None } else { Some(ConeNode::Subspace(l)) })
}

/// `PSD ∩ {constraints}` with the given variable label.
fn leaf(scn: &Scenario, label: String, constraints: Vec<TraceReplaceExpr>) -> Result<ConeNode> {
    let mut ch = vec![ConeNode::Psd { label: label.clone() }];
    ch.extend(subspace(scn, constraints, &label)?);
    Ok(ConeNode::intersect(ch))
}

/// `{constraints} ∩ inner`.
fn constrained(scn: &Scenario, constraints: Vec<TraceReplaceExpr>, name: &str, inner: ConeNode) -> Result<ConeNode> {
    let mut ch: Vec<ConeNode> = subspace(scn, constraints, name)?.into_iter().collect();
    ch.push(inner);
    Ok(ConeNode::intersect(ch))
}

/// Variable naming: `W_(A,B,C)` plus a branch tag such as `[A→B]`.
#[derive(Clone, Default)]
struct Naming {
    head: Vec<String>,
    tag: String,
}

impl Naming {
    fn label(&self, order: &[&str]) -> String {
        let mut all = self.head.clone();
        all.extend(order.iter().map(|s| s.to_string()));
        format!("W_({}){}", all.join(","), self.tag)
    }
}

fn names(scn: &Scenario) -> Vec<String> {
    scn.party_names()
}

fn expect_parties(scn: &Scenario, n: usize) -> Result<()> {
    if scn.n_parties() != n {
        return Err(Error::WrongPartyCount { expected: n, found: scn.n_parties() });
    }
    Ok(())
}

fn bipartite_node(scn: &Scenario, nm: &Naming) -> Result<ConeNode> {
    let p = names(scn);
    let mut terms = Vec::new();
    for (x, y) in [(0, 1), (1, 0)] {
        let label = nm.label(&[&p[x], &p[y]]);
        terms.push(leaf(scn, label, order_constraints(scn, &[bit(x), bit(y)]))?);
    }
    Ok(ConeNode::sum(terms))
}

/// `(PSD ∩ L^{A≺B}) + (PSD ∩ L^{B≺A})`.
pub fn bipartite_sep_cone(scn: &Scenario) -> Result<ConeSpec> {
    expect_parties(scn, 2)?;
    Ok(ConeSpec::new("bipartite", scn.clone(), bipartite_node(scn, &Naming::default())?))
}

fn tripartite_node(scn: &Scenario, nm: &Naming) -> Result<ConeNode> {
    let p = names(scn);
    let all = scn.all_parties();
    let mut terms = Vec::new();
    for x in 0..3 {
        let rest = all & !bit(x);
        let others: Vec<usize> = (0..3).filter(|&i| i != x).collect();
        let mut inner = Vec::new();
        for (y, z) in [(others[0], others[1]), (others[1], others[0])] {
            let label = nm.label(&[&p[x], &p[y], &p[z]]);
            let cons = vec![tr_expr(scn, bit(y), bit(z), &[]), tr_expr(scn, bit(z), 0, &[])];
            inner.push(leaf(scn, label, cons)?);
        }
        let name = format!("{}-first", nm.label(&[&p[x]]));
        terms.push(constrained(scn, vec![tr_expr(scn, bit(x), rest, &[])], &name, ConeNode::sum(inner))?);
    }
    Ok(ConeNode::sum(terms))
}

/// Sum over the first party `X` of
/// `{[1−X_O] Y_IO Z_IO} ∩ Σ_{(Y,Z)} PSD ∩ {[1−Y_O] Z_IO, [1−Z_O]}`.
pub fn tripartite_sep_cone(scn: &Scenario) -> Result<ConeSpec> {
    expect_parties(scn, 3)?;
    Ok(ConeSpec::new("tripartite", scn.clone(), tripartite_node(scn, &Naming::default())?))
}

/// The restricted scenarios with an exact characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restricted {
    /// Three parties, one without outgoing system.
    B1,
    /// Three parties, one without incoming system.
    B2,
    /// Four parties, one without outgoing system.
    B4,
    /// Four parties, one without incoming and another without outgoing system.
    B5,
}

impl Restricted {
    pub fn name(self) -> &'static str {
        match self {
            Restricted::B1 => "b1",
            Restricted::B2 => "b2",
            Restricted::B4 => "b4",
            Restricted::B5 => "b5",
        }
    }
}

fn no_output(scn: &Scenario) -> Option<usize> {
    (0..scn.n_parties()).rev().find(|&i| scn.parties()[i].d_out() == 1)
}

fn no_input(scn: &Scenario, except: Option<usize>) -> Option<usize> {
    (0..scn.n_parties()).find(|&i| Some(i) != except && scn.parties()[i].d_in() == 1)
}

/// The restricted characterization matching the dimension pattern, if any.
pub fn detect_restricted(scn: &Scenario) -> Option<Restricted> {
    match scn.n_parties() {
        3 if no_output(scn).is_some() => Some(Restricted::B1),
        3 if no_input(scn, None).is_some() => Some(Restricted::B2),
        4 => {
            let d = no_output(scn)?;
            Some(if no_input(scn, Some(d)).is_some() { Restricted::B5 } else { Restricted::B4 })
        }
        _ => None,
    }
}

pub fn restricted_cone(scn: &Scenario) -> Result<ConeSpec> {
    match detect_restricted(scn) {
        Some(kind) => restricted_cone_of(scn, kind),
        None => Err(Error::NoMatchingScenario(format!(
            "{} parties with input dims {:?} and output dims {:?}",
            scn.n_parties(),
            scn.parties().iter().map(|p| p.d_in()).collect::<Vec<_>>(),
            scn.parties().iter().map(|p| p.d_out()).collect::<Vec<_>>()
        ))),
    }
}

pub fn restricted_cone_of(scn: &Scenario, kind: Restricted) -> Result<ConeSpec> {
    let mismatch = || Error::NoMatchingScenario(format!("scenario does not fit {}", kind.name()));
    let p = names(scn);
    let all = scn.all_parties();
    let nm = Naming::default();
    let node = match kind {
        Restricted::B1 => {
            expect_parties(scn, 3)?;
            let c = no_output(scn).ok_or_else(mismatch)?;
            let ab: Vec<usize> = (0..3).filter(|&i| i != c).collect();
            let mut terms = Vec::new();
            for (x, y) in [(ab[0], ab[1]), (ab[1], ab[0])] {
                let label = nm.label(&[&p[x], &p[y], &p[c]]);
                terms.push(leaf(scn, label, order_constraints(scn, &[bit(x), bit(y), bit(c)]))?);
            }
            ConeNode::sum(terms)
        }
        Restricted::B2 => {
            expect_parties(scn, 3)?;
            let a = no_input(scn, None).ok_or_else(mismatch)?;
            let bc: Vec<usize> = (0..3).filter(|&i| i != a).collect();
            let mut terms = Vec::new();
            for (x, y) in [(bc[0], bc[1]), (bc[1], bc[0])] {
                let label = nm.label(&[&p[a], &p[x], &p[y]]);
                let cons = vec![tr_expr(scn, bit(x), bit(y), &[]), tr_expr(scn, bit(y), 0, &[])];
                terms.push(leaf(scn, label, cons)?);
            }
            let first = vec![tr_expr(scn, bit(a), all & !bit(a), &[])];
            constrained(scn, first, &format!("{}-first", p[a]), ConeNode::sum(terms))?
        }
        Restricted::B4 => {
            expect_parties(scn, 4)?;
            let d = no_output(scn).ok_or_else(mismatch)?;
            let abc: Vec<usize> = (0..4).filter(|&i| i != d).collect();
            let mut terms = Vec::new();
            for &x in &abc {
                let yz: Vec<usize> = abc.iter().cloned().filter(|&i| i != x).collect();
                let mut inner = Vec::new();
                for (y, z) in [(yz[0], yz[1]), (yz[1], yz[0])] {
                    let label = nm.label(&[&p[x], &p[y], &p[z], &p[d]]);
                    let cons =
                        vec![tr_expr(scn, bit(y), bit(z) | bit(d), &[]), tr_expr(scn, bit(z), bit(d), &[])];
                    inner.push(leaf(scn, label, cons)?);
                }
                let first = vec![tr_expr(scn, bit(x), all & !bit(x), &[])];
                terms.push(constrained(scn, first, &format!("{}-first", p[x]), ConeNode::sum(inner))?);
            }
            ConeNode::sum(terms)
        }
        Restricted::B5 => {
            expect_parties(scn, 4)?;
            let d = no_output(scn).ok_or_else(mismatch)?;
            let a = no_input(scn, Some(d)).ok_or_else(mismatch)?;
            let bc: Vec<usize> = (0..4).filter(|&i| i != a && i != d).collect();
            let mut terms = Vec::new();
            for (x, y) in [(bc[0], bc[1]), (bc[1], bc[0])] {
                let label = nm.label(&[&p[a], &p[x], &p[y], &p[d]]);
                let cons = vec![tr_expr(scn, bit(x), bit(y) | bit(d), &[]), tr_expr(scn, bit(y), bit(d), &[])];
                terms.push(leaf(scn, label, cons)?);
            }
            let first = vec![tr_expr(scn, bit(a), all & !bit(a), &[])];
            constrained(scn, first, &format!("{}-first", p[a]), ConeNode::sum(terms))?
        }
    };
    Ok(ConeSpec::new(kind.name(), scn.clone(), node))
}

/// Which relabeled branches the necessary cone imposes for each first party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branches {
    /// Every other party receives the first party's systems.
    All,
    /// One receiving party per first party, as `(first, receiver)` names.
    Single(Vec<(String, String)>),
}

impl Branches {
    /// For each party the last party receives, and the last party sends to
    /// the one before it.
    pub fn to_last(scn: &Scenario) -> Branches {
        let p = names(scn);
        let n = p.len();
        Branches::Single(
            (0..n)
                .map(|k| (p[k].clone(), if k + 1 == n { p[n - 2].clone() } else { p[n - 1].clone() }))
                .collect(),
        )
    }
}

fn single_party_node(scn: &Scenario, nm: &Naming) -> Result<ConeNode> {
    let label = nm.label(&[&names(scn)[0]]);
    leaf(scn, label, validity_family(scn, scn.all_parties(), 0))
}

fn necessary_node(scn: &Scenario, nm: &Naming, branches: &Branches) -> Result<ConeNode> {
    match scn.n_parties() {
        1 => return single_party_node(scn, nm),
        2 => return bipartite_node(scn, nm),
        3 => return tripartite_node(scn, nm),
        _ => {}
    }
    let p = names(scn);
    let mut terms = Vec::new();
    for k in 0..p.len() {
        let receivers: Vec<usize> = match branches {
            Branches::All => (0..p.len()).filter(|&i| i != k).collect(),
            Branches::Single(map) => {
                let to = map
                    .iter()
                    .find(|(from, _)| *from == p[k])
                    .map(|(_, to)| scn.index_of(to))
                    .transpose()?
                    .ok_or_else(|| Error::BadParams(format!("no branch given for party {}", p[k])))?;
                if to == k {
                    return Err(Error::BadParams(format!("party {} cannot receive from itself", p[k])));
                }
                vec![to]
            }
        };
        let mut ch = Vec::new();
        for kp in receivers {
            let virt = scn.absorb(&p[k], &p[kp])?;
            let sub = Naming {
                head: {
                    let mut h = nm.head.clone();
                    h.push(p[k].clone());
                    h
                },
                tag: format!("{}[{}→{}]", nm.tag, p[k], p[kp]),
            };
            // Deeper levels only see the remaining parties.
            ch.push(necessary_node(&virt, &sub, &Branches::All)?);
        }
        let name = format!("{}-first", nm.label(&[&p[k]]));
        let mut node = vec![];
        node.extend(subspace(scn, k_first_constraints(scn, k), &name)?);
        node.extend(ch);
        terms.push(ConeNode::intersect(node));
    }
    Ok(ConeNode::sum(terms))
}

/// Outer approximation: a sum over the first party `k` of operators
/// compatible with `k` first whose relabelings `k → k'` are separable
/// for the remaining parties.
pub fn necessary_cone(scn: &Scenario) -> Result<ConeSpec> {
    necessary_cone_with(scn, &Branches::All, DEFAULT_PARTY_CAP)
}

pub fn necessary_cone_with(scn: &Scenario, branches: &Branches, cap: usize) -> Result<ConeSpec> {
    let n = scn.n_parties();
    if n > cap {
        return Err(Error::RecursionDepth(n, cap));
    }
    let name = match branches {
        Branches::All => "necessary",
        Branches::Single(_) => "necessary-single-branch",
    };
    Ok(ConeSpec::new(name, scn.clone(), necessary_node(scn, &Naming::default(), branches)?))
}

fn sufficient_node(scn: &Scenario, prefix: &[usize]) -> Result<ConeNode> {
    let p = names(scn);
    let n = p.len();
    let used = prefix.iter().fold(0u32, |m, &i| m | bit(i));
    let rest = scn.all_parties() & !used;
    let last = *prefix.last().unwrap();
    let order: Vec<&str> = prefix.iter().map(|&i| p[i].as_str()).collect();
    let label = Naming::default().label(&order);
    let cons = vec![tr_expr(scn, bit(last), rest, &[])];
    if prefix.len() == n {
        return leaf(scn, label, cons);
    }
    let mut ch = Vec::new();
    for next in (0..n).filter(|i| used & bit(*i) == 0) {
        let mut pre = prefix.to_vec();
        pre.push(next);
        ch.push(sufficient_node(scn, &pre)?);
    }
    constrained(scn, cons, &label, ConeNode::sum(ch))
}

/// Inner approximation: one PSD term per permutation with the partial
/// sums over every ordered prefix constrained.
pub fn sufficient_cone(scn: &Scenario) -> Result<ConeSpec> {
    sufficient_cone_with(scn, DEFAULT_PARTY_CAP)
}

pub fn sufficient_cone_with(scn: &Scenario, cap: usize) -> Result<ConeSpec> {
    let n = scn.n_parties();
    if n > cap {
        return Err(Error::FactorialBlowup(n, cap));
    }
    let mut ch = Vec::new();
    for k in 0..n {
        ch.push(sufficient_node(scn, &[k])?);
    }
    Ok(ConeSpec::new("sufficient", scn.clone(), ConeNode::sum(ch)))
}

/// `PSD ∩ L^{K_1≺K_2≺⋯}`.
pub fn fixed_order_cone(scn: &Scenario, order: &CausalOrderSpec) -> Result<ConeSpec> {
    let blocks = order.block_masks(scn)?;
    let label = format!("W_({order})");
    let node = leaf(scn, label, order_constraints(scn, &blocks))?;
    Ok(ConeSpec::new(&format!("fixed-order:{order}"), scn.clone(), node))
}

/// Sum over all permutations of fixed-order cones (used in tests and as a
/// cheap inner bound).
pub fn fixed_orders_sum(scn: &Scenario) -> Result<ConeSpec> {
    let p = names(scn);
    let mut ch = Vec::new();
    for perm in permutations(p.len()) {
        let order: Vec<&str> = perm.iter().map(|&i| p[i].as_str()).collect();
        ch.push(fixed_order_cone(scn, &CausalOrderSpec::chain(&order))?.node);
    }
    Ok(ConeSpec::new("fixed-orders", scn.clone(), ConeNode::sum(ch)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConeChoice {
    Auto,
    Bipartite,
    Tripartite,
    Restricted(Restricted),
    Necessary,
    Sufficient,
    FixedOrder(CausalOrderSpec),
}

impl FromStr for ConeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => ConeChoice::Auto,
            "bipartite" => ConeChoice::Bipartite,
            "tripartite" => ConeChoice::Tripartite,
            "b1" => ConeChoice::Restricted(Restricted::B1),
            "b2" => ConeChoice::Restricted(Restricted::B2),
            "b4" => ConeChoice::Restricted(Restricted::B4),
            "b5" => ConeChoice::Restricted(Restricted::B5),
            "necessary" => ConeChoice::Necessary,
            "sufficient" => ConeChoice::Sufficient,
            _ => match s.strip_prefix("fixed-order:") {
                Some(chain) => ConeChoice::FixedOrder(CausalOrderSpec::parse(chain)?),
                None => return Err(Error::ConeSelection(format!("unknown cone '{s}'"))),
            },
        })
    }
}

impl fmt::Display for ConeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeChoice::Auto => write!(f, "auto"),
            ConeChoice::Bipartite => write!(f, "bipartite"),
            ConeChoice::Tripartite => write!(f, "tripartite"),
            ConeChoice::Restricted(r) => write!(f, "{}", r.name()),
            ConeChoice::Necessary => write!(f, "necessary"),
            ConeChoice::Sufficient => write!(f, "sufficient"),
            ConeChoice::FixedOrder(o) => write!(f, "fixed-order:{o}"),
        }
    }
}

/// Builds the selected cone; `Auto` picks the exact characterization and
/// refuses scenarios for which none is known.
pub fn build_cone(choice: &ConeChoice, scn: &Scenario) -> Result<ConeSpec> {
    match choice {
        ConeChoice::Auto => match scn.n_parties() {
            1 => Ok(ConeSpec::new("single", scn.clone(), single_party_node(scn, &Naming::default())?)),
            2 => bipartite_sep_cone(scn),
            3 => match detect_restricted(scn) {
                Some(kind) => restricted_cone_of(scn, kind),
                None => tripartite_sep_cone(scn),
            },
            n => match detect_restricted(scn) {
                Some(kind) => restricted_cone_of(scn, kind),
                None => Err(Error::ConeSelection(format!(
                    "no exact characterization is known for this {n}-partite scenario; \
                     choose --cone necessary or --cone sufficient"
                ))),
            },
        },
        ConeChoice::Bipartite => bipartite_sep_cone(scn),
        ConeChoice::Tripartite => tripartite_sep_cone(scn),
        ConeChoice::Restricted(kind) => restricted_cone_of(scn, *kind),
        ConeChoice::Necessary => necessary_cone(scn),
        ConeChoice::Sufficient => sufficient_cone(scn),
        ConeChoice::FixedOrder(order) => fixed_order_cone(scn, order),
    }
}
