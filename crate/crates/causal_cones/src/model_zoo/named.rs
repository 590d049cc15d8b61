use serde::{Deserialize, Serialize};

use crate::causal_subspaces::Scenario;
use crate::error::{Error, Result};
use crate::operator_core::{LabeledSpace, ProcessOperator, SystemLabel, C64};

/// Weighted sum of Pauli strings written in the given system order.
pub fn pauli_sum(systems: &[SystemLabel], terms: &[(f64, &str)]) -> Result<ProcessOperator> {
    let mut acc: Option<ProcessOperator> = None;
    for &(c, letters) in terms {
        let p = ProcessOperator::pauli(systems, letters)?.scaled(c);
        acc = Some(match acc {
            None => p,
            Some(a) => &a + &p,
        });
    }
    acc.ok_or_else(|| Error::BadParams("empty Pauli sum".into()))
}

/// Scenario of `W^act`: C has no outgoing system.
pub fn act_scenario() -> Scenario {
    Scenario::new(&[("A", 2, 2), ("B", 2, 2), ("C", 2, 1)]).expect("static scenario")
}

fn act_order() -> Vec<SystemLabel> {
    vec![
        SystemLabel::input("C", 2),
        SystemLabel::input("A", 2),
        SystemLabel::input("B", 2),
        SystemLabel::output("A", 2),
        SystemLabel::output("B", 2),
    ]
}

/// `W^act` (written in the order C_I A_I B_I A_O B_O), extended with the
/// trivial C_O.
pub fn w_act() -> ProcessOperator {
    let s3 = 3f64.sqrt() / 4.0;
    let w = pauli_sum(
        &act_order(),
        &[
            (1.0, "11111"),
            (-1.0, "1zz11"),
            (s3, "1xxz1"),
            (s3, "1yyz1"),
            (s3, "1xx1z"),
            (s3, "1yy1z"),
            (0.5, "zz111"),
            (-0.5, "z1z11"),
            (0.25, "xxyz1"),
            (-0.25, "xxy1z"),
            (-0.25, "xyxz1"),
            (0.25, "xyx1z"),
        ],
    )
    .expect("static operator");
    with_trivial(&w.scaled(0.125), &[SystemLabel::output("C", 1)])
}

/// Closed-form witness `S^act` for `W^act`.
pub fn s_act() -> ProcessOperator {
    let r3 = 1.0 / 3f64.sqrt();
    let t = 2.0 / 3.0;
    let w = pauli_sum(
        &act_order(),
        &[
            // 𝟙(𝟙𝟙−ẑẑ)(𝟙𝟙−ẑẑ)
            (1.0, "11111"),
            (-1.0, "111zz"),
            (-1.0, "1zz11"),
            (1.0, "1zzzz"),
            // −2/3 𝟙(x̂x̂+ŷŷ)(𝟙ẑ+ẑ𝟙)
            (-t, "1xx1z"),
            (-t, "1xxz1"),
            (-t, "1yy1z"),
            (-t, "1yyz1"),
            // 1/√3 ẑ(𝟙ẑ−ẑ𝟙)(𝟙𝟙−ẑẑ)
            (r3, "z1z11"),
            (-r3, "z1zzz"),
            (-r3, "zz111"),
            (r3, "zz1zz"),
            // 1/√3 x̂(x̂ŷ−ŷx̂)(𝟙ẑ−ẑ𝟙)
            (r3, "xxy1z"),
            (-r3, "xxyz1"),
            (-r3, "xyx1z"),
            (r3, "xyxz1"),
            // 1/3 ŷ(x̂x̂+ŷŷ)(𝟙ẑ−ẑ𝟙)
            (1.0 / 3.0, "yxx1z"),
            (-1.0 / 3.0, "yxxz1"),
            (1.0 / 3.0, "yyy1z"),
            (-1.0 / 3.0, "yyyz1"),
        ],
    )
    .expect("static operator");
    with_trivial(&w.scaled(0.25), &[SystemLabel::output("C", 1)])
}

/// `W^{A≺B}_{|M_c}` and `W^{B≺A}_{|M_c}` (order A_I B_I A_O B_O).
pub fn act_conditional_terms(c: [f64; 3]) -> (ProcessOperator, ProcessOperator) {
    let order = [
        SystemLabel::input("A", 2),
        SystemLabel::input("B", 2),
        SystemLabel::output("A", 2),
        SystemLabel::output("B", 2),
    ];
    let s = 3f64.sqrt() / 2.0;
    let build = |a_first: bool| {
        let (z_out, sx) = if a_first { ("z1", 1.0) } else { ("1z", -1.0) };
        let t = |p: &str| format!("{p}{z_out}");
        pauli_sum(
            &order,
            &[
                (1.0, "1111"),
                (-1.0, "zz11"),
                (s, &t("xx")),
                (s, &t("yy")),
                (c[2] / 2.0, "z111"),
                (-c[2] / 2.0, "1z11"),
                (sx * c[0] / 2.0, &t("xy")),
                (-sx * c[0] / 2.0, &t("yx")),
            ],
        )
        .expect("static operator")
        .scaled(0.25)
    };
    (build(true), build(false))
}

/// Scenario of the four-party switch: A has no input, D no output.
pub fn switch_space() -> LabeledSpace {
    LabeledSpace::new(vec![
        SystemLabel::input("A", 1),
        SystemLabel::output("A", 2).with_tag("c"),
        SystemLabel::input("B", 2).with_tag("t"),
        SystemLabel::output("B", 2).with_tag("t"),
        SystemLabel::input("C", 2).with_tag("t"),
        SystemLabel::output("C", 2).with_tag("t"),
        SystemLabel::input("D", 2).with_tag("c"),
        SystemLabel::output("D", 1),
    ])
    .expect("static space")
}

fn normalized_psi(psi: [C64; 2]) -> Result<[C64; 2]> {
    let n = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::BadParams(format!("target state has norm {n}")));
    }
    Ok(psi)
}

/// `|w⟩` on (A_O^c, B_I^t, B_O^t, C_I^t, C_O^t, D_I^t, D_I^c).
fn switch_vector(psi: [C64; 2]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 128];
    let idx = |bits: [usize; 7]| bits.iter().fold(0, |acc, &b| acc * 2 + b);
    for (p, amp) in psi.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                // B first: ψ on B_I, |𝟙⟩⟩ on B_O C_I, |𝟙⟩⟩ on C_O D_I^t, control 0.
                v[idx([0, p, i, i, j, j, 0])] += amp;
                // C first: ψ on C_I, |𝟙⟩⟩ on C_O B_I, |𝟙⟩⟩ on B_O D_I^t, control 1.
                v[idx([1, i, j, p, i, j, 1])] += amp;
            }
        }
    }
    v
}

fn switch_order(with_target: bool) -> Vec<SystemLabel> {
    let mut v = vec![
        SystemLabel::output("A", 2).with_tag("c"),
        SystemLabel::input("B", 2).with_tag("t"),
        SystemLabel::output("B", 2).with_tag("t"),
        SystemLabel::input("C", 2).with_tag("t"),
        SystemLabel::output("C", 2).with_tag("t"),
    ];
    if with_target {
        v.push(SystemLabel::input("D", 2).with_tag("t"));
    }
    v.push(SystemLabel::input("D", 2).with_tag("c"));
    v
}

/// Untraced switch including D's target qubit (128-dim).
pub fn switch4_full(psi: [C64; 2]) -> Result<ProcessOperator> {
    let v = switch_vector(normalized_psi(psi)?);
    let n = v.len();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = v[i] * v[j].conj();
        }
    }
    let w = ProcessOperator::from_ordered(switch_order(true), data)?;
    Ok(with_trivial(&w, &[SystemLabel::input("A", 1), SystemLabel::output("D", 1)]))
}

/// `W^switch = Tr_{D_I^t} |w⟩⟨w|` (64-dim).
pub fn switch4(psi: [C64; 2]) -> Result<ProcessOperator> {
    switch4_full(psi)?.partial_trace(&[SystemLabel::input("D", 2).with_tag("t")])
}

/// The two terms `W_(A,B,C)` and `W_(A,C,B)` of `Tr_D W^switch`, built
/// from their closed form.
pub fn trd_switch_terms(psi: [C64; 2]) -> Result<(ProcessOperator, ProcessOperator)> {
    let psi = normalized_psi(psi)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let proj = |k: usize| {
        let mut m = vec![zero; 4];
        m[k * 3] = one;
        m
    };
    let psi_proj: Vec<C64> =
        (0..4).map(|e| psi[e / 2] * psi[e % 2].conj()).collect();
    let id2 = vec![one, zero, zero, one];
    let mut bell = vec![zero; 16];
    for a in [0usize, 3] {
        for b in [0usize, 3] {
            bell[a * 4 + b] = one;
        }
    }
    let lbl = |p: &str, out: bool| {
        if out {
            SystemLabel::output(p, 2).with_tag("t")
        } else {
            SystemLabel::input(p, 2).with_tag("t")
        }
    };
    let a_o = SystemLabel::output("A", 2).with_tag("c");
    let build = |control: usize, first: &str, second: &str| -> Result<ProcessOperator> {
        // |c⟩⟨c| ⊗ |ψ⟩⟨ψ|^{first_I} ⊗ |𝟙⟩⟩⟨⟨𝟙|^{first_O second_I} ⊗ 𝟙^{second_O}
        let head = ProcessOperator::product(vec![
            (a_o.clone(), proj(control)),
            (lbl(first, false), psi_proj.clone()),
            (lbl(second, true), id2.clone()),
        ])?;
        let link = ProcessOperator::from_ordered(vec![lbl(first, true), lbl(second, false)], bell.clone())?;
        let w = head.tensor(&link)?;
        Ok(with_trivial(&w, &[SystemLabel::input("A", 1)]))
    };
    Ok((build(0, "B", "C")?, build(1, "C", "B")?))
}

pub fn trd_switch(psi: [C64; 2]) -> Result<ProcessOperator> {
    let (a, b) = trd_switch_terms(psi)?;
    Ok(&a + &b)
}

pub fn gap_scenario() -> Scenario {
    Scenario::new(&[("A", 1, 2), ("B", 2, 2), ("C", 2, 2), ("D", 2, 1)]).expect("static scenario")
}

fn gap_order() -> Vec<SystemLabel> {
    vec![
        SystemLabel::output("A", 2),
        SystemLabel::input("B", 2),
        SystemLabel::output("B", 2),
        SystemLabel::input("C", 2),
        SystemLabel::output("C", 2),
        SystemLabel::input("D", 2),
    ]
}

fn gap_like(weight: f64) -> ProcessOperator {
    let w = pauli_sum(&gap_order(), &[(1.0, "111111"), (weight, "z1zz11"), (weight, "zz1xz1")])
        .expect("static operator")
        .scaled(0.125);
    with_trivial(&w, &[SystemLabel::input("A", 1), SystemLabel::output("D", 1)])
}

pub fn w_gap() -> ProcessOperator {
    gap_like(1.0 / 2f64.sqrt())
}

pub fn s_gap() -> ProcessOperator {
    gap_like(-1.0)
}

/// `𝟙° = 𝟙/d_I` on the scenario.
pub fn white_noise(scn: &Scenario) -> ProcessOperator {
    ProcessOperator::identity(scn.space().clone()).scaled(1.0 / scn.d_in_total() as f64)
}

/// Process for a fixed chain of parties: party 1 receives `|0⟩⟨0|`, each
/// output is sent through an identity channel to the next party when the
/// dimensions agree (and traced out otherwise), the last output is
/// discarded.
pub fn fixed_order_channel(scn: &Scenario, order: &[&str]) -> Result<ProcessOperator> {
    if order.len() != scn.n_parties() {
        return Err(Error::WrongPartyCount { expected: scn.n_parties(), found: order.len() });
    }
    let one = C64::new(1.0, 0.0);
    let mut factors: Vec<ProcessOperator> = Vec::new();
    let single = |l: &SystemLabel, m: Vec<C64>| -> Result<ProcessOperator> {
        ProcessOperator::product(vec![(l.clone(), m)])
    };
    let ident = |d: usize| -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            m[i * d + i] = one;
        }
        m
    };
    let mut prev_out: Vec<SystemLabel> = Vec::new();
    for (step, name) in order.iter().enumerate() {
        let p = scn.party(name)?;
        if step == 0 {
            for l in &p.inputs {
                let mut m = vec![C64::new(0.0, 0.0); l.dim * l.dim];
                m[0] = one;
                factors.push(single(l, m)?);
            }
        } else {
            let d_prev: usize = prev_out.iter().map(|s| s.dim).product();
            if d_prev == p.d_in() && prev_out.len() == 1 && p.inputs.len() == 1 {
                let d = d_prev;
                let mut m = vec![C64::new(0.0, 0.0); d * d * d * d];
                for i in 0..d {
                    for j in 0..d {
                        m[(i * d + i) * d * d + j * d + j] = one;
                    }
                }
                factors.push(ProcessOperator::from_ordered(
                    vec![prev_out[0].clone(), p.inputs[0].clone()],
                    m,
                )?);
            } else {
                for l in &prev_out {
                    factors.push(single(l, ident(l.dim))?);
                }
                for l in &p.inputs {
                    let m = ident(l.dim).into_iter().map(|z| z / l.dim as f64).collect();
                    factors.push(single(l, m)?);
                }
            }
        }
        prev_out = p.outputs.clone();
    }
    for l in &prev_out {
        factors.push(single(l, ident(l.dim))?);
    }
    let mut w = factors.remove(0);
    for f in &factors {
        w = w.tensor(f)?;
    }
    Ok(w)
}

/// `w ⊗ 1` on trivial systems.
fn with_trivial(w: &ProcessOperator, trivial: &[SystemLabel]) -> ProcessOperator {
    w.extend_identity(trivial).expect("trivial systems are fresh")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedModel {
    Wact,
    Sact,
    Switch4,
    Switch4Full,
    TrdSwitch,
    Wgap,
    Sgap,
}

impl NamedModel {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "wact" | "w-act" => NamedModel::Wact,
            "sact" | "s-act" => NamedModel::Sact,
            "switch4" | "switch" => NamedModel::Switch4,
            "switch4-full" => NamedModel::Switch4Full,
            "trd-switch" | "trdswitch" => NamedModel::TrdSwitch,
            "wgap" | "w-gap" => NamedModel::Wgap,
            "sgap" | "s-gap" => NamedModel::Sgap,
            other => return Err(Error::BadParams(format!("unknown example '{other}'"))),
        })
    }

    pub fn all() -> [NamedModel; 7] {
        [
            NamedModel::Wact,
            NamedModel::Sact,
            NamedModel::Switch4,
            NamedModel::Switch4Full,
            NamedModel::TrdSwitch,
            NamedModel::Wgap,
            NamedModel::Sgap,
        ]
    }

    /// `psi` is the switch's target state (default `|0⟩`).
    pub fn build(&self, psi: Option<[C64; 2]>) -> Result<ProcessOperator> {
        let psi = psi.unwrap_or([C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        Ok(match self {
            NamedModel::Wact => w_act(),
            NamedModel::Sact => s_act(),
            NamedModel::Switch4 => switch4(psi)?,
            NamedModel::Switch4Full => switch4_full(psi)?,
            NamedModel::TrdSwitch => trd_switch(psi)?,
            NamedModel::Wgap => w_gap(),
            NamedModel::Sgap => s_gap(),
        })
    }
}
