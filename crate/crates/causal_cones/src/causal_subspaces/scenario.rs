use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_core::{LabeledSpace, Role, SystemLabel};

/// The incoming and outgoing systems attributed to one party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Party {
    pub name: String,
    pub inputs: Vec<SystemLabel>,
    pub outputs: Vec<SystemLabel>,
}

impl Party {
    pub fn io(&self) -> Vec<SystemLabel> {
        let mut v = self.inputs.clone();
        v.extend_from_slice(&self.outputs);
        v
    }

    pub fn d_in(&self) -> usize {
        self.inputs.iter().map(|s| s.dim).product()
    }

    pub fn d_out(&self) -> usize {
        self.outputs.iter().map(|s| s.dim).product()
    }
}

/// A set of parties over a labeled space. Usually each party owns its
/// own systems; virtual scenarios attribute some systems of an absent
/// party to another party's inputs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    space: LabeledSpace,
    parties: Vec<Party>,
}

impl Scenario {
    /// One incoming and one outgoing system per party, `(name, d_I, d_O)`.
    pub fn new(parties: &[(&str, usize, usize)]) -> Result<Self> {
        let mut systems = Vec::new();
        for &(name, di, dout) in parties {
            systems.push(SystemLabel::input(name, di));
            systems.push(SystemLabel::output(name, dout));
        }
        Self::from_space(LabeledSpace::new(systems)?)
    }

    /// Qubit inputs and outputs for every named party.
    pub fn qubits(names: &[&str]) -> Result<Self> {
        let spec: Vec<(&str, usize, usize)> = names.iter().map(|n| (*n, 2, 2)).collect();
        Self::new(&spec)
    }

    /// Groups systems by party: `In` and `AncillaIn` are inputs.
    pub fn from_space(space: LabeledSpace) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::InvalidLabel("scenario without systems".into()));
        }
        let parties = space
            .parties()
            .into_iter()
            .map(|name| {
                let sys = space.party_systems(&name);
                Party {
                    inputs: sys.iter().filter(|s| s.role != Role::Out).cloned().collect(),
                    outputs: sys.iter().filter(|s| s.role == Role::Out).cloned().collect(),
                    name,
                }
            })
            .collect();
        Ok(Scenario { space, parties })
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party_names(&self) -> Vec<String> {
        self.parties.iter().map(|p| p.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.parties
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::UnknownSystem(format!("party {name}")))
    }

    pub fn party(&self, name: &str) -> Result<&Party> {
        Ok(&self.parties[self.index_of(name)?])
    }

    /// Incoming and outgoing systems of the parties in the bitmask.
    pub fn io_of(&self, set: u32) -> Vec<SystemLabel> {
        let mut v = Vec::new();
        for (i, p) in self.parties.iter().enumerate() {
            if set & (1 << i) != 0 {
                v.extend(p.io());
            }
        }
        v
    }

    pub fn outputs_of(&self, i: usize) -> &[SystemLabel] {
        &self.parties[i].outputs
    }

    pub fn all_parties(&self) -> u32 {
        (1u32 << self.parties.len()) - 1
    }

    pub fn mask_of(&self, names: &[&str]) -> Result<u32> {
        names.iter().try_fold(0u32, |m, n| Ok(m | (1 << self.index_of(n)?)))
    }

    /// Product of all incoming dimensions (the `d_I` of `𝟙° = 𝟙/d_I`).
    pub fn d_in_total(&self) -> usize {
        self.parties.iter().map(|p| p.d_in()).product()
    }

    pub fn d_out_total(&self) -> usize {
        self.parties.iter().map(|p| p.d_out()).product()
    }

    /// Drops party `x` and attributes its systems to `into`'s inputs.
    pub fn absorb(&self, x: &str, into: &str) -> Result<Scenario> {
        let xi = self.index_of(x)?;
        let yi = self.index_of(into)?;
        if xi == yi {
            return Err(Error::BadParams(format!("party {x} cannot absorb itself")));
        }
        let moved = self.parties[xi].io();
        let mut parties = self.parties.clone();
        parties[yi].inputs.extend(moved);
        parties.remove(xi);
        Ok(Scenario { space: self.space.clone(), parties })
    }

    /// Same party structure over a space with some systems added.
    pub fn with_space(&self, space: LabeledSpace) -> Scenario {
        Scenario { space, parties: self.parties.clone() }
    }

    /// Same space with parties restricted to the bitmask.
    pub fn restrict(&self, set: u32) -> Scenario {
        let parties = self
            .parties
            .iter()
            .enumerate()
            .filter(|(i, _)| set & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect();
        Scenario { space: self.space.clone(), parties }
    }
}

/// Iterates the nonempty subsets of `set`.
pub fn subsets(set: u32) -> impl Iterator<Item = u32> {
    let mut sub = set;
    let mut done = set == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
            return None;
        }
        sub = (sub - 1) & set;
        Some(cur)
    })
}
