//! Direct characterization of valid and ordered process matrices by the
//! basis strings they may contain.

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::operator_core::basis::string_digits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubspaceKind {
    Valid,
    /// `first ≺ second`, the two sets covering all parties.
    Order { first: Vec<String>, second: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Restriction {
    Identity,
    /// Non-identity on some input, identity on every output.
    InputOnly,
    Other,
}

/// Predicate over basis strings of a scenario's operator space.
#[derive(Clone, Debug)]
pub struct AllowedTerms {
    dims: Vec<usize>,
    /// Per party: (input positions, output positions).
    parties: Vec<(Vec<usize>, Vec<usize>)>,
    kind: (u32, u32),
    valid_only: bool,
}

pub fn allowed_terms(kind: &SubspaceKind, scn: &Scenario) -> Result<AllowedTerms> {
    let space = scn.space();
    let parties = scn
        .parties()
        .iter()
        .map(|p| Ok((space.positions(&p.inputs)?, space.positions(&p.outputs)?)))
        .collect::<Result<Vec<_>>>()?;
    let (kind, valid_only) = match kind {
        SubspaceKind::Valid => ((scn.all_parties(), 0), true),
        SubspaceKind::Order { first, second } => {
            let f: Vec<&str> = first.iter().map(|s| s.as_str()).collect();
            let s: Vec<&str> = second.iter().map(|s| s.as_str()).collect();
            let (k1, k2) = (scn.mask_of(&f)?, scn.mask_of(&s)?);
            if k1 & k2 != 0 {
                return Err(Error::OverlappingBlocks(format!("{first:?} / {second:?}")));
            }
            if k1 | k2 != scn.all_parties() {
                return Err(Error::BadParams("the two sets must cover all parties".into()));
            }
            ((k1, k2), false)
        }
    };
    Ok(AllowedTerms { dims: space.dims(), parties, kind, valid_only })
}

impl AllowedTerms {
    fn restriction(&self, digits: &[usize], party: usize) -> Restriction {
        let (ins, outs) = &self.parties[party];
        let in_nontrivial = ins.iter().any(|&p| digits[p] != 0);
        let out_nontrivial = outs.iter().any(|&p| digits[p] != 0);
        match (in_nontrivial, out_nontrivial) {
            (false, false) => Restriction::Identity,
            (true, false) => Restriction::InputOnly,
            _ => Restriction::Other,
        }
    }

    /// Allowed for a process of the parties in `set`: identity on all of
    /// them, or input-only on at least one.
    fn allowed_for(&self, r: &[Restriction], set: u32) -> bool {
        let members = (0..r.len()).filter(|i| set & (1 << i) != 0);
        let mut all_identity = true;
        for i in members {
            match r[i] {
                Restriction::InputOnly => return true,
                Restriction::Other => all_identity = false,
                Restriction::Identity => {}
            }
        }
        all_identity
    }

    pub fn is_allowed(&self, string: usize) -> bool {
        let digits = string_digits(&self.dims, string);
        let r: Vec<Restriction> =
            (0..self.parties.len()).map(|i| self.restriction(&digits, i)).collect();
        if self.valid_only {
            return self.allowed_for(&r, self.kind.0);
        }
        let (k1, k2) = self.kind;
        if !self.allowed_for(&r, k2) {
            return false;
        }
        let k2_identity = (0..r.len()).all(|i| k2 & (1 << i) == 0 || r[i] == Restriction::Identity);
        !k2_identity || self.allowed_for(&r, k1)
    }

    pub fn mask(&self) -> Vec<bool> {
        let n: usize = self.dims.iter().product();
        (0..n * n).map(|s| self.is_allowed(s)).collect()
    }
}
