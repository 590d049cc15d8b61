//! Re-attribution of a party's systems to another party's ancillary input.

use super::operator::{ProcessOperator, C64};
use super::system::{offsets, LabeledSpace, SystemLabel};
use crate::error::{Error, Result};

/// `W^{from → to} = Σ_ij Tr_from[(|i⟩⟨j| ⊗ 𝟙) W] ⊗ |j⟩⟨i|^to`.
///
/// The composite basis `|i⟩` of `from` follows the listed order, first
/// label most significant.
pub fn relabel_teleport(
    w: &ProcessOperator,
    from: &[SystemLabel],
    to: &SystemLabel,
) -> Result<ProcessOperator> {
    let d: usize = from.iter().map(|s| s.dim).product();
    if to.dim != d {
        return Err(Error::DimensionMismatch(format!(
            "target {to} has dimension {}, source systems have {d}",
            to.dim
        )));
    }
    let space = w.space();
    if space.contains(to) && !from.iter().any(|f| f.same_system(to)) {
        return Err(Error::LabelCollision(to.to_string()));
    }
    let rest = space.without(from);
    let mut order = rest.systems().to_vec();
    order.extend_from_slice(from);
    let dims: Vec<usize> = order.iter().map(|s| s.dim).collect();
    let strides = super::system::strides_of(&dims);
    // Positions of `from` inside `order`, in the listed order.
    let from_pos: Vec<usize> = (rest.len()..order.len()).collect();
    let rest_pos: Vec<usize> = (0..rest.len()).collect();
    for (p, f) in from_pos.iter().zip(from) {
        space.position(f)?;
        debug_assert!(order[*p].same_system(f));
    }
    let data = w.data_in_order(&order)?;
    let n = w.dim();
    let off_i = offsets(&dims, &strides, &from_pos);
    let off_r = offsets(&dims, &strides, &rest_pos);
    let m = off_r.len();

    let mut target_order = rest.systems().to_vec();
    target_order.push(to.clone());
    let nt = m * d;
    let mut out = vec![C64::new(0.0, 0.0); nt * nt];
    for (i, &oi) in off_i.iter().enumerate() {
        for (j, &oj) in off_i.iter().enumerate() {
            // Tr_from[(|i⟩⟨j| ⊗ 𝟙) W] is the block ⟨j| W |i⟩ on `from`,
            // placed at |j⟩⟨i| on the target.
            for (a, &ra) in off_r.iter().enumerate() {
                for (b, &cb) in off_r.iter().enumerate() {
                    let v = data[(ra + oj) * n + cb + oi];
                    out[(a * d + j) * nt + b * d + i] = v;
                }
            }
        }
    }
    ProcessOperator::from_ordered(target_order, out)
}

/// Inverse of [`relabel_teleport`]: spreads `from` back over `to`.
pub fn relabel_back(
    w: &ProcessOperator,
    from: &SystemLabel,
    to: &[SystemLabel],
) -> Result<ProcessOperator> {
    let d: usize = to.iter().map(|s| s.dim).product();
    if from.dim != d {
        return Err(Error::DimensionMismatch(format!(
            "{from} has dimension {}, targets have {d}",
            from.dim
        )));
    }
    let rest = w.space().without(std::slice::from_ref(from));
    let mut order = rest.systems().to_vec();
    order.push(from.clone());
    let data = w.data_in_order(&order)?;
    let mut target = rest.systems().to_vec();
    target.extend_from_slice(to);
    LabeledSpace::new(target.clone())?;
    ProcessOperator::from_ordered(target, data)
}
