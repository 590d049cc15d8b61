use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::named::white_noise;
use crate::causal_subspaces::{validity_subspace, Scenario};
use crate::error::{Error, Result};
use crate::operator_core::{ProcessOperator, SystemLabel, C64};

/// Ginibre-type PSD seed `G G†`.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let g: Vec<C64> = (0..n * n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += g[i * n + k] * g[j * n + k].conj();
            }
            out[i * n + j] = acc;
            out[j * n + i] = acc.conj();
        }
    }
    out
}

/// Average of `w` over all permutations of the listed parties, which
/// must have identical system structure.
pub fn symmetrize_parties(w: &ProcessOperator, parties: &[&str]) -> Result<ProcessOperator> {
    let systems = w.space().systems().to_vec();
    let shape = |p: &str| -> Vec<(crate::operator_core::Role, String, usize)> {
        systems.iter().filter(|s| s.party == p).map(|s| (s.role, s.tag.clone(), s.dim)).collect()
    };
    let reference = shape(parties[0]);
    for p in parties {
        if shape(p) != reference || reference.is_empty() {
            return Err(Error::BadParams(format!("party {p} cannot be permuted with {}", parties[0])));
        }
    }
    let perms = permutations(parties.len());
    let mut acc = ProcessOperator::zeros(w.space().clone());
    for perm in &perms {
        let renamed: Vec<SystemLabel> = systems
            .iter()
            .map(|s| match parties.iter().position(|p| *p == s.party) {
                Some(i) => SystemLabel { party: parties[perm[i]].to_string(), ..s.clone() },
                None => s.clone(),
            })
            .collect();
        let moved = ProcessOperator::from_ordered(renamed, w.data().to_vec())?;
        acc = &acc + &moved;
    }
    Ok(acc.scaled(1.0 / perms.len() as f64))
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Random valid process: project a PSD seed onto the valid subspace,
/// normalize, and mix in the least white noise that restores positivity.
pub fn sample_random_process(
    scn: &Scenario,
    seed: u64,
    symmetric: Option<&[&str]>,
) -> Result<ProcessOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scn.space().total_dim();
    let mut x = ProcessOperator::new(scn.space().clone(), random_psd(n, &mut rng))?;
    if let Some(parties) = symmetric {
        x = symmetrize_parties(&x, parties)?;
    }
    let x = validity_subspace(scn)?.project(&x)?;
    let d_out = scn.d_out_total() as f64;
    let x = x.scaled(d_out / x.trace());
    let lam = x.min_eigenvalue();
    if lam >= 0.0 {
        return Ok(x);
    }
    // Smallest p with (1−p)λ + p/d_I ≥ 0; both terms have trace d_O.
    let inv_di = 1.0 / scn.d_in_total() as f64;
    let p = -lam / (inv_di - lam);
    let w = &x.scaled(1.0 - p) + &white_noise(scn).scaled(p);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
    }
}
