//! Orthonormal Hilbert–Schmidt product basis.
//!
//! Each system of dimension `d` carries `d²` Hermitian basis matrices
//! `B_0 = 𝟙/√d, B_1, …` with `Tr[B_μ B_ν] = δ_μν`: the Pauli matrices
//! (order 𝟙, x, y, z) over √2 for qubits, generalized Gell-Mann matrices
//! otherwise (symmetric, antisymmetric, then diagonal). A basis string is
//! one index per system; string indices are mixed-radix with the first
//! system most significant. Coordinates of a Hermitian operator in this
//! basis are real and the map is an isometry for the HS inner product.

use std::collections::BTreeMap;

use super::operator::{ProcessOperator, C64};
use super::system::{offsets, strides_of};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The `d²` orthonormal local basis matrices (row-major `d×d`).
pub fn local_basis(d: usize) -> Vec<Vec<C64>> {
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(d * d);
    let mut id = vec![zero; d * d];
    for i in 0..d {
        id[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    out.push(id);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = vec![zero; d * d];
            m[j * d + k] = C64::new(SQRT_HALF, 0.0);
            m[k * d + j] = C64::new(SQRT_HALF, 0.0);
            out.push(m);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = vec![zero; d * d];
            m[j * d + k] = C64::new(0.0, -SQRT_HALF);
            m[k * d + j] = C64::new(0.0, SQRT_HALF);
            out.push(m);
        }
    }
    for l in 1..d {
        let mut m = vec![zero; d * d];
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        for j in 0..l {
            m[j * d + j] = C64::new(norm, 0.0);
        }
        m[l * d + l] = C64::new(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// Precomputed coordinate transform for one list of system dimensions.
#[derive(Clone, Debug)]
pub struct HsTransform {
    dims: Vec<usize>,
    n: usize,
    /// Flat matrix position holding the coefficient of each string.
    string_pos: Vec<usize>,
    /// Per system: flat offsets of all index combos of the other systems.
    rest_offsets: Vec<Vec<usize>>,
    strides: Vec<usize>,
    local: Vec<Vec<Vec<C64>>>,
}

impl HsTransform {
    pub fn new(dims: &[usize]) -> Self {
        let q = dims.len();
        let n: usize = dims.iter().product();
        let strides = strides_of(dims);
        let sq: Vec<usize> = dims.iter().map(|d| d * d).collect();
        let nstr = n * n;
        let mut string_pos = vec![0usize; nstr];
        let mut digits = vec![0usize; q];
        for s in 0..nstr {
            let mut rem = s;
            for k in (0..q).rev() {
                digits[k] = rem % sq[k];
                rem /= sq[k];
            }
            let mut row = 0;
            let mut col = 0;
            for k in 0..q {
                row += (digits[k] / dims[k]) * strides[k];
                col += (digits[k] % dims[k]) * strides[k];
            }
            string_pos[s] = row * n + col;
        }
        let rest_offsets = (0..q)
            .map(|k| {
                let others: Vec<usize> = (0..q).filter(|&p| p != k).collect();
                offsets(dims, &strides, &others)
            })
            .collect();
        let local = dims.iter().map(|&d| local_basis(d)).collect();
        HsTransform { dims: dims.to_vec(), n, string_pos, rest_offsets, strides, local }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_strings(&self) -> usize {
        self.n * self.n
    }

    /// Coordinates `c_μ = Tr[B_μ M]` of a Hermitian row-major matrix.
    pub fn to_coords(&self, data: &[C64]) -> Vec<f64> {
        let mut buf = data.to_vec();
        for k in 0..self.dims.len() {
            self.apply_local(&mut buf, k, true);
        }
        self.string_pos.iter().map(|&p| buf[p].re).collect()
    }

    /// Inverse of [`HsTransform::to_coords`].
    pub fn from_coords(&self, coords: &[f64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.n * self.n];
        for (s, &p) in self.string_pos.iter().enumerate() {
            buf[p] = C64::new(coords[s], 0.0);
        }
        for k in 0..self.dims.len() {
            self.apply_local(&mut buf, k, false);
        }
        buf
    }

    fn apply_local(&self, buf: &mut [C64], k: usize, forward: bool) {
        let d = self.dims[k];
        if d == 1 {
            return;
        }
        let n = self.n;
        let s = self.strides[k];
        let rest = &self.rest_offsets[k];
        if d == 2 {
            let h = SQRT_HALF;
            let i = C64::new(0.0, 1.0);
            for &r in rest {
                for &c in rest {
                    let p00 = r * n + c;
                    let p01 = p00 + s;
                    let p10 = p00 + s * n;
                    let p11 = p10 + s;
                    let (a, b, cc, dd) = (buf[p00], buf[p01], buf[p10], buf[p11]);
                    if forward {
                        buf[p00] = (a + dd) * h;
                        buf[p01] = (b + cc) * h;
                        buf[p10] = (b - cc) * i * h;
                        buf[p11] = (a - dd) * h;
                    } else {
                        buf[p00] = (a + dd) * h;
                        buf[p11] = (a - dd) * h;
                        buf[p01] = (b - i * cc) * h;
                        buf[p10] = (b + i * cc) * h;
                    }
                }
            }
            return;
        }
        let basis = &self.local[k];
        let mut v = vec![C64::new(0.0, 0.0); d * d];
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for &r in rest {
            for &c in rest {
                for a in 0..d {
                    for b in 0..d {
                        v[a * d + b] = buf[(r + a * s) * n + c + b * s];
                    }
                }
                if forward {
                    for (mu, bm) in basis.iter().enumerate() {
                        // Tr[B M] = Σ_ab B_ba M_ab
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..d {
                            for b in 0..d {
                                acc += bm[b * d + a] * v[a * d + b];
                            }
                        }
                        out[mu] = acc;
                    }
                } else {
                    for e in out.iter_mut() {
                        *e = C64::new(0.0, 0.0);
                    }
                    for (mu, bm) in basis.iter().enumerate() {
                        let coef = v[mu];
                        for e in 0..d * d {
                            out[e] += coef * bm[e];
                        }
                    }
                }
                for a in 0..d {
                    for b in 0..d {
                        buf[(r + a * s) * n + c + b * s] = out[a * d + b];
                    }
                }
            }
        }
    }

    /// Support bitmask of a string: bit `k` set when system `k` carries a
    /// non-identity basis element.
    pub fn support_of(&self, string: usize) -> u64 {
        string_support(&self.dims, string)
    }
}

pub fn string_support(dims: &[usize], string: usize) -> u64 {
    let mut rem = string;
    let mut mask = 0u64;
    for k in (0..dims.len()).rev() {
        let sq = dims[k] * dims[k];
        if rem % sq != 0 {
            mask |= 1 << k;
        }
        rem /= sq;
    }
    mask
}

/// Per-system basis indices of a string.
pub fn string_digits(dims: &[usize], string: usize) -> Vec<usize> {
    let mut rem = string;
    let mut digits = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        let sq = dims[k] * dims[k];
        digits[k] = rem % sq;
        rem /= sq;
    }
    digits
}

pub fn string_index(dims: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&mu, &d)| acc * d * d + mu)
}

/// Expansion `W = Σ w_μ σ_μ` in the unnormalized string basis
/// (`σ_0 = 𝟙`, `Tr[σ_μ σ_ν] = d δ_μν` per system), keyed by the per-system
/// index list. Coefficients below `cutoff` in magnitude are dropped.
pub fn hs_decompose(w: &ProcessOperator, cutoff: f64) -> BTreeMap<Vec<usize>, f64> {
    let dims = w.space().dims();
    let t = HsTransform::new(&dims);
    let coords = t.to_coords(w.data());
    let scale = 1.0 / (w.dim() as f64).sqrt();
    let mut out = BTreeMap::new();
    for (s, c) in coords.into_iter().enumerate() {
        let v = c * scale;
        if v.abs() > cutoff {
            out.insert(string_digits(&dims, s), v);
        }
    }
    out
}

/// Inverse of [`hs_decompose`].
pub fn hs_resynthesize(
    space: &super::system::LabeledSpace,
    coeffs: &BTreeMap<Vec<usize>, f64>,
) -> ProcessOperator {
    let dims = space.dims();
    let t = HsTransform::new(&dims);
    let n = space.total_dim();
    let mut coords = vec![0.0; n * n];
    let scale = (n as f64).sqrt();
    for (digits, v) in coeffs {
        coords[string_index(&dims, digits)] = v * scale;
    }
    ProcessOperator::from_raw(space.clone(), t.from_coords(&coords))
}

/// Readable name of a string: Pauli letters on qubits, indices otherwise.
pub fn string_name(dims: &[usize], digits: &[usize]) -> String {
    digits
        .iter()
        .zip(dims)
        .map(|(&mu, &d)| match (d, mu) {
            (_, 0) => "1".to_string(),
            (2, 1) => "x".to_string(),
            (2, 2) => "y".to_string(),
            (2, 3) => "z".to_string(),
            _ => format!("[{mu}]"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_prod(a: &[C64], b: &[C64], d: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += a[i * d + j] * b[j * d + i];
            }
        }
        acc
    }

    #[test]
    fn local_basis_is_orthonormal_and_hermitian() {
        for d in 1..5 {
            let b = local_basis(d);
            assert_eq!(b.len(), d * d);
            for (m, bm) in b.iter().enumerate() {
                for i in 0..d {
                    for j in 0..d {
                        assert!((bm[i * d + j] - bm[j * d + i].conj()).norm() < 1e-15);
                    }
                }
                for (n, bn) in b.iter().enumerate() {
                    let t = trace_prod(bm, bn, d);
                    let expect = if m == n { 1.0 } else { 0.0 };
                    assert!((t - C64::new(expect, 0.0)).norm() < 1e-14, "d={d} {m},{n}");
                }
            }
        }
    }

    #[test]
    fn qubit_basis_matches_paulis() {
        use crate::operator_core::operator::Pauli;
        let b = local_basis(2);
        for (k, p) in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].iter().enumerate() {
            let m = p.matrix();
            for e in 0..4 {
                assert!((b[k][e] * 2f64.sqrt() - m[e]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn transform_round_trips_for_mixed_dims() {
        let dims = [2, 3, 1, 2];
        let t = HsTransform::new(&dims);
        let n: usize = dims.iter().product();
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let z = C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64);
                data[i * n + j] = if i == j { C64::new(z.re, 0.0) } else { z };
                data[j * n + i] = data[i * n + j].conj();
            }
        }
        let c = t.to_coords(&data);
        let back = t.from_coords(&c);
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        let norm2: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        let cn2: f64 = c.iter().map(|x| x * x).sum();
        assert!((norm2 - cn2).abs() < 1e-9);
    }
}
