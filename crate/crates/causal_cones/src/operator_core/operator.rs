use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::linalg;
use super::system::{offsets, LabeledSpace, SystemLabel};
use crate::error::{Error, Result};

pub type C64 = Complex64;

const ASYMMETRY_WARN: f64 = 1e-9;

/// Single-qubit Pauli operators (and the identity).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Vec<C64> {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Pauli::I => vec![o, z, z, o],
            Pauli::X => vec![z, o, o, z],
            Pauli::Y => vec![z, -i, i, z],
            Pauli::Z => vec![o, z, z, -o],
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            '1' | 'I' | 'i' => Some(Pauli::I),
            'x' | 'X' => Some(Pauli::X),
            'y' | 'Y' => Some(Pauli::Y),
            'z' | 'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Hermitian operator on a labeled tensor-product space, stored row-major
/// in canonical system order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessOperator {
    space: LabeledSpace,
    data: Vec<C64>,
}

impl ProcessOperator {
    /// Builds an operator and symmetrizes it to (M + M†)/2.
    pub fn new(space: LabeledSpace, data: Vec<C64>) -> Result<Self> {
        let n = space.total_dim();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} operator",
                data.len()
            )));
        }
        let asym = max_asymmetry(&data, n);
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if asym > ASYMMETRY_WARN * scale {
            log::warn!("symmetrizing operator with asymmetry {asym:e}");
        }
        Ok(ProcessOperator { space, data: hermitize(data, n) })
    }

    /// Like [`ProcessOperator::new`] but rejects matrices whose asymmetry
    /// exceeds `rel_tol` times the largest entry.
    pub fn new_checked(space: LabeledSpace, data: Vec<C64>, rel_tol: f64) -> Result<Self> {
        let n = space.total_dim();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} operator",
                data.len()
            )));
        }
        let asym = max_asymmetry(&data, n);
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if asym > rel_tol * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(ProcessOperator { space, data: hermitize(data, n) })
    }

    /// Builds from a matrix whose rows/columns follow `systems` in the
    /// given (possibly non-canonical) order.
    pub fn from_ordered(systems: Vec<SystemLabel>, data: Vec<C64>) -> Result<Self> {
        let space = LabeledSpace::new(systems.clone())?;
        let data = permute_data(&data, &systems, space.systems())?;
        Self::new(space, data)
    }

    /// Tensor product of local matrices, one per listed system.
    pub fn product(factors: Vec<(SystemLabel, Vec<C64>)>) -> Result<Self> {
        let mut data = vec![C64::new(1.0, 0.0)];
        let mut n = 1;
        for (label, m) in &factors {
            if m.len() != label.dim * label.dim {
                return Err(Error::DimensionMismatch(format!("local matrix for {label}")));
            }
            data = kron(&data, n, m, label.dim);
            n *= label.dim;
        }
        Self::from_ordered(factors.into_iter().map(|(l, _)| l).collect(), data)
    }

    /// Pauli string on qubit systems, e.g. `pauli(&systems, "zx1")`.
    pub fn pauli(systems: &[SystemLabel], letters: &str) -> Result<Self> {
        let chars: Vec<char> = letters.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.len() != systems.len() {
            return Err(Error::BadParams(format!(
                "Pauli string '{letters}' has {} letters for {} systems",
                chars.len(),
                systems.len()
            )));
        }
        let mut factors = Vec::with_capacity(chars.len());
        for (label, c) in systems.iter().zip(chars) {
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::BadParams(format!("bad Pauli letter '{c}'")))?;
            if label.dim == 1 {
                if p != Pauli::I {
                    return Err(Error::BadParams(format!("non-identity on trivial {label}")));
                }
                factors.push((label.clone(), vec![C64::new(1.0, 0.0)]));
            } else if label.dim == 2 {
                factors.push((label.clone(), p.matrix()));
            } else {
                return Err(Error::UnsupportedDimension(format!("Pauli letter on {label}")));
            }
        }
        Self::product(factors)
    }

    pub fn zeros(space: LabeledSpace) -> Self {
        let n = space.total_dim();
        ProcessOperator { space, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(space: LabeledSpace) -> Self {
        let n = space.total_dim();
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(1.0, 0.0);
        }
        ProcessOperator { space, data }
    }

    /// Trusted constructor for data already Hermitian and canonical.
    pub(crate) fn from_raw(space: LabeledSpace, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), space.total_dim() * space.total_dim());
        ProcessOperator { space, data }
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i].re).sum()
    }

    /// Re Tr[A† B].
    pub fn hs_inner(&self, other: &ProcessOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ProcessOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn same_space(&self, other: &ProcessOperator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> ProcessOperator {
        ProcessOperator {
            space: self.space.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &ProcessOperator) -> Result<ProcessOperator> {
        self.same_space(other)?;
        Ok(ProcessOperator {
            space: self.space.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        })
    }

    /// Matrix product (not Hermitian in general, so returned as raw data).
    pub fn matmul_data(&self, other: &ProcessOperator) -> Result<Vec<C64>> {
        self.same_space(other)?;
        Ok(linalg::matmul(&self.data, &other.data, self.dim()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.data, self.dim())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Kronecker product, re-permuted to canonical order.
    pub fn tensor(&self, other: &ProcessOperator) -> Result<ProcessOperator> {
        if let Some(s) = self.space.overlaps(&other.space) {
            return Err(Error::LabelCollision(s.to_string()));
        }
        let data = kron(&self.data, self.dim(), &other.data, other.dim());
        let mut systems = self.space.systems().to_vec();
        systems.extend_from_slice(other.space.systems());
        let space = LabeledSpace::new(systems.clone())?;
        let data = permute_data(&data, &systems, space.systems())?;
        Ok(ProcessOperator { space, data })
    }

    /// self ⊗ 𝟙 on the listed systems.
    pub fn extend_identity(&self, labels: &[SystemLabel]) -> Result<ProcessOperator> {
        let space = LabeledSpace::new(labels.to_vec())?;
        self.tensor(&ProcessOperator::identity(space))
    }

    /// Partial trace over the listed systems.
    pub fn partial_trace(&self, labels: &[SystemLabel]) -> Result<ProcessOperator> {
        let traced = self.space.positions(labels)?;
        let dims = self.space.dims();
        let strides = self.space.strides();
        let kept: Vec<usize> = (0..dims.len()).filter(|p| !traced.contains(p)).collect();
        let off_k = offsets(&dims, &strides, &kept);
        let off_t = offsets(&dims, &strides, &traced);
        let n = self.dim();
        let m = off_k.len();
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for (a, &ra) in off_k.iter().enumerate() {
            for (b, &cb) in off_k.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &t in &off_t {
                    acc += self.data[(ra + t) * n + cb + t];
                }
                out[a * m + b] = acc;
            }
        }
        let space = self.space.without(labels);
        Ok(ProcessOperator { space, data: out })
    }

    /// Matrix entries with rows/columns in the given system order.
    pub fn data_in_order(&self, order: &[SystemLabel]) -> Result<Vec<C64>> {
        permute_data(&self.data, self.space.systems(), order)
    }
}

impl Add for &ProcessOperator {
    type Output = ProcessOperator;
    fn add(self, rhs: &ProcessOperator) -> ProcessOperator {
        self.axpy(1.0, rhs).expect("operator spaces differ")
    }
}

impl Sub for &ProcessOperator {
    type Output = ProcessOperator;
    fn sub(self, rhs: &ProcessOperator) -> ProcessOperator {
        self.axpy(-1.0, rhs).expect("operator spaces differ")
    }
}

impl Mul<f64> for &ProcessOperator {
    type Output = ProcessOperator;
    fn mul(self, s: f64) -> ProcessOperator {
        self.scaled(s)
    }
}

impl Neg for &ProcessOperator {
    type Output = ProcessOperator;
    fn neg(self) -> ProcessOperator {
        self.scaled(-1.0)
    }
}

pub fn kron(a: &[C64], na: usize, b: &[C64], nb: usize) -> Vec<C64> {
    let n = na * nb;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for ia in 0..na {
        for ja in 0..na {
            let x = a[ia * na + ja];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..nb {
                let row = (ia * nb + ib) * n + ja * nb;
                for jb in 0..nb {
                    out[row + jb] = x * b[ib * nb + jb];
                }
            }
        }
    }
    out
}

/// Re-orders the tensor factors of a square matrix from `from` to `to`.
pub fn permute_data(data: &[C64], from: &[SystemLabel], to: &[SystemLabel]) -> Result<Vec<C64>> {
    if from.len() != to.len() {
        return Err(Error::SpaceMismatch("system lists differ in length".into()));
    }
    let perm = to
        .iter()
        .map(|t| {
            from.iter()
                .position(|f| f.same_system(t) && f.dim == t.dim)
                .ok_or_else(|| Error::UnknownSystem(t.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = from.iter().map(|s| s.dim).collect();
    let n: usize = dims.iter().product();
    if data.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{} entries, expected {}", data.len(), n * n)));
    }
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok(data.to_vec());
    }
    let strides = super::system::strides_of(&dims);
    let map = offsets(&dims, &strides, &perm);
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for (a, &ra) in map.iter().enumerate() {
        for (b, &cb) in map.iter().enumerate() {
            out[a * n + b] = data[ra * n + cb];
        }
    }
    Ok(out)
}

pub fn max_asymmetry(data: &[C64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((data[i * n + j] - data[j * n + i].conj()).norm());
        }
    }
    worst
}

fn hermitize(mut data: Vec<C64>, n: usize) -> Vec<C64> {
    for i in 0..n {
        data[i * n + i] = C64::new(data[i * n + i].re, 0.0);
        for j in i + 1..n {
            let avg = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
            data[i * n + j] = avg;
            data[j * n + i] = avg.conj();
        }
    }
    data
}
