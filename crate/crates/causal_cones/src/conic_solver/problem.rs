use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Hermitian PSD block, parametrized by its real coordinates in the
/// orthonormal product basis over `dims` (generalized Gell-Mann per factor,
/// `σ/√2` for qubits). The block has `size²` coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub dims: Vec<usize>,
    pub label: String,
}

impl PsdBlock {
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_coords(&self) -> usize {
        self.size() * self.size()
    }
}

/// `min c·x  s.t.  A x = b,  x ∈ PSD blocks × free scalars`.
///
/// Columns are laid out block by block, followed by the free scalars.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SDPProblem {
    pub psd_blocks: Vec<PsdBlock>,
    pub free_scalars: usize,
    pub n_rows: usize,
    /// Sparse equality map as `(row, column, value)` triplets.
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    /// Sparse objective as `(column, value)`.
    pub objective: Vec<(usize, f64)>,
}

impl SDPProblem {
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.psd_blocks.len() + 1);
        let mut acc = 0;
        for b in &self.psd_blocks {
            off.push(acc);
            acc += b.n_coords();
        }
        off.push(acc);
        off
    }

    pub fn n_psd_coords(&self) -> usize {
        self.psd_blocks.iter().map(|b| b.n_coords()).sum()
    }

    pub fn n_cols(&self) -> usize {
        self.n_psd_coords() + self.free_scalars
    }

    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_cols()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_cols();
        if n == 0 {
            return Err(Error::BadParams("problem has no variables".into()));
        }
        if self.rhs.len() != self.n_rows {
            return Err(Error::BadParams(format!(
                "{} right-hand sides for {} rows",
                self.rhs.len(),
                self.n_rows
            )));
        }
        for &(i, j, v) in &self.triplets {
            if i >= self.n_rows || j >= n || !v.is_finite() {
                return Err(Error::BadParams(format!("bad triplet ({i}, {j}, {v})")));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(Error::BadParams("non-finite right-hand side".into()));
        }
        for &(j, v) in &self.objective {
            if j >= n || !v.is_finite() {
                return Err(Error::BadParams(format!("bad objective entry ({j}, {v})")));
            }
        }
        Ok(())
    }

    /// Sums repeated entries and drops empty rows and rows identical to an
    /// earlier one. Returns the new index of every old row.
    pub fn normalize_rows(&mut self) -> Vec<Option<usize>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_rows];
        for &(i, j, v) in &self.triplets {
            rows[i].push((j, v));
        }
        let mut seen: HashMap<(Vec<(usize, u64)>, u64), usize> = HashMap::new();
        let mut map = vec![None; self.n_rows];
        let mut triplets = Vec::with_capacity(self.triplets.len());
        let mut rhs = Vec::with_capacity(self.n_rows);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            let key = (
                merged.iter().map(|&(j, v)| (j, v.to_bits())).collect::<Vec<_>>(),
                self.rhs[i].to_bits(),
            );
            if merged.is_empty() && self.rhs[i] == 0.0 {
                continue;
            }
            if let Some(&r) = seen.get(&key) {
                map[i] = Some(r);
                continue;
            }
            let r = rhs.len();
            seen.insert(key, r);
            map[i] = Some(r);
            rhs.push(self.rhs[i]);
            triplets.extend(merged.into_iter().map(|(j, v)| (r, j, v)));
        }
        self.n_rows = rhs.len();
        self.rhs = rhs;
        self.triplets = triplets;
        map
    }
}
