//! Exact projection onto `{x : A x = b}` for block-separable `A`.
//!
//! Columns are grouped into connected components of the row/column
//! incidence graph; components with the same local matrix share one SVD and
//! are projected together with dense matrix products.

use std::collections::HashMap;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};

struct Group {
    k: usize,
    m: usize,
    /// Global column of local column `i` in component `c`: `cols[c * k + i]`.
    cols: Vec<usize>,
    rows: Vec<usize>,
    a: Mat<f64>,
    /// Orthonormal basis of the row space of `a` (k × rank).
    v: Mat<f64>,
    /// `(Aᵀ)⁺` (m × k).
    at_pinv: Mat<f64>,
    /// `A⁺ b` per component (k × M).
    x0: Mat<f64>,
}

impl Group {
    fn n_comp(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.cols.len() / self.k
        }
    }

    fn gather(&self, src: &[f64]) -> Mat<f64> {
        let k = self.k;
        Mat::from_fn(k, self.n_comp(), |i, c| src[self.cols[c * k + i]])
    }

    fn scatter(&self, m: &Mat<f64>, dst: &mut [f64]) {
        let k = self.k;
        for c in 0..self.n_comp() {
            for i in 0..k {
                dst[self.cols[c * k + i]] = m[(i, c)];
            }
        }
    }
}

pub(crate) struct AffineProjector {
    groups: Vec<Group>,
    n_cols: usize,
    n_rows: usize,
    /// Rows without any column; nonzero right-hand side makes `A x = b`
    /// inconsistent.
    empty_rows: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl AffineProjector {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        rhs: &[f64],
    ) -> Result<Self> {
        let mut row_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            row_cols[i].push((j, v));
        }
        let mut parent: Vec<usize> = (0..n_cols).collect();
        for row in &row_cols {
            if let Some(&(first, _)) = row.first() {
                let a = find(&mut parent, first);
                for &(j, _) in &row[1..] {
                    let b = find(&mut parent, j);
                    if a != b {
                        parent[b] = a;
                    }
                }
            }
        }
        let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
        let mut comp_cols: Vec<Vec<usize>> = Vec::new();
        let mut comp_rows: Vec<Vec<usize>> = Vec::new();
        let mut constrained = vec![false; n_cols];
        for row in &row_cols {
            for &(j, _) in row {
                constrained[j] = true;
            }
        }
        for j in 0..n_cols {
            if !constrained[j] {
                continue;
            }
            let r = find(&mut parent, j);
            let c = *comp_of_root.entry(r).or_insert_with(|| {
                comp_cols.push(Vec::new());
                comp_rows.push(Vec::new());
                comp_cols.len() - 1
            });
            comp_cols[c].push(j);
        }
        let mut empty_rows = Vec::new();
        for (i, row) in row_cols.iter().enumerate() {
            match row.first() {
                Some(&(j, _)) => {
                    let c = comp_of_root[&find(&mut parent, j)];
                    comp_rows[c].push(i);
                }
                None => empty_rows.push(i),
            }
        }

        // Group components by their local matrix.
        type Key = (usize, usize, Vec<(usize, usize, u64)>);
        let mut group_of: HashMap<Key, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<Key> = Vec::new();
        for c in 0..comp_cols.len() {
            let cols = &comp_cols[c];
            let local: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, &j)| (j, i)).collect();
            let mut entries = Vec::new();
            for (li, &i) in comp_rows[c].iter().enumerate() {
                for &(j, v) in &row_cols[i] {
                    entries.push((li, local[&j], v.to_bits()));
                }
            }
            entries.sort_unstable();
            let key = (comp_rows[c].len(), cols.len(), entries);
            let g = match group_of.get(&key) {
                Some(&g) => g,
                None => {
                    group_of.insert(key.clone(), members.len());
                    keys.push(key);
                    members.push(Vec::new());
                    members.len() - 1
                }
            };
            members[g].push(c);
        }

        let mut groups = Vec::with_capacity(members.len());
        for (g, comps) in members.iter().enumerate() {
            let (m, k, entries) = &keys[g];
            let (m, k) = (*m, *k);
            let mut a = Mat::<f64>::zeros(m, k);
            for &(i, j, bits) in entries {
                a[(i, j)] += f64::from_bits(bits);
            }
            let svd = a
                .thin_svd()
                .map_err(|e| Error::NumericalBreakdown(format!("constraint SVD failed: {e:?}")))?;
            let s = svd.S().column_vector();
            let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
            if !smax.is_finite() {
                return Err(Error::NumericalBreakdown("non-finite singular value".into()));
            }
            let cutoff = smax * (m.max(k) as f64) * 1e-13;
            let keep: Vec<usize> = (0..s.nrows()).filter(|&i| s[i] > cutoff).collect();
            let (u, vfull) = (svd.U(), svd.V());
            let v = Mat::from_fn(k, keep.len(), |i, r| vfull[(i, keep[r])]);
            let a_pinv =
                Mat::from_fn(k, m, |i, j| keep.iter().map(|&r| vfull[(i, r)] * u[(j, r)] / s[r]).sum::<f64>());
            let at_pinv = a_pinv.transpose().to_owned();
            let mut cols = Vec::with_capacity(k * comps.len());
            let mut rows = Vec::with_capacity(m * comps.len());
            for &c in comps {
                cols.extend_from_slice(&comp_cols[c]);
                rows.extend_from_slice(&comp_rows[c]);
            }
            let bmat = Mat::from_fn(m, comps.len(), |i, c| rhs[rows[c * m + i]]);
            let x0 = &a_pinv * &bmat;
            groups.push(Group { k, m, cols, rows, a, v, at_pinv, x0 });
        }
        Ok(AffineProjector { groups, n_cols, n_rows, empty_rows })
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_components(&self) -> usize {
        self.groups.iter().map(|g| g.n_comp()).sum()
    }

    /// `out = Π(v)`; columns outside every row are copied through.
    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_cols);
        out.copy_from_slice(v);
        for g in &self.groups {
            let mut x = g.gather(v);
            let mut t = Mat::<f64>::zeros(g.v.ncols(), x.ncols());
            matmul(t.as_mut(), Accum::Replace, g.v.transpose(), x.as_ref(), 1.0, Par::Seq);
            matmul(x.as_mut(), Accum::Add, g.v.as_ref(), t.as_ref(), -1.0, Par::Seq);
            let x = &x + &g.x0;
            g.scatter(&x, out);
        }
    }

    /// `A x` as a row vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for g in &self.groups {
            let xm = g.gather(x);
            let ax = &g.a * &xm;
            for c in 0..g.n_comp() {
                for i in 0..g.m {
                    out[g.rows[c * g.m + i]] = ax[(i, c)];
                }
            }
        }
        out
    }

    /// Least-squares multipliers `y = (Aᵀ)⁺ w` and the residual `w − Aᵀ y`.
    pub fn dual(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; self.n_rows];
        let mut res = w.to_vec();
        for g in &self.groups {
            let wm = g.gather(w);
            let ym = &g.at_pinv * &wm;
            let aty = g.a.transpose() * &ym;
            for c in 0..g.n_comp() {
                for i in 0..g.m {
                    y[g.rows[c * g.m + i]] = ym[(i, c)];
                }
                for i in 0..g.k {
                    let j = g.cols[c * g.k + i];
                    res[j] = w[j] - aty[(i, c)];
                }
            }
        }
        (y, res)
    }

    pub fn empty_rows(&self) -> &[usize] {
        &self.empty_rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
        v.fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Projects a random point and returns the constraint violation and the
    /// part of `v − Πv` outside the row space.
    fn defects(p: &AffineProjector, b: &[f64], n: usize, seed: u64) -> (f64, f64) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; n];
        p.project(&v, &mut x);
        let ax = p.apply(&x);
        let d: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
        let (_, res) = p.dual(&d);
        (max_abs(ax.iter().zip(b).map(|(a, b)| a - b)), max_abs(res.into_iter()))
    }

    #[test]
    fn projection_satisfies_constraints() {
        // x0 + x1 = 2, x1 - x2 = 0, x3 free; two copies of the pattern.
        let t = vec![
            (0, 0, 1.0),
            (0, 1, 1.0),
            (1, 1, 1.0),
            (1, 2, -1.0),
            (2, 4, 1.0),
            (2, 5, 1.0),
            (3, 5, 1.0),
            (3, 6, -1.0),
        ];
        let b = vec![2.0, 0.0, 4.0, 0.0];
        let p = AffineProjector::new(4, 7, &t, &b).unwrap();
        assert_eq!(p.n_groups(), 1);
        assert_eq!(p.n_components(), 2);
        let v = vec![0.3, -1.0, 2.0, 9.0, 0.0, 0.0, 0.0];
        let mut x = vec![0.0; 7];
        p.project(&v, &mut x);
        let ax = p.apply(&x);
        for i in 0..4 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
        assert_eq!(x[3], 9.0);
        let mut x2 = vec![0.0; 7];
        p.project(&x, &mut x2);
        for i in 0..7 {
            assert!((x[i] - x2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_blocks_of_any_shape_and_rank() {
        for (m, k, rank) in [(3, 7, 3), (3, 7, 2), (7, 3, 3), (7, 3, 2), (5, 5, 3), (12, 40, 9), (40, 12, 9)] {
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64((m * 100 + k) as u64);
            let l = Mat::from_fn(m, rank, |_, _| r.gen_range(-1.0..1.0));
            let rr = Mat::from_fn(rank, k, |_, _| r.gen_range(-1.0..1.0));
            let a = &l * &rr;
            let xs: Vec<f64> = (0..k).map(|_| r.gen_range(-1.0..1.0)).collect();
            let t: Vec<_> = (0..m).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| (i, j, a[(i, j)])).collect();
            let b: Vec<f64> = (0..m).map(|i| (0..k).map(|j| a[(i, j)] * xs[j]).sum()).collect();
            let p = AffineProjector::new(m, k, &t, &b).unwrap();
            let (feas, normal) = defects(&p, &b, k, 1);
            assert!(feas < 1e-10 && normal < 1e-10, "{m}x{k} rank {rank}: {feas:e} {normal:e}");
        }
    }

    #[test]
    fn redundant_sum_row() {
        // The first row is the sum of a partition of the columns into the
        // other rows, so the block has exactly one redundant row.
        let parts: [&[usize]; 10] = [&[0], &[1, 2], &[3], &[4], &[5, 6], &[7], &[8, 9, 10, 11, 12, 13], &[14], &[15], &[16, 17]];
        let mut t: Vec<_> = (0..18).map(|j| (0, j, 1.0)).collect();
        for (i, part) in parts.iter().enumerate() {
            t.extend(part.iter().map(|&j| (i + 1, j, 1.0)));
        }
        let mut b: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        b[0] = b[1..].iter().sum();
        let p = AffineProjector::new(11, 18, &t, &b).unwrap();
        let (feas, normal) = defects(&p, &b, 18, 2);
        assert!(feas < 1e-12 && normal < 1e-12, "{feas:e} {normal:e}");
    }
}
