//! Dense Hermitian linear algebra on row-major `Complex64` buffers, backed by faer.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

fn to_faer(data: &[C64], n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| data[i * n + j])
}

/// Eigen-decomposition as (ascending values, eigenvector matrix). A failed
/// decomposition yields NaN values so callers see a non-finite result.
fn decompose(data: &[C64], n: usize) -> (Vec<f64>, Mat<C64>) {
    match to_faer(data, n).self_adjoint_eigen(Side::Lower) {
        Ok(evd) => {
            let s = evd.S().column_vector();
            ((0..n).map(|k| s[k].re).collect(), evd.U().to_owned())
        }
        Err(_) => (vec![f64::NAN; n], Mat::zeros(n, n)),
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(data: &[C64], n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut vals = to_faer(data, n).self_adjoint_eigenvalues(Side::Lower).unwrap_or_else(|_| vec![f64::NAN; n]);
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Eigen-decomposition; eigenvectors are returned column-major
/// (`vecs[k * n + i]` is component `i` of eigenvector `k`).
pub fn eigh(data: &[C64], n: usize) -> (Vec<f64>, Vec<C64>) {
    let (vals, u) = decompose(data, n);
    let mut vecs = vec![C64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for i in 0..n {
            vecs[k * n + i] = u[(i, k)];
        }
    }
    (vals, vecs)
}

/// Euclidean (Frobenius) projection onto the PSD cone, in place.
/// Returns the most negative eigenvalue that was clamped (0 if none).
pub fn project_psd(data: &mut [C64], n: usize) -> f64 {
    if n == 1 {
        let v = data[0].re;
        data[0] = C64::new(v.max(0.0), 0.0);
        return v.min(0.0);
    }
    let (vals, u) = decompose(data, n);
    if vals.iter().any(|v| !v.is_finite()) {
        data.iter_mut().for_each(|z| *z = C64::new(f64::NAN, 0.0));
        return f64::NAN;
    }
    let most_negative = vals.iter().cloned().fold(0.0, f64::min);
    let npos = vals.iter().filter(|&&v| v > 0.0).count();
    let nneg = n - npos;
    // Rebuild from whichever side has fewer eigenvectors.
    let (keep_positive, count) = if npos <= nneg { (true, npos) } else { (false, nneg) };
    if keep_positive && count == 0 {
        data.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        return most_negative;
    }
    if !keep_positive && count == 0 {
        return most_negative;
    }
    let mut v = Mat::<C64>::zeros(n, count);
    let mut col = 0;
    for k in 0..n {
        let take = if keep_positive { vals[k] > 0.0 } else { vals[k] <= 0.0 };
        if take {
            let w = vals[k].abs().sqrt();
            for i in 0..n {
                v[(i, col)] = u[(i, k)] * w;
            }
            col += 1;
        }
    }
    let vvh = &v * v.adjoint();
    if keep_positive {
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = vvh[(i, j)];
            }
        }
    } else {
        // A_+ = A - A_- and A_- = -V V†.
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += vvh[(i, j)];
            }
        }
    }
    for i in 0..n {
        data[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
            data[i * n + j] = avg;
            data[j * n + i] = avg.conj();
        }
    }
    most_negative
}

pub fn matmul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let fa = to_faer(a, n);
    let fb = to_faer(b, n);
    let p = &fa * &fb;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = p[(i, j)];
        }
    }
    out
}
