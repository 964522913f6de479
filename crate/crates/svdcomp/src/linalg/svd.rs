//! Singular value decomposition via one-sided Jacobi rotations.
//!
//! One-sided Jacobi orthogonalizes the columns of the input by plane
//! rotations. It is slower than bidiagonalization schemes but delivers high
//! relative accuracy on the tall, strongly graded matrices the calibration
//! pipeline produces, and it is simple enough to audit. The routine always
//! rotates in the orientation with the fewer columns, so both tall and wide
//! inputs are cheap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// Sweep budget; each sweep visits every column pair once.
const MAX_SWEEPS: usize = 100;

/// A pair (p, q) counts as orthogonal when |w_p . w_q| <= TOL * |w_p| * |w_q|.
const CONVERGENCE_TOL: f64 = 1e-12;

/// Singular values at or below RANK_TOL * s_max are treated as zero: their
/// singular-vector columns are zeroed rather than normalized, so that
/// rank-deficient inputs yield exactly-zero weights instead of noise
/// directions.
const RANK_TOL: f64 = 1e-13;

/// Truncated singular value decomposition `X ~ U S V^T`.
///
/// `u` is rows x k with the left singular vectors in columns, `v` is
/// cols x k with the right singular vectors in columns, and `s` holds the k
/// largest singular values in descending order. Columns belonging to
/// numerically zero singular values are zero vectors.
///
/// Signs follow a fixed convention so repeated runs produce identical
/// factors: the largest-magnitude element of the first left singular vector
/// is made negative (the first component of an all-positive data cloud then
/// comes out all-negative), and the largest-magnitude element of every
/// later left singular vector is made positive. Each flip is applied to the
/// (u_i, v_i) pair together, which leaves the product U S V^T unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
    pub k: usize,
}

impl SvdResult {
    /// Recompose `U S V^T` (rows x cols of the original matrix).
    pub fn reconstruct(&self) -> DenseMatrix {
        let rows = self.u.rows();
        let cols = self.v.rows();
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..self.k {
            let s = self.s[i];
            if s == 0.0 {
                continue;
            }
            for r in 0..rows {
                let us = self.u.get(r, i) * s;
                if us == 0.0 {
                    continue;
                }
                for c in 0..cols {
                    let v = out.get(r, c) + us * self.v.get(c, i);
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}

/// Compute the k leading singular triplets of `x`.
pub fn svd(x: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let (rows, cols) = (x.rows(), x.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::argument("svd of an empty matrix"));
    }
    if k == 0 || k > rows.min(cols) {
        return Err(Error::argument(format!(
            "retained rank {k} must be in 1..=min({rows}, {cols})"
        )));
    }

    // Orthogonalize columns of the orientation with fewer columns.
    let transposed = cols > rows;
    let work = if transposed { x.transpose() } else { x.clone() };
    let n = work.cols();

    let mut w: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    // Accumulated rotations: n x n identity, stored as columns.
    let mut rot: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut col_sq: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    let norm_floor = col_sq.iter().fold(0.0f64, |m, &v| m.max(v)) * f64::EPSILON * f64::EPSILON;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let prod = col_sq[p] * col_sq[q];
                if prod <= norm_floor {
                    continue; // one side is numerically a zero column
                }
                let (wp, wq) = pair_mut(&mut w, p, q);
                let gamma = dot(wp, wq);
                if gamma.abs() <= CONVERGENCE_TOL * prod.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (col_sq[q] - col_sq[p]) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s);
                let (rp, rq) = pair_mut(&mut rot, p, q);
                rotate(rp, rq, c, s);
                // Recompute the two norms exactly: the cheap incremental
                // update drifts once a column drains toward zero, and a
                // wrong norm feeds back into the rotation angle.
                col_sq[p] = dot(&w[p], &w[p]);
                col_sq[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric(format!(
            "svd did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    // Exact norms, then a stable descending order.
    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let s_max = norms[order[0]];
    let mut s = Vec::with_capacity(k);
    // Normalized columns of w, and the rotation columns, in sorted order.
    let mut w_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rot_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let sigma = norms[j];
        s.push(sigma);
        if sigma <= RANK_TOL * s_max {
            w_cols.push(vec![0.0; w[j].len()]);
            rot_cols.push(vec![0.0; n]);
        } else {
            w_cols.push(w[j].iter().map(|v| v / sigma).collect());
            rot_cols.push(rot[j].clone());
        }
    }

    // w columns are the left factor of `work`; rotations are its right
    // factor. Swap roles when we decomposed the transpose.
    let (mut u_cols, mut v_cols) = if transposed {
        (rot_cols, w_cols)
    } else {
        (w_cols, rot_cols)
    };

    apply_sign_convention(&mut u_cols, &mut v_cols);

    Ok(SvdResult {
        u: DenseMatrix::from_columns(&u_cols)?,
        s,
        v: DenseMatrix::from_columns(&v_cols)?,
        k,
    })
}

fn pair_mut<T>(items: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (head, tail) = items.split_at_mut(q);
    (&mut head[p], &mut tail[0])
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xa = *x;
        *x = c * xa - s * *y;
        *y = s * xa + c * *y;
    }
}

fn apply_sign_convention(u_cols: &mut [Vec<f64>], v_cols: &mut [Vec<f64>]) {
    for (i, (u, v)) in u_cols.iter_mut().zip(v_cols.iter_mut()).enumerate() {
        let mut idx = 0;
        let mut best = 0.0f64;
        for (j, &val) in u.iter().enumerate() {
            if val.abs() > best {
                best = val.abs();
                idx = j;
            }
        }
        if best == 0.0 {
            continue; // zeroed null column
        }
        let want_negative = i == 0;
        if (u[idx] > 0.0) == want_negative {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
