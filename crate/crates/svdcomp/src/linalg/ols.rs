//! Ordinary least squares via Householder QR.
//!
//! The cubic logit predictors used by the weight models are strongly
//! collinear, so the solve goes through a QR factorization of the design
//! matrix rather than the normal equations, which would square the
//! condition number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// A column whose remaining mass after orthogonalization falls below this
/// fraction of its original norm is reported as collinear.
const COLLINEARITY_TOL: f64 = 1e-12;

/// Fitted least-squares model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first when one was requested, then one coefficient per
    /// design column.
    pub coefficients: Vec<f64>,
    /// Fraction of variance explained; measured against the response mean
    /// with an intercept, against zero without one.
    pub r_squared: f64,
    /// sqrt(SSR / (n - p)); zero when the fit has no residual degrees of
    /// freedom.
    pub residual_std_error: f64,
    pub n_obs: usize,
}

impl OlsFit {
    /// Evaluate the fitted linear combination for one predictor row
    /// (excluding the intercept, which is applied automatically when the
    /// fit has one).
    pub fn predict(&self, predictors: &[f64], has_intercept: bool) -> f64 {
        let (start, mut acc) = if has_intercept {
            (1, self.coefficients[0])
        } else {
            (0, 0.0)
        };
        for (c, x) in self.coefficients[start..].iter().zip(predictors) {
            acc += c * x;
        }
        acc
    }
}

/// Fit `response ~ design` by least squares.
///
/// Requires at least as many observations as estimated coefficients; a
/// square system is solved exactly (interpolation). Collinear designs fail
/// with a numeric error naming the offending column: index 0 is the
/// intercept when present, later indexes count design columns from there.
pub fn ols_fit(design: &DenseMatrix, response: &[f64], include_intercept: bool) -> Result<OlsFit> {
    let n = design.rows();
    if response.len() != n {
        return Err(Error::argument(format!(
            "design has {n} rows but response has {} values",
            response.len()
        )));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("response contains non-finite values"));
    }
    let p = design.cols() + usize::from(include_intercept);
    if n < p {
        return Err(Error::argument(format!(
            "{n} observations cannot identify {p} coefficients"
        )));
    }

    // Assembled design: optional intercept column, then the predictors.
    let mut a = DenseMatrix::from_fn(n, p, |r, c| {
        if include_intercept {
            if c == 0 {
                1.0
            } else {
                design.get(r, c - 1)
            }
        } else {
            design.get(r, c)
        }
    })?;
    let mut y = response.to_vec();
    let initial_norms: Vec<f64> = (0..p)
        .map(|c| (0..n).map(|r| a.get(r, c).powi(2)).sum::<f64>().sqrt())
        .collect();

    // Householder QR, applying each reflection to the trailing columns and
    // the response as we go.
    for j in 0..p {
        let mut norm_sq = 0.0;
        for r in j..n {
            norm_sq += a.get(r, j).powi(2);
        }
        let norm = norm_sq.sqrt();
        if norm <= COLLINEARITY_TOL * initial_norms[j].max(f64::MIN_POSITIVE) {
            return Err(Error::numeric(format!(
                "design column {j} is collinear with earlier columns{}",
                if include_intercept {
                    " (column 0 is the intercept)"
                } else {
                    ""
                }
            )));
        }
        let ajj = a.get(j, j);
        let alpha = if ajj >= 0.0 { -norm } else { norm };
        // Householder vector v = x - alpha * e_j, stored below the diagonal.
        let v0 = ajj - alpha;
        let v_norm_sq = norm_sq - ajj * ajj + v0 * v0;
        if v_norm_sq > 0.0 {
            a.set(j, j, v0);
            let beta = 2.0 / v_norm_sq;
            for c in j + 1..p {
                let mut proj = 0.0;
                for r in j..n {
                    proj += a.get(r, j) * a.get(r, c);
                }
                proj *= beta;
                for r in j..n {
                    let v = a.get(r, c) - proj * a.get(r, j);
                    a.set(r, c, v);
                }
            }
            let mut proj = 0.0;
            for r in j..n {
                proj += a.get(r, j) * y[r];
            }
            proj *= beta;
            for (r, item) in y.iter_mut().enumerate().take(n).skip(j) {
                *item -= proj * a.get(r, j);
            }
        }
        a.set(j, j, alpha);
        for r in j + 1..n {
            a.set(r, j, 0.0);
        }
    }

    // Back substitution on the p x p upper triangle.
    let mut coefficients = vec![0.0; p];
    for j in (0..p).rev() {
        let mut acc = y[j];
        for c in j + 1..p {
            acc -= a.get(j, c) * coefficients[c];
        }
        coefficients[j] = acc / a.get(j, j);
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::numeric("least-squares solution is not finite"));
    }

    // Residual sum of squares straight from the transformed response tail.
    let ssr: f64 = y[p..].iter().map(|v| v * v).sum();
    let sst = if include_intercept {
        let mean = response.iter().sum::<f64>() / n as f64;
        response.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        response.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        // Zero-variance response: the model reproduces it exactly.
        1.0
    };
    let residual_std_error = if n > p {
        (ssr / (n - p) as f64).sqrt()
    } else {
        0.0
    };

    Ok(OlsFit {
        coefficients,
        r_squared,
        residual_std_error,
        n_obs: n,
    })
}
