//! Elastic net by cyclic coordinate descent, and ridge-jittered least squares.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearModel {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coefs).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Minimizes `(1/2n)·‖y − b0 − Xb‖² + λ(α‖b‖₁ + (1−α)/2·‖b‖₂²)` with an
/// unpenalized intercept. Stops when no coefficient moves by more than
/// 1e-8 in a sweep, or after 10 000 sweeps.
pub(crate) fn elastic_net(x: &Matrix, y: &[f64], lambda: f64, alpha: f64) -> LinearModel {
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..p)
        .map(|j| x.column(j).map(|v| v * v).sum::<f64>() / nf)
        .collect();
    let mut beta = vec![0.0; p];
    let mut intercept = y.iter().sum::<f64>() / nf;
    let mut resid: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let denom = col_sq[j] + l2;
            let old = beta[j];
            let new = if denom > 0.0 {
                let rho =
                    (0..n).map(|i| x.get(i, j) * resid[i]).sum::<f64>() / nf + col_sq[j] * old;
                soft_threshold(rho, l1) / denom
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                for (i, r) in resid.iter_mut().enumerate() {
                    *r -= x.get(i, j) * delta;
                }
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        let shift = resid.iter().sum::<f64>() / nf;
        intercept += shift;
        resid.iter_mut().for_each(|r| *r -= shift);
        max_change = max_change.max(shift.abs());
        if max_change < TOLERANCE {
            break;
        }
    }
    LinearModel {
        intercept,
        coefs: beta,
    }
}

/// Solves `(ΦᵀΦ + jitter·I) c = Φᵀy` by Cholesky, falling back to LU.
pub fn least_squares(design: &Matrix, y: &[f64], jitter: f64) -> Result<Vec<f64>> {
    let (n, m) = (design.nrows(), design.ncols());
    let phi = DMatrix::from_row_slice(n, m, &design.rows().flatten().copied().collect::<Vec<_>>());
    let rhs = phi.transpose() * DVector::from_column_slice(y);
    let mut gram = phi.transpose() * &phi;
    for d in 0..m {
        gram[(d, d)] += jitter;
    }
    let solution = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Fit("normal equations are singular".into()))?,
    };
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("least-squares solution is not finite".into()));
    }
    Ok(solution.iter().copied().collect())
}
