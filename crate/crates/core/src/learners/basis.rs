//! Linear-in-parameters basis expansions: polynomial series and linear
//! truncated-power splines, both fitted by ridge-jittered least squares.

use super::linear::least_squares;
use crate::dataset::Matrix;
use crate::error::Result;

const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Basis {
    /// One exponent vector per monomial.
    Series(Vec<Vec<u32>>),
    /// Knot locations of a univariate linear spline.
    Piecewise(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BasisModel {
    pub basis: Basis,
    pub coefs: Vec<f64>,
}

impl Basis {
    fn expand(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Basis::Series(terms) => terms
                .iter()
                .map(|e| x.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product())
                .collect(),
            Basis::Piecewise(knots) => {
                let mut row = vec![1.0, x[0]];
                row.extend(knots.iter().map(|k| (x[0] - k).max(0.0)));
                row
            }
        }
    }

    fn design(&self, x: &Matrix) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = x.rows().map(|r| self.expand(r)).collect();
        Matrix::from_rows(&rows)
    }
}

impl BasisModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.basis
            .expand(x)
            .iter()
            .zip(&self.coefs)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Exponent vectors of every monomial in `p` variables with total degree
/// at most `degree`, ordered by total degree, then lexicographically
/// descending within a degree. The constant term comes first.
pub fn monomial_exponents(p: usize, degree: usize) -> Vec<Vec<u32>> {
    fn fill(p: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == p {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            fill(p, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree as u32 {
        fill(p, d, &mut Vec::with_capacity(p), &mut out);
    }
    out
}

/// Knots at the quantile levels `j/(m+1)`, `j = 1..m`, with linear
/// interpolation between order statistics.
pub fn quantile_knots(values: &[f64], m: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    (1..=m)
        .map(|j| {
            let h = last * j as f64 / (m + 1) as f64;
            let (lo, frac) = (h.floor() as usize, h - h.floor());
            let hi = (lo + 1).min(sorted.len() - 1);
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        })
        .collect()
}

pub(crate) fn fit_series(x: &Matrix, y: &[f64], degree: usize) -> Result<BasisModel> {
    let basis = Basis::Series(monomial_exponents(x.ncols(), degree));
    let coefs = least_squares(&basis.design(x)?, y, JITTER)?;
    Ok(BasisModel { basis, coefs })
}

pub(crate) fn fit_piecewise(x: &Matrix, y: &[f64], n_knots: usize) -> Result<BasisModel> {
    let column: Vec<f64> = x.column(0).collect();
    let basis = Basis::Piecewise(quantile_knots(&column, n_knots));
    let coefs = least_squares(&basis.design(x)?, y, JITTER)?;
    Ok(BasisModel { basis, coefs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(
            monomial_exponents(1, 3),
            vec![vec![0], vec![1], vec![2], vec![3]]
        );
        assert_eq!(
            monomial_exponents(2, 2),
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        for p in 1..5 {
            for d in 1..5 {
                assert_eq!(monomial_exponents(p, d).len(), binomial(p + d, d));
            }
        }
    }

    #[test]
    fn quantiles() {
        assert_eq!(
            quantile_knots(&[4.0, 0.0, 2.0, 1.0, 3.0], 3),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(quantile_knots(&[0.0, 1.0], 1), vec![0.5]);
        assert!(quantile_knots(&[0.0, 1.0], 0).is_empty());
    }

    #[test]
    fn series_fits_cubic_exactly() {
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|v| 1.0 - v + 0.5 * v.powi(3)).collect();
        let x = Matrix::new(9, 1, xs).unwrap();
        let m = fit_series(&x, &y, 3).unwrap();
        for (c, want) in m.coefs.iter().zip([1.0, -1.0, 0.0, 0.5]) {
            assert!((c - want).abs() < 1e-6, "{:?}", m.coefs);
        }
    }

    #[test]
    fn piecewise_fits_hinge_exactly() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 + (v - 5.0).max(0.0) * 3.0).collect();
        let x = Matrix::new(11, 1, xs.clone()).unwrap();
        let m = fit_piecewise(&x, &y, 1).unwrap();
        assert_eq!(m.basis, Basis::Piecewise(vec![5.0]));
        for (v, want) in xs.iter().zip(&y) {
            assert!((m.predict_row(&[*v]) - want).abs() < 1e-6);
        }
    }
}
