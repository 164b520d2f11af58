use std::cmp::Ordering;

use super::majority;
use crate::dataset::{Matrix, Target};

/// Standardized training rows; prediction averages or votes over the k
/// Euclidean-nearest rows, distance ties going to the lower row index.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KnnModel {
    pub x: Matrix,
    pub y: Target,
    pub k: usize,
}

impl KnnModel {
    pub fn new(x: Matrix, y: Target, k: usize) -> Self {
        KnnModel { x, y, k }
    }

    /// Indices of the k nearest training rows, ascending by index.
    pub fn neighbors(&self, q: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .rows()
            .enumerate()
            .map(|(i, r)| {
                (
                    r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                    i,
                )
            })
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance);
            dist.truncate(self.k);
        }
        let mut idx: Vec<usize> = dist.into_iter().map(|(_, i)| i).collect();
        idx.sort_unstable();
        idx
    }

    pub fn predict_row(&self, q: &[f64], n_classes: usize) -> f64 {
        let nb = self.neighbors(q);
        match &self.y {
            Target::Numeric(y) => nb.iter().map(|&i| y[i]).sum::<f64>() / nb.len() as f64,
            Target::Classes(c) => {
                let mut votes = vec![0; n_classes];
                for &i in &nb {
                    votes[c[i]] += 1;
                }
                majority(&votes) as f64
            }
        }
    }
}
