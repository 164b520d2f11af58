use super::KernelFn;
use crate::dataset::Matrix;

/// Nadaraya–Watson smoother over standardized training rows.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KernelModel {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub bandwidth: f64,
    pub kernel_fn: KernelFn,
    pub mean: f64,
}

impl KernelModel {
    pub fn new(x: Matrix, y: Vec<f64>, bandwidth: f64, kernel_fn: KernelFn) -> Self {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        KernelModel {
            x,
            y,
            bandwidth,
            kernel_fn,
            mean,
        }
    }

    /// Weighted mean at `q`; the flag is set when every weight is zero and
    /// the training mean is returned instead.
    pub fn predict_row(&self, q: &[f64]) -> (f64, bool) {
        let (mut num, mut den) = (0.0, 0.0);
        for (row, y) in self.x.rows().zip(&self.y) {
            let dist = row
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let w = self.kernel_fn.weight(dist / self.bandwidth);
            num += w * y;
            den += w;
        }
        if den > 0.0 {
            (num / den, false)
        } else {
            (self.mean, true)
        }
    }
}
