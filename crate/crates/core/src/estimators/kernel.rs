use crate::data::DataSet;

/// Nadaraya-Watson smoother with Gaussian kernel
/// `K(u) = exp(-|u|^2 / (2 h^2))`.
#[derive(Debug, Clone)]
pub struct KernelSmootherFit {
    /// Row-major training features.
    x: Vec<f64>,
    y: Vec<f64>,
    dim: usize,
    bandwidth: f64,
}

impl KernelSmootherFit {
    pub(crate) fn new(data: &DataSet, bandwidth: f64) -> Self {
        let dim = data.d();
        let mut x = Vec::with_capacity(data.n() * dim);
        for i in 0..data.n() {
            x.extend(data.x().row(i).iter());
        }
        Self {
            x,
            y: data.y().iter().copied().collect(),
            dim,
            bandwidth,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn predict(&self, q: &[f64]) -> f64 {
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let logw: Vec<f64> = self
            .x
            .chunks_exact(self.dim)
            .map(|row| -inv * row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect();
        // log-sum-exp shift keeps far-away queries from underflowing to 0/0
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = logw
            .iter()
            .zip(&self.y)
            .fold((0.0, 0.0), |(num, den), (lw, y)| {
                let w = (lw - top).exp();
                (num + w * y, den + w)
            });
        num / den
    }
}
