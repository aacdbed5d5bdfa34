use serde::Serialize;

use crate::error::{Error, Result};

/// Mean, batch-means standard error and effective sample size of one
/// observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
}

/// Non-overlapping batch means for several observables recorded together.
///
/// The number of samples is fixed up front; samples past
/// `batch_size * n_batches` (fewer than `n_batches` of them) are dropped.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    dims: usize,
    batch_size: u64,
    n_batches: usize,
    sums: Vec<f64>,
    sq: Vec<f64>,
    seen: u64,
}

impl BatchMeans {
    pub fn new(dims: usize, n_samples: u64, n_batches: usize) -> Result<Self> {
        if n_batches < 2 {
            return Err(Error::param("batches", "need at least two batches"));
        }
        let batch_size = n_samples / n_batches as u64;
        if batch_size == 0 {
            return Err(Error::param(
                "sweeps",
                format!("{n_samples} samples cannot fill {n_batches} batches"),
            ));
        }
        Ok(BatchMeans {
            dims,
            batch_size,
            n_batches,
            sums: vec![0.0; dims * n_batches],
            sq: vec![0.0; dims],
            seen: 0,
        })
    }

    fn batch(&self) -> Option<usize> {
        let b = (self.seen / self.batch_size) as usize;
        (b < self.n_batches).then_some(b)
    }

    /// Adds `x` to observable `k` of the current sample.
    #[inline]
    pub fn add(&mut self, k: usize, x: f64) {
        if let Some(b) = self.batch() {
            self.sums[b * self.dims + k] += x;
            self.sq[k] += x * x;
        }
    }

    #[inline]
    pub fn end_sample(&mut self) {
        self.seen += 1;
    }

    pub fn used_samples(&self) -> u64 {
        self.batch_size * self.n_batches as u64
    }

    pub fn estimate(&self, k: usize) -> Estimate {
        let used = self.used_samples() as f64;
        let b = self.n_batches as f64;
        let bs = self.batch_size as f64;
        let means: Vec<f64> = (0..self.n_batches)
            .map(|i| self.sums[i * self.dims + k] / bs)
            .collect();
        let mean = means.iter().sum::<f64>() / b;
        let var_b = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
        let se = (var_b / b).sqrt();
        let var = ((self.sq[k] / used - mean * mean) * used / (used - 1.0).max(1.0)).max(0.0);
        let ess = if se > 0.0 { var / (se * se) } else { used };
        Estimate { mean, se, ess }
    }
}

/// Weighted least-squares slope of `y` against `x` with weights `1/se^2`.
/// Zero standard errors are floored at `1e-12` so exact points dominate.
pub fn wls_slope(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
    assert!(x.len() == y.len() && y.len() == se.len() && x.len() >= 2);
    let w: Vec<f64> = se.iter().map(|s| 1.0 / s.max(1e-12).powi(2)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((w, x), y)| w * (x - xm) * (y - ym))
        .sum();
    (sxy / sxx, 1.0 / sxx.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn batch_means_of_a_constant() {
        let mut bm = BatchMeans::new(1, 100, 20).unwrap();
        for _ in 0..100 {
            bm.add(0, 0.5);
            bm.end_sample();
        }
        let e = bm.estimate(0);
        assert_abs_diff_eq!(e.mean, 0.5);
        assert_eq!(e.se, 0.0);
        assert_eq!(e.ess, 100.0);
    }

    #[test]
    fn batch_means_of_alternating_series() {
        // Batches of 5 from 0,1,0,1,...: each batch mean is 0.4 or 0.6.
        let mut bm = BatchMeans::new(1, 100, 20).unwrap();
        for i in 0..103 {
            bm.add(0, (i % 2) as f64);
            bm.end_sample();
        }
        let e = bm.estimate(0);
        assert_abs_diff_eq!(e.mean, 0.5, epsilon = 1e-15);
        // Every batch mean is 0.4 or 0.6 alternating: sd = 0.1 * sqrt(20/19).
        assert_abs_diff_eq!(
            e.se,
            0.1 * (20.0f64 / 19.0).sqrt() / 20f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn too_few_samples() {
        assert!(BatchMeans::new(1, 10, 20).is_err());
        assert!(BatchMeans::new(1, 10, 1).is_err());
    }

    #[test]
    fn wls_on_a_line() {
        let (b, se) = wls_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.1, 0.1, 0.1]);
        assert_abs_diff_eq!(b, 2.0, epsilon = 1e-12);
        // 1 / sqrt(sum w (x - xm)^2) = 1 / sqrt(100 * 2)
        assert_abs_diff_eq!(se, 1.0 / 200f64.sqrt(), epsilon = 1e-12);
    }
}
