//! Percentile bootstrap and Pearson correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ConfidenceInterval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile bootstrap CI of the sample mean.
pub fn bootstrap_ci(sample: &[f64], resamples: usize, level: f64, seed: u64) -> Result<ConfidenceInterval> {
    if sample.is_empty() {
        return Err(QigError::Domain("bootstrap of an empty sample".into()));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(QigError::Domain("bootstrap sample has non-finite values".into()));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(QigError::Config("bootstrap needs level in (0, 1) and resamples > 0".into()));
    }
    let n = sample.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let s: f64 = (0..n).map(|_| sample[rng.random_range(0..n)]).sum();
            s / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let q = |p: f64| means[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    let a = 0.5 * (1.0 - level);
    Ok(ConfidenceInterval {
        mean: mean(sample),
        lo: q(a),
        hi: q(1.0 - a),
        n,
    })
}

/// Pearson correlation; `None` when either variable is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
