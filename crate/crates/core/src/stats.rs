//! Monte Carlo estimates and mergeable accumulators.

use serde::Serialize;

/// Sample mean with its standard error `sample_std / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let mut acc = Moments::default();
        xs.iter().for_each(|&x| acc.push(x));
        acc.estimate()
    }

    pub fn exact(value: f64) -> Self {
        McEstimate { mean: value, stderr: 0.0, n: 0 }
    }
}

/// Count, sum and sum of squared deviations (Chan et al. merge), so batch
/// accumulators combine associatively.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            mean: self.mean,
            stderr: if self.n < 2 { 0.0 } else { (self.variance() / self.n as f64).sqrt() },
            n: self.n,
        }
    }
}

/// Ratio of paired means `mean(x) / mean(y)` with a delta-method standard
/// error that accounts for the covariance of the pairs.
pub fn paired_ratio(x: &[f64], y: &[f64]) -> Option<McEstimate> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    if my == 0.0 {
        return None;
    }
    let r = mx / my;
    // residuals x - r y have mean zero; their spread drives the ratio error
    let var = x.iter().zip(y).map(|(a, b)| (a - r * b).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(McEstimate {
        mean: r,
        stderr: (var / n as f64).sqrt() / my.abs(),
        n: n as u64,
    })
}

/// Mean of `x - y` over paired samples.
pub fn paired_difference(x: &[f64], y: &[f64]) -> McEstimate {
    assert_eq!(x.len(), y.len());
    let mut acc = Moments::default();
    x.iter().zip(y).for_each(|(a, b)| acc.push(a - b));
    acc.estimate()
}
