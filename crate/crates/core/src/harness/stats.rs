use serde::Serialize;

/// Mean and sample standard deviation of a set of per-trial values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

impl Stat {
    /// Values are reduced in the order given.
    pub fn from_values(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stddev = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, stddev, count })
    }
}

/// Standard deviation of a proportion estimated from `samples` Bernoulli(p)
/// draws.
pub fn binomial_sigma(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}

/// Three-sigma half-width for a proportion estimated from `samples` draws.
pub fn three_sigma(p: f64, samples: usize) -> f64 {
    3.0 * binomial_sigma(p, samples)
}
