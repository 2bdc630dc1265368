//! Binomial estimates.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub ci: (f64, f64),
}

impl Estimate {
    pub fn new(wins: u64, trials: u64) -> Self {
        let estimate = if trials == 0 { 0.0 } else { wins as f64 / trials as f64 };
        Estimate { trials, wins, estimate, ci: wilson(wins, trials, Z95) }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci.1 - self.ci.0) / 2.0
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci.0 <= p && p <= self.ci.1
    }
}

/// Wilson score interval.
pub fn wilson(wins: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if wins == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if wins == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Whether two estimates agree within the sum of their interval half-widths.
pub fn agree(a: &Estimate, b: &Estimate) -> bool {
    (a.estimate - b.estimate).abs() <= a.half_width() + b.half_width()
}
