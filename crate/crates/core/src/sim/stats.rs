use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::ceil;

/// Percentiles reported for every flow.
pub const PERCENTILES: [f64; 5] = [10.0, 20.0, 50.0, 80.0, 90.0];

/// Nearest-rank percentile: element `ceil(p / 100 * n) - 1` of `sorted`.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::UndefinedStatistic("percentile of an empty sample"));
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(invalid_arg!("percentile rank must be in (0, 100), got {p}"));
    }
    let rank = ceil(p / 100.0 * sorted.len() as f64) as usize;
    Ok(sorted[rank.saturating_sub(1).min(sorted.len() - 1)])
}

/// Simulator labels for one flow. Delay statistics cover delivered packets
/// created after warm-up; they are zero when none were delivered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerFlowStats {
    pub src: usize,
    pub dst: usize,
    pub delay_mean: f64,
    /// Population variance of the delays.
    pub jitter: f64,
    pub p10: f64,
    pub p20: f64,
    pub p50: f64,
    pub p80: f64,
    pub p90: f64,
    pub drops: u64,
    pub delivered: u64,
}

impl PerFlowStats {
    pub fn from_delays(src: usize, dst: usize, mut delays: Vec<f64>, drops: u64) -> Self {
        let delivered = delays.len() as u64;
        if delays.is_empty() {
            return PerFlowStats {
                src,
                dst,
                delay_mean: 0.0,
                jitter: 0.0,
                p10: 0.0,
                p20: 0.0,
                p50: 0.0,
                p80: 0.0,
                p90: 0.0,
                drops,
                delivered,
            };
        }
        delays.sort_by(f64::total_cmp);
        let n = delays.len() as f64;
        let mean = delays.iter().sum::<f64>() / n;
        let jitter = delays.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        let [p10, p20, p50, p80, p90] = PERCENTILES.map(|p| percentile(&delays, p).unwrap_or(0.0));
        PerFlowStats { src, dst, delay_mean: mean, jitter, p10, p20, p50, p80, p90, drops, delivered }
    }

    pub fn percentiles(&self) -> [f64; 5] {
        [self.p10, self.p20, self.p50, self.p80, self.p90]
    }

    /// Percentile order, nonnegative counts and positive mean when delivered.
    pub fn is_consistent(&self) -> bool {
        let p = self.percentiles();
        let ordered = p.windows(2).all(|w| w[0] <= w[1]);
        let positive = self.delivered == 0 || self.delay_mean > 0.0;
        ordered && positive && self.jitter >= 0.0
    }
}
