//! Pooled MAPE, competition ranking and prediction tables.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;
use crate::sample::FlowKey;

/// Predicted delay per `(sample_id, src, dst)`.
pub type PredictionTable = BTreeMap<FlowKey, f64>;

/// `100 / N * sum |y - yhat| / y` over all pairs.
pub fn mape(truth: &[f64], pred: &[f64]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(alloc::format!("{} truths vs {} predictions", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(Error::UndefinedStatistic("MAPE of an empty set"));
    }
    let mut total = 0.0;
    for (i, (&y, &p)) in truth.iter().zip(pred).enumerate() {
        if y == 0.0 {
            return Err(Error::DegenerateTarget { index: i });
        }
        total += abs((y - p) / y);
    }
    Ok(100.0 * total / truth.len() as f64)
}

/// Why a table cannot be scored against a truth table.
#[derive(Debug, Clone, PartialEq)]
pub enum Malformed {
    /// Keys in the truth but not the submission, and vice versa; both
    /// truncated to the first ten.
    KeyMismatch { missing: Vec<FlowKey>, extra: Vec<FlowKey>, total_missing: usize, total_extra: usize },
    NonFinite { key: FlowKey },
    NonPositiveTruth { key: FlowKey },
}

impl core::fmt::Display for Malformed {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Malformed::KeyMismatch { missing, extra, total_missing, total_extra } => {
                write!(f, "malformed submission: {total_missing} missing key(s)")?;
                if !missing.is_empty() {
                    write!(f, " {}", fmt_keys(missing))?;
                }
                write!(f, ", {total_extra} unexpected key(s)")?;
                if !extra.is_empty() {
                    write!(f, " {}", fmt_keys(extra))?;
                }
                Ok(())
            }
            Malformed::NonFinite { key } => {
                write!(f, "malformed submission: non-finite prediction for {}", fmt_keys(&[*key]))
            }
            Malformed::NonPositiveTruth { key } => {
                write!(f, "ground truth delay for {} is not positive", fmt_keys(&[*key]))
            }
        }
    }
}

fn fmt_keys(keys: &[FlowKey]) -> String {
    let parts: Vec<String> = keys.iter().map(|(s, a, b)| alloc::format!("({s},{a},{b})")).collect();
    parts.join(" ")
}

const MAX_LISTED: usize = 10;

/// Checks that both tables have the same keys and every prediction is
/// finite.
pub fn check_submission(submission: &PredictionTable, truth: &PredictionTable) -> core::result::Result<(), Malformed> {
    let missing: Vec<FlowKey> = truth.keys().filter(|k| !submission.contains_key(k)).copied().collect();
    let extra: Vec<FlowKey> = submission.keys().filter(|k| !truth.contains_key(k)).copied().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Malformed::KeyMismatch {
            total_missing: missing.len(),
            total_extra: extra.len(),
            missing: missing.into_iter().take(MAX_LISTED).collect(),
            extra: extra.into_iter().take(MAX_LISTED).collect(),
        });
    }
    if let Some((k, _)) = submission.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Malformed::NonFinite { key: *k });
    }
    Ok(())
}

/// Pooled MAPE of a submission against ground truth with identical keys.
pub fn score_tables(submission: &PredictionTable, truth: &PredictionTable) -> core::result::Result<f64, Malformed> {
    check_submission(submission, truth)?;
    if let Some((k, _)) = truth.iter().find(|(_, v)| !(**v > 0.0)) {
        return Err(Malformed::NonPositiveTruth { key: *k });
    }
    let y: Vec<f64> = truth.values().copied().collect();
    let p: Vec<f64> = submission.values().copied().collect();
    Ok(mape(&y, &p).expect("keys match and truths are positive"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub team: String,
    pub mape: f64,
}

/// Sorts ascending by score (team name breaks display ties) and assigns
/// competition ranks: equal scores share a rank and the next rank skips.
pub fn competition_rank(scores: &[(String, f64)]) -> Vec<LeaderboardRow> {
    let mut sorted: Vec<(String, f64)> = scores.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut rows: Vec<LeaderboardRow> = Vec::with_capacity(sorted.len());
    for (i, (team, mape)) in sorted.into_iter().enumerate() {
        let rank = match rows.last() {
            Some(prev) if prev.mape == mape => prev.rank,
            _ => i + 1,
        };
        rows.push(LeaderboardRow { rank, team, mape });
    }
    rows
}

/// Per-key arithmetic mean of tables sharing one key set.
pub fn ensemble_average(tables: &[PredictionTable]) -> Result<PredictionTable> {
    let first = tables.first().ok_or_else(|| Error::InvalidInput("ensemble of zero tables".into()))?;
    for (i, t) in tables.iter().enumerate().skip(1) {
        if t.len() != first.len() || !t.keys().eq(first.keys()) {
            return Err(Error::InvalidInput(alloc::format!("ensemble member {i} has a different key set")));
        }
    }
    let n = tables.len() as f64;
    let mut out = PredictionTable::new();
    for (k, &v0) in first {
        // Equal members reproduce themselves bit for bit.
        if tables.iter().all(|t| t[k] == v0) {
            out.insert(*k, v0);
        } else {
            out.insert(*k, tables.iter().map(|t| t[k]).sum::<f64>() / n);
        }
    }
    Ok(out)
}
