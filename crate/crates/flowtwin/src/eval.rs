//! Scoring submissions against a labeled dataset and ranking them.

use std::collections::BTreeSet;
use std::path::Path;

use flowtwin_core::metrics::{check_submission, competition_rank, score_tables, LeaderboardRow, PredictionTable};
use flowtwin_core::{FlowKey, Sample};

use crate::dataset::read_samples;
use crate::predictions::read_predictions;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

/// Mean delay of every flow; flows that delivered nothing are keyed but
/// not scored.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub delays: PredictionTable,
    pub unmeasured: BTreeSet<FlowKey>,
}

impl GroundTruth {
    pub fn from_samples(samples: &[Sample]) -> anyhow::Result<Self> {
        let mut delays = PredictionTable::new();
        let mut unmeasured = BTreeSet::new();
        for s in samples {
            let labels = s
                .labels
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("ground truth sample {} has no labels", s.sample_id))?;
            for l in labels {
                let key = (s.sample_id, l.src, l.dst);
                if delays.insert(key, l.delay_mean).is_some() {
                    anyhow::bail!("ground truth repeats key {key:?}");
                }
                if l.delivered == 0 || !(l.delay_mean > 0.0) {
                    unmeasured.insert(key);
                }
            }
        }
        Ok(GroundTruth { delays, unmeasured })
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        Self::from_samples(&read_samples(dir, true)?)
    }

    /// Pooled MAPE over the measured flows.
    pub fn score(&self, submission: &PredictionTable) -> Result<f64, EvalError> {
        check_submission(submission, &self.delays).map_err(|m| EvalError::Malformed(m.to_string()))?;
        let keep = |t: &PredictionTable| -> PredictionTable {
            t.iter().filter(|(k, _)| !self.unmeasured.contains(k)).map(|(k, v)| (*k, *v)).collect()
        };
        score_tables(&keep(submission), &keep(&self.delays)).map_err(|m| EvalError::Malformed(m.to_string()))
    }
}

pub fn score_file(submission: &Path, truth: &GroundTruth) -> Result<f64, EvalError> {
    let table = read_predictions(submission).map_err(|e| EvalError::Malformed(format!("malformed submission: {e:#}")))?;
    truth.score(&table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
    /// Unranked submissions and why.
    pub malformed: Vec<(String, String)>,
}

/// Scores every `(team, table)` and ranks the well-formed ones.
pub fn rank_tables(entries: &[(String, PredictionTable)], truth: &GroundTruth) -> Leaderboard {
    let mut scores = Vec::new();
    let mut malformed = Vec::new();
    for (team, table) in entries {
        match truth.score(table) {
            Ok(m) => scores.push((team.clone(), m)),
            Err(e) => malformed.push((team.clone(), e.to_string())),
        }
    }
    malformed.sort();
    Leaderboard { rows: competition_rank(&scores), malformed }
}

/// Like [`rank_tables`] for CSV files; unreadable files are malformed.
pub fn rank_files(entries: &[(String, std::path::PathBuf)], truth: &GroundTruth) -> Leaderboard {
    let mut tables = Vec::new();
    let mut unreadable = Vec::new();
    for (team, path) in entries {
        match read_predictions(path) {
            Ok(t) => tables.push((team.clone(), t)),
            Err(e) => unreadable.push((team.clone(), format!("malformed submission: {e:#}"))),
        }
    }
    let mut board = rank_tables(&tables, truth);
    board.malformed.extend(unreadable);
    board.malformed.sort();
    board
}
