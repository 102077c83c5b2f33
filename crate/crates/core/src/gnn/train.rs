use alloc::vec::Vec;

use super::model::{DropoutRng, GnnModel, LossKind, ModelConfig, PreparedSample};
use super::features::FeatureEncoding;
use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::metrics::{mape, PredictionTable};
use crate::nn::{Adam, AdamConfig, CyclicLr, Tape, Tensor};
use crate::rng::{shuffle, stream_rng};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub schedule: CyclicLr,
    /// Optimizer steps between evaluations; 0 evaluates once per epoch.
    pub eval_every: u64,
    /// Evaluations without validation improvement before stopping; 0
    /// never stops early.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            schedule: CyclicLr { base_lr: 1e-4, max_lr: 2e-3, cycle_length: 2000 },
            eval_every: 0,
            patience: 0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub step: u64,
    /// Mean configured loss over the steps since the previous entry.
    pub train_loss: f64,
    pub train_mape: f64,
    pub val_mape: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the best validation MAPE seen.
    pub model: GnnModel,
    pub loss: LossKind,
    pub history: Vec<HistoryEntry>,
    pub best_step: u64,
    /// Step at which a non-finite loss or gradient ended training.
    pub diverged_at: Option<u64>,
}

/// Pooled MAPE of the model over the labeled flows of prepared samples.
pub fn evaluate_mape(model: &GnnModel, samples: &[PreparedSample]) -> Result<f64> {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for s in samples {
        let Some((rows, y)) = &s.targets else {
            return Err(Error::InvalidInput(alloc::format!("sample {} has no labels", s.sample_id)));
        };
        let p = model.predict_prepared(s)?;
        truth.extend_from_slice(y.data());
        pred.extend(rows.iter().map(|&r| p[r]));
    }
    mape(&truth, &pred)
}

fn mean_target(samples: &[PreparedSample]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in samples {
        if let Some((_, y)) = &s.targets {
            sum += y.sum();
            n += y.len();
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean labeled delay over a split, the level of the constant predictor.
pub fn mean_delay(samples: &[Sample]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for l in samples.iter().filter_map(|s| s.labels.as_ref()).flatten() {
        if l.delivered > 0 && l.delay_mean > 0.0 {
            sum += l.delay_mean;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Fits feature statistics on `train`, then optimizes with Adam one
/// sample per step and keeps the best-validation parameters.
pub fn train(config: ModelConfig, train: &[Sample], val: &[Sample], tc: &TrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() || val.is_empty() {
        return Err(invalid_arg!("training and validation splits must be nonempty"));
    }
    if tc.epochs == 0 {
        return Err(invalid_arg!("at least one epoch is required"));
    }
    let encoding = FeatureEncoding::fit(train, config.scaling)?;
    let mut model = GnnModel::new(config, encoding, tc.seed)?;
    let train_p = train.iter().map(|s| model.prepare(s)).collect::<Result<Vec<_>>>()?;
    let val_p = val.iter().map(|s| model.prepare(s)).collect::<Result<Vec<_>>>()?;
    let usable: Vec<usize> =
        (0..train_p.len()).filter(|&i| train_p[i].targets.as_ref().is_some_and(|(r, _)| !r.is_empty())).collect();
    if usable.is_empty() {
        return Err(Error::InvalidInput("training split has no labeled, delivered flows".into()));
    }
    model.set_output_level(mean_target(&train_p))?;

    let mut adam = Adam::new(AdamConfig::new(tc.schedule), model.params().tensors());
    let mut rng = stream_rng(tc.seed, 1);
    let eval_every = if tc.eval_every == 0 { usable.len() as u64 } else { tc.eval_every };
    let total_steps = (tc.epochs * usable.len()) as u64;

    let mut best = model.clone();
    let mut best_val = evaluate_mape(&model, &val_p)?;
    let mut best_step = 0;
    let mut since_best = 0usize;
    let mut history = Vec::new();
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;
    let mut diverged_at = None;
    let mut order = usable.clone();
    let mut step = 0u64;

    'outer: for _ in 0..tc.epochs {
        shuffle(&mut order, &mut rng);
        for &i in &order {
            step += 1;
            let mut tape = Tape::new();
            let bound = model.params().bind(&mut tape);
            let result = model
                .loss(&mut tape, &bound, &train_p[i], Some(DropoutRng(&mut rng)))
                .and_then(|loss| Ok((tape.value(loss).data()[0], tape.backward(loss)?)));
            let (loss_value, grads) = match result {
                Ok(v) if v.0.is_finite() => v,
                Ok(_) | Err(Error::NumericOverflow(_)) => {
                    diverged_at = Some(step);
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
            let grads: Vec<Tensor> = bound.gradients(model.params(), &grads);
            match adam.step(model.params_mut().tensors_mut(), &grads) {
                Ok(()) => {}
                Err(Error::TrainingDivergence { .. }) => {
                    diverged_at = Some(step);
                    break 'outer;
                }
                Err(e) => return Err(e),
            }
            loss_sum += loss_value;
            loss_count += 1;
            if step.is_multiple_of(eval_every) || step == total_steps {
                let val_mape = match evaluate_mape(&model, &val_p) {
                    Ok(v) if v.is_finite() => v,
                    Ok(_) | Err(Error::NumericOverflow(_)) => {
                        diverged_at = Some(step);
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                };
                let train_mape = evaluate_mape(&model, &train_p).unwrap_or(f64::NAN);
                history.push(HistoryEntry { step, train_loss: loss_sum / loss_count as f64, train_mape, val_mape });
                loss_sum = 0.0;
                loss_count = 0;
                if val_mape < best_val {
                    best_val = val_mape;
                    best = model.clone();
                    best_step = step;
                    since_best = 0;
                } else {
                    since_best += 1;
                    if tc.patience > 0 && since_best >= tc.patience {
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(TrainOutcome { model: best, loss: model.config().loss, history, best_step, diverged_at })
}

/// One row per flow of every sample, keyed by `(sample_id, src, dst)`.
pub fn predict(model: &GnnModel, samples: &[Sample]) -> Result<PredictionTable> {
    let mut table = PredictionTable::new();
    for s in samples {
        let prepared = model.prepare(s)?;
        let pred = model.predict_prepared(&prepared)?;
        for (&(src, dst), v) in prepared.keys.iter().zip(pred) {
            if table.insert((s.sample_id, src, dst), v).is_some() {
                return Err(Error::InvalidInput(alloc::format!("duplicate sample id {}", s.sample_id)));
            }
        }
    }
    Ok(table)
}
