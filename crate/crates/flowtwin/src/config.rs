//! The `--config` document: optional sections per command, every field
//! optional on top of built-in defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use flowtwin_core::gnn::{ModelConfig, TrainConfig, Variant};
use flowtwin_core::nn::CyclicLr;
use flowtwin_core::{SimConfig, SizeModel, TopologyKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub topology: Option<TopologyOptions>,
    pub simulation: Option<SimOptions>,
    pub model: Option<ModelOptions>,
    pub training: Option<TrainOptions>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyOptions {
    pub kind: Option<String>,
    pub nodes: Option<usize>,
    pub capacity_min: Option<f64>,
    pub capacity_max: Option<f64>,
}

/// Synthetic topology request resolved against defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyRequest {
    pub kind: TopologyKind,
    pub nodes: usize,
    pub capacity: (f64, f64),
}

pub const DEFAULT_CAPACITY: (f64, f64) = (4000.0, 16000.0);

impl TopologyOptions {
    pub fn resolve(&self) -> Result<TopologyRequest> {
        let kind = match &self.kind {
            Some(k) => k.parse()?,
            None => TopologyKind::RandomConnected,
        };
        Ok(TopologyRequest {
            kind,
            nodes: self.nodes.unwrap_or(5),
            capacity: (
                self.capacity_min.unwrap_or(DEFAULT_CAPACITY.0),
                self.capacity_max.unwrap_or(DEFAULT_CAPACITY.1),
            ),
        })
    }
}

pub const DEFAULT_DATASET_DURATION: f64 = 2000.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    pub duration: Option<f64>,
    pub warmup: Option<f64>,
    pub propagation_delay: Option<f64>,
    pub drain: Option<bool>,
    /// Mean of exponentially distributed packet sizes instead of the
    /// bimodal mixture.
    pub exponential_size_mean: Option<f64>,
    pub trace: Option<bool>,
}

impl SimOptions {
    pub fn resolve(&self, seed: u64) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.duration.unwrap_or(DEFAULT_DATASET_DURATION), seed);
        if let Some(w) = self.warmup {
            cfg.warmup = w;
        }
        if let Some(p) = self.propagation_delay {
            cfg.propagation_delay = p;
        }
        if let Some(d) = self.drain {
            cfg.drain = d;
        }
        if let Some(mean) = self.exponential_size_mean {
            cfg.size_model = SizeModel::Exponential { mean };
        }
        cfg.trace = self.trace.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    pub variant: Option<String>,
    pub path_width: Option<usize>,
    pub link_width: Option<usize>,
    pub node_width: Option<usize>,
    pub iterations: Option<usize>,
    pub path_updater: Option<String>,
    pub link_updater: Option<String>,
    pub readout_hidden: Option<Vec<usize>>,
    pub residual_readout: Option<bool>,
    pub loss: Option<String>,
    pub target: Option<String>,
    pub dropout: Option<f64>,
    pub l2: Option<f64>,
    pub scaling: Option<String>,
    /// Multipliers for path and node widths, link widths and readout
    /// widths, and a divisor for the iteration count, applied last.
    pub scale: Option<[usize; 4]>,
}

impl ModelOptions {
    pub fn from_config(c: &ModelConfig) -> Self {
        ModelOptions {
            variant: Some(c.variant.as_str().into()),
            path_width: Some(c.path_width),
            link_width: Some(c.link_width),
            node_width: Some(c.node_width),
            iterations: Some(c.iterations),
            path_updater: Some(c.path_updater.as_str().into()),
            link_updater: Some(c.link_updater.as_str().into()),
            readout_hidden: Some(c.readout_hidden.clone()),
            residual_readout: Some(c.residual_readout),
            loss: Some(c.loss.as_str().into()),
            target: Some(c.target.as_str().into()),
            dropout: Some(c.dropout),
            l2: Some(c.l2),
            scaling: Some(c.scaling.as_str().into()),
            scale: None,
        }
    }

    /// Overrides on the defaults of `variant` (or of the variant named in
    /// the options when `variant` is `None`).
    pub fn resolve(&self, variant: Option<Variant>) -> Result<ModelConfig> {
        let named = self.variant.as_deref().map(str::parse::<Variant>).transpose()?;
        let variant = match (variant, named) {
            (Some(v), _) => v,
            (None, Some(v)) => v,
            (None, None) => Variant::NodeAugmented,
        };
        let mut c = ModelConfig::new(variant);
        macro_rules! set {
            ($($field:ident),+) => { $(if let Some(v) = &self.$field { c.$field = v.clone(); })+ };
        }
        macro_rules! parse {
            ($($field:ident),+) => { $(if let Some(v) = &self.$field { c.$field = v.parse()?; })+ };
        }
        set!(path_width, link_width, node_width, iterations, readout_hidden, residual_readout, dropout, l2);
        parse!(path_updater, link_updater, loss, target, scaling);
        if let Some([state, link, readout, div]) = self.scale {
            c = c.scaled(state, link, readout, div);
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub epochs: Option<usize>,
    pub base_lr: Option<f64>,
    pub max_lr: Option<f64>,
    pub cycle_length: Option<u64>,
    pub eval_every: Option<u64>,
    pub patience: Option<usize>,
    /// Fraction of training samples held out for validation when no
    /// validation dataset is given.
    pub holdout: Option<f64>,
}

pub const DEFAULT_HOLDOUT: f64 = 0.1;

impl TrainOptions {
    pub fn resolve(&self, seed: u64) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let schedule = CyclicLr {
            base_lr: self.base_lr.unwrap_or(d.schedule.base_lr),
            max_lr: self.max_lr.unwrap_or(d.schedule.max_lr),
            cycle_length: self.cycle_length.unwrap_or(d.schedule.cycle_length),
        };
        if !(schedule.base_lr > 0.0 && schedule.max_lr >= schedule.base_lr && schedule.cycle_length > 0) {
            bail!("learning-rate schedule needs 0 < base_lr <= max_lr and a positive cycle length");
        }
        Ok(TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            schedule,
            eval_every: self.eval_every.unwrap_or(d.eval_every),
            patience: self.patience.unwrap_or(d.patience),
            seed,
        })
    }

    pub fn holdout(&self) -> Result<f64> {
        let h = self.holdout.unwrap_or(DEFAULT_HOLDOUT);
        if !(h > 0.0 && h < 1.0) {
            bail!("holdout fraction {h} outside (0, 1)");
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowtwin_core::gnn::LossKind;

    #[test]
    fn empty_config_gives_defaults() {
        let c: ConfigFile = serde_json::from_str("{}").unwrap();
        let m = c.model.unwrap_or_default().resolve(Some(Variant::Baseline)).unwrap();
        assert_eq!(m, ModelConfig::new(Variant::Baseline));
    }

    #[test]
    fn overrides_apply() {
        let c: ConfigFile =
            serde_json::from_str(r#"{"model":{"loss":"mse","path_width":32,"scale":[2,1,1,3]}}"#).unwrap();
        let m = c.model.unwrap().resolve(None).unwrap();
        assert_eq!((m.loss, m.path_width, m.iterations, m.variant), (LossKind::Mse, 64, 1, Variant::NodeAugmented));
    }

    #[test]
    fn unknown_keys_and_values_fail() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"modle":{}}"#).is_err());
        let c: ConfigFile = serde_json::from_str(r#"{"model":{"loss":"huber"}}"#).unwrap();
        assert!(c.model.unwrap().resolve(None).is_err());
    }

    #[test]
    fn model_options_round_trip() {
        let mut m = ModelConfig::new(Variant::NodeAugmented);
        m.dropout = 0.25;
        assert_eq!(ModelOptions::from_config(&m).resolve(None).unwrap(), m);
    }
}
