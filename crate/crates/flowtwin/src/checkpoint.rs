//! Checkpoint document: a header naming the variant and the hash of the
//! model configuration, the fitted feature statistics, then every
//! parameter as shape plus flat row-major values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use flowtwin_core::gnn::{ColumnStats, FeatureEncoding, GnnModel, ModelConfig};
use flowtwin_core::nn::Tensor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ModelOptions;

pub const FORMAT: &str = "flowtwin-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub variant: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsRecord {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingRecord {
    pub scaling: String,
    pub path: Vec<StatsRecord>,
    pub link: Vec<StatsRecord>,
    pub node: Vec<StatsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub header: Header,
    pub config: ModelOptions,
    pub encoding: EncodingRecord,
    pub params: BTreeMap<String, ParamRecord>,
}

/// Hex SHA-256 of the configuration's canonical rendering.
pub fn config_hash(c: &ModelConfig) -> String {
    format!("{:x}", Sha256::digest(c.canonical().as_bytes()))
}

fn stats_out(s: &[ColumnStats]) -> Vec<StatsRecord> {
    s.iter().map(|c| StatsRecord { mean: c.mean, std: c.std, min: c.min, max: c.max }).collect()
}

fn stats_in(s: &[StatsRecord]) -> Vec<ColumnStats> {
    s.iter().map(|c| ColumnStats { mean: c.mean, std: c.std, min: c.min, max: c.max }).collect()
}

impl Checkpoint {
    pub fn from_model(model: &GnnModel) -> Self {
        let c = model.config();
        let e = model.encoding();
        Checkpoint {
            header: Header {
                format: FORMAT.into(),
                version: VERSION,
                variant: c.variant.as_str().into(),
                config_hash: config_hash(c),
            },
            config: ModelOptions::from_config(c),
            encoding: EncodingRecord {
                scaling: e.scaling.as_str().into(),
                path: stats_out(&e.path),
                link: stats_out(&e.link),
                node: stats_out(&e.node),
            },
            params: model
                .params()
                .iter()
                .map(|(name, t)| (name.to_string(), ParamRecord { shape: t.shape().to_vec(), values: t.data().to_vec() }))
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<GnnModel> {
        let h = &self.header;
        if h.format != FORMAT || h.version != VERSION {
            bail!("checkpoint format {:?} version {} is not {FORMAT:?} version {VERSION}", h.format, h.version);
        }
        let config = self.config.resolve(None).context("checkpoint config")?;
        if config.variant.as_str() != h.variant {
            bail!("checkpoint header variant {:?} disagrees with its config ({})", h.variant, config.variant);
        }
        if config_hash(&config) != h.config_hash {
            bail!("checkpoint config hash mismatch");
        }
        let encoding = FeatureEncoding {
            scaling: self.encoding.scaling.parse()?,
            path: stats_in(&self.encoding.path),
            link: stats_in(&self.encoding.link),
            node: stats_in(&self.encoding.node),
        };
        let tensors = self
            .params
            .iter()
            .map(|(name, p)| {
                Ok((name.as_str(), Tensor::new(p.shape.clone(), p.values.clone()).with_context(|| format!("parameter {name}"))?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GnnModel::from_parts(config, encoding, tensors)?)
    }
}

pub fn write_checkpoint(path: &Path, model: &GnnModel) -> Result<()> {
    let mut text = serde_json::to_string(&Checkpoint::from_model(model))?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_checkpoint(path: &Path) -> Result<GnnModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ck: Checkpoint = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    ck.to_model().with_context(|| format!("loading {}", path.display()))
}
