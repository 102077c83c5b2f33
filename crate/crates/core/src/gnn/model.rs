use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::features::{FeatureEncoding, InitialStates, Scaling, LINK_FEATURES, NODE_FEATURES, PATH_FEATURES};
use super::incidence::{build_incidence, IncidenceStructures, MessagePlan};
use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::ln;
use crate::nn::{Activation, Bound, Dense, Gru, Mlp, ParamStore, Tape, Tensor, Var};
use crate::rng::{stream_rng, UnitSource};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    NodeAugmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathUpdater {
    Gru,
    StackedGru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkUpdater {
    Gru,
    FeedForward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Mape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetTransform {
    Identity,
    Log,
}

macro_rules! named_enum {
    ($ty:ident, $what:literal, $($variant:ident => $name:literal $(| $alias:literal)*),+) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl core::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name $(| $alias)* => Ok($ty::$variant),)+
                    other => Err(Error::UnknownCategory(format!("{} {other:?}", $what))),
                }
            }
        }

        impl core::fmt::Display for $ty {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

named_enum!(Variant, "variant", Baseline => "baseline", NodeAugmented => "node-augmented" | "node_augmented");
named_enum!(PathUpdater, "path updater", Gru => "gru", StackedGru => "stacked_gru" | "stacked-gru");
named_enum!(LinkUpdater, "link updater", Gru => "gru", FeedForward => "feedforward");
named_enum!(LossKind, "loss", Mse => "mse", Mape => "mape");
named_enum!(TargetTransform, "target transform", Identity => "identity", Log => "log");

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub path_width: usize,
    pub link_width: usize,
    pub node_width: usize,
    /// Message-passing rounds.
    pub iterations: usize,
    pub path_updater: PathUpdater,
    pub link_updater: LinkUpdater,
    pub readout_hidden: Vec<usize>,
    /// Feed the final path state into the output layer next to the last
    /// hidden layer.
    pub residual_readout: bool,
    pub loss: LossKind,
    pub target: TargetTransform,
    /// Drop probability on readout hidden units; 0 disables dropout.
    pub dropout: f64,
    pub l2: f64,
    pub scaling: Scaling,
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        ModelConfig {
            variant,
            path_width: 64,
            link_width: 64,
            node_width: 64,
            iterations: 3,
            path_updater: PathUpdater::Gru,
            link_updater: LinkUpdater::Gru,
            readout_hidden: vec![128, 128],
            residual_readout: variant == Variant::NodeAugmented,
            loss: LossKind::Mape,
            target: TargetTransform::Log,
            dropout: 0.0,
            l2: 0.0,
            scaling: Scaling::Standardize,
        }
    }

    /// Multiplies state widths and readout widths, divides the iteration
    /// count (never below one).
    pub fn scaled(mut self, state_mult: usize, link_mult: usize, readout_mult: usize, iteration_div: usize) -> Self {
        self.path_width *= state_mult.max(1);
        self.node_width *= state_mult.max(1);
        self.link_width *= link_mult.max(1);
        for w in &mut self.readout_hidden {
            *w *= readout_mult.max(1);
        }
        self.iterations = (self.iterations / iteration_div.max(1)).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_width < PATH_FEATURES || self.link_width < LINK_FEATURES || self.node_width < NODE_FEATURES {
            return Err(invalid_arg!(
                "state widths {}/{}/{} below raw feature counts {PATH_FEATURES}/{LINK_FEATURES}/{NODE_FEATURES}",
                self.path_width,
                self.link_width,
                self.node_width
            ));
        }
        if self.iterations == 0 {
            return Err(invalid_arg!("at least one message-passing iteration is required"));
        }
        if self.readout_hidden.contains(&0) {
            return Err(invalid_arg!("readout widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid_arg!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(invalid_arg!("l2 coefficient {} must be finite and non-negative", self.l2));
        }
        Ok(())
    }

    /// Stable `key=value;` rendering, the basis of the checkpoint hash.
    pub fn canonical(&self) -> String {
        let readout: Vec<String> = self.readout_hidden.iter().map(|w| format!("{w}")).collect();
        format!(
            "variant={};path_width={};link_width={};node_width={};iterations={};path_updater={};link_updater={};\
             readout_hidden={};residual_readout={};loss={};target={};dropout={:?};l2={:?};scaling={}",
            self.variant,
            self.path_width,
            self.link_width,
            self.node_width,
            self.iterations,
            self.path_updater,
            self.link_updater,
            readout.join(","),
            self.residual_readout,
            self.loss,
            self.target,
            self.dropout,
            self.l2,
            self.scaling.as_str(),
        )
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(Variant::Baseline)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PathRnn {
    Single(Gru),
    Stacked(Gru, Gru),
}

#[derive(Debug, Clone, PartialEq)]
enum LinkUpdate {
    Gru(Gru),
    FeedForward(Mlp),
}

#[derive(Debug, Clone, PartialEq)]
struct NodeParts {
    node_update: Gru,
    link_from_nodes: Gru,
    combine: Dense,
}

#[derive(Debug, Clone, PartialEq)]
struct Parts {
    path_rnn: PathRnn,
    link_update: LinkUpdate,
    node: Option<NodeParts>,
    readout: Vec<Dense>,
    output: Dense,
}

/// A sample turned into everything the forward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub sample_id: u64,
    pub keys: Vec<(usize, usize)>,
    pub incidence: IncidenceStructures,
    plan: MessagePlan,
    pub init: InitialStates,
    /// Rows with a usable label and their mean delays.
    pub targets: Option<(Vec<usize>, Tensor)>,
}

/// Dropout randomness for a training forward pass.
pub struct DropoutRng<'a>(pub &'a mut dyn UnitSource);

/// Message-passing model with its feature encoding and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    config: ModelConfig,
    encoding: FeatureEncoding,
    params: ParamStore,
    parts: Parts,
}

impl GnnModel {
    /// Fresh parameters drawn from `seed`.
    pub fn new(config: ModelConfig, encoding: FeatureEncoding, seed: u64) -> Result<Self> {
        config.validate()?;
        if encoding.scaling != config.scaling {
            return Err(invalid_arg!("encoding scaling does not match the model configuration"));
        }
        let mut rng = stream_rng(seed, 0);
        let mut store = ParamStore::new();
        let (pw, lw, nw) = (config.path_width, config.link_width, config.node_width);
        let path_rnn = match config.path_updater {
            PathUpdater::Gru => PathRnn::Single(Gru::new(&mut store, "path_rnn", lw, pw, &mut rng)?),
            PathUpdater::StackedGru => PathRnn::Stacked(
                Gru::new(&mut store, "path_rnn.0", lw, pw, &mut rng)?,
                Gru::new(&mut store, "path_rnn.1", pw, pw, &mut rng)?,
            ),
        };
        let link_update = match config.link_updater {
            LinkUpdater::Gru => LinkUpdate::Gru(Gru::new(&mut store, "link_update", pw, lw, &mut rng)?),
            LinkUpdater::FeedForward => LinkUpdate::FeedForward(Mlp::new(
                &mut store,
                "link_update",
                &[lw + pw, lw, lw, lw],
                Activation::Relu,
                Activation::Tanh,
                &mut rng,
            )?),
        };
        let node = match config.variant {
            Variant::Baseline => None,
            Variant::NodeAugmented => Some(NodeParts {
                node_update: Gru::new(&mut store, "node_update", 2 * lw, nw, &mut rng)?,
                link_from_nodes: Gru::new(&mut store, "link_from_nodes", 2 * nw, lw, &mut rng)?,
                combine: Dense::new(&mut store, "combine", pw + nw, pw, Activation::Tanh, &mut rng)?,
            }),
        };
        let mut readout = Vec::new();
        let mut width = pw;
        for (i, &w) in config.readout_hidden.iter().enumerate() {
            readout.push(Dense::new(&mut store, &format!("readout.{i}"), width, w, Activation::Relu, &mut rng)?);
            width = w;
        }
        let out_in = if config.residual_readout { width + pw } else { width };
        let output = Dense::new(&mut store, "readout.out", out_in, 1, Activation::Identity, &mut rng)?;
        Ok(GnnModel { config, encoding, params: store, parts: Parts { path_rnn, link_update, node, readout, output } })
    }

    /// Rebuilds a model from stored parameter values.
    pub fn from_parts<'a>(
        config: ModelConfig,
        encoding: FeatureEncoding,
        params: impl IntoIterator<Item = (&'a str, Tensor)>,
    ) -> Result<Self> {
        let mut model = Self::new(config, encoding, 0)?;
        model.params.load(params).map_err(|e| Error::InvalidInput(format!("checkpoint: {e}")))?;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn encoding(&self) -> &FeatureEncoding {
        &self.encoding
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Sets the output bias so an untrained model predicts `delay`.
    pub fn set_output_level(&mut self, delay: f64) -> Result<()> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(invalid_arg!("output level {delay} must be positive"));
        }
        let level = match self.config.target {
            TargetTransform::Identity => delay,
            TargetTransform::Log => ln(delay),
        };
        self.params.get_mut(self.parts.output.bias).data_mut()[0] = level;
        Ok(())
    }

    pub fn prepare(&self, sample: &Sample) -> Result<PreparedSample> {
        let incidence = build_incidence(sample)?;
        let plan = MessagePlan::new(&incidence);
        let c = &self.config;
        let init = self
            .encoding
            .encode(sample, [c.path_width, c.link_width, c.node_width])
            .map_err(|e| match e {
                Error::UnknownCategory(_) => e,
                other => Error::InvalidInput(format!("sample {}: {other}", sample.sample_id)),
            })?;
        let targets = sample.labels.as_ref().map(|labels| {
            let rows: Vec<usize> =
                labels.iter().enumerate().filter(|(_, l)| l.delivered > 0 && l.delay_mean > 0.0).map(|(i, _)| i).collect();
            let values = rows.iter().map(|&i| labels[i].delay_mean).collect::<Vec<_>>();
            let n = rows.len();
            (rows, Tensor::matrix(n, 1, values).expect("column shape"))
        });
        Ok(PreparedSample {
            sample_id: sample.sample_id,
            keys: sample.traffic.flows().iter().map(|f| f.key()).collect(),
            incidence,
            plan,
            init,
            targets,
        })
    }

    fn link_step(&self, tape: &mut Tape, p: &Bound, links: Var, input: Var) -> Result<Var> {
        match &self.parts.link_update {
            LinkUpdate::Gru(g) => g.step(tape, p, links, input),
            LinkUpdate::FeedForward(mlp) => {
                let x = tape.concat_cols(&[links, input])?;
                mlp.forward(tape, p, x)
            }
        }
    }

    /// Runs the path updater along every path's ordered links. Returns the
    /// final path states and, per position, the hidden states of the paths
    /// active there.
    fn path_pass(&self, tape: &mut Tape, p: &Bound, plan: &MessagePlan, paths: Var, links: Var) -> Result<(Var, Vec<Var>)> {
        let n_paths = tape.value(paths).rows();
        let mut messages = Vec::with_capacity(plan.active_paths.len());
        let mut top = paths;
        let mut bottom = paths;
        for k in 0..plan.active_paths.len() {
            let active = &plan.active_paths[k];
            let x = tape.gather_rows(links, &plan.active_links[k])?;
            let keep = tape.leaf(Tensor::matrix(n_paths, 1, plan.inactive_mask[k].clone())?);
            let scatter = |tape: &mut Tape, old: Var, new: Var| -> Result<Var> {
                let kept = tape.mul_col(old, keep)?;
                let placed = tape.segment_sum(new, active, n_paths)?;
                tape.add(kept, placed)
            };
            match &self.parts.path_rnn {
                PathRnn::Single(g) => {
                    let h = tape.gather_rows(top, active)?;
                    let h = g.step(tape, p, h, x)?;
                    messages.push(h);
                    top = scatter(tape, top, h)?;
                }
                PathRnn::Stacked(g0, g1) => {
                    let h0 = tape.gather_rows(bottom, active)?;
                    let h0 = g0.step(tape, p, h0, x)?;
                    let h1 = tape.gather_rows(top, active)?;
                    let h1 = g1.step(tape, p, h1, h0)?;
                    messages.push(h1);
                    bottom = scatter(tape, bottom, h0)?;
                    top = scatter(tape, top, h1)?;
                }
            }
        }
        Ok((top, messages))
    }

    /// Per-path predicted delays, `n_paths x 1`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &Bound,
        s: &PreparedSample,
        mut dropout: Option<DropoutRng<'_>>,
    ) -> Result<Var> {
        let c = &self.config;
        let plan = &s.plan;
        let inc = &s.incidence;
        let mut paths = tape.leaf(s.init.path.clone());
        let mut links = tape.leaf(s.init.link.clone());
        let mut nodes = tape.leaf(s.init.node.clone());
        for _ in 0..c.iterations {
            match &self.parts.node {
                None => {
                    let (h, messages) = self.path_pass(tape, p, plan, paths, links)?;
                    paths = h;
                    let mut agg: Option<Var> = None;
                    for (k, m) in messages.into_iter().enumerate() {
                        let part = tape.segment_sum(m, &plan.active_links[k], inc.n_links)?;
                        agg = Some(match agg {
                            None => part,
                            Some(a) => tape.add(a, part)?,
                        });
                    }
                    let agg = agg.ok_or_else(|| invalid_arg!("sample {} has no paths", s.sample_id))?;
                    links = self.link_step(tape, p, links, agg)?;
                }
                Some(np) => {
                    let on_links = tape.gather_rows(paths, &plan.pl_paths)?;
                    let agg = tape.segment_sum(on_links, &plan.pl_links, inc.n_links)?;
                    links = self.link_step(tape, p, links, agg)?;

                    let out_sum = tape.segment_sum(links, &plan.link_src, inc.n_nodes)?;
                    let in_sum = tape.segment_sum(links, &plan.link_dst, inc.n_nodes)?;
                    let x = tape.concat_cols(&[out_sum, in_sum])?;
                    nodes = np.node_update.step(tape, p, nodes, x)?;

                    let src = tape.gather_rows(nodes, &plan.link_src)?;
                    let dst = tape.gather_rows(nodes, &plan.link_dst)?;
                    let x = tape.concat_cols(&[src, dst])?;
                    links = np.link_from_nodes.step(tape, p, links, x)?;

                    paths = self.path_pass(tape, p, plan, paths, links)?.0;
                }
            }
        }
        if let Some(np) = &self.parts.node {
            let on_paths = tape.gather_rows(nodes, &plan.pn_nodes)?;
            let agg = tape.segment_sum(on_paths, &plan.pn_paths, inc.n_paths)?;
            let x = tape.concat_cols(&[paths, agg])?;
            paths = np.combine.forward(tape, p, x)?;
        }
        let mut h = paths;
        for layer in &self.parts.readout {
            h = layer.forward(tape, p, h)?;
            if let Some(DropoutRng(rng)) = dropout.as_mut() {
                if c.dropout > 0.0 {
                    let v = tape.value(h);
                    let keep = 1.0 / (1.0 - c.dropout);
                    let mask: Vec<f64> =
                        (0..v.len()).map(|_| if rng.unit() < c.dropout { 0.0 } else { keep }).collect();
                    let mask = tape.leaf(Tensor::new(v.shape().to_vec(), mask)?);
                    h = tape.mul(h, mask)?;
                }
            }
        }
        let x = if c.residual_readout { tape.concat_cols(&[h, paths])? } else { h };
        let out = self.parts.output.forward(tape, p, x)?;
        match c.target {
            TargetTransform::Identity => Ok(out),
            TargetTransform::Log => tape.exp(out),
        }
    }

    /// Training objective on the labeled rows of `s`, plus the L2 penalty.
    pub fn loss(&self, tape: &mut Tape, p: &Bound, s: &PreparedSample, dropout: Option<DropoutRng<'_>>) -> Result<Var> {
        let (rows, y) = s
            .targets
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("sample {} has no labels", s.sample_id)))?;
        if rows.is_empty() {
            return Err(Error::InvalidInput(format!("sample {} has no delivered flows", s.sample_id)));
        }
        let pred = self.forward(tape, p, s, dropout)?;
        let pred = tape.gather_rows(pred, rows)?;
        let mut loss = match self.config.loss {
            LossKind::Mape => tape.mape_loss(pred, y)?,
            LossKind::Mse => tape.mse_loss(pred, y)?,
        };
        if self.config.l2 > 0.0 {
            for (i, name) in self.params.names().iter().enumerate() {
                if name.ends_with(".bias") || name.ends_with(".b_input") || name.ends_with(".b_hidden") {
                    continue;
                }
                let w = p.vars()[i];
                let sq = tape.mul(w, w)?;
                let sq = tape.sum_all(sq)?;
                let sq = tape.scale(sq, self.config.l2)?;
                loss = tape.add(loss, sq)?;
            }
        }
        Ok(loss)
    }

    /// Predicted delays for one prepared sample, in flow order.
    pub fn predict_prepared(&self, s: &PreparedSample) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape);
        let out = self.forward(&mut tape, &p, s, None)?;
        Ok(tape.value(out).data().to_vec())
    }

    pub fn predict_sample(&self, sample: &Sample) -> Result<Vec<f64>> {
        self.predict_prepared(&self.prepare(sample)?)
    }
}
