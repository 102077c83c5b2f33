use alloc::format;
use alloc::vec::Vec;

use super::params::{Bound, ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::Result;
use crate::invalid_arg;
use crate::rng::UnitSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Activation::Identity => Ok(x),
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }
}

/// Fully connected layer `act(x W + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl Dense {
    pub fn new<R: UnitSource + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add_uniform(&format!("{name}.weight"), &[inputs, outputs], inputs, rng)?;
        let bias = store.add_uniform(&format!("{name}.bias"), &[1, outputs], inputs, rng)?;
        Ok(Dense { weight, bias, inputs, outputs, activation })
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        if tape.value(x).cols() != self.inputs {
            return Err(invalid_arg!("dense: input width {} expected {}", tape.value(x).cols(), self.inputs));
        }
        let y = tape.matmul(x, p.var(self.weight))?;
        let y = tape.add_row(y, p.var(self.bias))?;
        self.activation.apply(tape, y)
    }
}

/// Stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// Hidden layers use `hidden_act`; the last layer uses `out_act`.
    pub fn new<R: UnitSource + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        widths: &[usize],
        hidden_act: Activation,
        out_act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(invalid_arg!("mlp {name}: needs input and output widths"));
        }
        let mut layers = Vec::new();
        for i in 0..widths.len() - 1 {
            let act = if i + 2 == widths.len() { out_act } else { hidden_act };
            layers.push(Dense::new(store, &format!("{name}.{i}"), widths[i], widths[i + 1], act, rng)?);
        }
        Ok(Mlp { layers })
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, mut x: Var) -> Result<Var> {
        for l in &self.layers {
            x = l.forward(tape, p, x)?;
        }
        Ok(x)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }
}

/// Gated recurrent unit:
///
/// ```text
/// r  = sigmoid(x W_r + b_r + h U_r + c_r)
/// z  = sigmoid(x W_z + b_z + h U_z + c_z)
/// n  = tanh(x W_n + b_n + r * (h U_n + c_n))
/// h' = (1 - z) * n + z * h
/// ```
///
/// The three gates share fused `inputs x 3H` and `H x 3H` matrices in
/// `r, z, n` column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gru {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub b_input: ParamId,
    pub b_hidden: ParamId,
    pub inputs: usize,
    pub hidden: usize,
}

impl Gru {
    pub fn new<R: UnitSource + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w_input = store.add_uniform(&format!("{name}.w_input"), &[inputs, 3 * hidden], hidden, rng)?;
        let w_hidden = store.add_uniform(&format!("{name}.w_hidden"), &[hidden, 3 * hidden], hidden, rng)?;
        let b_input = store.add_uniform(&format!("{name}.b_input"), &[1, 3 * hidden], hidden, rng)?;
        let b_hidden = store.add_uniform(&format!("{name}.b_hidden"), &[1, 3 * hidden], hidden, rng)?;
        Ok(Gru { w_input, w_hidden, b_input, b_hidden, inputs, hidden })
    }

    /// One step for a batch: `state` is `rows x hidden`, `input` is
    /// `rows x inputs`.
    pub fn step(&self, tape: &mut Tape, p: &Bound, state: Var, input: Var) -> Result<Var> {
        let (sv, iv) = (tape.value(state), tape.value(input));
        if sv.cols() != self.hidden || iv.cols() != self.inputs || sv.rows() != iv.rows() {
            return Err(invalid_arg!(
                "gru: state {:?} / input {:?} for {} inputs, {} hidden",
                sv.shape(),
                iv.shape(),
                self.inputs,
                self.hidden
            ));
        }
        let h = self.hidden;
        let gx = tape.matmul(input, p.var(self.w_input))?;
        let gx = tape.add_row(gx, p.var(self.b_input))?;
        let gh = tape.matmul(state, p.var(self.w_hidden))?;
        let gh = tape.add_row(gh, p.var(self.b_hidden))?;
        let rz_x = tape.slice_cols(gx, 0, 2 * h)?;
        let rz_h = tape.slice_cols(gh, 0, 2 * h)?;
        let rz = tape.add(rz_x, rz_h)?;
        let rz = tape.sigmoid(rz)?;
        let r = tape.slice_cols(rz, 0, h)?;
        let z = tape.slice_cols(rz, h, 2 * h)?;
        let n_x = tape.slice_cols(gx, 2 * h, 3 * h)?;
        let n_h = tape.slice_cols(gh, 2 * h, 3 * h)?;
        let n_h = tape.mul(r, n_h)?;
        let n = tape.add(n_x, n_h)?;
        let n = tape.tanh(n)?;
        // h' = n + z * (h - n)
        let diff = tape.sub(state, n)?;
        let gated = tape.mul(z, diff)?;
        tape.add(n, gated)
    }
}
