use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use crate::error::Result;
use crate::invalid_arg;
use crate::math::sqrt;
use crate::rng::UnitSource;

/// Named trainable tensors, in registration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

/// Index of a parameter in its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(invalid_arg!("parameter {name:?} registered twice"));
        }
        self.names.push(name.into());
        self.tensors.push(value);
        self.index.insert(name.into(), self.tensors.len() - 1);
        Ok(ParamId(self.tensors.len() - 1))
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn add_uniform<R: UnitSource + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        fan_in: usize,
        rng: &mut R,
    ) -> Result<ParamId> {
        let bound = 1.0 / sqrt(fan_in.max(1) as f64);
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
        self.add(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Replaces every value from `(name, tensor)` pairs; names and shapes must
    /// match exactly.
    pub fn load<'a>(&mut self, values: impl IntoIterator<Item = (&'a str, Tensor)>) -> Result<()> {
        let mut seen = 0;
        for (name, t) in values {
            let i = *self.index.get(name).ok_or_else(|| invalid_arg!("unknown parameter {name:?}"))?;
            if self.tensors[i].shape() != t.shape() {
                return Err(invalid_arg!(
                    "parameter {name:?}: shape {:?}, expected {:?}",
                    t.shape(),
                    self.tensors[i].shape()
                ));
            }
            self.tensors[i] = t;
            seen += 1;
        }
        if seen != self.tensors.len() {
            return Err(invalid_arg!("expected {} parameters, got {seen}", self.tensors.len()));
        }
        Ok(())
    }

    /// Puts every parameter on `tape` as a leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound { vars: self.tensors.iter().map(|t| tape.leaf(t.clone())).collect() }
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Tape handles of a [`ParamStore`]'s parameters.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    /// Wraps existing tape handles, in [`ParamStore`] registration order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }

    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Per-parameter gradients, zero where a parameter was unused.
    pub fn gradients(&self, store: &ParamStore, grads: &Gradients) -> Vec<Tensor> {
        self.vars
            .iter()
            .zip(store.tensors())
            .map(|(v, t)| grads.get_or_zeros(*v, t.shape()))
            .collect()
    }
}
