//! Reverse-mode differentiation over [`Tensor`]s.
//!
//! A [`Tape`] is an arena: every operation appends a node holding its value
//! and the handles of its inputs, so node order is already a topological
//! order and [`Tape::backward`] is a single reverse sweep.

use alloc::vec;
use alloc::vec::Vec;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::{abs, exp, ln, sigmoid, tanh};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Matrix plus a `1 x cols` row broadcast over rows.
    AddRow(Var, Var),
    /// Matrix times a `rows x 1` column broadcast over columns.
    MulCol(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    SegmentSum(Var, Vec<usize>),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    SumAll(Var),
    MeanAll(Var),
    /// Prediction vs constant target, percent scale.
    Mape(Var, Tensor),
    Mse(Var, Tensor),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of a scalar with respect to every node of the tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`, or `None` when `v` does not influence the output.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for `v`, zeros when it does not influence the output.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Fault injection for gradient-check tests: doubles tanh gradients.
    #[cfg(test)]
    pub(crate) corrupt_tanh: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Registers an input (parameter or constant).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn push_checked(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        let value = value.ensure_finite(name)?;
        Ok(self.push(value, op))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push_checked(v, Op::MatMul(a, b), "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "add")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push_checked(v, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "sub")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push_checked(v, Op::Sub(a, b), "sub")
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "mul")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push_checked(v, Op::Mul(a, b), "mul")
    }

    /// `a + row` with `row` of shape `1 x cols(a)` repeated over the rows.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rows() != 1 || rv.cols() != av.cols() {
            return Err(invalid_arg!("add_row: {:?} + {:?}", av.shape(), rv.shape()));
        }
        let c = av.cols();
        let mut out = av.clone();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x += rv.data()[i % c];
        }
        self.push_checked(out, Op::AddRow(a, row), "add_row")
    }

    /// `a * col` with `col` of shape `rows(a) x 1` repeated over the columns.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (av, cv) = (self.value(a), self.value(col));
        if cv.cols() != 1 || cv.rows() != av.rows() {
            return Err(invalid_arg!("mul_col: {:?} * {:?}", av.shape(), cv.shape()));
        }
        let c = av.cols();
        let mut out = av.clone();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x *= cv.data()[i / c];
        }
        self.push_checked(out, Op::MulCol(a, col), "mul_col")
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let v = self.value(a).map(|x| x * k);
        self.push_checked(v, Op::Scale(a, k), "scale")
    }

    pub fn add_scalar(&mut self, a: Var, k: f64) -> Result<Var> {
        let v = self.value(a).map(|x| x + k);
        self.push_checked(v, Op::AddScalar(a), "add_scalar")
    }

    /// Column-wise concatenation of 2-D tensors with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(invalid_arg!("concat_cols: no inputs"));
        };
        let rows = self.value(*first).rows();
        let widths: Vec<usize> = parts.iter().map(|p| self.value(*p).cols()).collect();
        if parts.iter().any(|p| self.value(*p).rows() != rows) {
            return Err(invalid_arg!("concat_cols: row counts differ"));
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let v = Tensor::matrix(rows, total, data)?;
        Ok(self.push(v, Op::ConcatCols(parts.to_vec())))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = self.value(a);
        if start > end || end > av.cols() {
            return Err(invalid_arg!("slice_cols: {start}..{end} of {} columns", av.cols()));
        }
        let rows = av.rows();
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&av.row(r)[start..end]);
        }
        let v = Tensor::matrix(rows, end - start, data)?;
        Ok(self.push(v, Op::SliceCols(a, start)))
    }

    /// Row `indices[i]` of `a` becomes row `i` of the result.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let av = self.value(a);
        let rows = av.rows();
        if let Some(bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(invalid_arg!("gather_rows: index {bad} out of {rows} rows"));
        }
        let c = av.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(av.row(i));
        }
        let v = Tensor::matrix(indices.len(), c, data)?;
        Ok(self.push(v, Op::GatherRows(a, indices.to_vec())))
    }

    /// Row `i` of `a` is added into row `segment_ids[i]` of an
    /// `n_segments x cols` result.
    pub fn segment_sum(&mut self, a: Var, segment_ids: &[usize], n_segments: usize) -> Result<Var> {
        let av = self.value(a);
        if segment_ids.len() != av.rows() {
            return Err(invalid_arg!("segment_sum: {} ids for {} rows", segment_ids.len(), av.rows()));
        }
        if let Some(bad) = segment_ids.iter().find(|&&s| s >= n_segments) {
            return Err(invalid_arg!("segment_sum: segment {bad} out of {n_segments}"));
        }
        let c = av.cols();
        let mut out = Tensor::zeros(&[n_segments, c]);
        for (i, &s) in segment_ids.iter().enumerate() {
            let src = av.row(i);
            for (o, x) in out.data_mut()[s * c..(s + 1) * c].iter_mut().zip(src) {
                *o += x;
            }
        }
        self.push_checked(out, Op::SegmentSum(a, segment_ids.to_vec()), "segment_sum")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(sigmoid);
        self.push_checked(v, Op::Sigmoid(a), "sigmoid")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(tanh);
        self.push_checked(v, Op::Tanh(a), "tanh")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push_checked(v, Op::Relu(a), "relu")
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(exp);
        self.push_checked(v, Op::Exp(a), "exp")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(ln);
        self.push_checked(v, Op::Log(a), "log")
    }

    /// Sum of all elements as a `1 x 1` tensor.
    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let v = Tensor::scalar(self.value(a).sum());
        self.push_checked(v, Op::SumAll(a), "sum_all")
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.is_empty() {
            return Err(invalid_arg!("mean_all: empty tensor"));
        }
        let v = Tensor::scalar(av.sum() / av.len() as f64);
        self.push_checked(v, Op::MeanAll(a), "mean_all")
    }

    /// `100 / N * sum |pred - target| / |target|`. The subgradient at
    /// `pred == target` is zero.
    pub fn mape_loss(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let pv = self.value(pred);
        if pv.len() != target.len() || pv.is_empty() {
            return Err(invalid_arg!("mape_loss: {} predictions vs {} targets", pv.len(), target.len()));
        }
        if let Some(index) = target.data().iter().position(|&t| t == 0.0) {
            return Err(Error::DegenerateTarget { index });
        }
        let n = pv.len() as f64;
        let total: f64 = pv.data().iter().zip(target.data()).map(|(p, t)| abs((p - t) / t)).sum();
        let v = Tensor::scalar(100.0 * total / n);
        self.push_checked(v, Op::Mape(pred, target.clone()), "mape_loss")
    }

    /// Mean of squared differences.
    pub fn mse_loss(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let pv = self.value(pred);
        if pv.len() != target.len() || pv.is_empty() {
            return Err(invalid_arg!("mse_loss: {} predictions vs {} targets", pv.len(), target.len()));
        }
        let n = pv.len() as f64;
        let total: f64 = pv.data().iter().zip(target.data()).map(|(p, t)| (p - t) * (p - t)).sum();
        let v = Tensor::scalar(total / n);
        self.push_checked(v, Op::Mse(pred, target.clone()), "mse_loss")
    }

    /// Gradients of the scalar `output` with respect to every node.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        if self.value(output).len() != 1 {
            return Err(invalid_arg!("backward needs a scalar output, got {:?}", self.value(output).shape()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor::full(self.value(output).shape(), 1.0));
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let node = &self.nodes[idx];
        let out = &node.value;
        let mut acc = |v: Var, d: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(*a, g.matmul(&bv.transpose())?);
                acc(*b, av.transpose().matmul(g)?);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                acc(*a, g.zip_map(self.value(*b), |x, y| x * y));
                acc(*b, g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::AddRow(a, row) => {
                let c = g.cols();
                let mut dr = Tensor::zeros(self.value(*row).shape());
                for (i, x) in g.data().iter().enumerate() {
                    dr.data_mut()[i % c] += x;
                }
                acc(*a, g.clone());
                acc(*row, dr);
            }
            Op::MulCol(a, col) => {
                let c = g.cols();
                let (av, cv) = (self.value(*a), self.value(*col));
                let mut da = g.clone();
                let mut dc = Tensor::zeros(cv.shape());
                for (i, x) in da.data_mut().iter_mut().enumerate() {
                    dc.data_mut()[i / c] += *x * av.data()[i];
                    *x *= cv.data()[i / c];
                }
                acc(*a, da);
                acc(*col, dc);
            }
            Op::Scale(a, k) => acc(*a, g.map(|x| x * k)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::ConcatCols(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let mut data = Vec::with_capacity(rows * w);
                    for r in 0..rows {
                        data.extend_from_slice(&g.row(r)[offset..offset + w]);
                    }
                    acc(*p, Tensor::new(self.value(*p).shape().to_vec(), data)?);
                    offset += w;
                }
            }
            Op::SliceCols(a, start) => {
                let av = self.value(*a);
                let (c, w) = (av.cols(), g.cols());
                let mut d = Tensor::zeros(av.shape());
                for r in 0..g.rows() {
                    d.data_mut()[r * c + start..r * c + start + w].copy_from_slice(g.row(r));
                }
                acc(*a, d);
            }
            Op::GatherRows(a, indices) => {
                let av = self.value(*a);
                let c = av.cols();
                let mut d = Tensor::zeros(av.shape());
                for (i, &src) in indices.iter().enumerate() {
                    for (o, x) in d.data_mut()[src * c..(src + 1) * c].iter_mut().zip(g.row(i)) {
                        *o += x;
                    }
                }
                acc(*a, d);
            }
            Op::SegmentSum(a, ids) => {
                let av = self.value(*a);
                let mut data = Vec::with_capacity(av.len());
                for &s in ids {
                    data.extend_from_slice(g.row(s));
                }
                acc(*a, Tensor::new(av.shape().to_vec(), data)?);
            }
            Op::Sigmoid(a) => acc(*a, g.zip_map(out, |x, s| x * s * (1.0 - s))),
            Op::Tanh(a) => {
                #[cfg(test)]
                let k = if self.corrupt_tanh { 2.0 } else { 1.0 };
                #[cfg(not(test))]
                let k = 1.0;
                acc(*a, g.zip_map(out, |x, t| k * x * (1.0 - t * t)))
            }
            Op::Relu(a) => acc(*a, g.zip_map(self.value(*a), |x, y| if y > 0.0 { x } else { 0.0 })),
            Op::Exp(a) => acc(*a, g.zip_map(out, |x, e| x * e)),
            Op::Log(a) => acc(*a, g.zip_map(self.value(*a), |x, y| x / y)),
            Op::SumAll(a) => acc(*a, Tensor::full(self.value(*a).shape(), g.data()[0])),
            Op::MeanAll(a) => {
                let av = self.value(*a);
                acc(*a, Tensor::full(av.shape(), g.data()[0] / av.len() as f64));
            }
            Op::Mape(pred, target) => {
                let pv = self.value(*pred);
                let k = g.data()[0] * 100.0 / pv.len() as f64;
                let d = pv.zip_map(target, |p, t| {
                    let diff = p - t;
                    let sign = if diff > 0.0 {
                        1.0
                    } else if diff < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    k * sign / abs(t)
                });
                acc(*pred, d);
            }
            Op::Mse(pred, target) => {
                let pv = self.value(*pred);
                let k = g.data()[0] * 2.0 / pv.len() as f64;
                acc(*pred, pv.zip_map(target, |p, t| k * (p - t)));
            }
        }
        Ok(())
    }
}
