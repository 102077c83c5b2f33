use alloc::vec::Vec;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::math::abs;

/// Gradients smaller than this in both routes count as agreeing.
const NEGLIGIBLE: f64 = 1e-7;

/// Largest relative disagreement between tape gradients and central
/// differences of `f` at `params`.
///
/// Per component the error is `|a - n| / max(|a|, |n|)`, where `a` is the
/// tape gradient and `n` the finite difference; components with both below
/// `1e-7` contribute `|a - n| / 1e-7` instead, which is tiny when both are
/// effectively zero.
pub fn grad_check<F>(f: F, params: &[Tensor], epsilon: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    grad_check_on(f, params, epsilon, Tape::new)
}

pub(crate) fn grad_check_on<F>(f: F, params: &[Tensor], epsilon: f64, new_tape: fn() -> Tape) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };
    let mut tape = new_tape();
    let vars: Vec<Var> = params.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let mut worst: f64 = 0.0;
    let mut probe = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[pi], p.shape());
        for k in 0..p.len() {
            let orig = p.data()[k];
            probe[pi].data_mut()[k] = orig + epsilon;
            let up = eval(&probe)?;
            probe[pi].data_mut()[k] = orig - epsilon;
            let down = eval(&probe)?;
            probe[pi].data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic.data()[k];
            if !numeric.is_finite() {
                return Err(Error::NumericOverflow("grad_check"));
            }
            let scale = abs(a).max(abs(numeric)).max(NEGLIGIBLE);
            worst = worst.max(abs(a - numeric) / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tanh_sum(t: &mut Tape, v: &[Var]) -> Result<Var> {
        let y = t.tanh(v[0])?;
        t.sum_all(y)
    }

    #[test]
    fn linear_function_is_exact() {
        let x = Tensor::matrix(2, 2, vec![0.3, -1.2, 2.0, 0.7]).unwrap();
        let err = grad_check(
            |t, v| {
                let y = t.scale(v[0], 3.0)?;
                t.sum_all(y)
            },
            &[x],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn corrupted_backward_rule_is_caught() {
        let x = Tensor::matrix(1, 3, vec![0.3, -0.4, 0.9]).unwrap();
        let clean = grad_check(tanh_sum, std::slice::from_ref(&x), 1e-6).unwrap();
        assert!(clean < 1e-4);
        let faulty = || {
            let mut t = Tape::new();
            t.corrupt_tanh = true;
            t
        };
        let err = grad_check_on(tanh_sum, &[x], 1e-6, faulty).unwrap();
        assert!(err > 1e-2, "{err}");
    }
}
