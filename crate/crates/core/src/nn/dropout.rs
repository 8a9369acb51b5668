use crate::nn::{Mode, NnError};
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

/// Inverted dropout. Returns the output and, in train mode with a nonzero
/// rate, the per-element scale mask (0 or `1/(1-rate)`) needed for backward.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut RngState,
) -> Result<(Tensor<T>, Option<Vec<T>>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidArgument(format!("dropout rate {rate} not in [0, 1)")));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len())
        .map(|_| if rng.next_f64() < rate { T::zero() } else { keep })
        .collect();
    let mut out = input.clone();
    for (o, &m) in out.data_mut().iter_mut().zip(&mask) {
        *o = *o * m;
    }
    Ok((out, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(mask: Option<&[T]>, grad_out: &Tensor<T>) -> Tensor<T> {
    let mut g = grad_out.clone();
    if let Some(mask) = mask {
        for (g, &m) in g.data_mut().iter_mut().zip(mask) {
            *g = *g * m;
        }
    }
    g
}
