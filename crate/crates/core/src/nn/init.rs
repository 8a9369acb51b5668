use crate::nn::NnError;
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

/// He-uniform initialisation: every element uniform in `[-sqrt(6/fan_in), sqrt(6/fan_in)]`.
pub fn he_uniform_init<T: Scalar>(
    shape: Vec<usize>,
    fan_in: usize,
    rng: &mut RngState,
) -> Result<Tensor<T>, NnError> {
    if fan_in == 0 {
        return Err(NnError::InvalidArgument("fan_in must be at least 1".into()));
    }
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::lit(rng.uniform(-limit, limit)))
        .collect();
    Tensor::new(shape, data)
}
