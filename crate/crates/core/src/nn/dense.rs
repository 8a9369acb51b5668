use crate::nn::{he_uniform_init, NnError};
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

/// Fully connected layer on flat vectors; weights are `[in, out]`.
#[derive(Clone, Debug)]
pub struct Dense<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_weights: Tensor<T>,
    pub grad_bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, rng: &mut RngState) -> Result<Self, NnError> {
        if inputs == 0 || outputs == 0 {
            return Err(NnError::InvalidArgument("dense dimensions must be positive".into()));
        }
        let weights = he_uniform_init(vec![inputs, outputs], inputs, rng)?;
        Self::from_parts(weights, Tensor::zeros(vec![outputs]))
    }

    pub fn from_parts(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self, NnError> {
        let &[_, outputs] = weights.shape() else {
            return Err(NnError::InvalidArgument("dense weights must be [in, out]".into()));
        };
        if bias.shape() != [outputs] {
            return Err(NnError::InvalidArgument("dense bias length mismatch".into()));
        }
        Ok(Self {
            grad_weights: Tensor::zeros(weights.shape().to_vec()),
            grad_bias: Tensor::zeros(vec![outputs]),
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        if input.len() != self.inputs() {
            return Err(NnError::InvalidArgument(format!(
                "dense expects {} inputs, got {}",
                self.inputs(),
                input.len()
            )));
        }
        let out_n = self.outputs();
        let mut out = self.bias.data().to_vec();
        for (&x, row) in input.data().iter().zip(self.weights.data().chunks_exact(out_n)) {
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + x * w;
            }
        }
        Ok(Tensor::from_vec(out))
    }

    pub fn backward(&mut self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let out_n = self.outputs();
        if grad_out.len() != out_n || input.len() != self.inputs() {
            return Err(NnError::InvalidArgument("dense backward shape mismatch".into()));
        }
        let g = grad_out.data();
        for (b, &gv) in self.grad_bias.data_mut().iter_mut().zip(g) {
            *b = *b + gv;
        }
        let mut gin = Vec::with_capacity(input.len());
        for ((&x, row), grow) in input
            .data()
            .iter()
            .zip(self.weights.data().chunks_exact(out_n))
            .zip(self.grad_weights.data_mut().chunks_exact_mut(out_n))
        {
            let mut s = T::zero();
            for ((gw, &w), &gv) in grow.iter_mut().zip(row).zip(g) {
                *gw = *gw + x * gv;
                s = s + w * gv;
            }
            gin.push(s);
        }
        Tensor::new(input.shape().to_vec(), gin)
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngState::new(17);
        for _ in 0..20 {
            let layer = Dense::<f64>::new(5, 3, &mut rng).unwrap();
            let x = Tensor::from_vec((0..5).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>());
            let r = Tensor::from_vec((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>());
            let value = |l: &Dense<f64>, x: &Tensor<f64>| -> f64 {
                l.forward(x).unwrap().data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
            };
            let e_in = finite_diff_check(|x| value(&layer, x), |x| layer.clone().backward(x, &r).unwrap(), &x, 1e-5);
            let e_w = finite_diff_check(
                |w| value(&Dense::from_parts(w.clone(), layer.bias.clone()).unwrap(), &x),
                |w| {
                    let mut l = Dense::from_parts(w.clone(), layer.bias.clone()).unwrap();
                    l.backward(&x, &r).unwrap();
                    l.grad_weights
                },
                &layer.weights,
                1e-5,
            );
            assert!(e_in < 1e-4 && e_w < 1e-4, "{e_in} {e_w}");
        }
    }
}
