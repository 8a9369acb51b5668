use crate::tensor::{Scalar, Tensor};

/// `ln(1 + e^x)`, linear above 20 where the correction is below f32 resolution.
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::lit(20.0) {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn mish_scalar<T: Scalar>(x: T) -> T {
    x * softplus(x).tanh()
}

fn mish_grad_scalar<T: Scalar>(x: T) -> T {
    let t = softplus(x).tanh();
    let sigmoid = T::one() / (T::one() + (-x).exp());
    t + x * (T::one() - t * t) * sigmoid
}

/// Elementwise `x * tanh(softplus(x))`.
pub fn mish<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(mish_scalar)
}

/// Gradient of [`mish`] given the forward input and upstream gradient.
pub fn mish_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let mut g = grad_out.clone();
    for (g, &x) in g.data_mut().iter_mut().zip(input.data()) {
        *g = *g * mish_grad_scalar(x);
    }
    g
}

/// Max-subtracted softmax over a flat logit vector.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let max = logits
        .data()
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.data().iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    Tensor::from_vec(exps.into_iter().map(|e| e / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;
    use crate::rng::RngState;
    use proptest::prelude::*;

    #[test]
    fn mish_reference_points() {
        let t = Tensor::from_vec(vec![0.0f64, 1.0, -20.0, 30.0]);
        let y = mish(&t);
        assert_eq!(y.data()[0], 0.0);
        // 1 * tanh(ln(1 + e))
        let expected = (1.0f64 + std::f64::consts::E).ln().tanh();
        assert!((y.data()[1] - expected).abs() < 1e-12);
        assert!((y.data()[1] - 0.865098).abs() < 1e-6);
        assert!(y.data()[2].abs() < 1e-7);
        assert!((y.data()[3] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn mish_gradient_matches_finite_differences() {
        let mut rng = RngState::new(21);
        for _ in 0..20 {
            let x = Tensor::from_vec((0..16).map(|_| rng.uniform(-4.0, 4.0)).collect::<Vec<f64>>());
            let r = Tensor::from_vec((0..16).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<f64>>());
            let err = finite_diff_check(
                |x| mish(x).data().iter().zip(r.data()).map(|(a, b)| a * b).sum(),
                |x| mish_backward(x, &r),
                &x,
                1e-4,
            );
            assert!(err < 1e-6, "relative error {err}");
        }
    }

    #[test]
    fn softmax_reference_values() {
        let p = softmax(&Tensor::from_vec(vec![0.0f64, 0.0]));
        assert_eq!(p.data(), &[0.5, 0.5]);
        let p = softmax(&Tensor::from_vec(vec![1.0f64, 2.0, 3.0]));
        let expected = [0.09003, 0.24473, 0.66524];
        for (a, b) in p.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in prop::collection::vec(-50.0f64..50.0, 1..12)) {
            let p = softmax(&Tensor::from_vec(z));
            let s: f64 = p.data().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            prop_assert!(p.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn softmax_shift_invariant(z in prop::collection::vec(-20.0f64..20.0, 2..8), c in -100.0f64..100.0) {
            let a = softmax(&Tensor::from_vec(z.clone()));
            let b = softmax(&Tensor::from_vec(z.iter().map(|x| x + c).collect()));
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
