use crate::nn::{softmax, NnError};
use crate::tensor::{Scalar, Tensor};

fn check_index<T: Scalar>(logits: &Tensor<T>, index: usize) -> Result<(), NnError> {
    if index >= logits.len() {
        return Err(NnError::InvalidArgument(format!(
            "class index {index} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(())
}

/// Sparse categorical cross-entropy `-log softmax(logits)[index]`, log-sum-exp stabilised.
pub fn scc_loss<T: Scalar>(logits: &Tensor<T>, index: usize) -> Result<T, NnError> {
    check_index(logits, index)?;
    let z = logits.data();
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    Ok(lse - z[index])
}

/// `softmax(logits) - onehot(index)`.
pub fn scc_loss_backward<T: Scalar>(logits: &Tensor<T>, index: usize) -> Result<Tensor<T>, NnError> {
    check_index(logits, index)?;
    let mut g = softmax(logits);
    g.data_mut()[index] = g.data()[index] - T::one();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;
    use crate::rng::RngState;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_ln_k() {
        let l = scc_loss(&Tensor::from_vec(vec![0.3f64; 7]), 4).unwrap();
        assert!((l - 7f64.ln()).abs() < 1e-12);
        assert!((l - 1.94591).abs() < 1e-5);
    }

    #[test]
    fn confident_true_class_gives_zero_loss() {
        let l = scc_loss(&Tensor::from_vec(vec![0.0f64, 1e4, 0.0]), 1).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(scc_loss(&Tensor::from_vec(vec![0.0f32; 3]), 3).is_err());
        assert!(scc_loss_backward(&Tensor::from_vec(vec![0.0f32; 3]), 7).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::new(5);
        for _ in 0..20 {
            let k = 2 + rng.below(6);
            let z = Tensor::from_vec((0..k).map(|_| rng.uniform(-3.0, 3.0)).collect::<Vec<f64>>());
            let idx = rng.below(k);
            let err = finite_diff_check(
                |z| scc_loss(z, idx).unwrap(),
                |z| scc_loss_backward(z, idx).unwrap(),
                &z,
                1e-5,
            );
            assert!(err < 1e-4, "{err}");
        }
    }

    proptest! {
        #[test]
        fn shift_invariant(z in prop::collection::vec(-10.0f64..10.0, 2..8), c in -50.0f64..50.0, pick in 0usize..8) {
            let idx = pick % z.len();
            let a = scc_loss(&Tensor::from_vec(z.clone()), idx).unwrap();
            let b = scc_loss(&Tensor::from_vec(z.iter().map(|v| v + c).collect()), idx).unwrap();
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
