use crate::tensor::Tensor;

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares an analytic gradient with central differences of a scalar function.
///
/// `value` maps the input to a scalar, `analytic` returns the gradient of that
/// scalar with respect to the input. Returns the maximum elementwise
/// [`relative_error`].
pub fn finite_diff_check<F, G>(value: F, analytic: G, input: &Tensor<f64>, eps: f64) -> f64
where
    F: Fn(&Tensor<f64>) -> f64,
    G: Fn(&Tensor<f64>) -> Tensor<f64>,
{
    let grad = analytic(input);
    assert_eq!(grad.len(), input.len(), "gradient shape differs from input");
    let mut probe = input.clone();
    let mut worst = 0.0f64;
    for i in 0..input.len() {
        let orig = input.data()[i];
        probe.data_mut()[i] = orig + eps;
        let plus = value(&probe);
        probe.data_mut()[i] = orig - eps;
        let minus = value(&probe);
        probe.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(grad.data()[i], numeric));
    }
    worst
}
