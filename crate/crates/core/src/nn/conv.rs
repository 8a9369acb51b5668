use crate::nn::{he_uniform_init, NnError};
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Valid,
    /// Zero padding so that output extent is `ceil(in / stride)`; extra row/column goes bottom/right.
    Same,
}

/// 2-D convolution over HWC tensors. Kernel layout is `[k, k, in_c, out_c]`.
#[derive(Clone, Debug)]
pub struct Conv2d<T = f32> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_kernel: Tensor<T>,
    pub grad_bias: Tensor<T>,
    pub stride: usize,
    pub padding: Padding,
}

#[derive(Clone, Copy, Debug)]
struct Geometry {
    in_h: usize,
    in_w: usize,
    in_c: usize,
    out_h: usize,
    out_w: usize,
    out_c: usize,
    k: usize,
    stride: usize,
    pad_top: usize,
    pad_left: usize,
}

fn output_extent(input: usize, k: usize, stride: usize, padding: Padding) -> Option<(usize, usize)> {
    match padding {
        Padding::Valid => (input >= k).then(|| ((input - k) / stride + 1, 0)),
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + k).saturating_sub(input);
            Some((out, total / 2))
        }
    }
}

impl<T: Scalar> Conv2d<T> {
    /// He-uniform kernel, zero bias.
    pub fn new(
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        padding: Padding,
        rng: &mut RngState,
    ) -> Result<Self, NnError> {
        if in_c == 0 || out_c == 0 || k == 0 || stride == 0 {
            return Err(NnError::InvalidArgument(
                "conv2d dimensions and stride must be positive".into(),
            ));
        }
        let kernel = he_uniform_init(vec![k, k, in_c, out_c], k * k * in_c, rng)?;
        Self::from_parts(kernel, Tensor::zeros(vec![out_c]), stride, padding)
    }

    pub fn from_parts(
        kernel: Tensor<T>,
        bias: Tensor<T>,
        stride: usize,
        padding: Padding,
    ) -> Result<Self, NnError> {
        let (k, kw, _, out_c) = match kernel.shape() {
            &[a, b, c, d] => (a, b, c, d),
            s => {
                return Err(NnError::InvalidArgument(format!(
                    "conv kernel must be [k, k, in, out], got {s:?}"
                )))
            }
        };
        if k != kw {
            return Err(NnError::InvalidArgument("only square kernels are supported".into()));
        }
        if bias.shape() != [out_c] {
            return Err(NnError::InvalidArgument(format!(
                "bias shape {:?} does not match {out_c} output channels",
                bias.shape()
            )));
        }
        if stride == 0 {
            return Err(NnError::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(Self {
            grad_kernel: Tensor::zeros(kernel.shape().to_vec()),
            grad_bias: Tensor::zeros(vec![out_c]),
            kernel,
            bias,
            stride,
            padding,
        })
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[3]
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    /// Output HWC shape for a given input HWC shape.
    pub fn output_shape(&self, h: usize, w: usize, c: usize) -> Result<(usize, usize, usize), NnError> {
        let g = self.geometry(h, w, c)?;
        Ok((g.out_h, g.out_w, g.out_c))
    }

    fn geometry(&self, h: usize, w: usize, c: usize) -> Result<Geometry, NnError> {
        if c != self.in_channels() {
            return Err(NnError::InvalidArgument(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels()
            )));
        }
        let k = self.kernel_size();
        let too_big = || {
            NnError::InvalidArgument(format!("{k}x{k} kernel larger than {h}x{w} input"))
        };
        let (out_h, pad_top) = output_extent(h, k, self.stride, self.padding).ok_or_else(too_big)?;
        let (out_w, pad_left) = output_extent(w, k, self.stride, self.padding).ok_or_else(too_big)?;
        Ok(Geometry {
            in_h: h,
            in_w: w,
            in_c: c,
            out_h,
            out_w,
            out_c: self.out_channels(),
            k,
            stride: self.stride,
            pad_top,
            pad_left,
        })
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (h, w, c) = input.hwc()?;
        let g = self.geometry(h, w, c)?;
        let x = input.data();
        let kern = self.kernel.data();
        let mut out = vec![T::zero(); g.out_h * g.out_w * g.out_c];
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let acc = &mut out[(oy * g.out_w + ox) * g.out_c..][..g.out_c];
                acc.copy_from_slice(self.bias.data());
                for ky in 0..g.k {
                    let Some(iy) = (oy * g.stride + ky).checked_sub(g.pad_top).filter(|&v| v < g.in_h) else {
                        continue;
                    };
                    for kx in 0..g.k {
                        let Some(ix) = (ox * g.stride + kx).checked_sub(g.pad_left).filter(|&v| v < g.in_w) else {
                            continue;
                        };
                        let px = &x[(iy * g.in_w + ix) * g.in_c..][..g.in_c];
                        let kbase = (ky * g.k + kx) * g.in_c * g.out_c;
                        for (ci, &xv) in px.iter().enumerate() {
                            let wrow = &kern[kbase + ci * g.out_c..][..g.out_c];
                            for (a, &wv) in acc.iter_mut().zip(wrow) {
                                *a = *a + xv * wv;
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(vec![g.out_h, g.out_w, g.out_c], out)
    }

    /// Accumulates kernel/bias gradients and returns the input gradient.
    pub fn backward(&mut self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (h, w, c) = input.hwc()?;
        let g = self.geometry(h, w, c)?;
        if grad_out.shape() != [g.out_h, g.out_w, g.out_c] {
            return Err(NnError::InvalidArgument(format!(
                "conv gradient shape {:?} does not match output {:?}",
                grad_out.shape(),
                [g.out_h, g.out_w, g.out_c]
            )));
        }
        let x = input.data();
        let go = grad_out.data();
        let kern = self.kernel.data();
        let gk = self.grad_kernel.data_mut();
        let mut gin = vec![T::zero(); x.len()];
        for (gb, s) in self.grad_bias.data_mut().iter_mut().zip(sum_channels(go, g.out_c)) {
            *gb = *gb + s;
        }
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let grow = &go[(oy * g.out_w + ox) * g.out_c..][..g.out_c];
                for ky in 0..g.k {
                    let Some(iy) = (oy * g.stride + ky).checked_sub(g.pad_top).filter(|&v| v < g.in_h) else {
                        continue;
                    };
                    for kx in 0..g.k {
                        let Some(ix) = (ox * g.stride + kx).checked_sub(g.pad_left).filter(|&v| v < g.in_w) else {
                            continue;
                        };
                        let pix = (iy * g.in_w + ix) * g.in_c;
                        let kbase = (ky * g.k + kx) * g.in_c * g.out_c;
                        for ci in 0..g.in_c {
                            let xv = x[pix + ci];
                            let off = kbase + ci * g.out_c;
                            let wrow = &kern[off..][..g.out_c];
                            let gkrow = &mut gk[off..][..g.out_c];
                            let mut s = T::zero();
                            for ((gkv, &wv), &gv) in gkrow.iter_mut().zip(wrow).zip(grow) {
                                *gkv = *gkv + xv * gv;
                                s = s + wv * gv;
                            }
                            gin[pix + ci] = gin[pix + ci] + s;
                        }
                    }
                }
            }
        }
        Tensor::new(vec![h, w, c], gin)
    }

    pub fn zero_grad(&mut self) {
        self.grad_kernel.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }
}

fn sum_channels<T: Scalar>(data: &[T], channels: usize) -> Vec<T> {
    let mut out = vec![T::zero(); channels];
    for px in data.chunks_exact(channels) {
        for (o, &v) in out.iter_mut().zip(px) {
            *o = *o + v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;

    fn random(shape: Vec<usize>, rng: &mut RngState) -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
    }

    /// Direct definition of cross-correlation with explicit zero padding.
    fn naive_conv(x: &Tensor<f64>, kern: &Tensor<f64>, bias: &Tensor<f64>, stride: usize, pad: usize, out_hw: (usize, usize)) -> Vec<f64> {
        let (h, w, c) = x.hwc().unwrap();
        let k = kern.shape()[0];
        let oc = kern.shape()[3];
        let mut out = Vec::new();
        for oy in 0..out_hw.0 {
            for ox in 0..out_hw.1 {
                for o in 0..oc {
                    let mut s = bias.data()[o];
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            for ci in 0..c {
                                s += x.data()[(iy as usize * w + ix as usize) * c + ci]
                                    * kern.data()[((ky * k + kx) * c + ci) * oc + o];
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
        out
    }

    #[test]
    fn one_by_one_is_affine() {
        let conv = Conv2d::from_parts(
            Tensor::new(vec![1, 1, 1, 1], vec![2.5f64]).unwrap(),
            Tensor::from_vec(vec![-1.0]),
            1,
            Padding::Valid,
        )
        .unwrap();
        let y = conv.forward(&Tensor::new(vec![1, 1, 1], vec![4.0]).unwrap()).unwrap();
        assert_eq!(y.data(), &[9.0]);
    }

    #[test]
    fn strided_valid_output_shape() {
        let mut rng = RngState::new(0);
        let conv = Conv2d::<f32>::new(3, 16, 3, 2, Padding::Valid, &mut rng).unwrap();
        let y = conv.forward(&Tensor::zeros(vec![40, 40, 3])).unwrap();
        assert_eq!(y.shape(), &[19, 19, 16]);
    }

    #[test]
    fn same_padding_preserves_extent() {
        let mut rng = RngState::new(0);
        let conv = Conv2d::<f32>::new(4, 5, 3, 1, Padding::Same, &mut rng).unwrap();
        assert_eq!(conv.output_shape(7, 6, 4).unwrap(), (7, 6, 5));
    }

    #[test]
    fn kernel_larger_than_input_rejected() {
        let mut rng = RngState::new(0);
        let conv = Conv2d::<f32>::new(1, 1, 3, 1, Padding::Valid, &mut rng).unwrap();
        assert!(matches!(
            conv.forward(&Tensor::zeros(vec![2, 5, 1])),
            Err(NnError::InvalidArgument(_))
        ));
        assert!(conv.forward(&Tensor::zeros(vec![3, 3, 2])).is_err());
    }

    #[test]
    fn forward_matches_naive_definition() {
        let mut rng = RngState::new(4);
        for (stride, padding, pad) in [(1, Padding::Valid, 0), (2, Padding::Valid, 0), (1, Padding::Same, 1)] {
            let x = random(vec![6, 5, 2], &mut rng);
            let conv = Conv2d::from_parts(random(vec![3, 3, 2, 4], &mut rng), random(vec![4], &mut rng), stride, padding).unwrap();
            let y = conv.forward(&x).unwrap();
            let (oh, ow, _) = y.hwc().unwrap();
            let naive = naive_conv(&x, &conv.kernel, &conv.bias, stride, pad, (oh, ow));
            for (a, b) in y.data().iter().zip(naive) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngState::new(8);
        for trial in 0..20 {
            let (stride, padding) = match trial % 3 {
                0 => (1, Padding::Valid),
                1 => (2, Padding::Valid),
                _ => (1, Padding::Same),
            };
            let x = random(vec![5, 5, 2], &mut rng);
            let kernel = random(vec![3, 3, 2, 3], &mut rng);
            let bias = random(vec![3], &mut rng);
            let conv = Conv2d::from_parts(kernel.clone(), bias.clone(), stride, padding).unwrap();
            let (oh, ow, oc) = conv.output_shape(5, 5, 2).unwrap();
            let r = random(vec![oh, ow, oc], &mut rng);

            let input_err = finite_diff_check(
                |x| dot(&conv.forward(x).unwrap(), &r),
                |x| conv.clone().backward(x, &r).unwrap(),
                &x,
                1e-5,
            );
            let kernel_err = finite_diff_check(
                |k| {
                    let c = Conv2d::from_parts(k.clone(), bias.clone(), stride, padding).unwrap();
                    dot(&c.forward(&x).unwrap(), &r)
                },
                |k| {
                    let mut c = Conv2d::from_parts(k.clone(), bias.clone(), stride, padding).unwrap();
                    c.backward(&x, &r).unwrap();
                    c.grad_kernel
                },
                &kernel,
                1e-5,
            );
            let bias_err = finite_diff_check(
                |b| {
                    let c = Conv2d::from_parts(kernel.clone(), b.clone(), stride, padding).unwrap();
                    dot(&c.forward(&x).unwrap(), &r)
                },
                |b| {
                    let mut c = Conv2d::from_parts(kernel.clone(), b.clone(), stride, padding).unwrap();
                    c.backward(&x, &r).unwrap();
                    c.grad_bias
                },
                &bias,
                1e-5,
            );
            assert!(input_err < 1e-4, "input {input_err}");
            assert!(kernel_err < 1e-4, "kernel {kernel_err}");
            assert!(bias_err < 1e-4, "bias {bias_err}");
        }
    }
}
