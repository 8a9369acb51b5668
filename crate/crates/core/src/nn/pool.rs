use crate::nn::NnError;
use crate::tensor::{Scalar, Tensor};

/// Valid-padded max pooling over HWC tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaxPool2d {
    pub pool: usize,
    pub stride: usize,
}

impl MaxPool2d {
    pub fn new(pool: usize, stride: usize) -> Result<Self, NnError> {
        if pool == 0 || stride == 0 {
            return Err(NnError::InvalidArgument("pool size and stride must be positive".into()));
        }
        Ok(Self { pool, stride })
    }

    pub fn output_shape(&self, h: usize, w: usize, c: usize) -> Result<(usize, usize, usize), NnError> {
        if h < self.pool || w < self.pool {
            return Err(NnError::InvalidArgument(format!(
                "{p}x{p} pool larger than {h}x{w} input",
                p = self.pool
            )));
        }
        Ok(((h - self.pool) / self.stride + 1, (w - self.pool) / self.stride + 1, c))
    }

    /// Returns the pooled tensor and, per output element, the flat input index
    /// of the first (row-major) maximum in its window.
    pub fn forward<T: Scalar>(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), NnError> {
        let (h, w, c) = input.hwc()?;
        let (oh, ow, _) = self.output_shape(h, w, c)?;
        let x = input.data();
        let mut out = Vec::with_capacity(oh * ow * c);
        let mut argmax = Vec::with_capacity(oh * ow * c);
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = (oy * self.stride * w + ox * self.stride) * c + ch;
                    for py in 0..self.pool {
                        for px in 0..self.pool {
                            let idx = ((oy * self.stride + py) * w + ox * self.stride + px) * c + ch;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        Ok((Tensor::new(vec![oh, ow, c], out)?, argmax))
    }

    pub fn backward<T: Scalar>(
        &self,
        input_shape: &[usize],
        argmax: &[usize],
        grad_out: &Tensor<T>,
    ) -> Result<Tensor<T>, NnError> {
        if argmax.len() != grad_out.len() {
            return Err(NnError::InvalidArgument("pool gradient does not match forward".into()));
        }
        let mut gin = Tensor::zeros(input_shape.to_vec());
        let g = gin.data_mut();
        for (&idx, &gv) in argmax.iter().zip(grad_out.data()) {
            g[idx] = g[idx] + gv;
        }
        Ok(gin)
    }
}

/// Per-channel mean over all spatial positions: HWC -> C.
pub fn global_avg_pool<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (h, w, c) = input.hwc()?;
    let mut sums = vec![T::zero(); c];
    for px in input.data().chunks_exact(c) {
        for (s, &v) in sums.iter_mut().zip(px) {
            *s = *s + v;
        }
    }
    let n = T::lit((h * w) as f64);
    Ok(Tensor::from_vec(sums.into_iter().map(|s| s / n).collect()))
}

pub fn global_avg_pool_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let &[h, w, c] = input_shape else {
        return Err(NnError::InvalidArgument("global pool expects HWC input".into()));
    };
    if grad_out.len() != c {
        return Err(NnError::InvalidArgument("global pool gradient has wrong length".into()));
    }
    let n = T::lit((h * w) as f64);
    let per: Vec<T> = grad_out.data().iter().map(|&g| g / n).collect();
    let data = (0..h * w).flat_map(|_| per.iter().copied()).collect();
    Tensor::new(vec![h, w, c], data)
}
