use crate::nn::{
    dropout, dropout_backward, global_avg_pool, global_avg_pool_backward, mish, mish_backward, Conv2d, Dense,
    MaxPool2d, Mode, NnError, Padding,
};
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

/// Squeeze (1x1) followed by parallel 1x1 and 3x3 expands, concatenated on channels.
/// Every convolution is followed by mish.
#[derive(Clone, Debug)]
pub struct Fire<T = f32> {
    pub squeeze: Conv2d<T>,
    pub expand1: Conv2d<T>,
    pub expand3: Conv2d<T>,
}

impl<T: Scalar> Fire<T> {
    pub fn new(in_c: usize, squeeze_fm: usize, expand_fm: usize, rng: &mut RngState) -> Result<Self, NnError> {
        Ok(Self {
            squeeze: Conv2d::new(in_c, squeeze_fm, 1, 1, Padding::Valid, rng)?,
            expand1: Conv2d::new(squeeze_fm, expand_fm, 1, 1, Padding::Valid, rng)?,
            expand3: Conv2d::new(squeeze_fm, expand_fm, 3, 1, Padding::Same, rng)?,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.expand1.out_channels() + self.expand3.out_channels()
    }

    pub fn param_count(&self) -> usize {
        self.squeeze.param_count() + self.expand1.param_count() + self.expand3.param_count()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FireCache<T>), NnError> {
        let s_pre = self.squeeze.forward(x)?;
        let s = mish(&s_pre);
        let e1_pre = self.expand1.forward(&s)?;
        let e3_pre = self.expand3.forward(&s)?;
        let out = concat_channels(&mish(&e1_pre), &mish(&e3_pre))?;
        Ok((
            out,
            FireCache {
                input: x.clone(),
                s_pre,
                s,
                e1_pre,
                e3_pre,
            },
        ))
    }

    pub fn backward(&mut self, cache: &FireCache<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (g1, g3) = split_channels(grad_out, self.expand1.out_channels())?;
        let gs1 = self.expand1.backward(&cache.s, &mish_backward(&cache.e1_pre, &g1))?;
        let gs3 = self.expand3.backward(&cache.s, &mish_backward(&cache.e3_pre, &g3))?;
        let mut gs = gs1;
        for (a, &b) in gs.data_mut().iter_mut().zip(gs3.data()) {
            *a = *a + b;
        }
        self.squeeze.backward(&cache.input, &mish_backward(&cache.s_pre, &gs))
    }
}

#[derive(Clone, Debug)]
pub struct FireCache<T> {
    input: Tensor<T>,
    s_pre: Tensor<T>,
    s: Tensor<T>,
    e1_pre: Tensor<T>,
    e3_pre: Tensor<T>,
}

pub(crate) fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (h, w, ca) = a.hwc()?;
    let (hb, wb, cb) = b.hwc()?;
    if (h, w) != (hb, wb) {
        return Err(NnError::InvalidArgument("concat spatial extents differ".into()));
    }
    let mut out = Vec::with_capacity(h * w * (ca + cb));
    for (pa, pb) in a.data().chunks_exact(ca).zip(b.data().chunks_exact(cb)) {
        out.extend_from_slice(pa);
        out.extend_from_slice(pb);
    }
    Tensor::new(vec![h, w, ca + cb], out)
}

pub(crate) fn split_channels<T: Scalar>(x: &Tensor<T>, first: usize) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    let (h, w, c) = x.hwc()?;
    if first == 0 || first >= c {
        return Err(NnError::InvalidArgument("bad channel split".into()));
    }
    let mut a = Vec::with_capacity(h * w * first);
    let mut b = Vec::with_capacity(h * w * (c - first));
    for px in x.data().chunks_exact(c) {
        a.extend_from_slice(&px[..first]);
        b.extend_from_slice(&px[first..]);
    }
    Ok((Tensor::new(vec![h, w, first], a)?, Tensor::new(vec![h, w, c - first], b)?))
}

#[derive(Clone, Debug)]
pub enum Layer<T = f32> {
    Conv(Conv2d<T>),
    Mish,
    MaxPool(MaxPool2d),
    Fire(Fire<T>),
    Dropout(f64),
    GlobalAvgPool,
    Flatten,
    Dense(Dense<T>),
}

/// What a layer keeps from forward for its backward pass.
#[derive(Clone, Debug)]
pub enum Cache<T> {
    Input(Tensor<T>),
    Pool { input_shape: Vec<usize>, argmax: Vec<usize> },
    Mask(Option<Vec<T>>),
    Shape(Vec<usize>),
    Fire(Box<FireCache<T>>),
}

impl<T: Scalar> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv2d",
            Layer::Mish => "mish",
            Layer::MaxPool(_) => "maxpool2d",
            Layer::Fire(_) => "fire",
            Layer::Dropout(_) => "dropout",
            Layer::GlobalAvgPool => "global_avg_pool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Conv(c) => c.param_count(),
            Layer::Fire(f) => f.param_count(),
            Layer::Dense(d) => d.param_count(),
            _ => 0,
        }
    }

    pub fn forward(&self, x: &Tensor<T>, mode: Mode, rng: &mut RngState) -> Result<(Tensor<T>, Cache<T>), NnError> {
        Ok(match self {
            Layer::Conv(c) => (c.forward(x)?, Cache::Input(x.clone())),
            Layer::Mish => (mish(x), Cache::Input(x.clone())),
            Layer::MaxPool(p) => {
                let (y, argmax) = p.forward(x)?;
                (y, Cache::Pool { input_shape: x.shape().to_vec(), argmax })
            }
            Layer::Fire(f) => {
                let (y, cache) = f.forward(x)?;
                (y, Cache::Fire(Box::new(cache)))
            }
            Layer::Dropout(rate) => {
                let (y, mask) = dropout(x, *rate, mode, rng)?;
                (y, Cache::Mask(mask))
            }
            Layer::GlobalAvgPool => (global_avg_pool(x)?, Cache::Shape(x.shape().to_vec())),
            Layer::Flatten => (x.clone().reshape(vec![x.len()])?, Cache::Shape(x.shape().to_vec())),
            Layer::Dense(d) => (d.forward(x)?, Cache::Input(x.clone())),
        })
    }

    pub fn backward(&mut self, cache: &Cache<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        match (self, cache) {
            (Layer::Conv(c), Cache::Input(x)) => c.backward(x, grad_out),
            (Layer::Mish, Cache::Input(x)) => Ok(mish_backward(x, grad_out)),
            (Layer::MaxPool(p), Cache::Pool { input_shape, argmax }) => p.backward(input_shape, argmax, grad_out),
            (Layer::Fire(f), Cache::Fire(c)) => f.backward(c, grad_out),
            (Layer::Dropout(_), Cache::Mask(m)) => Ok(dropout_backward(m.as_deref(), grad_out)),
            (Layer::GlobalAvgPool, Cache::Shape(s)) => global_avg_pool_backward(s, grad_out),
            (Layer::Flatten, Cache::Shape(s)) => grad_out.clone().reshape(s.clone()),
            (Layer::Dense(d), Cache::Input(x)) => d.backward(x, grad_out),
            (layer, _) => Err(NnError::InvalidArgument(format!(
                "cache does not belong to a {} layer",
                layer.name()
            ))),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv(c) => vec![&c.kernel, &c.bias],
            Layer::Fire(f) => vec![
                &f.squeeze.kernel,
                &f.squeeze.bias,
                &f.expand1.kernel,
                &f.expand1.bias,
                &f.expand3.kernel,
                &f.expand3.bias,
            ],
            Layer::Dense(d) => vec![&d.weights, &d.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_and_grads_mut(&mut self) -> Vec<(&mut Tensor<T>, &mut Tensor<T>)> {
        match self {
            Layer::Conv(c) => vec![(&mut c.kernel, &mut c.grad_kernel), (&mut c.bias, &mut c.grad_bias)],
            Layer::Fire(f) => {
                let Fire { squeeze, expand1, expand3 } = f;
                let mut v = Vec::with_capacity(6);
                for c in [squeeze, expand1, expand3] {
                    v.push((&mut c.kernel, &mut c.grad_kernel));
                    v.push((&mut c.bias, &mut c.grad_bias));
                }
                v
            }
            Layer::Dense(d) => vec![(&mut d.weights, &mut d.grad_weights), (&mut d.bias, &mut d.grad_bias)],
            _ => Vec::new(),
        }
    }
}
