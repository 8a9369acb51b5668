use crate::models::layers::{Fire, Layer};
use crate::models::{Architecture, Model, ModelError};
use crate::nn::{Conv2d, Dense, MaxPool2d, NnError, Padding};
use crate::rng::RngState;
use crate::tensor::Scalar;

/// Feature-map sizes of one fire module.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FireModuleConfig {
    pub squeeze_fm: usize,
    pub expand_fm: usize,
}

impl FireModuleConfig {
    pub const fn new(squeeze_fm: usize, expand_fm: usize) -> Self {
        Self { squeeze_fm, expand_fm }
    }

    pub const fn out_channels(&self) -> usize {
        2 * self.expand_fm
    }
}

pub const CONV1_FEATURE_MAPS: usize = 16;
pub const FIRE1: FireModuleConfig = FireModuleConfig::new(4, 16);
pub const FIRE2: FireModuleConfig = FireModuleConfig::new(4, 16);
pub const FIRE3: FireModuleConfig = FireModuleConfig::new(8, 32);
pub const FIRE4: FireModuleConfig = FireModuleConfig::new(8, 32);
pub const HEAD_DROPOUT: f64 = 0.5;

/// Closed-form parameter count of the simplified SqueezeNet.
pub fn squeezenet_param_count(input_channels: usize, classes: usize) -> usize {
    let conv1 = CONV1_FEATURE_MAPS * 9 * input_channels + CONV1_FEATURE_MAPS;
    let fire = |in_c: usize, f: FireModuleConfig| {
        (in_c * f.squeeze_fm + f.squeeze_fm)
            + (f.squeeze_fm * f.expand_fm + f.expand_fm)
            + (9 * f.squeeze_fm * f.expand_fm + f.expand_fm)
    };
    conv1
        + fire(CONV1_FEATURE_MAPS, FIRE1)
        + fire(FIRE1.out_channels(), FIRE2)
        + fire(FIRE2.out_channels(), FIRE3)
        + fire(FIRE3.out_channels(), FIRE4)
        + FIRE4.out_channels() * classes
        + classes
}

/// conv1 -> maxpool1 -> fire1..3 -> maxpool3 -> fire4 -> dropout -> conv5 -> global average pool.
///
/// Every convolution except conv5 is followed by mish (inside fire modules too).
pub fn build_simplified_squeezenet<T: Scalar>(
    input: [usize; 3],
    classes: usize,
    rng: &mut RngState,
) -> Result<Model<T>, ModelError> {
    let [h, w, c] = input;
    if h == 0 || w == 0 || c == 0 || classes == 0 {
        return Err(ModelError::InvalidArgument(
            "input extents and class count must be positive".into(),
        ));
    }
    let mut shape = (h, w, c);
    let mut layers = Vec::new();
    let at = |name: &'static str| move |e: NnError| ModelError::InvalidArgument(format!("{name}: {e}"));

    let conv1 = Conv2d::new(c, CONV1_FEATURE_MAPS, 3, 2, Padding::Valid, rng).map_err(at("conv1"))?;
    shape = conv1.output_shape(shape.0, shape.1, shape.2).map_err(at("conv1"))?;
    layers.push(Layer::Conv(conv1));
    layers.push(Layer::Mish);

    let pool1 = MaxPool2d::new(3, 2).map_err(at("maxpool1"))?;
    shape = pool1.output_shape(shape.0, shape.1, shape.2).map_err(at("maxpool1"))?;
    layers.push(Layer::MaxPool(pool1));

    for cfg in [FIRE1, FIRE2, FIRE3] {
        let fire = Fire::new(shape.2, cfg.squeeze_fm, cfg.expand_fm, rng).map_err(at("fire"))?;
        shape.2 = fire.out_channels();
        layers.push(Layer::Fire(fire));
    }

    let pool3 = MaxPool2d::new(3, 2).map_err(at("maxpool3"))?;
    shape = pool3.output_shape(shape.0, shape.1, shape.2).map_err(at("maxpool3"))?;
    layers.push(Layer::MaxPool(pool3));

    let fire4 = Fire::new(shape.2, FIRE4.squeeze_fm, FIRE4.expand_fm, rng).map_err(at("fire4"))?;
    shape.2 = fire4.out_channels();
    layers.push(Layer::Fire(fire4));
    layers.push(Layer::Dropout(HEAD_DROPOUT));

    let conv5 = Conv2d::new(shape.2, classes, 1, 1, Padding::Valid, rng).map_err(at("conv5"))?;
    layers.push(Layer::Conv(conv5));
    layers.push(Layer::GlobalAvgPool);

    let dropout_rng = rng.derive("dropout");
    Ok(Model::from_layers(
        Architecture::SqueezeNet { input, classes },
        layers,
        dropout_rng,
    ))
}

/// flatten -> dense(hidden, mish) -> dense(classes).
pub fn build_mlp<T: Scalar>(
    input_dim: usize,
    hidden: usize,
    classes: usize,
    rng: &mut RngState,
) -> Result<Model<T>, ModelError> {
    if input_dim == 0 || hidden == 0 || classes == 0 {
        return Err(ModelError::InvalidArgument("mlp dimensions must be at least 1".into()));
    }
    let layers = vec![
        Layer::Flatten,
        Layer::Dense(Dense::new(input_dim, hidden, rng)?),
        Layer::Mish,
        Layer::Dense(Dense::new(hidden, classes, rng)?),
    ];
    let dropout_rng = rng.derive("dropout");
    Ok(Model::from_layers(
        Architecture::Mlp { input_dim, hidden, classes },
        layers,
        dropout_rng,
    ))
}
