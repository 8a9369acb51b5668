use std::fmt;
use std::str::FromStr;

use crate::models::layers::{Cache, Layer};
use crate::models::optimizer::Adam;
use crate::models::ModelError;
use crate::nn::{scc_loss, scc_loss_backward, Mode};
use crate::rng::RngState;
use crate::tensor::{Scalar, Tensor};

/// What a model is, independent of its weights. Parameter count is a pure
/// function of this value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    SqueezeNet { input: [usize; 3], classes: usize },
    Mlp { input_dim: usize, hidden: usize, classes: usize },
}

impl Architecture {
    pub fn classes(&self) -> usize {
        match self {
            Architecture::SqueezeNet { classes, .. } | Architecture::Mlp { classes, .. } => *classes,
        }
    }

    /// Trainable parameter count, without building the model.
    pub fn param_count(&self) -> usize {
        match *self {
            Architecture::SqueezeNet { input, classes } => {
                crate::models::squeezenet_param_count(input[2], classes)
            }
            Architecture::Mlp { input_dim, hidden, classes } => {
                input_dim.saturating_mul(hidden).saturating_add(hidden).saturating_add(hidden.saturating_mul(classes)).saturating_add(classes)
            }
        }
    }

    /// Canonical text form stored in checkpoints.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }

    fn accepts(&self, shape: &[usize]) -> bool {
        match self {
            Architecture::SqueezeNet { input, .. } => shape == input,
            Architecture::Mlp { input_dim, .. } => shape.iter().product::<usize>() == *input_dim,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::SqueezeNet { input: [h, w, c], classes } => {
                write!(f, "squeezenet-v1 input={h}x{w}x{c} classes={classes}")
            }
            Architecture::Mlp { input_dim, hidden, classes } => {
                write!(f, "mlp-v1 input={input_dim} hidden={hidden} classes={classes}")
            }
        }
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadDescriptor(s.to_string());
        let mut parts = s.split(' ');
        let kind = parts.next().ok_or_else(bad)?;
        let mut field = |name: &str| -> Result<String, ModelError> {
            let p = parts.next().ok_or_else(bad)?;
            p.strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(bad)
        };
        let num = |v: String| v.parse::<usize>().map_err(|_| bad());
        let arch = match kind {
            "squeezenet-v1" => {
                let dims: Vec<usize> = field("input")?
                    .split('x')
                    .map(|d| d.parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                let input: [usize; 3] = dims.try_into().map_err(|_| bad())?;
                Architecture::SqueezeNet { input, classes: num(field("classes")?)? }
            }
            "mlp-v1" => Architecture::Mlp {
                input_dim: num(field("input")?)?,
                hidden: num(field("hidden")?)?,
                classes: num(field("classes")?)?,
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(arch)
    }
}

/// A layered network with its parameters and the generator used for dropout masks.
#[derive(Clone, Debug)]
pub struct Model<T = f32> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
    rng: RngState,
    mode: Mode,
}

impl<T: Scalar> Model<T> {
    pub(crate) fn from_layers(arch: Architecture, layers: Vec<Layer<T>>, rng: RngState) -> Self {
        Self {
            arch,
            layers,
            rng,
            mode: Mode::Infer,
        }
    }

    /// Builds the model described by `arch` with fresh weights.
    pub fn build(arch: &Architecture, rng: &mut RngState) -> Result<Self, ModelError> {
        match *arch {
            Architecture::SqueezeNet { input, classes } => {
                crate::models::build_simplified_squeezenet(input, classes, rng)
            }
            Architecture::Mlp { input_dim, hidden, classes } => {
                crate::models::build_mlp(input_dim, hidden, classes, rng)
            }
        }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn num_classes(&self) -> usize {
        self.arch.classes()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Restarts the dropout mask sequence from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = RngState::new(seed);
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    /// All parameters concatenated in layer order.
    pub fn flat_params(&self) -> Vec<T> {
        self.params().into_iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[T]) -> Result<(), ModelError> {
        if values.len() != self.param_count() {
            return Err(ModelError::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for (p, _) in layer.params_and_grads_mut() {
                let n = p.len();
                p.data_mut().copy_from_slice(&values[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    pub(crate) fn params_and_grads_mut(&mut self) -> Vec<(&mut Tensor<T>, &mut Tensor<T>)> {
        self.layers.iter_mut().flat_map(Layer::params_and_grads_mut).collect()
    }

    pub fn zero_grad(&mut self) {
        for (_, g) in self.params_and_grads_mut() {
            g.fill(T::zero());
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), ModelError> {
        if !self.arch.accepts(x.shape()) {
            return Err(ModelError::InvalidArgument(format!(
                "input shape {:?} does not fit {}",
                x.shape(),
                self.arch
            )));
        }
        Ok(())
    }

    fn run(
        &self,
        x: &Tensor<T>,
        mode: Mode,
        rng: &mut RngState,
        mut caches: Option<&mut Vec<Cache<T>>>,
    ) -> Result<Tensor<T>, ModelError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            let (y, cache) = layer.forward(&h, mode, rng)?;
            if let Some(c) = caches.as_deref_mut() {
                c.push(cache);
            }
            h = y;
        }
        if !h.all_finite() {
            return Err(ModelError::Nn(crate::nn::NnError::NonFinite("forward")));
        }
        Ok(h)
    }

    /// Inference-mode logits. Pure in `(parameters, input)`; safe to call through a shared reference.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        // Dropout ignores the generator in infer mode; a throwaway one keeps `self` untouched.
        self.run(x, Mode::Infer, &mut RngState::new(0), None)
    }

    /// Argmax class of [`Model::infer`], lowest index on ties.
    pub fn predict(&self, x: &Tensor<T>) -> Result<usize, ModelError> {
        Ok(self.infer(x)?.argmax())
    }

    /// Logits in the given mode; train mode draws dropout masks from the model's generator.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, ModelError> {
        match mode {
            Mode::Infer => self.infer(x),
            Mode::Train => {
                let mut rng = self.rng.clone();
                let out = self.run(x, Mode::Train, &mut rng, None);
                self.rng = rng;
                out
            }
        }
    }

    /// Train-mode forward plus backward of the SCC loss scaled by `scale`.
    /// Gradients are added to the accumulators; returns the unscaled loss and logits.
    pub fn accumulate_gradients(
        &mut self,
        x: &Tensor<T>,
        label: usize,
        scale: T,
    ) -> Result<(T, Tensor<T>), ModelError> {
        if label >= self.num_classes() {
            return Err(ModelError::InvalidArgument(format!(
                "label {label} out of range for {} classes",
                self.num_classes()
            )));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut rng = self.rng.clone();
        let logits = self.run(x, Mode::Train, &mut rng, Some(&mut caches))?;
        self.rng = rng;
        let loss = scc_loss(&logits, label)?;
        let mut grad = scc_loss_backward(&logits, label)?;
        if scale != T::one() {
            grad = grad.map(|g| g * scale);
        }
        for (layer, cache) in self.layers.iter_mut().zip(&caches).rev() {
            grad = layer.backward(cache, &grad)?;
        }
        Ok((loss, logits))
    }

    /// One single-example update: zero grads, forward/backward, one Adam step.
    /// Returns the loss before the update.
    pub fn train_step(&mut self, x: &Tensor<T>, label: usize, optimizer: &mut Adam<T>) -> Result<T, ModelError> {
        Ok(self.train_step_with_logits(x, label, optimizer)?.0)
    }

    /// Like [`Model::train_step`], also returning the pre-update train-mode logits.
    pub fn train_step_with_logits(
        &mut self,
        x: &Tensor<T>,
        label: usize,
        optimizer: &mut Adam<T>,
    ) -> Result<(T, Tensor<T>), ModelError> {
        self.zero_grad();
        let out = self.accumulate_gradients(x, label, T::one())?;
        optimizer.step(self)?;
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let mut out = Model::<U>::build(&self.arch, &mut RngState::new(0)).expect("architecture already validated");
        let values: Vec<U> = self.flat_params().into_iter().map(|v| U::lit(v.as_f64())).collect();
        out.set_flat_params(&values).expect("same architecture");
        out.rng = self.rng.clone();
        out.mode = self.mode;
        out
    }
}
