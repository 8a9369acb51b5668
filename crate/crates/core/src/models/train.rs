use serde::{Deserialize, Serialize};

use crate::data::LabeledExample;
use crate::models::{Adam, Model, ModelError};
use crate::nn::AdamConfig;
use crate::rng::RngState;
use crate::tensor::Scalar;

/// Which epoch metric decides the retained checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Loss,
    ValLoss,
}

/// Supervised training settings. The loss is always sparse categorical cross-entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_ratio: f64,
    pub monitor: Monitor,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl TrainSettings {
    /// Online-learning model column of the training-settings table.
    pub fn semi_training() -> Self {
        Self {
            epochs: 10,
            batch_size: 1,
            validation_ratio: 0.0,
            monitor: Monitor::Loss,
            adam: AdamConfig::default(),
        }
    }

    /// Label-generator column of the training-settings table.
    pub fn teacher_pretraining() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            validation_ratio: 0.2,
            monitor: Monitor::ValLoss,
            adam: AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidArgument("epochs and batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_ratio) {
            return Err(ModelError::InvalidArgument(format!(
                "validation_ratio {} not in [0, 1)",
                self.validation_ratio
            )));
        }
        let has_val = self.validation_ratio > 0.0;
        if has_val != (self.monitor == Monitor::ValLoss) {
            return Err(ModelError::InvalidArgument(
                "validation_ratio > 0 is required exactly when monitoring val_loss".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

impl EpochStats {
    fn monitored(&self, monitor: Monitor) -> f64 {
        match monitor {
            Monitor::Loss => self.loss,
            Monitor::ValLoss => self.val_loss.unwrap_or(f64::INFINITY),
        }
    }
}

/// Parameters retained by the checkpoint rule.
#[derive(Clone, Debug, PartialEq)]
pub struct BestCheckpoint<T> {
    pub epoch: usize,
    pub monitored: f64,
    pub params: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct FitOutcome<T> {
    pub history: Vec<EpochStats>,
    pub best: BestCheckpoint<T>,
    pub optimizer_steps: u64,
    pub train_size: usize,
    pub validation_size: usize,
}

/// Splits indices into (train, validation) with per-class quotas proportional
/// to class frequency (largest-remainder rounding, lowest class wins ties).
pub fn stratified_split(labels: &[usize], ratio: f64, rng: &mut RngState) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let n_val = ((n as f64) * ratio + 1e-9).floor() as usize;
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut quota: Vec<usize> = Vec::with_capacity(classes);
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(classes);
    for (c, members) in by_class.iter().enumerate() {
        let exact = members.len() as f64 * n_val as f64 / n.max(1) as f64;
        quota.push(exact.floor() as usize);
        remainders.push((exact - exact.floor(), c));
    }
    let mut missing = n_val - quota.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().cycle().take(classes * 2) {
        if missing == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            missing -= 1;
        }
    }
    let mut train = Vec::with_capacity(n - n_val);
    let mut val = Vec::with_capacity(n_val);
    for (members, &q) in by_class.iter_mut().zip(&quota) {
        rng.shuffle(members);
        val.extend_from_slice(&members[..q]);
        train.extend_from_slice(&members[q..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn evaluate<T: Scalar>(model: &Model<T>, examples: &[LabeledExample], idx: &[usize]) -> Result<(f64, f64), ModelError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let ex = &examples[i];
        let logits = model.infer(&ex.image.cast())?;
        loss += crate::nn::scc_loss(&logits, ex.label)?.as_f64();
        correct += usize::from(logits.argmax() == ex.label);
    }
    let n = idx.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Shuffled mini-batch training with best-epoch retention.
///
/// Batch gradients are the mean of per-example gradients. After each epoch
/// the monitored value is compared with the best so far; strictly better
/// values replace the retained parameters, so ties keep the earlier epoch.
/// On return the model holds the retained parameters.
pub fn fit<T: Scalar>(
    model: &mut Model<T>,
    examples: &[LabeledExample],
    settings: &TrainSettings,
    rng: &mut RngState,
) -> Result<FitOutcome<T>, ModelError> {
    fit_with_progress(model, examples, settings, rng, |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_with_progress<T: Scalar>(
    model: &mut Model<T>,
    examples: &[LabeledExample],
    settings: &TrainSettings,
    rng: &mut RngState,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<FitOutcome<T>, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::InvalidArgument("cannot fit on an empty dataset".into()));
    }
    settings.validate()?;
    if let Some(bad) = examples.iter().find(|e| e.label >= model.num_classes()) {
        return Err(ModelError::InvalidArgument(format!(
            "label {} out of range for {} classes",
            bad.label,
            model.num_classes()
        )));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    let (mut train_idx, val_idx) = if settings.validation_ratio > 0.0 {
        stratified_split(&labels, settings.validation_ratio, rng)
    } else {
        ((0..examples.len()).collect(), Vec::new())
    };
    if train_idx.is_empty() {
        return Err(ModelError::InvalidArgument("validation split left no training examples".into()));
    }
    let inputs: Vec<_> = examples.iter().map(|e| e.image.cast::<T>()).collect();

    let mut optimizer = Adam::new(settings.adam);
    let mut history = Vec::with_capacity(settings.epochs);
    let mut best: Option<BestCheckpoint<T>> = None;

    for epoch in 1..=settings.epochs {
        rng.shuffle(&mut train_idx);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in train_idx.chunks(settings.batch_size) {
            model.zero_grad();
            let scale = T::lit(1.0 / batch.len() as f64);
            for &i in batch {
                let (loss, logits) = model.accumulate_gradients(&inputs[i], labels[i], scale)?;
                loss_sum += loss.as_f64();
                correct += usize::from(logits.argmax() == labels[i]);
            }
            optimizer.step(model)?;
        }
        let n = train_idx.len() as f64;
        let (val_loss, val_accuracy) = if val_idx.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate(model, examples, &val_idx)?;
            (Some(l), Some(a))
        };
        let stats = EpochStats {
            epoch,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        };
        let value = stats.monitored(settings.monitor);
        if best.as_ref().map_or(true, |b| value < b.monitored) {
            best = Some(BestCheckpoint {
                epoch,
                monitored: value,
                params: model.flat_params(),
            });
        }
        on_epoch(&stats);
        history.push(stats);
    }

    let best = best.expect("at least one epoch");
    model.set_flat_params(&best.params)?;
    Ok(FitOutcome {
        history,
        best,
        optimizer_steps: optimizer.steps(),
        train_size: train_idx.len(),
        validation_size: val_idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_mlp;
    use crate::tensor::Tensor;

    fn toy_set(n_per_class: usize, classes: usize) -> Vec<LabeledExample> {
        let mut rng = RngState::new(99);
        let mut out = Vec::new();
        for c in 0..classes {
            for _ in 0..n_per_class {
                let mut v = vec![0.0f32; classes];
                v[c] = 1.0;
                for x in &mut v {
                    *x += 0.1 * rng.normal() as f32;
                }
                out.push(LabeledExample { image: Tensor::from_vec(v), label: c });
            }
        }
        out
    }

    #[test]
    fn seven_examples_ten_epochs_batch_one_is_seventy_steps() {
        let data = toy_set(1, 7);
        let mut model: Model = build_mlp(7, 8, 7, &mut RngState::new(0)).unwrap();
        let out = fit(&mut model, &data, &TrainSettings::semi_training(), &mut RngState::new(1)).unwrap();
        assert_eq!(out.optimizer_steps, 70);
        assert_eq!(out.history.len(), 10);
    }

    #[test]
    fn twenty_percent_validation_of_thousand() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 7).collect();
        let (train, val) = stratified_split(&labels, 0.2, &mut RngState::new(0));
        assert_eq!((train.len(), val.len()), (800, 200));
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        // Per-class validation counts differ by at most one from proportional.
        for c in 0..7 {
            let count = val.iter().filter(|&&i| labels[i] == c).count();
            let total = labels.iter().filter(|&&l| l == c).count();
            assert!((count as f64 - total as f64 * 0.2).abs() <= 1.0);
        }
    }

    #[test]
    fn best_checkpoint_never_worse_than_last_epoch() {
        let data = toy_set(20, 3);
        for monitor in [Monitor::Loss, Monitor::ValLoss] {
            let settings = TrainSettings {
                epochs: 6,
                batch_size: 4,
                validation_ratio: if monitor == Monitor::ValLoss { 0.25 } else { 0.0 },
                monitor,
                adam: AdamConfig::default(),
            };
            let mut model: Model = build_mlp(3, 6, 3, &mut RngState::new(2)).unwrap();
            let out = fit(&mut model, &data, &settings, &mut RngState::new(3)).unwrap();
            let last = out.history.last().unwrap().monitored(monitor);
            assert!(out.best.monitored <= last);
            let min = out.history.iter().map(|h| h.monitored(monitor)).fold(f64::INFINITY, f64::min);
            assert_eq!(out.best.monitored, min);
            assert_eq!(model.flat_params(), out.best.params);
            if monitor == Monitor::ValLoss {
                assert_eq!(out.validation_size, 15);
                assert!(out.history.iter().all(|h| h.val_loss.is_some()));
            }
        }
    }

    #[test]
    fn settings_validation() {
        let mut s = TrainSettings::semi_training();
        assert!(s.validate().is_ok());
        s.monitor = Monitor::ValLoss;
        assert!(s.validate().is_err());
        assert!(TrainSettings::teacher_pretraining().validate().is_ok());
        let mut t = TrainSettings::teacher_pretraining();
        t.validation_ratio = 1.0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut model: Model = build_mlp(3, 4, 2, &mut RngState::new(0)).unwrap();
        let r = fit(&mut model, &[], &TrainSettings::semi_training(), &mut RngState::new(0));
        assert!(matches!(r, Err(ModelError::InvalidArgument(_))));
    }
}
