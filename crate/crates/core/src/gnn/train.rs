use std::io::Write;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{forward, loss_and_grads, tokenize_labels, CpGcnModel, GraphInputs, TokenVector};
use crate::error::{Error, Result};
use crate::eval::{evaluate, Subset};
use crate::graph::{LabelVector, RoadGraph, Split};

/// Number of classes (incident / no incident).
pub const NUM_CLASSES: usize = 2;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Fraction of all nodes whose token is reset to uncertain each epoch.
    pub mask_rate: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub use_cp: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mask_rate: 0.25,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            hidden_dim: 16,
            seed: 0,
            use_cp: true,
        }
    }
}

fn check_mask_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0 && rate < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "mask rate {rate} outside (0, 0.5)"
        )));
    }
    Ok(())
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        check_mask_rate(self.mask_rate)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight decay {} must be non-negative",
                self.weight_decay
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draws `floor(rate · n)` distinct node ids uniformly from `0..n`, sorted.
pub fn sample_mask(n: usize, rate: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    check_mask_rate(rate)?;
    let m = (rate * n as f64).floor() as usize;
    let mut picked = rand::seq::index::sample(rng, n, m).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// The generator for epoch `epoch`'s mask depends only on `(seed, epoch)`.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 belongs to weight initialization
    rng.set_stream(epoch as u64 + 1);
    rng
}

/// Loss and validation F1 after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CpGcnModel,
    pub history: Vec<EpochRecord>,
}

/// Full-batch gradient descent with L2 weight decay folded into the gradient.
///
/// Every epoch draws a fresh mask, tokenizes the train labels around it and
/// steps on the mean cross-entropy of the train nodes. The baseline
/// (`use_cp = false`) never sees labels through its inputs.
pub fn train(graph: &RoadGraph, labels: &LabelVector, split: &Split, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_inputs(&GraphInputs::new(graph), labels, split, config)
}

pub fn train_with_inputs(
    inputs: &GraphInputs,
    labels: &LabelVector,
    split: &Split,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.check()?;
    labels.ensure_len(inputs.num_nodes())?;
    split.check(labels)?;
    if split.train.is_empty() {
        return Err(Error::EmptySet("train"));
    }
    let n = inputs.num_nodes();

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = CpGcnModel::init(
        inputs.features.ncols(),
        config.hidden_dim,
        NUM_CLASSES,
        config.use_cp,
        &mut init_rng,
    );
    let full_tokens = config
        .use_cp
        .then(|| tokenize_labels(labels, split, &[]))
        .transpose()?;

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let tokens = if config.use_cp {
            let mask = sample_mask(n, config.mask_rate, &mut epoch_rng(config.seed, epoch))?;
            Some(tokenize_labels(labels, split, &mask)?)
        } else {
            None
        };
        let (loss, grads) = loss_and_grads(&model, inputs, tokens.as_ref(), labels, &split.train)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        for ((_, p), (_, g)) in model.tensors_mut().into_iter().zip(grads.tensors()) {
            for (p, &g) in p.iter_mut().zip(g) {
                *p -= config.learning_rate * (g + config.weight_decay * *p);
            }
        }
        if !model.is_finite() {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }

        let val_f1 = if split.valid.is_empty() {
            None
        } else {
            let probs = probabilities(&model, inputs, full_tokens.as_ref())?;
            if probs.iter().any(|p| !p.is_finite()) {
                return Err(Error::Diverged { epoch, loss: f64::NAN });
            }
            Some(evaluate(&probs, labels, split, Subset::Valid)?.f1)
        };
        history.push(EpochRecord { epoch, loss, val_f1 });
    }
    Ok(TrainOutcome { model, history })
}

fn probabilities(model: &CpGcnModel, inputs: &GraphInputs, tokens: Option<&TokenVector>) -> Result<Array2<f64>> {
    Ok(forward(model, inputs, tokens)?.log_probs.mapv(f64::exp))
}

/// Class probabilities for every node from one unmasked forward pass.
///
/// For a token model only the train labels are tokenized; valid and test
/// nodes carry the uncertain token, so their stored labels never reach the
/// network.
pub fn predict(model: &CpGcnModel, inputs: &GraphInputs, labels: &LabelVector, split: &Split) -> Result<Array2<f64>> {
    let tokens = model
        .uses_cp()
        .then(|| tokenize_labels(labels, split, &[]))
        .transpose()?;
    probabilities(model, inputs, tokens.as_ref())
}

/// Writes `epoch,loss,val_f1` rows.
pub fn write_history_csv(history: &[EpochRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,loss,val_f1")?;
    for r in history {
        match r.val_f1 {
            Some(f) => writeln!(w, "{},{},{}", r.epoch, r.loss, f)?,
            None => writeln!(w, "{},{},", r.epoch, r.loss)?,
        }
    }
    Ok(())
}
