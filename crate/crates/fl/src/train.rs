//! Local SGD: the per-round optimization every learner runs on its own
//! data shard. Updates follow `w <- w - lr * grad(F_k(w; batch))` with the
//! shard reshuffled each epoch from the caller's seeded RNG.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::LabeledDataset;
use crate::mlp::MlpModel;
use crate::{FlError, Result};

/// Local training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerSpec {
    /// Local epochs per federation round. Zero is allowed as a testing hook
    /// (a no-op pass); federation configs validate E >= 1.
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl TrainerSpec {
    pub fn new(epochs: usize, learning_rate: f64, batch_size: usize) -> Result<Self> {
        if learning_rate < 0.0 || !learning_rate.is_finite() {
            return Err(FlError::InvalidConfig(format!(
                "learning rate {learning_rate} must be finite and non-negative"
            )));
        }
        if batch_size == 0 {
            return Err(FlError::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(Self {
            epochs,
            learning_rate,
            batch_size,
        })
    }

    /// Paper-default hyperparameters: E = 4, lr = 5e-5, batch = 1.
    pub fn paper_default() -> Self {
        Self {
            epochs: 4,
            learning_rate: 5e-5,
            batch_size: 1,
        }
    }
}

/// Runs `spec.epochs` of mini-batch SGD over the rows of `data` selected by
/// `indices`, returning the updated model. The final partial batch of each
/// epoch is used with its gradient averaged over its actual size.
pub fn local_sgd<R: Rng + ?Sized>(
    model: &MlpModel,
    data: &LabeledDataset,
    indices: &[usize],
    spec: &TrainerSpec,
    rng: &mut R,
) -> Result<MlpModel> {
    if indices.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let mut model = model.clone();
    let mut order: Vec<usize> = indices.to_vec();
    let mut grad = model.gradient_buffer();

    for epoch in 0..spec.epochs {
        order.shuffle(rng);
        for (step, batch) in order.chunks(spec.batch_size).enumerate() {
            for g in grad.iter_mut() {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
            let mut batch_loss = 0.0;
            for &row in batch {
                batch_loss +=
                    model.accumulate_gradient(data.features_of(row), data.targets[row], &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(FlError::Diverged { epoch, step });
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grad.iter_mut() {
                g.iter_mut().for_each(|x| *x *= scale);
            }
            model.apply_gradient(&grad, spec.learning_rate);
        }
    }
    Ok(model)
}
