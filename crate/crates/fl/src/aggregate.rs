//! Dataset-size-weighted model averaging: the community model is
//! `sum_k (p_k / P) * w_k` with `p_k = |D_k|` and `P = sum p_k`.
//!
//! Two routes with one contract: [`aggregate_plain`] averages raw arrays;
//! [`aggregate_encrypted`] computes the same average over packed
//! ciphertexts — per chunk, one plaintext product per learner at depth 1,
//! a deterministic ascending-index sum, and a single rescale. No secret
//! key appears anywhere in the encrypted route.

use fedhe_core::ckks::{add_ct, mul_plain, rescale, Ciphertext, CkksParams, Plaintext};
use fedhe_core::pack::{NamedArray, PackedModel};
use rayon::prelude::*;

use crate::{FlError, Result};

/// Public per-learner contribution weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationWeights {
    sizes: Vec<u64>,
    total: u64,
    normalized: Vec<f64>,
}

impl AggregationWeights {
    /// Builds weights from the per-learner training-set sizes.
    pub fn from_sizes(sizes: &[u64]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(FlError::InvalidConfig("no contribution sizes".into()));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(FlError::InvalidConfig(
                "every contribution must be positive".into(),
            ));
        }
        let total: u64 = sizes.iter().sum();
        let normalized: Vec<f64> = sizes.iter().map(|&s| s as f64 / total as f64).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            total,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `p_k / P`, summing to 1 within 2^-50.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }
}

fn check_counts(models: usize, weights: &AggregationWeights) -> Result<()> {
    if models != weights.len() {
        return Err(FlError::CountMismatch {
            have: models,
            want: weights.len(),
        });
    }
    Ok(())
}

/// Parameter-wise weighted average of structurally identical models.
/// Summation runs in ascending learner order, so results are deterministic.
pub fn aggregate_plain(
    models: &[Vec<NamedArray>],
    weights: &AggregationWeights,
) -> Result<Vec<NamedArray>> {
    check_counts(models.len(), weights)?;
    let first = &models[0];
    for (k, model) in models.iter().enumerate().skip(1) {
        if model.len() != first.len() {
            return Err(FlError::ModelMismatch(format!(
                "model {k} has {} arrays, expected {}",
                model.len(),
                first.len()
            )));
        }
        for (a, b) in model.iter().zip(first) {
            if a.name != b.name || a.shape != b.shape {
                return Err(FlError::ModelMismatch(format!(
                    "array {:?} {:?} does not match {:?} {:?}",
                    a.name, a.shape, b.name, b.shape
                )));
            }
        }
    }

    let mut out: Vec<NamedArray> = first
        .iter()
        .map(|a| NamedArray {
            name: a.name.clone(),
            shape: a.shape.clone(),
            data: vec![0.0; a.data.len()],
        })
        .collect();
    for (model, &w) in models.iter().zip(weights.normalized()) {
        for (acc, src) in out.iter_mut().zip(model) {
            for (o, &x) in acc.data.iter_mut().zip(&src.data) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// Weighted average over encrypted models. For each chunk index, multiplies
/// every learner's ciphertext by its public weight encoded at the matching
/// scale and level, sums in ascending learner order, and rescales once —
/// consuming exactly one level regardless of learner count. Operates on
/// public data only (ciphertexts and weights); decryption is structurally
/// impossible here.
pub fn aggregate_encrypted(
    models: &[PackedModel],
    weights: &AggregationWeights,
    params: &CkksParams,
) -> Result<PackedModel> {
    check_counts(models.len(), weights)?;
    let first = &models[0];
    first.validate()?;
    for (k, model) in models.iter().enumerate().skip(1) {
        model.validate()?;
        if model.layout != first.layout {
            return Err(FlError::ModelMismatch(format!(
                "packed model {k} disagrees with the shared layout"
            )));
        }
        if model.level() != first.level() || model.scale() != first.scale() {
            return Err(FlError::ModelMismatch(format!(
                "packed model {k} has level {:?} scale {:?}, expected {:?} {:?}",
                model.level(),
                model.scale(),
                first.level(),
                first.scale()
            )));
        }
    }

    let level = first.level().expect("validated non-empty model");
    let slots = params.slot_count();
    let weight_plaintexts: Vec<Plaintext> = weights
        .normalized()
        .iter()
        .map(|&w| Plaintext::encode_at_level(params, &vec![w; slots], params.scale(), level))
        .collect::<fedhe_core::Result<_>>()?;

    let chunk_count = first.layout.ciphertext_count();
    let ciphertexts: Vec<Ciphertext> = (0..chunk_count)
        .into_par_iter()
        .map(|i| {
            let mut acc: Option<Ciphertext> = None;
            for (model, w_pt) in models.iter().zip(&weight_plaintexts) {
                let term = mul_plain(&model.ciphertexts[i], w_pt)?;
                acc = Some(match acc {
                    None => term,
                    Some(prev) => add_ct(&prev, &term)?,
                });
            }
            rescale(&acc.expect("at least one learner"))
        })
        .collect::<fedhe_core::Result<_>>()?;

    Ok(PackedModel {
        layout: first.layout.clone(),
        ciphertexts,
    })
}
