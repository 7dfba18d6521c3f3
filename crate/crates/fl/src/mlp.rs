//! A small fully-connected regressor with tanh hidden layers and a linear
//! scalar output, plus hand-written backprop for the squared-error loss
//! `l = (pred - y)^2 / 2`.

use fedhe_core::pack::NamedArray;
use rand::Rng;

use crate::{FlError, Result};

/// Layer sizes from input to output. The output dimension must be 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub layer_dims: Vec<usize>,
    pub bias: bool,
    /// Initial value of the output bias. Centering it on the target mean
    /// keeps early gradients sane when targets sit far from zero.
    pub output_bias_init: f64,
}

impl MlpSpec {
    pub fn new(layer_dims: Vec<usize>) -> Self {
        Self {
            layer_dims,
            bias: true,
            output_bias_init: 0.0,
        }
    }

    /// The desk-scale regressor: 32 -> 64 -> 32 -> 1 (4225 parameters), with
    /// the output bias starting at the cohort target center (62.5 years).
    pub fn desk_default() -> Self {
        Self {
            output_bias_init: 62.5,
            ..Self::new(vec![32, 64, 32, 1])
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(FlError::InvalidConfig(
                "an MLP needs at least input and output dims".into(),
            ));
        }
        if *self.layer_dims.last().unwrap() != 1 {
            return Err(FlError::InvalidConfig(
                "the regressor output dimension must be 1".into(),
            ));
        }
        if self.layer_dims.iter().any(|&d| d == 0) {
            return Err(FlError::InvalidConfig("zero-width layer".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    // Row-major (out x in).
    w: Vec<f64>,
    b: Vec<f64>,
    rows: usize,
    cols: usize,
}

/// The model: dense layers with tanh activations everywhere except the
/// final (linear) layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

impl MlpModel {
    /// Xavier-uniform initialization; hidden biases start at zero and the
    /// output bias at `spec.output_bias_init`.
    pub fn init<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let last = spec.layer_dims.len() - 2;
        let layers = spec
            .layer_dims
            .windows(2)
            .enumerate()
            .map(|(i, dims)| {
                let (fan_in, fan_out) = (dims[0], dims[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let b_init = if i == last { spec.output_bias_init } else { 0.0 };
                Layer {
                    w: (0..fan_in * fan_out).map(|_| rng.random_range(-a..a)).collect(),
                    b: vec![b_init; if spec.bias { fan_out } else { 0 }],
                    rows: fan_out,
                    cols: fan_in,
                }
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }

    /// Forward pass returning the scalar prediction.
    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.spec.input_dim());
        let mut act = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0f64; layer.rows];
            for (r, out) in next.iter_mut().enumerate() {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                let mut acc = if layer.b.is_empty() { 0.0 } else { layer.b[r] };
                for (wi, ai) in row.iter().zip(&act) {
                    acc += wi * ai;
                }
                *out = acc;
            }
            if i + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.tanh();
                }
            }
            act = next;
        }
        act[0]
    }

    /// Loss `(pred - y)^2 / 2` and its gradient, accumulated into `grad`
    /// (same shape as [`Self::gradient_buffer`]). Returns the loss.
    pub fn accumulate_gradient(&self, x: &[f64], y: f64, grad: &mut [Vec<f64>]) -> f64 {
        // Forward, keeping post-activation values per layer.
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let mut next = vec![0.0f64; layer.rows];
            for (r, out) in next.iter_mut().enumerate() {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                let mut acc = if layer.b.is_empty() { 0.0 } else { layer.b[r] };
                for (wi, ai) in row.iter().zip(prev) {
                    acc += wi * ai;
                }
                *out = acc;
            }
            if i + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.tanh();
                }
            }
            activations.push(next);
        }

        let pred = activations.last().unwrap()[0];
        let err = pred - y;
        let loss = 0.5 * err * err;

        // Backward: delta holds dL/d(pre-activation) of the current layer.
        let mut delta = vec![err];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let prev = &activations[i];
            let g = &mut grad[i];
            let (gw, gb) = g.split_at_mut(layer.w.len());
            for (r, &d) in delta.iter().enumerate() {
                for (c, &p) in prev.iter().enumerate() {
                    gw[r * layer.cols + c] += d * p;
                }
                if !layer.b.is_empty() {
                    gb[r] += d;
                }
            }
            if i > 0 {
                // Propagate through W^T and the tanh of the layer below.
                let mut below = vec![0.0f64; layer.cols];
                for (r, &d) in delta.iter().enumerate() {
                    let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                    for (c, w) in row.iter().enumerate() {
                        below[c] += d * w;
                    }
                }
                for (c, v) in below.iter_mut().enumerate() {
                    let a = activations[i][c]; // tanh output
                    *v *= 1.0 - a * a;
                }
                delta = below;
            }
        }
        loss
    }

    /// Zeroed per-layer gradient buffers, weights then biases per layer.
    pub fn gradient_buffer(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .map(|l| vec![0.0f64; l.w.len() + l.b.len()])
            .collect()
    }

    /// SGD step: `w -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &[Vec<f64>], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grad) {
            let (gw, gb) = g.split_at(layer.w.len());
            for (w, gw) in layer.w.iter_mut().zip(gw) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.b.iter_mut().zip(gb) {
                *b -= lr * gb;
            }
        }
    }

    /// Exports layers as named arrays (`layerK.weight` [out, in] row-major,
    /// `layerK.bias` [out]), the packing/aggregation interchange form.
    pub fn to_arrays(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            out.push(
                NamedArray::new(
                    format!("layer{i}.weight"),
                    vec![layer.rows, layer.cols],
                    layer.w.clone(),
                )
                .expect("shape matches data"),
            );
            if !layer.b.is_empty() {
                out.push(
                    NamedArray::new(format!("layer{i}.bias"), vec![layer.rows], layer.b.clone())
                        .expect("shape matches data"),
                );
            }
        }
        out
    }

    /// Rebuilds a model from arrays produced by [`Self::to_arrays`] under
    /// the same spec.
    pub fn from_arrays(spec: &MlpSpec, arrays: &[NamedArray]) -> Result<Self> {
        spec.validate()?;
        let mut iter = arrays.iter();
        let mut layers = Vec::new();
        for (i, dims) in spec.layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (dims[0], dims[1]);
            let w = iter
                .next()
                .ok_or_else(|| FlError::ModelMismatch(format!("missing layer{i}.weight")))?;
            if w.shape != [fan_out, fan_in] {
                return Err(FlError::ModelMismatch(format!(
                    "layer{i}.weight shape {:?}, expected {:?}",
                    w.shape,
                    [fan_out, fan_in]
                )));
            }
            let b = if spec.bias {
                let b = iter
                    .next()
                    .ok_or_else(|| FlError::ModelMismatch(format!("missing layer{i}.bias")))?;
                if b.shape != [fan_out] {
                    return Err(FlError::ModelMismatch(format!(
                        "layer{i}.bias shape {:?}, expected [{fan_out}]",
                        b.shape
                    )));
                }
                b.data.clone()
            } else {
                Vec::new()
            };
            layers.push(Layer {
                w: w.data.clone(),
                b,
                rows: fan_out,
                cols: fan_in,
            });
        }
        if iter.next().is_some() {
            return Err(FlError::ModelMismatch("extra arrays".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn desk_model_has_4225_parameters() {
        let model = MlpModel::init(
            &MlpSpec::desk_default(),
            &mut ChaCha20Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(model.param_count(), 32 * 64 + 64 + 64 * 32 + 32 + 32 + 1);
    }

    #[test]
    fn arrays_round_trip_bitwise() {
        let spec = MlpSpec::new(vec![5, 7, 1]);
        let model = MlpModel::init(&spec, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let arrays = model.to_arrays();
        assert_eq!(arrays.len(), 4);
        let back = MlpModel::from_arrays(&spec, &arrays).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        // Random two-layer MLP; relative error below 1e-5 per parameter.
        let spec = MlpSpec::new(vec![4, 6, 1]);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let model = MlpModel::init(&spec, &mut rng).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = 0.7f64;

        let mut grad = model.gradient_buffer();
        model.accumulate_gradient(&x, y, &mut grad);

        let arrays = model.to_arrays();
        let h = 1e-5;
        let mut flat_index = 0usize;
        for (li, array) in arrays.iter().enumerate() {
            for k in 0..array.data.len() {
                let mut plus = arrays.clone();
                plus[li].data[k] += h;
                let mut minus = arrays.clone();
                minus[li].data[k] -= h;
                let mp = MlpModel::from_arrays(&spec, &plus).unwrap();
                let mm = MlpModel::from_arrays(&spec, &minus).unwrap();
                let lp = 0.5 * (mp.predict(&x) - y).powi(2);
                let lm = 0.5 * (mm.predict(&x) - y).powi(2);
                let fd = (lp - lm) / (2.0 * h);
                // grad layout: weights then biases per layer.
                let (layer_idx, offset) = if li % 2 == 0 {
                    (li / 2, k)
                } else {
                    (li / 2, grad[li / 2].len() - array.data.len() + k)
                };
                let analytic = grad[layer_idx][offset];
                let denom = analytic.abs().max(1e-3);
                assert!(
                    (analytic - fd).abs() / denom < 1e-5,
                    "param {flat_index}: analytic {analytic} vs fd {fd}"
                );
                flat_index += 1;
            }
        }
    }

    #[test]
    fn bias_free_single_weight_model() {
        let spec = MlpSpec {
            bias: false,
            ..MlpSpec::new(vec![1, 1])
        };
        let model = MlpModel::init(&spec, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert_eq!(model.param_count(), 1);
        assert_eq!(model.to_arrays().len(), 1);
    }
}
