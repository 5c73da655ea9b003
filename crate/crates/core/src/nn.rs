//! Dense feed-forward network with manual backpropagation and Adam.
//!
//! Hidden layers use ReLU; the output layer applies either the identity or a
//! sigmoid. All arithmetic is `f64` and single-threaded so that a fixed seed
//! and fixed data give a bit-identical parameter trajectory.
//!
//! Batches are row-major: one sample per row. Weights have shape
//! `(out_dim, in_dim)` so a layer computes `z = x Wᵀ + b`.

use std::path::Path;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::blob;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Linear,
    Sigmoid,
}

/// One affine layer. Also used to hold gradients and Adam moments, which
/// share the parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.out_dim(), self.in_dim())
    }

    fn is_finite(&self) -> bool {
        self.weight.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Dense>,
    output_activation: OutputActivation,
}

/// Activations recorded by [`MlpParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `layer_inputs[0]` is the batch itself.
    layer_inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre_activations: Vec<Array2<f64>>,
    outputs: Array2<f64>,
    shapes: Vec<(usize, usize)>,
}

impl ForwardCache {
    pub fn outputs(&self) -> &Array2<f64> {
        &self.outputs
    }

    pub fn batch_size(&self) -> usize {
        self.outputs.nrows()
    }
}

/// Initializes a network with `depth` hidden layers of `hidden_width` units.
///
/// Every weight and bias of a layer with fan-in `k` is drawn from
/// `U(-1/√k, 1/√k)`, layer by layer, weights (row-major) before biases, from
/// a ChaCha8 stream seeded with `seed`.
pub fn init_params(
    in_dim: usize,
    hidden_width: usize,
    depth: usize,
    out_dim: usize,
    output_activation: OutputActivation,
    seed: u64,
) -> Result<MlpParams> {
    if in_dim == 0 || hidden_width == 0 || depth == 0 || out_dim == 0 {
        return Err(Error::invalid(format!(
            "network dims must be >= 1 (in={in_dim}, width={hidden_width}, depth={depth}, out={out_dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![in_dim];
    dims.extend(std::iter::repeat_n(hidden_width, depth));
    dims.push(out_dim);

    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = init_bound(fan_in);
            let dist = Uniform::new(-bound, bound);
            let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || dist.sample(&mut rng));
            let bias = Array1::from_shape_simple_fn(fan_out, || dist.sample(&mut rng));
            Dense { weight, bias }
        })
        .collect();
    Ok(MlpParams {
        layers,
        output_activation,
    })
}

/// Half-width of the uniform initialization interval for a layer.
pub fn init_bound(fan_in: usize) -> f64 {
    1.0 / (fan_in as f64).sqrt()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl MlpParams {
    /// Builds a network from explicit layers. Shapes must chain.
    pub fn from_layers(layers: Vec<Dense>, output_activation: OutputActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::invalid(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    k + 1,
                    pair[1].in_dim()
                )));
            }
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::invalid(format!("layer {k} bias length mismatch")));
            }
        }
        Ok(Self {
            layers,
            output_activation,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_width(&self) -> usize {
        if self.layers.len() > 1 {
            self.layers[0].out_dim()
        } else {
            0
        }
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.out_dim(), l.in_dim())).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub fn forward(&self, inputs: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if inputs.ncols() != self.in_dim() {
            return Err(Error::invalid(format!(
                "input width {} does not match network input {}",
                inputs.ncols(),
                self.in_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut current = inputs.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weight.t());
            z += &layer.bias;
            layer_inputs.push(current);
            if k < last {
                let a = z.mapv(|v| v.max(0.0));
                pre_activations.push(z);
                current = a;
            } else {
                current = match self.output_activation {
                    OutputActivation::Linear => z,
                    OutputActivation::Sigmoid => z.mapv_into(sigmoid),
                };
            }
        }
        let cache = ForwardCache {
            layer_inputs,
            pre_activations,
            outputs: current.clone(),
            shapes: self.shapes(),
        };
        Ok((current, cache))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward(inputs).map(|(out, _)| out)
    }

    /// Gradients of a scalar batch loss with respect to every parameter,
    /// given `d_output = ∂loss/∂outputs`.
    ///
    /// The ReLU derivative at exactly zero is taken as 0.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Array2<f64>) -> Result<Vec<Dense>> {
        if cache.shapes != self.shapes() {
            return Err(Error::invalid("forward cache was produced by a different network"));
        }
        if d_output.dim() != cache.outputs.dim() {
            return Err(Error::invalid(format!(
                "output gradient shape {:?} does not match outputs {:?}",
                d_output.dim(),
                cache.outputs.dim()
            )));
        }
        let mut delta = match self.output_activation {
            OutputActivation::Linear => d_output.clone(),
            OutputActivation::Sigmoid => {
                let mut d = d_output.clone();
                Zip::from(&mut d)
                    .and(&cache.outputs)
                    .for_each(|g, &s| *g *= s * (1.0 - s));
                d
            }
        };
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let weight = delta.t().dot(&cache.layer_inputs[k]);
            let bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut next = delta.dot(&self.layers[k].weight);
                Zip::from(&mut next)
                    .and(&cache.pre_activations[k - 1])
                    .for_each(|g, &z| {
                        if z <= 0.0 {
                            *g = 0.0;
                        }
                    });
                delta = next;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Ok(grads)
    }

    /// All parameters flattened: per layer, weights row-major then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            output_activation: self.output_activation,
            layers: self.shapes(),
        };
        blob::write(path, &header, &self.to_flat())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, data): (CheckpointHeader, Vec<f64>) = blob::read(path)?;
        Self::from_checkpoint(header, &data)
    }

    fn from_checkpoint(header: CheckpointHeader, data: &[f64]) -> Result<Self> {
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::format(
                "checkpoint",
                format!("unknown format {:?}", header.format),
            ));
        }
        let expected: usize = header.layers.iter().map(|(o, i)| o * i + o).sum();
        if expected != data.len() {
            return Err(Error::format(
                "checkpoint",
                format!("header expects {expected} values, found {}", data.len()),
            ));
        }
        let mut offset = 0;
        let mut layers = Vec::with_capacity(header.layers.len());
        for &(out_dim, in_dim) in &header.layers {
            let w = data[offset..offset + out_dim * in_dim].to_vec();
            offset += out_dim * in_dim;
            let b = data[offset..offset + out_dim].to_vec();
            offset += out_dim;
            layers.push(Dense {
                weight: Array2::from_shape_vec((out_dim, in_dim), w)
                    .map_err(|e| Error::format("checkpoint", e.to_string()))?,
                bias: Array1::from(b),
            });
        }
        Self::from_layers(layers, header.output_activation)
    }
}

const CHECKPOINT_FORMAT: &str = "sape-mlp-v1";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    output_activation: OutputActivation,
    /// `(out_dim, in_dim)` per layer.
    layers: Vec<(usize, usize)>,
}

/// Training pairs together with the sample-table rows they came from.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub sample_ids: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>, sample_ids: Vec<usize>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() || inputs.nrows() != sample_ids.len() {
            return Err(Error::invalid(format!(
                "batch rows disagree: inputs {}, targets {}, ids {}",
                inputs.nrows(),
                targets.nrows(),
                sample_ids.len()
            )));
        }
        Ok(Self {
            inputs,
            targets,
            sample_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }
}

/// Mean squared error per sample (averaged over output channels).
pub fn per_sample_mse(outputs: &Array2<f64>, targets: &Array2<f64>) -> Array1<f64> {
    let channels = outputs.ncols() as f64;
    Zip::from(outputs.rows())
        .and(targets.rows())
        .map_collect(|o, t| o.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / channels)
}

/// Batch MSE, per-sample losses and `∂loss/∂outputs`.
///
/// The batch loss is the mean of the per-sample losses, so the gradient of
/// each entry is `2 (ŷ - y) / (batch · channels)`.
pub fn mse_loss(outputs: &Array2<f64>, targets: &Array2<f64>) -> (f64, Array1<f64>, Array2<f64>) {
    let per_sample = per_sample_mse(outputs, targets);
    let n = outputs.nrows().max(1) as f64;
    let scale = 2.0 / (n * outputs.ncols() as f64);
    let grad = (outputs - targets) * scale;
    let loss = per_sample.sum() / n;
    (loss, per_sample, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Dense>,
    second_moment: Vec<Dense>,
    step_count: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        let zeros: Vec<Dense> = params.layers.iter().map(Dense::zeros_like).collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Dense] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Dense] {
        &self.second_moment
    }

    /// One bias-corrected Adam update.
    ///
    /// A non-finite gradient aborts with [`Error::Diverged`] carrying the
    /// index of the step that would have been taken, leaving parameters and
    /// moments untouched.
    pub fn step(&mut self, params: &mut MlpParams, grads: &[Dense]) -> Result<()> {
        let shapes_match = grads.len() == params.layers.len()
            && grads
                .iter()
                .zip(&params.layers)
                .all(|(g, p)| g.weight.dim() == p.weight.dim() && g.bias.dim() == p.bias.dim());
        if !shapes_match {
            return Err(Error::invalid("gradient shapes do not match parameters"));
        }
        if !grads.iter().all(Dense::is_finite) {
            return Err(Error::Diverged {
                iteration: self.step_count as usize,
            });
        }
        self.step_count += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (k, g) in grads.iter().enumerate() {
            let layer = &mut params.layers[k];
            let (m, v) = (&mut self.first_moment[k], &mut self.second_moment[k]);
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn linear_layer(weight: Array2<f64>, bias: Array1<f64>) -> MlpParams {
        MlpParams::from_layers(vec![Dense { weight, bias }], OutputActivation::Linear).unwrap()
    }

    #[test]
    fn init_shapes_chain() {
        let p = init_params(2, 4, 1, 3, OutputActivation::Linear, 7).unwrap();
        assert_eq!(p.shapes(), vec![(4, 2), (3, 4)]);
        assert_eq!(p.depth(), 1);
        assert_eq!(p.hidden_width(), 4);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_params(2, 4, 1, 3, OutputActivation::Linear, 7).unwrap();
        let b = init_params(2, 4, 1, 3, OutputActivation::Linear, 7).unwrap();
        let bytes = |p: &MlpParams| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bytes(&a), bytes(&b));
        let c = init_params(2, 4, 1, 3, OutputActivation::Linear, 8).unwrap();
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let p = init_params(2, 256, 4, 3, OutputActivation::Sigmoid, 0).unwrap();
        // Largest bound is the first layer's: 1/sqrt(2) ≈ 0.7071.
        let first_bound = 1.0 / 2f64.sqrt();
        for (k, layer) in p.layers().iter().enumerate() {
            let bound = if k == 0 { first_bound } else { 1.0 / 16.0 };
            for &w in layer.weight.iter().chain(layer.bias.iter()) {
                assert!(w.is_finite());
                assert!(w.abs() < bound, "layer {k}: {w} >= {bound}");
                assert!(w.abs() < 1.0);
            }
        }
    }

    #[test]
    fn init_rejects_zero_dims() {
        for (i, w, d, o) in [(0, 4, 1, 1), (1, 0, 1, 1), (1, 4, 0, 1), (1, 4, 1, 0)] {
            assert!(matches!(
                init_params(i, w, d, o, OutputActivation::Linear, 0),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut p = init_params(3, 5, 2, 2, OutputActivation::Linear, 1).unwrap();
        for l in p.layers_mut() {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        let out = p.predict(&array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_inputs_through() {
        let p = linear_layer(Array2::eye(3), Array1::zeros(3));
        let x = array![[1.0, -2.0, 3.5]];
        assert_eq!(p.predict(&x).unwrap(), x);
    }

    #[test]
    fn forward_rejects_width_mismatch() {
        let p = init_params(3, 4, 1, 1, OutputActivation::Linear, 0).unwrap();
        assert!(p.forward(&Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        let p = init_params(3, 5, 2, 2, OutputActivation::Sigmoid, 11).unwrap();
        let x = [0.3, -0.7, 0.2];
        // Hand-rolled loops, no ndarray products.
        let mut act: Vec<f64> = x.to_vec();
        let n = p.layers().len();
        for (k, l) in p.layers().iter().enumerate() {
            let mut next = vec![0.0; l.out_dim()];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut s = l.bias[o];
                for (i, a) in act.iter().enumerate() {
                    s += l.weight[[o, i]] * a;
                }
                *slot = if k + 1 < n {
                    s.max(0.0)
                } else {
                    1.0 / (1.0 + (-s).exp())
                };
            }
            act = next;
        }
        let out = p.predict(&Array2::from_shape_vec((1, 3), x.to_vec()).unwrap()).unwrap();
        for (a, b) in out.iter().zip(&act) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_grads() {
        let p = init_params(2, 4, 2, 3, OutputActivation::Sigmoid, 3).unwrap();
        let x = array![[0.1, 0.2], [-0.4, 0.9]];
        let (out, cache) = p.forward(&x).unwrap();
        let grads = p.backward(&cache, &Array2::zeros(out.dim())).unwrap();
        for g in grads {
            assert!(g.weight.iter().chain(g.bias.iter()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_linear_layer_least_squares_gradient() {
        let w = array![[0.5, -1.0]];
        let b = array![0.25];
        let p = linear_layer(w.clone(), b.clone());
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let y = array![[1.0], [0.0], [2.0]];
        let (out, cache) = p.forward(&x).unwrap();
        let (_, _, d) = mse_loss(&out, &y);
        let grads = p.backward(&cache, &d).unwrap();
        // gradient = 2 (ŷ - y) xᵀ / batch, summed over the batch
        let mut gw = [0.0; 2];
        let mut gb = 0.0;
        for r in 0..3 {
            let yhat = w[[0, 0]] * x[[r, 0]] + w[[0, 1]] * x[[r, 1]] + b[0];
            let e = 2.0 * (yhat - y[[r, 0]]) / 3.0;
            gw[0] += e * x[[r, 0]];
            gw[1] += e * x[[r, 1]];
            gb += e;
        }
        assert!((grads[0].weight[[0, 0]] - gw[0]).abs() < 1e-12);
        assert!((grads[0].weight[[0, 1]] - gw[1]).abs() < 1e-12);
        assert!((grads[0].bias[0] - gb).abs() < 1e-12);
    }

    #[test]
    fn backward_rejects_foreign_cache() {
        let p = init_params(2, 4, 1, 1, OutputActivation::Linear, 0).unwrap();
        let q = init_params(2, 5, 1, 1, OutputActivation::Linear, 0).unwrap();
        let (out, cache) = q.forward(&array![[0.0, 1.0]]).unwrap();
        assert!(p.backward(&cache, &out).is_err());
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        // Hidden pre-activation exactly 0 must block the gradient.
        let hidden = Dense {
            weight: array![[1.0]],
            bias: array![0.0],
        };
        let out = Dense {
            weight: array![[1.0]],
            bias: array![0.0],
        };
        let p = MlpParams::from_layers(vec![hidden, out], OutputActivation::Linear).unwrap();
        let (_, cache) = p.forward(&array![[0.0]]).unwrap();
        let g = p.backward(&cache, &array![[1.0]]).unwrap();
        assert_eq!(g[0].weight[[0, 0]], 0.0);
        assert_eq!(g[0].bias[0], 0.0);
        assert_eq!(g[1].weight[[0, 0]], 0.0);
        assert_eq!(g[1].bias[0], 1.0);
    }

    fn scalar_param(w: f64) -> MlpParams {
        linear_layer(array![[w]], array![0.0])
    }

    fn scalar_grad(g: f64) -> Vec<Dense> {
        vec![Dense {
            weight: array![[g]],
            bias: array![0.0],
        }]
    }

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut p = init_params(2, 3, 1, 1, OutputActivation::Linear, 5).unwrap();
        let before = p.clone();
        let mut state = AdamState::new(&p, AdamConfig::default());
        let zeros: Vec<Dense> = p.layers().iter().map(Dense::zeros_like).collect();
        state.step(&mut p, &zeros).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = scalar_param(1.0);
        let mut state = AdamState::new(
            &p,
            AdamConfig {
                lr: 0.1,
                ..AdamConfig::default()
            },
        );
        state.step(&mut p, &scalar_grad(1.0)).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = 0.1 / (1 + 1e-8)
        let expected = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((p.layers()[0].weight[[0, 0]] - expected).abs() < 1e-15);
    }

    #[test]
    fn adam_converges_on_scalar_quadratic() {
        let mut p = scalar_param(0.0);
        let mut state = AdamState::new(
            &p,
            AdamConfig {
                lr: 0.05,
                ..AdamConfig::default()
            },
        );
        for _ in 0..1000 {
            let w = p.layers()[0].weight[[0, 0]];
            state.step(&mut p, &scalar_grad(2.0 * (w - 3.0))).unwrap();
        }
        let w = p.layers()[0].weight[[0, 0]];
        assert!((w - 3.0).abs() < 1e-3, "w = {w}");
        assert_eq!(state.step_count(), 1000);
    }

    #[test]
    fn adam_reports_divergence_with_step_index() {
        let mut p = scalar_param(0.0);
        let mut state = AdamState::new(&p, AdamConfig::default());
        state.step(&mut p, &scalar_grad(1.0)).unwrap();
        state.step(&mut p, &scalar_grad(1.0)).unwrap();
        let before = p.clone();
        match state.step(&mut p, &scalar_grad(f64::NAN)) {
            Err(Error::Diverged { iteration }) => assert_eq!(iteration, 2),
            other => panic!("expected divergence, got {other:?}"),
        }
        assert_eq!(p, before);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.bin");
        let p = init_params(3, 6, 2, 2, OutputActivation::Sigmoid, 9).unwrap();
        p.save(&path).unwrap();
        let q = MlpParams::load(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn batch_rejects_mismatched_rows() {
        assert!(Batch::new(Array2::zeros((2, 1)), Array2::zeros((3, 1)), vec![0, 1]).is_err());
        assert!(Batch::new(Array2::zeros((2, 1)), Array2::zeros((2, 1)), vec![0]).is_err());
        assert_eq!(
            Batch::new(Array2::zeros((2, 1)), Array2::zeros((2, 1)), vec![4, 5])
                .unwrap()
                .len(),
            2
        );
    }
}
