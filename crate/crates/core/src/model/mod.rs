//! Fully connected ReLU classifiers with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`; each dense layer contributes a
//! row-major `out × in` weight block followed by its `out` biases. Everything
//! that works per parameter (Fisher diagonals, dampening, optimizers) indexes
//! that vector directly.

mod checkpoint;
mod fisher;
mod loss;
mod optim;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use fisher::{fim_diagonal, FimDiagonal};
pub use loss::{log_softmax, softmax, Term};
pub(crate) use loss::loss_and_grad;
pub use optim::{Optimizer, OptimizerKind};
pub use train::{
    evaluate_accuracy, per_sample_losses, predict_all, predict_distribution, run_epoch, train, validate_data, Sample,
    TrainConfig,
};

/// Layer widths of an MLP classifier. An empty `hidden` gives multinomial
/// logistic regression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub num_classes: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, num_classes: usize) -> Result<Self> {
        let arch = Self { input_dim, hidden, num_classes };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("architecture input_dim must be positive"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("architecture needs at least 2 classes"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend(&self.hidden);
        w.push(self.num_classes);
        w
    }

    pub(crate) fn layers(&self) -> Vec<LayerShape> {
        let widths = self.widths();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let layer = LayerShape { inputs: w[0], outputs: w[1], offset };
                offset += layer.len();
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(LayerShape::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    /// Start of the weight block in the flat parameter vector.
    pub offset: usize,
}

impl LayerShape {
    fn len(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.outputs * self.inputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    architecture: Architecture,
    params: Vec<f64>,
    /// Seed passed to [`random_init`], if the model came from there.
    init_seed: Option<u64>,
}

/// Activations kept from a forward pass for the backward pass.
pub(crate) struct Trace {
    /// `acts[0]` is the input, `acts[l]` the post-ReLU output of hidden layer
    /// `l`, and the last entry the logits.
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().expect("trace always holds logits")
    }
}

/// PyTorch-style `Linear` initialisation: weights and biases uniform in
/// `±1/sqrt(fan_in)`.
pub fn random_init(architecture: &Architecture, seed: u64) -> Result<Classifier> {
    architecture.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; architecture.param_count()];
    for layer in architecture.layers() {
        let bound = 1.0 / (layer.inputs as f64).sqrt();
        for p in &mut params[layer.offset..layer.offset + layer.len()] {
            *p = rng.random_range(-bound..bound);
        }
    }
    Ok(Classifier { architecture: architecture.clone(), params, init_seed: Some(seed) })
}

impl Classifier {
    pub fn from_parameters(architecture: Architecture, params: Vec<f64>) -> Result<Self> {
        architecture.validate()?;
        if params.len() != architecture.param_count() {
            return Err(Error::ShapeMismatch { expected: architecture.param_count(), actual: params.len() });
        }
        Ok(Self { architecture, params, init_seed: None })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn num_classes(&self) -> usize {
        self.architecture.num_classes
    }

    pub fn init_seed(&self) -> Option<u64> {
        self.init_seed
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(name, shape, values)` for each weight and bias array, in storage order.
    pub fn named_parameters(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (i, layer) in self.architecture.layers().iter().enumerate() {
            let b = layer.bias_offset();
            out.push((format!("dense{i}.weight"), vec![layer.outputs, layer.inputs], &self.params[layer.offset..b]));
            out.push((format!("dense{i}.bias"), vec![layer.outputs], &self.params[b..b + layer.outputs]));
        }
        out
    }

    pub(crate) fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.architecture.input_dim {
            return Err(Error::ShapeMismatch { expected: self.architecture.input_dim, actual: features.len() });
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, x: &[f64]) -> Trace {
        let layers = self.architecture.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(x.to_vec());
        for (l, layer) in layers.iter().enumerate() {
            let input = &acts[l];
            let w = &self.params[layer.offset..layer.bias_offset()];
            let bias = &self.params[layer.bias_offset()..layer.bias_offset() + layer.outputs];
            let mut out: Vec<f64> = w
                .chunks_exact(layer.inputs)
                .zip(bias)
                .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            if l + 1 < layers.len() {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        Trace { acts }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).acts.pop().expect("trace always holds logits")
    }

    /// Accumulates `scale · ∂L/∂θ` into `grad` (when given) from
    /// `dlogits = ∂L/∂logits`. Returns `∂L/∂x` (unscaled) when `want_input`
    /// is set.
    pub(crate) fn backward(
        &self,
        trace: &Trace,
        dlogits: &[f64],
        scale: f64,
        mut grad: Option<&mut [f64]>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let layers = self.architecture.layers();
        let mut delta = dlogits.to_vec();
        for l in (0..layers.len()).rev() {
            let layer = layers[l];
            let input = &trace.acts[l];
            let b = layer.bias_offset();
            if let Some(grad) = grad.as_deref_mut() {
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let sd = scale * d;
                    let row = &mut grad[layer.offset + o * layer.inputs..layer.offset + (o + 1) * layer.inputs];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += sd * x;
                    }
                    grad[b + o] += sd;
                }
            }
            if l == 0 && !want_input {
                return None;
            }
            let w = &self.params[layer.offset..b];
            let mut prev = vec![0.0; layer.inputs];
            for (row, &d) in w.chunks_exact(layer.inputs).zip(&delta) {
                if d == 0.0 {
                    continue;
                }
                for (p, wv) in prev.iter_mut().zip(row) {
                    *p += wv * d;
                }
            }
            if l > 0 {
                // ReLU gate of the previous hidden layer
                for (p, a) in prev.iter_mut().zip(&trace.acts[l]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Some(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_layout() {
        let arch = Architecture::new(3, vec![4], 2).unwrap();
        assert_eq!(arch.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
        let m = random_init(&arch, 1).unwrap();
        let names: Vec<_> = m.named_parameters().into_iter().map(|(n, s, v)| (n, s, v.len())).collect();
        assert_eq!(
            names,
            vec![
                ("dense0.weight".to_string(), vec![4, 3], 12),
                ("dense0.bias".to_string(), vec![4], 4),
                ("dense1.weight".to_string(), vec![2, 4], 8),
                ("dense1.bias".to_string(), vec![2], 2),
            ]
        );
    }

    #[test]
    fn invalid_descriptors() {
        assert!(Architecture::new(0, vec![], 2).is_err());
        assert!(Architecture::new(2, vec![], 1).is_err());
        assert!(Architecture::new(2, vec![3, 0], 2).is_err());
        let bad = Architecture { input_dim: 2, hidden: vec![], num_classes: 1 };
        assert!(random_init(&bad, 0).is_err());
    }

    #[test]
    fn random_init_is_seeded() {
        let arch = Architecture::new(5, vec![7], 3).unwrap();
        assert_eq!(random_init(&arch, 3).unwrap(), random_init(&arch, 3).unwrap());
        assert_ne!(random_init(&arch, 3).unwrap().parameters(), random_init(&arch, 4).unwrap().parameters());
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let arch = Architecture::new(4, vec![5, 3], 3).unwrap();
        let m = random_init(&arch, 11).unwrap();
        let x = vec![0.3, -0.7, 1.1, 0.2];
        let loss_at = |x: &[f64]| -log_softmax(&m.logits(x))[1];
        let trace = m.forward_trace(&x);
        let (_, dl) = loss::loss_and_grad(trace.logits(), &[Term::cross_entropy(1)]);
        let dx = m.backward(&trace, &dl, 1.0, None, true).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let fd = (loss_at(&up) - loss_at(&dn)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-6, "dx[{i}] = {} vs {fd}", dx[i]);
        }
    }
}
