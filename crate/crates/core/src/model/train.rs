use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, softmax, Term};
use super::{Classifier, Optimizer, OptimizerKind};
use crate::data::LabeledExample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 20, learning_rate: 1e-3, batch_size: 64, seed: 0, optimizer: OptimizerKind::Adam }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// A training input paired with the loss terms applied to it.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub features: &'a [f64],
    pub terms: Vec<Term>,
}

/// Checks that `data` is nonempty and fits the model's input width and label
/// range.
pub fn validate_data(model: &Classifier, data: &[LabeledExample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData("data"));
    }
    let k = model.num_classes();
    for ex in data {
        model.check_input(&ex.features)?;
        if ex.label >= k {
            return Err(Error::LabelOutOfRange { label: ex.label, num_classes: k });
        }
    }
    Ok(())
}

/// One pass over `samples` in a shuffled order drawn from `rng`, taking an
/// optimizer step per mini-batch on the batch-mean loss. Returns the mean
/// sample loss seen during the pass.
pub fn run_epoch(
    model: &mut Classifier,
    samples: &[Sample<'_>],
    optimizer: &mut Optimizer,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let mut grad = vec![0.0; model.param_count()];
    let mut total = 0.0;
    for batch in order.chunks(batch_size.max(1)) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let s = &samples[i];
            let trace = model.forward_trace(s.features);
            let (loss, dlogits) = loss_and_grad(trace.logits(), &s.terms);
            total += loss;
            model.backward(&trace, &dlogits, scale, Some(&mut grad), false);
        }
        optimizer.step(&mut model.params, &grad);
    }
    if samples.is_empty() {
        0.0
    } else {
        total / samples.len() as f64
    }
}

/// Supervised cross-entropy training. The input model is left untouched.
pub fn train(model: &Classifier, data: &[LabeledExample], config: &TrainConfig) -> Result<Classifier> {
    config.validate()?;
    validate_data(model, data)?;
    let mut out = model.clone();
    if config.epochs == 0 {
        return Ok(out);
    }
    let samples: Vec<Sample<'_>> =
        data.iter().map(|ex| Sample { features: &ex.features, terms: vec![Term::cross_entropy(ex.label)] }).collect();
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, out.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.epochs {
        run_epoch(&mut out, &samples, &mut optimizer, config.batch_size, &mut rng);
    }
    Ok(out)
}

pub fn predict_distribution(model: &Classifier, example: &LabeledExample) -> Result<Vec<f64>> {
    model.check_input(&example.features)?;
    Ok(softmax(&model.logits(&example.features)))
}

/// Output distributions for every example, in input order.
pub fn predict_all(model: &Classifier, data: &[LabeledExample]) -> Result<Vec<Vec<f64>>> {
    for ex in data {
        model.check_input(&ex.features)?;
    }
    Ok(data.par_iter().map(|ex| softmax(&model.logits(&ex.features))).collect())
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate_accuracy(model: &Classifier, data: &[LabeledExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("evaluation data"));
    }
    let probs = predict_all(model, data)?;
    let correct = probs.iter().zip(data).filter(|(p, ex)| argmax(p) == ex.label).count();
    Ok(correct as f64 / data.len() as f64)
}

/// Cross-entropy loss of each example under the model, in nats.
pub fn per_sample_losses(model: &Classifier, data: &[LabeledExample]) -> Result<Vec<f64>> {
    validate_data(model, data)?;
    Ok(data
        .par_iter()
        .map(|ex| -super::log_softmax(&model.logits(&ex.features))[ex.label])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset_from, LoadOptions};
    use crate::model::{random_init, Architecture};
    use std::path::Path;

    fn blobs() -> crate::data::DataPartition {
        load_dataset_from("synthetic-blobs", &LoadOptions::default(), Path::new(".")).unwrap()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = blobs();
        let m = random_init(&Architecture::new(2, vec![8], 2).unwrap(), 0).unwrap();
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert_eq!(train(&m, &data.train, &cfg).unwrap(), m);
    }

    #[test]
    fn fits_separable_blobs_deterministically() {
        let data = blobs();
        let m = random_init(&Architecture::new(2, vec![16], 2).unwrap(), 5).unwrap();
        let cfg = TrainConfig { epochs: 20, learning_rate: 0.01, batch_size: 16, seed: 1, optimizer: OptimizerKind::Adam };
        let a = train(&m, &data.train, &cfg).unwrap();
        let b = train(&m, &data.train, &cfg).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        assert_ne!(a.parameters(), m.parameters());
        assert!(evaluate_accuracy(&a, &data.train).unwrap() >= 0.95);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = random_init(&Architecture::new(2, vec![], 2).unwrap(), 0).unwrap();
        let cfg = TrainConfig::default();
        assert!(matches!(train(&m, &[], &cfg), Err(Error::EmptyData(_))));
        let bad = vec![LabeledExample::new(vec![0.0, 1.0], 2)];
        assert!(matches!(train(&m, &bad, &cfg), Err(Error::LabelOutOfRange { .. })));
        let wide = vec![LabeledExample::new(vec![0.0; 3], 0)];
        assert!(matches!(predict_distribution(&m, &wide[0]), Err(Error::ShapeMismatch { .. })));
        assert!(evaluate_accuracy(&m, &[]).is_err());
    }

    #[test]
    fn uniform_prediction_breaks_ties_low() {
        // zero weights: every input maps to the uniform distribution
        let arch = Architecture::new(3, vec![], 2).unwrap();
        let m = Classifier::from_parameters(arch.clone(), vec![0.0; arch.param_count()]).unwrap();
        let data: Vec<_> = (0..10).map(|i| LabeledExample::new(vec![i as f64, 1.0, -2.0], 0)).collect();
        assert_eq!(predict_distribution(&m, &data[3]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(evaluate_accuracy(&m, &data).unwrap(), 1.0);
    }

    #[test]
    fn zero_final_layer_is_uniform() {
        let arch = Architecture::new(4, vec![6], 5).unwrap();
        let mut m = random_init(&arch, 2).unwrap();
        let last = *arch.layers().last().unwrap();
        m.parameters_mut()[last.offset..].iter_mut().for_each(|p| *p = 0.0);
        let p = predict_distribution(&m, &LabeledExample::new(vec![1.0, -1.0, 0.5, 2.0], 0)).unwrap();
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn linear_model_matches_closed_form_softmax() {
        // logits = W x + b with W = [[1, 2], [-1, 0.5]], b = [0.1, -0.2]
        let arch = Architecture::new(2, vec![], 2).unwrap();
        let m = Classifier::from_parameters(arch, vec![1.0, 2.0, -1.0, 0.5, 0.1, -0.2]).unwrap();
        let x = LabeledExample::new(vec![0.3, -0.4], 0);
        let z0 = 0.3 - 0.8 + 0.1;
        let z1 = -0.3 - 0.2 - 0.2;
        let p0 = 1.0 / (1.0 + f64::exp(z1 - z0));
        let p = predict_distribution(&m, &x).unwrap();
        assert!((p[0] - p0).abs() < 1e-15 && (p[1] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn random_model_is_at_chance_on_label_independent_data() {
        // features carry no label information, so accuracy is binomial(n, 1/k)/n
        let arch = Architecture::new(8, vec![16], 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<_> = (0..10_000)
            .map(|i| {
                let f = (0..8).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
                LabeledExample::new(f, i % 10)
            })
            .collect();
        for seed in 0..3 {
            let m = random_init(&arch, seed).unwrap();
            let acc = evaluate_accuracy(&m, &data).unwrap();
            assert!((acc - 0.1).abs() <= 0.03, "seed {seed}: {acc}");
        }
    }

    proptest::proptest! {
        #[test]
        fn distributions_are_normalised(xs in proptest::collection::vec(-50.0f64..50.0, 4), seed in 0u64..100) {
            let m = random_init(&Architecture::new(4, vec![5], 3).unwrap(), seed).unwrap();
            let p = predict_distribution(&m, &LabeledExample::new(xs, 0)).unwrap();
            proptest::prop_assert!(p.iter().all(|v| *v >= 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
}
