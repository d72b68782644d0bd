//! Evaluation suite: relative test/retain/forget accuracy, zero-retrain
//! forgetting (ZRF), membership inference and wall time.

mod divergence;
mod mia;

use serde::{Deserialize, Serialize};

use crate::data::{ForgetSplit, LabeledExample, Scenario};
use crate::error::{Error, Result};
use crate::model::{evaluate_accuracy, predict_all, Classifier};

pub use divergence::{js_divergence, kl_divergence, KL_EPSILON, NORMALIZATION_TOLERANCE};
pub use mia::{
    fit_attack, mia_score, mia_score_from_losses, AttackDataset, FittedAttack, LogisticAttacker, MIN_ATTACK_SAMPLES,
};

/// One results-table row. Accuracies are percentages of the baseline model's
/// accuracy on the same set and may exceed 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc_t: f64,
    pub acc_r: f64,
    pub acc_f: f64,
    pub zrf: f64,
    pub mia: f64,
    pub time_seconds: f64,
}

impl MetricsReport {
    /// Largest absolute difference over every field except `time_seconds`.
    pub fn max_abs_diff(&self, other: &MetricsReport) -> f64 {
        [
            self.acc_t - other.acc_t,
            self.acc_r - other.acc_r,
            self.acc_f - other.acc_f,
            self.zrf - other.zrf,
            self.mia - other.mia,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// `a_u / a_b × 100`.
pub fn relative_accuracy(a_u: f64, a_b: f64) -> Result<f64> {
    if a_b == 0.0 {
        return Err(Error::UndefinedBaseline("baseline"));
    }
    if !(a_u.is_finite() && a_b.is_finite()) || a_u < 0.0 || a_b < 0.0 {
        return Err(Error::invalid(format!("accuracies must be finite and non-negative, got {a_u} and {a_b}")));
    }
    Ok(a_u / a_b * 100.0)
}

/// `1 − mean JS(model(x), incompetent(x))` over the forget set.
pub fn zrf(model: &Classifier, incompetent: &Classifier, forget: &[LabeledExample]) -> Result<f64> {
    if forget.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    if model.num_classes() != incompetent.num_classes() {
        return Err(Error::ShapeMismatch { expected: model.num_classes(), actual: incompetent.num_classes() });
    }
    let p = predict_all(model, forget)?;
    let q = predict_all(incompetent, forget)?;
    let total: f64 = p.iter().zip(&q).map(|(a, b)| divergence::js_unchecked(a, b)).sum();
    Ok((1.0 - total / forget.len() as f64).clamp(0.0, 1.0))
}

/// Test examples that count towards `acc_t`: full-class forgetting drops the
/// forgotten class, every other scenario keeps the whole test set.
pub fn test_restriction<'a>(split: &ForgetSplit, test: &'a [LabeledExample]) -> Vec<&'a LabeledExample> {
    match (split.scenario, split.target_class) {
        (Scenario::FullClass, Some(c)) => test.iter().filter(|ex| ex.label != c).collect(),
        _ => test.iter().collect(),
    }
}

fn relative_on(unlearned: &Classifier, baseline: &Classifier, data: &[LabeledExample], what: &'static str) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData(what));
    }
    let a_b = evaluate_accuracy(baseline, data)?;
    if a_b == 0.0 {
        return Err(Error::UndefinedBaseline(what));
    }
    relative_accuracy(evaluate_accuracy(unlearned, data)?, a_b)
}

pub fn evaluate_all(
    unlearned: &Classifier,
    baseline: &Classifier,
    split: &ForgetSplit,
    test: &[LabeledExample],
    incompetent: &Classifier,
    time_seconds: f64,
    seed: u64,
) -> Result<MetricsReport> {
    let restricted: Vec<LabeledExample> = test_restriction(split, test).into_iter().cloned().collect();
    Ok(MetricsReport {
        acc_t: relative_on(unlearned, baseline, &restricted, "test set")?,
        acc_r: relative_on(unlearned, baseline, &split.retain, "retain set")?,
        acc_f: relative_on(unlearned, baseline, &split.forget, "forget set")?,
        zrf: zrf(unlearned, incompetent, &split.forget)?,
        mia: mia_score(unlearned, &split.retain, &split.forget, test, seed)?,
        time_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_init, Architecture};

    #[test]
    fn relative_accuracy_cases() {
        assert_eq!(relative_accuracy(0.8, 0.8).unwrap(), 100.0);
        assert_eq!(relative_accuracy(0.0, 0.8).unwrap(), 0.0);
        assert_eq!(relative_accuracy(0.4, 0.8).unwrap(), 50.0);
        assert!(relative_accuracy(0.9, 0.8).unwrap() > 100.0);
        assert!(matches!(relative_accuracy(0.5, 0.0), Err(Error::UndefinedBaseline(_))));
    }

    proptest::proptest! {
        #[test]
        fn relative_accuracy_is_scale_invariant(a_u in 0.0f64..1.0, a_b in 0.01f64..1.0, c in 0.01f64..100.0) {
            let base = relative_accuracy(a_u, a_b).unwrap();
            let scaled = relative_accuracy(c * a_u, c * a_b).unwrap();
            proptest::prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
        }
    }

    /// Two-class linear model on a 1-d input whose output is one-hot at
    /// class `hot` (to within exp(-200)).
    fn one_hot_model(hot: usize) -> Classifier {
        let arch = Architecture::new(1, vec![], 2).unwrap();
        let bias = if hot == 0 { [100.0, -100.0] } else { [-100.0, 100.0] };
        Classifier::from_parameters(arch, vec![0.0, 0.0, bias[0], bias[1]]).unwrap()
    }

    #[test]
    fn zrf_cases() {
        let arch = Architecture::new(3, vec![4], 3).unwrap();
        let t = random_init(&arch, 1).unwrap();
        let forget: Vec<_> = (0..20).map(|i| LabeledExample::new(vec![i as f64, -1.0, 0.5], i % 3)).collect();
        assert!((zrf(&t, &t, &forget).unwrap() - 1.0).abs() <= 1e-6);

        let x = [LabeledExample::new(vec![0.0], 0)];
        assert_eq!(zrf(&one_hot_model(0), &one_hot_model(1), &x).unwrap(), 0.0);

        // a model whose output flips with the sign of the input: JS = 1 then 0
        let arch = Architecture::new(1, vec![], 2).unwrap();
        let flip = Classifier::from_parameters(arch, vec![200.0, -200.0, 0.0, 0.0]).unwrap();
        let two = [LabeledExample::new(vec![-1.0], 0), LabeledExample::new(vec![1.0], 0)];
        assert!((zrf(&flip, &one_hot_model(0), &two).unwrap() - 0.5).abs() < 1e-12);

        assert!(zrf(&t, &t, &[]).is_err());
        let other = random_init(&Architecture::new(3, vec![4], 4).unwrap(), 1).unwrap();
        assert!(zrf(&t, &other, &forget).is_err());
    }
}
