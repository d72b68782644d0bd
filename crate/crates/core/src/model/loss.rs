//! Per-sample objectives expressed as gradients with respect to the logits.

/// Probability floor used wherever a logarithm of a target distribution is
/// taken.
pub(crate) const PROB_FLOOR: f64 = 1e-12;

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let ls = log_softmax(logits);
    let mut p: Vec<f64> = ls.iter().map(|l| l.exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// One weighted component of a sample's loss.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `weight · −log p_label`
    CrossEntropy { label: usize, weight: f64 },
    /// `weight · KL(p ‖ target)` in nats, `p` being the model's softmax output.
    /// A negative weight turns descent into ascent.
    Kl { target: Vec<f64>, weight: f64 },
}

impl Term {
    pub fn cross_entropy(label: usize) -> Self {
        Term::CrossEntropy { label, weight: 1.0 }
    }

    pub fn kl(target: Vec<f64>) -> Self {
        Term::Kl { target, weight: 1.0 }
    }

    pub fn weighted(self, w: f64) -> Self {
        match self {
            Term::CrossEntropy { label, weight } => Term::CrossEntropy { label, weight: weight * w },
            Term::Kl { target, weight } => Term::Kl { target, weight: weight * w },
        }
    }
}

/// Total loss of `terms` at `logits` and its gradient with respect to the
/// logits.
pub(crate) fn loss_and_grad(logits: &[f64], terms: &[Term]) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let mut grad = vec![0.0; logits.len()];
    let mut loss = 0.0;
    for term in terms {
        match term {
            Term::CrossEntropy { label, weight } => {
                loss -= weight * logp[*label];
                for (j, g) in grad.iter_mut().enumerate() {
                    let onehot = if j == *label { 1.0 } else { 0.0 };
                    *g += weight * (p[j] - onehot);
                }
            }
            Term::Kl { target, weight } => {
                // a_i = log p_i − log t_i;  ∂KL/∂z_j = p_j (a_j − Σ_i p_i a_i)
                let a: Vec<f64> = logp.iter().zip(target).map(|(lp, t)| lp - t.max(PROB_FLOOR).ln()).collect();
                let mean: f64 = p.iter().zip(&a).map(|(pi, ai)| pi * ai).sum();
                loss += weight * mean;
                for ((g, pj), aj) in grad.iter_mut().zip(&p).zip(&a) {
                    *g += weight * pj * (aj - mean);
                }
            }
        }
    }
    (loss, grad)
}
