//! Loss-threshold membership inference with a logistic-regression attacker.
//!
//! The attacker is fit on per-sample losses of known members (retain set) and
//! known non-members (test set), then queried on the forget set. A score near
//! the attacker's member rate means the forget set still looks like training
//! data; a score near zero means it looks like unseen data.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledExample;
use crate::error::{Error, Result};
use crate::model::{per_sample_losses, Classifier};

/// Minimum number of losses required on each side of the attack data.
pub const MIN_ATTACK_SAMPLES: usize = 10;
const RIDGE: f64 = 1.0;
const NEWTON_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AttackDataset {
    pub member_losses: Vec<f64>,
    pub nonmember_losses: Vec<f64>,
}

/// `P(member | loss) = σ(w · (loss − μ)/σ + b)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticAttacker {
    pub weight: f64,
    pub bias: f64,
    mean: f64,
    scale: f64,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticAttacker {
    /// Ridge-penalised (on the slope only) maximum likelihood by Newton's
    /// method. `labels[i]` is true for members.
    pub fn fit(losses: &[f64], labels: &[bool]) -> Result<Self> {
        if losses.len() != labels.len() {
            return Err(Error::ShapeMismatch { expected: losses.len(), actual: labels.len() });
        }
        if !labels.iter().any(|l| *l) || labels.iter().all(|l| *l) {
            return Err(Error::invalid("attacker training labels contain a single class"));
        }
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("attack losses must be finite"));
        }
        let n = losses.len() as f64;
        let mean = losses.iter().sum::<f64>() / n;
        let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let xs: Vec<f64> = losses.iter().map(|l| (l - mean) / scale).collect();
        let (mut w, mut b) = (0.0f64, 0.0f64);
        for _ in 0..NEWTON_ITERS {
            let (mut gw, mut gb) = (RIDGE * w, 0.0);
            let (mut hww, mut hwb, mut hbb) = (RIDGE, 0.0, 0.0);
            for (x, &y) in xs.iter().zip(labels) {
                let p = sigmoid(w * x + b);
                let r = p - if y { 1.0 } else { 0.0 };
                let s = p * (1.0 - p);
                gw += r * x;
                gb += r;
                hww += s * x * x;
                hwb += s * x;
                hbb += s;
            }
            let det = hww * hbb - hwb * hwb;
            if det.abs() < 1e-300 {
                break;
            }
            let dw = (hbb * gw - hwb * gb) / det;
            let db = (hww * gb - hwb * gw) / det;
            w -= dw;
            b -= db;
            if dw.abs().max(db.abs()) < 1e-12 {
                break;
            }
        }
        Ok(Self { weight: w, bias: b, mean, scale })
    }

    pub fn membership_probability(&self, loss: f64) -> f64 {
        sigmoid(self.weight * (loss - self.mean) / self.scale + self.bias)
    }
}

/// Result of fitting an attacker on a stratified half of the attack data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedAttack {
    pub attacker: LogisticAttacker,
    /// Accuracy on the held-out half of the attack data.
    pub held_out_accuracy: f64,
}

/// Balances members and non-members to equal counts, splits each side 50/50
/// under `seed`, fits on the first halves and scores accuracy on the rest.
pub fn fit_attack(attack: &AttackDataset, seed: u64) -> Result<FittedAttack> {
    let (m, nm) = (attack.member_losses.len(), attack.nonmember_losses.len());
    if m == 0 || nm == 0 {
        return Err(Error::EmptyData("attack losses"));
    }
    if m.min(nm) < MIN_ATTACK_SAMPLES {
        return Err(Error::invalid(format!(
            "membership attack needs at least {MIN_ATTACK_SAMPLES} losses per side, got {m} members and {nm} non-members"
        )));
    }
    let n = m.min(nm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |v: &[f64]| {
        let mut v = v.to_vec();
        v.shuffle(&mut rng);
        v.truncate(n);
        v
    };
    let members = draw(&attack.member_losses);
    let nonmembers = draw(&attack.nonmember_losses);
    let half = n / 2;
    let mut fit_x = Vec::with_capacity(2 * half);
    let mut fit_y = Vec::with_capacity(2 * half);
    fit_x.extend_from_slice(&members[..half]);
    fit_y.extend(std::iter::repeat_n(true, half));
    fit_x.extend_from_slice(&nonmembers[..half]);
    fit_y.extend(std::iter::repeat_n(false, half));
    let attacker = LogisticAttacker::fit(&fit_x, &fit_y)?;
    let held_out = (n - half) * 2;
    let correct = members[half..].iter().filter(|l| attacker.membership_probability(**l) >= 0.5).count()
        + nonmembers[half..].iter().filter(|l| attacker.membership_probability(**l) < 0.5).count();
    Ok(FittedAttack { attacker, held_out_accuracy: correct as f64 / held_out as f64 })
}

/// Mean membership probability the attacker assigns to `target_losses`.
pub fn mia_score_from_losses(attack: &AttackDataset, target_losses: &[f64], seed: u64) -> Result<f64> {
    if target_losses.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    let fitted = fit_attack(attack, seed)?;
    Ok(target_losses.iter().map(|l| fitted.attacker.membership_probability(*l)).sum::<f64>()
        / target_losses.len() as f64)
}

/// Membership score of the forget set under `model`, using retain losses as
/// members and test losses as non-members to train the attacker.
pub fn mia_score(
    model: &Classifier,
    retain: &[LabeledExample],
    forget: &[LabeledExample],
    test: &[LabeledExample],
    seed: u64,
) -> Result<f64> {
    if forget.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    if retain.is_empty() || test.is_empty() {
        return Err(Error::EmptyData("attack data"));
    }
    let attack = AttackDataset {
        member_losses: per_sample_losses(model, retain)?,
        nonmember_losses: per_sample_losses(model, test)?,
    };
    mia_score_from_losses(&attack, &per_sample_losses(model, forget)?, seed)
}
