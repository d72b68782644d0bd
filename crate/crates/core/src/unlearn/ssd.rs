//! Selective synaptic dampening: shrink the parameters whose Fisher
//! importance on the forget set dominates their importance on the full
//! training set.

use serde::{Deserialize, Serialize};

use super::{check_positive, timed, UnlearnResult};
use crate::data::ForgetSplit;
use crate::error::{Error, Result};
use crate::model::{fim_diagonal, Classifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsdConfig {
    /// Selection threshold multiplier.
    pub alpha: f64,
    /// Dampening constant.
    pub gamma: f64,
}

impl Default for SsdConfig {
    fn default() -> Self {
        Self { alpha: 15.0, gamma: 1.0 }
    }
}

impl SsdConfig {
    /// Values used for the vision-transformer runs.
    pub fn vit_preset() -> Self {
        Self { alpha: 25.0, gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("ssd alpha", self.alpha)?;
        check_positive("ssd gamma", self.gamma)
    }
}

/// Multiplies parameter `i` by `min(γ·F_D[i] / F_f[i], 1)` whenever
/// `F_f[i] > α·F_D[i]`; every other parameter is left bit-for-bit unchanged.
/// Returns the number of selected parameters.
pub fn ssd_dampen(params: &mut [f64], fim_full: &[f64], fim_forget: &[f64], config: &SsdConfig) -> usize {
    let mut selected = 0;
    for ((p, &full), &forget) in params.iter_mut().zip(fim_full).zip(fim_forget) {
        if forget > config.alpha * full {
            *p *= (config.gamma * full / forget).min(1.0);
            selected += 1;
        }
    }
    selected
}

pub fn ssd(model: &Classifier, split: &ForgetSplit, config: &SsdConfig) -> Result<UnlearnResult> {
    config.validate()?;
    if split.forget.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    let full = split.full_train();
    timed(|| {
        let fim_full = fim_diagonal(model, &full)?;
        let fim_forget = fim_diagonal(model, &split.forget)?;
        let mut out = model.clone();
        ssd_dampen(out.parameters_mut(), &fim_full.values, &fim_forget.values, config);
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_worked_selection() {
        let mut params = vec![2.0, 3.0];
        let n = ssd_dampen(&mut params, &[4.0, 1.0], &[9.0, 1.0], &SsdConfig { alpha: 2.0, gamma: 1.0 });
        assert_eq!(n, 1);
        assert!((params[0] - 2.0 * 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(params[1], 3.0);
    }

    #[test]
    fn dampening_never_amplifies() {
        // selected because F_D = 0 while F_f > 0: beta = 0
        let mut params = vec![1.5, -2.0];
        let n = ssd_dampen(&mut params, &[0.0, 1.0], &[1e-3, 50.0], &SsdConfig { alpha: 1.0, gamma: 100.0 });
        assert_eq!(n, 2);
        assert_eq!(params[0], 0.0);
        assert_eq!(params[1], -2.0); // min(100·1/50, 1) = 1
    }

    #[test]
    fn huge_alpha_selects_nothing() {
        let mut params = vec![0.1, 0.2, 0.3];
        let before = params.clone();
        let n = ssd_dampen(&mut params, &[1e-9, 1.0, 0.0], &[1.0, 2.0, 0.0], &SsdConfig { alpha: 1e12, gamma: 1.0 });
        assert_eq!(n, 0);
        assert_eq!(params, before);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SsdConfig { alpha: 0.0, gamma: 1.0 }.validate().is_err());
        assert!(SsdConfig { alpha: 1.0, gamma: -1.0 }.validate().is_err());
    }
}
