use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, Term};
use super::train::validate_data;
use super::Classifier;
use crate::data::LabeledExample;
use crate::error::Result;

/// Diagonal of the empirical Fisher information, indexed like
/// [`Classifier::parameters`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimDiagonal {
    pub values: Vec<f64>,
}

impl FimDiagonal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

// Fixed chunking keeps the floating-point reduction order independent of the
// thread count.
const CHUNK: usize = 32;

/// Mean over `data` of the squared per-sample cross-entropy gradient, taken at
/// each sample's own label.
pub fn fim_diagonal(model: &Classifier, data: &[LabeledExample]) -> Result<FimDiagonal> {
    validate_data(model, data)?;
    let n = model.param_count();
    let partials: Vec<Vec<f64>> = data
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut g = vec![0.0; n];
            for ex in chunk {
                g.iter_mut().for_each(|v| *v = 0.0);
                let trace = model.forward_trace(&ex.features);
                let (_, dlogits) = loss_and_grad(trace.logits(), &[Term::cross_entropy(ex.label)]);
                model.backward(&trace, &dlogits, 1.0, Some(&mut g), false);
                for (a, gi) in acc.iter_mut().zip(&g) {
                    *a += gi * gi;
                }
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; n];
    for part in &partials {
        for (v, p) in values.iter_mut().zip(part) {
            *v += p;
        }
    }
    let inv = 1.0 / data.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(FimDiagonal { values })
}
