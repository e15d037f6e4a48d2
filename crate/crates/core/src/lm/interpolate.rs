use serde::{Deserialize, Serialize};

use super::model::{mix, Model, NGramLM};
use super::perplexity::{event_probs_ids, ppl_from};
use super::vocab::Word;
use crate::error::{Error, Result};

/// Number of grid intervals searched by [`optimize_weight`].
pub const WEIGHT_GRID_STEPS: u32 = 100;

fn check_compatible(lm1: &NGramLM, lm2: &NGramLM) -> Result<()> {
    if lm1.vocab != lm2.vocab {
        return Err(Error::VocabularyMismatch);
    }
    if lm1.order != lm2.order || lm1.boundary != lm2.boundary {
        return Err(Error::InvalidParameter(
            "interpolated models need the same order and boundary mode".into(),
        ));
    }
    Ok(())
}

/// Linear interpolation `weight * lm1 + (1 - weight) * lm2`, exact for
/// every context and word.
pub fn interpolate(lm1: &NGramLM, lm2: &NGramLM, weight: f64) -> Result<NGramLM> {
    check_compatible(lm1, lm2)?;
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::InvalidParameter(format!(
            "weight {weight} outside [0, 1]"
        )));
    }
    Ok(NGramLM {
        vocab: lm1.vocab.clone(),
        order: lm1.order,
        boundary: lm1.boundary,
        smoothing: format!("mixture({}, {})", lm1.smoothing, lm2.smoothing),
        model: Model::Mixture {
            first: Box::new(lm1.clone()),
            second: Box::new(lm2.clone()),
            weight,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightChoice {
    /// Weight of the first model.
    pub lambda: f64,
    pub dev_ppl: f64,
}

/// Grid point `i` of the weight search.
pub fn grid_weight(i: u32) -> f64 {
    f64::from(i) / f64::from(WEIGHT_GRID_STEPS)
}

/// Chooses the weight of `lm1` on the grid `0.00, 0.01, ..., 1.00` that
/// minimizes dev perplexity of the interpolated model; ties go to the
/// smallest weight.
pub fn optimize_weight<W: Word>(
    lm1: &NGramLM,
    lm2: &NGramLM,
    dev: &[Vec<W>],
) -> Result<WeightChoice> {
    check_compatible(lm1, lm2)?;
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for (i, s) in dev.iter().enumerate() {
        let ids = lm1.sentence_ids(s, i)?;
        p1.extend(event_probs_ids(lm1, &ids));
        p2.extend(event_probs_ids(lm2, &ids));
    }
    if p1.is_empty() {
        return Err(Error::Empty("development set"));
    }
    let mut best: Option<WeightChoice> = None;
    for i in 0..=WEIGHT_GRID_STEPS {
        let lambda = grid_weight(i);
        let mut sum = 0.0;
        for (a, b) in p1.iter().zip(&p2) {
            sum += mix(lambda, *a, *b).ln();
        }
        let dev_ppl = ppl_from(sum, p1.len());
        if best.is_none_or(|b| dev_ppl < b.dev_ppl) {
            best = Some(WeightChoice { lambda, dev_ppl });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Tunes the weight of `extra` against `base` on `dev` and returns the
/// interpolated model. A weight of zero keeps `base` unchanged.
pub fn interpolate_tuned<W: Word>(
    extra: &NGramLM,
    base: &NGramLM,
    dev: &[Vec<W>],
) -> Result<(NGramLM, WeightChoice)> {
    let choice = optimize_weight(extra, base, dev)?;
    Ok((interpolate(extra, base, choice.lambda)?, choice))
}
