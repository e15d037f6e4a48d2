use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::Lexicon;
use crate::error::{Error, Result};

/// Word-level confusion channel.
///
/// A true word `w` is emitted unchanged with probability `p_correct`. The
/// remaining mass goes to its `fan_out` nearest lexicon neighbours, except
/// for a `floor` fraction spread uniformly over every other entry.
/// Deletion and insertion rates only affect sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    pub p_correct: f64,
    pub fan_out: usize,
    pub floor: f64,
    pub deletion_rate: f64,
    pub insertion_rate: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            p_correct: 0.85,
            fan_out: 3,
            floor: 0.1,
            deletion_rate: 0.0,
            insertion_rate: 0.0,
        }
    }
}

/// Bounds applied to re-estimated `p_correct`.
pub const P_CORRECT_RANGE: (f64, f64) = (0.01, 0.999);

impl ChannelModel {
    pub fn with_p_correct(p_correct: f64) -> Self {
        ChannelModel {
            p_correct,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.p_correct > 0.0 && self.p_correct <= 1.0) {
            return bad("p_correct must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return bad("floor must be in [0, 1]");
        }
        let (d, i) = (self.deletion_rate, self.insertion_rate);
        if !(d >= 0.0 && i >= 0.0 && d + i < 0.5) {
            return bad("deletion and insertion rates must be non-negative and sum below 0.5");
        }
        Ok(())
    }

    fn masses(&self, lexicon: &Lexicon) -> (usize, usize, f64, f64) {
        let others = lexicon.len() - 1;
        let near_n = self
            .fan_out
            .min(others)
            .min(lexicon.depth().saturating_sub(1));
        let far_n = others - near_n;
        let wrong = 1.0 - self.p_correct;
        let (near, far) = match (near_n, far_n) {
            (0, 0) => (0.0, 0.0),
            (0, _) => (0.0, wrong / far_n as f64),
            (_, 0) => (wrong / near_n as f64, 0.0),
            _ => (
                wrong * (1.0 - self.floor) / near_n as f64,
                wrong * self.floor / far_n as f64,
            ),
        };
        (near_n, far_n, near, far)
    }

    /// `P(observed | word)`. Symbols outside the lexicon receive the
    /// uniform floor rate.
    pub fn emission(&self, lexicon: &Lexicon, observed: &str, word: u32) -> f64 {
        let (near_n, far_n, near, far) = self.masses(lexicon);
        if lexicon.word(word) == observed {
            return if lexicon.len() == 1 {
                1.0
            } else {
                self.p_correct
            };
        }
        match lexicon.id(observed) {
            Some(o) if lexicon.neighbours(word, near_n).contains(&o) => near,
            Some(_) => far,
            None if far_n > 0 => far,
            None => (1.0 - self.p_correct) * self.floor,
        }
    }

    /// Log emission; zero-probability emissions are clamped to the smallest
    /// positive double so path scores stay finite.
    pub fn log_emission(&self, lexicon: &Lexicon, observed: &str, word: u32) -> f64 {
        self.emission(lexicon, observed, word)
            .max(f64::MIN_POSITIVE)
            .ln()
    }

    /// Draws one observed symbol for `word`.
    pub fn sample<R: Rng + ?Sized>(&self, lexicon: &Lexicon, word: u32, rng: &mut R) -> u32 {
        let (near_n, far_n, _, _) = self.masses(lexicon);
        if lexicon.len() == 1 || rng.gen::<f64>() < self.p_correct {
            return word;
        }
        let near = lexicon.neighbours(word, near_n);
        let use_near = near_n > 0 && (far_n == 0 || rng.gen::<f64>() >= self.floor);
        if use_near {
            return near[rng.gen_range(0..near.len())];
        }
        loop {
            let cand = rng.gen_range(0..lexicon.len()) as u32;
            if cand != word && !near.contains(&cand) {
                return cand;
            }
        }
    }

    /// Corrupts a word sequence into observed symbols, applying deletions
    /// and insertions at their rates. At least one symbol is always kept.
    pub fn corrupt<R: Rng + ?Sized>(
        &self,
        lexicon: &Lexicon,
        words: &[u32],
        rng: &mut R,
    ) -> Vec<String> {
        let mut out = Vec::with_capacity(words.len());
        for &w in words {
            if self.deletion_rate > 0.0 && rng.gen::<f64>() < self.deletion_rate {
                continue;
            }
            out.push(lexicon.word(self.sample(lexicon, w, rng)).to_string());
            if self.insertion_rate > 0.0 && rng.gen::<f64>() < self.insertion_rate {
                let extra = rng.gen_range(0..lexicon.len()) as u32;
                out.push(lexicon.word(extra).to_string());
            }
        }
        if out.is_empty() && !words.is_empty() {
            out.push(
                lexicon
                    .word(self.sample(lexicon, words[0], rng))
                    .to_string(),
            );
        }
        out
    }
}

/// Fraction of positions whose observed symbol equals the transcribed
/// word, over pairs of equal length. `None` without usable pairs.
pub fn estimate_p_correct<'a, I, S, T>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = (&'a [S], &'a [T])>,
    S: AsRef<str> + 'a,
    T: crate::lm::Word + 'a,
{
    let (mut agree, mut total) = (0u64, 0u64);
    for (obs, words) in pairs {
        if obs.len() != words.len() {
            continue;
        }
        for (o, w) in obs.iter().zip(words) {
            total += 1;
            agree += u64::from(o.as_ref() == w.surface());
        }
    }
    (total > 0).then(|| agree as f64 / total as f64)
}
