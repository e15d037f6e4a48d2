use std::collections::BTreeMap;
use std::sync::Arc;

use cslab::augment::{generate, train_generator, NGramSampler};
use cslab::corpus::{count_token_switches, Language, TaggedToken};
use cslab::datagen::{generate_corpus, ScenarioSpec};
use cslab::lm::{train_ngram, BoundaryMode};

fn switch_rate(sentences: &[Vec<TaggedToken>]) -> f64 {
    let (mut switches, mut pairs) = (0, 0);
    for s in sentences {
        switches += count_token_switches(s).total();
        pairs += s.len().saturating_sub(1) as u64;
    }
    switches as f64 / pairs as f64
}

/// Switch rate of independent draws from the training unigram
/// frequencies: 1 - Σ P(lang)^2.
fn chance_rate(sentences: &[Vec<TaggedToken>]) -> f64 {
    let mut by_lang: BTreeMap<Language, f64> = BTreeMap::new();
    let mut n = 0.0;
    for t in sentences.iter().flatten() {
        *by_lang.entry(t.lang()).or_default() += 1.0;
        n += 1.0;
    }
    1.0 - by_lang.values().map(|c| (c / n).powi(2)).sum::<f64>()
}

#[test]
fn generated_text_switches_between_training_and_chance() {
    let spec = ScenarioSpec::reference();
    let data = generate_corpus(&spec).unwrap();
    let train = data
        .truth
        .filter(|u| ["ManT", "B1", "B2", "B3"].contains(&u.batch().as_str()))
        .sentences();
    let vocab = Arc::new(data.vocabulary());
    let mut g = train_generator(&train, vocab.clone(), spec.seed).unwrap();
    let out = generate(&mut g, 200_000).unwrap().sentences();
    let (train_rate, got, chance) = (switch_rate(&train), switch_rate(&out), chance_rate(&train));
    eprintln!("switch rate: training {train_rate:.4}, generated {got:.4}, chance {chance:.4}");
    assert!(train_rate < got && got < chance);
    assert!(out.iter().flatten().all(|t| vocab.contains(t.surface())));
}

#[test]
fn unigram_generator_reaches_chance_rate() {
    let spec = ScenarioSpec::reference();
    let data = generate_corpus(&spec).unwrap();
    let train = data.batch("ManT").sentences();
    let lm = train_ngram(
        &train,
        Arc::new(data.vocabulary()),
        1,
        BoundaryMode::Sentence,
    )
    .unwrap();
    let mut g = NGramSampler::new(lm.clone(), 1.0, 1).unwrap();
    let out = generate(&mut g, 200_000).unwrap().sentences();
    // Chance rate under the model's own unigram (word mass summed per tag).
    let mut by_lang: BTreeMap<Language, f64> = BTreeMap::new();
    let mut words = 0.0;
    for w in lm.vocab().words() {
        let p = lm.prob::<&str>(&[], w).unwrap();
        *by_lang
            .entry(*lm.vocab().languages_of(w).unwrap().iter().next().unwrap())
            .or_default() += p;
        words += p;
    }
    let want = 1.0 - by_lang.values().map(|p| (p / words).powi(2)).sum::<f64>();
    let got = switch_rate(&out);
    assert!((got - want).abs() < 0.01, "{got} vs {want}");
}
