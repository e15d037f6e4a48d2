use cslab::corpus::{
    corpus_stats, format_corpus, load_corpus, parse_corpus, save_corpus, BatchId, Corpus, Language,
    Status, TaggedToken, Utterance,
};
use cslab::datagen::{generate_corpus, ScenarioSpec, BATCH_ORDER};
use cslab::recognizer::{format_observations, parse_observations};
use proptest::prelude::*;

fn token() -> impl Strategy<Value = TaggedToken> {
    ("[a-z]{1,6}(_[a-z]{1,3})?", 0..5usize)
        .prop_map(|(s, l)| TaggedToken::new(s, Language::ALL[l]).unwrap())
}

fn utterance(i: usize) -> impl Strategy<Value = Utterance> {
    let tokens = prop::collection::vec(token(), 0..6);
    (tokens, 0.0..60.0f64, 0..3u8, "[A-Za-z0-9]{1,4}").prop_map(move |(tokens, dur, kind, sys)| {
        let (status, prov) = match (tokens.is_empty(), kind) {
            (true, _) => (Status::Untranscribed, None),
            (false, 0) => (Status::Manual, None),
            (false, 1) => (Status::Manual, Some(sys)),
            _ => (Status::Auto, Some(sys)),
        };
        Utterance::new(
            format!("u{i}"),
            "spk",
            BatchId::new("B2"),
            dur,
            tokens,
            status,
            prov,
        )
        .unwrap()
    })
}

fn corpus() -> impl Strategy<Value = Corpus> {
    (0..8usize)
        .prop_flat_map(|n| (0..n).map(utterance).collect::<Vec<_>>())
        .prop_map(|u| Corpus::new(u).unwrap())
}

proptest! {
    #[test]
    fn text_format_round_trips(c in corpus()) {
        let text = format_corpus(&c);
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(back.utterances(), c.utterances());
        prop_assert_eq!(format_corpus(&back), text);
    }
}

#[test]
fn file_round_trip_and_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let c = parse_corpus("# header\nu1\tspk\tManT\t2.5\thello_E sawubona_Z\n\nu2\tspk\tB1\t1\t-\n")
        .unwrap();
    assert_eq!(c.len(), 2);
    save_corpus(&c, &path).unwrap();
    assert_eq!(load_corpus(&path).unwrap().utterances(), c.utterances());
    assert!(load_corpus(dir.path().join("missing.txt")).is_err());
}

#[test]
fn generated_scenario_is_seeded_and_complete() {
    let mut spec = ScenarioSpec::reference();
    for batches in spec.pairs.values_mut() {
        for n in batches.values_mut() {
            *n = (*n / 20).max(3);
        }
    }
    let a = generate_corpus(&spec).unwrap();
    let b = generate_corpus(&spec).unwrap();
    assert_eq!(format_corpus(&a.truth), format_corpus(&b.truth));
    assert_eq!(
        format_observations(&a.observations),
        format_observations(&b.observations)
    );

    spec.seed += 1;
    let c = generate_corpus(&spec).unwrap();
    assert_ne!(format_corpus(&a.truth), format_corpus(&c.truth));

    for name in BATCH_ORDER {
        let want: usize = spec
            .pairs
            .values()
            .map(|p| p.get(name).copied().unwrap_or(0))
            .sum();
        assert_eq!(a.batch(name).len(), want, "{name}");
        assert_eq!(a.batch_observations(name).len(), want, "{name}");
    }
    for u in a.batch("test").iter() {
        assert!(u.is_code_switched(), "{}", u.id());
    }
    let obs = parse_observations(&format_observations(&a.observations)).unwrap();
    assert_eq!(obs.len(), a.truth.len());
    let vocab = a.vocabulary();
    assert!(a
        .truth
        .iter()
        .flat_map(|u| u.tokens())
        .all(|t| vocab.contains(t.surface())));

    let stats = corpus_stats(&a.truth);
    assert_eq!(
        stats.tokens,
        a.truth.iter().map(|u| u.tokens().len() as u64).sum::<u64>()
    );
    let shares: f64 = stats
        .per_language
        .values()
        .map(|l| l.mono_duration + l.cs_duration_share)
        .sum();
    assert!((shares - stats.total_duration).abs() < 1e-6 * stats.total_duration);
}
