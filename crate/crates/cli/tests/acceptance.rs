//! End-to-end acceptance checks. Runs as a plain binary so that every
//! check prints one line whether it passes or not.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use cslab::corpus::{parse_tokens, Corpus, Language, TaggedToken};
use cslab::datagen::{generate_corpus, GeneratedData, ScenarioSpec};
use cslab::lm::{
    decomposed_perplexity, grid_weight, interpolate, load_arpa, optimize_weight, perplexity,
    save_arpa, train_ngram, BoundaryMode, NGramLM, Vocabulary, BOS, EOS, WEIGHT_GRID_STEPS,
};
use cslab::metrics::{align, csba};
use cslab::recognizer::{lexicon_for, train_with_lexicon, viterbi, Lattice, Recognizer};
use cslab::semisup::{
    build_semisup_lm, run_system, transcribe_parallel_bilingual, RunData, SystemConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || {
        format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit.as_secs())
    })
}

struct Reference {
    spec: ScenarioSpec,
    data: GeneratedData,
}

fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let spec = ScenarioSpec::reference();
        let data = generate_corpus(&spec).expect("reference scenario generates");
        Reference { spec, data }
    })
}

fn ez() -> BTreeSet<Language> {
    BTreeSet::from([Language::English, Language::Zulu])
}

fn within_pair(c: &Corpus, langs: &BTreeSet<Language>) -> Corpus {
    c.filter(|u| u.is_transcribed() && u.languages().is_subset(langs))
}

/// Baseline EZ trigram over the pair's part of the scenario vocabulary.
fn ez_baseline(r: &Reference) -> Result<NGramLM, String> {
    let vocab = Arc::new(r.data.vocabulary().restrict(&ez()));
    let train = within_pair(&r.data.batch("ManT"), &ez()).sentences();
    train_ngram(&train, vocab, 3, BoundaryMode::Sentence).map_err(|e| e.to_string())
}

fn random_text(rng: &mut ChaCha8Rng, v: usize) -> Vec<Vec<String>> {
    (0..rng.gen_range(1..=5))
        .map(|_| {
            (0..rng.gen_range(1..=5))
                .map(|_| format!("w{}", rng.gen_range(0..v)))
                .collect()
        })
        .collect()
}

fn small_vocab(v: usize) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::from_words((0..v).map(|i| format!("w{i}"))).unwrap())
}

fn random_boundary(rng: &mut ChaCha8Rng) -> BoundaryMode {
    if rng.gen_bool(0.5) {
        BoundaryMode::Sentence
    } else {
        BoundaryMode::NoBoundary
    }
}

fn events(lm: &NGramLM) -> Vec<String> {
    let mut e: Vec<String> = lm.vocab().words().map(String::from).collect();
    if lm.boundary() == BoundaryMode::Sentence {
        e.push(EOS.to_string());
    }
    e
}

/// All histories of `len` symbols over the words and `<s>`.
fn all_contexts(lm: &NGramLM, len: usize) -> Vec<Vec<String>> {
    let mut symbols: Vec<String> = lm.vocab().words().map(String::from).collect();
    symbols.push(BOS.to_string());
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|c| {
                symbols.iter().map(move |s| {
                    let mut n: Vec<String> = c.clone();
                    n.push(s.clone());
                    n
                })
            })
            .collect();
    }
    out
}

fn c1_normalization() -> Check {
    let r = reference();
    let start = Instant::now();
    let vocab = Arc::new(r.data.vocabulary());
    let lm = train_ngram(
        &r.data.batch("ManT").sentences(),
        vocab.clone(),
        3,
        BoundaryMode::Sentence,
    )
    .map_err(|e| e.to_string())?;
    let mut symbols: Vec<&str> = vocab.words().collect();
    symbols.push(BOS);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let targets = events(&lm);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ctx = [
            *symbols.choose(&mut rng).unwrap(),
            *symbols.choose(&mut rng).unwrap(),
        ];
        let mut total = 0.0;
        for w in &targets {
            total += lm.prob(&ctx, w).map_err(|e| e.to_string())?;
        }
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst <= 1e-6, || format!("max |sum - 1| = {worst:e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "100 contexts over {} events, max |sum - 1| = {worst:.1e}",
        targets.len()
    ))
}

fn c2_uniform() -> Check {
    for v in 1..=50 {
        let words: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let text = vec![words];
        let lm = train_ngram(&text, small_vocab(v), 1, BoundaryMode::NoBoundary)
            .map_err(|e| e.to_string())?;
        let ppl = perplexity(&lm, &text).map_err(|e| e.to_string())?;
        ensure((ppl - v as f64).abs() <= 1e-9, || {
            format!("|V| = {v}: perplexity {ppl}")
        })?;
    }
    Ok("|V| = 1..50 give perplexity |V|".into())
}

/// Perplexity from one `prob` call per token with an explicit history.
fn direct_perplexity(lm: &NGramLM, text: &[Vec<String>]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for s in text {
        let mut history = vec![BOS.to_string()];
        let mut targets = s.clone();
        if lm.boundary() == BoundaryMode::Sentence {
            targets.push(EOS.to_string());
        }
        for w in targets {
            let keep = history.len().min(lm.order() - 1);
            sum += lm.prob(&history[history.len() - keep..], &w).unwrap().ln();
            n += 1;
            history.push(w);
        }
    }
    (-sum / n as f64).exp()
}

fn c3_brute_force_perplexity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = rng.gen_range(1..=6);
        let (train, eval) = (random_text(&mut rng, v), random_text(&mut rng, v));
        let order = rng.gen_range(1..=3);
        let boundary = random_boundary(&mut rng);
        let lm = train_ngram(&train, small_vocab(v), order, boundary).map_err(|e| e.to_string())?;
        let got = perplexity(&lm, &eval).map_err(|e| e.to_string())?;
        let want = direct_perplexity(&lm, &eval);
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= 1e-9, || format!("max difference {worst:e}"))?;
    Ok(format!("20 corpora, max difference {worst:.1e}"))
}

fn c4_interpolation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..20 {
        let v = rng.gen_range(2..=6);
        let order = rng.gen_range(1..=3);
        let boundary = random_boundary(&mut rng);
        let l1 = train_ngram(&random_text(&mut rng, v), small_vocab(v), order, boundary).unwrap();
        let l2 = train_ngram(&random_text(&mut rng, v), small_vocab(v), order, boundary).unwrap();
        let dev = random_text(&mut rng, v);
        let choice = optimize_weight(&l1, &l2, &dev).map_err(|e| e.to_string())?;
        let mut best = (f64::INFINITY, f64::NAN);
        for i in 0..=WEIGHT_GRID_STEPS {
            let lambda = grid_weight(i);
            let ppl = perplexity(&interpolate(&l1, &l2, lambda).unwrap(), &dev).unwrap();
            if ppl < best.0 {
                best = (ppl, lambda);
            }
        }
        ensure(choice.lambda == best.1, || {
            format!("case {case}: λ* {} vs sweep {}", choice.lambda, best.1)
        })?;
        let ends = perplexity(&l1, &dev)
            .unwrap()
            .min(perplexity(&l2, &dev).unwrap());
        ensure(choice.dev_ppl <= ends, || {
            format!("case {case}: {} above endpoint {}", choice.dev_ppl, ends)
        })?;
    }
    Ok("20 pairs: λ* equals the 101-point sweep, never above an endpoint".into())
}

fn brute_distance(a: &[u8], b: &[u8]) -> u64 {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len() as u64,
        (_, None) => a.len() as u64,
        (Some((x, ra)), Some((y, rb))) => (brute_distance(ra, rb) + u64::from(x != y))
            .min(brute_distance(ra, b) + 1)
            .min(brute_distance(a, rb) + 1),
    }
}

fn c5_wer_oracle() -> Check {
    let start = Instant::now();
    let mut all: Vec<Vec<u8>> = vec![Vec::new()];
    let mut frontier = all.clone();
    for _ in 0..5 {
        frontier = frontier
            .iter()
            .flat_map(|s| (0..3u8).map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        all.extend(frontier.iter().cloned());
    }
    let words = |s: &[u8]| -> Vec<String> { s.iter().map(|c| format!("s{c}")).collect() };
    let mut pairs = 0u64;
    for r in &all {
        let rw = words(r);
        for h in &all {
            let got = align(&rw, &words(h)).distance();
            let want = brute_distance(r, h);
            ensure(got == want, || format!("{r:?} vs {h:?}: {got} != {want}"))?;
            pairs += 1;
        }
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("{pairs} pairs agree"))
}

fn c6_csba_extremes() -> Check {
    let r = reference();
    let mut n = 0;
    for u in r.data.batch("test").iter() {
        let reference = u.tokens();
        ensure(
            csba(reference, &align(reference, reference)) == Some(1.0),
            || format!("{}: identity", u.id()),
        )?;
        let k = reference.len();
        let hyp: Vec<String> = (0..k)
            .map(|i| {
                let l = reference[i].lang();
                let switch = (i > 0 && reference[i - 1].lang() != l)
                    || (i + 1 < k && reference[i + 1].lang() != l);
                if switch {
                    "<substituted>".to_string()
                } else {
                    reference[i].surface().to_string()
                }
            })
            .collect();
        ensure(
            csba(reference, &align(reference, &hyp)) == Some(0.0),
            || format!("{}: substituted", u.id()),
        )?;
        n += 1;
    }
    Ok(format!(
        "{n} code-switched test utterances: identity 100%, switch words substituted 0%"
    ))
}

fn enumerate_best(lm: &NGramLM, lattice: &Lattice) -> (Vec<u32>, f64) {
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut idx = vec![0usize; lattice.len()];
    loop {
        let path: Vec<u32> = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| lattice[i][k].0)
            .collect();
        let mut history: Vec<&str> = vec![BOS];
        let mut score = 0.0;
        for (i, &k) in idx.iter().enumerate() {
            let w = lm.vocab().word(lattice[i][k].0);
            let keep = history.len().min(lm.order() - 1);
            score = score
                + lattice[i][k].1
                + lm.prob(&history[history.len() - keep..], w).unwrap().ln();
            history.push(w);
        }
        if lm.boundary() == BoundaryMode::Sentence {
            let keep = history.len().min(lm.order() - 1);
            score += lm.prob(&history[history.len() - keep..], EOS).unwrap().ln();
        }
        if best
            .as_ref()
            .is_none_or(|(bp, bs)| score > *bs || (score == *bs && path < *bp))
        {
            best = Some((path, score));
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return best.unwrap();
            }
            idx[i] += 1;
            if idx[i] < lattice[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn c7_viterbi() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let v = rng.gen_range(2..=6);
        let order = rng.gen_range(1..=3);
        let boundary = random_boundary(&mut rng);
        let lm = train_ngram(&random_text(&mut rng, v), small_vocab(v), order, boundary).unwrap();
        let lattice: Lattice = (0..rng.gen_range(1..=4))
            .map(|_| {
                let mut ids: Vec<u32> = (0..v as u32).collect();
                ids.shuffle(&mut rng);
                ids.truncate(rng.gen_range(1..=3));
                ids.into_iter()
                    .map(|w| (w, rng.gen_range(-5.0..0.0)))
                    .collect()
            })
            .collect();
        let got = viterbi(&lm, &lattice).map_err(|e| e.to_string())?;
        let want = enumerate_best(&lm, &lattice);
        ensure(got == want, || format!("case {case}: {got:?} vs {want:?}"))?;
    }
    Ok("200 lattices: same path and bit-identical score".into())
}

fn c8_cpp_asymmetry() -> Check {
    let start = Instant::now();
    let r = reference();
    let (e, z) = (
        r.spec.vocab_sizes[&Language::English],
        r.spec.vocab_sizes[&Language::Zulu],
    );
    ensure(z == 10 * e, || format!("|V_Z| = {z}, |V_E| = {e}"))?;
    let lm = ez_baseline(r)?;
    let test = within_pair(&r.data.batch("test"), &ez());
    let rep = decomposed_perplexity(&lm, &test).map_err(|e| e.to_string())?;
    let (eb, be) = (
        rep.cpp_eb.ok_or("no EB events")?,
        rep.cpp_be.ok_or("no BE events")?,
    );
    ensure(eb > 1.5 * be, || {
        format!("CPP_EB {eb:.1} vs CPP_BE {be:.1}")
    })?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "CPP_EB {eb:.1} > 1.5 x CPP_BE {be:.1} (ratio {:.2})",
        eb / be
    ))
}

/// Test perplexities recorded on the first verified run of the shipped seed.
const C9_FIXTURE: (f64, f64) = (261.30090991113707, 145.78699859917023);

fn c9_semisup_lm() -> Check {
    let r = reference();
    let run = RunData::from_generated(&r.data, &r.spec);
    let baseline = ez_baseline(r)?;
    let err = |e: cslab::Error| e.to_string();

    let vocab = r.data.vocabulary();
    let mut recs: Vec<Recognizer> = Vec::new();
    for b in Language::BANTU {
        let langs = BTreeSet::from([Language::English, b]);
        let pool = within_pair(&run.manual, &langs);
        let lexicon = lexicon_for(&vocab, &langs, &run.params).map_err(err)?;
        recs.push(
            train_with_lexicon(&pool, &langs, &run.params, lexicon, Some(&run.observations))
                .map_err(err)?,
        );
    }
    let refs: Vec<&Recognizer> = recs.iter().collect();
    let mut auto: Vec<Vec<TaggedToken>> = Vec::new();
    for batch in ["B1", "B2", "B3"] {
        let set = transcribe_parallel_bilingual(&refs, &r.data.batch_observations(batch), "A")
            .map_err(err)?;
        auto.extend(
            set.utterances
                .iter()
                .filter(|u| u.languages().is_subset(&ez()))
                .map(|u| u.tokens().to_vec()),
        );
    }
    let dev = within_pair(&run.dev, &ez()).sentences();
    let test = within_pair(&run.test, &ez()).sentences();
    let (lm, choice) = build_semisup_lm(&baseline, &auto, &dev).map_err(err)?;
    let base_dev = perplexity(&baseline, &dev).map_err(err)?;
    let base_test = perplexity(&baseline, &test).map_err(err)?;
    let semi_dev = perplexity(&lm, &dev).map_err(err)?;
    let semi_test = perplexity(&lm, &test).map_err(err)?;
    let summary = format!(
        "λ {:.2}, dev {base_dev:.1} -> {semi_dev:.1}, test {base_test:.1} -> {semi_test:.1}",
        choice.lambda
    );
    ensure(semi_dev <= base_dev, || format!("dev rose: {summary}"))?;
    ensure(semi_test < base_test, || {
        format!("test not lower: {summary}")
    })?;
    let (fb, fs) = C9_FIXTURE;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b;
    ensure(close(base_test, fb) && close(semi_test, fs), || {
        format!("fixture {fb} -> {fs} drifted: {summary}")
    })?;
    Ok(summary)
}

fn overall_test_wer(report: &cslab::semisup::RunReport, system: &str) -> Result<f64, String> {
    let s = report
        .system(system)
        .ok_or_else(|| format!("no system {system}"))?;
    Ok(s.test["overall"].mixed_wer)
}

fn c10_semisup_asr() -> Check {
    let start = Instant::now();
    let r = reference();
    let data = RunData::from_generated(&r.data, &r.spec);
    let seed = |p: &str| vec!["ManT".to_string(), p.to_string()];
    let expected: BTreeMap<&str, (Vec<String>, Vec<&str>)> = BTreeMap::from([
        ("A", (seed("AutoT_B(B1)"), vec![])),
        ("B", (seed("AutoT_B(B1)"), vec!["A(B2)", "A(B3)"])),
        ("C", (seed("AutoT_B(B1)"), vec!["A(B2)"])),
        ("D", (seed("AutoT_B(B1)"), vec!["A(B2)", "C(B3)"])),
        ("E", (seed("AutoT_B(B1)"), vec!["A(B3)"])),
        ("F", (seed("AutoT_B(B1)"), vec!["E(B2)", "A(B3)"])),
        ("N", (seed("AutoT_F(B1)"), vec!["G(B2)", "I(B3)"])),
    ]);
    let mut wers = BTreeMap::new();
    for (name, (base, added)) in &expected {
        let cfg = SystemConfig::shipped(name).map_err(|e| e.to_string())?;
        let report = run_system(&cfg, &data).map_err(|e| e.to_string())?;
        let got: BTreeSet<&str> = report
            .system(name)
            .ok_or_else(|| format!("{name} missing from its own report"))?
            .pool
            .iter()
            .map(String::as_str)
            .collect();
        let want: BTreeSet<&str> = base
            .iter()
            .map(String::as_str)
            .chain(added.iter().copied())
            .collect();
        ensure(got == want, || {
            format!("{name}: pool {got:?}, expected {want:?}")
        })?;
        for t in &report.transcriptions {
            let batch_ok = want.contains(format!("{}({})", t.system, t.batch).as_str());
            ensure(batch_ok, || {
                format!("{name}: {} transcribed by {}", t.batch, t.system)
            })?;
        }
        wers.insert(*name, overall_test_wer(&report, name)?);
    }
    let (a, b, d) = (wers["A"], wers["B"], wers["D"]);
    ensure(b < a, || {
        format!("test WER A {:.2}% B {:.2}%", 100.0 * a, 100.0 * b)
    })?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "pools of A-F, N as wired; test WER A {:.2}% -> B {:.2}% (D {:.2}%)",
        100.0 * a,
        100.0 * b,
        100.0 * d
    ))
}

fn c11_arpa_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // Six decimals per stored log10 value; a backoff chain adds up to five.
    let tol = 5.0 * 0.5e-6 * std::f64::consts::LN_10;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let v = rng.gen_range(1..=6);
        let order = rng.gen_range(1..=3);
        let boundary = random_boundary(&mut rng);
        let lm = train_ngram(&random_text(&mut rng, v), small_vocab(v), order, boundary).unwrap();
        let path = dir.path().join(format!("m{i}.arpa"));
        save_arpa(&lm, &path).map_err(|e| e.to_string())?;
        let back = load_arpa(&path).map_err(|e| e.to_string())?;
        ensure(back.order() == order && back.boundary() == boundary, || {
            format!("model {i}: header")
        })?;
        for ctx in all_contexts(&lm, order - 1) {
            for w in events(&lm) {
                let (a, b) = (lm.prob(&ctx, &w).unwrap(), back.prob(&ctx, &w).unwrap());
                worst = worst.max((a.ln() - b.ln()).abs());
            }
        }
    }
    ensure(worst <= tol, || {
        format!("max log difference {worst:e} above {tol:e}")
    })?;
    Ok(format!(
        "10 models, max log-probability difference {worst:.1e}"
    ))
}

fn cslab_bin(out: &Path, args: &[&str]) -> Result<(), String> {
    let r = Command::new(env!("CARGO_BIN_EXE_cslab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(r.status.success(), || {
        format!(
            "cslab {args:?} failed: {}",
            String::from_utf8_lossy(&r.stderr).trim()
        )
    })
}

fn c12_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        cslab_bin(&out, &["run-system", "--config", "A"])?;
        reports.push(fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || {
        "report.json differs between runs".into()
    })?;
    Ok(format!(
        "two runs of system A, {} identical bytes",
        reports[0].len()
    ))
}

fn c13_scale() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gen = dir.path().join("gen");
    cslab_bin(&gen, &["datagen"])?;
    let corpus = fs::read_to_string(gen.join("corpus.txt")).map_err(|e| e.to_string())?;
    let manual: String = corpus
        .lines()
        .filter(|l| l.split('\t').nth(2) == Some("ManT"))
        .map(|l| format!("{l}\n"))
        .collect();
    let train = dir.path().join("mant.txt");
    fs::write(&train, manual).map_err(|e| e.to_string())?;
    let lexicon = gen.join("lexicon.txt");
    let out = dir.path().join("aug");
    let start = Instant::now();
    cslab_bin(
        &out,
        &[
            "augment-text",
            "--corpus",
            train.to_str().unwrap(),
            "--vocab",
            lexicon.to_str().unwrap(),
            "--n",
            "11500000",
        ],
    )?;
    let secs = start.elapsed().as_secs_f64();
    within(start, Duration::from_secs(600))?;

    let mut allowed: BTreeSet<(String, Language)> = BTreeSet::new();
    for line in fs::read_to_string(&lexicon)
        .map_err(|e| e.to_string())?
        .lines()
    {
        for t in parse_tokens(line).map_err(|e| e.to_string())? {
            allowed.insert((t.surface().to_string(), t.lang()));
        }
    }
    let text = fs::File::open(out.join("text.txt")).map_err(|e| e.to_string())?;
    let (mut lines, mut sampled, mut words) = (0u64, 0u64, 0u64);
    for line in BufReader::new(text).lines() {
        let line = line.map_err(|e| e.to_string())?;
        lines += 1;
        let tokens = parse_tokens(line.split('\t').nth(4).ok_or("short record")?)
            .map_err(|e| e.to_string())?;
        words += tokens.len() as u64;
        if lines % 100 != 0 {
            continue;
        }
        sampled += 1;
        for t in tokens {
            let known = allowed.contains(&(t.surface().to_string(), t.lang()));
            ensure(known, || {
                format!("line {lines}: `{t}` outside the vocabulary")
            })?;
        }
    }
    ensure(words == 11_500_000, || format!("{words} words written"))?;
    Ok(format!(
        "{words} words in {secs:.1} s; {sampled} of {lines} sentences sampled, all in vocabulary"
    ))
}

fn main() {
    let checks: [Criterion; 13] = [
        ("LM normalization", c1_normalization),
        ("uniform unigram perplexity", c2_uniform),
        (
            "perplexity brute-force equivalence",
            c3_brute_force_perplexity,
        ),
        ("interpolation endpoint dominance", c4_interpolation),
        ("WER oracle", c5_wer_oracle),
        ("CSBA extremes", c6_csba_extremes),
        ("Viterbi optimality", c7_viterbi),
        ("CPP asymmetry", c8_cpp_asymmetry),
        ("semi-supervised LM gain", c9_semisup_lm),
        ("semi-supervised ASR gain", c10_semisup_asr),
        ("ARPA round trip", c11_arpa_round_trip),
        ("determinism", c12_determinism),
        ("scale", c13_scale),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
