use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cslab::augment::{generate, synthesize_cs_trigrams, trigram_sentences, NGramSampler};
use cslab::corpus::{
    corpus_stats, format_corpus, format_tokens, load_corpus, parse_language_set, parse_tokens,
    Corpus, Language, Status, SwitchCounts, TaggedToken, Utterance,
};
use cslab::datagen::{generate_corpus, ScenarioSpec};
use cslab::lm::{
    decomposed_perplexity, interpolate, interpolate_tuned, load_arpa, perplexity, train_ngram,
    write_arpa, BoundaryMode, NGramLM, Vocabulary,
};
use cslab::metrics::evaluate_corpora;
use cslab::recognizer::{
    format_observations, lexicon_for, load_observations, train_with_lexicon, Observations,
    Recognizer, RecognizerParams,
};
use cslab::seed::sub_seed;
use cslab::semisup::{
    run_system, transcribe_five_lingual, transcribe_parallel_bilingual, RunData, SystemConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::OutDir;
use crate::{
    AugmentTextArgs, Cli, Command, DatagenArgs, DecodeArgs, EvaluateArgs, Failure, LmInterpArgs,
    LmPplArgs, LmTrainArgs, RecognizerFlags, RunSystemArgs, StatsArgs, SynthTrigramsArgs,
    TranscribeArgs, TranscribeMode,
};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Stats(a) => stats(cli, a),
        Command::LmTrain(a) => lm_train(cli, a),
        Command::LmPpl(a) => lm_ppl(cli, a),
        Command::LmInterp(a) => lm_interp(cli, a),
        Command::Decode(a) => decode(cli, a),
        Command::Transcribe(a) => transcribe(cli, a),
        Command::RunSystem(a) => run_system_cmd(cli, a),
        Command::AugmentText(a) => augment_text(cli, a),
        Command::SynthTrigrams(a) => synth_trigrams(cli, a),
        Command::Datagen(a) => datagen(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
    }
}

fn usage(e: cslab::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

/// Resolved command configuration for the manifest.
fn config(cli: &Cli, extra: Value) -> Value {
    let mut v = json!({
        "args": &cli.command,
        "out": cli.out.display().to_string(),
        "seed": cli.seed,
        "jobs": cli.jobs,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn no_seeds() -> BTreeMap<String, u64> {
    BTreeMap::new()
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<Corpus>, Failure> {
    paths
        .iter()
        .map(|p| load_corpus(p).map_err(Failure::from))
        .collect()
}

/// Tagged words of an extra vocabulary file: either a corpus (its
/// transcribed words) or a word list with one tagged token per line.
fn extra_words(path: &Path) -> Result<Vec<TaggedToken>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::manifest::io_failure(path, e))?;
    if text.contains('\t') {
        return Ok(load_corpus(path)?.sentences().concat());
    }
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks = parse_tokens(line)
            .map_err(|e| Failure::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        words.extend(toks);
    }
    Ok(words)
}

/// Closed vocabulary over the transcribed words of `corpora` and the
/// words of the `extra` files.
fn vocabulary_of(corpora: &[&Corpus], extra: &[PathBuf]) -> Result<Vocabulary, Failure> {
    let mut tokens: Vec<TaggedToken> = corpora
        .iter()
        .flat_map(|c| c.sentences().concat())
        .collect();
    for p in extra {
        tokens.extend(extra_words(p)?);
    }
    Ok(Vocabulary::from_tagged(&tokens))
}

fn stats(cli: &Cli, a: &StatsArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let s = corpus_stats(&corpus);
    let table = s.render_table();
    let mut out = OutDir::create(&cli.out)?;
    out.write("stats.json", pretty(&s).as_bytes())?;
    out.write("stats.txt", table.as_bytes())?;
    print!("{table}");
    out.finish("stats", config(cli, json!({})), no_seeds(), &[&a.corpus])
}

fn lm_train(cli: &Cli, a: &LmTrainArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let vocab = Arc::new(vocabulary_of(&[&corpus], &a.vocab)?);
    let boundary = if a.no_boundary {
        BoundaryMode::NoBoundary
    } else {
        BoundaryMode::Sentence
    };
    let sentences = corpus.sentences();
    let lm = train_ngram(&sentences, vocab.clone(), usize::from(a.order), boundary)?;
    let mut out = OutDir::create(&cli.out)?;
    out.write("model.arpa", write_arpa(&lm).as_bytes())?;
    println!(
        "order-{} model: {} sentences, {} vocabulary words -> {}",
        a.order,
        sentences.len(),
        vocab.len(),
        out.path("model.arpa").display()
    );
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    inputs.extend(a.vocab.iter().map(PathBuf::as_path));
    out.finish("lm-train", config(cli, json!({})), no_seeds(), &inputs)
}

fn lm_ppl(cli: &Cli, a: &LmPplArgs) -> Result<(), Failure> {
    let lm = load_arpa(&a.lm)?;
    let text = load_corpus(&a.text)?;
    let mut out = OutDir::create(&cli.out)?;
    let report = if a.decompose {
        let r = decomposed_perplexity(&lm, &text)?;
        out.write("ppl.txt", r.render_table().as_bytes())?;
        serde_json::to_value(&r).expect("report serializes")
    } else {
        let sentences = text.sentences();
        json!({
            "perplexity": perplexity(&lm, &sentences)?,
            "sentences": sentences.len(),
        })
    };
    let body = pretty(&report);
    out.write("ppl.json", body.as_bytes())?;
    print!("{body}");
    out.finish(
        "lm-ppl",
        config(cli, json!({})),
        no_seeds(),
        &[&a.lm, &a.text],
    )
}

fn lm_interp(cli: &Cli, a: &LmInterpArgs) -> Result<(), Failure> {
    let (l1, l2) = (load_arpa(&a.lm1)?, load_arpa(&a.lm2)?);
    let mut inputs: Vec<&Path> = vec![&a.lm1, &a.lm2];
    let (lm, weight) = match (&a.dev, a.weight) {
        (Some(dev), _) => {
            inputs.push(dev);
            let dev = load_corpus(dev)?.sentences();
            let (lm, c) = interpolate_tuned(&l1, &l2, &dev)?;
            (lm, json!({ "lambda": c.lambda, "dev_ppl": c.dev_ppl }))
        }
        (None, Some(w)) => (
            interpolate(&l1, &l2, w).map_err(usage)?,
            json!({ "lambda": w }),
        ),
        (None, None) => return Err(Failure::Usage("give --dev or --weight".into())),
    };
    let mut out = OutDir::create(&cli.out)?;
    out.write("interp.arpa", write_arpa(&lm).as_bytes())?;
    let body = pretty(&weight);
    out.write("weight.json", body.as_bytes())?;
    print!("{body}");
    out.finish("lm-interp", config(cli, json!({})), no_seeds(), &inputs)
}

impl RecognizerFlags {
    fn params(&self) -> Result<RecognizerParams, Failure> {
        let mut p = RecognizerParams::default();
        if let Some(x) = self.p_correct {
            p.channel.p_correct = x;
        }
        if let Some(x) = self.fan_out {
            p.channel.fan_out = x;
        }
        if let Some(x) = self.candidates {
            p.candidates = x;
        }
        if let Some(x) = self.order {
            p.order = usize::from(x);
        }
        p.reestimate_channel = !self.no_reestimate;
        p.validate().map_err(usage)?;
        Ok(p)
    }
}

/// Training pool, its observations, the lexicon vocabulary and the input
/// paths shared by `decode` and `transcribe`.
struct RecognizerInputs {
    pool: Corpus,
    train_obs: Option<Observations>,
    observations: Observations,
    vocab: Vocabulary,
}

fn recognizer_inputs(
    train: &Path,
    observations: &Path,
    train_observations: Option<&PathBuf>,
    lexicon: &[PathBuf],
) -> Result<RecognizerInputs, Failure> {
    let pool = load_corpus(train)?.filter(Utterance::is_transcribed);
    let vocab = vocabulary_of(&[&pool], lexicon)?;
    Ok(RecognizerInputs {
        train_obs: train_observations.map(load_observations).transpose()?,
        observations: load_observations(observations)?,
        vocab,
        pool,
    })
}

fn train_for(
    inputs: &RecognizerInputs,
    langs: &BTreeSet<Language>,
    params: &RecognizerParams,
) -> Result<Option<Recognizer>, Failure> {
    let pool = inputs.pool.filter(|u| u.languages().is_subset(langs));
    if pool.is_empty() {
        return Ok(None);
    }
    let lexicon = lexicon_for(&inputs.vocab, langs, params)?;
    Ok(Some(train_with_lexicon(
        &pool,
        langs,
        params,
        lexicon,
        inputs.train_obs.as_ref(),
    )?))
}

fn decode(cli: &Cli, a: &DecodeArgs) -> Result<(), Failure> {
    let params = a.recognizer.params()?;
    let inputs = recognizer_inputs(
        &a.train,
        &a.observations,
        a.train_observations.as_ref(),
        &a.lexicon,
    )?;
    let langs = match &a.languages {
        Some(s) => parse_language_set(s).map_err(usage)?,
        None => inputs.pool.iter().flat_map(Utterance::languages).collect(),
    };
    let rec = train_for(&inputs, &langs, &params)?.ok_or_else(|| {
        Failure::Data("no training utterance fits the recognizer languages".into())
    })?;
    let results = rec.decode_all(inputs.observations.as_slice())?;
    let mut utts = Vec::with_capacity(results.len());
    let mut rows = Vec::with_capacity(results.len());
    for (o, r) in inputs.observations.iter().zip(results) {
        let label: String = r.language_label.iter().map(|l| l.code()).collect();
        rows.push(json!({ "id": o.id, "confidence": r.confidence, "languages": label }));
        utts.push(Utterance::new(
            &o.id,
            &o.speaker,
            o.batch.clone(),
            o.duration,
            r.hypothesis,
            Status::Auto,
            Some("decode".into()),
        )?);
    }
    let hyp = Corpus::new(utts)?;
    let mut out = OutDir::create(&cli.out)?;
    out.write("hyp.txt", format_corpus(&hyp).as_bytes())?;
    let summary = json!({
        "languages": langs.iter().map(|l| l.code()).collect::<String>(),
        "p_correct": rec.channel().p_correct,
        "training_utterances": rec.training_utterances(),
        "utterances": rows,
    });
    out.write("decode.json", pretty(&summary).as_bytes())?;
    println!(
        "decoded {} utterances -> {}",
        hyp.len(),
        out.path("hyp.txt").display()
    );
    let mut paths: Vec<&Path> = vec![&a.train, &a.observations];
    paths.extend(a.train_observations.iter().map(PathBuf::as_path));
    paths.extend(a.lexicon.iter().map(PathBuf::as_path));
    out.finish(
        "decode",
        config(cli, json!({ "params": params })),
        no_seeds(),
        &paths,
    )
}

fn transcribe(cli: &Cli, a: &TranscribeArgs) -> Result<(), Failure> {
    let params = a.recognizer.params()?;
    let inputs = recognizer_inputs(
        &a.train,
        &a.observations,
        a.train_observations.as_ref(),
        &a.lexicon,
    )?;
    let system = match (&a.system, a.mode) {
        (Some(s), _) => s.as_str(),
        (None, TranscribeMode::Bilingual) => "bilingual",
        (None, TranscribeMode::FiveLingual) => "five-lingual",
    };
    let set = match a.mode {
        TranscribeMode::Bilingual => {
            let mut recs = Vec::new();
            for b in Language::BANTU {
                let langs = BTreeSet::from([Language::English, b]);
                if let Some(r) = train_for(&inputs, &langs, &params)? {
                    recs.push(r);
                }
            }
            if recs.is_empty() {
                return Err(Failure::Data(
                    "no training utterance fits an English-Bantu pair".into(),
                ));
            }
            let refs: Vec<&Recognizer> = recs.iter().collect();
            transcribe_parallel_bilingual(&refs, &inputs.observations, system)?
        }
        TranscribeMode::FiveLingual => {
            let langs: BTreeSet<Language> = Language::ALL.into_iter().collect();
            let rec = train_for(&inputs, &langs, &params)?
                .ok_or_else(|| Failure::Data("empty training corpus".into()))?;
            transcribe_five_lingual(&rec, &inputs.observations, system)?
        }
    };
    let mut out = OutDir::create(&cli.out)?;
    out.write(
        "transcriptions.txt",
        format_corpus(&set.utterances).as_bytes(),
    )?;
    let labels: Vec<Option<String>> = set
        .pair_labels
        .iter()
        .map(|p| p.map(|b| format!("E{}", b.code())))
        .collect();
    let summary = json!({
        "system": set.system,
        "segments": set.segments,
        "confidences": set.confidences,
        "pair_labels": labels,
    });
    out.write("segments.json", pretty(&summary).as_bytes())?;
    println!(
        "transcribed {} segments ({} code-switched) -> {}",
        set.segments.total,
        set.segments.code_switched,
        out.path("transcriptions.txt").display()
    );
    let mut paths: Vec<&Path> = vec![&a.train, &a.observations];
    paths.extend(a.train_observations.iter().map(PathBuf::as_path));
    paths.extend(a.lexicon.iter().map(PathBuf::as_path));
    out.finish(
        "transcribe",
        config(cli, json!({ "params": params })),
        no_seeds(),
        &paths,
    )
}

fn scenario(cli: &Cli, path: Option<&PathBuf>) -> Result<ScenarioSpec, Failure> {
    let mut spec = match path {
        Some(p) => ScenarioSpec::load(p)?,
        None => ScenarioSpec::reference(),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn run_system_cmd(cli: &Cli, a: &RunSystemArgs) -> Result<(), Failure> {
    let spec = scenario(cli, a.scenario.as_ref())?;
    let config_path = Path::new(&a.config);
    let system = if config_path.is_file() {
        SystemConfig::load(config_path)?
    } else {
        SystemConfig::shipped(&a.config).map_err(|_| {
            Failure::Usage(format!(
                "`{}` is neither a config file nor a shipped system",
                a.config
            ))
        })?
    };
    let data = generate_corpus(&spec)?;
    let report = run_system(&system, &RunData::from_generated(&data, &spec))?;
    let table = report.render_table();
    let mut out = OutDir::create(&cli.out)?;
    out.write("report.json", report.to_json().as_bytes())?;
    out.write("report.txt", table.as_bytes())?;
    print!("{table}");
    let mut inputs: Vec<&Path> = Vec::new();
    if config_path.is_file() {
        inputs.push(config_path);
    }
    inputs.extend(a.scenario.iter().map(PathBuf::as_path));
    let extra = json!({ "scenario": spec, "system": system });
    out.finish(
        "run-system",
        config(cli, extra),
        BTreeMap::from([("master".into(), spec.seed)]),
        &inputs,
    )
}

fn augment_text(cli: &Cli, a: &AugmentTextArgs) -> Result<(), Failure> {
    let train = load_all(&a.corpus)?;
    let all: Vec<&Corpus> = train.iter().collect();
    let vocab = Arc::new(vocabulary_of(&all, &a.vocab)?);
    let sentences: Vec<Vec<TaggedToken>> = train.iter().flat_map(Corpus::sentences).collect();
    let seed = cli.seed.unwrap_or(0);
    let lm: NGramLM = train_ngram(&sentences, vocab, 3, BoundaryMode::Sentence)?;
    let mut generator = NGramSampler::new(lm, a.temperature, seed).map_err(usage)?;
    let start = Instant::now();
    let text = generate(&mut generator, a.n).map_err(usage)?;
    let secs = start.elapsed().as_secs_f64();
    let mut out = OutDir::create(&cli.out)?;
    out.write_with("text.txt", |w| text.write_corpus(w, "augment", "ngram"))?;
    let summary = json!({
        "words": text.num_words(),
        "sentences": text.num_sentences(),
        "order": 3,
        "temperature": a.temperature,
    });
    out.write("augment.json", pretty(&summary).as_bytes())?;
    eprintln!(
        "generated {} words in {} sentences in {:.2} s ({:.0} words/s)",
        text.num_words(),
        text.num_sentences(),
        secs,
        text.num_words() as f64 / secs.max(1e-9)
    );
    let seeds = BTreeMap::from([
        ("master".to_string(), seed),
        (
            "augment/generator".to_string(),
            sub_seed(seed, "augment/generator"),
        ),
    ]);
    let inputs: Vec<&Path> = a
        .corpus
        .iter()
        .chain(&a.vocab)
        .map(PathBuf::as_path)
        .collect();
    out.finish("augment-text", config(cli, json!({})), seeds, &inputs)
}

/// Maximal same-language runs of every transcribed sentence, by language.
fn language_runs(corpora: &[Corpus]) -> BTreeMap<Language, Vec<Vec<TaggedToken>>> {
    let mut runs: BTreeMap<Language, Vec<Vec<TaggedToken>>> = BTreeMap::new();
    for s in corpora.iter().flat_map(Corpus::sentences) {
        for run in s.chunk_by(|a, b| a.lang() == b.lang()) {
            runs.entry(run[0].lang()).or_default().push(run.to_vec());
        }
    }
    runs
}

fn synth_trigrams(cli: &Cli, a: &SynthTrigramsArgs) -> Result<(), Failure> {
    let corpora = load_all(&a.corpus)?;
    let mut switches = SwitchCounts::default();
    for c in &corpora {
        switches += corpus_stats(c).switches;
    }
    let mut lms = BTreeMap::new();
    for (lang, runs) in language_runs(&corpora) {
        let vocab = Arc::new(Vocabulary::from_tagged(runs.iter().flatten()));
        lms.insert(lang, train_ngram(&runs, vocab, 2, BoundaryMode::Sentence)?);
    }
    let seed = cli.seed.unwrap_or(0);
    let trigrams = synthesize_cs_trigrams(&lms, &switches, a.n, seed).map_err(|e| match e {
        cslab::Error::InvalidParameter(_) if a.n == 0 => usage(e),
        e => Failure::from(e),
    })?;
    let eb: u64 = trigrams
        .iter()
        .filter(|t| t.is_eb())
        .map(|t| t.multiplicity)
        .sum();
    let mut out = OutDir::create(&cli.out)?;
    out.write_with("trigrams.txt", |w| {
        for (i, s) in trigram_sentences(&trigrams).iter().enumerate() {
            writeln!(
                w,
                "tri-{i:08}\tsynth\ttrigrams\t-\t{}\tauto:synth",
                format_tokens(s)
            )?;
        }
        Ok(())
    })?;
    let summary = json!({
        "trigrams": a.n,
        "distinct": trigrams.len(),
        "eb": eb,
        "be": a.n as u64 - eb,
        "switch_counts": switches,
    });
    let body = pretty(&summary);
    out.write("trigrams.json", body.as_bytes())?;
    print!("{body}");
    let seeds = BTreeMap::from([
        ("master".to_string(), seed),
        (
            "augment/trigrams".to_string(),
            sub_seed(seed, "augment/trigrams"),
        ),
    ]);
    let inputs: Vec<&Path> = a.corpus.iter().map(PathBuf::as_path).collect();
    out.finish("synth-trigrams", config(cli, json!({})), seeds, &inputs)
}

/// Batches released with transcriptions; the rest are untranscribed.
const TRANSCRIBED_BATCHES: [&str; 3] = ["ManT", "dev", "test"];

fn datagen(cli: &Cli, a: &DatagenArgs) -> Result<(), Failure> {
    let spec = scenario(cli, a.scenario.as_ref())?;
    let data = generate_corpus(&spec)?;
    let mut released = Vec::new();
    for b in spec.batches() {
        let part = if TRANSCRIBED_BATCHES.contains(&b.as_str()) {
            data.batch(&b)
        } else {
            data.untranscribed(&b)
        };
        released.extend(part.into_utterances());
    }
    let released = Corpus::new(released)?;
    let mut out = OutDir::create(&cli.out)?;
    out.write("scenario.toml", spec.to_toml_string().as_bytes())?;
    out.write("truth.txt", format_corpus(&data.truth).as_bytes())?;
    out.write("corpus.txt", format_corpus(&released).as_bytes())?;
    out.write(
        "observations.txt",
        format_observations(&data.observations).as_bytes(),
    )?;
    out.write_with("lexicon.txt", |w| {
        for (lang, words) in &data.lexicons {
            for word in words {
                writeln!(w, "{word}_{}", lang.code())?;
            }
        }
        Ok(())
    })?;
    println!(
        "{} utterances, {} lexicon words -> {}",
        data.truth.len(),
        data.lexicons.values().map(Vec::len).sum::<usize>(),
        cli.out.display()
    );
    let inputs: Vec<&Path> = a.scenario.iter().map(PathBuf::as_path).collect();
    let seeds = BTreeMap::from([("master".to_string(), spec.seed)]);
    out.finish(
        "datagen",
        config(cli, json!({ "scenario": spec })),
        seeds,
        &inputs,
    )
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<(), Failure> {
    let reference = load_corpus(&a.reference)?;
    let hypothesis = load_corpus(&a.hypothesis)?;
    let report = evaluate_corpora(&reference, &hypothesis)?;
    let body = pretty(&report.to_flat_json());
    let mut out = OutDir::create(&cli.out)?;
    out.write("eval.json", body.as_bytes())?;
    out.write("eval.txt", report.render_table().as_bytes())?;
    print!("{body}");
    out.finish(
        "evaluate",
        config(cli, json!({})),
        no_seeds(),
        &[&a.reference, &a.hypothesis],
    )
}
