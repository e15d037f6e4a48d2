mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Semi-supervised code-switched speech recognition laboratory on
/// synthetic multilingual corpora.
#[derive(Parser, Debug)]
#[command(name = "cslab", version)]
pub struct Cli {
    /// Output directory for results and the run manifest.
    #[arg(long, global = true, env = "CSLAB_OUT", default_value = "out")]
    pub out: PathBuf,

    /// Master seed; every random stream is derived from it by name.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for decoding (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Corpus statistics: durations, tokens, types and switch counts.
    Stats(StatsArgs),
    /// Train a Witten-Bell n-gram model and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Perplexity of a text, optionally split into CPP and MPP.
    LmPpl(LmPplArgs),
    /// Interpolate two models with a fixed or dev-tuned weight.
    LmInterp(LmInterpArgs),
    /// Decode observations with a recognizer trained on a corpus.
    Decode(DecodeArgs),
    /// Transcribe observations with parallel bilingual or one five-lingual recognizer.
    Transcribe(TranscribeArgs),
    /// Run a semi-supervised system configuration on a generated scenario.
    RunSystem(RunSystemArgs),
    /// Generate artificial training text with an n-gram sampler.
    AugmentText(AugmentTextArgs),
    /// Synthesize code-switched trigrams as training sentences.
    SynthTrigrams(SynthTrigramsArgs),
    /// Generate a synthetic scenario: lexicons, ground truth and observations.
    Datagen(DatagenArgs),
    /// Score hypotheses against references (mixed WER, per-language WER, CSBA).
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    /// Corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct LmTrainArgs {
    /// Training corpus; only transcribed utterances are used.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpora or word lists whose words join the closed vocabulary.
    #[arg(long)]
    pub vocab: Vec<PathBuf>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub order: u8,
    /// Do not model sentence ends.
    #[arg(long)]
    pub no_boundary: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct LmPplArgs {
    /// ARPA model.
    #[arg(long)]
    pub lm: PathBuf,
    /// Evaluation corpus.
    #[arg(long)]
    pub text: PathBuf,
    /// Report code-switch (CPP) and monolingual (MPP) perplexities.
    #[arg(long)]
    pub decompose: bool,
}

#[derive(Args, Debug, Serialize)]
#[command(group(clap::ArgGroup::new("weighting").required(true).args(["dev", "weight"])))]
pub struct LmInterpArgs {
    /// First ARPA model; the weight applies to it.
    #[arg(long)]
    pub lm1: PathBuf,
    #[arg(long)]
    pub lm2: PathBuf,
    /// Development corpus for the weight search.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Fixed weight of the first model.
    #[arg(long)]
    pub weight: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct RecognizerFlags {
    /// Probability that a word is observed unchanged.
    #[arg(long)]
    pub p_correct: Option<f64>,
    /// Number of confusable neighbours per word.
    #[arg(long)]
    pub fan_out: Option<usize>,
    /// Lattice candidates per observed symbol.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub order: Option<u8>,
    /// Keep the configured p_correct instead of re-estimating it.
    #[arg(long)]
    pub no_reestimate: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DecodeArgs {
    /// Transcribed training corpus for the language model.
    #[arg(long)]
    pub train: PathBuf,
    /// Observation file to decode.
    #[arg(long)]
    pub observations: PathBuf,
    /// Observations of the training utterances, for channel re-estimation.
    #[arg(long)]
    pub train_observations: Option<PathBuf>,
    /// Corpora or word lists whose words join the lexicon.
    #[arg(long)]
    pub lexicon: Vec<PathBuf>,
    /// Languages of the recognizer, e.g. `EZ` (default: all in the training corpus).
    #[arg(long)]
    pub languages: Option<String>,
    #[command(flatten)]
    pub recognizer: RecognizerFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranscribeMode {
    Bilingual,
    FiveLingual,
}

#[derive(Args, Debug, Serialize)]
pub struct TranscribeArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub observations: PathBuf,
    #[arg(long)]
    pub train_observations: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = TranscribeMode::Bilingual)]
    pub mode: TranscribeMode,
    /// Provenance label written on every transcription (default: the mode name).
    #[arg(long)]
    pub system: Option<String>,
    #[command(flatten)]
    pub recognizer: RecognizerFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct RunSystemArgs {
    /// System config file, or the name of a shipped one (A-L, N).
    #[arg(long)]
    pub config: String,
    /// Scenario file (default: the shipped reference scenario).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentTextArgs {
    /// Training corpora for the generator.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    /// Corpora or word lists whose words join the vocabulary.
    #[arg(long)]
    pub vocab: Vec<PathBuf>,
    /// Number of words to generate.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthTrigramsArgs {
    /// Corpora supplying per-language models and switch statistics.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    /// Number of trigrams to draw.
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DatagenArgs {
    /// Scenario file (default: the shipped reference scenario).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    /// Reference corpus.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypothesis corpus; utterances are matched by id.
    #[arg(long = "hyp")]
    pub hypothesis: PathBuf,
}

/// Usage errors exit with 1, data errors with 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl From<cslab::Error> for Failure {
    fn from(e: cslab::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
