//! Command-line entry point wiring ingestion, training, classification,
//! evaluation, prior reports, and corpus synthesis into one binary.
//!
//! Every run echoes its fully resolved configuration, seed included, to
//! stderr so any output can be reproduced from the log line alone. Exit
//! codes: 0 success, 1 input or i/o errors, 2 usage errors, 3 training
//! aborts.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use valence::bundle::ModelBundle;
use valence::classifier::{ClassifierOptions, Mode, SentimentClassifier};
use valence::corpus::{ingest, load_unlabeled, IngestOptions};
use valence::eval::{evaluate, kfold, EvalSpec, ModelKind};
use valence::ngram::TrainOptions;
use valence::preprocess::preprocess;
use valence::priors::{CategorySet, ContextTable};
use valence::synth::{generate, write_corpus, SynthConfig};
use valence::{Error, Result};

#[derive(Parser)]
#[command(
    name = "valence",
    version,
    about = "Sentiment polarity classification with contextual priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a labeled corpus and print ingestion statistics.
    Ingest(IngestArgs),
    /// Normalize and tokenize raw text lines.
    Preprocess(PreprocessArgs),
    /// Train language models and context priors, writing a model bundle.
    Train(TrainArgs),
    /// Classify a corpus file or stdin lines with a trained bundle.
    Classify(ClassifyArgs),
    /// Cross-validated evaluation of a model family on a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Per-category average-sentiment reports from a labeled corpus.
    Priors(PriorsArgs),
    /// Generate a synthetic labeled corpus from a config file.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Majority,
    Baseline,
    Contextual,
}

impl ModeArg {
    fn as_str(self) -> &'static str {
        match self {
            ModeArg::Majority => "majority",
            ModeArg::Baseline => "baseline",
            ModeArg::Contextual => "contextual",
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus file, one JSON record per line.
    #[arg(long)]
    input: PathBuf,
    /// Abort on the first malformed line instead of counting it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Raw text file, one post per line; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Bundle directory to write.
    #[arg(long)]
    model: PathBuf,
    /// Author-prior activation threshold.
    #[arg(long, default_value_t = 50)]
    min_author_tweets: u64,
    /// Abort on the first malformed line instead of counting it.
    #[arg(long)]
    strict: bool,
    /// Score sequences without a begin-of-text sentinel.
    #[arg(long)]
    no_bos: bool,
    /// Fixed Kneser-Ney discount in (0,1) instead of the estimate.
    #[arg(long)]
    discount: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Bundle directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Corpus file (JSON records, context-aware). When omitted, stdin is
    /// read as raw text lines and classified without context.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Baseline)]
    mode: ModeArg,
    /// Context categories for contextual mode, e.g. "state,hour".
    #[arg(long)]
    categories: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labeled corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Optional CSV destination for the metric report.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    k: u32,
    /// Shuffle seed for the fold assignment.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Baseline)]
    mode: ModeArg,
    /// Context categories for contextual mode, e.g. "state,hour".
    #[arg(long)]
    categories: Option<String>,
    #[arg(long, default_value_t = 50)]
    min_author_tweets: u64,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    no_bos: bool,
    #[arg(long)]
    discount: Option<f64>,
}

#[derive(Args)]
struct PriorsArgs {
    /// Labeled corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Directory for per-category CSV files; stdout sections when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Categories to report, e.g. "state,hour"; all five when omitted.
    #[arg(long)]
    categories: Option<String>,
    #[arg(long, default_value_t = 50)]
    min_author_tweets: u64,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator config file (flat key = value format).
    #[arg(long)]
    config: PathBuf,
    /// Destination corpus file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout (e.g. piping into `head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Training(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Priors(args) => cmd_priors(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn show_opt(path: &Option<PathBuf>) -> String {
    path.as_deref().map_or_else(|| "-".to_owned(), show)
}

fn with_path(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(e, path))
}

fn create_output(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| with_path(e, path))
}

fn output_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(create_output(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Resolves --mode plus --categories into a category subset. --categories
/// implies contextual; contextual without --categories means all five.
fn resolve_categories(mode: ModeArg, categories: &Option<String>) -> Result<CategorySet> {
    match (mode, categories) {
        (ModeArg::Contextual, Some(list)) => CategorySet::parse(list),
        (ModeArg::Contextual, None) => Ok(CategorySet::all()),
        (_, Some(_)) => Err(Error::Config(
            "--categories requires --mode contextual".into(),
        )),
        (_, None) => Ok(CategorySet::empty()),
    }
}

fn lm_options(no_bos: bool, discount: Option<f64>) -> TrainOptions {
    TrainOptions {
        use_bos: !no_bos,
        discount,
    }
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    eprintln!(
        "config: cmd=ingest input={} strict={}",
        show(&args.input),
        args.strict
    );
    let opts = IngestOptions {
        strict: args.strict,
        ..IngestOptions::default()
    };
    let (_, stats) = ingest(&args.input, &opts)?;
    let mut out = io::stdout().lock();
    writeln!(out, "lines {}", stats.lines)?;
    writeln!(out, "accepted {}", stats.accepted)?;
    writeln!(out, "malformed {}", stats.malformed)?;
    writeln!(out, "discarded_no_label {}", stats.discarded_no_label)?;
    writeln!(out, "discarded_conflict {}", stats.discarded_conflict)?;
    writeln!(out, "discarded_empty {}", stats.discarded_empty)?;
    writeln!(out, "positive {}", stats.positive)?;
    writeln!(out, "negative {}", stats.negative)?;
    writeln!(out, "positive_share {}", stats.positive_share())?;
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<()> {
    eprintln!(
        "config: cmd=preprocess input={} output={}",
        show_opt(&args.input),
        show_opt(&args.output)
    );
    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) => Box::new(BufReader::new(open_input(p)?)),
        None => Box::new(BufReader::new(io::stdin().lock())),
    };
    let mut out = output_writer(args.output.as_deref())?;
    for line in reader.lines() {
        let tokens = preprocess(&line?);
        writeln!(out, "{}", tokens.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    eprintln!(
        "config: cmd=train input={} model={} min_author_tweets={} strict={} bos={} discount={}",
        show(&args.input),
        show(&args.model),
        args.min_author_tweets,
        args.strict,
        !args.no_bos,
        args.discount
            .map_or_else(|| "estimated".to_owned(), |d| d.to_string()),
    );
    let opts = IngestOptions {
        strict: args.strict,
        ..IngestOptions::default()
    };
    let (records, stats) = ingest(&args.input, &opts)?;
    let classifier = SentimentClassifier::train(
        &records,
        &ClassifierOptions {
            mode: Mode::Baseline,
            min_author_tweets: args.min_author_tweets,
            lm: lm_options(args.no_bos, args.discount),
        },
    )?;
    ModelBundle::from_classifier(&classifier).save(&args.model)?;
    println!(
        "trained on {} records ({} positive / {} negative); bundle written to {}",
        stats.accepted,
        stats.positive,
        stats.negative,
        show(&args.model)
    );
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let categories = resolve_categories(args.mode, &args.categories)?;
    if args.mode == ModeArg::Majority {
        return Err(Error::Config(
            "majority mode has no trained model; use it with `evaluate`".into(),
        ));
    }
    eprintln!(
        "config: cmd=classify model={} input={} output={} mode={} categories={}",
        show(&args.model),
        show_opt(&args.input),
        show_opt(&args.output),
        args.mode.as_str(),
        categories,
    );
    let mode = match args.mode {
        ModeArg::Contextual => Mode::Contextual(categories),
        _ => Mode::Baseline,
    };
    let classifier = ModelBundle::load(&args.model)?.into_classifier(mode);
    let mut out = output_writer(args.output.as_deref())?;
    match &args.input {
        Some(path) => {
            let (records, malformed) = load_unlabeled(path, &IngestOptions::default())?;
            if malformed > 0 {
                eprintln!("skipped {malformed} malformed lines");
            }
            for p in classifier.classify_batch(&records) {
                writeln!(out, "{}\t{}", p.label, p.margin)?;
            }
        }
        None => {
            for line in io::stdin().lock().lines() {
                let tokens = preprocess(&line?);
                let p = classifier.classify(&tokens, None);
                writeln!(out, "{}\t{}", p.label, p.margin)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let categories = resolve_categories(args.mode, &args.categories)?;
    eprintln!(
        "config: cmd=evaluate input={} output={} k={} seed={} mode={} categories={} \
         min_author_tweets={} strict={} bos={} discount={}",
        show(&args.input),
        show_opt(&args.output),
        args.k,
        args.seed,
        args.mode.as_str(),
        categories,
        args.min_author_tweets,
        args.strict,
        !args.no_bos,
        args.discount
            .map_or_else(|| "estimated".to_owned(), |d| d.to_string()),
    );
    let opts = IngestOptions {
        strict: args.strict,
        ..IngestOptions::default()
    };
    let (records, _) = ingest(&args.input, &opts)?;
    let plan = kfold(records.len(), args.k, args.seed)?;
    let spec = EvalSpec {
        model: match args.mode {
            ModeArg::Majority => ModelKind::Majority,
            ModeArg::Baseline => ModelKind::Baseline,
            ModeArg::Contextual => ModelKind::Contextual(categories),
        },
        min_author_tweets: args.min_author_tweets,
        lm: lm_options(args.no_bos, args.discount),
    };
    let report = evaluate(&spec, &records, &plan)?;
    println!("{report}");
    if let Some(path) = &args.output {
        let mut out = BufWriter::new(create_output(path)?);
        out.write_all(report.to_csv().as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_priors(args: PriorsArgs) -> Result<()> {
    let categories = match &args.categories {
        Some(list) => CategorySet::parse(list)?,
        None => CategorySet::all(),
    };
    if categories.is_empty() {
        return Err(Error::Config("no categories requested".into()));
    }
    eprintln!(
        "config: cmd=priors input={} output={} categories={} min_author_tweets={} strict={}",
        show(&args.input),
        show_opt(&args.output),
        categories,
        args.min_author_tweets,
        args.strict,
    );
    let opts = IngestOptions {
        strict: args.strict,
        ..IngestOptions::default()
    };
    let (records, _) = ingest(&args.input, &opts)?;
    let table = ContextTable::fit(&records, args.min_author_tweets)?;
    match &args.output {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut written = 0;
            for category in categories.iter() {
                let path = dir.join(format!("{}.csv", category.name()));
                let mut out = BufWriter::new(create_output(&path)?);
                table.write_report_csv(category, &mut out)?;
                out.flush()?;
                written += 1;
            }
            println!("wrote {written} report(s) to {}", show(dir));
        }
        None => {
            let mut out = io::stdout().lock();
            for category in categories.iter() {
                writeln!(out, "== {} ==", category.name())?;
                table.write_report_csv(category, &mut out)?;
            }
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut text = String::new();
    open_input(&args.config)?.read_to_string(&mut text)?;
    let mut config = SynthConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    eprintln!(
        "config: cmd=synth config={} output={} n_tweets={} seed={}",
        show(&args.config),
        show_opt(&args.output),
        config.n_tweets,
        config.seed,
    );
    let records = generate(&config)?;
    let mut out = output_writer(args.output.as_deref())?;
    write_corpus(&records, &mut out)?;
    out.flush()?;
    Ok(())
}
