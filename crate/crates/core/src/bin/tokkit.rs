//! Command-line entry point: train, encode, decode, bench, chat-render, and
//! shard-plan over the library modules. Data goes to stdout or `--out`; logs
//! go to stderr. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tokkit::bench::{self, ReportFormat, SliceCorpus, SliceTags};
use tokkit::corpus::{self, MixtureSpec};
use tokkit::template;
use tokkit::trainer::TrainerConfig;
use tokkit::{codec, Error, TokenizerModel};

#[derive(Parser)]
#[command(name = "tokkit", version, about = "Byte-level BPE tokenizer toolkit")]
struct Cli {
    /// Worker-thread cap for internal parallelism (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a tokenizer model from a mixture spec or corpus files.
    Train(TrainArgs),
    /// Encode text to token ids (JSON array on stdout).
    Encode(EncodeArgs),
    /// Decode a JSON array of token ids back to raw bytes on stdout.
    Decode(DecodeArgs),
    /// Measure bytes-per-token over corpora for one or more models.
    Bench(BenchArgs),
    /// Render a conversation JSON file to template text.
    ChatRender(ChatRenderArgs),
    /// Print the file subset one worker loads under byte-balanced sharding.
    ShardPlan(ShardPlanArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Mixture spec JSON file (sources, weights, byte budget).
    #[arg(long, conflicts_with = "corpus")]
    mixture: Option<PathBuf>,
    /// Corpus files trained with uniform weight; alternative to --mixture.
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// Target vocabulary size including byte tokens and specials.
    #[arg(long)]
    vocab: Option<u32>,
    /// JSON array of special-token strings (default: chat-template inventory).
    #[arg(long)]
    specials_file: Option<PathBuf>,
    #[arg(long)]
    min_pair_freq: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "file")]
    text: Option<String>,
    /// Read input bytes from a file instead of --text.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Map special-token strings to their ids atomically.
    #[arg(long)]
    parse_specials: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Token ids as a JSON array, e.g. "[72,105]".
    #[arg(long, conflicts_with = "file")]
    text: Option<String>,
    /// File containing the JSON id array.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Model file; repeatable to compare models.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    /// Corpus file for the measured slice; repeatable.
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,
    /// Slice tag as key=value (domain, language, reasoning); repeatable.
    #[arg(long, value_parser = parse_slice_tag)]
    slice: Vec<(String, String)>,
    /// Baselines JSON file of externally reported bytes-per-token values.
    #[arg(long)]
    baselines: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Documents measured per slice.
    #[arg(long, default_value_t = 10_000)]
    sample_cap: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChatRenderArgs {
    /// Conversation JSON file ({"messages": [...]}).
    #[arg(long, conflicts_with = "text")]
    file: Option<PathBuf>,
    /// Conversation JSON given inline.
    #[arg(long)]
    text: Option<String>,
    /// Strip think segments from all but the last N assistant messages.
    #[arg(long)]
    keep_last_think: Option<usize>,
}

#[derive(Args)]
struct ShardPlanArgs {
    /// Corpus file; repeatable.
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    world_size: usize,
    /// Worker index in [0, world-size).
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

fn parse_slice_tag(raw: &str) -> Result<(String, String), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {raw:?}"))?;
    match key {
        "domain" | "language" => Ok((key.into(), value.into())),
        "reasoning" => match value {
            "true" | "false" => Ok((key.into(), value.into())),
            _ => Err(format!("reasoning must be true or false, got {value:?}")),
        },
        _ => Err(format!("unknown slice tag {key:?} (expected domain, language, or reasoning)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore failure: the global pool can only be set once.
        let _ = rayon_pool(jobs);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("[error] {e}");
            ExitCode::from(1)
        }
    }
}

fn rayon_pool(jobs: usize) -> Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Train(args) => train(args),
        Command::Encode(args) => encode(args),
        Command::Decode(args) => decode(args),
        Command::Bench(args) => bench_cmd(args),
        Command::ChatRender(args) => chat_render(args),
        Command::ShardPlan(args) => shard_plan(args),
    }
}

fn train(args: TrainArgs) -> Result<(), Error> {
    let mut config = TrainerConfig::default();
    if let Some(vocab) = args.vocab {
        config.target_vocab = vocab;
    }
    if let Some(path) = &args.specials_file {
        config.specials = serde_json::from_str(&fs::read_to_string(path)?)?;
    }
    if let Some(freq) = args.min_pair_freq {
        config.min_pair_frequency = freq;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let model = match (&args.mixture, args.corpus.as_slice()) {
        (Some(mixture_path), _) => {
            let mut spec = MixtureSpec::load(mixture_path)?;
            if args.seed.is_some() {
                spec.seed = config.seed;
            }
            let (docs, stats) = corpus::sample_mixture(&spec)?;
            eprintln!(
                "[info] sampled {} documents ({} bytes) from {} sources",
                docs.len(),
                stats.total_bytes,
                stats.sources.len()
            );
            let model = tokkit::trainer::train(
                docs.iter().map(|d| (d.text.as_bytes(), d.weight)),
                &config,
            )?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            model
        }
        (None, paths) if !paths.is_empty() => {
            let mut docs = Vec::new();
            for doc in corpus::load_documents(paths) {
                docs.push(doc?);
            }
            tokkit::trainer::train(docs.iter().map(|d| (d.as_bytes(), 1.0)), &config)?
        }
        (None, _) => {
            return Err(Error::ConfigInvalid("provide --mixture or at least one --corpus".into()))
        }
    };

    model.save(&args.out)?;
    eprintln!(
        "[info] wrote model: vocab_size={} merges={} specials={}",
        model.vocab_size(),
        model.merges().len(),
        model.specials().len()
    );
    Ok(())
}

fn read_input(text: Option<String>, file: Option<PathBuf>) -> Result<Vec<u8>, Error> {
    match (text, file) {
        (Some(text), None) => Ok(text.into_bytes()),
        (None, Some(path)) => Ok(fs::read(path)?),
        _ => Err(Error::ConfigInvalid("provide exactly one of --text or --file".into())),
    }
}

fn encode(args: EncodeArgs) -> Result<(), Error> {
    let model = TokenizerModel::load(&args.model)?;
    let input = read_input(args.text, args.file)?;
    let ids = codec::encode(&input, &model, args.parse_specials);
    println!("{}", serde_json::to_string(&ids)?);
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<(), Error> {
    let model = TokenizerModel::load(&args.model)?;
    let input = read_input(args.text, args.file)?;
    let ids: Vec<u32> = serde_json::from_slice(&input)?;
    let bytes = codec::decode(&ids, &model)?;
    std::io::stdout().write_all(&bytes)?;
    Ok(())
}

fn slice_from_tags(tags: &[(String, String)]) -> SliceTags {
    let mut slice = SliceTags::default();
    for (key, value) in tags {
        match key.as_str() {
            "domain" => slice.domain = Some(value.clone()),
            "language" => slice.language = Some(value.clone()),
            "reasoning" => slice.reasoning = Some(value == "true"),
            _ => unreachable!("validated by the arg parser"),
        }
    }
    slice
}

fn bench_cmd(args: BenchArgs) -> Result<(), Error> {
    let slice = slice_from_tags(&args.slice);
    let documents = bench::load_slice_documents(&args.corpus, &slice)?;
    let corpora = [SliceCorpus { slice, documents }];

    let mut models = Vec::new();
    for path in &args.model {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        models.push((name, TokenizerModel::load(path)?));
    }
    let model_refs: Vec<(String, &TokenizerModel)> =
        models.iter().map(|(name, model)| (name.clone(), model)).collect();

    let baselines = args.baselines.as_deref().map(bench::load_baselines).transpose()?;
    let report = bench::run_benchmark(&corpora, &model_refs, args.sample_cap, baselines)?;

    for gain in &report.gains {
        eprintln!(
            "[info] {} vs {} on {}: {}",
            gain.tokenizer,
            gain.baseline,
            gain.slice.key(),
            bench::format_percent(gain.relative_gain)
        );
    }

    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        _ => ReportFormat::Json,
    };
    match args.out {
        Some(path) => bench::emit_report(&report, format, &path)?,
        None => {
            let rendered = match format {
                ReportFormat::Json => bench::report_to_json(&report)?,
                ReportFormat::Csv => bench::report_to_csv(&report)?,
            };
            print!("{rendered}");
        }
    }
    Ok(())
}

fn chat_render(args: ChatRenderArgs) -> Result<(), Error> {
    let input = read_input(args.text, args.file)?;
    let mut conv: template::Conversation = serde_json::from_slice(&input)?;
    if let Some(keep) = args.keep_last_think {
        conv = template::strip_reasoning(&conv, keep);
    }
    print!("{}", template::render(&conv, false)?);
    Ok(())
}

fn shard_plan(args: ShardPlanArgs) -> Result<(), Error> {
    let shard = corpus::shard_files(&args.corpus, args.rank, args.world_size)?;
    match args.format {
        FormatArg::Json => {
            let paths: Vec<String> = shard.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::to_string(&paths)?);
        }
        _ => {
            for path in &shard {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}
