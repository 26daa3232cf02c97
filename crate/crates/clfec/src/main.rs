//! Thin command-line shell over the library: corpus statistics, seeded error
//! injection, experiment runs, scoring and report rendering.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clfec::corpus::{
    self, build_providers, load_predictions, persist_run, render_report, render_stats,
    run_experiment, score_records, ReportFormat, RunManifest, TypeLabelMap,
};
use clfec::inject::{derive_record_seed, inject_paragraph, InjectorConfig};
use clfec::prompts::PromptSet;
use clfec::providers::CacheMode;
use clfec::score::{Lexicon, MaxMatchSegmenter};
use clfec::{Method, Paragraph, Split};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "clfec", version, about = "Paragraph-level Chinese proofreading toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics: paragraph counts, lengths, error density and types.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "plain")]
        format: String,
    },
    /// Builds a corpus by injecting errors into clean paragraphs.
    Inject(InjectArgs),
    /// Runs a correction method over a corpus and writes predictions + report.
    Run(RunArgs),
    /// Scores an existing predictions file against a corpus.
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Optional path for the report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "plain")]
        format: String,
    },
    /// Renders a saved report JSON as text.
    Report {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "plain")]
        format: String,
    },
}

#[derive(Args)]
struct InjectArgs {
    /// Clean paragraphs: JSONL with fields id, text, optional split, domain.
    #[arg(long)]
    input: PathBuf,
    /// Output corpus JSONL.
    #[arg(long)]
    out: PathBuf,
    /// Gateway configuration (model, endpoint, cache).
    #[arg(long)]
    manifest: PathBuf,
    /// Master seed; overrides the manifest's.
    #[arg(long)]
    seed: Option<u64>,
    /// Split for records that do not carry one.
    #[arg(long)]
    split: Option<Split>,
    /// Cache mode override.
    #[arg(long)]
    cache: Option<CacheMode>,
    /// Extra grammar errors per paragraph (opt-in, off by default).
    #[arg(long, default_value_t = 0)]
    grammar: usize,
    /// Prompt template override directory.
    #[arg(long)]
    prompts: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for predictions, traces and reports.
    #[arg(long)]
    out: PathBuf,
    /// Method override.
    #[arg(long)]
    method: Option<Method>,
    /// Cache mode override.
    #[arg(long)]
    cache: Option<CacheMode>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Prompt template override directory.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value = "plain")]
    format: String,
}

#[derive(Deserialize)]
struct InjectInput {
    id: String,
    text: String,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    domain: Option<String>,
}

fn load_lexicon(path: &Option<PathBuf>) -> Result<Lexicon> {
    match path {
        Some(p) => Lexicon::from_path(p).with_context(|| format!("loading lexicon {}", p.display())),
        None => Ok(Lexicon::builtin()),
    }
}

fn load_prompts(path: &Option<PathBuf>) -> Result<PromptSet> {
    match path {
        Some(p) => {
            PromptSet::from_dir(p).with_context(|| format!("loading prompts from {}", p.display()))
        }
        None => Ok(PromptSet::builtin()),
    }
}

fn parse_format(s: &str) -> Result<ReportFormat> {
    s.parse::<ReportFormat>().map_err(|e| anyhow::anyhow!(e))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Stats { corpus, format } => {
            let records = corpus::load_corpus(&corpus, &TypeLabelMap::default())?;
            print!("{}", render_stats(&corpus::stats(&records), parse_format(&format)?));
        }
        Command::Inject(args) => inject(args)?,
        Command::Run(args) => run(args)?,
        Command::Score { corpus, predictions, lexicon, out, format } => {
            let labels = TypeLabelMap::default();
            let records = corpus::load_corpus(&corpus, &labels)?;
            let predictions = load_predictions(&predictions, &labels)?;
            let segmenter = MaxMatchSegmenter::new(load_lexicon(&lexicon)?);
            let (report, notes) = score_records(&records, &predictions, &segmenter)?;
            for note in notes {
                eprintln!("note: {note}");
            }
            if let Some(out) = out {
                std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            print!("{}", render_report(&report, parse_format(&format)?));
        }
        Command::Report { scores, format } => {
            let report = serde_json::from_str(&std::fs::read_to_string(&scores)?)?;
            print!("{}", render_report(&report, parse_format(&format)?));
        }
    }
    Ok(())
}

fn inject(args: InjectArgs) -> Result<()> {
    let mut manifest = RunManifest::load(&args.manifest)?;
    if let Some(cache) = args.cache {
        manifest.cache = cache;
    }
    let seed = args.seed.unwrap_or(manifest.seed);
    let providers = build_providers(&manifest)?;
    let prompts = load_prompts(&args.prompts)?;
    let config = InjectorConfig {
        grammar_errors: args.grammar,
        model: manifest.model.clone(),
        temperature: manifest.temperature,
        ..InjectorConfig::default()
    };

    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut records = Vec::new();
    let mut failures = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let input: InjectInput =
            serde_json::from_str(line).with_context(|| format!("input line {}", i + 1))?;
        let split = match (&input.split, args.split) {
            (Some(s), _) => s.parse::<Split>().map_err(|e| anyhow::anyhow!(e))?,
            (None, Some(s)) => s,
            (None, None) => bail!("record {} has no split and --split was not given", input.id),
        };
        let clean = Paragraph::from(input.text);
        let record_seed = derive_record_seed(seed, &input.id);
        match inject_paragraph(
            providers.gateway.as_ref(),
            &prompts,
            &clean,
            split,
            record_seed,
            &config,
        ) {
            Ok((corrupted, gold)) => records.push(corpus::CorpusRecord {
                id: input.id,
                split,
                input: corrupted,
                corrected: clean,
                gold_edits: gold,
                domain: input.domain,
            }),
            Err(e) => {
                failures += 1;
                eprintln!("record {}: {e}", input.id);
            }
        }
    }
    let out = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    corpus::write_corpus(std::io::BufWriter::new(out), &records, &TypeLabelMap::default())?;
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    if failures > 0 {
        bail!("{failures} paragraphs failed injection");
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut manifest = RunManifest::load(&args.manifest)?;
    if let Some(method) = args.method {
        manifest.method = method;
    }
    if let Some(cache) = args.cache {
        manifest.cache = cache;
    }
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    let labels = TypeLabelMap::default();
    let records = corpus::load_corpus(&args.corpus, &labels)?;
    let providers = build_providers(&manifest)?;
    let prompts = load_prompts(&args.prompts)?;
    let segmenter = MaxMatchSegmenter::new(load_lexicon(&args.lexicon)?);
    let output = run_experiment(&records, &manifest, &providers, &prompts, &segmenter)?;
    persist_run(&args.out, &output, &labels)?;
    print!("{}", render_report(&output.report, parse_format(&args.format)?));
    eprintln!("run artifacts written to {}", args.out.display());
    Ok(())
}
