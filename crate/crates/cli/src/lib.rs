//! `podselect` command-line surface: preprocess, select, summarize,
//! evaluate, and the whole pipeline in one go.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use podselect_core::evalharness::ReportFormat;
use podselect_core::select::Strategy;
use thiserror::Error;

use config::{BackendKind, EvalSplit, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{failed} of {total} episodes failed")]
    Episodes { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<podselect_core::io::IoError> for CliError {
    fn from(e: podselect_core::io::IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "podselect", version, about = "Select salient transcript sentences, summarize them, score the summaries")]
pub struct Cli {
    /// JSON config file; command-line flags take precedence over it
    #[arg(long, global = true, env = "PODSELECT_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a corpus and split the survivors into train/validation/test
    Preprocess(PreprocessArgs),
    /// Pick the sentences each transcript is summarized from
    Select(SelectArgs),
    /// Cap selections to the token budget and run them through a backend
    Summarize(SummarizeArgs),
    /// Score summaries against episode descriptions with ROUGE-L
    Evaluate(EvaluateArgs),
    /// Run preprocess, select, summarize and evaluate in sequence
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SelectionFlags {
    /// Selection strategy: window, novelty, topic or none (transcript head) [default: window]
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_strategy))]
    pub strategy: Option<Strategy>,
    /// Sentences per window [default: 40, or 25 with --strategy novelty]
    #[arg(long)]
    pub window_size: Option<usize>,
    /// Single best sentences merged in by the novelty strategy [default: 5]
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Number of LDA topics for the topic strategy [default: 5]
    #[arg(long)]
    pub topics: Option<usize>,
    /// Token budget for selections and backend input [default: 1024]
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BackendFlags {
    /// Summarizer backend [default: null]
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Remote summarizer base URL; /summarize is appended [default: http://127.0.0.1:8080]
    #[arg(long)]
    pub endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct CommonFlags {
    /// Random seed for the split and the topic sampler [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: logical cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Episodes, JSONL or TSV (by extension)
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for kept.jsonl, split.jsonl and filter_report.json
    #[arg(long)]
    pub output: PathBuf,
    /// Profanity word list, one word per line [default: bundled placeholder list]
    #[arg(long)]
    pub profanity_list: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Episodes, JSONL or TSV (by extension)
    #[arg(long)]
    pub input: PathBuf,
    /// Selections JSONL
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub selection: SelectionFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Include per-window scores in each record
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Selections JSONL from `select`
    #[arg(long)]
    pub input: PathBuf,
    /// Episodes the selections were made from
    #[arg(long)]
    pub episodes: PathBuf,
    /// Summaries JSONL
    #[arg(long)]
    pub output: PathBuf,
    /// Token budget for backend input [default: 1024]
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub backend: BackendFlags,
    /// Worker threads [default: logical cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Summaries JSONL; repeat for one report row per file
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Episodes whose descriptions are the references
    #[arg(long)]
    pub references: PathBuf,
    /// Report file [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report format [default: text]
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_format))]
    pub format: Option<ReportFormat>,
    /// Row label, one per --input [default: input file stem]
    #[arg(long)]
    pub method_id: Vec<String>,
    /// Score against descriptions as written instead of cleaned ones
    #[arg(long)]
    pub raw_references: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Episodes, JSONL or TSV (by extension)
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for every stage's artifacts
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub selection: SelectionFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
    #[command(flatten)]
    pub common: CommonFlags,
    /// Skip stages whose output already exists
    #[arg(long)]
    pub resume: bool,
    /// Split that is selected, summarized and scored [default: test]
    #[arg(long, value_enum)]
    pub eval_split: Option<EvalSplit>,
    /// Report format [default: text]
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_format))]
    pub format: Option<ReportFormat>,
    /// Profanity word list, one word per line [default: bundled placeholder list]
    #[arg(long)]
    pub profanity_list: Option<PathBuf>,
    /// Score against descriptions as written instead of cleaned ones
    #[arg(long)]
    pub raw_references: bool,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

impl SelectionFlags {
    fn apply(&self, o: &mut Overrides) {
        o.strategy = self.strategy;
        o.window_size = self.window_size;
        o.top_k = self.top_k;
        o.topics = self.topics;
        o.budget = self.budget;
    }
}

impl BackendFlags {
    fn apply(&self, o: &mut Overrides) {
        o.backend = self.backend;
        o.endpoint = self.endpoint.clone();
    }
}

impl CommonFlags {
    fn apply(&self, o: &mut Overrides) {
        o.seed = self.seed;
        o.jobs = self.jobs;
    }
}

impl Command {
    pub fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        match self {
            Command::Preprocess(a) => {
                a.common.apply(&mut o);
                o.profanity_list = a.profanity_list.clone();
            }
            Command::Select(a) => {
                a.selection.apply(&mut o);
                a.common.apply(&mut o);
            }
            Command::Summarize(a) => {
                a.backend.apply(&mut o);
                o.budget = a.budget;
                o.jobs = a.jobs;
            }
            Command::Evaluate(a) => {
                o.format = a.format;
                o.raw_references = a.raw_references;
            }
            Command::Pipeline(a) => {
                a.selection.apply(&mut o);
                a.backend.apply(&mut o);
                a.common.apply(&mut o);
                o.eval_split = a.eval_split;
                o.format = a.format;
                o.profanity_list = a.profanity_list.clone();
                o.raw_references = a.raw_references;
            }
        }
        o
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    let settings = config::Settings::resolve(file, &cli.command.overrides())?;
    match &cli.command {
        Command::Preprocess(a) => commands::preprocess(a, &settings),
        Command::Select(a) => commands::select(a, &settings),
        Command::Summarize(a) => commands::summarize_cmd(a, &settings),
        Command::Evaluate(a) => commands::evaluate(a, &settings),
        Command::Pipeline(a) => commands::pipeline(a, &settings),
    }
}
