//! Settings resolution: command-line flag, then config file, then default.

use std::path::{Path, PathBuf};

use podselect_core::abstractive::RemoteConfig;
use podselect_core::evalharness::ReportFormat;
use podselect_core::preprocess::{FilterConfig, Split};
use podselect_core::select::{SelectorConfig, Strategy};
use podselect_core::topics::TopicConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Null,
    Remote,
}

/// Which split the pipeline selects, summarizes and scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Validation,
    Test,
    All,
}

impl EvalSplit {
    pub fn includes(self, split: Split) -> bool {
        match self {
            EvalSplit::All => true,
            EvalSplit::Train => split == Split::Train,
            EvalSplit::Validation => split == Split::Validation,
            EvalSplit::Test => split == Split::Test,
        }
    }
}

/// Contents of the JSON config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub strategy: Option<Strategy>,
    pub window_size: Option<usize>,
    pub top_k: Option<usize>,
    pub topics: Option<usize>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub backend: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub include_rouge_l: Option<bool>,
    pub eval_split: Option<EvalSplit>,
    pub format: Option<ReportFormat>,
    pub raw_references: Option<bool>,
    pub split_ratios: Option<(f64, f64, f64)>,
    pub filter: Option<FilterConfig>,
    pub topic: Option<TopicConfig>,
    pub remote: Option<RemoteConfig>,
}

impl FileConfig {
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = explicit else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub strategy: Option<Strategy>,
    pub window_size: Option<usize>,
    pub top_k: Option<usize>,
    pub topics: Option<usize>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub backend: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub eval_split: Option<EvalSplit>,
    pub format: Option<ReportFormat>,
    pub raw_references: bool,
    pub profanity_list: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub strategy: Strategy,
    pub selector: SelectorConfig,
    pub topic: TopicConfig,
    pub filter: FilterConfig,
    pub backend: BackendKind,
    pub remote: RemoteConfig,
    pub seed: u64,
    pub jobs: usize,
    pub eval_split: EvalSplit,
    pub format: ReportFormat,
    pub raw_references: bool,
    pub split_ratios: (f64, f64, f64),
}

pub fn logical_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Settings {
    pub fn resolve(file: FileConfig, flags: &Overrides) -> Result<Self, CliError> {
        let strategy = flags.strategy.or(file.strategy).unwrap_or(Strategy::Window);
        let base = match strategy {
            Strategy::Novelty => SelectorConfig::novelty(),
            _ => SelectorConfig::window(),
        };
        let selector = SelectorConfig {
            window_size: flags.window_size.or(file.window_size).unwrap_or(base.window_size),
            novelty_top_k: flags.top_k.or(file.top_k).unwrap_or(base.novelty_top_k),
            token_budget: flags.budget.or(file.budget).unwrap_or(base.token_budget),
            include_rouge_l: file.include_rouge_l.unwrap_or(base.include_rouge_l),
        };
        let seed = flags.seed.or(file.seed).unwrap_or(0);

        let mut topic = file.topic.unwrap_or_default();
        if let Some(k) = flags.topics.or(file.topics) {
            topic.num_topics = k;
        }
        topic.seed = seed;

        let mut filter = file.filter.unwrap_or_default();
        if let Some(p) = &flags.profanity_list {
            filter.profanity_list_path = Some(p.clone());
        }

        let mut remote = file.remote.unwrap_or_default();
        if let Some(e) = flags.endpoint.clone().or(file.endpoint) {
            remote.endpoint = e;
        }

        let settings = Settings {
            strategy,
            selector,
            topic,
            filter,
            backend: flags.backend.or(file.backend).unwrap_or(BackendKind::Null),
            remote,
            seed,
            jobs: flags.jobs.or(file.jobs).unwrap_or_else(logical_cores),
            eval_split: flags.eval_split.or(file.eval_split).unwrap_or(EvalSplit::Test),
            format: flags.format.or(file.format).unwrap_or(ReportFormat::Text),
            raw_references: flags.raw_references || file.raw_references.unwrap_or(false),
            split_ratios: file.split_ratios.unwrap_or((0.8, 0.1, 0.1)),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<(), CliError> {
        let config = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
        self.selector.validate().map_err(|e| config(&e))?;
        if self.strategy == Strategy::Topic {
            self.topic.validate().map_err(|e| config(&e))?;
        }
        self.filter.validate().map_err(|e| config(&e))?;
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        let (a, b, c) = self.split_ratios;
        if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(CliError::Config("split_ratios must be fractions summing to 1".into()));
        }
        Ok(())
    }
}
