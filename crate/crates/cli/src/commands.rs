use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use podselect_core::abstractive::{
    enforce_budget, summarize, Backend, NullBackend, RemoteBackend, SummaryRecord,
};
use podselect_core::corpus::{build_document, load_episodes, Episode, InputFormat, TokenizerConfig};
use podselect_core::evalharness::{evaluate_run, render_table, EvalRow, ReportFormat};
use podselect_core::io::{read_jsonl, to_jsonl, write_atomic};
use podselect_core::preprocess::{clean_description, filter_corpus, split_dataset, SplitAssignment, SplitRecord};
use podselect_core::select::{select_head, select_novelty, select_window, SelectionRecord, Strategy};
use podselect_core::topics::{fit_lda, select_by_topics};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::{BackendKind, Settings};
use crate::{CliError, EvaluateArgs, PipelineArgs, PreprocessArgs, SelectArgs, SummarizeArgs};

pub const KEPT_FILE: &str = "kept.jsonl";
pub const SPLIT_FILE: &str = "split.jsonl";
pub const FILTER_REPORT_FILE: &str = "filter_report.json";
pub const SELECTIONS_FILE: &str = "selections.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";

pub fn report_file(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Text => "report.txt",
        ReportFormat::Csv => "report.csv",
        ReportFormat::Json => "report.json",
    }
}

type Failure = (String, String);

fn pool(jobs: usize) -> Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

/// Runs `f` over `items` on the pool. Results keep input order; failures
/// are returned separately with the episode id.
fn run_batch<I, T, F>(pool: &ThreadPool, items: &[I], id: fn(&I) -> &str, f: F) -> (Vec<T>, Vec<Failure>)
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T, String> + Sync,
{
    let results: Vec<Result<T, String>> = pool.install(|| items.par_iter().map(&f).collect());
    let mut ok = Vec::with_capacity(items.len());
    let mut failed = Vec::new();
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((id(item).to_string(), e)),
        }
    }
    (ok, failed)
}

fn log_failures(failures: &[Failure]) {
    for (id, msg) in failures {
        eprintln!("podselect: episode {id}: {msg}");
    }
}

fn check_failures(failures: &[Failure], total: usize) -> Result<(), CliError> {
    log_failures(failures);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Episodes { failed: failures.len(), total })
    }
}

fn read_episodes(path: &Path) -> Result<Vec<Episode>, CliError> {
    let reader = load_episodes(path, InputFormat::from_path(path)).map_err(|e| CliError::Io(e.to_string()))?;
    reader
        .map(|r| r.map_err(|e| CliError::Io(format!("{}: {e}", path.display()))))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    Ok(write_atomic(path, to_jsonl(items).as_bytes())?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    Ok(write_atomic(path, s.as_bytes())?)
}

fn preprocess_stage(input: &Path, dir: &Path, settings: &Settings, pool: &ThreadPool) -> Result<(), CliError> {
    let episodes = read_episodes(input)?;
    let (kept, report) = pool
        .install(|| filter_corpus(episodes, &settings.filter))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let split = if kept.is_empty() {
        SplitAssignment { seed: settings.seed, assignments: Vec::new() }
    } else {
        let ids: Vec<String> = kept.iter().map(|e| e.id.clone()).collect();
        split_dataset(&ids, settings.split_ratios, settings.seed).map_err(|e| CliError::Runtime(e.to_string()))?
    };
    write_jsonl(&dir.join(KEPT_FILE), &kept)?;
    write_jsonl(&dir.join(SPLIT_FILE), &split.assignments)?;
    write_json(&dir.join(FILTER_REPORT_FILE), &report)?;
    eprintln!("podselect: kept {} of {} episodes", report.kept, report.input);
    Ok(())
}

pub fn preprocess(args: &PreprocessArgs, settings: &Settings) -> Result<(), CliError> {
    preprocess_stage(&args.input, &args.output, settings, &pool(settings.jobs)?)
}

fn select_one(ep: &Episode, settings: &Settings, diagnostics: bool) -> Result<SelectionRecord, String> {
    let doc = build_document(ep, &TokenizerConfig::default()).map_err(|e| e.to_string())?;
    let budget = settings.selector.token_budget;
    let result = match settings.strategy {
        Strategy::Window => select_window(&doc, &settings.selector).map_err(|e| e.to_string())?,
        Strategy::Novelty => select_novelty(&doc, &settings.selector).map_err(|e| e.to_string())?,
        Strategy::None => select_head(&doc, budget).map_err(|e| e.to_string())?,
        Strategy::Topic => {
            let model = fit_lda(&doc, &settings.topic).map_err(|e| e.to_string())?;
            select_by_topics(&doc, &model, budget).map_err(|e| e.to_string())?
        }
    };
    Ok(result.to_record(diagnostics))
}

fn select_batch(
    episodes: &[Episode],
    settings: &Settings,
    pool: &ThreadPool,
    diagnostics: bool,
) -> (Vec<SelectionRecord>, Vec<Failure>) {
    run_batch(pool, episodes, |e| &e.id, |ep| select_one(ep, settings, diagnostics))
}

pub fn select(args: &SelectArgs, settings: &Settings) -> Result<(), CliError> {
    let episodes = read_episodes(&args.input)?;
    let (records, failures) = select_batch(&episodes, settings, &pool(settings.jobs)?, args.diagnostics);
    write_jsonl(&args.output, &records)?;
    check_failures(&failures, episodes.len())
}

fn make_backend(settings: &Settings) -> Box<dyn Backend> {
    match settings.backend {
        BackendKind::Null => Box::new(NullBackend),
        BackendKind::Remote => Box::new(RemoteBackend::new(settings.remote.clone())),
    }
}

fn summarize_one(
    record: &SelectionRecord,
    episodes: &HashMap<&str, &Episode>,
    budget: usize,
    backend: &dyn Backend,
) -> Result<SummaryRecord, String> {
    let ep = episodes.get(record.id.as_str()).ok_or("no matching episode")?;
    let doc = build_document(ep, &TokenizerConfig::default()).map_err(|e| e.to_string())?;
    let selection = record.to_result(&doc).map_err(|e| e.to_string())?;
    let input = enforce_budget(&selection, &doc, budget).map_err(|e| e.to_string())?;
    let summary = summarize(&input, backend).map_err(|e| e.to_string())?;
    Ok(SummaryRecord::from(&summary))
}

fn summarize_batch(
    selections: &[SelectionRecord],
    episodes: &[Episode],
    settings: &Settings,
    pool: &ThreadPool,
) -> (Vec<SummaryRecord>, Vec<Failure>) {
    let by_id: HashMap<&str, &Episode> = episodes.iter().map(|e| (e.id.as_str(), e)).collect();
    let backend = make_backend(settings);
    let budget = settings.selector.token_budget;
    run_batch(pool, selections, |r| &r.id, |r| summarize_one(r, &by_id, budget, backend.as_ref()))
}

pub fn summarize_cmd(args: &SummarizeArgs, settings: &Settings) -> Result<(), CliError> {
    let selections: Vec<SelectionRecord> = read_jsonl(&args.input)?;
    let episodes = read_episodes(&args.episodes)?;
    let (summaries, failures) = summarize_batch(&selections, &episodes, settings, &pool(settings.jobs)?);
    write_jsonl(&args.output, &summaries)?;
    check_failures(&failures, selections.len())
}

fn references(episodes: &[Episode], raw: bool) -> HashMap<String, String> {
    episodes
        .iter()
        .map(|e| {
            let text = if raw { e.description.clone() } else { clean_description(&e.description) };
            (e.id.clone(), text)
        })
        .collect()
}

fn evaluate_file(path: &Path, method_id: &str, refs: &HashMap<String, String>) -> Result<EvalRow, CliError> {
    let records: Vec<SummaryRecord> = read_jsonl(path)?;
    let summaries: Vec<_> = records.into_iter().map(Into::into).collect();
    evaluate_run(method_id, &summaries, refs, &TokenizerConfig::default())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn method_from_path(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn evaluate(args: &EvaluateArgs, settings: &Settings) -> Result<(), CliError> {
    if !args.method_id.is_empty() && args.method_id.len() != args.input.len() {
        return Err(CliError::Config(format!(
            "{} --method-id values for {} --input files",
            args.method_id.len(),
            args.input.len()
        )));
    }
    let refs = references(&read_episodes(&args.references)?, settings.raw_references);
    let rows = args
        .input
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let method = args.method_id.get(i).cloned().unwrap_or_else(|| method_from_path(path));
            evaluate_file(path, &method, &refs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = render_table(&rows, settings.format).map_err(|e| CliError::Runtime(e.to_string()))?;
    match &args.output {
        Some(path) => write_atomic(path, table.as_bytes())?,
        None => print!("{table}"),
    }
    Ok(())
}

struct StagePaths {
    kept: PathBuf,
    split: PathBuf,
    filter_report: PathBuf,
    selections: PathBuf,
    summaries: PathBuf,
    report: PathBuf,
}

impl StagePaths {
    fn new(dir: &Path, format: ReportFormat) -> Self {
        Self {
            kept: dir.join(KEPT_FILE),
            split: dir.join(SPLIT_FILE),
            filter_report: dir.join(FILTER_REPORT_FILE),
            selections: dir.join(SELECTIONS_FILE),
            summaries: dir.join(SUMMARIES_FILE),
            report: dir.join(report_file(format)),
        }
    }
}

pub fn pipeline(args: &PipelineArgs, settings: &Settings) -> Result<(), CliError> {
    let paths = StagePaths::new(&args.output, settings.format);
    let done = |p: &Path| args.resume && p.exists();
    let pool = pool(settings.jobs)?;
    let mut failures: Vec<Failure> = Vec::new();
    let mut total = 0;

    if !(done(&paths.kept) && done(&paths.split) && done(&paths.filter_report)) {
        preprocess_stage(&args.input, &args.output, settings, &pool)?;
    }

    if !done(&paths.selections) {
        let kept: Vec<Episode> = read_jsonl(&paths.kept)?;
        let split: Vec<SplitRecord> = read_jsonl(&paths.split)?;
        let chosen: HashSet<&str> = split
            .iter()
            .filter(|r| settings.eval_split.includes(r.split))
            .map(|r| r.id.as_str())
            .collect();
        let episodes: Vec<Episode> = kept.into_iter().filter(|e| chosen.contains(e.id.as_str())).collect();
        let (records, failed) = select_batch(&episodes, settings, &pool, false);
        write_jsonl(&paths.selections, &records)?;
        total += episodes.len();
        failures.extend(failed);
    }

    if !done(&paths.summaries) {
        let selections: Vec<SelectionRecord> = read_jsonl(&paths.selections)?;
        let kept: Vec<Episode> = read_jsonl(&paths.kept)?;
        let (summaries, failed) = summarize_batch(&selections, &kept, settings, &pool);
        write_jsonl(&paths.summaries, &summaries)?;
        total = total.max(selections.len());
        failures.extend(failed);
    }

    if !done(&paths.report) {
        let kept: Vec<Episode> = read_jsonl(&paths.kept)?;
        let refs = references(&kept, settings.raw_references);
        let backend = match settings.backend {
            BackendKind::Null => "null",
            BackendKind::Remote => "remote",
        };
        let method = format!("{}+{}", settings.strategy.as_str(), backend);
        let row = evaluate_file(&paths.summaries, &method, &refs)?;
        let table = render_table(&[row], settings.format).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&paths.report, table.as_bytes())?;
    }

    check_failures(&failures, total)
}
