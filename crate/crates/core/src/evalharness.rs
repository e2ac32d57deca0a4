//! ROUGE-L evaluation of generated summaries against episode descriptions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstractive::Summary;
use crate::corpus::{tokenize_texts, TokenizerConfig};
use crate::rouge::rouge_l;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no reference for episode(s): {}", .0.join(", "))]
    MissingReferences(Vec<String>),
    #[error("nothing to evaluate")]
    Empty,
    #[error("cannot render an empty table")]
    NoRows,
}

/// One report row, in percent rounded half-to-even at two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method_id: String,
    pub rouge_l_p: f64,
    pub rouge_l_r: f64,
    pub rouge_l_f: f64,
}

fn to_percent(fraction: f64) -> f64 {
    (fraction * 10_000.0).round_ties_even() / 100.0
}

/// Macro-averaged ROUGE-L P/R/F over episodes. Per-episode scores are summed
/// in episode-id order so the result does not depend on input order.
pub fn evaluate_run(
    method_id: &str,
    summaries: &[Summary],
    references: &HashMap<String, String>,
    config: &TokenizerConfig,
) -> Result<EvalRow, EvalError> {
    if summaries.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut missing: Vec<String> = summaries
        .iter()
        .filter(|s| !references.contains_key(&s.episode_id))
        .map(|s| s.episode_id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(EvalError::MissingReferences(missing));
    }

    let mut ordered: Vec<&Summary> = summaries.iter().collect();
    ordered.sort_by(|a, b| a.episode_id.cmp(&b.episode_id).then(a.text.cmp(&b.text)));
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for s in &ordered {
        let cand = tokenize_texts(&s.text, config);
        let refr = tokenize_texts(&references[&s.episode_id], config);
        let score = rouge_l(&cand, &refr);
        p += score.precision;
        r += score.recall;
        f += score.f1;
    }
    let n = ordered.len() as f64;
    Ok(EvalRow {
        method_id: method_id.to_string(),
        rouge_l_p: to_percent(p / n),
        rouge_l_r: to_percent(r / n),
        rouge_l_f: to_percent(f / n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

const HEADERS: [&str; 4] = ["Method", "ROUGE-L P", "ROUGE-L R", "ROUGE-L F"];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_table(rows: &[EvalRow], format: ReportFormat) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::NoRows);
    }
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.method_id.clone(),
                format!("{:.2}", r.rouge_l_p),
                format!("{:.2}", r.rouge_l_r),
                format!("{:.2}", r.rouge_l_f),
            ]
        })
        .collect();
    let out = match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("method,rouge_l_p,rouge_l_r,rouge_l_f\n");
            for c in &cells {
                s.push_str(&format!("{},{},{},{}\n", csv_field(&c[0]), c[1], c[2], c[3]));
            }
            s
        }
        ReportFormat::Text => {
            let mut widths = HEADERS.map(str::len);
            for c in &cells {
                for (w, v) in widths.iter_mut().zip(c) {
                    *w = (*w).max(v.chars().count());
                }
            }
            let line = |c: [&str; 4]| {
                format!(
                    "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}\n",
                    c[0],
                    c[1],
                    c[2],
                    c[3],
                    w0 = widths[0],
                    w1 = widths[1],
                    w2 = widths[2],
                    w3 = widths[3]
                )
            };
            let mut s = line(HEADERS);
            s.push_str(&format!(
                "{}-+-{}-+-{}-+-{}\n",
                "-".repeat(widths[0]),
                "-".repeat(widths[1]),
                "-".repeat(widths[2]),
                "-".repeat(widths[3])
            ));
            for c in &cells {
                s.push_str(&line([&c[0], &c[1], &c[2], &c[3]]));
            }
            s
        }
    };
    Ok(out)
}
