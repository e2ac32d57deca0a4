//! Hand-off to the abstractive model: cap the selection at the model's
//! input budget and send it to a backend.

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::select::SelectionResult;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_INITIAL_BACKOFF: Duration = Duration::from_millis(500);
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BudgetError {
    #[error("token budget must be at least 1")]
    InvalidBudget,
    #[error("selection for {selection} applied to document {document}")]
    EpisodeMismatch { selection: String, document: String },
    #[error("sentence index {index} out of range for {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("episode {0}: nothing to summarize")]
    EmptyInput(String),
    #[error("backend failed after {attempts} attempt(s): {message}")]
    Remote { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInput {
    pub episode_id: String,
    pub text: String,
    pub token_count: usize,
    /// Sentences actually sent, ascending.
    pub sentence_indices: Vec<usize>,
    /// Set when a single sentence was longer than the whole budget.
    pub truncated_mid_sentence: bool,
}

/// Keeps the selected sentences in document order, dropping trailing whole
/// sentences once the budget would be exceeded. Only when the first selected
/// sentence alone is over budget is it cut mid-sentence (and flagged).
pub fn enforce_budget(
    selection: &SelectionResult,
    doc: &Document,
    max_tokens: usize,
) -> Result<BackendInput, BudgetError> {
    if max_tokens == 0 {
        return Err(BudgetError::InvalidBudget);
    }
    if selection.episode_id != doc.episode_id {
        return Err(BudgetError::EpisodeMismatch {
            selection: selection.episode_id.clone(),
            document: doc.episode_id.clone(),
        });
    }
    let mut indices = selection.sentence_indices.clone();
    indices.sort_unstable();
    indices.dedup();
    if let Some(&bad) = indices.iter().find(|&&i| i >= doc.len()) {
        return Err(BudgetError::IndexOutOfRange {
            index: bad,
            len: doc.len(),
        });
    }

    let mut kept = Vec::new();
    let mut used = 0;
    for &i in &indices {
        let len = doc.sentences[i].len();
        if used + len > max_tokens {
            break;
        }
        used += len;
        kept.push(i);
    }

    if kept.is_empty() {
        if let Some(&first) = indices.first() {
            let s = &doc.sentences[first];
            let cut = s.tokens[max_tokens - 1].span.1 - s.span.0;
            return Ok(BackendInput {
                episode_id: doc.episode_id.clone(),
                text: s.raw_text[..cut].to_string(),
                token_count: max_tokens,
                sentence_indices: vec![first],
                truncated_mid_sentence: true,
            });
        }
    }

    let text = kept
        .iter()
        .map(|&i| doc.sentences[i].raw_text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(BackendInput {
        episode_id: doc.episode_id.clone(),
        text,
        token_count: used,
        sentence_indices: kept,
        truncated_mid_sentence: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub episode_id: String,
    pub text: String,
    pub backend_id: String,
    pub latency_ms: Option<u64>,
}

/// One line of a summaries JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub summary: String,
    pub backend: String,
}

impl From<&Summary> for SummaryRecord {
    fn from(s: &Summary) -> Self {
        SummaryRecord {
            id: s.episode_id.clone(),
            summary: s.text.clone(),
            backend: s.backend_id.clone(),
        }
    }
}

impl From<SummaryRecord> for Summary {
    fn from(r: SummaryRecord) -> Self {
        Summary {
            episode_id: r.id,
            text: r.summary,
            backend_id: r.backend,
            latency_ms: None,
        }
    }
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn generate(&self, input: &BackendInput) -> Result<String, BackendError>;
}

/// Returns its input unchanged: an extractive fallback for offline runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullBackend;

impl Backend for NullBackend {
    fn id(&self) -> &str {
        "null"
    }

    fn generate(&self, input: &BackendInput) -> Result<String, BackendError> {
        Ok(input.text.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL; `/summarize` is appended unless already present.
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_length: Option<usize>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080".into(),
            timeout_ms: DEFAULT_TIMEOUT.as_millis() as u64,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            initial_backoff_ms: DEFAULT_INITIAL_BACKOFF.as_millis() as u64,
            max_length: None,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_length: Option<usize>,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    #[allow(dead_code)]
    id: Option<String>,
    summary: String,
}

/// HTTP client for `POST /summarize`.
pub struct RemoteBackend {
    url: String,
    agent: ureq::Agent,
    config: RemoteConfig,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let base = config.endpoint.trim_end_matches('/');
        let url = if base.ends_with("/summarize") {
            base.to_string()
        } else {
            format!("{base}/summarize")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { url, agent, config }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, Attempt> {
        let payload = serde_json::to_string(body).expect("request serializes");
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(payload.as_str())
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let msg = format!("HTTP {status} from {}", self.url);
            return Err(if status >= 500 || status == 429 {
                Attempt::Retryable(msg)
            } else {
                Attempt::Fatal(msg)
            });
        }
        let raw = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let parsed: WireResponse = serde_json::from_str(&raw)
            .map_err(|e| Attempt::Protocol(format!("bad response body: {e}")))?;
        Ok(parsed.summary)
    }
}

enum Attempt {
    Retryable(String),
    Fatal(String),
    Protocol(String),
}

impl Backend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn generate(&self, input: &BackendInput) -> Result<String, BackendError> {
        let body = WireRequest {
            id: &input.episode_id,
            text: &input.text,
            max_length: self.config.max_length,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(summary) => return Ok(summary),
                Err(Attempt::Protocol(m)) => return Err(BackendError::Protocol(m)),
                Err(Attempt::Fatal(message)) => {
                    return Err(BackendError::Remote {
                        attempts: n,
                        message,
                    })
                }
                Err(Attempt::Retryable(m)) => last = m,
            }
            if n < attempts {
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(BackendError::Remote {
            attempts,
            message: last,
        })
    }
}

pub fn summarize(input: &BackendInput, backend: &dyn Backend) -> Result<Summary, BackendError> {
    if input.text.trim().is_empty() {
        return Err(BackendError::EmptyInput(input.episode_id.clone()));
    }
    let started = Instant::now();
    let text = backend.generate(input)?;
    if text.trim().is_empty() {
        return Err(BackendError::Protocol(format!(
            "episode {}: backend returned an empty summary",
            input.episode_id
        )));
    }
    Ok(Summary {
        episode_id: input.episode_id.clone(),
        text,
        backend_id: backend.id().to_string(),
        latency_ms: Some(started.elapsed().as_millis() as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::{SelectionResult, Strategy};
    use proptest::prelude::*;

    fn doc_with_lengths(lengths: &[usize]) -> Document {
        let lists: Vec<Vec<String>> = lengths
            .iter()
            .enumerate()
            .map(|(s, &n)| (0..n).map(|t| format!("s{s}t{t}")).collect())
            .collect();
        Document::from_token_lists("ep", &lists)
    }

    fn selection(doc: &Document, indices: Vec<usize>) -> SelectionResult {
        SelectionResult::new(doc, Strategy::Window, indices)
    }

    #[test]
    fn under_budget_is_unchanged() {
        let d = doc_with_lengths(&[300, 300, 300]);
        let out = enforce_budget(&selection(&d, vec![0, 1, 2]), &d, 1024).unwrap();
        assert_eq!(out.token_count, 900);
        assert_eq!(out.sentence_indices, vec![0, 1, 2]);
        assert!(!out.truncated_mid_sentence);
        let joined: Vec<&str> = d.sentences.iter().map(|s| s.raw_text.as_str()).collect();
        assert_eq!(out.text, joined.join(" "));
    }

    #[test]
    fn over_budget_drops_trailing_sentences() {
        let d = doc_with_lengths(&[500, 400, 300, 300]);
        let out = enforce_budget(&selection(&d, vec![0, 1, 2, 3]), &d, 1024).unwrap();
        assert_eq!(out.sentence_indices, vec![0, 1]);
        assert_eq!(out.token_count, 900);
    }

    #[test]
    fn oversized_first_sentence_is_cut_and_flagged() {
        let d = doc_with_lengths(&[2000, 10]);
        let out = enforce_budget(&selection(&d, vec![0, 1]), &d, 1024).unwrap();
        assert!(out.truncated_mid_sentence);
        assert_eq!(out.token_count, 1024);
        assert_eq!(out.text.split_whitespace().count(), 1024);
        assert!(out.text.ends_with("s0t1023"));
    }

    #[test]
    fn invalid_inputs() {
        let d = doc_with_lengths(&[3]);
        let mut sel = selection(&d, vec![0]);
        assert_eq!(enforce_budget(&sel, &d, 0), Err(BudgetError::InvalidBudget));
        sel.sentence_indices = vec![4];
        assert!(matches!(
            enforce_budget(&sel, &d, 5),
            Err(BudgetError::IndexOutOfRange { index: 4, .. })
        ));
        sel.episode_id = "other".into();
        assert!(matches!(
            enforce_budget(&sel, &d, 5),
            Err(BudgetError::EpisodeMismatch { .. })
        ));
    }

    #[test]
    fn null_backend_is_identity() {
        let d = doc_with_lengths(&[4, 4]);
        let input = enforce_budget(&selection(&d, vec![0, 1]), &d, 1024).unwrap();
        let s = summarize(&input, &NullBackend).unwrap();
        assert_eq!(s.text, input.text);
        assert_eq!(s.backend_id, "null");
        assert!(matches!(
            summarize(&BackendInput { text: String::new(), ..input }, &NullBackend),
            Err(BackendError::EmptyInput(_))
        ));
    }

    #[test]
    fn remote_url_building() {
        let b = RemoteBackend::new(RemoteConfig { endpoint: "http://h:1/".into(), ..Default::default() });
        assert_eq!(b.url(), "http://h:1/summarize");
        let b = RemoteBackend::new(RemoteConfig { endpoint: "http://h:1/summarize".into(), ..Default::default() });
        assert_eq!(b.url(), "http://h:1/summarize");
    }

    proptest! {
        #[test]
        fn budget_holds_and_is_idempotent(
            lengths in prop::collection::vec(1usize..400, 1..30),
            mask in prop::collection::vec(any::<bool>(), 30),
            budget in 1usize..1500,
        ) {
            let d = doc_with_lengths(&lengths);
            let idx: Vec<usize> = (0..lengths.len()).filter(|&i| mask[i]).collect();
            let out = enforce_budget(&selection(&d, idx.clone()), &d, budget).unwrap();
            prop_assert!(out.token_count <= budget);
            if out.truncated_mid_sentence {
                prop_assert!(d.sentences[idx[0]].len() > budget);
            }
            let again = enforce_budget(&selection(&d, out.sentence_indices.clone()), &d, budget).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
