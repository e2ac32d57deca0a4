//! Episodes, transcripts and the sentence/token model every selector works on.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::ops::Range;
use std::path::Path;
use std::sync::LazyLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

static ABBREVIATIONS: LazyLock<HashSet<String>> =
    LazyLock::new(|| parse_word_list(include_str!("../data/abbreviations.txt")));

static STOPWORDS: LazyLock<HashSet<String>> =
    LazyLock::new(|| parse_word_list(include_str!("../data/stopwords_en.txt")));

static STEMMER: LazyLock<Stemmer> = LazyLock::new(|| Stemmer::create(Algorithm::English));

/// Parses a one-entry-per-line list, skipping blanks and `#` comments.
pub(crate) fn parse_word_list(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The bundled English stopword set.
pub fn english_stopwords() -> &'static HashSet<String> {
    &STOPWORDS
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("episode {0}: transcript is empty")]
    EmptyTranscript(String),
    #[error("episode {0}: empty document (no sentence has a token)")]
    EmptyDocument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    #[serde(default)]
    pub show_id: String,
    #[serde(rename = "transcript")]
    pub transcript_text: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub show_description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl InputFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => InputFormat::Tsv,
            _ => InputFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct RawEpisode {
    id: Option<String>,
    #[serde(default)]
    show_id: String,
    transcript: Option<String>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    show_description: String,
    duration_seconds: Option<f64>,
}

impl RawEpisode {
    fn into_episode(self, line: usize) -> Result<Episode, CorpusError> {
        let id = match self.id {
            Some(id) if !id.is_empty() => id,
            _ => {
                return Err(CorpusError::Record {
                    line,
                    message: "missing \"id\"".into(),
                })
            }
        };
        let transcript_text = self.transcript.ok_or_else(|| CorpusError::Record {
            line,
            message: format!("episode {id}: missing \"transcript\""),
        })?;
        if let Some(d) = self.duration_seconds {
            if d.is_nan() || d < 0.0 {
                return Err(CorpusError::Record {
                    line,
                    message: format!("episode {id}: negative duration_seconds"),
                });
            }
        }
        Ok(Episode {
            id,
            show_id: self.show_id,
            transcript_text,
            description: self.description,
            show_description: self.show_description,
            duration_seconds: self.duration_seconds,
        })
    }
}

/// Lazily parsed episode stream. Malformed records come through as `Err`
/// items carrying their 1-based line number; iteration continues past them.
pub struct EpisodeReader {
    lines: Lines<BufReader<File>>,
    format: InputFormat,
    line_no: usize,
    tsv_columns: Option<Vec<String>>,
    seen: HashSet<String>,
}

impl EpisodeReader {
    fn parse_tsv(&mut self, line: &str) -> Result<RawEpisode, CorpusError> {
        let columns = self.tsv_columns.as_ref().expect("header parsed");
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |name: &str| {
            columns
                .iter()
                .position(|c| c == name)
                .and_then(|i| fields.get(i))
                .map(|s| unescape_tsv(s))
        };
        let duration_seconds = match get("duration_seconds").filter(|s| !s.is_empty()) {
            Some(raw) => Some(raw.parse::<f64>().map_err(|e| CorpusError::Record {
                line: self.line_no,
                message: format!("bad duration_seconds: {e}"),
            })?),
            None => None,
        };
        Ok(RawEpisode {
            id: get("id"),
            show_id: get("show_id").unwrap_or_default(),
            transcript: get("transcript"),
            description: get("description").unwrap_or_default(),
            show_description: get("show_description").unwrap_or_default(),
            duration_seconds,
        })
    }
}

fn unescape_tsv(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

impl Iterator for EpisodeReader {
    type Item = Result<Episode, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(CorpusError::Record {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let raw = match self.format {
                InputFormat::Jsonl => {
                    serde_json::from_str::<RawEpisode>(&line).map_err(|e| CorpusError::Record {
                        line: self.line_no,
                        message: e.to_string(),
                    })
                }
                InputFormat::Tsv => {
                    if self.tsv_columns.is_none() {
                        let cols: Vec<String> =
                            line.split('\t').map(|c| c.trim().to_string()).collect();
                        if !cols.iter().any(|c| c == "id") || !cols.iter().any(|c| c == "transcript")
                        {
                            return Some(Err(CorpusError::Record {
                                line: self.line_no,
                                message: "TSV header must name \"id\" and \"transcript\" columns"
                                    .into(),
                            }));
                        }
                        self.tsv_columns = Some(cols);
                        continue;
                    }
                    self.parse_tsv(&line)
                }
            };
            let episode = raw.and_then(|r| r.into_episode(self.line_no));
            return Some(episode.and_then(|ep| {
                if self.seen.insert(ep.id.clone()) {
                    Ok(ep)
                } else {
                    Err(CorpusError::Record {
                        line: self.line_no,
                        message: format!("duplicate episode id {}", ep.id),
                    })
                }
            }));
        }
    }
}

/// Opens an episode file. I/O failure to open is reported here; per-record
/// problems surface while iterating.
pub fn load_episodes(path: &Path, format: InputFormat) -> Result<EpisodeReader, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(EpisodeReader {
        lines: BufReader::new(file).lines(),
        format,
        line_no: 0,
        tsv_columns: None,
        seen: HashSet::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub stem: bool,
    pub remove_stopwords: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            stem: false,
            remove_stopwords: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the text that was tokenized.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
    pub raw_text: String,
    /// Byte offsets of `raw_text` within the episode transcript.
    pub span: (usize, usize),
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub episode_id: String,
    pub sentences: Vec<Sentence>,
    pub total_tokens: usize,
}

impl Document {
    /// Builds a document directly from pre-tokenized sentences. Raw text is
    /// the space-joined tokens and spans refer to that synthetic text.
    pub fn from_token_lists<S: AsRef<str>>(episode_id: &str, sentences: &[Vec<S>]) -> Self {
        let mut offset = 0;
        let mut out = Vec::with_capacity(sentences.len());
        for words in sentences.iter().filter(|w| !w.is_empty()) {
            let start = offset;
            let mut tokens = Vec::with_capacity(words.len());
            let mut raw = String::new();
            for (i, w) in words.iter().enumerate() {
                if i > 0 {
                    raw.push(' ');
                    offset += 1;
                }
                let w = w.as_ref();
                tokens.push(Token {
                    text: w.to_string(),
                    span: (offset, offset + w.len()),
                });
                raw.push_str(w);
                offset += w.len();
            }
            out.push(Sentence {
                index: out.len(),
                tokens,
                raw_text: raw,
                span: (start, offset),
            });
            offset += 1;
        }
        let total_tokens = out.iter().map(Sentence::len).sum();
        Document {
            episode_id: episode_id.to_string(),
            sentences: out,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// All token texts in document order.
    pub fn token_texts(&self) -> Vec<&str> {
        self.sentences.iter().flat_map(Sentence::token_texts).collect()
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Abbreviations that only guard when a number follows ("No. 5" but not "I said no.").
const NUMERIC_PREFIXES: [&str; 4] = ["no", "nos", "vol", "fig"];

/// Whether the word ending at a period is guarded against splitting.
fn is_guarded(word: &str, rest: &str) -> bool {
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    let stem = word.trim_end_matches('.').to_lowercase();
    if stem.is_empty() {
        return false;
    }
    let mut chars = stem.chars();
    let single_letter = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic());
    if NUMERIC_PREFIXES.contains(&stem.as_str()) {
        return rest.trim_start().starts_with(|c: char| c.is_ascii_digit());
    }
    single_letter || ABBREVIATIONS.contains(&stem)
}

/// Byte ranges of the sentences in `text`. Whitespace between sentences
/// belongs to no range.
pub fn segment_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut word_start = 0;
    let mut iter = text.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() {
            word_start = i + c.len_utf8();
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        if !is_terminal(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut only_periods = c == '.';
        while let Some(&(j, d)) = iter.peek() {
            if is_terminal(d) || is_closing(d) {
                only_periods &= d == '.' || is_closing(d);
                end = j + d.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        let at_boundary = match iter.peek() {
            None => true,
            Some(&(_, d)) => d.is_whitespace(),
        };
        if !at_boundary {
            continue;
        }
        if only_periods && is_guarded(text[word_start..end].trim_end_matches(is_closing), &text[end..]) {
            continue;
        }
        spans.push(start.take().unwrap()..end);
    }
    if let Some(s) = start {
        spans.push(s..text.trim_end().len());
    }
    spans
}

/// Splits on `.`, `!` or `?` followed by whitespace, except after guarded
/// abbreviations and single-letter initials.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    segment_spans(text).into_iter().map(|r| &text[r]).collect()
}

fn normalize_unit(unit: &str, config: &TokenizerConfig) -> Option<(String, usize, usize)> {
    let (lead, trimmed) = if config.strip_punctuation {
        let t = unit.trim_start_matches(|c: char| !c.is_alphanumeric());
        let lead = unit.len() - t.len();
        (lead, t.trim_end_matches(|c: char| !c.is_alphanumeric()))
    } else {
        (0, unit)
    };
    if trimmed.is_empty() {
        return None;
    }
    let mut text = if config.lowercase {
        trimmed.to_lowercase()
    } else {
        trimmed.to_string()
    };
    if config.remove_stopwords && STOPWORDS.contains(&text.to_lowercase()) {
        return None;
    }
    if config.stem {
        text = STEMMER.stem(&text).into_owned();
    }
    Some((text, lead, lead + trimmed.len()))
}

/// Whitespace tokenization with per-config normalization. Units that
/// normalize to nothing are dropped.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut unit_start: Option<usize> = None;
    let push = |start: usize, end: usize, tokens: &mut Vec<Token>| {
        if let Some((t, a, b)) = normalize_unit(&text[start..end], config) {
            tokens.push(Token {
                text: t,
                span: (start + a, start + b),
            });
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = unit_start.take() {
                push(s, i, &mut tokens);
            }
        } else if unit_start.is_none() {
            unit_start = Some(i);
        }
    }
    if let Some(s) = unit_start {
        push(s, text.len(), &mut tokens);
    }
    tokens
}

/// Token texts only.
pub fn tokenize_texts(text: &str, config: &TokenizerConfig) -> Vec<String> {
    tokenize(text, config).into_iter().map(|t| t.text).collect()
}

pub fn build_document(episode: &Episode, config: &TokenizerConfig) -> Result<Document, CorpusError> {
    let text = episode.transcript_text.as_str();
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyTranscript(episode.id.clone()));
    }
    let mut sentences = Vec::new();
    for span in segment_spans(text) {
        let raw = &text[span.clone()];
        let tokens: Vec<Token> = tokenize(raw, config)
            .into_iter()
            .map(|t| Token {
                text: t.text,
                span: (t.span.0 + span.start, t.span.1 + span.start),
            })
            .collect();
        if tokens.is_empty() {
            continue;
        }
        sentences.push(Sentence {
            index: sentences.len(),
            tokens,
            raw_text: raw.to_string(),
            span: (span.start, span.end),
        });
    }
    if sentences.is_empty() {
        return Err(CorpusError::EmptyDocument(episode.id.clone()));
    }
    let total_tokens = sentences.iter().map(Sentence::len).sum();
    Ok(Document {
        episode_id: episode.id.clone(),
        sentences,
        total_tokens,
    })
}
