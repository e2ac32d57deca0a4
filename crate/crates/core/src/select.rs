//! ROUGE-based sentence selection: the sliding-window argmax and its
//! novelty-enhanced variant.
//!
//! A window `[i, i + w)` of consecutive sentences is scored against the
//! whole document with the mean F1 of ROUGE-1/2/L. Unigram and bigram
//! overlap counts are maintained incrementally while the window slides;
//! ROUGE-L is recomputed for each window against a precomputed bit-parallel
//! index of the document.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::rouge::{mean_f1, LcsIndex, RougeScore};
use crate::topics::TopicRelevance;

pub const DEFAULT_WINDOW_SIZE: usize = 40;
pub const DEFAULT_NOVELTY_WINDOW_SIZE: usize = 25;
pub const DEFAULT_NOVELTY_TOP_K: usize = 5;
pub const DEFAULT_TOKEN_BUDGET: usize = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("window size must be at least 1")]
    InvalidWindow,
    #[error("token budget must be at least 1")]
    InvalidBudget,
    #[error("document {0} has no sentences")]
    EmptyDocument(String),
    #[error("record for {record} does not belong to document {document}")]
    EpisodeMismatch { record: String, document: String },
    #[error("sentence index {index} out of range for {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub window_size: usize,
    pub novelty_top_k: usize,
    pub token_budget: usize,
    /// Drop ROUGE-L from the selection average (faster on long transcripts).
    pub include_rouge_l: bool,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self::window()
    }
}

impl SelectorConfig {
    pub fn window() -> Self {
        Self {
            window_size: DEFAULT_WINDOW_SIZE,
            novelty_top_k: DEFAULT_NOVELTY_TOP_K,
            token_budget: DEFAULT_TOKEN_BUDGET,
            include_rouge_l: true,
        }
    }

    pub fn novelty() -> Self {
        Self {
            window_size: DEFAULT_NOVELTY_WINDOW_SIZE,
            ..Self::window()
        }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        if self.window_size == 0 {
            return Err(SelectError::InvalidWindow);
        }
        if self.token_budget == 0 {
            return Err(SelectError::InvalidBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Window,
    Novelty,
    Topic,
    /// Head of the transcript, no selection.
    None,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Window => "window",
            Strategy::Novelty => "novelty",
            Strategy::Topic => "topic",
            Strategy::None => "none",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "window" => Ok(Strategy::Window),
            "novelty" => Ok(Strategy::Novelty),
            "topic" => Ok(Strategy::Topic),
            "none" => Ok(Strategy::None),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub window_scores: Vec<WindowScore>,
    pub sentence_scores: Vec<SentenceScore>,
    pub top_k: Vec<usize>,
    pub topic_relevances: Vec<TopicRelevance>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub episode_id: String,
    pub strategy: Strategy,
    /// Strictly ascending sentence indices.
    pub sentence_indices: Vec<usize>,
    pub selected_token_count: usize,
    pub diagnostics: Diagnostics,
}

impl SelectionResult {
    pub(crate) fn new(doc: &Document, strategy: Strategy, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let selected_token_count = indices.iter().map(|&i| doc.sentences[i].len()).sum();
        SelectionResult {
            episode_id: doc.episode_id.clone(),
            strategy,
            sentence_indices: indices,
            selected_token_count,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// One line of a selections JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub id: String,
    pub strategy: Strategy,
    pub indices: Vec<usize>,
    pub tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_scores: Option<Vec<WindowScore>>,
}

impl SelectionResult {
    pub fn to_record(&self, with_window_scores: bool) -> SelectionRecord {
        SelectionRecord {
            id: self.episode_id.clone(),
            strategy: self.strategy,
            indices: self.sentence_indices.clone(),
            tokens: self.selected_token_count,
            window_scores: (with_window_scores && !self.diagnostics.window_scores.is_empty())
                .then(|| self.diagnostics.window_scores.clone()),
        }
    }
}

impl SelectionRecord {
    /// Rebuilds a selection against its document, checking ids and indices.
    pub fn to_result(&self, doc: &Document) -> Result<SelectionResult, SelectError> {
        if self.id != doc.episode_id {
            return Err(SelectError::EpisodeMismatch {
                record: self.id.clone(),
                document: doc.episode_id.clone(),
            });
        }
        if let Some(&index) = self.indices.iter().find(|&&i| i >= doc.len()) {
            return Err(SelectError::IndexOutOfRange { index, len: doc.len() });
        }
        Ok(SelectionResult::new(doc, self.strategy, self.indices.clone()))
    }
}

fn bigram_key(a: u32, b: u32) -> u64 {
    ((a as u64) << 32) | b as u64
}

/// A document with tokens interned to dense ids and the reference-side
/// statistics every window is scored against.
pub struct ScoringContext {
    sentences: Vec<Vec<u32>>,
    vocab_size: usize,
    ref_unigrams: Vec<u32>,
    ref_bigrams: HashMap<u64, u32>,
    lcs: LcsIndex<u32>,
    total_tokens: usize,
    include_rouge_l: bool,
}

impl ScoringContext {
    pub fn new(doc: &Document, include_rouge_l: bool) -> Self {
        let mut vocab: HashMap<&str, u32> = HashMap::new();
        let sentences: Vec<Vec<u32>> = doc
            .sentences
            .iter()
            .map(|s| {
                s.token_texts()
                    .map(|t| {
                        let next = vocab.len() as u32;
                        *vocab.entry(t).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<u32> = sentences.iter().flatten().copied().collect();
        let mut ref_unigrams = vec![0u32; vocab.len()];
        for &t in &flat {
            ref_unigrams[t as usize] += 1;
        }
        let mut ref_bigrams = HashMap::new();
        for pair in flat.windows(2) {
            *ref_bigrams.entry(bigram_key(pair[0], pair[1])).or_insert(0) += 1;
        }
        ScoringContext {
            vocab_size: vocab.len(),
            lcs: LcsIndex::new(&flat),
            total_tokens: flat.len(),
            sentences,
            ref_unigrams,
            ref_bigrams,
            include_rouge_l,
        }
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    fn window_tokens(&self, start: usize, end: usize) -> impl Iterator<Item = &u32> {
        self.sentences[start..end].iter().flatten()
    }

    fn score(&self, counts: &WindowCounts, tokens: impl IntoIterator<Item = u32>) -> f64 {
        let r1 = RougeScore::from_counts(counts.overlap_unigrams, counts.unigrams, self.total_tokens);
        let r2 = RougeScore::from_counts(
            counts.overlap_bigrams,
            counts.bigrams,
            self.total_tokens.saturating_sub(1),
        );
        if self.include_rouge_l {
            let tokens: Vec<u32> = tokens.into_iter().collect();
            let rl = RougeScore::from_counts(
                self.lcs.lcs_length(&tokens),
                counts.unigrams,
                self.total_tokens,
            );
            mean_f1(&[r1, r2, rl])
        } else {
            mean_f1(&[r1, r2])
        }
    }

    /// ROUGE-1/2 counts for `[start, end)` computed without any sliding state.
    pub fn counts_from_scratch(&self, start: usize, end: usize) -> WindowCounts {
        let flat: Vec<u32> = self.window_tokens(start, end).copied().collect();
        let mut uni: HashMap<u32, u32> = HashMap::new();
        for &t in &flat {
            *uni.entry(t).or_insert(0) += 1;
        }
        let mut bi: HashMap<u64, u32> = HashMap::new();
        for p in flat.windows(2) {
            *bi.entry(bigram_key(p[0], p[1])).or_insert(0) += 1;
        }
        WindowCounts {
            unigrams: flat.len(),
            bigrams: flat.len().saturating_sub(1),
            overlap_unigrams: uni
                .iter()
                .map(|(t, &c)| c.min(self.ref_unigrams[*t as usize]) as usize)
                .sum(),
            overlap_bigrams: bi
                .iter()
                .map(|(g, &c)| c.min(self.ref_bigrams.get(g).copied().unwrap_or(0)) as usize)
                .sum(),
        }
    }

    /// Scores `[start, end)` from scratch.
    pub fn score_range(&self, start: usize, end: usize) -> f64 {
        let counts = self.counts_from_scratch(start, end);
        self.score(&counts, self.window_tokens(start, end).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowCounts {
    pub unigrams: usize,
    pub bigrams: usize,
    pub overlap_unigrams: usize,
    pub overlap_bigrams: usize,
}

/// Window of consecutive sentences with incrementally maintained n-gram
/// overlap against the document.
pub struct SlidingWindow<'a> {
    ctx: &'a ScoringContext,
    start: usize,
    end: usize,
    unigrams: Vec<u32>,
    bigrams: HashMap<u64, u32>,
    counts: WindowCounts,
}

impl<'a> SlidingWindow<'a> {
    pub fn new(ctx: &'a ScoringContext) -> Self {
        SlidingWindow {
            ctx,
            start: 0,
            end: 0,
            unigrams: vec![0; ctx.vocab_size],
            bigrams: HashMap::new(),
            counts: WindowCounts::default(),
        }
    }

    pub fn range(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn counts(&self) -> WindowCounts {
        self.counts
    }

    fn add_unigram(&mut self, t: u32) {
        let c = &mut self.unigrams[t as usize];
        if *c < self.ctx.ref_unigrams[t as usize] {
            self.counts.overlap_unigrams += 1;
        }
        *c += 1;
        self.counts.unigrams += 1;
    }

    fn remove_unigram(&mut self, t: u32) {
        let c = &mut self.unigrams[t as usize];
        *c -= 1;
        if *c < self.ctx.ref_unigrams[t as usize] {
            self.counts.overlap_unigrams -= 1;
        }
        self.counts.unigrams -= 1;
    }

    fn add_bigram(&mut self, a: u32, b: u32) {
        let key = bigram_key(a, b);
        let reference = self.ctx.ref_bigrams.get(&key).copied().unwrap_or(0);
        let c = self.bigrams.entry(key).or_insert(0);
        if *c < reference {
            self.counts.overlap_bigrams += 1;
        }
        *c += 1;
        self.counts.bigrams += 1;
    }

    fn remove_bigram(&mut self, a: u32, b: u32) {
        let key = bigram_key(a, b);
        let reference = self.ctx.ref_bigrams.get(&key).copied().unwrap_or(0);
        let c = self.bigrams.get_mut(&key).expect("bigram present in window");
        *c -= 1;
        if *c < reference {
            self.counts.overlap_bigrams -= 1;
        }
        if *c == 0 {
            self.bigrams.remove(&key);
        }
        self.counts.bigrams -= 1;
    }

    /// Extends the window by the next sentence. Returns false at the end of
    /// the document.
    pub fn push_back(&mut self) -> bool {
        let ctx = self.ctx;
        if self.end >= ctx.sentences.len() {
            return false;
        }
        let sent = &ctx.sentences[self.end];
        if self.end > self.start {
            let prev_last = *ctx.sentences[self.end - 1].last().expect("non-empty sentence");
            self.add_bigram(prev_last, sent[0]);
        }
        for &t in sent {
            self.add_unigram(t);
        }
        for p in sent.windows(2) {
            self.add_bigram(p[0], p[1]);
        }
        self.end += 1;
        true
    }

    /// Drops the first sentence of the window. Returns false when empty.
    pub fn pop_front(&mut self) -> bool {
        let ctx = self.ctx;
        if self.start >= self.end {
            return false;
        }
        let sent = &ctx.sentences[self.start];
        for &t in sent {
            self.remove_unigram(t);
        }
        for p in sent.windows(2) {
            self.remove_bigram(p[0], p[1]);
        }
        if self.end > self.start + 1 {
            let next_first = ctx.sentences[self.start + 1][0];
            self.remove_bigram(*sent.last().expect("non-empty sentence"), next_first);
        }
        self.start += 1;
        true
    }

    pub fn score(&self) -> f64 {
        self.ctx
            .score(&self.counts, self.ctx.window_tokens(self.start, self.end).copied())
    }
}

fn check_doc(doc: &Document) -> Result<(), SelectError> {
    if doc.is_empty() {
        return Err(SelectError::EmptyDocument(doc.episode_id.clone()));
    }
    Ok(())
}

fn score_windows_in(ctx: &ScoringContext, w: usize) -> Vec<WindowScore> {
    let n = ctx.num_sentences();
    let windows = if n > w { n - w + 1 } else { 1 };
    let mut slider = SlidingWindow::new(ctx);
    for _ in 0..w.min(n) {
        slider.push_back();
    }
    let mut out = Vec::with_capacity(windows);
    for i in 0..windows {
        if i > 0 {
            slider.pop_front();
            slider.push_back();
        }
        let (start, end) = slider.range();
        out.push(WindowScore {
            start,
            end,
            score: slider.score(),
        });
    }
    out
}

/// Scores every window of `w` consecutive sentences (stride 1, clamped at
/// the document end) against the full document.
pub fn score_windows(doc: &Document, w: usize) -> Result<Vec<WindowScore>, SelectError> {
    score_windows_with(doc, w, true)
}

pub fn score_windows_with(
    doc: &Document,
    w: usize,
    include_rouge_l: bool,
) -> Result<Vec<WindowScore>, SelectError> {
    if w == 0 {
        return Err(SelectError::InvalidWindow);
    }
    check_doc(doc)?;
    Ok(score_windows_in(&ScoringContext::new(doc, include_rouge_l), w))
}

/// First maximum wins, so ties go to the lowest start index.
fn best_window(scores: &[WindowScore]) -> WindowScore {
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.score > best.score {
            best = *s;
        }
    }
    best
}

pub fn select_window(doc: &Document, config: &SelectorConfig) -> Result<SelectionResult, SelectError> {
    config.validate()?;
    check_doc(doc)?;
    let ctx = ScoringContext::new(doc, config.include_rouge_l);
    let scores = score_windows_in(&ctx, config.window_size);
    let best = best_window(&scores);
    let mut result = SelectionResult::new(doc, Strategy::Window, (best.start..best.end).collect());
    result.diagnostics.window_scores = scores;
    Ok(result)
}

fn score_sentences_in(ctx: &ScoringContext) -> Vec<SentenceScore> {
    (0..ctx.num_sentences())
        .map(|i| SentenceScore {
            index: i,
            score: ctx.score_range(i, i + 1),
        })
        .collect()
}

/// Each sentence scored on its own against the whole document.
pub fn score_single_sentences(doc: &Document) -> Result<Vec<SentenceScore>, SelectError> {
    check_doc(doc)?;
    Ok(score_sentences_in(&ScoringContext::new(doc, true)))
}

/// Indices of the `k` best sentences; ties go to the lower index.
pub fn top_k_sentences(scores: &[SentenceScore], k: usize) -> Vec<usize> {
    let mut ranked: Vec<&SentenceScore> = scores.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    ranked.into_iter().take(k).map(|s| s.index).collect()
}

/// Best window plus any of the top-k single sentences it misses, merged in
/// document order.
pub fn select_novelty(doc: &Document, config: &SelectorConfig) -> Result<SelectionResult, SelectError> {
    config.validate()?;
    check_doc(doc)?;
    let ctx = ScoringContext::new(doc, config.include_rouge_l);
    let windows = score_windows_in(&ctx, config.window_size);
    let best = best_window(&windows);
    let sentence_scores = score_sentences_in(&ctx);
    let top = top_k_sentences(&sentence_scores, config.novelty_top_k);

    let mut indices: Vec<usize> = (best.start..best.end).collect();
    indices.extend(top.iter().copied().filter(|i| !(best.start..best.end).contains(i)));
    let mut result = SelectionResult::new(doc, Strategy::Novelty, indices);
    result.diagnostics.window_scores = windows;
    result.diagnostics.sentence_scores = sentence_scores;
    result.diagnostics.top_k = top;
    Ok(result)
}

/// Leading sentences that fit in `token_budget`; always at least the first
/// sentence (the budget enforcer truncates it if it alone is too long).
pub fn select_head(doc: &Document, token_budget: usize) -> Result<SelectionResult, SelectError> {
    if token_budget == 0 {
        return Err(SelectError::InvalidBudget);
    }
    check_doc(doc)?;
    let mut used = 0;
    let mut indices = Vec::new();
    for s in &doc.sentences {
        if !indices.is_empty() && used + s.len() > token_budget {
            break;
        }
        used += s.len();
        indices.push(s.index);
    }
    Ok(SelectionResult::new(doc, Strategy::None, indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rouge::rouge_avg;
    use proptest::prelude::*;
    use proptest::strategy::Strategy;

    fn doc(sentences: &[&str]) -> Document {
        let lists: Vec<Vec<&str>> = sentences.iter().map(|s| s.split_whitespace().collect()).collect();
        Document::from_token_lists("d", &lists)
    }

    // Non-incremental scoring straight from the rouge module.
    fn oracle_window_scores(doc: &Document, w: usize) -> Vec<(usize, usize, f64)> {
        let all = doc.token_texts();
        let n = doc.len();
        let windows = if n > w { n - w + 1 } else { 1 };
        (0..windows)
            .map(|i| {
                let end = (i + w).min(n);
                let cand: Vec<&str> = doc.sentences[i..end].iter().flat_map(|s| s.token_texts()).collect();
                (i, end, rouge_avg(&cand, &all))
            })
            .collect()
    }

    fn toy() -> Document {
        doc(&[
            "hello everyone welcome back",
            "today we talk about coffee coffee beans and coffee roasting",
            "coffee roasting makes coffee beans taste better",
            "thanks for listening",
            "see you next week",
        ])
    }

    #[test]
    fn window_counts_and_identity() {
        let d = toy();
        assert_eq!(score_windows(&d, 2).unwrap().len(), 4);
        let all = score_windows(&d, 9).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].start, all[0].end), (0, 5));
        assert_eq!(all[0].score, 1.0);
        assert_eq!(score_windows(&d, 0), Err(SelectError::InvalidWindow));
    }

    #[test]
    fn toy_document_prefers_dense_region() {
        let d = toy();
        let oracle = oracle_window_scores(&d, 2);
        let best = oracle
            .iter()
            .fold(oracle[0], |b, s| if s.2 > b.2 { *s } else { b });
        assert_eq!((best.0, best.1), (1, 3));
        let ours = score_windows(&d, 2).unwrap();
        for (o, s) in oracle.iter().zip(&ours) {
            assert_eq!((o.0, o.1), (s.start, s.end));
            assert!((o.2 - s.score).abs() < 1e-12);
        }
        let cfg = SelectorConfig {
            window_size: 2,
            ..SelectorConfig::window()
        };
        let r = select_window(&d, &cfg).unwrap();
        assert_eq!(r.sentence_indices, vec![1, 2]);
        assert_eq!(r.selected_token_count, 17);
        assert_eq!(r.diagnostics.window_scores.len(), 4);
    }

    #[test]
    fn ties_go_to_earliest_window() {
        let d = doc(&["a b", "c d", "a b", "c d"]);
        let cfg = SelectorConfig {
            window_size: 1,
            ..SelectorConfig::window()
        };
        let scores = score_windows(&d, 1).unwrap();
        assert_eq!(scores[0].score, scores[2].score);
        assert_eq!(select_window(&d, &cfg).unwrap().sentence_indices, vec![0]);
    }

    #[test]
    fn single_sentence_scores() {
        let s = score_single_sentences(&doc(&["only one here"])).unwrap();
        assert_eq!(s, vec![SentenceScore { index: 0, score: 1.0 }]);

        let d = doc(&["x y x y x y", "quark", "x y filler", "zeta eta"]);
        let all = d.token_texts();
        let scores = score_single_sentences(&d).unwrap();
        for s in &scores {
            let cand: Vec<&str> = d.sentences[s.index].token_texts().collect();
            assert!((s.score - rouge_avg(&cand, &all)).abs() < 1e-12);
        }
        assert!(scores[0].score > scores[1].score);
        assert_eq!(top_k_sentences(&scores, 2), vec![0, 2]);
    }

    #[test]
    fn novelty_merges_outlier_in_document_order() {
        let sentences = [
            "one two three four five six seven eight nine ten",
            "ok",
            "so",
            "red orange yellow green blue indigo violet",
            "cyan magenta black white grey brown pink",
            "bye",
        ];
        let d = doc(&sentences);
        let cfg = SelectorConfig {
            window_size: 2,
            novelty_top_k: 1,
            ..SelectorConfig::novelty()
        };
        let window = select_window(&d, &cfg).unwrap();
        let novelty = select_novelty(&d, &cfg).unwrap();
        assert_eq!(novelty.diagnostics.top_k, vec![0]);
        assert!(!window.sentence_indices.contains(&0));
        let mut expected = vec![0];
        expected.extend(&window.sentence_indices);
        assert_eq!(novelty.sentence_indices, expected);
        assert_eq!(novelty.strategy, super::Strategy::Novelty);
    }

    #[test]
    fn novelty_equals_window_when_top_k_inside() {
        let d = toy();
        let cfg = SelectorConfig {
            window_size: 5,
            ..SelectorConfig::novelty()
        };
        assert_eq!(
            select_novelty(&d, &cfg).unwrap().sentence_indices,
            select_window(&d, &cfg).unwrap().sentence_indices
        );
    }

    #[test]
    fn head_selection_respects_budget() {
        let d = toy();
        assert_eq!(select_head(&d, 14).unwrap().sentence_indices, vec![0, 1]);
        assert_eq!(select_head(&d, 2).unwrap().sentence_indices, vec![0]);
        assert_eq!(select_head(&d, 0), Err(SelectError::InvalidBudget));
    }

    #[test]
    fn record_round_trips_to_result() {
        let d = toy();
        let r = select_window(&d, &SelectorConfig { window_size: 2, ..SelectorConfig::window() }).unwrap();
        let rec = r.to_record(false);
        let back = rec.to_result(&d).unwrap();
        assert_eq!((back.sentence_indices, back.selected_token_count), (r.sentence_indices, r.selected_token_count));
        let bad = SelectionRecord { indices: vec![9], ..rec.clone() };
        assert_eq!(bad.to_result(&d), Err(SelectError::IndexOutOfRange { index: 9, len: 5 }));
        let other = SelectionRecord { id: "x".into(), ..rec };
        assert!(matches!(other.to_result(&d), Err(SelectError::EpisodeMismatch { .. })));
    }

    #[test]
    fn record_serialization() {
        let d = toy();
        let r = select_window(&d, &SelectorConfig { window_size: 4, ..Default::default() }).unwrap();
        let line = serde_json::to_string(&r.to_record(false)).unwrap();
        assert_eq!(line, r#"{"id":"d","strategy":"window","indices":[0,1,2,3],"tokens":24}"#);
        let with = r.to_record(true);
        assert_eq!(with.window_scores.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn permuting_outside_support_keeps_winner() {
        // Sentences outside the winning window share no vocabulary with it.
        let base = ["p q", "r s", "hot hot cold", "hot cold hot", "t u", "v w"];
        let permuted = ["v w", "t u", "hot hot cold", "hot cold hot", "r s", "p q"];
        let cfg = SelectorConfig { window_size: 2, ..Default::default() };
        let a = select_window(&doc(&base), &cfg).unwrap();
        let b = select_window(&doc(&permuted), &cfg).unwrap();
        assert_eq!(a.sentence_indices, vec![2, 3]);
        assert_eq!(a.sentence_indices, b.sentence_indices);
    }

    fn arb_doc() -> impl Strategy<Value = Document> {
        prop::collection::vec(prop::collection::vec(0u8..12, 1..8), 1..20).prop_map(|sents| {
            let lists: Vec<Vec<String>> = sents
                .into_iter()
                .map(|s| s.into_iter().map(|t| format!("w{t}")).collect())
                .collect();
            Document::from_token_lists("p", &lists)
        })
    }

    proptest! {
        #[test]
        fn incremental_matches_oracle(d in arb_doc(), w in 1usize..8) {
            let ours = score_windows(&d, w).unwrap();
            let oracle = oracle_window_scores(&d, w);
            prop_assert_eq!(ours.len(), oracle.len());
            for (s, o) in ours.iter().zip(&oracle) {
                prop_assert!((s.score - o.2).abs() < 1e-12);
            }
        }

        #[test]
        fn novelty_contains_window_and_top_k(d in arb_doc(), w in 1usize..6, k in 0usize..6) {
            let cfg = SelectorConfig { window_size: w, novelty_top_k: k, ..SelectorConfig::novelty() };
            let win = select_window(&d, &cfg).unwrap();
            let nov = select_novelty(&d, &cfg).unwrap();
            for i in win.sentence_indices.iter().chain(&nov.diagnostics.top_k) {
                prop_assert!(nov.sentence_indices.contains(i));
            }
            prop_assert!(nov.sentence_indices.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
