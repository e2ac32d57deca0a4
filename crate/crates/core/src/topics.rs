//! Topic-enhanced selection.
//!
//! Each sentence of an episode is a pseudo-document for a collapsed Gibbs
//! LDA sampler. Sentences are then ranked per topic by their mean smoothed
//! log-likelihood under that topic's word distribution, and picked
//! round-robin across topics in order of episode-level topic weight.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, Sentence};
use crate::select::{SelectionResult, Strategy};

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("insufficient content for {topics} topics: {sentences} sentences, {tokens} tokens")]
    InsufficientContent {
        topics: usize,
        sentences: usize,
        tokens: usize,
    },
    #[error("invalid topic config: {0}")]
    InvalidConfig(String),
    #[error("topic {topic} out of range (model has {num_topics})")]
    TopicOutOfRange { topic: usize, num_topics: usize },
    #[error("token budget must be at least 1")]
    InvalidBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    pub num_topics: usize,
    /// Document-topic prior; `None` means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub gibbs_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self {
            num_topics: 5,
            alpha: None,
            beta: 0.01,
            gibbs_iterations: 500,
            burn_in: 300,
            seed: 0,
        }
    }
}

impl TopicConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.num_topics as f64)
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::InvalidConfig(m.to_string()));
        if self.num_topics == 0 {
            return bad("num_topics must be at least 1");
        }
        if !(self.alpha().is_finite() && self.alpha() > 0.0 && self.beta.is_finite() && self.beta > 0.0) {
            return bad("alpha and beta must be positive");
        }
        if self.burn_in >= self.gibbs_iterations {
            return bad("burn_in must be smaller than gibbs_iterations");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TopicModelRepr {
    vocabulary: Vec<String>,
    topic_word: Vec<Vec<f64>>,
    doc_topic_weight: Vec<f64>,
    topic_token_counts: Vec<f64>,
    beta: f64,
    assignments: Vec<Vec<usize>>,
    seed: u64,
}

/// Fitted per-episode LDA state. Serializes to JSON for caching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TopicModelRepr", into = "TopicModelRepr")]
pub struct TopicModel {
    pub vocabulary: Vec<String>,
    word_ids: HashMap<String, usize>,
    /// φ: K rows over the vocabulary.
    pub topic_word: Vec<Vec<f64>>,
    /// θ aggregated over the episode.
    pub doc_topic_weight: Vec<f64>,
    /// Post-burn-in mean number of tokens assigned to each topic.
    pub topic_token_counts: Vec<f64>,
    pub beta: f64,
    /// Final topic id of every token, per sentence.
    pub assignments: Vec<Vec<usize>>,
    pub seed: u64,
}

impl From<TopicModelRepr> for TopicModel {
    fn from(r: TopicModelRepr) -> Self {
        let word_ids = r
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        TopicModel {
            vocabulary: r.vocabulary,
            word_ids,
            topic_word: r.topic_word,
            doc_topic_weight: r.doc_topic_weight,
            topic_token_counts: r.topic_token_counts,
            beta: r.beta,
            assignments: r.assignments,
            seed: r.seed,
        }
    }
}

impl From<TopicModel> for TopicModelRepr {
    fn from(m: TopicModel) -> Self {
        TopicModelRepr {
            vocabulary: m.vocabulary,
            topic_word: m.topic_word,
            doc_topic_weight: m.doc_topic_weight,
            topic_token_counts: m.topic_token_counts,
            beta: m.beta,
            assignments: m.assignments,
            seed: m.seed,
        }
    }
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.topic_word.len()
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.word_ids.get(word).copied()
    }

    /// φ_topic(word), with the β-smoothed floor for unseen words.
    pub fn word_probability(&self, topic: usize, word: &str) -> f64 {
        match self.word_id(word) {
            Some(w) => self.topic_word[topic][w],
            None => {
                let v = self.vocabulary.len() as f64;
                self.beta / (self.topic_token_counts[topic] + v * self.beta)
            }
        }
    }
}

struct Sampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    doc_topic: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl Sampler {
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let k = self.k;
        let v_beta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.word_topic[w * k + old] -= 1;
                self.topic_total[old] -= 1;
                self.doc_topic[d][old] -= 1;

                let mut cum = 0.0;
                for t in 0..k {
                    cum += (self.word_topic[w * k + t] as f64 + self.beta)
                        / (self.topic_total[t] as f64 + v_beta)
                        * (self.doc_topic[d][t] as f64 + self.alpha);
                    self.weights[t] = cum;
                }
                let u = rng.gen::<f64>() * cum;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.word_topic[w * k + new] += 1;
                self.topic_total[new] += 1;
                self.doc_topic[d][new] += 1;
            }
        }
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Fits LDA over the sentences of `doc`. Deterministic for a fixed seed.
pub fn fit_lda(doc: &Document, config: &TopicConfig) -> Result<TopicModel, TopicError> {
    config.validate()?;
    let k = config.num_topics;
    if doc.len() < k || doc.total_tokens == 0 {
        return Err(TopicError::InsufficientContent {
            topics: k,
            sentences: doc.len(),
            tokens: doc.total_tokens,
        });
    }

    let mut vocabulary = Vec::new();
    let mut word_ids: HashMap<String, usize> = HashMap::new();
    let docs: Vec<Vec<usize>> = doc
        .sentences
        .iter()
        .map(|s| {
            s.token_texts()
                .map(|t| {
                    *word_ids.entry(t.to_string()).or_insert_with(|| {
                        vocabulary.push(t.to_string());
                        vocabulary.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let v = vocabulary.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let z: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|_| rng.gen_range(0..k)).collect())
        .collect();
    let mut sampler = Sampler {
        k,
        v,
        alpha: config.alpha(),
        beta: config.beta,
        word_topic: vec![0; v * k],
        topic_total: vec![0; k],
        doc_topic: vec![vec![0; k]; docs.len()],
        weights: vec![0.0; k],
        docs,
        z,
    };
    for (d, doc_words) in sampler.docs.iter().enumerate() {
        for (i, &w) in doc_words.iter().enumerate() {
            let t = sampler.z[d][i];
            sampler.word_topic[w * k + t] += 1;
            sampler.topic_total[t] += 1;
            sampler.doc_topic[d][t] += 1;
        }
    }

    let mut phi_sum = vec![vec![0.0; v]; k];
    let mut theta_sum = vec![0.0; k];
    let mut total_sum = vec![0.0; k];
    let mut samples = 0usize;
    let v_beta = v as f64 * config.beta;
    let k_alpha = k as f64 * sampler.alpha;

    for iteration in 0..config.gibbs_iterations {
        sampler.sweep(&mut rng);
        if iteration < config.burn_in {
            continue;
        }
        samples += 1;
        for t in 0..k {
            let denom = sampler.topic_total[t] as f64 + v_beta;
            for (w, phi) in phi_sum[t].iter_mut().enumerate() {
                *phi += (sampler.word_topic[w * k + t] as f64 + config.beta) / denom;
            }
            total_sum[t] += sampler.topic_total[t] as f64;
        }
        for (d, words) in sampler.docs.iter().enumerate() {
            let denom = words.len() as f64 + k_alpha;
            for (sum, &count) in theta_sum.iter_mut().zip(&sampler.doc_topic[d]) {
                *sum += (count as f64 + sampler.alpha) / denom;
            }
        }
    }

    for row in &mut phi_sum {
        normalize(row);
    }
    normalize(&mut theta_sum);
    let n = samples as f64;
    total_sum.iter_mut().for_each(|x| *x /= n);

    Ok(TopicModel {
        vocabulary,
        word_ids,
        topic_word: phi_sum,
        doc_topic_weight: theta_sum,
        topic_token_counts: total_sum,
        beta: config.beta,
        assignments: sampler.z,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicRelevance {
    pub sentence_index: usize,
    pub topic_id: usize,
    /// Mean natural-log probability per token.
    pub score: f64,
}

pub fn sentence_topic_relevance(
    sentence: &Sentence,
    model: &TopicModel,
    topic_id: usize,
) -> Result<TopicRelevance, TopicError> {
    if topic_id >= model.num_topics() {
        return Err(TopicError::TopicOutOfRange {
            topic: topic_id,
            num_topics: model.num_topics(),
        });
    }
    let total: f64 = sentence
        .token_texts()
        .map(|t| model.word_probability(topic_id, t).ln())
        .sum();
    Ok(TopicRelevance {
        sentence_index: sentence.index,
        topic_id,
        score: total / sentence.len().max(1) as f64,
    })
}

/// Topic ids by descending weight; ties go to the lower id.
fn topic_order(model: &TopicModel) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.num_topics()).collect();
    order.sort_by(|&a, &b| {
        model.doc_topic_weight[b]
            .total_cmp(&model.doc_topic_weight[a])
            .then(a.cmp(&b))
    });
    order
}

/// Round-robin over topics (heaviest first), each taking its most relevant
/// unselected sentence, until the next pick would overflow `token_budget`
/// or every sentence is taken.
pub fn select_by_topics(
    doc: &Document,
    model: &TopicModel,
    token_budget: usize,
) -> Result<SelectionResult, TopicError> {
    if token_budget == 0 {
        return Err(TopicError::InvalidBudget);
    }
    let k = model.num_topics();
    let mut relevances = Vec::with_capacity(doc.len() * k);
    let mut ranked: Vec<Vec<usize>> = Vec::with_capacity(k);
    for t in 0..k {
        let mut scored: Vec<TopicRelevance> = doc
            .sentences
            .iter()
            .map(|s| sentence_topic_relevance(s, model, t))
            .collect::<Result<_, _>>()?;
        relevances.extend_from_slice(&scored);
        scored.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.sentence_index.cmp(&b.sentence_index))
        });
        ranked.push(scored.into_iter().map(|r| r.sentence_index).collect());
    }

    let order = topic_order(model);
    let mut taken = vec![false; doc.len()];
    let mut cursors = vec![0usize; k];
    let mut picks = Vec::new();
    let mut used = 0;
    let mut budget_hit = false;
    'rounds: loop {
        let mut progressed = false;
        for &t in &order {
            while cursors[t] < ranked[t].len() && taken[ranked[t][cursors[t]]] {
                cursors[t] += 1;
            }
            let Some(&idx) = ranked[t].get(cursors[t]) else {
                continue;
            };
            let len = doc.sentences[idx].len();
            if used + len > token_budget {
                budget_hit = true;
                break 'rounds;
            }
            taken[idx] = true;
            used += len;
            picks.push(idx);
            progressed = true;
        }
        if !progressed {
            break;
        }
    }

    let mut result = SelectionResult::new(doc, Strategy::Topic, picks);
    result.diagnostics.topic_relevances = relevances;
    if budget_hit {
        result.diagnostics.note = Some(if result.sentence_indices.is_empty() {
            "budget too small".to_string()
        } else {
            "token budget reached".to_string()
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    /// Sentences drawn purely from one of two disjoint vocabularies, plus
    /// the true vocabulary label of each sentence.
    fn planted(docs: usize, len: usize, seed: u64) -> (Document, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = Vec::new();
        let lists: Vec<Vec<String>> = (0..docs)
            .map(|d| {
                let label = d % 2;
                labels.push(label);
                (0..len)
                    .map(|_| format!("{}{}", ["a", "b"][label], rng.gen_range(0..20)))
                    .collect()
            })
            .collect();
        (Document::from_token_lists("planted", &lists), labels)
    }

    fn purity(model: &TopicModel, labels: &[usize], k: usize) -> f64 {
        let mut table = vec![[0usize; 2]; k];
        let mut n = 0;
        for (d, zs) in model.assignments.iter().enumerate() {
            for &z in zs {
                table[z][labels[d]] += 1;
                n += 1;
            }
        }
        table.iter().map(|r| r[0].max(r[1])).sum::<usize>() as f64 / n as f64
    }

    fn cfg(k: usize, iters: usize, seed: u64) -> TopicConfig {
        TopicConfig {
            num_topics: k,
            gibbs_iterations: iters,
            burn_in: iters / 2,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn single_topic_is_smoothed_unigram() {
        let d = Document::from_token_lists("d", &[vec!["x", "y", "x"], vec!["z", "x"]]);
        let m = fit_lda(&d, &cfg(1, 20, 3)).unwrap();
        assert!(m.assignments.iter().flatten().all(|&z| z == 0));
        assert_eq!(m.doc_topic_weight, vec![1.0]);
        let denom = 5.0 + 3.0 * 0.01;
        for (w, expected) in [("x", 3.01 / denom), ("y", 1.01 / denom), ("z", 1.01 / denom)] {
            assert!((m.word_probability(0, w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_topics_are_recovered_deterministically() {
        let (d, labels) = planted(40, 50, 11);
        let m = fit_lda(&d, &cfg(2, 200, 5)).unwrap();
        assert!(purity(&m, &labels, 2) >= 0.9);
        for row in &m.topic_word {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((m.doc_topic_weight.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(m, fit_lda(&d, &cfg(2, 200, 5)).unwrap());
    }

    #[test]
    fn config_and_size_errors() {
        let d = Document::from_token_lists("d", &[vec!["a"]]);
        assert!(matches!(
            fit_lda(&d, &cfg(2, 10, 0)),
            Err(TopicError::InsufficientContent { .. })
        ));
        let bad = TopicConfig { burn_in: 10, gibbs_iterations: 10, ..Default::default() };
        assert!(matches!(fit_lda(&d, &bad), Err(TopicError::InvalidConfig(_))));
        assert_eq!(TopicConfig::default().alpha(), 10.0);
    }

    #[test]
    fn relevance_properties() {
        let (d, _) = planted(20, 30, 2);
        let m = fit_lda(&d, &cfg(2, 100, 1)).unwrap();
        // Topic that owns vocabulary "a".
        let a_topic = if m.word_probability(0, "a0") > m.word_probability(1, "a0") { 0 } else { 1 };
        let mut ranked: Vec<(usize, f64)> = m.vocabulary.iter().enumerate()
            .map(|(i, _)| (i, m.topic_word[a_topic][i])).collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1));
        let top: Vec<&str> = ranked[..10].iter().map(|(i, _)| m.vocabulary[*i].as_str()).collect();
        let probe = Document::from_token_lists("p", &[top.clone(), vec!["b1", "b2", "b3", "zz"]]);
        let on = sentence_topic_relevance(&probe.sentences[0], &m, a_topic).unwrap();
        let off = sentence_topic_relevance(&probe.sentences[1], &m, a_topic).unwrap();
        assert!(on.score > off.score && on.score.is_finite() && off.score.is_finite());

        let doubled: Vec<&str> = top.iter().chain(&top).copied().collect();
        let dd = Document::from_token_lists("p", &[doubled]);
        let twice = sentence_topic_relevance(&dd.sentences[0], &m, a_topic).unwrap();
        assert!((twice.score - on.score).abs() < 1e-12);

        assert!(matches!(
            sentence_topic_relevance(&probe.sentences[0], &m, 2),
            Err(TopicError::TopicOutOfRange { .. })
        ));
    }

    #[test]
    fn rescaling_preserves_ranking() {
        let (d, _) = planted(10, 20, 4);
        let m = fit_lda(&d, &cfg(2, 60, 9)).unwrap();
        let mut scaled = m.clone();
        scaled.topic_word[0].iter_mut().for_each(|p| *p *= 0.37);
        let rank = |model: &TopicModel| {
            let mut r: Vec<(usize, f64)> = d.sentences.iter()
                .map(|s| (s.index, sentence_topic_relevance(s, model, 0).unwrap().score))
                .collect();
            r.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            r.into_iter().map(|x| x.0).collect::<Vec<_>>()
        };
        assert_eq!(rank(&m), rank(&scaled));
    }

    #[test]
    fn uniform_single_topic_ties() {
        let d = Document::from_token_lists("u", &[vec!["a", "b"], vec!["b", "a"], vec!["c", "d"], vec!["d", "c"]]);
        let m = fit_lda(&d, &cfg(1, 10, 0)).unwrap();
        let scores: Vec<f64> = d.sentences.iter()
            .map(|s| sentence_topic_relevance(s, &m, 0).unwrap().score).collect();
        assert!(scores.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        let sel = select_by_topics(&d, &m, 4).unwrap();
        assert_eq!(sel.sentence_indices, vec![0, 1]);
    }

    #[test]
    fn selection_picks_best_of_each_topic_first() {
        let (d, labels) = planted(20, 10, 8);
        let m = fit_lda(&d, &cfg(2, 100, 2)).unwrap();
        let sel = select_by_topics(&d, &m, 20).unwrap();
        assert_eq!(sel.sentence_indices.len(), 2);
        let picked: Vec<usize> = sel.sentence_indices.iter().map(|&i| labels[i]).collect();
        assert!(picked.contains(&0) && picked.contains(&1));
        for t in 0..2 {
            let best = d.sentences.iter()
                .map(|s| sentence_topic_relevance(s, &m, t).unwrap())
                .fold(None::<TopicRelevance>, |b, r| match b {
                    Some(b) if b.score >= r.score => Some(b),
                    _ => Some(r),
                })
                .unwrap();
            assert!(sel.sentence_indices.contains(&best.sentence_index));
        }
        assert_eq!(sel.strategy, Strategy::Topic);
    }

    #[test]
    fn selection_budget_edges() {
        let (d, _) = planted(6, 10, 1);
        let m = fit_lda(&d, &cfg(2, 40, 1)).unwrap();
        let empty = select_by_topics(&d, &m, 5).unwrap();
        assert!(empty.sentence_indices.is_empty());
        assert_eq!(empty.diagnostics.note.as_deref(), Some("budget too small"));
        let all = select_by_topics(&d, &m, 10_000).unwrap();
        assert_eq!(all.sentence_indices, (0..6).collect::<Vec<_>>());
        assert!(all.diagnostics.note.is_none());
        for budget in [10, 25, 31, 59] {
            assert!(select_by_topics(&d, &m, budget).unwrap().selected_token_count <= budget);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (d, _) = planted(4, 5, 0);
        let m = fit_lda(&d, &cfg(2, 10, 0)).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: TopicModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.word_id("a0"), m.word_id("a0"));
    }

    #[test]
    fn shuffled_sentence_order_keeps_model_valid() {
        let (d, _) = planted(10, 10, 3);
        let mut lists: Vec<Vec<String>> = d.sentences.iter()
            .map(|s| s.token_texts().map(String::from).collect()).collect();
        lists.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let m = fit_lda(&Document::from_token_lists("s", &lists), &cfg(3, 30, 0)).unwrap();
        assert!(m.assignments.iter().flatten().all(|&z| z < 3));
    }
}
