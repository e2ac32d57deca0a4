//! Description cleaning, corpus filtering and the train/validation/test split.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{english_stopwords, parse_word_list, segment_sentences, tokenize_texts, Episode, TokenizerConfig};

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap());
static HANDLE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:^|\s)@\w+").unwrap());
static SOCIAL_CLAUSE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:follow|find|subscribe to|connect with|like)\s+(?:us|me)\b.*$").unwrap()
});
static SPONSORSHIP: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut v: Vec<String> = parse_word_list(include_str!("../data/sponsorship_phrases.txt"))
        .into_iter()
        .collect();
    v.sort();
    v
});

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot decide language: text has no tokens")]
    Undeterminable,
    #[error("cannot split {0} episodes into three non-empty buckets")]
    TooFewEpisodes(usize),
}

/// Removes URLs, social handles, "follow us ..." clauses and sentences that
/// carry a sponsorship phrase; collapses whitespace.
pub fn clean_description(raw: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for line in raw.lines() {
        for sentence in segment_sentences(line) {
            let lower = sentence.to_lowercase();
            if SPONSORSHIP.iter().any(|p| lower.contains(p.as_str())) {
                continue;
            }
            let s = SOCIAL_CLAUSE_RE.replace(sentence, "");
            let s = URL_RE.replace_all(&s, "");
            let s = HANDLE_RE.replace_all(&s, "");
            let s = s.split_whitespace().collect::<Vec<_>>().join(" ");
            let s = s.trim_end_matches([':', ',', ';', '-']).trim_end();
            if s.chars().any(char::is_alphanumeric) {
                kept.push(s.to_string());
            }
        }
    }
    kept.join(" ")
}

/// Whole-token, case-insensitive word list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wordlist {
    words: HashSet<String>,
}

impl Wordlist {
    pub fn bundled_placeholder() -> Self {
        Wordlist {
            words: parse_word_list(include_str!("../data/profanity_placeholder.txt")),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, PreprocessError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            PreprocessError::Config(format!("profanity list {}: {e}", path.display()))
        })?;
        Ok(Wordlist {
            words: parse_word_list(&raw),
        })
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Wordlist {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn contains_profanity(text: &str, wordlist: &Wordlist) -> bool {
    tokenize_texts(text, &TokenizerConfig::default())
        .iter()
        .any(|t| wordlist.words.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanguageCheck {
    pub is_english: bool,
    pub stopword_ratio: f64,
}

/// Stopword-ratio heuristic against the bundled English list.
pub fn detect_language_is_english(text: &str, min_ratio: f64) -> Result<LanguageCheck, PreprocessError> {
    let tokens = tokenize_texts(text, &TokenizerConfig::default());
    if tokens.is_empty() {
        return Err(PreprocessError::Undeterminable);
    }
    let stop = english_stopwords();
    let hits = tokens.iter().filter(|t| stop.contains(*t)).count();
    let stopword_ratio = hits as f64 / tokens.len() as f64;
    Ok(LanguageCheck {
        is_english: stopword_ratio >= min_ratio,
        stopword_ratio,
    })
}

/// 3-token shingles of the normalized text. Texts shorter than three tokens
/// form a single shingle.
fn shingles(text: &str) -> HashSet<Vec<String>> {
    let tokens = tokenize_texts(text, &TokenizerConfig::default());
    if tokens.is_empty() {
        HashSet::new()
    } else if tokens.len() < 3 {
        HashSet::from([tokens])
    } else {
        tokens.windows(3).map(<[String]>::to_vec).collect()
    }
}

fn jaccard(a: &HashSet<Vec<String>>, b: &HashSet<Vec<String>>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Jaccard similarity over 3-token shingles; 0.0 when either side is empty.
pub fn description_similarity(a: &str, b: &str) -> f64 {
    jaccard(&shingles(a), &shingles(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub desc_min_chars: usize,
    pub desc_max_chars: usize,
    pub duplicate_sim_threshold: f64,
    pub show_desc_sim_threshold: f64,
    pub desc_min_tokens: usize,
    /// `None` uses the bundled placeholder list.
    pub profanity_list_path: Option<PathBuf>,
    pub english_stopword_ratio_min: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            desc_min_chars: 20,
            desc_max_chars: 750,
            duplicate_sim_threshold: 0.9,
            show_desc_sim_threshold: 0.9,
            desc_min_tokens: 10,
            profanity_list_path: None,
            english_stopword_ratio_min: 0.2,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.desc_min_chars >= self.desc_max_chars {
            return Err(PreprocessError::Config(
                "desc_min_chars must be smaller than desc_max_chars".into(),
            ));
        }
        for (name, v) in [
            ("duplicate_sim_threshold", self.duplicate_sim_threshold),
            ("show_desc_sim_threshold", self.show_desc_sim_threshold),
            ("english_stopword_ratio_min", self.english_stopword_ratio_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PreprocessError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn wordlist(&self) -> Result<Wordlist, PreprocessError> {
        match &self.profanity_list_path {
            Some(p) => Wordlist::from_path(p),
            None => Ok(Wordlist::bundled_placeholder()),
        }
    }
}

/// Rejection reasons in the order the rules are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    DescTooShort,
    DescTooLong,
    DuplicateDescription,
    SimilarToShowDescription,
    Profanity,
    NonEnglish,
    DescTooFewTokens,
}

impl RejectReason {
    pub const ALL: [RejectReason; 7] = [
        RejectReason::DescTooShort,
        RejectReason::DescTooLong,
        RejectReason::DuplicateDescription,
        RejectReason::SimilarToShowDescription,
        RejectReason::Profanity,
        RejectReason::NonEnglish,
        RejectReason::DescTooFewTokens,
    ];
}

/// Serialized as `{"input", "kept", "rejected_by_rule", "reasons"}`. The
/// first rule an episode trips is its only recorded reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub rejected_by_rule: BTreeMap<RejectReason, usize>,
    pub reasons: BTreeMap<String, RejectReason>,
}

fn length_rule(ep: &Episode, cfg: &FilterConfig) -> Option<RejectReason> {
    let chars = ep.description.chars().count();
    if chars < cfg.desc_min_chars {
        Some(RejectReason::DescTooShort)
    } else if chars > cfg.desc_max_chars {
        Some(RejectReason::DescTooLong)
    } else {
        None
    }
}

fn per_episode_rules(ep: &Episode, cfg: &FilterConfig, wordlist: &Wordlist) -> Option<RejectReason> {
    if description_similarity(&ep.description, &ep.show_description) >= cfg.show_desc_sim_threshold {
        return Some(RejectReason::SimilarToShowDescription);
    }
    if contains_profanity(&ep.description, wordlist) || contains_profanity(&ep.show_description, wordlist) {
        return Some(RejectReason::Profanity);
    }
    match detect_language_is_english(&ep.description, cfg.english_stopword_ratio_min) {
        Ok(check) if check.is_english => {}
        _ => return Some(RejectReason::NonEnglish),
    }
    let cleaned = clean_description(&ep.description);
    if tokenize_texts(&cleaned, &TokenizerConfig::default()).len() < cfg.desc_min_tokens {
        return Some(RejectReason::DescTooFewTokens);
    }
    None
}

/// Marks later near-duplicates of earlier survivors. Candidates are blocked
/// by shingle-set size: Jaccard ≥ t needs min/max size ≥ t.
fn duplicate_flags(descriptions: &[&str], threshold: f64) -> Vec<bool> {
    let sets: Vec<HashSet<Vec<String>>> = descriptions.iter().map(|d| shingles(d)).collect();
    let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut flags = vec![false; sets.len()];
    for (i, set) in sets.iter().enumerate() {
        let size = set.len();
        let (lo, hi) = if threshold > 0.0 {
            ((threshold * size as f64).ceil() as usize, (size as f64 / threshold).floor() as usize)
        } else {
            (0, usize::MAX)
        };
        let dup = by_size
            .range(lo..=hi)
            .flat_map(|(_, ids)| ids)
            .any(|&j| jaccard(set, &sets[j]) >= threshold);
        if dup {
            flags[i] = true;
        } else {
            by_size.entry(size).or_default().push(i);
        }
    }
    flags
}

/// Applies the rules in order (length, duplicate, show similarity, profanity,
/// language, cleaned token count), recording the first rule each rejected
/// episode hits. Kept episodes are returned unmodified, in input order.
pub fn filter_corpus(
    episodes: Vec<Episode>,
    config: &FilterConfig,
) -> Result<(Vec<Episode>, FilterReport), PreprocessError> {
    config.validate()?;
    let wordlist = config.wordlist()?;
    let input = episodes.len();
    let mut reasons: Vec<Option<RejectReason>> =
        episodes.par_iter().map(|ep| length_rule(ep, config)).collect();

    let survivors: Vec<usize> = (0..input).filter(|&i| reasons[i].is_none()).collect();
    let descs: Vec<&str> = survivors.iter().map(|&i| episodes[i].description.as_str()).collect();
    for (pos, dup) in duplicate_flags(&descs, config.duplicate_sim_threshold).into_iter().enumerate() {
        if dup {
            reasons[survivors[pos]] = Some(RejectReason::DuplicateDescription);
        }
    }

    let late: Vec<(usize, Option<RejectReason>)> = survivors
        .par_iter()
        .filter(|&&i| reasons[i].is_none())
        .map(|&i| (i, per_episode_rules(&episodes[i], config, &wordlist)))
        .collect();
    for (i, r) in late {
        reasons[i] = r;
    }

    let mut rejected_by_rule: BTreeMap<RejectReason, usize> =
        RejectReason::ALL.iter().map(|&r| (r, 0)).collect();
    let mut reason_map = BTreeMap::new();
    let mut kept = Vec::new();
    for (ep, reason) in episodes.into_iter().zip(reasons) {
        match reason {
            Some(r) => {
                *rejected_by_rule.entry(r).or_insert(0) += 1;
                reason_map.insert(ep.id, r);
            }
            None => kept.push(ep),
        }
    }
    let report = FilterReport {
        input,
        kept: kept.len(),
        rejected_by_rule,
        reasons: reason_map,
    };
    Ok((kept, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub id: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    /// One entry per input id, in input order.
    pub assignments: Vec<SplitRecord>,
}

impl SplitAssignment {
    pub fn count(&self, split: Split) -> usize {
        self.assignments.iter().filter(|r| r.split == split).count()
    }

    pub fn ids(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |r| r.split == split)
            .map(|r| r.id.as_str())
    }
}

/// Seeded shuffle then slice. Validation and test get the floor of their
/// share (at least one each); train takes the remainder.
pub fn split_dataset(
    episode_ids: &[String],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment, PreprocessError> {
    let (train, val, test) = ratios;
    if (train + val + test - 1.0).abs() > 1e-9 || [train, val, test].iter().any(|r| *r <= 0.0) {
        return Err(PreprocessError::Config(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let n = episode_ids.len();
    if n < 3 {
        return Err(PreprocessError::TooFewEpisodes(n));
    }
    let n_val = ((n as f64 * val).floor() as usize).max(1);
    let n_test = ((n as f64 * test).floor() as usize).max(1);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut buckets = vec![Split::Train; n];
    for &i in &order[..n_val] {
        buckets[i] = Split::Validation;
    }
    for &i in &order[n_val..n_val + n_test] {
        buckets[i] = Split::Test;
    }
    Ok(SplitAssignment {
        seed,
        assignments: episode_ids
            .iter()
            .zip(buckets)
            .map(|(id, split)| SplitRecord { id: id.clone(), split })
            .collect(),
    })
}
