//! Two-phase podcast summarization toolkit.
//!
//! Phase one picks the informative sentences of a long, noisy transcript:
//! a ROUGE-scored sliding window ([`select::select_window`]), the window
//! plus individually strong sentences ([`select::select_novelty`]), or
//! sentences representative of LDA topics ([`topics::select_by_topics`]).
//! Phase two caps the selection at the model's input budget and hands it to
//! an abstractive backend ([`abstractive`]). Corpus filtering and ROUGE-L
//! evaluation round out the pipeline.

pub mod abstractive;
pub mod corpus;
pub mod evalharness;
pub mod io;
pub mod preprocess;
pub mod rouge;
pub mod select;
pub mod topics;

pub use abstractive::{enforce_budget, summarize, Backend, BackendInput, NullBackend, RemoteBackend, Summary};
pub use corpus::{build_document, load_episodes, Document, Episode, Sentence, Token, TokenizerConfig};
pub use evalharness::{evaluate_run, render_table, EvalRow, ReportFormat};
pub use preprocess::{filter_corpus, split_dataset, FilterConfig, FilterReport, SplitAssignment};
pub use rouge::{lcs_length, rouge_avg, rouge_l, rouge_n, RougeScore};
pub use select::{select_head, select_novelty, select_window, SelectionResult, SelectorConfig, Strategy};
pub use topics::{fit_lda, select_by_topics, TopicConfig, TopicModel};
