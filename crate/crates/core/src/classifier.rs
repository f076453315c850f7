//! Polarity decisions from per-class language models plus context priors.
//!
//! Each class (Positive, Negative) gets its own vocabulary and Kneser-Ney
//! bigram model trained on that class's posts. A post is scored per class in
//! log space:
//!
//! ```text
//! score(s) = score_sequence(model_s, W) + log P(s) [+ context_log_likelihood(C, s)]
//! ```
//!
//! with the contextual term present only in Contextual mode and restricted to
//! the mode's category subset. The decision is the score argmax; the margin
//! `score(pos) - score(neg)` is exposed instead of a normalized posterior
//! (shared terms independent of the class cancel in the margin). A margin of
//! exactly 0 resolves to Positive, the majority class.

use crate::corpus::{Context, LabeledTweet, Polarity, PreparedRecord};
use crate::ngram::{BigramModel, TrainOptions, Vocabulary};
use crate::par;
use crate::priors::{CategorySet, ContextQuery, ContextTable};
use crate::{Error, Result};

/// What the classifier conditions on beyond the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Text and class prior only; context is ignored.
    Baseline,
    /// Text, class prior, and the given context categories.
    Contextual(CategorySet),
}

impl Mode {
    fn categories(self) -> CategorySet {
        match self {
            Mode::Baseline => CategorySet::empty(),
            Mode::Contextual(set) => set,
        }
    }
}

/// Training configuration for [`SentimentClassifier::train`].
#[derive(Debug, Clone)]
pub struct ClassifierOptions {
    pub mode: Mode,
    /// Author-prior activation threshold, see [`crate::priors`].
    pub min_author_tweets: u64,
    /// Language-model options applied to both class models.
    pub lm: TrainOptions,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions {
            mode: Mode::Baseline,
            min_author_tweets: crate::priors::DEFAULT_MIN_AUTHOR_TWEETS,
            lm: TrainOptions::default(),
        }
    }
}

/// One classification outcome: the argmax label and the log-posterior margin
/// score(pos) - score(neg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Polarity,
    pub margin: f64,
}

/// Anything classifiable in batch: a token sequence plus optional context.
pub trait ClassifyInput: Sync {
    fn tokens(&self) -> &[String];
    fn context(&self) -> Option<&Context>;
}

impl ClassifyInput for LabeledTweet {
    fn tokens(&self) -> &[String] {
        &self.tokens
    }
    fn context(&self) -> Option<&Context> {
        Some(&self.context)
    }
}

impl ClassifyInput for PreparedRecord {
    fn tokens(&self) -> &[String] {
        &self.tokens
    }
    fn context(&self) -> Option<&Context> {
        Some(&self.context)
    }
}

/// A trained two-class sentiment model. Immutable after training; classify
/// freely from many threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentClassifier {
    pos_model: BigramModel,
    neg_model: BigramModel,
    table: ContextTable,
    mode: Mode,
}

impl SentimentClassifier {
    /// Trains per-class vocabularies and language models plus the context
    /// table. Errors if either class has no records.
    pub fn train<'a, I>(records: I, opts: &ClassifierOptions) -> Result<SentimentClassifier>
    where
        I: IntoIterator<Item = &'a LabeledTweet>,
    {
        let records: Vec<&LabeledTweet> = records.into_iter().collect();
        let class_model = |label: Polarity| -> Result<BigramModel> {
            let seqs: Vec<&[String]> = records
                .iter()
                .filter(|r| r.label == label)
                .map(|r| r.tokens.as_slice())
                .collect();
            if seqs.is_empty() {
                return Err(Error::Training(format!(
                    "training corpus has no {label} examples"
                )));
            }
            let vocab = Vocabulary::build(seqs.iter().copied())?;
            BigramModel::train(seqs.iter().copied(), vocab, &opts.lm)
        };
        let pos_model = class_model(Polarity::Positive)?;
        let neg_model = class_model(Polarity::Negative)?;
        let table = ContextTable::fit(records.iter().copied(), opts.min_author_tweets)?;
        Ok(SentimentClassifier {
            pos_model,
            neg_model,
            table,
            mode: opts.mode,
        })
    }

    /// Assembles a classifier from already-trained parts (e.g. a loaded
    /// model bundle).
    pub fn from_parts(
        pos_model: BigramModel,
        neg_model: BigramModel,
        table: ContextTable,
        mode: Mode,
    ) -> SentimentClassifier {
        SentimentClassifier {
            pos_model,
            neg_model,
            table,
            mode,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn model(&self, label: Polarity) -> &BigramModel {
        match label {
            Polarity::Positive => &self.pos_model,
            Polarity::Negative => &self.neg_model,
        }
    }

    pub fn table(&self) -> &ContextTable {
        &self.table
    }

    /// Log-space class score; the contextual term applies only in Contextual
    /// mode and only when a context is supplied.
    pub fn score(&self, label: Polarity, tokens: &[String], context: Option<&Context>) -> f64 {
        let mut score =
            self.model(label).score_sequence(tokens) + self.table.class_prior(label).ln();
        let categories = self.mode.categories();
        if !categories.is_empty() {
            if let Some(ctx) = context {
                let query = ContextQuery::from_context(ctx, categories);
                score += self.table.context_log_likelihood(&query, label);
            }
        }
        score
    }

    /// Argmax decision with margin; a margin of exactly 0 is Positive.
    pub fn classify(&self, tokens: &[String], context: Option<&Context>) -> Prediction {
        let margin = self.score(Polarity::Positive, tokens, context)
            - self.score(Polarity::Negative, tokens, context);
        let label = if margin >= 0.0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        Prediction { label, margin }
    }

    /// Order-preserving batch classification; identical to mapping
    /// [`SentimentClassifier::classify`] over the records.
    pub fn classify_batch<T: ClassifyInput>(&self, records: &[T]) -> Vec<Prediction> {
        par::map_slice(records, |r| self.classify(r.tokens(), r.context()))
    }
}
