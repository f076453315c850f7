//! Polarity classification for short geo-tagged posts.
//!
//! The pipeline turns a stream of raw posts into a sentiment classifier:
//!
//! 1. [`corpus`] ingests JSONL records, derives Positive/Negative labels from
//!    emoticons, and localizes UTC timestamps into per-state wall-clock context.
//! 2. [`preprocess`] normalizes text (URL/mention sentinels, lowercasing,
//!    repeat squashing, stemming) into token sequences.
//! 3. [`ngram`] trains one Kneser-Ney-smoothed bigram language model per class.
//! 4. [`priors`] tallies sentiment counts per context cell (state, hour of day,
//!    day of week, month, author) and turns them into smoothed likelihoods.
//! 5. [`classifier`] fuses language-model scores with context priors into a
//!    single log-odds decision.
//! 6. [`eval`] runs leakage-free k-fold cross validation plus the agreement and
//!    correlation statistics used to sanity-check labels.
//! 7. [`synth`] generates synthetic corpora with known effect sizes so the
//!    whole pipeline can be validated end to end.
//!
//! The [`bundle`] module persists a trained classifier as a directory of plain
//! text files. With the default `parallel` feature, batch classification,
//! counting, and fold evaluation run on rayon; disabling it yields sequential
//! code paths with bit-identical results.

pub mod bundle;
pub mod classifier;
pub mod corpus;
pub mod eval;
pub mod ngram;
pub(crate) mod par;
pub mod preprocess;
pub mod priors;
pub mod synth;

/// Errors surfaced by the library. Variants map onto the distinct failure
/// classes callers need to tell apart: bad input data, bad configuration,
/// unreadable model files, and training aborts.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A corpus line that cannot be used: unparseable JSON, unknown state
    /// code, empty text, or out-of-range timestamp.
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("corpus contains no usable records")]
    EmptyCorpus,

    /// Training cannot proceed (e.g. a training split with only one class).
    #[error("training aborted: {0}")]
    Training(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A model or bundle file that does not match the expected format.
    #[error("model format: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `File::open` with the path baked into the error message.
pub(crate) fn open_file(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
