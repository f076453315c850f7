//! Bigram language models with interpolated Kneser-Ney smoothing.
//!
//! Probability of `w` after history `h`:
//!
//! ```text
//! P(w|h) = ( max(c(h,w) - D, 0) + D * N1+(h) * Pcont(w) ) / c(h)    c(h) > 0
//! P(w|h) = Pcont(w)                                                 c(h) = 0
//! ```
//!
//! where `c(h)` sums the bigram counts with history `h`, `N1+(h)` is the
//! number of distinct successors of `h`, and the continuation probability
//! `Pcont(w)` is the fraction of distinct bigram types ending in `w`. The
//! discount is estimated from the bigram count-of-counts as `n1/(n1 + 2*n2)`
//! and kept inside (0, 1), so every history's distribution sums to exactly 1
//! over the vocabulary.
//!
//! Out-of-vocabulary tokens map to a reserved unknown id whose continuation
//! count is floored at one, keeping unseen-word probabilities finite. An
//! optional begin-of-sequence sentinel conditions the first token of every
//! sequence; it is never predicted, only conditioned on.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::par;
use crate::{Error, Result};

pub type TokenId = u32;

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: TokenId = 0;

/// Reserved id for the begin-of-sequence sentinel. Has no string form; no
/// input token ever maps to it.
pub const BOS_ID: TokenId = 1;

/// Tokens seen fewer times than this across the training corpus are treated
/// as unknown.
pub const MIN_TOKEN_COUNT: u64 = 6;

/// Maps between token strings and dense ids. Ids 0 and 1 are reserved for
/// the unknown and begin-of-sequence sentinels; real tokens occupy ids 2 and
/// up in lexicographic order, which makes vocabulary construction
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, TokenId>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from training sequences, keeping tokens that occur
    /// at least [`MIN_TOKEN_COUNT`] times. Errors when no sequences are
    /// given.
    pub fn build<'a, I>(sequences: I) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let seqs: Vec<&[String]> = sequences.into_iter().collect();
        if seqs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let counts = par::fold_merge(
            &seqs,
            HashMap::<&str, u64>::new,
            |acc, seq| {
                for token in seq.iter() {
                    *acc.entry(token.as_str()).or_insert(0) += 1;
                }
            },
            |mut a, b| {
                for (token, n) in b {
                    *a.entry(token).or_insert(0) += n;
                }
                a
            },
        );
        let mut kept: Vec<String> = counts
            .into_iter()
            .filter(|&(_, n)| n >= MIN_TOKEN_COUNT)
            .map(|(token, _)| token.to_owned())
            .collect();
        kept.sort_unstable();
        Ok(Vocabulary::from_sorted(kept))
    }

    /// Builds a vocabulary containing exactly the given tokens, regardless of
    /// counts. Panics if a token is empty or contains whitespace, which the
    /// preprocessing contract rules out.
    pub fn with_tokens<I, S>(tokens: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut unique: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for token in &unique {
            assert!(
                !token.is_empty() && !token.chars().any(char::is_whitespace),
                "invalid vocabulary token: {token:?}"
            );
        }
        unique.sort_unstable();
        unique.dedup();
        Vocabulary::from_sorted(unique)
    }

    fn from_sorted(tokens: Vec<String>) -> Vocabulary {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId + 2))
            .collect();
        Vocabulary { index, tokens }
    }

    /// Id for a token; unknown tokens map to [`UNK_ID`].
    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Token string for an id; None for the reserved sentinel ids.
    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens
            .get(id.checked_sub(2)? as usize)
            .map(String::as_str)
    }

    /// Total number of ids, sentinels included.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false // sentinels always exist
    }

    /// All ids in ascending order, sentinels included.
    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        0..self.len() as TokenId
    }
}

/// Training knobs for [`BigramModel::train`].
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Prefix every sequence with the begin-of-sequence sentinel so the first
    /// token is conditioned too.
    pub use_bos: bool,
    /// Fixed discount instead of the count-of-counts estimate. Must lie in
    /// (0, 1). Mainly for tests and diagnostics.
    pub discount: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            use_bos: true,
            discount: None,
        }
    }
}

/// Fallback discount when the count-of-counts estimate is undefined (no
/// singleton or doubleton bigrams).
const FALLBACK_DISCOUNT: f64 = 0.75;

/// Discounts are clamped here so they stay strictly inside (0, 1) even when
/// the estimate degenerates to 0 (n1 = 0) or 1 (n2 = 0).
const DISCOUNT_MIN: f64 = 0.01;
const DISCOUNT_MAX: f64 = 0.99;

/// A trained Kneser-Ney bigram model. Construct via [`BigramModel::train`] or
/// [`BigramModel::load`].
#[derive(Debug, Clone, PartialEq)]
pub struct BigramModel {
    vocab: Vocabulary,
    bigram_counts: HashMap<(TokenId, TokenId), u64>,
    /// c(h): total continuations observed after each history.
    history_counts: Vec<u64>,
    /// N1+(h): distinct successors of each history.
    successor_types: Vec<u32>,
    /// Distinct bigram types ending in each word, unknown floored at 1.
    continuation_counts: Vec<u64>,
    total_continuations: u64,
    discount: f64,
    total_tokens: u64,
    use_bos: bool,
}

impl BigramModel {
    /// Counts bigrams over the sequences and estimates the discount. Errors
    /// when no sequences are given or a discount override is out of range.
    pub fn train<'a, I>(sequences: I, vocab: Vocabulary, opts: &TrainOptions) -> Result<BigramModel>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if let Some(d) = opts.discount {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("discount {d} outside (0, 1)")));
            }
        }
        let seqs: Vec<&[String]> = sequences.into_iter().collect();
        if seqs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let bigram_counts = par::fold_merge(
            &seqs,
            HashMap::<(TokenId, TokenId), u64>::new,
            |acc, seq| {
                let mut prev = if opts.use_bos { Some(BOS_ID) } else { None };
                for token in seq.iter() {
                    let id = vocab.id(token);
                    if let Some(h) = prev {
                        *acc.entry((h, id)).or_insert(0) += 1;
                    }
                    prev = Some(id);
                }
            },
            |mut a, b| {
                for (pair, n) in b {
                    *a.entry(pair).or_insert(0) += n;
                }
                a
            },
        );
        let total_tokens = seqs.iter().map(|s| s.len() as u64).sum();
        let discount = match opts.discount {
            Some(d) => d,
            None => estimate_discount(&bigram_counts),
        };
        Ok(BigramModel::assemble(
            vocab,
            bigram_counts,
            discount,
            total_tokens,
            opts.use_bos,
        ))
    }

    /// Builds the derived tables shared by training and loading.
    fn assemble(
        vocab: Vocabulary,
        bigram_counts: HashMap<(TokenId, TokenId), u64>,
        discount: f64,
        total_tokens: u64,
        use_bos: bool,
    ) -> BigramModel {
        let n = vocab.len();
        let mut history_counts = vec![0u64; n];
        let mut successor_types = vec![0u32; n];
        let mut continuation_counts = vec![0u64; n];
        for (&(h, w), &c) in &bigram_counts {
            history_counts[h as usize] += c;
            successor_types[h as usize] += 1;
            continuation_counts[w as usize] += 1;
        }
        if continuation_counts[UNK_ID as usize] == 0 {
            continuation_counts[UNK_ID as usize] = 1;
        }
        let total_continuations = continuation_counts.iter().sum();
        BigramModel {
            vocab,
            bigram_counts,
            history_counts,
            successor_types,
            continuation_counts,
            total_continuations,
            discount,
            total_tokens,
            use_bos,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Number of tokens in the training sequences (sentinels excluded).
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn use_bos(&self) -> bool {
        self.use_bos
    }

    pub fn bigram_count(&self, history: TokenId, word: TokenId) -> u64 {
        self.bigram_counts
            .get(&(history, word))
            .copied()
            .unwrap_or(0)
    }

    /// c(h): how often `history` was observed with any successor.
    pub fn history_count(&self, history: TokenId) -> u64 {
        self.history_counts[history as usize]
    }

    /// Pcont(w): fraction of distinct bigram types ending in `word`.
    pub fn continuation_probability(&self, word: TokenId) -> f64 {
        self.continuation_counts[word as usize] as f64 / self.total_continuations as f64
    }

    /// Smoothed P(word | history) by id. Ids must come from this model's
    /// vocabulary.
    pub fn prob_id(&self, history: TokenId, word: TokenId) -> f64 {
        let pcont = self.continuation_probability(word);
        let c_h = self.history_counts[history as usize];
        if c_h == 0 {
            return pcont;
        }
        let c_hw = self.bigram_count(history, word) as f64;
        let discounted = (c_hw - self.discount).max(0.0);
        let backoff = self.discount * self.successor_types[history as usize] as f64 * pcont;
        (discounted + backoff) / c_h as f64
    }

    /// Smoothed P(word | history) by token string; unseen tokens hit the
    /// unknown id.
    pub fn prob(&self, history: &str, word: &str) -> f64 {
        self.prob_id(self.vocab.id(history), self.vocab.id(word))
    }

    pub fn log_prob_id(&self, history: TokenId, word: TokenId) -> f64 {
        self.prob_id(history, word).ln()
    }

    pub fn log_prob(&self, history: &str, word: &str) -> f64 {
        self.prob(history, word).ln()
    }

    /// Sum of log-probabilities of each token given its predecessor. With the
    /// begin-of-sequence sentinel enabled the first token is conditioned on
    /// it; otherwise scoring starts at the second token. Sequences too short
    /// to form a pair score 0.
    pub fn score_sequence(&self, tokens: &[String]) -> f64 {
        let mut sum = 0.0;
        if self.use_bos {
            let mut prev = BOS_ID;
            for token in tokens {
                let id = self.vocab.id(token);
                sum += self.log_prob_id(prev, id);
                prev = id;
            }
        } else {
            let ids: Vec<TokenId> = tokens.iter().map(|t| self.vocab.id(t)).collect();
            for pair in ids.windows(2) {
                sum += self.log_prob_id(pair[0], pair[1]);
            }
        }
        sum
    }

    /// Writes the model as line-oriented text: header, vocabulary in id
    /// order, bigram counts sorted by id pair. Loading the output reproduces
    /// the model exactly, and saving again reproduces the bytes.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bigram-lm v1")?;
        writeln!(w, "bos {}", if self.use_bos { 1 } else { 0 })?;
        writeln!(w, "discount {}", self.discount)?;
        writeln!(w, "total_tokens {}", self.total_tokens)?;
        writeln!(w, "vocab {}", self.vocab.tokens.len())?;
        for token in &self.vocab.tokens {
            writeln!(w, "{token}")?;
        }
        let mut entries: Vec<(&(TokenId, TokenId), &u64)> = self.bigram_counts.iter().collect();
        entries.sort_unstable_by_key(|(pair, _)| **pair);
        writeln!(w, "bigrams {}", entries.len())?;
        for (&(h, word), &c) in entries {
            writeln!(w, "{h} {word} {c}")?;
        }
        Ok(())
    }

    /// Reads a model written by [`BigramModel::save`].
    pub fn load<R: BufRead>(r: R) -> Result<BigramModel> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Format(format!("missing {what}")))
        };
        let header = next("header")?;
        if header != "bigram-lm v1" {
            return Err(Error::Format(format!("unsupported header: {header:?}")));
        }
        let use_bos = match field(&next("bos line")?, "bos")? {
            "0" => false,
            "1" => true,
            other => return Err(Error::Format(format!("bad bos flag: {other:?}"))),
        };
        let discount: f64 = parse(field(&next("discount line")?, "discount")?)?;
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::Format(format!("discount {discount} outside (0, 1)")));
        }
        let total_tokens: u64 = parse(field(&next("total_tokens line")?, "total_tokens")?)?;
        let vocab_len: usize = parse(field(&next("vocab line")?, "vocab")?)?;
        let mut tokens = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            tokens.push(next("vocabulary token")?);
        }
        for pair in tokens.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Format("vocabulary not sorted".to_owned()));
            }
        }
        let vocab = Vocabulary::from_sorted(tokens);
        let bigram_len: usize = parse(field(&next("bigrams line")?, "bigrams")?)?;
        let mut bigram_counts = HashMap::with_capacity(bigram_len);
        for _ in 0..bigram_len {
            let line = next("bigram entry")?;
            let mut parts = line.split(' ');
            let (h, w, c) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(h), Some(w), Some(c), None) => {
                    (parse::<TokenId>(h)?, parse::<TokenId>(w)?, parse::<u64>(c)?)
                }
                _ => return Err(Error::Format(format!("bad bigram entry: {line:?}"))),
            };
            if h as usize >= vocab.len() || w as usize >= vocab.len() {
                return Err(Error::Format(format!("bigram id out of range: {line:?}")));
            }
            if c == 0 || bigram_counts.insert((h, w), c).is_some() {
                return Err(Error::Format(format!("bad bigram entry: {line:?}")));
            }
        }
        if lines.next().transpose()?.is_some() {
            return Err(Error::Format("trailing content after bigrams".to_owned()));
        }
        Ok(BigramModel::assemble(
            vocab,
            bigram_counts,
            discount,
            total_tokens,
            use_bos,
        ))
    }
}

/// Ney-Essen-Kneser estimate n1/(n1 + 2*n2) from the bigram count-of-counts,
/// falling back when undefined and clamped inside (0, 1).
fn estimate_discount(bigram_counts: &HashMap<(TokenId, TokenId), u64>) -> f64 {
    let mut n1 = 0u64;
    let mut n2 = 0u64;
    for &c in bigram_counts.values() {
        match c {
            1 => n1 += 1,
            2 => n2 += 1,
            _ => {}
        }
    }
    let raw = if n1 + 2 * n2 == 0 {
        FALLBACK_DISCOUNT
    } else {
        n1 as f64 / (n1 + 2 * n2) as f64
    };
    raw.clamp(DISCOUNT_MIN, DISCOUNT_MAX)
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected {key:?} line, got {line:?}")))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| Error::Format(format!("bad value {s:?}: {e}")))
}
