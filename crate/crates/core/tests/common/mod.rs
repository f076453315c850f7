//! Brute-force reference implementations used to cross-check the library.
//!
//! Everything here recomputes from scratch with string-keyed maps and direct
//! recounts per query. No token ids, no incremental tables, no code shared
//! with the crate under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use valence::corpus::{Context, LabeledTweet, Polarity, STATE_CODES};
use valence::priors::{Category, CategorySet};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";

/// Straight-line interpolated Kneser-Ney bigram model over string keys.
pub struct KnOracle {
    vocab: BTreeSet<String>,
    bigrams: BTreeMap<(String, String), u64>,
    history_totals: BTreeMap<String, u64>,
    successor_types: BTreeMap<String, u64>,
    continuation_counts: BTreeMap<String, u64>,
    total_continuations: u64,
    pub discount: f64,
    use_bos: bool,
}

impl KnOracle {
    pub fn build(seqs: &[Vec<String>], use_bos: bool, discount: Option<f64>) -> KnOracle {
        let mut raw = BTreeMap::new();
        for seq in seqs {
            for tok in seq {
                *raw.entry(tok.clone()).or_insert(0u64) += 1;
            }
        }
        let vocab: BTreeSet<String> = raw
            .into_iter()
            .filter(|(_, c)| *c >= 6)
            .map(|(t, _)| t)
            .collect();
        let map = |t: &str| -> String {
            if vocab.contains(t) {
                t.to_owned()
            } else {
                UNK.to_owned()
            }
        };

        let mut bigrams: BTreeMap<(String, String), u64> = BTreeMap::new();
        for seq in seqs {
            let mut mapped: Vec<String> = Vec::new();
            if use_bos {
                mapped.push(BOS.to_owned());
            }
            mapped.extend(seq.iter().map(|t| map(t)));
            for pair in mapped.windows(2) {
                *bigrams
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += 1;
            }
        }

        let mut history_totals = BTreeMap::new();
        let mut successors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut contexts: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for ((h, w), c) in &bigrams {
            *history_totals.entry(h.clone()).or_insert(0u64) += c;
            successors.entry(h.clone()).or_default().insert(w.clone());
            contexts.entry(w.clone()).or_default().insert(h.clone());
        }

        let discount = match discount {
            Some(d) => d,
            None => {
                let n1 = bigrams.values().filter(|&&c| c == 1).count() as f64;
                let n2 = bigrams.values().filter(|&&c| c == 2).count() as f64;
                if n1 + 2.0 * n2 == 0.0 {
                    0.75
                } else {
                    (n1 / (n1 + 2.0 * n2)).clamp(0.01, 0.99)
                }
            }
        };

        let mut continuation_counts: BTreeMap<String, u64> = contexts
            .iter()
            .map(|(w, hs)| (w.clone(), hs.len() as u64))
            .collect();
        let unk = continuation_counts.entry(UNK.to_owned()).or_insert(0);
        if *unk == 0 {
            *unk = 1;
        }
        let total_continuations = continuation_counts.values().sum();

        KnOracle {
            vocab,
            bigrams,
            history_totals,
            successor_types: successors
                .into_iter()
                .map(|(h, s)| (h, s.len() as u64))
                .collect(),
            continuation_counts,
            total_continuations,
            discount,
            use_bos,
        }
    }

    fn map<'a>(&'a self, t: &'a str) -> &'a str {
        if t == BOS || self.vocab.contains(t) {
            t
        } else {
            UNK
        }
    }

    pub fn continuation_prob(&self, w: &str) -> f64 {
        let c = self
            .continuation_counts
            .get(self.map(w))
            .copied()
            .unwrap_or(0);
        c as f64 / self.total_continuations as f64
    }

    pub fn prob(&self, h: &str, w: &str) -> f64 {
        let h = self.map(h).to_owned();
        let w = self.map(w).to_owned();
        let pcont = self.continuation_prob(&w);
        let c_h = self.history_totals.get(&h).copied().unwrap_or(0);
        if c_h == 0 {
            return pcont;
        }
        let c_hw = self.bigrams.get(&(h.clone(), w)).copied().unwrap_or(0);
        let types = self.successor_types.get(&h).copied().unwrap_or(0);
        let kept = (c_hw as f64 - self.discount).max(0.0);
        (kept + self.discount * types as f64 * pcont) / c_h as f64
    }

    pub fn score(&self, tokens: &[String]) -> f64 {
        if self.use_bos {
            let mut prev = BOS.to_owned();
            let mut sum = 0.0;
            for t in tokens {
                sum += self.prob(&prev, t).ln();
                prev = self.map(t).to_owned();
            }
            sum
        } else {
            tokens
                .windows(2)
                .map(|p| self.prob(&p[0], &p[1]).ln())
                .sum()
        }
    }
}

fn universe_size(category: Category) -> usize {
    match category {
        Category::State => STATE_CODES.len(),
        Category::Hour => 24,
        Category::Dow => 7,
        Category::Month => 12,
        Category::Author => unreachable!("author universe is data dependent"),
    }
}

fn cell_of(record: &Context, category: Category) -> String {
    match category {
        Category::State => record.state.clone(),
        Category::Hour => record.hour.to_string(),
        Category::Dow => record.dow.to_string(),
        Category::Month => record.month.to_string(),
        Category::Author => record.author.clone(),
    }
}

/// Direct evaluation of the full fused score margin: per-class KN oracles,
/// class prior, and Laplace-smoothed context factors, all recounted from the
/// training records on every call.
pub fn oracle_margin(
    train: &[LabeledTweet],
    min_author_tweets: u64,
    categories: CategorySet,
    use_bos: bool,
    discount: Option<f64>,
    tokens: &[String],
    ctx: Option<&Context>,
) -> f64 {
    let class_seqs = |label: Polarity| -> Vec<Vec<String>> {
        train
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.tokens.clone())
            .collect()
    };
    let pos_seqs = class_seqs(Polarity::Positive);
    let neg_seqs = class_seqs(Polarity::Negative);
    let pos_lm = KnOracle::build(&pos_seqs, use_bos, discount);
    let neg_lm = KnOracle::build(&neg_seqs, use_bos, discount);

    let n_pos = pos_seqs.len() as f64;
    let n_neg = neg_seqs.len() as f64;
    let total = n_pos + n_neg;

    let class_count = |label: Polarity| -> f64 {
        match label {
            Polarity::Positive => n_pos,
            Polarity::Negative => n_neg,
        }
    };

    let ctx_term = |label: Polarity| -> f64 {
        let Some(ctx) = ctx else { return 0.0 };
        let mut sum = 0.0;
        for category in categories.iter() {
            if category == Category::Author {
                let author_total = train
                    .iter()
                    .filter(|r| r.context.author == ctx.author)
                    .count() as u64;
                if author_total == 0 || author_total < min_author_tweets {
                    continue;
                }
                let universe: BTreeSet<&str> =
                    train.iter().map(|r| r.context.author.as_str()).collect();
                let count = train
                    .iter()
                    .filter(|r| r.label == label && r.context.author == ctx.author)
                    .count() as f64;
                sum += ((count + 1.0) / (class_count(label) + universe.len() as f64)).ln();
            } else {
                let cell = cell_of(ctx, category);
                let count = train
                    .iter()
                    .filter(|r| r.label == label && cell_of(&r.context, category) == cell)
                    .count() as f64;
                sum += ((count + 1.0) / (class_count(label) + universe_size(category) as f64)).ln();
            }
        }
        sum
    };

    let score = |label: Polarity, lm: &KnOracle| -> f64 {
        lm.score(tokens) + (class_count(label) / total).ln() + ctx_term(label)
    };
    score(Polarity::Positive, &pos_lm) - score(Polarity::Negative, &neg_lm)
}

/// Random token sequences over a small alphabet, for normalization and
/// oracle-equivalence sweeps.
pub fn random_sequences<R: Rng>(
    rng: &mut R,
    n: usize,
    vocab: usize,
    max_len: usize,
) -> Vec<Vec<String>> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| format!("w{}", rng.random_range(0..vocab)))
                .collect()
        })
        .collect()
}

/// Random labeled corpus with both classes guaranteed present.
pub fn random_labeled_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<LabeledTweet> {
    assert!(n >= 2);
    let states = ["CA", "NY", "TX", "FL", "WA"];
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let label = match i {
            0 => Polarity::Positive,
            1 => Polarity::Negative,
            _ => {
                if rng.random::<bool>() {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                }
            }
        };
        let len = rng.random_range(1..=6);
        let tokens = (0..len)
            .map(|_| format!("w{}", rng.random_range(0..12)))
            .collect();
        records.push(LabeledTweet {
            tokens,
            label,
            context: Context {
                state: states[rng.random_range(0..states.len())].to_owned(),
                hour: rng.random_range(0..24),
                dow: rng.random_range(0..7),
                month: rng.random_range(1..=12),
                author: format!("author{}", rng.random_range(0..4)),
            },
        });
    }
    records
}
