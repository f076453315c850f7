//! Cross-validation harness and metric suite.
//!
//! Evaluation is k-fold with a seeded shuffle: every record lands in exactly
//! one fold, fold sizes differ by at most one, and each fold is scored by a
//! model trained from scratch on the other k-1 folds. Vocabularies, language
//! models, and context priors are all rebuilt per fold, so nothing from a
//! held-out record can leak into the model that scores it. Fold confusions
//! are pooled (micro-averaged) into a single report.
//!
//! Also provides the agreement statistics used on hand-labelled data:
//! Fleiss' kappa for inter-annotator agreement and Pearson correlation with
//! a two-sided t-test p-value.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::classifier::{ClassifierOptions, Mode, SentimentClassifier};
use crate::corpus::{LabeledTweet, Polarity};
use crate::ngram::TrainOptions;
use crate::par;
use crate::priors::CategorySet;
use crate::{Error, Result};

/// Deterministic assignment of record indices to folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: u32,
    seed: u64,
    /// assignment[i] = fold id of record i.
    assignment: Vec<u32>,
}

/// Partitions `n` records into `k` folds of near-equal size, shuffled by
/// `seed`. The same (n, k, seed) always yields the same plan.
pub fn kfold(n: usize, k: u32, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if n < k as usize {
        return Err(Error::Config(format!(
            "corpus of {n} records is smaller than k={k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    // Round-robin over the shuffled order keeps fold sizes within one.
    let mut assignment = vec![0u32; n];
    for (position, &record) in order.iter().enumerate() {
        assignment[record] = (position % k as usize) as u32;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignment,
    })
}

impl FoldPlan {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn fold_of(&self, record: usize) -> u32 {
        self.assignment[record]
    }

    pub fn test_indices(&self, fold: u32) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: u32) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Which model family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Always predicts the training fold's majority class (ties Positive).
    Majority,
    /// Language models and class prior only.
    Baseline,
    /// Language models, class prior, and the given context categories.
    Contextual(CategorySet),
}

/// Everything `evaluate` needs to train one model per fold.
#[derive(Debug, Clone)]
pub struct EvalSpec {
    pub model: ModelKind,
    pub min_author_tweets: u64,
    pub lm: TrainOptions,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec {
            model: ModelKind::Baseline,
            min_author_tweets: crate::priors::DEFAULT_MIN_AUTHOR_TWEETS,
            lm: TrainOptions::default(),
        }
    }
}

/// Pooled 2x2 confusion counts. "Positive" is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_neg: u64,
    pub false_pos: u64,
    pub true_neg: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    pub fn record(&mut self, actual: Polarity, predicted: Polarity) {
        match (actual, predicted) {
            (Polarity::Positive, Polarity::Positive) => self.true_pos += 1,
            (Polarity::Positive, Polarity::Negative) => self.false_neg += 1,
            (Polarity::Negative, Polarity::Positive) => self.false_pos += 1,
            (Polarity::Negative, Polarity::Negative) => self.true_neg += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.false_neg += other.false_neg;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
    }
}

/// Metrics over a pooled confusion.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub pos_precision: f64,
    pub pos_recall: f64,
    pub pos_f1: f64,
    pub neg_precision: f64,
    pub neg_recall: f64,
    pub neg_f1: f64,
    pub confusion: Confusion,
    pub n: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl EvalReport {
    pub fn from_confusion(c: Confusion) -> EvalReport {
        let n = c.total();
        let pos_precision = ratio(c.true_pos, c.true_pos + c.false_pos);
        let pos_recall = ratio(c.true_pos, c.true_pos + c.false_neg);
        let neg_precision = ratio(c.true_neg, c.true_neg + c.false_neg);
        let neg_recall = ratio(c.true_neg, c.true_neg + c.false_pos);
        EvalReport {
            accuracy: ratio(c.true_pos + c.true_neg, n),
            pos_precision,
            pos_recall,
            pos_f1: f1(pos_precision, pos_recall),
            neg_precision,
            neg_recall,
            neg_f1: f1(neg_precision, neg_recall),
            confusion: c,
            n,
        }
    }

    /// Two-column CSV, one metric per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let mut push = |name: &str, value: String| {
            out.push_str(name);
            out.push(',');
            out.push_str(&value);
            out.push('\n');
        };
        push("accuracy", self.accuracy.to_string());
        push("positive_precision", self.pos_precision.to_string());
        push("positive_recall", self.pos_recall.to_string());
        push("positive_f1", self.pos_f1.to_string());
        push("negative_precision", self.neg_precision.to_string());
        push("negative_recall", self.neg_recall.to_string());
        push("negative_f1", self.neg_f1.to_string());
        push("true_positive", self.confusion.true_pos.to_string());
        push("false_negative", self.confusion.false_neg.to_string());
        push("false_positive", self.confusion.false_pos.to_string());
        push("true_negative", self.confusion.true_neg.to_string());
        push("n", self.n.to_string());
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}    accuracy = {:.4}", self.n, self.accuracy)?;
        writeln!(
            f,
            "{:<10} {:>9} {:>9} {:>9}",
            "class", "precision", "recall", "f1"
        )?;
        writeln!(
            f,
            "{:<10} {:>9.4} {:>9.4} {:>9.4}",
            "positive", self.pos_precision, self.pos_recall, self.pos_f1
        )?;
        writeln!(
            f,
            "{:<10} {:>9.4} {:>9.4} {:>9.4}",
            "negative", self.neg_precision, self.neg_recall, self.neg_f1
        )?;
        writeln!(
            f,
            "{:<16} {:>10} {:>10}",
            "confusion", "pred pos", "pred neg"
        )?;
        writeln!(
            f,
            "{:<16} {:>10} {:>10}",
            "actual positive", self.confusion.true_pos, self.confusion.false_neg
        )?;
        write!(
            f,
            "{:<16} {:>10} {:>10}",
            "actual negative", self.confusion.false_pos, self.confusion.true_neg
        )
    }
}

fn fold_confusion(
    spec: &EvalSpec,
    corpus: &[LabeledTweet],
    plan: &FoldPlan,
    fold: u32,
) -> Result<Confusion> {
    let train: Vec<&LabeledTweet> = plan
        .train_indices(fold)
        .into_iter()
        .map(|i| &corpus[i])
        .collect();
    let test: Vec<&LabeledTweet> = plan
        .test_indices(fold)
        .into_iter()
        .map(|i| &corpus[i])
        .collect();

    let positives = train
        .iter()
        .filter(|r| r.label == Polarity::Positive)
        .count();
    let negatives = train.len() - positives;
    if positives == 0 || negatives == 0 {
        let missing = if positives == 0 {
            "positive"
        } else {
            "negative"
        };
        return Err(Error::Training(format!(
            "fold {fold}: training split contains no {missing} examples"
        )));
    }

    let mut confusion = Confusion::default();
    match spec.model {
        ModelKind::Majority => {
            let majority = if positives >= negatives {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            for record in &test {
                confusion.record(record.label, majority);
            }
        }
        ModelKind::Baseline | ModelKind::Contextual(_) => {
            let mode = match spec.model {
                ModelKind::Contextual(set) => Mode::Contextual(set),
                _ => Mode::Baseline,
            };
            let opts = ClassifierOptions {
                mode,
                min_author_tweets: spec.min_author_tweets,
                lm: spec.lm.clone(),
            };
            let classifier =
                SentimentClassifier::train(train.iter().copied(), &opts).map_err(|e| match e {
                    Error::Training(msg) => Error::Training(format!("fold {fold}: {msg}")),
                    other => other,
                })?;
            for record in &test {
                let prediction = classifier.classify(&record.tokens, Some(&record.context));
                confusion.record(record.label, prediction.label);
            }
        }
    }
    Ok(confusion)
}

/// Runs the full cross-validation protocol: one model per fold, trained only
/// on that fold's training split, scored on the held-out split, confusions
/// pooled. Folds run in parallel; the pooled result is order-independent.
pub fn evaluate(spec: &EvalSpec, corpus: &[LabeledTweet], plan: &FoldPlan) -> Result<EvalReport> {
    if plan.len() != corpus.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} records but corpus has {}",
            plan.len(),
            corpus.len()
        )));
    }
    let per_fold = par::map_indices(plan.k() as usize, |fold| {
        fold_confusion(spec, corpus, plan, fold as u32)
    });
    let mut pooled = Confusion::default();
    for result in per_fold {
        pooled.merge(&result?);
    }
    Ok(EvalReport::from_confusion(pooled))
}

/// Fleiss' kappa over `ratings[item][rater] = category`. Requires every item
/// to be rated by the same number (at least two) of raters.
pub fn fleiss_kappa(ratings: &[Vec<usize>]) -> Result<f64> {
    let items = ratings.len();
    if items == 0 {
        return Err(Error::Invalid("no items to rate".into()));
    }
    let raters = ratings[0].len();
    if raters < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 raters per item, got {raters}"
        )));
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != raters {
            return Err(Error::Invalid(format!(
                "item {i} has {} ratings, expected {raters}",
                row.len()
            )));
        }
    }
    let categories = ratings
        .iter()
        .flat_map(|row| row.iter().copied())
        .max()
        .unwrap()
        + 1;

    let mut category_totals = vec![0u64; categories];
    let mut agreement_sum = 0.0;
    for row in ratings {
        let mut counts = vec![0u64; categories];
        for &category in row {
            counts[category] += 1;
        }
        let mut square_sum = 0u64;
        for (j, &c) in counts.iter().enumerate() {
            square_sum += c * c;
            category_totals[j] += c;
        }
        // P_i: fraction of agreeing rater pairs on this item.
        agreement_sum += (square_sum - raters as u64) as f64 / (raters * (raters - 1)) as f64;
    }
    let p_bar = agreement_sum / items as f64;
    let total = (items * raters) as f64;
    let p_expected: f64 = category_totals
        .iter()
        .map(|&t| (t as f64 / total).powi(2))
        .sum();
    // Unanimous data short-circuits; it also covers the P_e = 1 case where
    // the general formula would divide zero by zero.
    if p_bar >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_expected) / (1.0 - p_expected))
}

/// Sample Pearson correlation with a two-sided p-value from the
/// t-distribution with n-2 degrees of freedom.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Invalid(format!("need at least 3 points, got {n}")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Invalid("zero variance input".into()));
    }
    let r = sxy / (sxx * syy).sqrt();
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    let p = if denom <= 0.0 {
        0.0
    } else {
        let t = r.abs() * (df / denom).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::Invalid(format!("t-distribution: {e}")))?;
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok((r, p))
}
