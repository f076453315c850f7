//! Synthetic corpus generation with controllable context effects.
//!
//! Each record draws a state and a UTC timestamp uniformly and an author from
//! a Zipf-weighted pool, derives the local wall-clock context, and computes
//! its positive probability through a logistic model:
//!
//! ```text
//! logit = logit(base_positive_rate) + state + hour + dow + month
//!       + author + state_hour interaction
//! p = clamp(sigmoid(logit), 0.01, 0.99)
//! ```
//!
//! The additive form matches the classifier's factorized priors exactly;
//! `interaction.*` terms deliberately break it for robustness runs. Words are
//! drawn from one of two class-conditional unigram distributions over the
//! configured lexicon, and the class is stamped into the text with a trailing
//! emoticon so the output is trainable via the standard ingestion path.
//!
//! Generation is single-threaded and fully determined by the seed.
//!
//! Config files are flat `key = value` lines; see `SynthConfig::parse`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::corpus::{localize, RawRecord, MAX_SUPPORTED_TS, MIN_SUPPORTED_TS, STATE_CODES};
use crate::{Error, Result};

/// One lexicon word with its per-class sampling weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub token: String,
    pub pos_weight: f64,
    pub neg_weight: f64,
}

/// Full generator configuration. Construct via [`SynthConfig::parse`] or
/// field-by-field from [`SynthConfig::default`], then `generate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_tweets: u64,
    pub seed: u64,
    pub base_positive_rate: f64,
    /// Tweet length bounds in words, inclusive.
    pub len_min: usize,
    pub len_max: usize,
    pub n_authors: usize,
    /// Zipf exponent for author activity; author rank k has weight k^-s.
    pub zipf_exponent: f64,
    /// Standard deviation of per-author log-odds shifts; 0 disables them.
    pub author_effect_sd: f64,
    /// UTC timestamp range records are drawn from, half-open.
    pub ts_start: i64,
    pub ts_end: i64,
    pub state_effects: BTreeMap<String, f64>,
    pub hour_effects: BTreeMap<u8, f64>,
    pub dow_effects: BTreeMap<u8, f64>,
    pub month_effects: BTreeMap<u8, f64>,
    /// Non-additive (state, hour) shifts, applied on top of the marginals.
    pub state_hour_interactions: BTreeMap<(String, u8), f64>,
    /// In file order; the order fixes the sampling layout, so it is part of
    /// the deterministic output contract.
    pub lexicon: Vec<LexiconEntry>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_tweets: 0,
            seed: 0,
            base_positive_rate: 0.62,
            len_min: 3,
            len_max: 12,
            n_authors: 1000,
            zipf_exponent: 1.05,
            author_effect_sd: 0.0,
            // 2012-01-01 .. 2015-01-01 UTC.
            ts_start: 1_325_376_000,
            ts_end: 1_420_070_400,
            state_effects: BTreeMap::new(),
            hour_effects: BTreeMap::new(),
            dow_effects: BTreeMap::new(),
            month_effects: BTreeMap::new(),
            state_hour_interactions: BTreeMap::new(),
            lexicon: Vec::new(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse value {value:?}")))
}

fn check_state(key: &str, state: &str) -> Result<()> {
    if STATE_CODES.binary_search(&state).is_err() {
        return Err(Error::Config(format!("{key}: unknown state {state:?}")));
    }
    Ok(())
}

fn check_range(key: &str, value: u8, lo: u8, hi: u8) -> Result<()> {
    if value < lo || value > hi {
        return Err(Error::Config(format!(
            "{key}: cell {value} outside {lo}..={hi}"
        )));
    }
    Ok(())
}

impl SynthConfig {
    /// Parses the flat config format: one `key = value` per line, `#` lines
    /// and blank lines ignored. Keys:
    ///
    /// ```text
    /// n_tweets = 100000          # required
    /// seed = 7                   # required
    /// base_positive_rate = 0.62
    /// len_min = 3
    /// len_max = 12
    /// n_authors = 1000
    /// zipf_exponent = 1.05
    /// author_effect_sd = 0.0
    /// ts_start = 1325376000
    /// ts_end = 1420070400
    /// effect.state.CA = 1.5      # additive log-odds per cell
    /// effect.hour.13 = 0.8
    /// effect.dow.0 = -0.2
    /// effect.month.7 = 0.3
    /// interaction.state_hour.CA.13 = 1.0
    /// word.great = 3.0 0.5       # positive-class and negative-class weights
    /// ```
    pub fn parse(text: &str) -> Result<SynthConfig> {
        let mut config = SynthConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut have_n = false;
        let mut have_seed = false;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: idx + 1,
                reason: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_owned()) {
                return Err(Error::Config(format!("duplicate key {key}")));
            }
            match key {
                "n_tweets" => {
                    config.n_tweets = parse_value(key, value)?;
                    have_n = true;
                }
                "seed" => {
                    config.seed = parse_value(key, value)?;
                    have_seed = true;
                }
                "base_positive_rate" => config.base_positive_rate = parse_value(key, value)?,
                "len_min" => config.len_min = parse_value(key, value)?,
                "len_max" => config.len_max = parse_value(key, value)?,
                "n_authors" => config.n_authors = parse_value(key, value)?,
                "zipf_exponent" => config.zipf_exponent = parse_value(key, value)?,
                "author_effect_sd" => config.author_effect_sd = parse_value(key, value)?,
                "ts_start" => config.ts_start = parse_value(key, value)?,
                "ts_end" => config.ts_end = parse_value(key, value)?,
                _ => parse_structured_key(&mut config, key, value)?,
            }
        }
        if !have_n {
            return Err(Error::Config("missing required key n_tweets".into()));
        }
        if !have_seed {
            return Err(Error::Config("missing required key seed".into()));
        }
        config.validate()?;
        Ok(config)
    }

    // Negated float comparisons are deliberate: NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_tweets == 0 {
            return fail("n_tweets must be positive".into());
        }
        if !(self.base_positive_rate > 0.0 && self.base_positive_rate < 1.0) {
            return fail(format!(
                "base_positive_rate must be in (0,1), got {}",
                self.base_positive_rate
            ));
        }
        if self.len_min == 0 || self.len_min > self.len_max {
            return fail(format!(
                "need 1 <= len_min <= len_max, got {}..{}",
                self.len_min, self.len_max
            ));
        }
        if self.n_authors == 0 {
            return fail("n_authors must be positive".into());
        }
        if !(self.zipf_exponent > 0.0) {
            return fail(format!(
                "zipf_exponent must be positive, got {}",
                self.zipf_exponent
            ));
        }
        if !(self.author_effect_sd >= 0.0) {
            return fail(format!(
                "author_effect_sd must be nonnegative, got {}",
                self.author_effect_sd
            ));
        }
        if self.ts_start < MIN_SUPPORTED_TS
            || self.ts_end > MAX_SUPPORTED_TS
            || self.ts_start >= self.ts_end
        {
            return fail(format!(
                "timestamp range {}..{} invalid or outside {}..{}",
                self.ts_start, self.ts_end, MIN_SUPPORTED_TS, MAX_SUPPORTED_TS
            ));
        }
        if self.lexicon.is_empty() {
            return fail("lexicon is empty; add word.<token> entries".into());
        }
        for entry in &self.lexicon {
            if entry.token.is_empty()
                || !entry
                    .token
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
            {
                return fail(format!(
                    "lexicon token {:?} must be lowercase ascii alphanumeric",
                    entry.token
                ));
            }
            if !(entry.pos_weight >= 0.0) || !(entry.neg_weight >= 0.0) {
                return fail(format!("word.{}: weights must be nonnegative", entry.token));
            }
        }
        for (class, total) in [
            (
                "positive",
                self.lexicon.iter().map(|e| e.pos_weight).sum::<f64>(),
            ),
            (
                "negative",
                self.lexicon.iter().map(|e| e.neg_weight).sum::<f64>(),
            ),
        ] {
            if !(total > 0.0) {
                return fail(format!("{class} word distribution has zero total weight"));
            }
        }
        for (key, shift) in self
            .state_effects
            .values()
            .map(|v| ("effect", v))
            .chain(self.hour_effects.values().map(|v| ("effect", v)))
            .chain(self.dow_effects.values().map(|v| ("effect", v)))
            .chain(self.month_effects.values().map(|v| ("effect", v)))
            .chain(
                self.state_hour_interactions
                    .values()
                    .map(|v| ("interaction", v)),
            )
        {
            if !shift.is_finite() {
                return fail(format!("{key} shift must be finite, got {shift}"));
            }
        }
        for state in self.state_effects.keys() {
            check_state("effect.state", state)?;
        }
        for (state, hour) in self.state_hour_interactions.keys() {
            check_state("interaction.state_hour", state)?;
            check_range("interaction.state_hour", *hour, 0, 23)?;
        }
        for hour in self.hour_effects.keys() {
            check_range("effect.hour", *hour, 0, 23)?;
        }
        for dow in self.dow_effects.keys() {
            check_range("effect.dow", *dow, 0, 6)?;
        }
        for month in self.month_effects.keys() {
            check_range("effect.month", *month, 1, 12)?;
        }
        Ok(())
    }
}

fn parse_structured_key(config: &mut SynthConfig, key: &str, value: &str) -> Result<()> {
    if let Some(token) = key.strip_prefix("word.") {
        let (pos, neg) = value
            .split_once(' ')
            .ok_or_else(|| Error::Config(format!("{key}: expected two weights, got {value:?}")))?;
        config.lexicon.push(LexiconEntry {
            token: token.to_owned(),
            pos_weight: parse_value(key, pos.trim())?,
            neg_weight: parse_value(key, neg.trim())?,
        });
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("effect.state.") {
        config
            .state_effects
            .insert(rest.to_owned(), parse_value(key, value)?);
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("effect.hour.") {
        config
            .hour_effects
            .insert(parse_value(key, rest)?, parse_value(key, value)?);
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("effect.dow.") {
        config
            .dow_effects
            .insert(parse_value(key, rest)?, parse_value(key, value)?);
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("effect.month.") {
        config
            .month_effects
            .insert(parse_value(key, rest)?, parse_value(key, value)?);
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("interaction.state_hour.") {
        let (state, hour) = rest.split_once('.').ok_or_else(|| {
            Error::Config(format!(
                "{key}: expected interaction.state_hour.<STATE>.<HOUR>"
            ))
        })?;
        config.state_hour_interactions.insert(
            (state.to_owned(), parse_value(key, hour)?),
            parse_value(key, value)?,
        );
        return Ok(());
    }
    Err(Error::Config(format!("unknown key {key}")))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates the corpus. Deterministic: the same config (including lexicon
/// order) always yields the same records.
pub fn generate(config: &SynthConfig) -> Result<Vec<RawRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let author_names: Vec<String> = (0..config.n_authors)
        .map(|i| format!("author{i:04}"))
        .collect();
    let author_shifts: Vec<f64> = if config.author_effect_sd > 0.0 {
        let normal = Normal::new(0.0, config.author_effect_sd)
            .map_err(|e| Error::Config(format!("author_effect_sd: {e}")))?;
        (0..config.n_authors)
            .map(|_| normal.sample(&mut rng))
            .collect()
    } else {
        vec![0.0; config.n_authors]
    };
    let author_index = WeightedIndex::new(
        (1..=config.n_authors).map(|rank| (rank as f64).powf(-config.zipf_exponent)),
    )
    .map_err(|e| Error::Config(format!("author weights: {e}")))?;
    let word_index = |weight: fn(&LexiconEntry) -> f64| {
        WeightedIndex::new(config.lexicon.iter().map(weight))
            .map_err(|e| Error::Config(format!("lexicon weights: {e}")))
    };
    let pos_words = word_index(|e| e.pos_weight)?;
    let neg_words = word_index(|e| e.neg_weight)?;

    let base = config.base_positive_rate;
    let base_logit = (base / (1.0 - base)).ln();
    let shift = |map: &BTreeMap<u8, f64>, cell: u8| map.get(&cell).copied().unwrap_or(0.0);

    let mut records = Vec::with_capacity(config.n_tweets as usize);
    for _ in 0..config.n_tweets {
        let state = STATE_CODES[rng.random_range(0..STATE_CODES.len())];
        let ts = rng.random_range(config.ts_start..config.ts_end);
        let author = author_index.sample(&mut rng);
        let local = localize(ts, state)?;

        let logit = base_logit
            + config.state_effects.get(state).copied().unwrap_or(0.0)
            + shift(&config.hour_effects, local.hour)
            + shift(&config.dow_effects, local.dow)
            + shift(&config.month_effects, local.month)
            + author_shifts[author]
            + config
                .state_hour_interactions
                .get(&(state.to_owned(), local.hour))
                .copied()
                .unwrap_or(0.0);
        let p = sigmoid(logit).clamp(0.01, 0.99);
        let positive = rng.random::<f64>() < p;

        let words = rng.random_range(config.len_min..=config.len_max);
        let dist = if positive { &pos_words } else { &neg_words };
        let mut text = String::new();
        for _ in 0..words {
            text.push_str(&config.lexicon[dist.sample(&mut rng)].token);
            text.push(' ');
        }
        text.push_str(if positive { ":)" } else { ":(" });

        records.push(RawRecord {
            text,
            ts,
            author: author_names[author].clone(),
            state: state.to_owned(),
        });
    }
    Ok(records)
}

/// Writes records in the standard corpus format, one JSON object per line.
pub fn write_corpus<W: Write>(records: &[RawRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::Format(format!("serializing record: {e}")))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
