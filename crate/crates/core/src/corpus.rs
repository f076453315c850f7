//! Corpus ingestion: JSONL records to labeled, context-tagged token
//! sequences.
//!
//! Labels come from emoticons (distant supervision): a record with only
//! positive emoticons is Positive, only negative is Negative, both is
//! discarded as conflicting, neither is discarded as unlabeled. Emoticons are
//! stripped before tokenization so the label source never leaks into the
//! features.
//!
//! Timestamps are UTC seconds; context (hour of day, day of week, month) is
//! derived in the posting state's local time using the post-2007 US DST
//! schedule, so ingestion accepts timestamps from 2007-01-01 onward by
//! default.

use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::preprocess;
use crate::{Error, Result};

/// Emoticons that mark a post Positive.
pub const POSITIVE_EMOTICONS: [&str; 3] = [":-)", ": )", ":)"];

/// Emoticons that mark a post Negative.
pub const NEGATIVE_EMOTICONS: [&str; 3] = [":-(", ": (", ":("];

/// Sentiment polarity. Doubles as the class label throughout the crate;
/// `score` gives the +1/-1 encoding used for averages and correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn score(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scan order: longer patterns first so ":-)" is consumed as one emoticon,
/// not as ":" plus "-)". Matches are consumed left to right; consumed bytes
/// are never rescanned.
const EMOTICON_SCAN: [(&str, Polarity); 6] = [
    (":-)", Polarity::Positive),
    (": )", Polarity::Positive),
    (":-(", Polarity::Negative),
    (": (", Polarity::Negative),
    (":)", Polarity::Positive),
    (":(", Polarity::Negative),
];

/// Single left-to-right pass shared by stripping and labeling: returns the
/// text without emoticons plus the positive/negative match counts.
fn scan_emoticons(text: &str) -> (String, u32, u32) {
    let bytes = text.as_bytes();
    let mut kept = String::with_capacity(text.len());
    let mut positive = 0u32;
    let mut negative = 0u32;
    let mut i = 0;
    'scan: while i < bytes.len() {
        for (pattern, polarity) in EMOTICON_SCAN {
            if bytes[i..].starts_with(pattern.as_bytes()) {
                match polarity {
                    Polarity::Positive => positive += 1,
                    Polarity::Negative => negative += 1,
                }
                i += pattern.len();
                continue 'scan;
            }
        }
        let ch = text[i..].chars().next().expect("i is a char boundary");
        kept.push(ch);
        i += ch.len_utf8();
    }
    (kept, positive, negative)
}

/// Removes every emoticon occurrence, leaving surrounding text untouched.
pub fn strip_emoticons(text: &str) -> String {
    scan_emoticons(text).0
}

/// Label implied by the emoticons in `text`: None when there are none or when
/// both polarities appear (conflict).
pub fn label_by_emoticon(text: &str) -> Option<Polarity> {
    let (_, positive, negative) = scan_emoticons(text);
    match (positive > 0, negative > 0) {
        (true, false) => Some(Polarity::Positive),
        (false, true) => Some(Polarity::Negative),
        _ => None,
    }
}

/// The 50 US state postal codes, sorted; the closed universe for the state
/// context category.
pub const STATE_CODES: [&str; 50] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN", "KS",
    "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM",
    "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI",
    "WV", "WY",
];

/// US civil time zones at state granularity. States spanning two zones are
/// assigned the zone of their majority population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsZone {
    Eastern,
    Central,
    Mountain,
    /// Mountain standard time year-round.
    Arizona,
    Pacific,
    Alaska,
    /// No DST.
    Hawaii,
}

impl UsZone {
    pub fn standard_offset_hours(self) -> i32 {
        match self {
            UsZone::Eastern => -5,
            UsZone::Central => -6,
            UsZone::Mountain | UsZone::Arizona => -7,
            UsZone::Pacific => -8,
            UsZone::Alaska => -9,
            UsZone::Hawaii => -10,
        }
    }

    pub fn observes_dst(self) -> bool {
        !matches!(self, UsZone::Arizona | UsZone::Hawaii)
    }

    /// Offset from UTC in seconds at the given UTC instant, DST included.
    pub fn utc_offset_seconds(self, ts: i64) -> i64 {
        let std_offset = self.standard_offset_hours() as i64 * 3600;
        if self.observes_dst() && in_dst(ts, self.standard_offset_hours()) {
            std_offset + 3600
        } else {
            std_offset
        }
    }
}

/// Zone for a state postal code; None for anything outside the 50 states.
pub fn zone_for_state(code: &str) -> Option<UsZone> {
    let zone = match code {
        "CT" | "DE" | "FL" | "GA" | "IN" | "KY" | "MA" | "MD" | "ME" | "MI" | "NC" | "NH"
        | "NJ" | "NY" | "OH" | "PA" | "RI" | "SC" | "VA" | "VT" | "WV" => UsZone::Eastern,
        "AL" | "AR" | "IA" | "IL" | "KS" | "LA" | "MN" | "MO" | "MS" | "ND" | "NE" | "OK"
        | "SD" | "TN" | "TX" | "WI" => UsZone::Central,
        "CO" | "ID" | "MT" | "NM" | "UT" | "WY" => UsZone::Mountain,
        "AZ" => UsZone::Arizona,
        "CA" | "NV" | "OR" | "WA" => UsZone::Pacific,
        "AK" => UsZone::Alaska,
        "HI" => UsZone::Hawaii,
        _ => return None,
    };
    Some(zone)
}

/// US DST window for the UTC year of `ts`, post-2007 rules: starts the second
/// Sunday of March at 02:00 local standard time, ends the first Sunday of
/// November at 02:00 local daylight time. Both bounds converted to UTC
/// instants so the comparison needs no local-time arithmetic.
fn in_dst(ts: i64, std_offset_hours: i32) -> bool {
    let Some(utc) = DateTime::from_timestamp(ts, 0) else {
        return false;
    };
    let year = utc.year();
    let second_sunday_march = NaiveDate::from_weekday_of_month_opt(year, 3, Weekday::Sun, 2)
        .expect("march has a second sunday");
    let first_sunday_november = NaiveDate::from_weekday_of_month_opt(year, 11, Weekday::Sun, 1)
        .expect("november has a first sunday");
    let local_2am = |d: NaiveDate| d.and_hms_opt(2, 0, 0).expect("02:00 exists").and_utc();
    let start = local_2am(second_sunday_march).timestamp() - std_offset_hours as i64 * 3600;
    let end = local_2am(first_sunday_november).timestamp() - (std_offset_hours + 1) as i64 * 3600;
    ts >= start && ts < end
}

/// Wall-clock context fields derived from a UTC timestamp and a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalTime {
    /// 0..=23.
    pub hour: u8,
    /// 0..=6, Monday = 0.
    pub dow: u8,
    /// 1..=12.
    pub month: u8,
}

/// Converts a UTC timestamp to local wall-clock context for a state.
pub fn localize(ts: i64, state: &str) -> Result<LocalTime> {
    let zone = zone_for_state(state)
        .ok_or_else(|| Error::Invalid(format!("unknown state code: {state}")))?;
    let local = DateTime::from_timestamp(ts.saturating_add(zone.utc_offset_seconds(ts)), 0)
        .ok_or_else(|| Error::Invalid(format!("timestamp out of range: {ts}")))?;
    Ok(LocalTime {
        hour: local.hour() as u8,
        dow: local.weekday().num_days_from_monday() as u8,
        month: local.month() as u8,
    })
}

/// One corpus line on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub text: String,
    /// UTC seconds since the epoch.
    pub ts: i64,
    pub author: String,
    /// Two-letter US state postal code.
    pub state: String,
}

/// Context cells a record contributes to and is classified under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub state: String,
    pub hour: u8,
    pub dow: u8,
    pub month: u8,
    pub author: String,
}

/// A record that passed validation and preprocessing, label still optional.
#[derive(Debug, Clone)]
pub struct PreparedRecord {
    pub tokens: Vec<String>,
    pub label: Option<Polarity>,
    pub context: Context,
}

/// A labeled training/evaluation record.
#[derive(Debug, Clone)]
pub struct LabeledTweet {
    pub tokens: Vec<String>,
    pub label: Polarity,
    pub context: Context,
}

/// First timestamp accepted by default: 2007-01-01T00:00:00Z, the start of
/// the DST schedule this crate implements.
pub const MIN_SUPPORTED_TS: i64 = 1_167_609_600;

/// First timestamp rejected by default: 2100-01-01T00:00:00Z.
pub const MAX_SUPPORTED_TS: i64 = 4_102_444_800;

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Abort on the first malformed line instead of counting it.
    pub strict: bool,
    /// Accepted timestamp range, half-open.
    pub min_ts: i64,
    pub max_ts: i64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            strict: false,
            min_ts: MIN_SUPPORTED_TS,
            max_ts: MAX_SUPPORTED_TS,
        }
    }
}

/// Per-line accounting. Every input line lands in exactly one of: accepted,
/// malformed, or one of the discard buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub lines: u64,
    pub accepted: u64,
    pub malformed: u64,
    /// Well-formed but no emoticon.
    pub discarded_no_label: u64,
    /// Both emoticon polarities present.
    pub discarded_conflict: u64,
    /// No tokens left after preprocessing.
    pub discarded_empty: u64,
    pub positive: u64,
    pub negative: u64,
}

impl IngestStats {
    /// Fraction of accepted records labeled Positive; 0 when nothing was
    /// accepted.
    pub fn positive_share(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.positive as f64 / self.accepted as f64
        }
    }
}

/// Validates one line and runs preprocessing. Err carries the malformed
/// reason. Besides the record, returns the positive/negative emoticon counts
/// so callers can tell "no emoticon" from "conflicting emoticons".
fn prepare_line(
    line: &str,
    opts: &IngestOptions,
) -> std::result::Result<(PreparedRecord, u32, u32), String> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| format!("invalid record json: {e}"))?;
    if zone_for_state(&raw.state).is_none() {
        return Err(format!("unknown state code: {:?}", raw.state));
    }
    if raw.ts < opts.min_ts || raw.ts >= opts.max_ts {
        return Err(format!("timestamp {} outside accepted range", raw.ts));
    }
    if raw.text.trim().is_empty() {
        return Err("empty text".to_owned());
    }
    if raw.author.is_empty() {
        return Err("empty author".to_owned());
    }
    // Authors become keys in line-oriented report and model files.
    if raw.author.contains(['\n', '\r']) {
        return Err("author contains line breaks".to_owned());
    }
    let local = localize(raw.ts, &raw.state).expect("state and ts validated above");
    let (_, positive, negative) = scan_emoticons(&raw.text);
    let label = match (positive > 0, negative > 0) {
        (true, false) => Some(Polarity::Positive),
        (false, true) => Some(Polarity::Negative),
        _ => None,
    };
    let record = PreparedRecord {
        tokens: preprocess::preprocess(&raw.text),
        label,
        context: Context {
            state: raw.state,
            hour: local.hour,
            dow: local.dow,
            month: local.month,
            author: raw.author,
        },
    };
    Ok((record, positive, negative))
}

/// Reads a JSONL corpus into labeled records plus per-line accounting.
/// Records without a clean emoticon label or without tokens are dropped and
/// counted; malformed lines are counted, or abort under `strict`.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    opts: &IngestOptions,
) -> Result<(Vec<LabeledTweet>, IngestStats)> {
    let mut records = Vec::new();
    let mut stats = IngestStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        stats.lines += 1;
        let (prepared, positive, negative) = match prepare_line(&line, opts) {
            Ok(p) => p,
            Err(reason) => {
                if opts.strict {
                    return Err(Error::Malformed {
                        line: idx + 1,
                        reason,
                    });
                }
                stats.malformed += 1;
                continue;
            }
        };
        let label = match (positive > 0, negative > 0) {
            (true, false) => Polarity::Positive,
            (false, true) => Polarity::Negative,
            (true, true) => {
                stats.discarded_conflict += 1;
                continue;
            }
            (false, false) => {
                stats.discarded_no_label += 1;
                continue;
            }
        };
        if prepared.tokens.is_empty() {
            stats.discarded_empty += 1;
            continue;
        }
        stats.accepted += 1;
        match label {
            Polarity::Positive => stats.positive += 1,
            Polarity::Negative => stats.negative += 1,
        }
        records.push(LabeledTweet {
            tokens: prepared.tokens,
            label,
            context: prepared.context,
        });
    }
    Ok((records, stats))
}

/// File-path convenience wrapper around [`ingest_reader`].
pub fn ingest<P: AsRef<Path>>(
    path: P,
    opts: &IngestOptions,
) -> Result<(Vec<LabeledTweet>, IngestStats)> {
    let file = crate::open_file(path.as_ref())?;
    ingest_reader(BufReader::new(file), opts)
}

/// Reads a corpus for classification: every well-formed record is kept, with
/// or without a label, even if it has no tokens. Returns the records and the
/// malformed-line count.
pub fn load_unlabeled_reader<R: BufRead>(
    reader: R,
    opts: &IngestOptions,
) -> Result<(Vec<PreparedRecord>, u64)> {
    let mut records = Vec::new();
    let mut malformed = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        match prepare_line(&line, opts) {
            Ok((record, _, _)) => records.push(record),
            Err(reason) => {
                if opts.strict {
                    return Err(Error::Malformed {
                        line: idx + 1,
                        reason,
                    });
                }
                malformed += 1;
            }
        }
    }
    Ok((records, malformed))
}

/// File-path convenience wrapper around [`load_unlabeled_reader`].
pub fn load_unlabeled<P: AsRef<Path>>(
    path: P,
    opts: &IngestOptions,
) -> Result<(Vec<PreparedRecord>, u64)> {
    let file = crate::open_file(path.as_ref())?;
    load_unlabeled_reader(BufReader::new(file), opts)
}
