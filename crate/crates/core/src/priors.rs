//! Context priors: class priors and per-category conditional likelihoods.
//!
//! Five categories describe where, when, and by whom a post was written:
//! state, hour of day, day of week, month, and author. A fitted
//! [`ContextTable`] holds positive/negative counts per cell and turns them
//! into smoothed log-likelihoods `log P(cell | label)` with Laplace α = 1:
//!
//! ```text
//! P(cell | label) = (count(cell, label) + 1) / (total(label) + #cells)
//! ```
//!
//! The first four categories have fixed cell universes (50 states, 24 hours,
//! 7 days, 12 months). Authors are an open universe: `#cells` is the number
//! of distinct authors observed, and an author with fewer than
//! `min_author_tweets` posts (or never seen) contributes a neutral factor of
//! log 1 = 0, so sparse authors cannot sway the decision.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::corpus::{Context, LabeledTweet, Polarity, STATE_CODES};
use crate::{Error, Result};

/// Number of posts an author needs before their prior participates in
/// classification.
pub const DEFAULT_MIN_AUTHOR_TWEETS: u64 = 50;

/// The five context categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    State,
    Hour,
    Dow,
    Month,
    Author,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::State,
        Category::Hour,
        Category::Dow,
        Category::Month,
        Category::Author,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::State => "state",
            Category::Hour => "hour",
            Category::Dow => "dow",
            Category::Month => "month",
            Category::Author => "author",
        }
    }

    pub fn from_name(name: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A subset of the five categories, e.g. the contextual variables a
/// classifier conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CategorySet {
    bits: u8,
}

impl CategorySet {
    pub fn empty() -> CategorySet {
        CategorySet { bits: 0 }
    }

    pub fn all() -> CategorySet {
        Category::ALL
            .into_iter()
            .fold(CategorySet::empty(), CategorySet::with)
    }

    pub fn with(self, category: Category) -> CategorySet {
        CategorySet {
            bits: self.bits | 1 << category as u8,
        }
    }

    pub fn without(self, category: Category) -> CategorySet {
        CategorySet {
            bits: self.bits & !(1 << category as u8),
        }
    }

    pub fn contains(self, category: Category) -> bool {
        self.bits & 1 << category as u8 != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Category> {
        Category::ALL.into_iter().filter(move |&c| self.contains(c))
    }

    /// Parses a comma-separated category list such as "state,hour".
    pub fn parse(s: &str) -> Result<CategorySet> {
        let mut set = CategorySet::empty();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let category = Category::from_name(part)
                .ok_or_else(|| Error::Config(format!("unknown category: {part:?}")))?;
            set = set.with(category);
        }
        Ok(set)
    }
}

impl std::fmt::Display for CategorySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for category in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            f.write_str(category.name())?;
            first = false;
        }
        Ok(())
    }
}

/// Positive/negative tallies for one cell (or the whole corpus).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCounts {
    pub positive: u64,
    pub negative: u64,
}

impl CellCounts {
    pub fn total(self) -> u64 {
        self.positive + self.negative
    }

    pub fn get(self, label: Polarity) -> u64 {
        match label {
            Polarity::Positive => self.positive,
            Polarity::Negative => self.negative,
        }
    }

    fn bump(&mut self, label: Polarity) {
        match label {
            Polarity::Positive => self.positive += 1,
            Polarity::Negative => self.negative += 1,
        }
    }

    /// Mean of the +1/-1 label scores in this cell.
    pub fn average_sentiment(self) -> f64 {
        (self.positive as f64 - self.negative as f64) / self.total() as f64
    }
}

/// Context fields a single classification conditions on; None fields
/// contribute nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContextQuery<'a> {
    pub state: Option<&'a str>,
    pub hour: Option<u8>,
    pub dow: Option<u8>,
    pub month: Option<u8>,
    pub author: Option<&'a str>,
}

impl<'a> ContextQuery<'a> {
    /// Restricts a full context to the given categories.
    pub fn from_context(context: &'a Context, categories: CategorySet) -> ContextQuery<'a> {
        ContextQuery {
            state: categories
                .contains(Category::State)
                .then_some(context.state.as_str()),
            hour: categories.contains(Category::Hour).then_some(context.hour),
            dow: categories.contains(Category::Dow).then_some(context.dow),
            month: categories
                .contains(Category::Month)
                .then_some(context.month),
            author: categories
                .contains(Category::Author)
                .then_some(context.author.as_str()),
        }
    }
}

/// One row of a category report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub cell: String,
    /// Mean +1/-1 label score; 0.0 for cells with no posts.
    pub average_sentiment: f64,
    pub count: u64,
}

/// Fitted per-category sentiment counts. Immutable once fitted; all reads
/// are lock-free.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    state: BTreeMap<String, CellCounts>,
    hour: [CellCounts; 24],
    dow: [CellCounts; 7],
    month: [CellCounts; 12],
    author: BTreeMap<String, CellCounts>,
    totals: CellCounts,
    min_author_tweets: u64,
}

impl ContextTable {
    /// Tallies every record into one cell per category. Errors on an empty
    /// corpus. Hour, day-of-week, and month fields must be in range, which
    /// ingestion guarantees.
    pub fn fit<'a, I>(records: I, min_author_tweets: u64) -> Result<ContextTable>
    where
        I: IntoIterator<Item = &'a LabeledTweet>,
    {
        let mut table = ContextTable {
            state: BTreeMap::new(),
            hour: [CellCounts::default(); 24],
            dow: [CellCounts::default(); 7],
            month: [CellCounts::default(); 12],
            author: BTreeMap::new(),
            totals: CellCounts::default(),
            min_author_tweets,
        };
        let mut seen = false;
        for record in records {
            seen = true;
            let label = record.label;
            let ctx = &record.context;
            assert!(
                ctx.hour < 24 && ctx.dow < 7 && (1..=12).contains(&ctx.month),
                "context fields out of range: {ctx:?}"
            );
            table
                .state
                .entry(ctx.state.clone())
                .or_default()
                .bump(label);
            table.hour[ctx.hour as usize].bump(label);
            table.dow[ctx.dow as usize].bump(label);
            table.month[ctx.month as usize - 1].bump(label);
            table
                .author
                .entry(ctx.author.clone())
                .or_default()
                .bump(label);
            table.totals.bump(label);
        }
        if !seen {
            return Err(Error::EmptyCorpus);
        }
        Ok(table)
    }

    pub fn totals(&self) -> CellCounts {
        self.totals
    }

    pub fn min_author_tweets(&self) -> u64 {
        self.min_author_tweets
    }

    /// Number of distinct authors observed; the author category's cell
    /// universe.
    pub fn author_universe(&self) -> usize {
        self.author.len()
    }

    /// P(label): share of the corpus carrying `label`.
    pub fn class_prior(&self, label: Polarity) -> f64 {
        self.totals.get(label) as f64 / self.totals.total() as f64
    }

    /// Counts for one cell; None when the cell key is unknown to the
    /// category.
    pub fn cell(&self, category: Category, cell: &str) -> Option<CellCounts> {
        match category {
            Category::State => self.state.get(cell).copied(),
            Category::Hour => indexed(cell, 0, 24).map(|i| self.hour[i]),
            Category::Dow => indexed(cell, 0, 7).map(|i| self.dow[i]),
            Category::Month => indexed(cell, 1, 13).map(|i| self.month[i - 1]),
            Category::Author => self.author.get(cell).copied(),
        }
    }

    /// Mean +1/-1 score of a cell; None when the cell is unknown or empty.
    pub fn average_sentiment(&self, category: Category, cell: &str) -> Option<f64> {
        let counts = self.cell(category, cell)?;
        (counts.total() > 0).then(|| counts.average_sentiment())
    }

    /// Smoothed log P(cell | label) for one category. `observed` is this
    /// cell's counts (None for a never-seen cell) and `universe` the number
    /// of cells in the category.
    fn smoothed(&self, observed: Option<CellCounts>, universe: usize, label: Polarity) -> f64 {
        let count = observed.map_or(0, |c| c.get(label));
        let total = self.totals.get(label);
        ((count + 1) as f64 / (total as f64 + universe as f64)).ln()
    }

    /// Σ over present categories of log P(cell | label). Below-threshold or
    /// unseen authors contribute exactly 0 so they cannot affect decisions.
    pub fn context_log_likelihood(&self, query: &ContextQuery<'_>, label: Polarity) -> f64 {
        let mut sum = 0.0;
        if let Some(state) = query.state {
            sum += self.smoothed(self.state.get(state).copied(), STATE_CODES.len(), label);
        }
        if let Some(hour) = query.hour {
            sum += self.smoothed(Some(self.hour[hour as usize]), 24, label);
        }
        if let Some(dow) = query.dow {
            sum += self.smoothed(Some(self.dow[dow as usize]), 7, label);
        }
        if let Some(month) = query.month {
            sum += self.smoothed(Some(self.month[month as usize - 1]), 12, label);
        }
        if let Some(author) = query.author {
            if let Some(counts) = self.author.get(author) {
                if counts.total() >= self.min_author_tweets {
                    sum += self.smoothed(Some(*counts), self.author.len(), label);
                }
            }
        }
        sum
    }

    /// All cells of a category in deterministic order: the full universe for
    /// the fixed categories (empty cells report average 0.0), observed
    /// authors for the open one.
    pub fn report(&self, category: Category) -> Vec<ReportRow> {
        let row = |cell: String, counts: CellCounts| ReportRow {
            cell,
            average_sentiment: if counts.total() == 0 {
                0.0
            } else {
                counts.average_sentiment()
            },
            count: counts.total(),
        };
        match category {
            Category::State => STATE_CODES
                .iter()
                .map(|&code| {
                    row(
                        code.to_owned(),
                        self.state.get(code).copied().unwrap_or_default(),
                    )
                })
                .collect(),
            Category::Hour => (0..24).map(|h| row(h.to_string(), self.hour[h])).collect(),
            Category::Dow => (0..7).map(|d| row(d.to_string(), self.dow[d])).collect(),
            Category::Month => (1..=12)
                .map(|m| row(m.to_string(), self.month[m - 1]))
                .collect(),
            Category::Author => self
                .author
                .iter()
                .map(|(name, &counts)| row(name.clone(), counts))
                .collect(),
        }
    }

    /// Writes a category report as CSV.
    pub fn write_report_csv<W: Write>(&self, category: Category, mut w: W) -> Result<()> {
        writeln!(w, "cell,avg_sentiment,count")?;
        for row in self.report(category) {
            writeln!(
                w,
                "{},{},{}",
                csv_escape(&row.cell),
                row.average_sentiment,
                row.count
            )?;
        }
        Ok(())
    }

    /// Writes the table as line-oriented text; [`ContextTable::load`] reads
    /// it back exactly and resaving is byte-identical.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "context-priors v1")?;
        writeln!(w, "min_author_tweets {}", self.min_author_tweets)?;
        writeln!(
            w,
            "totals {} {}",
            self.totals.positive, self.totals.negative
        )?;
        let write_map = |w: &mut W, name: &str, map: &BTreeMap<String, CellCounts>| -> Result<()> {
            writeln!(w, "{name} {}", map.len())?;
            for (cell, counts) in map {
                writeln!(w, "{cell} {} {}", counts.positive, counts.negative)?;
            }
            Ok(())
        };
        write_map(&mut w, "state", &self.state)?;
        let write_fixed = |w: &mut W, name: &str, cells: &[CellCounts]| -> Result<()> {
            writeln!(w, "{name} {}", cells.len())?;
            for counts in cells {
                writeln!(w, "{} {}", counts.positive, counts.negative)?;
            }
            Ok(())
        };
        write_fixed(&mut w, "hour", &self.hour)?;
        write_fixed(&mut w, "dow", &self.dow)?;
        write_fixed(&mut w, "month", &self.month)?;
        write_map(&mut w, "author", &self.author)?;
        Ok(())
    }

    /// Reads a table written by [`ContextTable::save`].
    pub fn load<R: BufRead>(r: R) -> Result<ContextTable> {
        let mut reader = LineReader { lines: r.lines() };
        let header = reader.next("header")?;
        if header != "context-priors v1" {
            return Err(Error::Format(format!("unsupported header: {header:?}")));
        }
        let min_author_tweets =
            parse_field(&reader.next("min_author_tweets")?, "min_author_tweets")?;
        let totals_line = reader.next("totals")?;
        let rest = totals_line
            .strip_prefix("totals ")
            .ok_or_else(|| Error::Format(format!("expected totals line, got {totals_line:?}")))?;
        let totals = parse_counts_pair(rest)?;

        let state = read_cell_map(&mut reader, "state")?;
        for key in state.keys() {
            if !STATE_CODES.contains(&key.as_str()) {
                return Err(Error::Format(format!("unknown state cell: {key:?}")));
            }
        }
        let hour = read_fixed_cells(&mut reader, "hour", 24)?;
        let dow = read_fixed_cells(&mut reader, "dow", 7)?;
        let month = read_fixed_cells(&mut reader, "month", 12)?;
        let author = read_cell_map(&mut reader, "author")?;
        if reader.lines.next().transpose()?.is_some() {
            return Err(Error::Format("trailing content after authors".to_owned()));
        }

        let table = ContextTable {
            state,
            hour: hour.try_into().expect("length checked"),
            dow: dow.try_into().expect("length checked"),
            month: month.try_into().expect("length checked"),
            author,
            totals,
            min_author_tweets,
        };
        let sum: u64 = table.state.values().map(|c| c.total()).sum();
        if sum != table.totals.total() {
            return Err(Error::Format(
                "state counts do not sum to totals".to_owned(),
            ));
        }
        Ok(table)
    }
}

fn indexed(cell: &str, lo: usize, hi: usize) -> Option<usize> {
    let i: usize = cell.parse().ok()?;
    (lo..hi).contains(&i).then_some(i)
}

struct LineReader<R: BufRead> {
    lines: std::io::Lines<R>,
}

impl<R: BufRead> LineReader<R> {
    fn next(&mut self, what: &str) -> Result<String> {
        self.lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format(format!("missing {what}")))
    }
}

/// Reads "name N" then N "key pos neg" cell lines.
fn read_cell_map<R: BufRead>(
    reader: &mut LineReader<R>,
    name: &str,
) -> Result<BTreeMap<String, CellCounts>> {
    let n: usize = parse_field(&reader.next(name)?, name)?;
    let mut map = BTreeMap::new();
    for _ in 0..n {
        let line = reader.next("cell entry")?;
        let (key, counts) = split_cell_line(&line)?;
        if map.insert(key.to_owned(), counts).is_some() {
            return Err(Error::Format(format!("duplicate cell: {key:?}")));
        }
    }
    Ok(map)
}

/// Reads "name N" (N must equal the category's fixed universe) then N
/// "pos neg" lines.
fn read_fixed_cells<R: BufRead>(
    reader: &mut LineReader<R>,
    name: &str,
    len: usize,
) -> Result<Vec<CellCounts>> {
    let n: usize = parse_field(&reader.next(name)?, name)?;
    if n != len {
        return Err(Error::Format(format!(
            "{name} must have {len} cells, got {n}"
        )));
    }
    (0..len)
        .map(|_| parse_counts_pair(&reader.next("cell counts")?))
        .collect()
}

fn parse_field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let rest = line
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected {key:?} line, got {line:?}")))?;
    rest.parse()
        .map_err(|e| Error::Format(format!("bad value {rest:?}: {e}")))
}

fn parse_counts_pair(s: &str) -> Result<CellCounts> {
    let mut parts = s.split(' ');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(p), Some(n), None) => Ok(CellCounts {
            positive: p
                .parse()
                .map_err(|e| Error::Format(format!("bad count {p:?}: {e}")))?,
            negative: n
                .parse()
                .map_err(|e| Error::Format(format!("bad count {n:?}: {e}")))?,
        }),
        _ => Err(Error::Format(format!("bad counts pair: {s:?}"))),
    }
}

/// Splits "key pos neg" from the right so keys may contain spaces.
fn split_cell_line(line: &str) -> Result<(&str, CellCounts)> {
    let mut it = line.rsplitn(3, ' ');
    match (it.next(), it.next(), it.next()) {
        (Some(n), Some(p), Some(key)) if !key.is_empty() => Ok((
            key,
            CellCounts {
                positive: p
                    .parse()
                    .map_err(|e| Error::Format(format!("bad count {p:?}: {e}")))?,
                negative: n
                    .parse()
                    .map_err(|e| Error::Format(format!("bad count {n:?}: {e}")))?,
            },
        )),
        _ => Err(Error::Format(format!("bad cell entry: {line:?}"))),
    }
}

/// Quotes a CSV field when it contains a delimiter, quote, or line break.
fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}
