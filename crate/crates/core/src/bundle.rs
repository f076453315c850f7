//! On-disk model bundles.
//!
//! A bundle is a directory holding everything `classify` needs:
//!
//! ```text
//! bundle/
//!   meta.txt    format version + preprocessing version tag
//!   pos.lm      positive-class bigram model
//!   neg.lm      negative-class bigram model
//!   priors.txt  context table
//! ```
//!
//! The preprocessing version in meta.txt is checked on load. A model trained
//! under a different tokenization would silently misscore text, so a mismatch
//! is a hard error rather than a warning.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::classifier::{Mode, SentimentClassifier};
use crate::corpus::Polarity;
use crate::ngram::BigramModel;
use crate::preprocess;
use crate::priors::ContextTable;
use crate::{Error, Result};

const META_HEADER: &str = "valence-bundle v1";
const META_FILE: &str = "meta.txt";
const POS_FILE: &str = "pos.lm";
const NEG_FILE: &str = "neg.lm";
const PRIORS_FILE: &str = "priors.txt";

/// The serializable halves of a trained classifier. The classify-time mode is
/// deliberately not stored; it is an inference choice, not a model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub pos: BigramModel,
    pub neg: BigramModel,
    pub table: ContextTable,
}

impl ModelBundle {
    pub fn from_classifier(classifier: &SentimentClassifier) -> ModelBundle {
        ModelBundle {
            pos: classifier.model(Polarity::Positive).clone(),
            neg: classifier.model(Polarity::Negative).clone(),
            table: classifier.table().clone(),
        }
    }

    pub fn into_classifier(self, mode: Mode) -> SentimentClassifier {
        SentimentClassifier::from_parts(self.pos, self.neg, self.table, mode)
    }

    /// Writes the bundle directory, creating it if needed. Existing bundle
    /// files are overwritten.
    pub fn save<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut meta = BufWriter::new(File::create(dir.join(META_FILE))?);
        writeln!(meta, "{META_HEADER}")?;
        writeln!(meta, "preproc {}", preprocess::VERSION)?;
        meta.flush()?;
        self.pos
            .save(BufWriter::new(File::create(dir.join(POS_FILE))?))?;
        self.neg
            .save(BufWriter::new(File::create(dir.join(NEG_FILE))?))?;
        self.table
            .save(BufWriter::new(File::create(dir.join(PRIORS_FILE))?))?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(dir: P) -> Result<ModelBundle> {
        let dir = dir.as_ref();
        let meta = std::io::read_to_string(crate::open_file(&dir.join(META_FILE))?)?;
        let mut lines = meta.lines();
        match lines.next() {
            Some(META_HEADER) => {}
            other => {
                return Err(Error::Format(format!(
                    "unsupported bundle header {other:?}, expected {META_HEADER:?}"
                )))
            }
        }
        match lines.next().and_then(|l| l.strip_prefix("preproc ")) {
            Some(v) if v == preprocess::VERSION.to_string() => {}
            other => {
                return Err(Error::Format(format!(
                    "bundle preprocessing version {other:?} does not match this \
                     binary (version {}); retrain to avoid tokenization drift",
                    preprocess::VERSION
                )))
            }
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing content in bundle meta.txt".into()));
        }
        let open = |name: &str| -> Result<BufReader<File>> {
            Ok(BufReader::new(crate::open_file(&dir.join(name))?))
        };
        Ok(ModelBundle {
            pos: BigramModel::load(open(POS_FILE)?)?,
            neg: BigramModel::load(open(NEG_FILE)?)?,
            table: ContextTable::load(open(PRIORS_FILE)?)?,
        })
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

/// Byte-level equality of two bundle directories, for determinism checks.
pub fn bundles_identical<P: AsRef<Path>, Q: AsRef<Path>>(a: P, b: Q) -> Result<bool> {
    for name in [META_FILE, POS_FILE, NEG_FILE, PRIORS_FILE] {
        if read_file(&a.as_ref().join(name))? != read_file(&b.as_ref().join(name))? {
            return Ok(false);
        }
    }
    Ok(true)
}
