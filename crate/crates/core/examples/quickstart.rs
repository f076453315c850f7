//! Generate a small synthetic corpus, train a contextual classifier on it,
//! and show how the same words score differently under different contexts.
//!
//! Run from the workspace root:
//!
//! ```text
//! cargo run -p valence --example quickstart
//! ```

use valence::classifier::{ClassifierOptions, Mode, SentimentClassifier};
use valence::corpus::{ingest_reader, Context, IngestOptions};
use valence::preprocess::preprocess;
use valence::priors::CategorySet;
use valence::synth::{generate, write_corpus, SynthConfig};

fn main() -> valence::Result<()> {
    // A corpus with a mild lexical signal and a strong state effect.
    let config = SynthConfig::parse(
        "n_tweets = 4000\n\
         seed = 11\n\
         word.glad = 3 1\n\
         word.awful = 1 3\n\
         word.today = 2 2\n\
         word.commute = 2 2\n\
         effect.state.CA = 1.5\n\
         effect.state.TX = -1.5\n",
    )?;
    let mut corpus = Vec::new();
    write_corpus(&generate(&config)?, &mut corpus)?;
    let (records, stats) = ingest_reader(corpus.as_slice(), &IngestOptions::default())?;
    eprintln!(
        "ingested {} of {} generated records",
        stats.accepted, stats.lines
    );

    let opts = ClassifierOptions {
        mode: Mode::Contextual(CategorySet::all()),
        min_author_tweets: 2,
        ..ClassifierOptions::default()
    };
    let classifier = SentimentClassifier::train(&records, &opts)?;

    let tokens = preprocess("glad about the commute today");
    let ctx = |state: &str| Context {
        state: state.into(),
        hour: 9,
        dow: 2,
        month: 6,
        author: "someone-new".into(),
    };
    for (what, context) in [
        ("no context", None),
        ("from CA", Some(ctx("CA"))),
        ("from TX", Some(ctx("TX"))),
    ] {
        let p = classifier.classify(&tokens, context.as_ref());
        println!("{what:<12} {}\t{:+.3}", p.label, p.margin);
    }
    Ok(())
}
