//! Benchmarks for the three hot stages: text normalization, training, and
//! batch classification. Run with the default features for the rayon code
//! paths, then with `--no-default-features` for the sequential fallback to
//! compare the two; with the parallel feature enabled, the classify and
//! evaluate groups additionally pit a single-thread pool against the default
//! pool inside one run.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use valence::classifier::{ClassifierOptions, Mode, SentimentClassifier};
use valence::corpus::{self, IngestOptions, LabeledTweet, RawRecord};
use valence::eval::{evaluate, kfold, EvalSpec, ModelKind};
use valence::priors::CategorySet;
use valence::synth::{self, SynthConfig};

const BENCH_CONFIG: &str = "\
n_tweets = 5000
seed = 4242
base_positive_rate = 0.62
len_min = 3
len_max = 12
n_authors = 200
zipf_exponent = 1.05
author_effect_sd = 1.0
word.good = 2 1
word.great = 2 1
word.love = 2 1
word.bad = 1 2
word.sad = 1 2
word.hate = 1 2
word.today = 1 1
word.work = 1 1
word.movie = 1 1
word.coffee = 1 1
effect.state.CA = 1.5
effect.state.TX = -1.5
effect.hour.9 = 0.8
effect.hour.22 = -0.8
";

fn raw_records() -> Vec<RawRecord> {
    let config = SynthConfig::parse(BENCH_CONFIG).expect("static config parses");
    synth::generate(&config).expect("generation succeeds")
}

fn labeled_corpus() -> Vec<LabeledTweet> {
    let records = raw_records();
    let mut raw = Vec::new();
    synth::write_corpus(&records, &mut raw).expect("in-memory write succeeds");
    let (corpus, _) = corpus::ingest_reader(raw.as_slice(), &IngestOptions::default())
        .expect("generated corpus ingests cleanly");
    corpus
}

fn contextual_options() -> ClassifierOptions {
    ClassifierOptions {
        mode: Mode::Contextual(CategorySet::all()),
        ..ClassifierOptions::default()
    }
}

fn bench_preprocess(c: &mut Criterion) {
    let texts: Vec<String> = raw_records().into_iter().map(|r| r.text).collect();
    let mut group = c.benchmark_group("preprocess");
    group.throughput(Throughput::Elements(texts.len() as u64));
    group.bench_function("normalize_5k_posts", |b| {
        b.iter(|| {
            texts
                .iter()
                .map(|t| valence::preprocess::preprocess(t).len())
                .sum::<usize>()
        })
    });
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let corpus = labeled_corpus();
    let opts = contextual_options();
    let mut group = c.benchmark_group("train");
    group.throughput(Throughput::Elements(corpus.len() as u64));
    group.sample_size(20);
    group.bench_function("contextual_5k_records", |b| {
        b.iter(|| SentimentClassifier::train(corpus.iter(), &opts).unwrap())
    });
    group.finish();
}

fn bench_classify(c: &mut Criterion) {
    let corpus = labeled_corpus();
    let opts = contextual_options();
    let classifier = SentimentClassifier::train(corpus.iter(), &opts).unwrap();

    let mut group = c.benchmark_group("classify");
    group.throughput(Throughput::Elements(corpus.len() as u64));
    group.bench_function("batch_5k_records", |b| {
        b.iter(|| classifier.classify_batch(&corpus))
    });

    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("batch_5k_records_one_thread", |b| {
            b.iter(|| single.install(|| classifier.classify_batch(&corpus)))
        });
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let corpus = labeled_corpus();
    let plan = kfold(corpus.len(), 5, 7).unwrap();
    let spec = EvalSpec {
        model: ModelKind::Contextual(CategorySet::all()),
        ..EvalSpec::default()
    };

    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    group.bench_function("five_fold_5k_records", |b| {
        b.iter(|| evaluate(&spec, &corpus, &plan).unwrap())
    });

    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("five_fold_5k_records_one_thread", |b| {
            b.iter(|| single.install(|| evaluate(&spec, &corpus, &plan).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_preprocess,
    bench_train,
    bench_classify,
    bench_evaluate
);
criterion_main!(benches);
