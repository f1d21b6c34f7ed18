//! Benchmarks over the bundled grid scenario: controller synthesis,
//! successor enumeration, canonicalization, exhaustive exploration, and the
//! full correspondence check on the three-substation chain.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use gridproto::corpus::{scenario_corpus, simple_chain_corpus};
use gridproto::correspond::check_bounded;
use gridproto::dist::canonical_network;
use gridproto::project::project_network;
use gridproto::semantics::{explore, successors, ExploreOptions};

fn bench_projection(c: &mut Criterion) {
    let corpus = scenario_corpus();
    let config = corpus.configuration();
    c.bench_function("project scenario network", |b| {
        b.iter(|| project_network(black_box(&config)).unwrap())
    });
}

fn bench_successors(c: &mut Criterion) {
    let corpus = scenario_corpus();
    let config = corpus.configuration();
    c.bench_function("scenario successors", |b| {
        b.iter(|| successors(black_box(&config), &corpus.effects).unwrap())
    });
}

fn bench_canonicalization(c: &mut Criterion) {
    let corpus = scenario_corpus();
    let network = project_network(&corpus.configuration()).unwrap();
    c.bench_function("canonicalize scenario network", |b| {
        b.iter(|| canonical_network(black_box(&network)))
    });
}

fn bench_exploration(c: &mut Criterion) {
    let corpus = scenario_corpus();
    let config = corpus.configuration();
    c.bench_function("explore scenario exhaustively", |b| {
        b.iter(|| {
            explore(
                black_box(&config),
                &corpus.effects,
                &ExploreOptions::default(),
            )
            .unwrap()
        })
    });
}

fn bench_correspondence(c: &mut Criterion) {
    let corpus = simple_chain_corpus();
    let config = corpus.configuration();
    c.bench_function("verify chain instance", |b| {
        b.iter(|| check_bounded(black_box(&config), &corpus.effects, None, 100_000).unwrap())
    });
}

criterion_group!(
    benches,
    bench_projection,
    bench_successors,
    bench_canonicalization,
    bench_exploration,
    bench_correspondence
);
criterion_main!(benches);
