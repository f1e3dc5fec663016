use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rug::Rational;

use tateperiods::curves::fixed_points_multiplier;
use tateperiods::elliptic::{hain_hom, iterated_eisenstein};
use tateperiods::kz::{drinfeld_associator, numeric_transport_oracle};
use tateperiods::mzv::polylog_series;
use tateperiods::periods::assemble_period;
use tateperiods::{Branch, Composition, Endpoint, KzConnection, Move, PathSpec, TangentialPoint};
use tateperiods_bench::sample_graph;

fn series(c: &mut Criterion) {
    c.bench_function("polylog_series (1,2) order 200", |b| {
        b.iter(|| polylog_series(black_box(&Composition(vec![1, 2])), 200))
    });
    c.bench_function("hain_hom N=8", |b| b.iter(|| hain_hom(black_box(8)).unwrap()));
    c.bench_function("iterated_eisenstein (4,0,6) order 100", |b| {
        b.iter(|| iterated_eisenstein(black_box(&[4, 0, 6]), 100).unwrap())
    });
    c.bench_function("drinfeld_associator N=5", |b| b.iter(|| drinfeld_associator(black_box(5))));
}

fn oracle(c: &mut Criterion) {
    let conn = KzConnection::standard(3);
    let from = Endpoint::Tangential(TangentialPoint::new(0, 1).unwrap());
    let to = Endpoint::Point(Rational::from((1, 2)));
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("transport to 1/2, N=3, 20 digits", |b| {
        b.iter(|| numeric_transport_oracle(&conn, &from, black_box(&to), 20).unwrap())
    });
    group.finish();
}

fn curves(c: &mut Criterion) {
    let (g, res) = sample_graph(11, 3, 3);
    c.bench_function("fixed points of the loop, order 6", |b| {
        b.iter(|| fixed_points_multiplier(&g, black_box(&[Branch::edge("l")]), 6).unwrap())
    });
    let path = PathSpec::new(vec![
        Move::Rotation { branch: "e".into(), k: 1 },
        Move::VertexFusing { edge: "e".into(), param: "s".into() },
        Move::LoopTraversal { direction: 1 },
    ]);
    c.bench_function("assemble_period N=3, M=2", |b| {
        b.iter(|| assemble_period(&g, &res, black_box(&path), 3, 2).unwrap())
    });
}

criterion_group!(benches, series, oracle, curves);
criterion_main!(benches);
