use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ife_core::assembly::assemble_system;
use ife_core::basis::solve_local_basis;
use ife_core::pipeline::{build_space, build_system, RunOptions};
use ife_core::solver::pcg_solve;
use ife_core::ProblemSpec;

fn local_basis(c: &mut Criterion) {
    let p = ProblemSpec::example1(1.0, 100.0).unwrap();
    let space = build_space(&p, &RunOptions::new(8)).unwrap();
    let geoms = &space.cuts.cuts;
    c.bench_function("local basis, all cut elements N=8", |b| {
        b.iter(|| {
            for g in geoms {
                std::hint::black_box(solve_local_basis(g, 1.0, 100.0).unwrap());
            }
        })
    });
}

fn stages(c: &mut Criterion) {
    let p = ProblemSpec::example1(1.0, 100.0).unwrap();
    let mut group = c.benchmark_group("example1");
    group.sample_size(10);
    for n in [8, 16] {
        let options = RunOptions::new(n);
        group.bench_with_input(BenchmarkId::new("space", n), &n, |b, _| b.iter(|| build_space(&p, &options).unwrap()));
        let space = build_space(&p, &options).unwrap();
        group.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, _| {
            b.iter(|| assemble_system(&space, &p, &options.assembly).unwrap())
        });
        let (_, system, _) = build_system(&p, &options).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", n), &n, |b, _| b.iter(|| pcg_solve(&system, &options.solver).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, local_basis, stages);
criterion_main!(benches);
