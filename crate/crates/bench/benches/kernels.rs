use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use anongame::anon_solver::ptas_solve;
use anongame::discretizer::discretize_profile;
use anongame::game_model::{random_game, random_profile};
use anongame::guard::Guard;
use anongame::multinomial_dist::sum_distribution;
use anongame::numeric::rat;
use anongame::TdpTree;

fn sum_dist(c: &mut Criterion) {
    let mut group = c.benchmark_group("sum_distribution_f64");
    for &n in &[8usize, 32, 128] {
        let prof = random_profile(n, 3, 7).to_f64();
        group.bench_with_input(BenchmarkId::from_parameter(n), &prof, |b, p| {
            b.iter(|| sum_distribution(3, black_box(p)).unwrap())
        });
    }
    group.finish();
}

fn tdp_build(c: &mut Criterion) {
    let prof = random_profile(1, 8, 3);
    let p = prof.player(0).to_vec();
    c.bench_function("tdp_build_k8", |b| b.iter(|| TdpTree::from_distribution(black_box(&p)).unwrap()));
}

fn discretize(c: &mut Criterion) {
    let prof = random_profile(64, 4, 11);
    let alpha = rat(3, 5);
    c.bench_function("discretize_n64_k4", |b| b.iter(|| discretize_profile(black_box(&prof), 20, &alpha).unwrap()));
}

fn ptas(c: &mut Criterion) {
    let game = random_game(3, 2, 5).unwrap();
    let eps = rat(1, 4);
    let guard = Guard::default();
    c.bench_function("ptas_n3_k2_z2", |b| b.iter(|| ptas_solve(black_box(&game), &eps, 2, &guard).unwrap()));
}

criterion_group!(benches, sum_dist, tdp_build, discretize, ptas);
criterion_main!(benches);
