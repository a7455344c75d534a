use std::hint::black_box;

use chromapart::mincut::max_flow_min_cut;
use chromapart::{solve_fixed_palette, solve_free_palette, total_energy, FreePaletteOptions, SolveOptions};
use chromapart_bench::{grid_network, scene, scene_palette, stripes};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn mincut(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_flow_min_cut");
    for n in [32, 64] {
        let net = grid_network(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &net, |b, net| b.iter(|| max_flow_min_cut(black_box(net))));
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let inst = scene(64);
    let palette = scene_palette();
    let labeling = stripes(&inst, 3);
    c.bench_function("total_energy/64", |b| b.iter(|| total_energy(&inst, &palette, black_box(&labeling)).unwrap()));
}

fn fixed_palette(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_fixed_palette");
    group.sample_size(20);
    for n in [32, 64] {
        let inst = scene(n);
        let palette = scene_palette();
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| solve_fixed_palette(inst, &palette, &SolveOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn free_palette(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_free_palette");
    group.sample_size(10);
    let inst = scene(64);
    group.bench_function("64/k=3", |b| b.iter(|| solve_free_palette(&inst, 3, &FreePaletteOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, mincut, energy, fixed_palette, free_palette);
criterion_main!(benches);
