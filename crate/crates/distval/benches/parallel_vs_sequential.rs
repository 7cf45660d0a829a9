//! Pairing-grid throughput with the rayon core against a plain serial loop
//! (what the build without the `parallel` feature runs).

use criterion::{criterion_group, criterion_main, Criterion};

use distval::distribution::{translate_scale, Distribution};
use distval::expr::parse;
use distval::mollifier::TestFunction;
use distval::pairing::{pair, PairOptions};
use distval::par;
use distval::pointvalue::default_basis;

fn cell_grid() -> (Distribution, Vec<TestFunction>, Vec<f64>) {
    let f = Distribution::new_1d(parse("sin(1/x)").unwrap(), vec![], false).unwrap();
    let basis = default_basis();
    let grid: Vec<f64> = (0..=12).map(|j| 2f64.powi(-j)).collect();
    (f, basis, grid)
}

fn pairing_cells(c: &mut Criterion) {
    let (f, basis, grid) = cell_grid();
    let opts = PairOptions::default();
    let count = basis.len() * grid.len();
    let work = |k: usize| {
        let (pi, ej) = (k / grid.len(), k % grid.len());
        let zoom = translate_scale(&f, [0.0; 2], grid[ej]).unwrap();
        pair(&zoom, &basis[pi], &opts).value
    };

    let mut g = c.benchmark_group("pairing-cells");
    g.sample_size(10);
    g.bench_function("rayon", |b| b.iter(|| par::map_ordered(count, work)));
    g.bench_function("sequential", |b| {
        b.iter(|| (0..count).map(work).collect::<Vec<f64>>())
    });
    g.finish();
}

criterion_group!(benches, pairing_cells);
criterion_main!(benches);
