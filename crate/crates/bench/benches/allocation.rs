use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multicell_bench::network_mimo_scenario;
use multicell_core::dual::{solve_p2, P2Options, QosTargets};
use multicell_core::param::{realize_allocation, rescale_full_power, DualParams};
use multicell_core::strategies::{coordinated_zf, cvsinr, dvsinr};
use multicell_core::QualityFunction;

fn bench_realize(c: &mut Criterion) {
    let mut group = c.benchmark_group("realize_allocation");
    for &(num_tx, num_rx) in &[(2usize, 2usize), (2, 4), (4, 8)] {
        let scenario = network_mimo_scenario(num_tx, num_rx, 1, 11).unwrap();
        let omega = vec![1.0 / num_tx as f64; num_tx];
        let lambda = vec![vec![0.5]; num_rx];
        let duals = DualParams::new(omega, lambda).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{num_tx}tx_{num_rx}rx")),
            &scenario,
            |b, s| {
                b.iter(|| {
                    let ra = realize_allocation(&duals, s).unwrap();
                    rescale_full_power(&ra, &s.pcs)
                })
            },
        );
    }
    group.finish();
}

fn bench_solve_p2(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_p2");
    group.sample_size(20);
    for &(num_tx, num_rx) in &[(2usize, 2usize), (2, 4)] {
        let scenario = network_mimo_scenario(num_tx, num_rx, 1, 23).unwrap();
        let targets = QosTargets::uniform(1.0, num_rx, 1).unwrap();
        let opts = P2Options::default();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{num_tx}tx_{num_rx}rx")),
            &scenario,
            |b, s| b.iter(|| solve_p2(&targets, s, &opts).unwrap()),
        );
    }
    group.finish();
}

fn bench_strategies(c: &mut Criterion) {
    let mut group = c.benchmark_group("strategies");
    group.sample_size(20);
    let scenario = network_mimo_scenario(2, 4, 2, 37).unwrap();
    let weights = vec![1.0; 4];
    let qf = QualityFunction::Rate;
    group.bench_function("cvsinr_2tx_4rx_2sc", |b| {
        b.iter(|| cvsinr(&scenario, &weights, qf, None).unwrap())
    });
    group.bench_function("dvsinr_2tx_4rx_2sc", |b| {
        b.iter(|| dvsinr(&scenario, &weights, qf, None, None).unwrap())
    });
    group.bench_function("coordinated_zf_2tx_4rx_2sc", |b| {
        b.iter(|| coordinated_zf(&scenario, &weights, qf, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_realize, bench_solve_p2, bench_strategies);
criterion_main!(benches);
