use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resistor_sep::exclusion::{simulate, BoundarySpec, ExclusionSystem, SimOptions};
use resistor_sep::exclusion::Configuration;
use resistor_sep::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};
use resistor_sep::harness::mpl_psd_check;
use resistor_sep::potential::{effective_resistance_pair, stationary_marginal, trace_network};
use resistor_sep::rng::stream_rng;

fn resistance(c: &mut Criterion) {
    let mut group = c.benchmark_group("effective_resistance");
    for level in [3, 4, 5] {
        let fg = generate(Family::Sg(level), DEFAULT_VERTEX_BUDGET).unwrap();
        group.bench_with_input(BenchmarkId::new("sg", level), &fg, |b, fg| {
            b.iter(|| effective_resistance_pair(&fg.graph, fg.corners[0], fg.corners[1]).unwrap())
        });
    }
    group.finish();
}

fn trace_and_marginal(c: &mut Criterion) {
    let fg = generate(Family::Sg(4), DEFAULT_VERTEX_BUDGET).unwrap();
    c.bench_function("trace_network/sg4", |b| b.iter(|| trace_network(&fg.graph, &fg.corners).unwrap()));
    let entries: Vec<_> = fg.corners.iter().zip([2.0, 1.0, 0.5]).map(|(&v, lp)| (v, lp, 1.0)).collect();
    let spec = BoundarySpec::new(&fg.graph, &entries).unwrap();
    c.bench_function("stationary_marginal/sg4", |b| b.iter(|| stationary_marginal(&fg.graph, &spec).unwrap()));
}

fn mpl(c: &mut Criterion) {
    let g = generate(Family::Sg(1), DEFAULT_VERTEX_BUDGET).unwrap().graph;
    c.bench_function("mpl_psd_check/sg1", |b| b.iter(|| mpl_psd_check(&g, 0, 4, 0.5).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let fg = generate(Family::Sg(4), DEFAULT_VERTEX_BUDGET).unwrap();
    let entries: Vec<_> = fg.corners.iter().map(|&v| (v, 1.0, 1.0)).collect();
    let spec = BoundarySpec::new(&fg.graph, &entries).unwrap();
    let sys = ExclusionSystem::from_graph(&fg.graph, Some(&spec));
    let n = fg.graph.vertex_count();
    let eta0 = Configuration::from_bools(&(0..n).map(|i| i % 2 == 0).collect::<Vec<_>>());
    let opts = SimOptions { time_scale: 1.0, horizon: 5.0, record_events: false };
    let mut i = 0;
    c.bench_function("simulate/sg4", |b| {
        b.iter(|| {
            let mut rng = stream_rng(0, "bench", i);
            i += 1;
            simulate(&sys, &eta0, opts, &mut (), &mut rng).unwrap()
        })
    });
}

criterion_group!(benches, resistance, trace_and_marginal, mpl, simulation);
criterion_main!(benches);
