use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use retail_sim::experiments::{run_sweep, Execution, Experiment, ScenarioConfig};

fn sweep(c: &mut Criterion) {
    let mut base = ScenarioConfig::default();
    base.calendar.weeks = 1.0;
    let spec = Experiment::Empowerment.sweep(&base, 4);

    let mut group = c.benchmark_group("empowerment_sweep_1wk_5x4");
    group.sample_size(10);
    for (name, exec) in [("serial", Execution::Serial), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep(&spec, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
