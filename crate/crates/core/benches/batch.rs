use criterion::{criterion_group, criterion_main, Criterion};
use lilgym_core::dataio::{generate_fixtures, FixtureOptions, MdpSpec};
use lilgym_core::harness::{self, PolicyKind, RolloutOptions};
use lilgym_core::par::Execution;

fn batch(c: &mut Criterion) {
    let ds = generate_fixtures(&FixtureOptions::new(7, 10));
    let configure = |m: &MdpSpec| m.env_config();
    let mut group = c.benchmark_group("rollout_batch");
    group.sample_size(10);
    for (policy, episodes) in [(PolicyKind::Random, 25), (PolicyKind::Oracle, 2)] {
        let jobs = harness::plan_jobs(&ds.mdps, episodes, 0);
        for execution in [Execution::Sequential, Execution::Parallel] {
            group.bench_function(format!("{policy:?}/{execution:?}"), |b| {
                b.iter(|| harness::rollout_batch(&ds.mdps, &jobs, policy, &configure, RolloutOptions::default(), execution))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
