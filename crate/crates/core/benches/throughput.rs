use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plancycle::curation::filter_valid_with;
use plancycle::generators::{gen_taskset_with, oracle_plans, DomainId};
use plancycle::par::Execution;
use plancycle::policy::{FinishReason, Trace, Usage};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn validation(c: &mut Criterion) {
    let set = gen_taskset_with(DomainId::Blocksworld, 400, 1, &Default::default(), Execution::Parallel).unwrap();
    let traces: Vec<Trace> = set
        .tasks
        .iter()
        .zip(oracle_plans(&set, Execution::Parallel))
        .map(|(t, p)| {
            let raw = format!("<think>\nok\n</think>\n```\n{}```\n", p.unwrap().to_text());
            Trace::from_raw(&t.task_id, 0, 0, raw, FinishReason::Stop, Usage::default(), 0, 0)
        })
        .collect();
    let mut g = c.benchmark_group("validate_400_traces");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| filter_valid_with(&traces, &set, exec).len())
        });
    }
    g.finish();
}

fn oracles(c: &mut Criterion) {
    let set = gen_taskset_with(DomainId::Rovers, 100, 2, &Default::default(), Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("rovers_oracle_100_tasks");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| oracle_plans(&set, exec).len())
        });
    }
    g.finish();
}

criterion_group!(benches, validation, oracles);
criterion_main!(benches);
