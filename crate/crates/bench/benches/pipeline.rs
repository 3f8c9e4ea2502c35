//! Throughput of the generation pipeline stages and response parsing.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use reasonforge_core::kinship::KinshipLinks;
use reasonforge_core::promptkit::{parse_response, render_target};
use reasonforge_core::sampler::{sample_chain_with, sample_split_chain};
use reasonforge_core::taskgen::{build_dataset, default_graph_iterations};
use reasonforge_core::{grow_graph, seed, DatasetSpec, GrowthConfig, PromptStyle, Task};

fn growth(c: &mut Criterion) {
    for task in [Task::Kinship, Task::Spatial] {
        let config = GrowthConfig::new(task, default_graph_iterations(task), 7);
        c.bench_function(&format!("grow_graph/{task}"), |b| b.iter(|| grow_graph(task, &config).unwrap()));
    }
}

fn sampling(c: &mut Criterion) {
    let kin = grow_graph(Task::Kinship, &GrowthConfig::new(Task::Kinship, 3, 7)).unwrap();
    let grid = grow_graph(Task::Spatial, &GrowthConfig::new(Task::Spatial, 3, 7)).unwrap();
    let mut s = 0;
    c.bench_function("sample/kinship-6", |b| {
        b.iter_batched(
            || {
                s += 1;
                seed::rng(s)
            },
            |mut rng| sample_split_chain(&kin, 6, 20, &mut rng, &KinshipLinks),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("sample/spatial-6", |b| {
        b.iter_batched(|| seed::rng(3), |mut rng| sample_chain_with(&grid, 6, 1000, &mut rng), BatchSize::SmallInput)
    });
}

fn datasets(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_dataset");
    group.sample_size(10);
    for task in [Task::Kinship, Task::Spatial] {
        let spec = DatasetSpec::uniform(task, 2..=10, 20, 1);
        group.bench_function(task.to_string(), |b| b.iter(|| build_dataset(&spec).unwrap()));
    }
    group.finish();
}

fn parsing(c: &mut Criterion) {
    let data = build_dataset(&DatasetSpec::uniform(Task::Spatial, 10..=10, 1, 4)).unwrap();
    let target = render_target(&data[0], PromptStyle::ExtractThenAnswer);
    c.bench_function("parse_response/eta-10", |b| b.iter(|| parse_response(&target, PromptStyle::ExtractThenAnswer, Task::Spatial).unwrap()));
}

criterion_group!(benches, growth, sampling, datasets, parsing);
criterion_main!(benches);
