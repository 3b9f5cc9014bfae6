//! Data-parallel hot paths on the global rayon pool versus a one-thread pool.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use defect_sr::constfit::{fit_constants, Dataset, FitConfig};
use defect_sr::expr::{parse, random_valid_sequence, ExprTree, Grammar};
use defect_sr::materials::{evaluate_registry, Material, Target};
use defect_sr::parallel;
use defect_sr::rng::{seeded, substream};
use defect_sr::seqvae::{sample_prior, Decoding, ModelDims, SeqVaeModel};
use defect_sr::synth::{demo_registry, fabricate_structures};
use rayon::ThreadPool;

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn fitting(c: &mut Criterion) {
    let xs: Vec<f64> = (0..32).map(|i| 0.5 + 0.3 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x * (-x).exp()).collect();
    let data = Dataset::univariate(xs, ys, "x", "y").unwrap();
    let mut rng = seeded(1);
    let trees: Vec<ExprTree> = (0..64)
        .map(|_| parse(&random_valid_sequence(&mut rng, 15, &Grammar::default())).unwrap())
        .collect();
    let cfg = FitConfig::default();
    let mut g = c.benchmark_group("fit_64_candidates");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    parallel::map_range(trees.len(), |i| {
                        fit_constants(&trees[i], &data, &cfg, &mut substream(7, 0, i as u64)).mse
                    })
                })
            })
        });
    }
    g.finish();
}

fn decoding(c: &mut Criterion) {
    let model = SeqVaeModel::random(Grammar::default(), ModelDims::default(), &mut seeded(2));
    let mode = Decoding::Sample { temperature: 1.0 };
    let mut g = c.benchmark_group("decode_500_samples");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(sample_prior(&model, 500, mode, 30, 3, 0))))
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let reg = demo_registry();
    let ss = fabricate_structures(Material::MoS2, &reg, 500, 2..=25, &mut seeded(4)).unwrap();
    let mut g = c.benchmark_group("evaluate_500_structures");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(evaluate_registry(&ss, &reg, Target::Formation).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, fitting, decoding, evaluation);
criterion_main!(benches);
