//! Data-parallel vs sequential throughput on the pipeline's hot batch paths:
//! corpus rendering, perturbation, augmentation, recognizer inference, and
//! gap scoring. The `parallel` feature (default) routes these through rayon;
//! the sequential path here is the fallback used when the feature is
//! disabled.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use strda_core::corpus::{perturb, render_word};
use strda_core::hdge::{ood_levels_batch, TranslationPair};
use strda_core::image::Image;
use strda_core::par;
use strda_core::recognizer::Recognizer;
use strda_core::selftrain::{augment, AugmentPolicy};

const WORDS: [&str; 8] = ["cat", "with", "zebra", "mouse42", "q", "eighty8", "str", "dom"];

fn sample_images(n: usize) -> Vec<Image> {
    (0..n)
        .map(|i| {
            let img = render_word(WORDS[i % WORDS.len()], i % 2, i as u64).unwrap();
            perturb(&img, 0.4, i as u64).unwrap()
        })
        .collect()
}

fn bench_render(c: &mut Criterion) {
    let jobs: Vec<(usize, u64)> = (0..256).map(|i| (i % WORDS.len(), i as u64)).collect();
    let mut group = c.benchmark_group("render_256");
    group.bench_function(BenchmarkId::new("parallel", "rayon"), |b| {
        b.iter(|| {
            black_box(par::map(&jobs, |&(w, s)| {
                render_word(WORDS[w], (s % 2) as usize, s).unwrap()
            }))
        })
    });
    group.bench_function(BenchmarkId::new("sequential", "fallback"), |b| {
        b.iter(|| {
            black_box(par::map_sequential(&jobs, |&(w, s)| {
                render_word(WORDS[w], (s % 2) as usize, s).unwrap()
            }))
        })
    });
    group.finish();
}

fn bench_perturb(c: &mut Criterion) {
    let images = sample_images(128);
    let mut group = c.benchmark_group("perturb_128");
    group.bench_function(BenchmarkId::new("parallel", "rayon"), |b| {
        b.iter(|| black_box(par::map(&images, |img| perturb(img, 0.7, 99).unwrap())))
    });
    group.bench_function(BenchmarkId::new("sequential", "fallback"), |b| {
        b.iter(|| {
            black_box(par::map_sequential(&images, |img| {
                perturb(img, 0.7, 99).unwrap()
            }))
        })
    });
    group.finish();
}

fn bench_augment(c: &mut Criterion) {
    let images = sample_images(128);
    let policy = AugmentPolicy::default();
    let mut group = c.benchmark_group("augment_128");
    group.bench_function(BenchmarkId::new("parallel", "rayon"), |b| {
        b.iter(|| black_box(par::map(&images, |img| augment(img, &policy, 7))))
    });
    group.bench_function(BenchmarkId::new("sequential", "fallback"), |b| {
        b.iter(|| black_box(par::map_sequential(&images, |img| augment(img, &policy, 7))))
    });
    group.finish();
}

fn bench_recognizer_forward(c: &mut Criterion) {
    let images = sample_images(256);
    let refs: Vec<&Image> = images.iter().collect();
    let model = Recognizer::init(1);
    let mut group = c.benchmark_group("recognizer_forward_256");
    group.sample_size(20);
    // `forward` fans chunks out over rayon when the feature is on.
    group.bench_function(BenchmarkId::new("parallel", "chunked"), |b| {
        b.iter(|| black_box(model.forward(&refs).unwrap()))
    });
    group.bench_function(BenchmarkId::new("sequential", "chunked"), |b| {
        b.iter(|| {
            let chunks: Vec<&[&Image]> = refs.chunks(32).collect();
            let out = par::map_sequential(&chunks, |chunk| {
                let x = Recognizer::batch_array(chunk).unwrap();
                model.forward_logits(&x).0
            });
            black_box(out)
        })
    });
    group.finish();
}

fn bench_gap_scoring(c: &mut Criterion) {
    let images = sample_images(256);
    let refs: Vec<&Image> = images.iter().collect();
    let pair = TranslationPair::init(1);
    let mut group = c.benchmark_group("gap_scoring_256");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("parallel", "rayon"), |b| {
        b.iter(|| black_box(ood_levels_batch(&pair, &refs).unwrap()))
    });
    group.bench_function(BenchmarkId::new("sequential", "chunked"), |b| {
        b.iter(|| {
            let chunks: Vec<&[&Image]> = refs.chunks(64).collect();
            let out = par::map_sequential(&chunks, |chunk| {
                let x = Recognizer::batch_array(chunk).unwrap();
                let (ls, _) = pair.d_s.forward(&x);
                let (lt, _) = pair.d_t.forward(&x);
                (ls, lt)
            });
            black_box(out)
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_render,
    bench_perturb,
    bench_augment,
    bench_recognizer_forward,
    bench_gap_scoring
);
criterion_main!(benches);
