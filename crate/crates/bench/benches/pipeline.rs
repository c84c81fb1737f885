use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use poise_bench::{frames, lines, warm_session};
use poise_core::geometry::{extract_features, FaceTemplate};
use poise_core::landmark::{compute_scale, parse_frame};
use poise_core::Preset;

fn per_frame(c: &mut Criterion) {
    let fs = frames(Preset::Distracted, 90.0);
    let ls = lines(&fs);
    let template = FaceTemplate::default();
    let (warmup, rest) = fs.split_at(fs.len() - 300);
    let session = warm_session(warmup);

    c.bench_function("parse_frame", |b| {
        b.iter(|| parse_frame(black_box(&ls[100])).unwrap())
    });

    let scale = compute_scale(&fs[100], 0.063).unwrap();
    c.bench_function("extract_features", |b| {
        b.iter(|| {
            extract_features(Some(&fs[99]), black_box(&fs[100]), &template, Some(&scale)).unwrap()
        })
    });

    // one frame into a session with full 10 s / 60 s windows
    c.bench_function("session_process_warm", |b| {
        let mut i = 0;
        b.iter_batched(
            || {
                i = (i + 1) % rest.len();
                (session.clone(), rest[i].clone())
            },
            |(mut s, f)| s.process(f).unwrap(),
            BatchSize::LargeInput,
        )
    });

    let tail = &ls[ls.len() - 300..];
    c.bench_function("parse_and_process_300", |b| {
        b.iter_batched(
            || session.clone(),
            |mut s| {
                for line in tail {
                    s.process(parse_frame(line).unwrap()).unwrap();
                }
                s
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, per_frame);
criterion_main!(benches);
