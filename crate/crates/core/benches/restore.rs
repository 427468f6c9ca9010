//! Timing of the hot paths, labeled by execution mode so `cargo bench`
//! and `cargo bench --no-default-features` produce directly comparable
//! group names (`.../parallel` vs `.../sequential`).

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rawrestore::blur::{blur_rgb, rgb_kernel_from_gray, sample_kernel, RgbKernel, WarpRanges};
use rawrestore::harness::synthetic_scene;
use rawrestore::isp::{mosaic, CfaPattern, NoiseParams, RawImage};
use rawrestore::solver::{
    restore_joint, FourierTikhonov, HqsSchedule, JointProblem, RestoreOptions, TvProx,
};

fn mode() -> &'static str {
    if rawrestore::exec::is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn test_problem(size: usize, kernel_size: usize) -> (JointProblem, RawImage, RgbKernel) {
    let scene = synthetic_scene(size, size);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let gray = sample_kernel(kernel_size, &mut rng).unwrap();
    let (kernel, _) = rgb_kernel_from_gray(&gray, &WarpRanges::default(), &mut rng).unwrap();
    let noise = NoiseParams { shot: 1e-3, read: 1e-6 };
    let blurred = blur_rgb(&scene, &kernel).unwrap();
    let raw = mosaic(&blurred, &CfaPattern::rggb())
        .unwrap()
        .with_noise(noise)
        .unwrap();
    let schedule = HqsSchedule::for_noise(&noise, 6).unwrap();
    let problem = JointProblem::new(raw.clone(), kernel.clone(), schedule).unwrap();
    (problem, raw, kernel)
}

fn bench_blur(c: &mut Criterion) {
    let scene = synthetic_scene(256, 256);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gray = sample_kernel(25, &mut rng).unwrap();
    let (kernel, _) = rgb_kernel_from_gray(&gray, &WarpRanges::default(), &mut rng).unwrap();
    c.bench_function(&format!("blur_rgb_256/{}", mode()), |b| {
        b.iter(|| blur_rgb(&scene, &kernel).unwrap())
    });
}

fn bench_zstep(c: &mut Criterion) {
    let (problem, raw, kernel) = test_problem(256, 25);
    let anchor = rawrestore::isp::demosaic_bilinear(&raw).unwrap();
    let _ = &problem;
    c.bench_function(&format!("zstep_mosaic_256/{}", mode()), |b| {
        b.iter(|| rawrestore::solver::zstep_mosaic_fft(&raw, &anchor, &kernel, 0.1).unwrap())
    });
}

fn bench_joint(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("restore_joint/{}", mode()));
    group.sample_size(10);
    let (problem, _, _) = test_problem(128, 13);
    let opts = RestoreOptions::default();
    group.bench_function("128_tikhonov", |b| {
        b.iter(|| restore_joint(&problem, &FourierTikhonov, &opts).unwrap())
    });
    group.bench_function("128_tv", |b| {
        let prox = TvProx::default();
        b.iter(|| restore_joint(&problem, &prox, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_blur, bench_zstep, bench_joint);
criterion_main!(benches);
