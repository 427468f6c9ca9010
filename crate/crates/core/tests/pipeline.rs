//! End-to-end run of the experiment harness in a temporary directory:
//! simulate a tiny benchmark set, restore it with every method, and
//! exercise the kernel generator, the per-tile grid path, and the
//! timing entry point against the files the earlier stages produced.

use std::fs;
use std::path::Path;

use rawrestore::config::{ExperimentConfig, Method};
use rawrestore::harness::{bench_restore, generate_kernel, psf_restore, restore_batch, simulate, Logger};
use rawrestore::harness::{synthetic_scene, BatchReport};
use rawrestore::blur::{load_kernel_pfm, PsfGrid};
use rawrestore::image::ColorSpace;
use rawrestore::io::{load_image, save_image, ImageData, SaveFormat};
use rawrestore::isp::linrgb_to_srgb;

fn exists(path: &Path) -> bool {
    path.is_file()
}

#[test]
fn harness_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let log = Logger::quiet();

    // One 64x64 fixture, saved the way real inputs arrive: display PNG.
    let mut config = ExperimentConfig::from_toml_str("").unwrap();
    let scene = synthetic_scene(64, 64);
    let fixture = root.join("fixtures").join("scene.png");
    fs::create_dir_all(fixture.parent().unwrap()).unwrap();
    let display = linrgb_to_srgb(&scene, &config.isp).unwrap();
    save_image(&ImageData::Rgb(display), &fixture, SaveFormat::Png16).unwrap();

    config.data.fixtures = vec![fixture];
    config.data.output_dir = root.join("out");
    config.kernel.size = 9;
    config.kernel.count = 2;
    config.solver.iterations = 4;
    config.metrics.border_crop = 8;
    config.validate().unwrap();

    // Simulation writes truth, raw frames, kernels, and the manifest.
    let sim = simulate(&config, 77, &log).unwrap();
    assert!(exists(&sim.manifest_path));
    assert_eq!(sim.manifest.entries.len(), 2);
    assert_eq!(sim.manifest.cfa, "rggb");
    let base = sim.manifest_path.parent().unwrap().to_path_buf();
    for entry in &sim.manifest.entries {
        assert_eq!(entry.image, "scene");
        for rel in [&entry.truth, &entry.raw, &entry.kernel] {
            assert!(exists(&base.join(rel)), "missing {rel}");
        }
        let want_read = config.noise.read_for_shot(entry.noise.shot);
        assert!((entry.noise.read - want_read).abs() <= 1e-12 * want_read);
        let truth = load_image(&base.join(&entry.truth)).unwrap().into_rgb().unwrap();
        assert_eq!(truth.dims(), (64, 64));
        assert_eq!(truth.colorspace(), ColorSpace::Linear);
        let raw = load_image(&base.join(&entry.raw)).unwrap().into_gray().unwrap();
        assert_eq!(raw.dims(), (64, 64));
    }

    // Every method restores the whole set and leaves its reports behind.
    for method in Method::ALL {
        let report = restore_batch(&config, &sim.manifest_path, method, None, &log).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert_eq!(report.border_crop, 8);
        for e in &report.entries {
            assert!(e.psnr_db.is_finite() && e.psnr_db > 5.0, "psnr {}", e.psnr_db);
            assert!(e.ssim > 0.0 && e.ssim <= 1.0, "ssim {}", e.ssim);
            assert!(e.initial_psnr_db.is_finite());
            let stem = format!("{}_k{}", e.image, e.kernel_index);
            let out_dir = base.join("restored").join(method.label());
            assert!(exists(&out_dir.join(format!("{stem}.pfm"))));
            assert!(exists(&out_dir.join(format!("{stem}.png"))));
        }
        let json = base.join("reports").join(format!("{}.json", method.label()));
        let csv = base.join("reports").join(format!("{}.csv", method.label()));
        let loaded = BatchReport::load_json(&json).unwrap();
        assert_eq!(loaded.method, method);
        assert!((loaded.mean_psnr_db - report.mean_psnr_db).abs() <= 1e-9);
        let rows = fs::read_to_string(&csv).unwrap().lines().count();
        assert_eq!(rows, 1 + report.entries.len());
    }

    // Stand-alone kernel generation, then reload through the float map.
    let kernel_path = root.join("kernels").join("chroma.pfm");
    fs::create_dir_all(kernel_path.parent().unwrap()).unwrap();
    let summary = generate_kernel(&config, 3, Some(11), &kernel_path).unwrap();
    assert_eq!(summary.size, 11);
    assert!(exists(&kernel_path));
    assert!(exists(&kernel_path.with_extension("png")));
    let (kernel, warnings) = load_kernel_pfm(&kernel_path).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    for c in 0..3 {
        let k = kernel.channel(c);
        assert_eq!((k.height(), k.width()), (11, 11));
        let mass: f64 = k.taps().iter().sum();
        assert!((mass - 1.0).abs() <= 1e-3, "channel {c} mass {mass}");
    }

    // The grid path: one tile spanning the frame restores a simulated
    // raw observation and scores it against the stored truth.
    let grid_dir = root.join("grid");
    PsfGrid::new(64, 16, 1, 1, vec![kernel]).unwrap().save(&grid_dir).unwrap();
    let entry = &sim.manifest.entries[0];
    let psf_out = root.join("psf").join("restored.png");
    fs::create_dir_all(psf_out.parent().unwrap()).unwrap();
    let outcome = psf_restore(
        &config,
        &base.join(&entry.raw),
        &grid_dir,
        Some(&base.join(&entry.truth)),
        entry.noise,
        &psf_out,
        &log,
    )
    .unwrap();
    assert!(exists(&outcome.output));
    assert!(outcome.warnings.is_empty(), "{:?}", outcome.warnings);
    let metrics = outcome.metrics.expect("truth was supplied");
    assert!(metrics.psnr_db.is_finite() && metrics.psnr_db > 5.0);
    assert!(outcome.wall_seconds > 0.0);

    // Timing entry point used by the CLI bench subcommand.
    let bench = bench_restore(&config, 64, 2, 0).unwrap();
    assert_eq!(bench.parallel, rawrestore::exec::is_parallel());
    assert_eq!(bench.size, 64);
    assert_eq!(bench.solver_iterations, config.solver.iterations);
    assert_eq!(bench.seconds.len(), 2);
    assert!(bench.best_seconds <= bench.mean_seconds + 1e-12);
    assert!(bench.psnr_db.is_finite() && bench.psnr_db > 5.0);
}
