//! Property tests for the camera pipeline: sampled sites must survive
//! mosaicking and demosaicking untouched, the display conversion must be
//! invertible for any reasonable gain/matrix choice, and the noise
//! synthesis must be reproducible and statistically on-model.

use proptest::prelude::*;
use rand::Rng;
use rawrestore::harness::stream_rng;
use rawrestore::image::{ColorSpace, ImagePlane, RgbImage};
use rawrestore::isp::{
    apply_noise, demosaic, linrgb_to_srgb, mosaic, srgb_to_linrgb, CfaPattern, ColorSite,
    DemosaicMethod, IspParams, NoiseParams, NoiseSampler,
};

fn plane_from(h: usize, w: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> ImagePlane {
    ImagePlane::from_vec(
        h,
        w,
        (0..h * w).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect(),
    )
    .unwrap()
}

fn rgb_from(h: usize, w: usize, lo: f64, hi: f64, space: ColorSpace, rng: &mut impl Rng) -> RgbImage {
    RgbImage::new(
        [
            plane_from(h, w, lo, hi, rng),
            plane_from(h, w, lo, hi, rng),
            plane_from(h, w, lo, hi, rng),
        ],
        space,
    )
    .unwrap()
}

fn pattern(idx: usize) -> CfaPattern {
    match idx % 4 {
        0 => CfaPattern::rggb(),
        1 => CfaPattern::bggr(),
        2 => CfaPattern::grbg(),
        _ => CfaPattern::gbrg(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whatever the pattern or interpolator, a demosaicked image agrees
    /// bit for bit with the raw frame at every sampled position, and the
    /// raw frame agrees with the source channel there.
    #[test]
    fn sampled_sites_survive_the_round_trip(
        seed in 0u64..1u64 << 48,
        pat in 0usize..4,
        bilinear in any::<bool>(),
        half_h in 4usize..10,
        half_w in 4usize..10,
    ) {
        let (h, w) = (2 * half_h, 2 * half_w);
        let mut rng = stream_rng(seed, 21);
        let cfa = pattern(pat);
        let truth = rgb_from(h, w, 0.0, 1.0, ColorSpace::Linear, &mut rng);
        let raw = mosaic(&truth, &cfa).unwrap();
        let method = if bilinear { DemosaicMethod::Bilinear } else { DemosaicMethod::GradientCorrected };
        let full = demosaic(&raw, method).unwrap();
        for i in 0..h {
            for j in 0..w {
                let c = cfa.site_at(i, j).channel();
                let sample = raw.plane().at(i, j);
                prop_assert_eq!(sample, truth.plane(c).at(i, j));
                prop_assert_eq!(full.plane(c).at(i, j), sample);
            }
        }
    }

    /// The display conversion is built from strictly invertible pieces,
    /// so any diagonally dominant matrix and positive gains round-trip,
    /// including samples outside the display range.
    #[test]
    fn display_conversion_round_trips(seed in 0u64..1u64 << 48) {
        let mut rng = stream_rng(seed, 22);
        let mut gains = [0.0; 3];
        for g in &mut gains {
            *g = 0.5 + 2.0 * rng.random::<f64>();
        }
        let mut ccm = [[0.0; 3]; 3];
        for (r, row) in ccm.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = if r == c { 1.0 } else { 0.4 * rng.random::<f64>() - 0.2 };
            }
        }
        let params = IspParams { wb_gains: gains, ccm };
        params.validate().unwrap();

        let linear = rgb_from(6, 6, -0.2, 1.4, ColorSpace::Linear, &mut rng);
        let back = srgb_to_linrgb(&linrgb_to_srgb(&linear, &params).unwrap(), &params).unwrap();
        let encoded = rgb_from(6, 6, -0.2, 1.2, ColorSpace::Srgb, &mut rng);
        let again = linrgb_to_srgb(&srgb_to_linrgb(&encoded, &params).unwrap(), &params).unwrap();
        for c in 0..3 {
            for (a, b) in linear.plane(c).data().iter().zip(back.plane(c).data()) {
                prop_assert!((a - b).abs() <= 1e-9, "linear first: {a} vs {b}");
            }
            for (a, b) in encoded.plane(c).data().iter().zip(again.plane(c).data()) {
                prop_assert!((a - b).abs() <= 1e-9, "encoded first: {a} vs {b}");
            }
        }
    }

    /// Same seed, same noise; the generator is the only source of
    /// randomness and is fully keyed by its stream.
    #[test]
    fn noise_is_reproducible_per_stream(seed in 0u64..1u64 << 48) {
        let base = ImagePlane::filled(16, 16, 0.5);
        let params = NoiseParams { shot: 1e-3, read: 1e-5 };
        let a = apply_noise(&base, &params, &mut stream_rng(seed, 30));
        let b = apply_noise(&base, &params, &mut stream_rng(seed, 30));
        let c = apply_noise(&base, &params, &mut stream_rng(seed, 31));
        prop_assert_eq!(a.data(), b.data());
        prop_assert!(a.data().iter().zip(c.data()).any(|(x, y)| x != y));
    }

    /// Sample variance on a flat field tracks `shot * v + read` well
    /// inside statistical error (the bound below is over ten sigma for
    /// this sample count).
    #[test]
    fn noise_variance_tracks_the_model(
        seed in 0u64..1u64 << 48,
        level in 0.1f64..0.9,
        log_shot in -4.0f64..-2.5,
    ) {
        let shot = 10f64.powf(log_shot);
        let sampler = NoiseSampler::default();
        let params = NoiseParams { shot, read: sampler.read_for_shot(shot) };
        let base = ImagePlane::filled(64, 64, level);
        let noisy = apply_noise(&base, &params, &mut stream_rng(seed, 77));
        let n = noisy.data().len() as f64;
        let mean = noisy.data().iter().sum::<f64>() / n;
        let var = noisy.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let want = params.variance_at(level);
        prop_assert!((var - want).abs() <= 0.25 * want,
            "sample variance {var:.3e} vs model {want:.3e}");
        prop_assert!((mean - level).abs() <= 10.0 * (want / n).sqrt());
    }

    /// Drawn levels stay inside the configured range and carry the read
    /// coefficient implied by the shot coefficient.
    #[test]
    fn drawn_noise_levels_follow_the_ladder(seed in 0u64..1u64 << 48) {
        let sampler = NoiseSampler::default();
        let params = sampler.sample(&mut stream_rng(seed, 40));
        prop_assert!(params.shot >= sampler.shot_min * (1.0 - 1e-12));
        prop_assert!(params.shot <= sampler.shot_max * (1.0 + 1e-12));
        let want = sampler.read_for_shot(params.shot);
        prop_assert!((params.read - want).abs() <= 1e-12 * want);
    }
}

/// Every pattern tiles the plane with period two and covers all four
/// sites exactly once per cell, with `offset` and `site_at` agreeing.
#[test]
fn cfa_geometry_is_consistent() {
    for idx in 0..4 {
        let cfa = pattern(idx);
        let mut seen = [false; 4];
        for site in ColorSite::ALL {
            let (r, c) = cfa.offset(site);
            assert!(r < 2 && c < 2);
            assert!(!seen[r * 2 + c], "offset collision in pattern {idx}");
            seen[r * 2 + c] = true;
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(cfa.site_at(r + 2 * a, c + 2 * b), site);
                }
            }
        }
    }
}
