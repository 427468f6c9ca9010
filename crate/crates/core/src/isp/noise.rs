//! Signal-dependent sensor noise.
//!
//! Raw samples carry shot noise that scales with the signal and read
//! noise that does not.  Both are folded into one zero-mean Gaussian per
//! pixel with variance `shot * max(v, 0) + read`.  The two coefficients
//! follow a measured log-linear relation across real sensors, which the
//! sampler reproduces: pick the shot coefficient log-uniformly, derive
//! the read coefficient from it.

use crate::image::ImagePlane;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Noise level of one raw frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Variance per unit signal (shot).
    pub shot: f64,
    /// Signal-independent variance floor (read).
    pub read: f64,
}

impl NoiseParams {
    pub const NOISELESS: NoiseParams = NoiseParams { shot: 0.0, read: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if !(self.shot >= 0.0) || !(self.read >= 0.0) || !self.shot.is_finite() || !self.read.is_finite()
        {
            return Err(Error::Parameter(format!(
                "noise variances must be finite and nonnegative, got shot={} read={}",
                self.shot, self.read
            )));
        }
        Ok(())
    }

    /// Variance of the observation at clean signal level `v`.
    #[inline]
    pub fn variance_at(&self, v: f64) -> f64 {
        self.shot * v.max(0.0) + self.read
    }
}

/// Add heteroscedastic Gaussian noise to a plane.  Pixels are visited in
/// row-major order with one normal draw each, so a given rng state yields
/// one fixed realization regardless of build flavor.
pub fn apply_noise(plane: &ImagePlane, params: &NoiseParams, rng: &mut impl Rng) -> ImagePlane {
    let mut out = plane.clone();
    for v in out.data_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v += params.variance_at(*v).sqrt() * n;
    }
    out
}

/// Random noise levels spanning a realistic sensor range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSampler {
    pub shot_min: f64,
    pub shot_max: f64,
    /// Slope of `ln(read)` against `ln(shot)`.
    pub log_slope: f64,
    /// Intercept of the same relation.
    pub log_intercept: f64,
}

impl Default for NoiseSampler {
    fn default() -> Self {
        NoiseSampler {
            shot_min: 1e-4,
            shot_max: 3e-3,
            log_slope: 2.18,
            log_intercept: 1.20,
        }
    }
}

impl NoiseSampler {
    pub fn validate(&self) -> Result<()> {
        if !(self.shot_min > 0.0) || !(self.shot_max >= self.shot_min) {
            return Err(Error::Parameter(format!(
                "shot range [{}, {}] must be positive and ordered",
                self.shot_min, self.shot_max
            )));
        }
        Ok(())
    }

    /// Read coefficient paired with a given shot coefficient.
    pub fn read_for_shot(&self, shot: f64) -> f64 {
        (self.log_slope * shot.ln() + self.log_intercept).exp()
    }

    /// Draw a level: shot is log-uniform over the range, read follows.
    pub fn sample(&self, rng: &mut impl Rng) -> NoiseParams {
        let lo = self.shot_min.ln();
        let hi = self.shot_max.ln();
        let shot = (lo + (hi - lo) * rng.random::<f64>()).exp();
        NoiseParams {
            shot,
            read: self.read_for_shot(shot),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_params_leave_the_plane_untouched() {
        let plane = ImagePlane::from_vec(2, 2, vec![0.1, 0.5, -0.2, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = apply_noise(&plane, &NoiseParams::NOISELESS, &mut rng);
        assert_eq!(out, plane);
    }

    #[test]
    fn same_seed_same_noise() {
        let plane = ImagePlane::filled(8, 8, 0.4);
        let params = NoiseParams { shot: 1e-3, read: 1e-6 };
        let a = apply_noise(&plane, &params, &mut ChaCha8Rng::seed_from_u64(3));
        let b = apply_noise(&plane, &params, &mut ChaCha8Rng::seed_from_u64(3));
        let c = apply_noise(&plane, &params, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_variance_tracks_the_model() {
        let level = 0.25;
        let plane = ImagePlane::filled(200, 200, level);
        let params = NoiseParams { shot: 2e-3, read: 4e-6 };
        let noisy = apply_noise(&plane, &params, &mut ChaCha8Rng::seed_from_u64(11));
        let n = noisy.data().len() as f64;
        let mean: f64 = noisy.data().iter().sum::<f64>() / n;
        let var: f64 = noisy.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let expect = params.variance_at(level);
        assert!((mean - level).abs() < 5e-5, "mean {mean}");
        assert!((var / expect - 1.0).abs() < 0.05, "var {var} expect {expect}");
    }

    #[test]
    fn negative_signal_sees_only_read_noise() {
        let params = NoiseParams { shot: 1e-2, read: 9e-6 };
        assert_eq!(params.variance_at(-0.3), 9e-6);
        assert!((params.variance_at(0.5) - (5e-3 + 9e-6)).abs() < 1e-18);
    }

    #[test]
    fn sampler_respects_range_and_relation() {
        let sampler = NoiseSampler::default();
        sampler.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = sampler.sample(&mut rng);
            assert!(p.shot >= sampler.shot_min && p.shot <= sampler.shot_max);
            let expect = (sampler.log_slope * p.shot.ln() + sampler.log_intercept).exp();
            assert_eq!(p.read, expect);
        }
        // A mid-range shot level lands near 1e-6 read variance, the scale
        // measured on smartphone sensors.
        let read = sampler.read_for_shot(1e-3);
        assert!(read > 5e-7 && read < 2e-6, "{read}");
    }

    #[test]
    fn sampler_spans_the_log_range() {
        let sampler = NoiseSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..500).map(|_| sampler.sample(&mut rng).shot).collect();
        let below_mid = draws.iter().filter(|&&s| s < 5.5e-4).count();
        // Log-uniform puts roughly half the draws below the geometric
        // midpoint; a uniform sampler would put only ~15% there.
        assert!(below_mid > 180 && below_mid < 320, "{below_mid}");
    }
}
