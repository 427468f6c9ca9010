//! Half-quadratic splitting restoration.
//!
//! The restored image minimizes a data term plus a weighted prior.  The
//! splitting introduces an auxiliary image z coupled to x by a quadratic
//! with weight beta, alternates an exact data step in z with a prox step
//! in x, and drives beta up a log-spaced ladder so the pair is welded
//! together by the last iteration.  The prior weight gamma seen by the
//! prox at step t is `lambda / beta_t`.

pub mod cg;
pub mod prox;
pub mod zstep;

pub use cg::{cg_solve, zstep_mosaic_cg, zstep_plain_cg, CgOutcome, CgSettings};
pub use prox::{FourierTikhonov, ProxOperator, TvProx};
pub use zstep::{zstep_mosaic_fft, zstep_plain_fft};

use crate::blur::{blur_rgb, RgbKernel};
use crate::image::{ImagePlane, RgbImage};
use crate::isp::{demosaic, DemosaicMethod, NoiseParams, RawImage};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Outer iterations used when nothing else is configured.
pub const DEFAULT_ITERATIONS: usize = 6;
/// First rung of the default beta ladder.
pub const DEFAULT_BETA_MIN: f64 = 1e-3;
/// Last rung of the default beta ladder.
pub const DEFAULT_BETA_MAX: f64 = 1e2;

/// Prior weight matched to the noise level: stronger regularization for
/// noisier frames, with a floor so clean frames are still regularized.
pub fn default_lambda(noise: &NoiseParams) -> f64 {
    100.0 * (noise.shot + noise.read) + 1e-4
}

/// The beta ladder and the prior weight, fixed before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HqsSchedule {
    betas: Vec<f64>,
    lambda: f64,
}

impl HqsSchedule {
    pub fn new(betas: Vec<f64>, lambda: f64) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Solver("schedule needs at least one iteration".into()));
        }
        if betas.iter().any(|b| !(b > &0.0) || !b.is_finite()) {
            return Err(Error::Solver("betas must be positive and finite".into()));
        }
        if betas.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::Solver("betas must be nondecreasing".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Solver(format!("lambda must be positive, got {}", lambda)));
        }
        Ok(HqsSchedule { betas, lambda })
    }

    /// Log-spaced ladder from `beta_min` to `beta_max` over `iterations`
    /// steps.
    pub fn log_spaced(iterations: usize, beta_min: f64, beta_max: f64, lambda: f64) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::Solver("schedule needs at least one iteration".into()));
        }
        if !(beta_min > 0.0) || !(beta_max >= beta_min) {
            return Err(Error::Solver(format!(
                "beta range [{}, {}] must be positive and ordered",
                beta_min, beta_max
            )));
        }
        let betas = if iterations == 1 {
            vec![beta_min]
        } else {
            let l0 = beta_min.ln();
            let l1 = beta_max.ln();
            (0..iterations)
                .map(|t| (l0 + (l1 - l0) * t as f64 / (iterations - 1) as f64).exp())
                .collect()
        };
        HqsSchedule::new(betas, lambda)
    }

    /// Default ladder with the prior weight derived from the noise level.
    pub fn for_noise(noise: &NoiseParams, iterations: usize) -> Result<Self> {
        Self::log_spaced(iterations, DEFAULT_BETA_MIN, DEFAULT_BETA_MAX, default_lambda(noise))
    }

    #[inline]
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Prox weight at step `t`.
    #[inline]
    pub fn gamma(&self, t: usize) -> f64 {
        self.lambda / self.betas[t]
    }
}

/// One restoration instance: the raw observation, the blur that produced
/// it, and the solve schedule.
#[derive(Debug, Clone)]
pub struct JointProblem {
    raw: RawImage,
    kernel: RgbKernel,
    schedule: HqsSchedule,
}

impl JointProblem {
    pub fn new(raw: RawImage, kernel: RgbKernel, schedule: HqsSchedule) -> Result<Self> {
        let (h, w) = raw.dims();
        if h < 4 || w < 4 {
            return Err(Error::Shape(format!("observation {}x{} is too small to restore", h, w)));
        }
        Ok(JointProblem { raw, kernel, schedule })
    }

    pub fn raw(&self) -> &RawImage {
        &self.raw
    }

    pub fn kernel(&self) -> &RgbKernel {
        &self.kernel
    }

    pub fn schedule(&self) -> &HqsSchedule {
        &self.schedule
    }
}

/// Per-site solutions of one mosaic data step plus their RGB merge.
#[derive(Debug, Clone)]
pub struct MosaicZstep {
    /// Recombined image: red and blue solutions as-is, greens merged.
    pub rgb: RgbImage,
    /// Site solutions in R, G1, G2, B order.
    pub sites: [ImagePlane; 4],
}

/// Diagnostics for one outer iteration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub beta: f64,
    pub gamma: f64,
    /// `1/2 ||observation - forward(z)||^2`.
    pub data_term: f64,
    /// `beta/2 ||z - x||^2` after the prox step.
    pub coupling_term: f64,
    /// `lambda * prior(x)` after the prox step.
    pub prior_term: f64,
    /// Sum of the three terms.
    pub objective: f64,
}

/// Knobs for the outer loop.
#[derive(Debug, Clone, Copy)]
pub struct RestoreOptions {
    /// Demosaicker that builds the initial iterate of the joint solver.
    pub init: DemosaicMethod,
    /// Record per-iteration objective terms (costs one extra forward
    /// application per iteration).
    pub record_objective: bool,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        RestoreOptions {
            init: DemosaicMethod::Bilinear,
            record_objective: false,
        }
    }
}

/// Result of a restoration run.
#[derive(Debug, Clone)]
pub struct Restoration {
    pub image: RgbImage,
    /// The initial iterate (useful as the no-deblurring baseline).
    pub initial: RgbImage,
    pub trace: Vec<IterationRecord>,
}

/// `1/2 sum (y - sample(blur(z)))^2` over the mosaic sites.
pub fn mosaic_data_term(raw: &RawImage, kernel: &RgbKernel, z: &RgbImage) -> Result<f64> {
    raw.plane().check_same_dims(z.plane(0), "data term")?;
    let blurred = blur_rgb(z, kernel)?;
    let (h, w) = raw.dims();
    let cfa = raw.cfa();
    let mut acc = 0.0;
    for i in 0..h {
        for j in 0..w {
            let c = cfa.site_at(i, j).channel();
            let r = raw.plane().at(i, j) - blurred.plane(c).at(i, j);
            acc += r * r;
        }
    }
    Ok(0.5 * acc)
}

/// `1/2 ||d - blur(z)||^2` over all three channels.
pub fn plain_data_term(observed: &RgbImage, kernel: &RgbKernel, z: &RgbImage) -> Result<f64> {
    observed.check_same_dims(z, "data term")?;
    let blurred = blur_rgb(z, kernel)?;
    let mut acc = 0.0;
    for c in 0..3 {
        acc += observed.plane(c).mse(blurred.plane(c))? * (observed.height() * observed.width()) as f64;
    }
    Ok(0.5 * acc)
}

fn coupling_term(z: &RgbImage, x: &RgbImage, beta: f64) -> f64 {
    let mut acc = 0.0;
    for c in 0..3 {
        acc += z
            .plane(c)
            .data()
            .iter()
            .zip(x.plane(c).data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    0.5 * beta * acc
}

fn run_schedule(
    schedule: &HqsSchedule,
    prox: &dyn ProxOperator,
    init: RgbImage,
    mut data_step: impl FnMut(&RgbImage, f64) -> Result<RgbImage>,
    mut data_term: impl FnMut(&RgbImage) -> Result<f64>,
    record: bool,
) -> Result<Restoration> {
    let mut x = init.clone();
    let mut trace = Vec::new();
    for (t, &beta) in schedule.betas().iter().enumerate() {
        let gamma = schedule.gamma(t);
        let z = data_step(&x, beta)?;
        x = prox.apply(&z, gamma)?;
        if record {
            let data = data_term(&z)?;
            let coupling = coupling_term(&z, &x, beta);
            let prior = schedule.lambda() * prox.energy(&x);
            trace.push(IterationRecord {
                iteration: t,
                beta,
                gamma,
                data_term: data,
                coupling_term: coupling,
                prior_term: prior,
                objective: data + coupling + prior,
            });
        }
    }
    Ok(Restoration {
        image: x,
        initial: init,
        trace,
    })
}

/// Joint restoration: deblur, demosaick and denoise straight from the
/// raw frame.
pub fn restore_joint(
    problem: &JointProblem,
    prox: &dyn ProxOperator,
    options: &RestoreOptions,
) -> Result<Restoration> {
    let init = demosaic(problem.raw(), options.init)?;
    run_schedule(
        problem.schedule(),
        prox,
        init,
        |x, beta| Ok(zstep_mosaic_fft(problem.raw(), x, problem.kernel(), beta)?.rgb),
        |z| mosaic_data_term(problem.raw(), problem.kernel(), z),
        options.record_objective,
    )
}

/// Sequential baseline: demosaick first, then deblur the resulting RGB
/// image with the same splitting scheme.
pub fn restore_twostage(
    problem: &JointProblem,
    prox: &dyn ProxOperator,
    method: DemosaicMethod,
    options: &RestoreOptions,
) -> Result<Restoration> {
    let observed = demosaic(problem.raw(), method)?;
    run_schedule(
        problem.schedule(),
        prox,
        observed.clone(),
        |x, beta| zstep_plain_fft(&observed, x, problem.kernel(), beta),
        |z| plain_data_term(&observed, problem.kernel(), z),
        options.record_objective,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blur::synth::gaussian_kernel;
    use crate::image::ColorSpace;
    use crate::isp::{mosaic, CfaPattern};

    #[test]
    fn log_spaced_ladder_hits_decades() {
        let s = HqsSchedule::log_spaced(6, 1e-3, 1e2, 0.01).unwrap();
        let expect = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
        for (b, e) in s.betas().iter().zip(expect) {
            assert!((b / e - 1.0).abs() < 1e-12, "{b} vs {e}");
        }
        assert!((s.gamma(0) - 10.0).abs() < 1e-12);
        assert!((s.gamma(5) - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn schedules_are_validated() {
        assert!(HqsSchedule::new(vec![], 0.1).is_err());
        assert!(HqsSchedule::new(vec![1.0, 0.5], 0.1).is_err());
        assert!(HqsSchedule::new(vec![0.5, 1.0], 0.0).is_err());
        assert!(HqsSchedule::log_spaced(0, 1e-3, 1e2, 0.1).is_err());
        assert!(HqsSchedule::log_spaced(1, 1e-3, 1e2, 0.1).is_ok());
    }

    #[test]
    fn lambda_default_tracks_noise() {
        let quiet = default_lambda(&NoiseParams::NOISELESS);
        assert!((quiet - 1e-4).abs() < 1e-18);
        let noisy = default_lambda(&NoiseParams { shot: 1e-3, read: 1e-6 });
        assert!(noisy > quiet);
        assert!((noisy - (100.0 * (1e-3 + 1e-6) + 1e-4)).abs() < 1e-15);
    }

    fn smooth_scene(h: usize, w: usize) -> RgbImage {
        let mut img = RgbImage::zeros(h, w, ColorSpace::Linear);
        for c in 0..3 {
            for i in 0..h {
                for j in 0..w {
                    let u = i as f64 / h as f64;
                    let v = j as f64 / w as f64;
                    *img.plane_mut(c).at_mut(i, j) = 0.25
                        + 0.2 * ((2.0 * std::f64::consts::PI * (u + 0.3 * c as f64)).sin())
                        + 0.15 * ((2.0 * std::f64::consts::PI * 2.0 * v).cos()).powi(2);
                }
            }
        }
        img
    }

    #[test]
    fn joint_restoration_improves_on_its_initialization() {
        let truth = smooth_scene(32, 32);
        let kernel = RgbKernel::gray(gaussian_kernel(9, 1.8, 1.2, 0.4).unwrap());
        let blurred = blur_rgb(&truth, &kernel).unwrap();
        let raw = mosaic(&blurred, &CfaPattern::rggb()).unwrap();
        let schedule = HqsSchedule::for_noise(&NoiseParams::NOISELESS, 6).unwrap();
        let problem = JointProblem::new(raw, kernel, schedule).unwrap();
        let out = restore_joint(&problem, &FourierTikhonov, &RestoreOptions::default()).unwrap();
        let err_restored = crate::image::psnr(&out.image, &truth, 4).unwrap();
        let err_initial = crate::image::psnr(&out.initial, &truth, 4).unwrap();
        assert!(
            err_restored > err_initial + 3.0,
            "restored {err_restored} dB vs init {err_initial} dB"
        );
    }

    #[test]
    fn twostage_runs_and_records_a_trace() {
        let truth = smooth_scene(24, 24);
        let kernel = RgbKernel::gray(gaussian_kernel(7, 1.4, 1.4, 0.0).unwrap());
        let blurred = blur_rgb(&truth, &kernel).unwrap();
        let raw = mosaic(&blurred, &CfaPattern::gbrg()).unwrap();
        let schedule = HqsSchedule::for_noise(&NoiseParams::NOISELESS, 4).unwrap();
        let problem = JointProblem::new(raw, kernel, schedule).unwrap();
        let options = RestoreOptions {
            record_objective: true,
            ..Default::default()
        };
        let out =
            restore_twostage(&problem, &FourierTikhonov, DemosaicMethod::GradientCorrected, &options)
                .unwrap();
        assert_eq!(out.trace.len(), 4);
        for rec in &out.trace {
            assert!(rec.objective.is_finite());
            assert!(rec.data_term >= 0.0 && rec.prior_term >= 0.0 && rec.coupling_term >= 0.0);
            assert!((rec.objective - (rec.data_term + rec.coupling_term + rec.prior_term)).abs() < 1e-9);
        }
        // Later iterations weld z to x.
        assert!(out.trace.last().unwrap().beta > out.trace[0].beta);
    }

    #[test]
    fn data_terms_are_zero_on_exact_forward_models() {
        let truth = smooth_scene(16, 16);
        let kernel = RgbKernel::gray(gaussian_kernel(5, 1.2, 0.9, 0.1).unwrap());
        let blurred = blur_rgb(&truth, &kernel).unwrap();
        let raw = mosaic(&blurred, &CfaPattern::rggb()).unwrap();
        assert!(mosaic_data_term(&raw, &kernel, &truth).unwrap() < 1e-18);
        assert!(plain_data_term(&blurred, &kernel, &truth).unwrap() < 1e-18);
        // And positive when z is wrong.
        let wrong = truth.map_planes(|p| p.map(|v| v + 0.1));
        assert!(mosaic_data_term(&raw, &kernel, &wrong).unwrap() > 1e-3);
    }
}
