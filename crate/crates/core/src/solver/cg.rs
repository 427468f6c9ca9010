//! Conjugate-gradient solves of the data-step normal equations.
//!
//! This path exists as an independent check on the closed-form FFT
//! solver and as a fallback for operators with no spectral shortcut.  It
//! builds the normal operator from first principles: convolve, mask,
//! convolve with the flipped kernel, add the coupling term.

use super::MosaicZstep;
use crate::blur::{convolve_circular, RgbKernel};
use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::isp::cfa::ColorSite;
use crate::isp::RawImage;
use crate::{Error, Result};

/// Outcome of one CG solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side norm.
    pub relative_residual: f64,
    pub converged: bool,
    /// Quadratic energy `1/2 z'Az - b'z` per iteration, starting at the
    /// initial point.  Filled only when requested; each sample costs one
    /// extra operator application.
    pub energy_trace: Vec<f64>,
}

/// Plain CG on a symmetric positive definite operator.
pub fn cg_solve(
    apply: &(dyn Fn(&ImagePlane) -> ImagePlane + Sync),
    rhs: &ImagePlane,
    init: &ImagePlane,
    tol: f64,
    max_iterations: usize,
    record_energy: bool,
) -> (ImagePlane, CgOutcome) {
    let dot = |a: &ImagePlane, b: &ImagePlane| -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
    };
    let energy_at = |z: &ImagePlane| -> f64 {
        let az = apply(z);
        0.5 * dot(z, &az) - dot(rhs, z)
    };

    let mut z = init.clone();
    let mut r = rhs.zip_map(&apply(&z), |b, az| b - az).expect("same dims");
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let rhs_norm = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    let mut trace = Vec::new();
    if record_energy {
        trace.push(energy_at(&z));
    }
    let mut iterations = 0;
    while iterations < max_iterations && rr.sqrt() > tol * rhs_norm {
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        if !alpha.is_finite() {
            break;
        }
        z = z.zip_map(&p, |zi, pi| zi + alpha * pi).expect("same dims");
        r = r.zip_map(&ap, |ri, api| ri - alpha * api).expect("same dims");
        let rr_next = dot(&r, &r);
        p = r.zip_map(&p, |ri, pi| ri + (rr_next / rr) * pi).expect("same dims");
        rr = rr_next;
        iterations += 1;
        if record_energy {
            trace.push(energy_at(&z));
        }
    }
    let relative = rr.sqrt() / rhs_norm;
    (
        z,
        CgOutcome {
            iterations,
            relative_residual: relative,
            converged: relative <= tol,
            energy_trace: trace,
        },
    )
}

/// Settings shared by the CG data steps.
#[derive(Debug, Clone, Copy)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iterations: usize,
    pub record_energy: bool,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            tol: 1e-10,
            max_iterations: 2000,
            record_energy: false,
        }
    }
}

fn check(beta: f64, tol: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Solver(format!("beta must be positive and finite, got {}", beta)));
    }
    if !(tol > 0.0) {
        return Err(Error::Solver("tolerance must be positive".into()));
    }
    Ok(())
}

/// CG counterpart of the plain FFT data step.
pub fn zstep_plain_cg(
    observed: &RgbImage,
    anchor: &RgbImage,
    kernel: &RgbKernel,
    beta: f64,
    settings: &CgSettings,
) -> Result<(RgbImage, Vec<CgOutcome>)> {
    check(beta, settings.tol)?;
    observed.check_same_dims(anchor, "plain data step")?;
    let solve_channel = |c: usize| -> (ImagePlane, CgOutcome) {
        let k = kernel.channel(c);
        let flipped = k.flipped();
        let apply = move |z: &ImagePlane| -> ImagePlane {
            let kz = convolve_circular(z, k);
            let ktkz = convolve_circular(&kz, &flipped);
            ktkz.zip_map(z, |a, zi| a + beta * zi).expect("same dims")
        };
        let ktd = convolve_circular(observed.plane(c), &k.flipped());
        let rhs = ktd
            .zip_map(anchor.plane(c), |a, x| a + beta * x)
            .expect("same dims");
        cg_solve(
            &apply,
            &rhs,
            anchor.plane(c),
            settings.tol,
            settings.max_iterations,
            settings.record_energy,
        )
    };
    let (r, g, b) = crate::exec::join3(|| solve_channel(0), || solve_channel(1), || solve_channel(2));
    let image = RgbImage::new([r.0, g.0, b.0], ColorSpace::Linear)?;
    Ok((image, vec![r.1, g.1, b.1]))
}

/// CG counterpart of the mosaic FFT data step: four masked solves and
/// the same green recombination.
pub fn zstep_mosaic_cg(
    raw: &RawImage,
    anchor: &RgbImage,
    kernel: &RgbKernel,
    beta: f64,
    settings: &CgSettings,
) -> Result<(MosaicZstep, Vec<CgOutcome>)> {
    check(beta, settings.tol)?;
    raw.plane().check_same_dims(anchor.plane(0), "mosaic data step")?;
    let (h, w) = raw.dims();
    let cfa = raw.cfa();

    let solve_site = |site: ColorSite| -> (ImagePlane, CgOutcome) {
        let c = site.channel();
        let off = cfa.offset(site);
        let k = kernel.channel(c);
        let flipped = k.flipped();
        let mask_site = move |p: &mut ImagePlane| {
            crate::exec::for_each_row_mut(p.data_mut(), w, |i, row| {
                if i % 2 != off.0 {
                    row.fill(0.0);
                } else {
                    for (j, v) in row.iter_mut().enumerate() {
                        if j % 2 != off.1 {
                            *v = 0.0;
                        }
                    }
                }
            });
        };
        let apply = |z: &ImagePlane| -> ImagePlane {
            let mut kz = convolve_circular(z, k);
            mask_site(&mut kz);
            let ktmkz = convolve_circular(&kz, &flipped);
            ktmkz.zip_map(z, |a, zi| a + beta * zi).expect("same dims")
        };
        let mut masked_y = raw.plane().clone();
        mask_site(&mut masked_y);
        let kty = convolve_circular(&masked_y, &flipped);
        let rhs = kty
            .zip_map(anchor.plane(c), |a, x| a + beta * x)
            .expect("same dims");
        cg_solve(
            &apply,
            &rhs,
            anchor.plane(c),
            settings.tol,
            settings.max_iterations,
            settings.record_energy,
        )
    };
    let (sr, sg1, sg2, sb) = crate::exec::join4(
        || solve_site(ColorSite::R),
        || solve_site(ColorSite::G1),
        || solve_site(ColorSite::G2),
        || solve_site(ColorSite::B),
    );
    let outcomes = vec![sr.1, sg1.1, sg2.1, sb.1];
    let step = MosaicZstep::recombine(cfa, [sr.0, sg1.0, sg2.0, sb.0])?;
    let _ = h;
    Ok((step, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blur::synth::gaussian_kernel;
    use crate::blur::Kernel2D;
    use crate::isp::{mosaic, CfaPattern};

    fn random_plane(h: usize, w: usize, seed: u64) -> ImagePlane {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let data = (0..h * w)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        ImagePlane::from_vec(h, w, data).unwrap()
    }

    fn random_rgb(h: usize, w: usize, seed: u64) -> RgbImage {
        RgbImage::new(
            [
                random_plane(h, w, seed),
                random_plane(h, w, seed + 1),
                random_plane(h, w, seed + 2),
            ],
            ColorSpace::Linear,
        )
        .unwrap()
    }

    #[test]
    fn cg_solves_a_diagonal_system_in_one_iteration() {
        let rhs = random_plane(4, 4, 3);
        let apply = |z: &ImagePlane| z.map(|v| 2.0 * v);
        let (z, outcome) = cg_solve(&apply, &rhs, &ImagePlane::zeros(4, 4), 1e-12, 50, false);
        assert!(outcome.converged);
        assert!(outcome.iterations <= 2);
        for (a, b) in z.data().iter().zip(rhs.data()) {
            assert!((a - b / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_cg_matches_the_closed_form() {
        let d = random_rgb(10, 8, 5);
        let x = random_rgb(10, 8, 8);
        let k = RgbKernel::gray(gaussian_kernel(5, 1.0, 0.7, 0.2).unwrap());
        let beta = 0.1;
        let (z_cg, outcomes) = zstep_plain_cg(&d, &x, &k, beta, &CgSettings::default()).unwrap();
        assert!(outcomes.iter().all(|o| o.converged));
        let z_fft = super::super::zstep::zstep_plain_fft(&d, &x, &k, beta).unwrap();
        for c in 0..3 {
            for (a, b) in z_cg.plane(c).data().iter().zip(z_fft.plane(c).data()) {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mosaic_cg_recombines_like_the_closed_form() {
        let img = random_rgb(8, 8, 11);
        let raw = mosaic(&img, &CfaPattern::bggr()).unwrap();
        let x = random_rgb(8, 8, 14);
        let k = RgbKernel::gray(Kernel2D::delta(3));
        let (step, outcomes) = zstep_mosaic_cg(&raw, &x, &k, 0.7, &CgSettings::default()).unwrap();
        assert!(outcomes.iter().all(|o| o.converged));
        let direct = super::super::zstep::zstep_mosaic_fft(&raw, &x, &k, 0.7).unwrap();
        for c in 0..3 {
            for (a, b) in step.rgb.plane(c).data().iter().zip(direct.rgb.plane(c).data()) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn energy_trace_is_monotone_when_recorded() {
        let img = random_rgb(12, 12, 21);
        let raw = mosaic(&img, &CfaPattern::rggb()).unwrap();
        let x = random_rgb(12, 12, 22);
        let k = RgbKernel::gray(gaussian_kernel(5, 1.4, 1.4, 0.0).unwrap());
        let settings = CgSettings {
            tol: 1e-10,
            max_iterations: 400,
            record_energy: true,
        };
        let (_, outcomes) = zstep_mosaic_cg(&raw, &x, &k, 0.01, &settings).unwrap();
        for outcome in outcomes {
            assert!(outcome.energy_trace.len() > 2);
            for pair in outcome.energy_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9, "{} then {}", pair[0], pair[1]);
            }
        }
    }
}
