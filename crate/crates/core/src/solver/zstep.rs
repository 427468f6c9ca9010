//! Closed-form data steps.
//!
//! Each outer iteration must solve, per channel,
//!
//! ```text
//!     min_z  1/2 ||S K z - y||^2  +  beta/2 ||z - x||^2
//! ```
//!
//! where `K` is cyclic convolution and `S` keeps either every pixel
//! (deblurring a full observation) or one CFA site out of each 2x2 cell
//! (deblurring through the mosaic).  Both cases diagonalize with FFTs.
//!
//! For the full case the normal equations are diagonal in frequency:
//! `z_hat = (conj(K) y_hat + beta x_hat) / (|K|^2 + beta)`.
//!
//! For the decimated case, shifting the site to the origin reduces it to
//! even-site sampling, whose normal operator `K^H S^H S K + beta I` is
//! inverted through the matrix inversion lemma.  Sampling in space folds
//! the spectrum: on the half-resolution grid each frequency collects its
//! four aliases, so the small system solved per low frequency k is
//!
//! ```text
//!     w_hat(k) = (1/4 sum_a K_hat(p_a) r_hat(p_a))
//!                / (beta + 1/4 sum_a |K_hat(p_a)|^2)
//!     z_hat(p) = (r_hat(p) - conj(K_hat)(p) w_hat(p mod small)) / beta
//! ```
//!
//! with `r = K^H S^H y + beta x` the right-hand side and `p_a` the four
//! aliases of `k`.  The solve is exact: its output satisfies the normal
//! equations to solver precision, which the tests check against conjugate
//! gradients and dense factorizations.
//!
//! The two green sites are solved independently and recombined: each
//! green site keeps its own solution at its own pixels, red and blue
//! pixels take the average of the two.

use super::MosaicZstep;
use crate::blur::{RgbKernel};
use crate::fft;
use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::isp::cfa::ColorSite;
use crate::isp::RawImage;
use crate::{Error, Result};
use num_complex::Complex;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Solver(format!("beta must be positive and finite, got {}", beta)));
    }
    Ok(())
}

/// Exact minimizer for a fully observed blurry image, per channel.
pub fn zstep_plain_fft(
    observed: &RgbImage,
    anchor: &RgbImage,
    kernel: &RgbKernel,
    beta: f64,
) -> Result<RgbImage> {
    check_beta(beta)?;
    observed.check_same_dims(anchor, "plain data step")?;
    let (h, w) = observed.dims();
    let solve_channel = |c: usize| -> ImagePlane {
        let otf = kernel.channel(c).otf(h, w);
        let d_hat = fft::fft2(observed.plane(c).data(), h, w);
        let x_hat = fft::fft2(anchor.plane(c).data(), h, w);
        let mut z_hat = vec![Complex::default(); h * w];
        for p in 0..h * w {
            let k = otf[p];
            z_hat[p] = (k.conj() * d_hat[p] + beta * x_hat[p]) / (k.norm_sqr() + beta);
        }
        ImagePlane::from_vec(h, w, fft::ifft2_real(&z_hat, h, w)).expect("fft keeps size")
    };
    let (r, g, b) = crate::exec::join3(|| solve_channel(0), || solve_channel(1), || solve_channel(2));
    RgbImage::new([r, g, b], ColorSpace::Linear)
}

/// Exact minimizer for one CFA site: observations live on pixels
/// congruent to `offset` mod 2.  `anchor` is the channel plane the
/// quadratic coupling pulls toward.
fn solve_site_fft(
    raw: &ImagePlane,
    anchor: &ImagePlane,
    otf: &[Complex<f64>],
    offset: (usize, usize),
    beta: f64,
) -> ImagePlane {
    let (h, w) = raw.dims();
    let (h2, w2) = (h / 2, w / 2);

    // Observed samples moved to the even-site frame and zero-filled.
    let mut upsampled = vec![0.0; h * w];
    for m in 0..h2 {
        let src = (2 * m + offset.0) * w;
        let dst = 2 * m * w;
        for n in 0..w2 {
            upsampled[dst + 2 * n] = raw.data()[src + 2 * n + offset.1];
        }
    }
    let shifted_anchor = anchor.roll(-(offset.0 as isize), -(offset.1 as isize));

    let (u_hat, x_hat) = crate::exec::join(
        || fft::fft2(&upsampled, h, w),
        || fft::fft2(shifted_anchor.data(), h, w),
    );

    // Right-hand side r = K^H S^H y + beta x, in frequency.
    let mut r_hat = vec![Complex::default(); h * w];
    for p in 0..h * w {
        r_hat[p] = otf[p].conj() * u_hat[p] + beta * x_hat[p];
    }

    // Low-resolution solve: every small frequency gathers its aliases.
    let mut w_hat = vec![Complex::default(); h2 * w2];
    for k1 in 0..h2 {
        for k2 in 0..w2 {
            let mut num = Complex::default();
            let mut den = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let p = (k1 + a * h2) * w + (k2 + b * w2);
                    num += otf[p] * r_hat[p];
                    den += otf[p].norm_sqr();
                }
            }
            w_hat[k1 * w2 + k2] = 0.25 * num / (beta + 0.25 * den);
        }
    }

    // Back-substitution on the full grid.
    let mut z_hat = vec![Complex::default(); h * w];
    for p1 in 0..h {
        let k1 = p1 % h2;
        for p2 in 0..w {
            let p = p1 * w + p2;
            let wk = w_hat[k1 * w2 + p2 % w2];
            z_hat[p] = (r_hat[p] - otf[p].conj() * wk) / beta;
        }
    }

    let z = ImagePlane::from_vec(h, w, fft::ifft2_real(&z_hat, h, w)).expect("fft keeps size");
    z.roll(offset.0 as isize, offset.1 as isize)
}

/// Exact per-site minimizers for a mosaicked observation, plus the
/// recombined RGB image.
pub fn zstep_mosaic_fft(
    raw: &RawImage,
    anchor: &RgbImage,
    kernel: &RgbKernel,
    beta: f64,
) -> Result<MosaicZstep> {
    check_beta(beta)?;
    raw.plane().check_same_dims(anchor.plane(0), "mosaic data step")?;
    let (h, w) = raw.dims();
    let cfa = raw.cfa();

    let solve = |site: ColorSite| -> ImagePlane {
        let channel = site.channel();
        let otf = kernel.channel(channel).otf(h, w);
        solve_site_fft(raw.plane(), anchor.plane(channel), &otf, cfa.offset(site), beta)
    };
    let (z_r, z_g1, z_g2, z_b) = crate::exec::join4(
        || solve(ColorSite::R),
        || solve(ColorSite::G1),
        || solve(ColorSite::G2),
        || solve(ColorSite::B),
    );
    MosaicZstep::recombine(raw.cfa(), [z_r, z_g1, z_g2, z_b])
}

impl MosaicZstep {
    /// Merge per-site solutions into one RGB image.  Red and blue pass
    /// through; green keeps each site's own solution at its own pixels
    /// and averages the two elsewhere.
    pub(crate) fn recombine(
        cfa: &crate::isp::CfaPattern,
        sites: [ImagePlane; 4],
    ) -> Result<MosaicZstep> {
        let (h, w) = sites[0].dims();
        let [z_r, z_g1, z_g2, z_b] = sites;
        let off_g1 = cfa.offset(ColorSite::G1);
        let off_g2 = cfa.offset(ColorSite::G2);
        let mut green = ImagePlane::zeros(h, w);
        {
            let g1 = &z_g1;
            let g2 = &z_g2;
            crate::exec::for_each_row_mut(green.data_mut(), w, |i, row| {
                for (j, v) in row.iter_mut().enumerate() {
                    let key = (i % 2, j % 2);
                    *v = if key == off_g1 {
                        g1.at(i, j)
                    } else if key == off_g2 {
                        g2.at(i, j)
                    } else {
                        0.5 * (g1.at(i, j) + g2.at(i, j))
                    };
                }
            });
        }
        let rgb = RgbImage::new([z_r.clone(), green, z_b.clone()], ColorSpace::Linear)?;
        Ok(MosaicZstep {
            rgb,
            sites: [z_r, z_g1, z_g2, z_b],
        })
    }
}
