//! Full-reference quality metrics.
//!
//! Both metrics operate on `[0, 1]` images with peak 1.0 and are evaluated
//! after discarding a border band, since tile seams and convolution
//! wrap-around live at the frame edge and would dominate otherwise.

use super::{ImagePlane, RgbImage};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// PSNR reported for a bitwise-identical pair instead of infinity.
pub const PSNR_CAP: f64 = 99.0;

/// Side of the structural-similarity window.
const SSIM_WINDOW: usize = 11;
/// Standard deviation of the window taper, in pixels.
const SSIM_SIGMA: f64 = 1.5;
/// Luminance stabilizer `(0.01 * peak)^2`.
const SSIM_C1: f64 = 1e-4;
/// Contrast stabilizer `(0.03 * peak)^2`.
const SSIM_C2: f64 = 9e-4;

/// Quality summary for one restored/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP`].
    pub psnr_db: f64,
    /// Mean structural similarity in `[-1, 1]`.
    pub ssim: f64,
    /// Pixels discarded on every side before scoring.
    pub border_crop: usize,
}

fn crop_interior(img: &RgbImage, border: usize, min_side: usize) -> Result<RgbImage> {
    let (h, w) = img.dims();
    if h < 2 * border + min_side || w < 2 * border + min_side {
        return Err(Error::Parameter(format!(
            "border crop {} leaves less than {}x{} of a {}x{} image",
            border, min_side, min_side, h, w
        )));
    }
    img.crop(border, border, h - 2 * border, w - 2 * border)
}

/// Peak signal-to-noise ratio over all three channels, peak 1.0.
pub fn psnr(result: &RgbImage, reference: &RgbImage, border_crop: usize) -> Result<f64> {
    result.check_same_dims(reference, "psnr")?;
    let a = crop_interior(result, border_crop, 1)?;
    let b = crop_interior(reference, border_crop, 1)?;
    let mse = (a.plane(0).mse(b.plane(0))?
        + a.plane(1).mse(b.plane(1))?
        + a.plane(2).mse(b.plane(2))?)
        / 3.0;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

/// Mean structural similarity, averaged over the three channels.
pub fn ssim(result: &RgbImage, reference: &RgbImage, border_crop: usize) -> Result<f64> {
    result.check_same_dims(reference, "ssim")?;
    let a = crop_interior(result, border_crop, SSIM_WINDOW)?;
    let b = crop_interior(reference, border_crop, SSIM_WINDOW)?;
    let (sa, sb, sc) = crate::exec::join3(
        || ssim_plane(a.plane(0), b.plane(0)),
        || ssim_plane(a.plane(1), b.plane(1)),
        || ssim_plane(a.plane(2), b.plane(2)),
    );
    Ok((sa + sb + sc) / 3.0)
}

/// Convenience wrapper computing both metrics with one crop setting.
pub fn compute_metrics(
    result: &RgbImage,
    reference: &RgbImage,
    border_crop: usize,
) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(result, reference, border_crop)?,
        ssim: ssim(result, reference, border_crop)?,
        border_crop,
    })
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    w
}

/// Separable windowed mean, valid region only: output is
/// `(h - 10) x (w - 10)`.
fn window_filter(img: &ImagePlane, window: &[f64; SSIM_WINDOW]) -> ImagePlane {
    let (h, w) = img.dims();
    let ow = w - (SSIM_WINDOW - 1);
    let oh = h - (SSIM_WINDOW - 1);
    // Horizontal pass over all rows, then vertical pass over valid rows.
    let mut horiz = ImagePlane::zeros(h, ow);
    crate::exec::for_each_row_mut(horiz.data_mut(), ow, |i, row| {
        let src = img.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &wt) in window.iter().enumerate() {
                acc += wt * src[j + t];
            }
            *v = acc;
        }
    });
    let mut out = ImagePlane::zeros(oh, ow);
    crate::exec::for_each_row_mut(out.data_mut(), ow, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &wt) in window.iter().enumerate() {
                acc += wt * horiz.at(i + t, j);
            }
            *v = acc;
        }
    });
    out
}

fn ssim_plane(a: &ImagePlane, b: &ImagePlane) -> f64 {
    let window = gaussian_window();
    let mu_a = window_filter(a, &window);
    let mu_b = window_filter(b, &window);
    let aa = a.zip_map(a, |x, y| x * y).expect("same plane");
    let bb = b.zip_map(b, |x, y| x * y).expect("same plane");
    let ab = a.zip_map(b, |x, y| x * y).expect("same dims checked");
    let mu_aa = window_filter(&aa, &window);
    let mu_bb = window_filter(&bb, &window);
    let mu_ab = window_filter(&ab, &window);

    let n = mu_a.data().len();
    let mut sum = 0.0;
    for i in 0..n {
        let ma = mu_a.data()[i];
        let mb = mu_b.data()[i];
        let var_a = mu_aa.data()[i] - ma * ma;
        let var_b = mu_bb.data()[i] - mb * mb;
        let cov = mu_ab.data()[i] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
        sum += num / den;
    }
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorSpace;

    fn gradient_image(h: usize, w: usize) -> RgbImage {
        let mut img = RgbImage::zeros(h, w, ColorSpace::Linear);
        for c in 0..3 {
            for i in 0..h {
                for j in 0..w {
                    *img.plane_mut(c).at_mut(i, j) =
                        ((i * w + j) as f64 / (h * w) as f64 + 0.1 * c as f64).min(1.0);
                }
            }
        }
        img
    }

    #[test]
    fn identical_images_hit_the_caps() {
        let img = gradient_image(16, 16);
        assert_eq!(psnr(&img, &img, 0).unwrap(), PSNR_CAP);
        assert_eq!(ssim(&img, &img, 0).unwrap(), 1.0);
    }

    #[test]
    fn uniform_offset_gives_exact_psnr() {
        let a = RgbImage::zeros(8, 8, ColorSpace::Linear);
        let b = a.map_planes(|p| p.map(|_| 0.1));
        // MSE 0.01 against peak 1.0 is exactly 20 dB.
        let got = psnr(&a, &b, 0).unwrap();
        assert!((got - 20.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn ssim_penalizes_structure_loss_more_than_offset() {
        let img = gradient_image(32, 32);
        let offset = img.map_planes(|p| p.map(|v| v + 0.02));
        let flat = RgbImage::zeros(32, 32, ColorSpace::Linear)
            .map_planes(|p| p.map(|_| 0.5));
        let s_offset = ssim(&img, &offset, 0).unwrap();
        let s_flat = ssim(&img, &flat, 0).unwrap();
        assert!(s_offset > 0.9, "{s_offset}");
        assert!(s_flat < s_offset, "{s_flat} vs {s_offset}");
    }

    #[test]
    fn border_crop_ignores_edge_damage() {
        let a = gradient_image(24, 24);
        let mut b = a.clone();
        *b.plane_mut(0).at_mut(0, 0) = 1e3;
        assert_eq!(psnr(&a, &b, 2).unwrap(), PSNR_CAP);
        assert_eq!(ssim(&a, &b, 2).unwrap(), 1.0);
        assert!(psnr(&a, &b, 0).unwrap() < PSNR_CAP);
    }

    #[test]
    fn crop_that_eats_the_image_is_rejected() {
        let a = gradient_image(16, 16);
        assert!(psnr(&a, &a, 8).is_err());
        assert!(ssim(&a, &a, 3).is_err());
    }
}
