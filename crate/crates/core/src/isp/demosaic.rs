//! Baseline demosaickers.
//!
//! Two interpolators are provided: plain per-channel bilinear, and the
//! gradient-corrected 5x5 scheme that sharpens each channel with the
//! Laplacian of the channel actually observed at the target pixel.  Both
//! preserve observed samples exactly and reproduce affine intensity ramps
//! away from the border.
//!
//! Borders use parity-preserving reflection (`-1 -> 1`, `n -> n-2`) so an
//! out-of-range tap always lands on a pixel of the same CFA color.

use super::cfa::ColorSite;
use super::RawImage;
use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Interpolator selection, e.g. for config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemosaicMethod {
    Bilinear,
    GradientCorrected,
}

pub fn demosaic(raw: &RawImage, method: DemosaicMethod) -> Result<RgbImage> {
    match method {
        DemosaicMethod::Bilinear => demosaic_bilinear(raw),
        DemosaicMethod::GradientCorrected => demosaic_gradient(raw),
    }
}

#[inline]
fn preflect(idx: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = idx;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    debug_assert!(0 <= i && i < n);
    i as usize
}

fn check_dims(raw: &RawImage) -> Result<(usize, usize)> {
    let (h, w) = raw.dims();
    if h < 4 || w < 4 {
        return Err(Error::Shape(format!("demosaic needs at least 4x4 pixels, got {}x{}", h, w)));
    }
    Ok((h, w))
}

struct Tap {
    di: isize,
    dj: isize,
    weight: f64,
}

fn gather(plane: &ImagePlane, i: usize, j: usize, taps: &[Tap]) -> f64 {
    let (h, w) = plane.dims();
    let mut acc = 0.0;
    for t in taps {
        let r = preflect(i as isize + t.di, h);
        let c = preflect(j as isize + t.dj, w);
        acc += t.weight * plane.at(r, c);
    }
    acc
}

fn taps(list: &[(isize, isize, f64)]) -> Vec<Tap> {
    list.iter().map(|&(di, dj, weight)| Tap { di, dj, weight }).collect()
}

/// Per-channel averaging of the nearest same-color samples.
pub fn demosaic_bilinear(raw: &RawImage) -> Result<RgbImage> {
    let (h, w) = check_dims(raw)?;
    let plane = raw.plane();
    let cfa = raw.cfa();

    let cross = taps(&[(-1, 0, 0.25), (1, 0, 0.25), (0, -1, 0.25), (0, 1, 0.25)]);
    let horiz = taps(&[(0, -1, 0.5), (0, 1, 0.5)]);
    let vert = taps(&[(-1, 0, 0.5), (1, 0, 0.5)]);
    let diag = taps(&[(-1, -1, 0.25), (-1, 1, 0.25), (1, -1, 0.25), (1, 1, 0.25)]);

    let mut out = RgbImage::zeros(h, w, ColorSpace::Linear);
    for channel in 0..3 {
        let site_off = match channel {
            0 => Some(cfa.offset(ColorSite::R)),
            2 => Some(cfa.offset(ColorSite::B)),
            _ => None,
        };
        crate::exec::for_each_row_mut(out.plane_mut(channel).data_mut(), w, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = match site_off {
                    Some(off) => {
                        let dr = (i + off.0) % 2;
                        let dc = (j + off.1) % 2;
                        match (dr, dc) {
                            (0, 0) => plane.at(i, j),
                            (0, 1) => gather(plane, i, j, &horiz),
                            (1, 0) => gather(plane, i, j, &vert),
                            _ => gather(plane, i, j, &diag),
                        }
                    }
                    None => {
                        if cfa.site_at(i, j).channel() == 1 {
                            plane.at(i, j)
                        } else {
                            gather(plane, i, j, &cross)
                        }
                    }
                };
            }
        });
    }
    Ok(out)
}

/// Gradient-corrected 5x5 interpolation.  Weights are eighths; each
/// stencil sums to one over its target color and to zero over the others,
/// which is what makes affine ramps exact.
pub fn demosaic_gradient(raw: &RawImage) -> Result<RgbImage> {
    let (h, w) = check_dims(raw)?;
    let plane = raw.plane();
    let cfa = raw.cfa();

    let e = 1.0 / 8.0;
    // Green estimated at a red or blue pixel.
    let green_at_rb = taps(&[
        (0, 0, 4.0 * e),
        (0, -1, 2.0 * e),
        (0, 1, 2.0 * e),
        (-1, 0, 2.0 * e),
        (1, 0, 2.0 * e),
        (0, -2, -e),
        (0, 2, -e),
        (-2, 0, -e),
        (2, 0, -e),
    ]);
    // Red (or blue) at a green pixel whose same-color neighbors sit left
    // and right.
    let rb_at_green_h = taps(&[
        (0, 0, 5.0 * e),
        (0, -1, 4.0 * e),
        (0, 1, 4.0 * e),
        (0, -2, -e),
        (0, 2, -e),
        (-1, -1, -e),
        (-1, 1, -e),
        (1, -1, -e),
        (1, 1, -e),
        (-2, 0, 0.5 * e),
        (2, 0, 0.5 * e),
    ]);
    // Same with the roles of rows and columns swapped.
    let rb_at_green_v: Vec<Tap> = rb_at_green_h
        .iter()
        .map(|t| Tap { di: t.dj, dj: t.di, weight: t.weight })
        .collect();
    // Red at blue or blue at red: diagonal neighbors carry the signal.
    let rb_at_opposite = taps(&[
        (0, 0, 6.0 * e),
        (-1, -1, 2.0 * e),
        (-1, 1, 2.0 * e),
        (1, -1, 2.0 * e),
        (1, 1, 2.0 * e),
        (0, -2, -1.5 * e),
        (0, 2, -1.5 * e),
        (-2, 0, -1.5 * e),
        (2, 0, -1.5 * e),
    ]);

    let mut out = RgbImage::zeros(h, w, ColorSpace::Linear);
    for channel in 0..3 {
        let own_row = match channel {
            0 => cfa.offset(ColorSite::R).0,
            2 => cfa.offset(ColorSite::B).0,
            _ => usize::MAX,
        };
        crate::exec::for_each_row_mut(out.plane_mut(channel).data_mut(), w, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                let site = cfa.site_at(i, j);
                *v = if site.channel() == channel {
                    plane.at(i, j)
                } else if channel == 1 {
                    gather(plane, i, j, &green_at_rb)
                } else if site.channel() == 1 {
                    // Green pixel: the wanted color sits in this row
                    // exactly when the row parities agree.
                    if i % 2 == own_row {
                        gather(plane, i, j, &rb_at_green_h)
                    } else {
                        gather(plane, i, j, &rb_at_green_v)
                    }
                } else {
                    gather(plane, i, j, &rb_at_opposite)
                };
            }
        });
    }
    Ok(out)
}
