//! Minimal camera pipeline: white balance, color matrix, transfer curve,
//! mosaic sampling, noise synthesis and demosaicking.
//!
//! The restoration math runs on scene-linear data, so this module's job is
//! to move images between display-encoded sRGB and the linear domain, and
//! to simulate the sensor side (mosaic + noise) when building datasets.

pub mod cfa;
pub mod demosaic;
pub mod noise;

pub use cfa::{mosaic, CfaPattern, ColorSite};
pub use demosaic::{demosaic, demosaic_bilinear, demosaic_gradient, DemosaicMethod};
pub use noise::{apply_noise, NoiseParams, NoiseSampler};

use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Threshold between the linear toe and the power segment, linear side.
const SRGB_LINEAR_KNEE: f64 = 0.0031308;
/// The same threshold on the encoded side, `12.92 * SRGB_LINEAR_KNEE`.
const SRGB_ENCODED_KNEE: f64 = 0.04045;

/// Display encoding of one linear sample.  Extended as an odd function so
/// out-of-range intermediate values stay invertible.
pub fn srgb_encode(linear: f64) -> f64 {
    let mag = linear.abs();
    let enc = if mag <= SRGB_LINEAR_KNEE {
        12.92 * mag
    } else {
        1.055 * mag.powf(1.0 / 2.4) - 0.055
    };
    enc.copysign(linear)
}

/// Inverse of [`srgb_encode`].
pub fn srgb_decode(encoded: f64) -> f64 {
    let mag = encoded.abs();
    let lin = if mag <= SRGB_ENCODED_KNEE {
        mag / 12.92
    } else {
        ((mag + 0.055) / 1.055).powf(2.4)
    };
    lin.copysign(encoded)
}

/// White-balance gains and color correction matrix.  Defaults are the
/// identity pipeline, under which the transfer curve is the only
/// conversion between linear and display space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IspParams {
    /// Per-channel gains applied in linear space, camera to display.
    pub wb_gains: [f64; 3],
    /// Row-major 3x3 matrix applied after the gains.
    pub ccm: [[f64; 3]; 3],
}

impl Default for IspParams {
    fn default() -> Self {
        IspParams {
            wb_gains: [1.0, 1.0, 1.0],
            ccm: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

impl IspParams {
    pub fn validate(&self) -> Result<()> {
        if self.wb_gains.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::Parameter("white balance gains must be positive".into()));
        }
        self.ccm_inverse()?;
        Ok(())
    }

    /// Inverse of the color matrix, by adjugate.
    pub fn ccm_inverse(&self) -> Result<[[f64; 3]; 3]> {
        let m = &self.ccm;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::Parameter("color matrix is singular".into()));
        }
        let inv = |a, b, c, d| (a * b - c * d) / det;
        Ok([
            [
                inv(m[1][1], m[2][2], m[1][2], m[2][1]),
                inv(m[0][2], m[2][1], m[0][1], m[2][2]),
                inv(m[0][1], m[1][2], m[0][2], m[1][1]),
            ],
            [
                inv(m[1][2], m[2][0], m[1][0], m[2][2]),
                inv(m[0][0], m[2][2], m[0][2], m[2][0]),
                inv(m[0][2], m[1][0], m[0][0], m[1][2]),
            ],
            [
                inv(m[1][0], m[2][1], m[1][1], m[2][0]),
                inv(m[0][1], m[2][0], m[0][0], m[2][1]),
                inv(m[0][0], m[1][1], m[0][1], m[1][0]),
            ],
        ])
    }
}

fn apply_matrix(img: &RgbImage, m: &[[f64; 3]; 3], gains: &[f64; 3], gains_first: bool) -> RgbImage {
    let (h, w) = img.dims();
    let mut out = RgbImage::zeros(h, w, img.colorspace());
    let [r, g, b] = img.planes();
    let planes = [r.data(), g.data(), b.data()];
    for c in 0..3 {
        let row_m = m[c];
        let gain_c = gains[c];
        crate::exec::for_each_row_mut(out.plane_mut(c).data_mut(), w, |i, row| {
            let base = i * w;
            for (j, v) in row.iter_mut().enumerate() {
                let idx = base + j;
                let (x, y, z) = (planes[0][idx], planes[1][idx], planes[2][idx]);
                *v = if gains_first {
                    row_m[0] * (gains[0] * x) + row_m[1] * (gains[1] * y) + row_m[2] * (gains[2] * z)
                } else {
                    (row_m[0] * x + row_m[1] * y + row_m[2] * z) * gain_c
                };
            }
        });
    }
    out
}

/// Scene-linear to display sRGB: gains, then color matrix, then transfer
/// curve.  The input must be tagged linear.
pub fn linrgb_to_srgb(img: &RgbImage, params: &IspParams) -> Result<RgbImage> {
    if img.colorspace() != ColorSpace::Linear {
        return Err(Error::Parameter("linrgb_to_srgb wants a linear image".into()));
    }
    params.validate()?;
    let mixed = apply_matrix(img, &params.ccm, &params.wb_gains, true);
    Ok(mixed.map_planes(|p| p.map(srgb_encode)).with_colorspace(ColorSpace::Srgb))
}

/// Display sRGB to scene-linear: inverse transfer curve, inverse color
/// matrix, then the gains divided back out.
pub fn srgb_to_linrgb(img: &RgbImage, params: &IspParams) -> Result<RgbImage> {
    if img.colorspace() != ColorSpace::Srgb {
        return Err(Error::Parameter("srgb_to_linrgb wants an srgb image".into()));
    }
    let inv = params.ccm_inverse()?;
    let decoded = img.map_planes(|p| p.map(srgb_decode));
    let inv_gains = [
        1.0 / params.wb_gains[0],
        1.0 / params.wb_gains[1],
        1.0 / params.wb_gains[2],
    ];
    Ok(apply_matrix(&decoded, &inv, &inv_gains, false).with_colorspace(ColorSpace::Linear))
}

/// Raw mosaicked frame: one plane whose pixel colors follow a CFA, plus
/// the noise level it was (or should be) corrupted with.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    plane: ImagePlane,
    cfa: CfaPattern,
    noise: NoiseParams,
}

impl RawImage {
    /// Dimensions must be even so every 2x2 CFA cell is complete.
    pub fn new(plane: ImagePlane, cfa: CfaPattern, noise: NoiseParams) -> Result<Self> {
        let (h, w) = plane.dims();
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::Shape(format!("raw frames need even dimensions, got {}x{}", h, w)));
        }
        noise.validate()?;
        Ok(RawImage { plane, cfa, noise })
    }

    #[inline]
    pub fn plane(&self) -> &ImagePlane {
        &self.plane
    }

    #[inline]
    pub fn cfa(&self) -> &CfaPattern {
        &self.cfa
    }

    #[inline]
    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn dims(&self) -> (usize, usize) {
        self.plane.dims()
    }

    pub fn with_noise(mut self, noise: NoiseParams) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_plane(self, plane: ImagePlane) -> Result<Self> {
        RawImage::new(plane, self.cfa, self.noise)
    }

    pub fn into_plane(self) -> ImagePlane {
        self.plane
    }
}
