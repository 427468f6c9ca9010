//! Owned image buffers.
//!
//! Pixels are `f64`, row-major, nominally in `[0, 1]` but never clamped by
//! the math itself; clamping happens only at 8/16-bit export time.

mod metrics;

pub use metrics::{compute_metrics, psnr, ssim, MetricReport, PSNR_CAP};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which photometric domain an RGB image lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    /// Scene-linear RGB, the domain all restoration math runs in.
    Linear,
    /// Display-encoded sRGB.
    Srgb,
}

/// Single-channel image, row-major `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        ImagePlane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape("image dimensions must be positive".into()));
        }
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "buffer holds {} values, expected {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(ImagePlane { height, width, data })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        debug_assert!(row < self.height && col < self.width);
        &mut self.data[row * self.width + col]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Elementwise map into a new plane.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> ImagePlane {
        let mut out = self.clone();
        crate::exec::for_each_row_mut(&mut out.data, self.width, |_, row| {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        });
        out
    }

    /// Elementwise combination with a same-sized plane.
    pub fn zip_map(
        &self,
        other: &ImagePlane,
        f: impl Fn(f64, f64) -> f64 + Sync + Send,
    ) -> Result<ImagePlane> {
        self.check_same_dims(other, "zip_map")?;
        let mut out = self.clone();
        let w = self.width;
        crate::exec::for_each_row_mut(&mut out.data, w, |i, row| {
            let src = &other.data[i * w..(i + 1) * w];
            for (v, &s) in row.iter_mut().zip(src) {
                *v = f(*v, s);
            }
        });
        Ok(out)
    }

    pub fn check_same_dims(&self, other: &ImagePlane, context: &'static str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch {
                context,
                a: self.dims(),
                b: other.dims(),
            });
        }
        Ok(())
    }

    /// Cyclic shift: output pixel `(i, j)` reads input
    /// `((i - dr) mod H, (j - dc) mod W)`, so positive offsets move content
    /// down and to the right.
    pub fn roll(&self, dr: isize, dc: isize) -> ImagePlane {
        let h = self.height as isize;
        let w = self.width as isize;
        let dr = dr.rem_euclid(h) as usize;
        let dc = dc.rem_euclid(w) as usize;
        if dr == 0 && dc == 0 {
            return self.clone();
        }
        let mut out = ImagePlane::zeros(self.height, self.width);
        let width = self.width;
        let height = self.height;
        let src = &self.data;
        crate::exec::for_each_row_mut(&mut out.data, width, |i, row| {
            let si = (i + height - dr) % height;
            let base = si * width;
            for (j, v) in row.iter_mut().enumerate() {
                let sj = (j + width - dc) % width;
                *v = src[base + sj];
            }
        });
        out
    }

    /// Copy of the `height x width` window whose top-left corner is
    /// `(top, left)`.  The window must lie inside the plane.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<ImagePlane> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::Shape(format!(
                "crop {}x{}+{}+{} exceeds {}x{}",
                height, width, top, left, self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            let base = (top + i) * self.width + left;
            data.extend_from_slice(&self.data[base..base + width]);
        }
        ImagePlane::from_vec(height, width, data)
    }

    /// Paste `src` with its top-left corner at `(top, left)`.
    pub fn paste(&mut self, src: &ImagePlane, top: usize, left: usize) -> Result<()> {
        if top + src.height > self.height || left + src.width > self.width {
            return Err(Error::Shape(format!(
                "paste {}x{}+{}+{} exceeds {}x{}",
                src.height, src.width, top, left, self.height, self.width
            )));
        }
        for i in 0..src.height {
            let dst = (top + i) * self.width + left;
            self.data[dst..dst + src.width].copy_from_slice(src.row(i));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Mean squared difference against a same-sized plane.
    pub fn mse(&self, other: &ImagePlane) -> Result<f64> {
        self.check_same_dims(other, "mse")?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.data.len() as f64)
    }
}

/// Three-plane RGB image with equal plane sizes and a tracked color space.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    planes: [ImagePlane; 3],
    colorspace: ColorSpace,
}

impl RgbImage {
    pub fn new(planes: [ImagePlane; 3], colorspace: ColorSpace) -> Result<Self> {
        planes[0].check_same_dims(&planes[1], "rgb planes")?;
        planes[0].check_same_dims(&planes[2], "rgb planes")?;
        Ok(RgbImage { planes, colorspace })
    }

    pub fn zeros(height: usize, width: usize, colorspace: ColorSpace) -> Self {
        RgbImage {
            planes: [
                ImagePlane::zeros(height, width),
                ImagePlane::zeros(height, width),
                ImagePlane::zeros(height, width),
            ],
            colorspace,
        }
    }

    /// Gray image replicated onto all three channels.
    pub fn from_plane(plane: ImagePlane, colorspace: ColorSpace) -> Self {
        RgbImage {
            planes: [plane.clone(), plane.clone(), plane],
            colorspace,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    #[inline]
    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &ImagePlane {
        &self.planes[c]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut ImagePlane {
        &mut self.planes[c]
    }

    pub fn planes(&self) -> &[ImagePlane; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [ImagePlane; 3] {
        self.planes
    }

    /// Rebuild with the same planes but a different colorspace tag.  Used by
    /// the transfer-curve code after it has actually converted the samples.
    pub(crate) fn with_colorspace(mut self, colorspace: ColorSpace) -> Self {
        self.colorspace = colorspace;
        self
    }

    pub fn map_planes(&self, f: impl Fn(&ImagePlane) -> ImagePlane + Sync + Send) -> RgbImage {
        let (r, g, b) = crate::exec::join3(
            || f(&self.planes[0]),
            || f(&self.planes[1]),
            || f(&self.planes[2]),
        );
        RgbImage {
            planes: [r, g, b],
            colorspace: self.colorspace,
        }
    }

    /// Fallible per-plane map, applied in parallel.
    pub fn try_map_planes(
        &self,
        f: impl Fn(&ImagePlane) -> Result<ImagePlane> + Sync + Send,
    ) -> Result<RgbImage> {
        let (r, g, b) = crate::exec::join3(
            || f(&self.planes[0]),
            || f(&self.planes[1]),
            || f(&self.planes[2]),
        );
        Ok(RgbImage {
            planes: [r?, g?, b?],
            colorspace: self.colorspace,
        })
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<RgbImage> {
        Ok(RgbImage {
            planes: [
                self.planes[0].crop(top, left, height, width)?,
                self.planes[1].crop(top, left, height, width)?,
                self.planes[2].crop(top, left, height, width)?,
            ],
            colorspace: self.colorspace,
        })
    }

    pub fn check_same_dims(&self, other: &RgbImage, context: &'static str) -> Result<()> {
        self.planes[0].check_same_dims(&other.planes[0], context)
    }
}
