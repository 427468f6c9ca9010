//! Blur kernels and circular convolution.
//!
//! Convolution is cyclic throughout the crate: it is what the FFT solver
//! inverts exactly, and simulation uses the same operator so synthetic
//! data matches the forward model bit for bit.  Real captures are not
//! periodic, which is what [`edge_taper`] and the tile machinery are for.

pub mod psf_grid;
pub mod synth;

pub use psf_grid::{load_kernel_pfm, save_kernel_pfm, PsfGrid};
pub use synth::{gaussian_kernel, motion_kernel, rgb_kernel_from_gray, sample_kernel, ChannelWarp, WarpRanges};

use crate::fft;
use crate::image::{ImagePlane, RgbImage};
use crate::{Error, Result};
use num_complex::Complex;

/// Tolerance on the tap sum accepted at construction.
const SUM_TOLERANCE: f64 = 1e-6;

/// Odd-sized nonnegative kernel with unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    height: usize,
    width: usize,
    taps: Vec<f64>,
}

impl Kernel2D {
    pub fn new(height: usize, width: usize, taps: Vec<f64>) -> Result<Self> {
        if height % 2 == 0 || width % 2 == 0 || height == 0 || width == 0 {
            return Err(Error::Kernel(format!("dimensions must be odd, got {}x{}", height, width)));
        }
        if taps.len() != height * width {
            return Err(Error::Kernel(format!(
                "tap count {} does not match {}x{}",
                taps.len(),
                height,
                width
            )));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Kernel("taps must be finite and nonnegative".into()));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Kernel(format!("taps sum to {}, expected 1", sum)));
        }
        Ok(Kernel2D { height, width, taps })
    }

    /// Normalize arbitrary nonnegative taps to unit mass, then construct.
    pub fn normalized(height: usize, width: usize, mut taps: Vec<f64>) -> Result<Self> {
        let sum: f64 = taps.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::Kernel(format!("cannot normalize taps with sum {}", sum)));
        }
        for t in taps.iter_mut() {
            *t /= sum;
        }
        Kernel2D::new(height, width, taps)
    }

    /// Identity kernel of a given odd size.
    pub fn delta(size: usize) -> Self {
        let mut taps = vec![0.0; size * size];
        taps[(size / 2) * size + size / 2] = 1.0;
        Kernel2D::new(size, size, taps).expect("delta is valid")
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
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.taps[i * self.width + j]
    }

    /// Largest of the two half-widths, the reach of the kernel.
    pub fn radius(&self) -> usize {
        (self.height / 2).max(self.width / 2)
    }

    /// 180-degree rotation, the adjoint kernel under circular convolution.
    pub fn flipped(&self) -> Kernel2D {
        let mut taps = self.taps.clone();
        taps.reverse();
        Kernel2D {
            height: self.height,
            width: self.width,
            taps,
        }
    }

    /// Frequency response on an `h x w` grid.
    pub(crate) fn otf(&self, h: usize, w: usize) -> Vec<Complex<f64>> {
        fft::psf2otf(&self.taps, self.height, self.width, h, w)
    }
}

/// Per-channel blur: one kernel for each of R, G, B.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbKernel {
    channels: [Kernel2D; 3],
}

impl RgbKernel {
    pub fn new(channels: [Kernel2D; 3]) -> Result<Self> {
        let (h, w) = (channels[0].height(), channels[0].width());
        for k in &channels[1..] {
            if k.height() != h || k.width() != w {
                return Err(Error::Kernel("channel kernels must share dimensions".into()));
            }
        }
        Ok(RgbKernel { channels })
    }

    /// The same kernel on every channel.
    pub fn gray(kernel: Kernel2D) -> Self {
        RgbKernel {
            channels: [kernel.clone(), kernel.clone(), kernel],
        }
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &Kernel2D {
        &self.channels[c]
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn radius(&self) -> usize {
        self.channels[0].radius()
    }
}

/// Cyclic convolution through the FFT.
pub fn convolve_circular(plane: &ImagePlane, kernel: &Kernel2D) -> ImagePlane {
    let (h, w) = plane.dims();
    let mut spec = fft::fft2(plane.data(), h, w);
    let otf = kernel.otf(h, w);
    for (s, o) in spec.iter_mut().zip(&otf) {
        *s *= o;
    }
    ImagePlane::from_vec(h, w, fft::ifft2_real(&spec, h, w)).expect("fft keeps size")
}

/// Direct-space reference for [`convolve_circular`].  Quadratic in the
/// kernel area; meant for tests and tiny inputs.
pub fn convolve_circular_direct(plane: &ImagePlane, kernel: &Kernel2D) -> ImagePlane {
    let (h, w) = plane.dims();
    let (kh, kw) = (kernel.height(), kernel.width());
    let (ch, cw) = (kh as isize / 2, kw as isize / 2);
    let mut out = ImagePlane::zeros(h, w);
    crate::exec::for_each_row_mut(out.data_mut(), w, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..kh {
                let si = (i as isize - (a as isize - ch)).rem_euclid(h as isize) as usize;
                for b in 0..kw {
                    let sj = (j as isize - (b as isize - cw)).rem_euclid(w as isize) as usize;
                    acc += kernel.at(a, b) * plane.at(si, sj);
                }
            }
            *v = acc;
        }
    });
    out
}

/// Per-channel cyclic blur of a color image.
pub fn blur_rgb(img: &RgbImage, kernel: &RgbKernel) -> Result<RgbImage> {
    let (r, g, b) = crate::exec::join3(
        || convolve_circular(img.plane(0), kernel.channel(0)),
        || convolve_circular(img.plane(1), kernel.channel(1)),
        || convolve_circular(img.plane(2), kernel.channel(2)),
    );
    RgbImage::new([r, g, b], img.colorspace())
}

/// Blend a frame toward its cyclically blurred version inside a border
/// band one kernel radius wide.  The interior is returned bit for bit;
/// near the edge the result approaches the blurred frame, which removes
/// the brightness jump a periodic extension would otherwise wrap into
/// the deconvolution.
pub fn edge_taper(plane: &ImagePlane, kernel: &Kernel2D) -> ImagePlane {
    let (h, w) = plane.dims();
    let mr = (kernel.height() / 2).min(h / 2);
    let mc = (kernel.width() / 2).min(w / 2);
    if mr == 0 && mc == 0 {
        return plane.clone();
    }
    let blurred = convolve_circular(plane, kernel);
    let row_win = boundary_window(h, mr);
    let col_win = boundary_window(w, mc);
    let mut out = plane.clone();
    crate::exec::for_each_row_mut(out.data_mut(), w, |i, row| {
        let wi = row_win[i];
        for (j, v) in row.iter_mut().enumerate() {
            let alpha = wi * col_win[j];
            if alpha < 1.0 {
                *v = alpha * *v + (1.0 - alpha) * blurred.at(i, j);
            }
        }
    });
    out
}

/// 1 in the interior, raised-cosine decay to ~0 at both ends over
/// `margin` samples.
fn boundary_window(n: usize, margin: usize) -> Vec<f64> {
    let mut win = vec![1.0; n];
    if margin == 0 {
        return win;
    }
    for t in 0..margin {
        let x = (t as f64 + 0.5) / margin as f64;
        let w = 0.5 - 0.5 * (std::f64::consts::PI * x).cos();
        win[t] = win[t].min(w);
        win[n - 1 - t] = win[n - 1 - t].min(w);
    }
    win
}
