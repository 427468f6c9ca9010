//! Restoration of blurry, noisy raw (mosaicked) photographs.
//!
//! The library models a raw capture as a sharp linear RGB image that was
//! blurred per channel, sampled through a color filter array and corrupted
//! by signal-dependent noise.  Restoration inverts that chain in one pass
//! with a half-quadratic splitting scheme whose data step has a closed-form
//! FFT solution even through the mosaic, so no per-image optimization of
//! kernel or prior weights is needed.
//!
//! The crate is organized around a small set of owned image types
//! ([`image::ImagePlane`], [`image::RgbImage`], [`isp::RawImage`]) plus:
//!
//! * [`isp`]: color filter arrays, the sRGB transfer curve, shot/read noise
//!   synthesis and two baseline demosaickers.
//! * [`blur`]: blur kernels, circular convolution, kernel synthesis and
//!   per-tile kernel grids for spatially varying blur.
//! * [`solver`]: the splitting solver, its closed-form data steps and the
//!   prox operators used as image priors.
//! * [`tile`]: overlap-and-blend machinery for tile-wise restoration.
//! * [`harness`]: dataset simulation, batch restoration and benchmark
//!   reports used by the command line tool.
//!
//! Heavy loops go through [`exec`], which switches between rayon and plain
//! iteration depending on the `parallel` cargo feature.  Results are
//! identical either way; every parallel loop writes disjoint output and
//! combines in a fixed order.

// Validation uses `!(x > 0.0)` so NaN fails alongside the out-of-range
// values; the numeric kernels index several same-length buffers at once,
// where ranges read better than nested zips.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]

pub mod blur;
pub mod config;
mod error;
pub mod exec;
mod fft;
pub mod harness;
pub mod image;
pub mod io;
pub mod isp;
pub mod solver;
pub mod tile;

pub use error::{Error, Result};
