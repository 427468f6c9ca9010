//! File formats.
//!
//! Two carriers: PNG for display-referred previews and ground truth
//! sources, PFM for lossless float planes (raw mosaics, kernels, linear
//! reference images).  Format choice keys off the file extension; loaded
//! RGB data is tagged sRGB when it came from PNG and linear when it came
//! from PFM, since that is how this pipeline writes them.

pub mod pfm;
pub mod png;

pub use pfm::{read_pfm, write_pfm_gray, write_pfm_rgb, PfmImage};
pub use png::{read_png, write_png16, write_png8, PngImage};

use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::{Error, Result};
use std::path::Path;

/// A loaded image file: either a full color image or a bare plane.
#[derive(Debug, Clone)]
pub enum ImageData {
    Rgb(RgbImage),
    Gray(ImagePlane),
}

impl ImageData {
    pub fn into_rgb(self) -> Result<RgbImage> {
        match self {
            ImageData::Rgb(img) => Ok(img),
            ImageData::Gray(_) => Err(Error::Parameter(
                "expected a color image, found a single plane".into(),
            )),
        }
    }

    pub fn into_gray(self) -> Result<ImagePlane> {
        match self {
            ImageData::Gray(p) => Ok(p),
            ImageData::Rgb(_) => Err(Error::Parameter(
                "expected a single plane, found a color image".into(),
            )),
        }
    }
}

/// On-disk encodings accepted by [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveFormat {
    Png8,
    Png16,
    Pfm,
}

impl SaveFormat {
    /// Default format for a path, from its extension.
    pub fn for_path(path: &Path) -> Result<SaveFormat> {
        match extension(path).as_deref() {
            Some("pfm") => Ok(SaveFormat::Pfm),
            Some("png") => Ok(SaveFormat::Png8),
            _ => Err(Error::Parameter(format!(
                "cannot infer an image format for {}",
                path.display()
            ))),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_lowercase())
}

/// Load a PNG or PFM file, dispatching on the extension.
pub fn load_image(path: &Path) -> Result<ImageData> {
    match extension(path).as_deref() {
        Some("pfm") => Ok(match read_pfm(path)? {
            PfmImage::Gray(p) => ImageData::Gray(p),
            PfmImage::Rgb(planes) => {
                ImageData::Rgb(RgbImage::new(planes, ColorSpace::Linear)?)
            }
        }),
        Some("png") => {
            let decoded = read_png(path)?;
            Ok(if decoded.planes.len() == 3 {
                let mut it = decoded.planes.into_iter();
                ImageData::Rgb(RgbImage::new(
                    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
                    ColorSpace::Srgb,
                )?)
            } else {
                ImageData::Gray(decoded.planes.into_iter().next().unwrap())
            })
        }
        _ => Err(Error::Parameter(format!(
            "unsupported image extension on {}",
            path.display()
        ))),
    }
}

/// Save an image in the requested encoding.  No color conversion happens
/// here; the samples are written as stored.
pub fn save_image(img: &ImageData, path: &Path, format: SaveFormat) -> Result<()> {
    match (img, format) {
        (ImageData::Rgb(rgb), SaveFormat::Pfm) => {
            write_pfm_rgb(path, rgb.planes())
        }
        (ImageData::Rgb(rgb), SaveFormat::Png8) => {
            write_png8(path, &[rgb.plane(0), rgb.plane(1), rgb.plane(2)])
        }
        (ImageData::Rgb(rgb), SaveFormat::Png16) => {
            write_png16(path, &[rgb.plane(0), rgb.plane(1), rgb.plane(2)])
        }
        (ImageData::Gray(p), SaveFormat::Pfm) => write_pfm_gray(path, p),
        (ImageData::Gray(p), SaveFormat::Png8) => write_png8(path, &[p]),
        (ImageData::Gray(p), SaveFormat::Png16) => write_png16(path, &[p]),
    }
}
