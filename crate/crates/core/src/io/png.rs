//! PNG import/export at 8 and 16 bits via the `image` crate.
//!
//! Loading maps samples to `[0, 1]` by dividing by the type maximum;
//! saving clamps to `[0, 1]` and rounds to the nearest code.  Alpha is
//! dropped on load.

use crate::image::ImagePlane;
use crate::{Error, Result};
use image::DynamicImage;
use std::path::Path;

/// Decoded PNG: one plane or three, plus the source bit depth.
#[derive(Debug, Clone)]
pub struct PngImage {
    pub planes: Vec<ImagePlane>,
    pub bit_depth: u8,
}

pub fn read_png(path: &Path) -> Result<PngImage> {
    let dynimg = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let (planes, bit_depth) = match dynimg {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let data = img.into_raw().iter().map(|&v| v as f64 / 255.0).collect();
            (vec![ImagePlane::from_vec(h as usize, w as usize, data)?], 8)
        }
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let data = img.into_raw().iter().map(|&v| v as f64 / 65535.0).collect();
            (vec![ImagePlane::from_vec(h as usize, w as usize, data)?], 16)
        }
        other => {
            // Everything else goes through an RGB representation.
            let bit_depth = match other {
                DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => 16,
                _ => 8,
            };
            if bit_depth == 16 {
                let img = other.into_rgb16();
                let (w, h) = img.dimensions();
                (deinterleave(&img.into_raw(), h as usize, w as usize, 65535.0)?, 16)
            } else {
                let img = other.into_rgb8();
                let (w, h) = img.dimensions();
                let raw: Vec<u16> = img.into_raw().iter().map(|&v| v as u16).collect();
                (deinterleave(&raw, h as usize, w as usize, 255.0)?, 8)
            }
        }
    };
    Ok(PngImage { planes, bit_depth })
}

fn deinterleave(raw: &[u16], h: usize, w: usize, max: f64) -> Result<Vec<ImagePlane>> {
    let mut planes = vec![ImagePlane::zeros(h, w); 3];
    for c in 0..3 {
        let plane = planes[c].data_mut();
        for (i, chunk) in raw.chunks_exact(3).enumerate() {
            plane[i] = chunk[c] as f64 / max;
        }
    }
    Ok(planes)
}

fn quantize<T>(planes: &[&ImagePlane], max: f64, cast: impl Fn(f64) -> T) -> Vec<T> {
    let (h, w) = planes[0].dims();
    let mut out = Vec::with_capacity(h * w * planes.len());
    for i in 0..h {
        for j in 0..w {
            for p in planes {
                out.push(cast((p.at(i, j).clamp(0.0, 1.0) * max).round()));
            }
        }
    }
    out
}

pub fn write_png8(path: &Path, planes: &[&ImagePlane]) -> Result<()> {
    let (h, w) = planes[0].dims();
    let raw = quantize(planes, 255.0, |v| v as u8);
    let res = match planes.len() {
        1 => image::GrayImage::from_raw(w as u32, h as u32, raw)
            .expect("sized buffer")
            .save(path),
        3 => image::RgbImage::from_raw(w as u32, h as u32, raw)
            .expect("sized buffer")
            .save(path),
        n => return Err(Error::Parameter(format!("png wants 1 or 3 planes, got {}", n))),
    };
    res.map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_png16(path: &Path, planes: &[&ImagePlane]) -> Result<()> {
    let (h, w) = planes[0].dims();
    let raw = quantize(planes, 65535.0, |v| v as u16);
    let res = match planes.len() {
        1 => image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w as u32, h as u32, raw)
            .expect("sized buffer")
            .save(path),
        3 => image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(w as u32, h as u32, raw)
            .expect("sized buffer")
            .save(path),
        n => return Err(Error::Parameter(format!("png wants 1 or 3 planes, got {}", n))),
    };
    res.map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png16_preserves_fine_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let data: Vec<f64> = (0..64).map(|i| i as f64 / 65535.0 * 100.0).collect();
        let plane = ImagePlane::from_vec(8, 8, data).unwrap();
        write_png16(&path, &[&plane]).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back.bit_depth, 16);
        for (a, b) in plane.data().iter().zip(back.planes[0].data()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn png8_quantizes_and_clamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let plane = ImagePlane::from_vec(1, 4, vec![-0.5, 0.0, 0.5, 1.5]).unwrap();
        write_png8(&path, &[&plane]).unwrap();
        let back = read_png(&path).unwrap();
        let got = back.planes[0].data();
        assert_eq!(got[0], 0.0);
        assert_eq!(got[1], 0.0);
        assert!((got[2] - 128.0 / 255.0).abs() < 1e-12);
        assert_eq!(got[3], 1.0);
    }

    #[test]
    fn rgb_png_round_trips_per_channel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let r = ImagePlane::filled(2, 2, 1.0);
        let g = ImagePlane::filled(2, 2, 0.0);
        let b = ImagePlane::filled(2, 2, 100.0 / 255.0);
        write_png8(&path, &[&r, &g, &b]).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back.planes.len(), 3);
        assert_eq!(back.planes[0].at(0, 0), 1.0);
        assert_eq!(back.planes[1].at(1, 1), 0.0);
        assert!((back.planes[2].at(0, 1) - 100.0 / 255.0).abs() < 1e-12);
    }
}
