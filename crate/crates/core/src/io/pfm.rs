//! Portable float map reader/writer.
//!
//! The on-disk layout is the classic one: a `PF` (color) or `Pf` (gray)
//! magic, width and height, a scale whose sign encodes endianness, then
//! raw 32-bit floats with rows stored bottom to top.  We always write
//! little-endian (`-1.0`) but read either order.  Samples are widened to
//! `f64` in memory, so a write/read cycle is exact at `f32` precision.

use crate::image::ImagePlane;
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Decoded float map: one plane or three.
#[derive(Debug, Clone)]
pub enum PfmImage {
    Gray(ImagePlane),
    Rgb([ImagePlane; 3]),
}

pub fn write_pfm_gray(path: &Path, plane: &ImagePlane) -> Result<()> {
    write_pfm(path, &[plane])
}

pub fn write_pfm_rgb(path: &Path, planes: &[ImagePlane; 3]) -> Result<()> {
    planes[0].check_same_dims(&planes[1], "pfm planes")?;
    planes[0].check_same_dims(&planes[2], "pfm planes")?;
    write_pfm(path, &[&planes[0], &planes[1], &planes[2]])
}

fn write_pfm(path: &Path, planes: &[&ImagePlane]) -> Result<()> {
    let (h, w) = planes[0].dims();
    let magic = if planes.len() == 3 { "PF" } else { "Pf" };
    let mut buf = Vec::with_capacity(32 + 4 * planes.len() * h * w);
    write!(&mut buf, "{}\n{} {}\n-1.0\n", magic, w, h).expect("vec write");
    for i in (0..h).rev() {
        for j in 0..w {
            for plane in planes {
                buf.extend_from_slice(&(plane.at(i, j) as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos)
        .ok_or_else(|| Error::format(path, "missing magic"))?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(path, format!("unknown magic {:?}", other))),
    };
    let w: usize = parse_token(&bytes, &mut pos, path, "width")?;
    let h: usize = parse_token(&bytes, &mut pos, path, "height")?;
    let scale: f64 = parse_token(&bytes, &mut pos, path, "scale")?;
    if w == 0 || h == 0 {
        return Err(Error::format(path, "zero dimension"));
    }
    if scale == 0.0 {
        return Err(Error::format(path, "scale must be nonzero"));
    }
    // A single whitespace byte separates the header from the samples.
    pos += 1;
    let need = w * h * channels * 4;
    if bytes.len() < pos || bytes.len() - pos != need {
        return Err(Error::format(
            path,
            format!("expected {} data bytes, found {}", need, bytes.len().saturating_sub(pos)),
        ));
    }
    let little_endian = scale < 0.0;
    let mut planes: Vec<ImagePlane> = (0..channels).map(|_| ImagePlane::zeros(h, w)).collect();
    let mut offset = pos;
    for i in (0..h).rev() {
        for j in 0..w {
            for plane in planes.iter_mut() {
                let raw: [u8; 4] = bytes[offset..offset + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(raw)
                } else {
                    f32::from_be_bytes(raw)
                };
                *plane.at_mut(i, j) = v as f64;
                offset += 4;
            }
        }
    }
    if channels == 3 {
        let mut it = planes.into_iter();
        Ok(PfmImage::Rgb([
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        ]))
    } else {
        Ok(PfmImage::Gray(planes.pop().unwrap()))
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    } else {
        None
    }
}

fn parse_token<T: std::str::FromStr>(
    bytes: &[u8],
    pos: &mut usize,
    path: &Path,
    what: &str,
) -> Result<T> {
    next_token(bytes, pos)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format(path, format!("bad {} field", what)))
}
