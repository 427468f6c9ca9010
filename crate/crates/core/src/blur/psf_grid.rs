//! Grids of per-tile kernels for spatially varying blur.
//!
//! On disk a grid is a directory: a plain-text `index.txt` describing the
//! tile geometry plus one color float map per tile holding the three
//! channel kernels.  Kernels whose mass drifted (quantized or edited
//! files) are renormalized on load; a drift beyond one part in a thousand
//! is also reported as a warning string.

use super::{Kernel2D, RgbKernel};
use crate::image::ImagePlane;
use crate::io::pfm;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Tap-sum drift that triggers a load warning.
const DRIFT_WARN: f64 = 1e-3;

/// Row-major grid of per-tile kernels plus the tile geometry they apply
/// to.  `tile_size` and `overlap` are in pixels; both stay even so every
/// tile starts on the same CFA phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfGrid {
    tile_size: usize,
    overlap: usize,
    rows: usize,
    cols: usize,
    kernels: Vec<RgbKernel>,
}

impl PsfGrid {
    pub fn new(
        tile_size: usize,
        overlap: usize,
        rows: usize,
        cols: usize,
        kernels: Vec<RgbKernel>,
    ) -> Result<Self> {
        if tile_size == 0 || tile_size % 2 != 0 || overlap % 2 != 0 {
            return Err(Error::Parameter(format!(
                "tile size and overlap must be even, got {} and {}",
                tile_size, overlap
            )));
        }
        if overlap >= tile_size {
            return Err(Error::Parameter(format!(
                "overlap {} must be smaller than the tile size {}",
                overlap, tile_size
            )));
        }
        if rows == 0 || cols == 0 || kernels.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "{} kernels do not fill a {}x{} grid",
                kernels.len(),
                rows,
                cols
            )));
        }
        Ok(PsfGrid {
            tile_size,
            overlap,
            rows,
            cols,
            kernels,
        })
    }

    /// The same kernel everywhere, mostly for testing and benchmarks.
    pub fn uniform(kernel: RgbKernel, rows: usize, cols: usize, tile_size: usize, overlap: usize) -> Result<Self> {
        PsfGrid::new(tile_size, overlap, rows, cols, vec![kernel; rows * cols])
    }

    #[inline]
    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    #[inline]
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn kernel_at(&self, row: usize, col: usize) -> &RgbKernel {
        &self.kernels[row * self.cols + col]
    }

    /// Write the grid as `index.txt` plus one float map per tile.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut index = String::new();
        writeln!(index, "tile_size {}", self.tile_size).unwrap();
        writeln!(index, "overlap {}", self.overlap).unwrap();
        writeln!(index, "grid {} {}", self.rows, self.cols).unwrap();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let file = format!("kernel_r{}_c{}.pfm", r, c);
                writeln!(index, "kernel {} {} {}", r, c, file).unwrap();
                save_kernel_pfm(&dir.join(&file), self.kernel_at(r, c))?;
            }
        }
        std::fs::write(dir.join("index.txt"), index).map_err(|e| Error::io(dir, e))
    }

    /// Read a grid back.  Returns the grid plus human-readable warnings
    /// for kernels that needed renormalization.
    pub fn load(dir: &Path) -> Result<(Self, Vec<String>)> {
        let index_path = dir.join("index.txt");
        let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let mut tile_size = None;
        let mut overlap = None;
        let mut shape = None;
        let mut files: Vec<(usize, usize, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap();
            let mut field = |what: &str| -> Result<String> {
                parts
                    .next()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::format(&index_path, format!("line {}: missing {}", lineno + 1, what)))
            };
            match key {
                "tile_size" => tile_size = Some(parse_field(&field("value")?, &index_path, lineno)?),
                "overlap" => overlap = Some(parse_field(&field("value")?, &index_path, lineno)?),
                "grid" => {
                    let r = parse_field(&field("rows")?, &index_path, lineno)?;
                    let c = parse_field(&field("cols")?, &index_path, lineno)?;
                    shape = Some((r, c));
                }
                "kernel" => {
                    let r = parse_field(&field("row")?, &index_path, lineno)?;
                    let c = parse_field(&field("col")?, &index_path, lineno)?;
                    files.push((r, c, field("file name")?));
                }
                other => {
                    return Err(Error::format(
                        &index_path,
                        format!("line {}: unknown key {:?}", lineno + 1, other),
                    ))
                }
            }
        }
        let tile_size = tile_size.ok_or_else(|| Error::format(&index_path, "missing tile_size"))?;
        let overlap = overlap.ok_or_else(|| Error::format(&index_path, "missing overlap"))?;
        let (rows, cols) = shape.ok_or_else(|| Error::format(&index_path, "missing grid line"))?;
        if files.len() != rows * cols {
            return Err(Error::format(
                &index_path,
                format!("{} kernel lines for a {}x{} grid", files.len(), rows, cols),
            ));
        }
        let mut kernels: Vec<Option<RgbKernel>> = vec![None; rows * cols];
        let mut warnings = Vec::new();
        for (r, c, file) in files {
            if r >= rows || c >= cols {
                return Err(Error::format(&index_path, format!("kernel ({}, {}) outside the grid", r, c)));
            }
            let slot = &mut kernels[r * cols + c];
            if slot.is_some() {
                return Err(Error::format(&index_path, format!("kernel ({}, {}) listed twice", r, c)));
            }
            let (kernel, mut notes) = load_kernel_pfm(&dir.join(&file))?;
            warnings.append(&mut notes);
            *slot = Some(kernel);
        }
        let kernels: Vec<RgbKernel> = kernels
            .into_iter()
            .map(|k| k.ok_or_else(|| Error::format(&index_path, "grid has holes")))
            .collect::<Result<_>>()?;
        let grid = PsfGrid::new(tile_size, overlap, rows, cols, kernels)?;
        Ok((grid, warnings))
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, path: &Path, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(path, format!("line {}: bad value {:?}", lineno + 1, s)))
}

fn kernel_to_plane(k: &Kernel2D) -> ImagePlane {
    ImagePlane::from_vec(k.height(), k.width(), k.taps().to_vec()).expect("kernel is rectangular")
}

/// Write one color kernel as a three-channel float map.
pub fn save_kernel_pfm(path: &Path, kernel: &RgbKernel) -> Result<()> {
    let planes = [
        kernel_to_plane(kernel.channel(0)),
        kernel_to_plane(kernel.channel(1)),
        kernel_to_plane(kernel.channel(2)),
    ];
    pfm::write_pfm_rgb(path, &planes)
}

/// Read a color kernel back, renormalizing each channel; a gray map is
/// replicated across channels.  The second value lists renormalization
/// warnings for kernels whose mass drifted past [`DRIFT_WARN`].
pub fn load_kernel_pfm(path: &Path) -> Result<(RgbKernel, Vec<String>)> {
    let planes = match pfm::read_pfm(path)? {
        pfm::PfmImage::Rgb(planes) => planes,
        pfm::PfmImage::Gray(p) => [p.clone(), p.clone(), p],
    };
    let mut warnings = Vec::new();
    let mut channels = Vec::with_capacity(3);
    for (ci, plane) in planes.iter().enumerate() {
        let (kh, kw) = plane.dims();
        let taps = plane.data().to_vec();
        let sum: f64 = taps.iter().sum();
        if !sum.is_finite() || sum <= 0.0 || taps.iter().any(|&t| t < 0.0) {
            return Err(Error::format(
                path,
                format!("channel {}: taps must be nonnegative with positive mass", ci),
            ));
        }
        if (sum - 1.0).abs() > DRIFT_WARN {
            warnings.push(format!(
                "{}: channel {} mass {:.6} renormalized",
                path.display(),
                ci,
                sum
            ));
        }
        channels.push(Kernel2D::normalized(kh, kw, taps)?);
    }
    let mut it = channels.into_iter();
    let kernel = RgbKernel::new([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])?;
    Ok((kernel, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blur::synth::gaussian_kernel;

    fn sample_grid() -> PsfGrid {
        let mut kernels = Vec::new();
        for i in 0..6 {
            let k = gaussian_kernel(9, 1.0 + 0.2 * i as f64, 0.8, 0.4 * i as f64).unwrap();
            kernels.push(RgbKernel::gray(k));
        }
        PsfGrid::new(64, 16, 2, 3, kernels).unwrap()
    }

    #[test]
    fn geometry_is_validated() {
        let k = RgbKernel::gray(Kernel2D::delta(3));
        assert!(PsfGrid::uniform(k.clone(), 2, 2, 63, 16).is_err());
        assert!(PsfGrid::uniform(k.clone(), 2, 2, 64, 15).is_err());
        assert!(PsfGrid::uniform(k.clone(), 2, 2, 64, 64).is_err());
        assert!(PsfGrid::uniform(k.clone(), 0, 2, 64, 16).is_err());
        assert!(PsfGrid::uniform(k, 2, 2, 64, 16).is_ok());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = sample_grid();
        grid.save(dir.path()).unwrap();
        let (back, warnings) = PsfGrid::load(dir.path()).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(back.tile_size(), 64);
        assert_eq!(back.overlap(), 16);
        assert_eq!((back.rows(), back.cols()), (2, 3));
        for r in 0..2 {
            for c in 0..3 {
                for ch in 0..3 {
                    let a = grid.kernel_at(r, c).channel(ch);
                    let b = back.kernel_at(r, c).channel(ch);
                    assert_eq!((a.height(), a.width()), (b.height(), b.width()));
                    for (x, y) in a.taps().iter().zip(b.taps()) {
                        // Float maps store f32; renormalization keeps the
                        // drift at that scale.
                        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn drifted_kernels_load_with_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let grid = PsfGrid::uniform(RgbKernel::gray(Kernel2D::delta(5)), 1, 1, 32, 8).unwrap();
        grid.save(dir.path()).unwrap();
        // Scale one stored kernel by 1.1 to fake a corrupted file.
        let path = dir.path().join("kernel_r0_c0.pfm");
        let planes = match pfm::read_pfm(&path).unwrap() {
            pfm::PfmImage::Rgb(p) => p,
            _ => unreachable!(),
        };
        let scaled = [
            planes[0].map(|v| v * 1.1),
            planes[1].map(|v| v * 1.1),
            planes[2].map(|v| v * 1.1),
        ];
        pfm::write_pfm_rgb(&path, &scaled).unwrap();
        let (back, warnings) = PsfGrid::load(dir.path()).unwrap();
        assert_eq!(warnings.len(), 3, "{warnings:?}");
        let sum: f64 = back.kernel_at(0, 0).channel(0).taps().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_indexes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("index.txt"), "tile_size 64\noverlap 16\n").unwrap();
        assert!(PsfGrid::load(dir.path()).is_err());
        std::fs::write(
            dir.path().join("index.txt"),
            "tile_size 64\noverlap 16\ngrid 1 1\nkernel 0 0 missing.pfm\n",
        )
        .unwrap();
        assert!(PsfGrid::load(dir.path()).is_err());
        std::fs::write(
            dir.path().join("index.txt"),
            "tile_size 64\noverlap 16\ngrid 1 1\nwhat 0\n",
        )
        .unwrap();
        assert!(PsfGrid::load(dir.path()).is_err());
    }
}
