//! Tile-wise restoration for spatially varying blur.
//!
//! The image is cut into overlapping tiles on a fixed grid, each tile is
//! restored with its own kernel, and the results are blended with
//! raised-cosine windows.  Adjacent windows are built as exact
//! complements (`w` and `1 - w`), and the accumulated weight field
//! divides the blend, so the stitched image is a convex combination of
//! tile outputs at every pixel with no seam bias.
//!
//! Tiles are cut with a margin of real image context (kernel radius,
//! rounded up to even) and tapered toward their cyclic blur before
//! solving, which keeps the periodic solver honest on non-periodic
//! content.  All cut origins are even so every tile sees the same CFA
//! phase.

use crate::blur::{edge_taper, PsfGrid, RgbKernel};
use crate::image::{ImagePlane, RgbImage};
use crate::isp::{demosaic_bilinear, mosaic, DemosaicMethod, RawImage};
use crate::solver::{restore_joint, HqsSchedule, JointProblem, ProxOperator, RestoreOptions};
use crate::{Error, Result};

/// Default tile side.
pub const DEFAULT_TILE_SIZE: usize = 256;
/// Default overlap between adjacent tiles.
pub const DEFAULT_OVERLAP: usize = 64;

/// Placement of overlapping tiles along both axes of an image.
#[derive(Debug, Clone)]
pub struct TilePlan {
    tile: usize,
    row_origins: Vec<usize>,
    col_origins: Vec<usize>,
}

fn plan_axis(n: usize, tile: usize, overlap: usize) -> Result<Vec<usize>> {
    if tile > n {
        return Err(Error::Shape(format!("tile size {} exceeds image extent {}", tile, n)));
    }
    let stride = tile - overlap;
    let mut origins = vec![0usize];
    loop {
        let last = *origins.last().unwrap();
        if last + tile >= n {
            break;
        }
        origins.push((last + stride).min(n - tile));
    }
    Ok(origins)
}

impl TilePlan {
    /// Plan a cover of an `h x w` image.  Everything must be even, and
    /// the overlap at most half a tile so at most two tiles meet along
    /// an axis away from the flush last tile.
    pub fn new(h: usize, w: usize, tile: usize, overlap: usize) -> Result<Self> {
        if tile == 0 || tile % 2 != 0 || overlap % 2 != 0 {
            return Err(Error::Parameter(format!(
                "tile size and overlap must be even, got {} and {}",
                tile, overlap
            )));
        }
        if overlap * 2 > tile {
            return Err(Error::Parameter(format!(
                "overlap {} must not exceed half the tile size {}",
                overlap, tile
            )));
        }
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::Shape(format!("image must have even dimensions, got {}x{}", h, w)));
        }
        Ok(TilePlan {
            tile,
            row_origins: plan_axis(h, tile, overlap)?,
            col_origins: plan_axis(w, tile, overlap)?,
        })
    }

    pub fn tile_size(&self) -> usize {
        self.tile
    }

    pub fn rows(&self) -> usize {
        self.row_origins.len()
    }

    pub fn cols(&self) -> usize {
        self.col_origins.len()
    }

    pub fn origin(&self, r: usize, c: usize) -> (usize, usize) {
        (self.row_origins[r], self.col_origins[c])
    }

    /// Blend weights of one tile, as the outer product of its two axis
    /// windows.
    pub fn window(&self, r: usize, c: usize) -> ImagePlane {
        let wr = axis_window(&self.row_origins, r, self.tile);
        let wc = axis_window(&self.col_origins, c, self.tile);
        let mut out = ImagePlane::zeros(self.tile, self.tile);
        crate::exec::for_each_row_mut(out.data_mut(), self.tile, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = wr[i] * wc[j];
            }
        });
        out
    }

    /// Sum of all tile windows over the image, the denominator of the
    /// blend.  Equal to one everywhere up to rounding; the blend divides
    /// by it so the stitched result is exactly convex.
    pub fn weight_field(&self, h: usize, w: usize) -> ImagePlane {
        let mut acc = ImagePlane::zeros(h, w);
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let win = self.window(r, c);
                let (top, left) = self.origin(r, c);
                for i in 0..self.tile {
                    for j in 0..self.tile {
                        *acc.at_mut(top + i, left + j) += win.at(i, j);
                    }
                }
            }
        }
        acc
    }
}

/// Raised-cosine ramp sampled at half-integer offsets: strictly inside
/// (0, 1), so every covered pixel keeps a positive weight.
fn ramp(len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| 0.5 - 0.5 * (std::f64::consts::PI * (t as f64 + 0.5) / len as f64).cos())
        .collect()
}

/// Window along one axis for the tile at `index`: ramps up over the
/// overlap with the previous tile, down over the overlap with the next,
/// flat 1 between.  The down ramp is the exact complement `1 - up` so
/// facing ramps of neighboring tiles sum to 1 bitwise.
fn axis_window(origins: &[usize], index: usize, tile: usize) -> Vec<f64> {
    let mut win = vec![1.0f64; tile];
    if index > 0 {
        let lead = origins[index - 1] + tile - origins[index];
        let up = ramp(lead);
        for (t, &u) in up.iter().enumerate() {
            win[t] = win[t].min(u);
        }
    }
    if index + 1 < origins.len() {
        let trail = origins[index] + tile - origins[index + 1];
        let up = ramp(trail);
        for (t, &u) in up.iter().enumerate() {
            let pos = tile - trail + t;
            win[pos] = win[pos].min(1.0 - u);
        }
    }
    win
}

/// Read a raw plane window that may stick out of the image.  Out-of-range
/// coordinates clamp to the nearest in-range pixel of the same CFA
/// parity, so the padding continues the mosaic pattern.
pub fn cut_raw_padded(raw: &RawImage, top: isize, left: isize, height: usize, width: usize) -> Result<RawImage> {
    let (h, w) = raw.dims();
    if top % 2 != 0 || left % 2 != 0 || height % 2 != 0 || width % 2 != 0 {
        return Err(Error::Shape(
            "padded cuts must keep even origins and sizes to preserve the CFA phase".into(),
        ));
    }
    let clamp_parity = |idx: isize, n: usize| -> usize {
        if idx < 0 {
            (idx.rem_euclid(2)) as usize
        } else if idx >= n as isize {
            n - 2 + (idx.rem_euclid(2)) as usize
        } else {
            idx as usize
        }
    };
    let mut plane = ImagePlane::zeros(height, width);
    crate::exec::for_each_row_mut(plane.data_mut(), width, |i, row| {
        let si = clamp_parity(top + i as isize, h);
        for (j, v) in row.iter_mut().enumerate() {
            let sj = clamp_parity(left + j as isize, w);
            *v = raw.plane().at(si, sj);
        }
    });
    RawImage::new(plane, raw.cfa().clone(), *raw.noise())
}

/// Fade a raw frame toward its blurred self near the borders: demosaick,
/// taper each channel against its kernel, sample back through the CFA.
/// Interior pixels are untouched.
pub fn taper_raw(raw: &RawImage, kernel: &RgbKernel) -> Result<RawImage> {
    let rgb = demosaic_bilinear(raw)?;
    let planes = [
        edge_taper(rgb.plane(0), kernel.channel(0)),
        edge_taper(rgb.plane(1), kernel.channel(1)),
        edge_taper(rgb.plane(2), kernel.channel(2)),
    ];
    let tapered = RgbImage::new(planes, rgb.colorspace())?;
    let resampled = mosaic(&tapered, raw.cfa())?;
    resampled.with_noise(*raw.noise())
}

/// Settings for the tiled driver.
#[derive(Debug, Clone, Copy)]
pub struct TiledOptions {
    pub init: DemosaicMethod,
    /// Taper each padded tile before solving.  On for real captures;
    /// synthetic cyclic data can turn it off.
    pub taper: bool,
}

impl Default for TiledOptions {
    fn default() -> Self {
        TiledOptions {
            init: DemosaicMethod::Bilinear,
            taper: true,
        }
    }
}

/// Restore a raw frame whose blur varies per tile.
///
/// Each grid cell is cut with its padding margin, restored jointly with
/// its own kernel, cropped back, and blended.
pub fn restore_tiled(
    raw: &RawImage,
    grid: &PsfGrid,
    schedule: &HqsSchedule,
    prox: &dyn ProxOperator,
    options: &TiledOptions,
) -> Result<RgbImage> {
    let (h, w) = raw.dims();
    let plan = TilePlan::new(h, w, grid.tile_size(), grid.overlap())?;
    if plan.rows() != grid.rows() || plan.cols() != grid.cols() {
        return Err(Error::Parameter(format!(
            "kernel grid is {}x{} but a {}x{} image needs {}x{} tiles of {} with overlap {}",
            grid.rows(),
            grid.cols(),
            h,
            w,
            plan.rows(),
            plan.cols(),
            grid.tile_size(),
            grid.overlap()
        )));
    }
    let mut pad = 0usize;
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            pad = pad.max(grid.kernel_at(r, c).radius());
        }
    }
    pad = (pad + 1) & !1;
    let tile = grid.tile_size();
    let n_tiles = plan.rows() * plan.cols();

    let results: Vec<Result<RgbImage>> = crate::exec::map_indexed(n_tiles, |idx| {
        let r = idx / plan.cols();
        let c = idx % plan.cols();
        let (top, left) = plan.origin(r, c);
        let cut = cut_raw_padded(
            raw,
            top as isize - pad as isize,
            left as isize - pad as isize,
            tile + 2 * pad,
            tile + 2 * pad,
        )?;
        let kernel = grid.kernel_at(r, c).clone();
        let cut = if options.taper { taper_raw(&cut, &kernel)? } else { cut };
        let problem = JointProblem::new(cut, kernel, schedule.clone())?;
        let opts = RestoreOptions {
            init: options.init,
            record_objective: false,
        };
        let restored = restore_joint(&problem, prox, &opts)?;
        restored.image.crop(pad, pad, tile, tile)
    });

    let mut num = RgbImage::zeros(h, w, crate::image::ColorSpace::Linear);
    let mut den = ImagePlane::zeros(h, w);
    for (idx, restored) in results.into_iter().enumerate() {
        let restored = restored?;
        let r = idx / plan.cols();
        let c = idx % plan.cols();
        let (top, left) = plan.origin(r, c);
        let win = plan.window(r, c);
        for i in 0..tile {
            for j in 0..tile {
                let wgt = win.at(i, j);
                *den.at_mut(top + i, left + j) += wgt;
                for ch in 0..3 {
                    *num.plane_mut(ch).at_mut(top + i, left + j) += wgt * restored.plane(ch).at(i, j);
                }
            }
        }
    }
    for ch in 0..3 {
        let plane = num.plane_mut(ch);
        crate::exec::for_each_row_mut(plane.data_mut(), w, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v /= den.at(i, j);
            }
        });
    }
    Ok(num)
}
