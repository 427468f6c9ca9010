//! Color filter arrays with a 2x2 period.
//!
//! The two green sites are tracked separately because the solver treats
//! them as independent quarter-resolution observations of the same
//! channel.  `G1` is the green that appears first in row-major scan
//! order; constructors normalize custom layouts to that convention.

use super::{NoiseParams, RawImage};
use crate::image::{ColorSpace, ImagePlane, RgbImage};
use crate::{Error, Result};

/// One of the four sites in a 2x2 CFA cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSite {
    R,
    G1,
    G2,
    B,
}

impl ColorSite {
    pub const ALL: [ColorSite; 4] = [ColorSite::R, ColorSite::G1, ColorSite::G2, ColorSite::B];

    /// RGB channel index this site samples.
    #[inline]
    pub fn channel(self) -> usize {
        match self {
            ColorSite::R => 0,
            ColorSite::G1 | ColorSite::G2 => 1,
            ColorSite::B => 2,
        }
    }

    /// Position of this site in arrays ordered R, G1, G2, B.
    pub fn index(self) -> usize {
        match self {
            ColorSite::R => 0,
            ColorSite::G1 => 1,
            ColorSite::G2 => 2,
            ColorSite::B => 3,
        }
    }
}

/// 2-periodic mosaic layout, stored as the cell offset of each site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfaPattern {
    name: String,
    /// Offsets indexed by [`ColorSite::index`]: R, G1, G2, B.
    offsets: [(usize, usize); 4],
}

impl CfaPattern {
    pub fn rggb() -> Self {
        CfaPattern {
            name: "rggb".into(),
            offsets: [(0, 0), (0, 1), (1, 0), (1, 1)],
        }
    }

    pub fn bggr() -> Self {
        CfaPattern {
            name: "bggr".into(),
            offsets: [(1, 1), (0, 1), (1, 0), (0, 0)],
        }
    }

    pub fn grbg() -> Self {
        CfaPattern {
            name: "grbg".into(),
            offsets: [(0, 1), (0, 0), (1, 1), (1, 0)],
        }
    }

    pub fn gbrg() -> Self {
        CfaPattern {
            name: "gbrg".into(),
            offsets: [(1, 0), (0, 0), (1, 1), (0, 1)],
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "rggb" => Ok(Self::rggb()),
            "bggr" => Ok(Self::bggr()),
            "grbg" => Ok(Self::grbg()),
            "gbrg" => Ok(Self::gbrg()),
            other => Err(Error::Cfa(format!("unknown pattern name {:?}", other))),
        }
    }

    /// Build a pattern from explicit offsets for R, green A, green B and
    /// blue.  The offsets must cover the 2x2 cell and the greens must sit
    /// on a diagonal; the greens are relabeled so G1 scans first.
    pub fn with_offsets(
        name: &str,
        r: (usize, usize),
        ga: (usize, usize),
        gb: (usize, usize),
        b: (usize, usize),
    ) -> Result<Self> {
        let offsets = [r, ga, gb, b];
        for &(i, j) in &offsets {
            if i > 1 || j > 1 {
                return Err(Error::Cfa(format!("offset ({}, {}) outside the 2x2 cell", i, j)));
            }
        }
        let mut seen = [false; 4];
        for &(i, j) in &offsets {
            let k = i * 2 + j;
            if seen[k] {
                return Err(Error::Cfa("offsets must cover the 2x2 cell exactly".into()));
            }
            seen[k] = true;
        }
        if ga.0 == gb.0 || ga.1 == gb.1 {
            return Err(Error::Cfa("green sites must lie on a diagonal".into()));
        }
        let (g1, g2) = if ga.0 * 2 + ga.1 < gb.0 * 2 + gb.1 {
            (ga, gb)
        } else {
            (gb, ga)
        };
        Ok(CfaPattern {
            name: name.into(),
            offsets: [r, g1, g2, b],
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Cell offset of a site.
    #[inline]
    pub fn offset(&self, site: ColorSite) -> (usize, usize) {
        self.offsets[site.index()]
    }

    /// Which site pixel `(row, col)` belongs to.
    #[inline]
    pub fn site_at(&self, row: usize, col: usize) -> ColorSite {
        let key = (row % 2, col % 2);
        for site in ColorSite::ALL {
            if self.offsets[site.index()] == key {
                return site;
            }
        }
        unreachable!("offsets cover the cell");
    }
}

/// Sample a linear RGB image through a CFA.  The result keeps the noise
/// parameters at zero; noise is applied separately.
pub fn mosaic(img: &RgbImage, cfa: &CfaPattern) -> Result<RawImage> {
    if img.colorspace() != ColorSpace::Linear {
        return Err(Error::Parameter("mosaic operates on linear images".into()));
    }
    let (h, w) = img.dims();
    let mut plane = ImagePlane::zeros(h, w);
    let sites = [
        cfa.site_at(0, 0).channel(),
        cfa.site_at(0, 1).channel(),
        cfa.site_at(1, 0).channel(),
        cfa.site_at(1, 1).channel(),
    ];
    let planes = img.planes();
    crate::exec::for_each_row_mut(plane.data_mut(), w, |i, row| {
        let base = i * w;
        let parity = (i % 2) * 2;
        for (j, v) in row.iter_mut().enumerate() {
            let c = sites[parity + j % 2];
            *v = planes[c].data()[base + j];
        }
    });
    RawImage::new(plane, cfa.clone(), NoiseParams::NOISELESS)
}
