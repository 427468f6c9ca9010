//! Kernel synthesis: anisotropic Gaussians, camera-shake trajectories,
//! and the per-channel warps that turn one gray kernel into a slightly
//! chromatic one.

use super::{Kernel2D, RgbKernel};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Oriented Gaussian kernel.  `angle` rotates the major axis
/// counterclockwise from the column direction, in radians.
pub fn gaussian_kernel(size: usize, sigma_major: f64, sigma_minor: f64, angle: f64) -> Result<Kernel2D> {
    if size % 2 == 0 || size < 3 {
        return Err(Error::Kernel(format!("size must be odd and at least 3, got {}", size)));
    }
    if !(sigma_major > 0.0) || !(sigma_minor > 0.0) {
        return Err(Error::Kernel("sigmas must be positive".into()));
    }
    let c = (size / 2) as f64;
    let (sin, cos) = angle.sin_cos();
    let mut taps = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            let dy = i as f64 - c;
            let dx = j as f64 - c;
            let u = dx * cos + dy * sin;
            let v = -dx * sin + dy * cos;
            taps[i * size + j] =
                (-0.5 * (u * u / (sigma_major * sigma_major) + v * v / (sigma_minor * sigma_minor)))
                    .exp();
        }
    }
    Kernel2D::normalized(size, size, taps)
}

/// Camera-shake kernel from a smoothed random walk.
///
/// A velocity with inertia drives a trajectory; positions are centered,
/// scaled into the kernel footprint and splatted bilinearly with uniform
/// exposure.  Deterministic for a given rng state.
pub fn motion_kernel(size: usize, steps: usize, rng: &mut impl Rng) -> Result<Kernel2D> {
    if size % 2 == 0 || size < 3 {
        return Err(Error::Kernel(format!("size must be odd and at least 3, got {}", size)));
    }
    if steps < 2 {
        return Err(Error::Kernel("a trajectory needs at least 2 samples".into()));
    }
    let mut ys = Vec::with_capacity(steps);
    let mut xs = Vec::with_capacity(steps);
    let (mut y, mut x, mut vy, mut vx) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..steps {
        let ny: f64 = StandardNormal.sample(rng);
        let nx: f64 = StandardNormal.sample(rng);
        vy = 0.9 * vy + 0.4 * ny;
        vx = 0.9 * vx + 0.4 * nx;
        y += vy;
        x += vx;
        ys.push(y);
        xs.push(x);
    }
    let my = ys.iter().sum::<f64>() / steps as f64;
    let mx = xs.iter().sum::<f64>() / steps as f64;
    let mut extent = 0.0f64;
    for k in 0..steps {
        ys[k] -= my;
        xs[k] -= mx;
        extent = extent.max(ys[k].abs()).max(xs[k].abs());
    }
    let radius = (size / 2) as f64;
    let scale = if extent > 0.0 { 0.92 * radius / extent } else { 0.0 };
    let c = radius;
    let mut taps = vec![0.0; size * size];
    let weight = 1.0 / steps as f64;
    for k in 0..steps {
        let py = c + ys[k] * scale;
        let px = c + xs[k] * scale;
        let i0 = py.floor() as isize;
        let j0 = px.floor() as isize;
        let fy = py - i0 as f64;
        let fx = px - j0 as f64;
        for (di, dj, w) in [
            (0, 0, (1.0 - fy) * (1.0 - fx)),
            (0, 1, (1.0 - fy) * fx),
            (1, 0, fy * (1.0 - fx)),
            (1, 1, fy * fx),
        ] {
            let i = i0 + di;
            let j = j0 + dj;
            if i >= 0 && j >= 0 && (i as usize) < size && (j as usize) < size {
                taps[i as usize * size + j as usize] += weight * w;
            }
        }
    }
    Kernel2D::normalized(size, size, taps)
}

/// Rotation and scale applied to one channel's kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWarp {
    pub angle_deg: f64,
    pub scale: f64,
}

impl ChannelWarp {
    pub const IDENTITY: ChannelWarp = ChannelWarp { angle_deg: 0.0, scale: 1.0 };
}

/// Ranges the per-channel warps are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarpRanges {
    pub angle_deg: (f64, f64),
    pub scale: (f64, f64),
}

impl Default for WarpRanges {
    fn default() -> Self {
        WarpRanges {
            angle_deg: (-5.0, 5.0),
            scale: (0.8, 1.0),
        }
    }
}

impl WarpRanges {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.angle_deg;
        let (s0, s1) = self.scale;
        if !(a0.is_finite() && a1.is_finite() && a0 <= a1) {
            return Err(Error::Parameter(format!("bad warp angle range [{}, {}]", a0, a1)));
        }
        if !(s0 > 0.0 && s1.is_finite() && s0 <= s1) {
            return Err(Error::Parameter(format!("bad warp scale range [{}, {}]", s0, s1)));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> ChannelWarp {
        let (a0, a1) = self.angle_deg;
        let (s0, s1) = self.scale;
        ChannelWarp {
            angle_deg: a0 + (a1 - a0) * rng.random::<f64>(),
            scale: s0 + (s1 - s0) * rng.random::<f64>(),
        }
    }
}

/// Rotate and scale a kernel about its center, bilinearly resampled,
/// clipped to nonnegative and renormalized.
pub fn warp_kernel(kernel: &Kernel2D, warp: ChannelWarp) -> Result<Kernel2D> {
    if warp == ChannelWarp::IDENTITY {
        return Ok(kernel.clone());
    }
    if !(warp.scale > 0.0) {
        return Err(Error::Kernel("warp scale must be positive".into()));
    }
    let (kh, kw) = (kernel.height(), kernel.width());
    let (cy, cx) = ((kh / 2) as f64, (kw / 2) as f64);
    let theta = warp.angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let mut taps = vec![0.0; kh * kw];
    for i in 0..kh {
        for j in 0..kw {
            // Inverse map: where does this output tap come from.
            let dy = i as f64 - cy;
            let dx = j as f64 - cx;
            let sy = (dy * cos - dx * sin) / warp.scale + cy;
            let sx = (dy * sin + dx * cos) / warp.scale + cx;
            let i0 = sy.floor();
            let j0 = sx.floor();
            let fy = sy - i0;
            let fx = sx - j0;
            let mut acc = 0.0;
            for (di, dj, w) in [
                (0.0, 0.0, (1.0 - fy) * (1.0 - fx)),
                (0.0, 1.0, (1.0 - fy) * fx),
                (1.0, 0.0, fy * (1.0 - fx)),
                (1.0, 1.0, fy * fx),
            ] {
                let si = i0 + di;
                let sj = j0 + dj;
                if si >= 0.0 && sj >= 0.0 && (si as usize) < kh && (sj as usize) < kw {
                    acc += w * kernel.at(si as usize, sj as usize);
                }
            }
            taps[i * kw + j] = acc.max(0.0);
        }
    }
    Kernel2D::normalized(kh, kw, taps)
}

/// Make a chromatic kernel from a gray one: blue keeps the input, red and
/// green are independently rotated and scaled within `ranges`.  Returns
/// the kernel and the warps that were drawn, indexed R, G, B.
pub fn rgb_kernel_from_gray(
    gray: &Kernel2D,
    ranges: &WarpRanges,
    rng: &mut impl Rng,
) -> Result<(RgbKernel, [ChannelWarp; 3])> {
    let warp_r = ranges.sample(rng);
    let warp_g = ranges.sample(rng);
    let warps = [warp_r, warp_g, ChannelWarp::IDENTITY];
    let r = warp_kernel(gray, warp_r)?;
    let g = warp_kernel(gray, warp_g)?;
    Ok((RgbKernel::new([r, g, gray.clone()])?, warps))
}

/// Draw a kernel from the synthesis families: half oriented Gaussians
/// with random shape, half shake trajectories.
pub fn sample_kernel(size: usize, rng: &mut impl Rng) -> Result<Kernel2D> {
    if rng.random::<f64>() < 0.5 {
        let sigma_major = 0.8 + 2.2 * rng.random::<f64>();
        let ratio = 0.35 + 0.65 * rng.random::<f64>();
        let angle = std::f64::consts::PI * rng.random::<f64>();
        gaussian_kernel(size, sigma_major, sigma_major * ratio, angle)
    } else {
        motion_kernel(size, 64, rng)
    }
}
