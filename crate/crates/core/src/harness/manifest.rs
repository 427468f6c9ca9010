//! On-disk index of a simulated benchmark set.
//!
//! The manifest records, for every observation, where the ground truth,
//! raw frame, and kernel live (relative to the manifest itself), plus
//! the noise level and channel warps that produced it, so a restoration
//! run needs nothing but this file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blur::synth::ChannelWarp;
use crate::isp::{NoiseParams, NoiseSampler};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Ground-truth image stem.
    pub image: String,
    /// Which of the kernels drawn for this image.
    pub kernel_index: usize,
    /// RNG stream the kernel, warps, and noise were drawn from.
    pub stream: u64,
    /// Relative path of the linear ground-truth image.
    pub truth: String,
    /// Relative path of the raw observation.
    pub raw: String,
    /// Relative path of the color kernel.
    pub kernel: String,
    pub noise: NoiseParams,
    /// Geometric jitter of the R, G, B kernel taps.
    pub warps: [ChannelWarp; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub cfa: String,
    pub sampler: NoiseSampler,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Write `manifest.json` into `dir` and return its path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format { path: path.clone(), message: e.to_string() })?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Load a manifest; the second value is the directory all entry
    /// paths are relative to.
    pub fn load(path: &Path) -> Result<(Manifest, PathBuf)> {
        let path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Format { path: path.clone(), message: e.to_string() })?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok((manifest, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            seed: 11,
            cfa: "rggb".into(),
            sampler: NoiseSampler::default(),
            entries: vec![ManifestEntry {
                image: "scene".into(),
                kernel_index: 2,
                stream: 2,
                truth: "truth/scene.pfm".into(),
                raw: "raw/scene_k2.pfm".into(),
                kernel: "kernels/scene_k2.pfm".into(),
                noise: NoiseParams { shot: 2e-3, read: 4e-6 },
                warps: [
                    ChannelWarp { angle_deg: 1.5, scale: 0.9 },
                    ChannelWarp { angle_deg: -2.0, scale: 0.85 },
                    ChannelWarp::IDENTITY,
                ],
            }],
        };
        let path = manifest.save(dir.path()).unwrap();
        let (loaded, base) = Manifest::load(&path).unwrap();
        assert_eq!(base, dir.path());
        assert_eq!(loaded.seed, 11);
        assert_eq!(loaded.entries.len(), 1);
        assert_eq!(loaded.entries[0].raw, "raw/scene_k2.pfm");
        assert_eq!(loaded.entries[0].noise.shot, 2e-3);
        // A directory argument finds the manifest inside it.
        let (again, _) = Manifest::load(dir.path()).unwrap();
        assert_eq!(again.entries[0].image, "scene");
    }
}
