//! Result reporting for batch restoration runs.
//!
//! Two sinks per run: a CSV with the quality numbers only (stable
//! across machines, diffable), and a JSON file that additionally
//! carries wall-clock metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryReport {
    pub image: String,
    pub kernel_index: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    /// Score of the initial iterate, the no-deblurring baseline.
    pub initial_psnr_db: f64,
    /// Wall time of the solve; excluded from the CSV.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub method: Method,
    pub border_crop: usize,
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
    pub mean_initial_psnr_db: f64,
    pub wall_seconds: f64,
    pub entries: Vec<EntryReport>,
}

impl BatchReport {
    pub fn new(method: Method, border_crop: usize, entries: Vec<EntryReport>, wall_seconds: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Parameter("a batch report needs at least one entry".into()));
        }
        let n = entries.len() as f64;
        let mean_psnr_db = entries.iter().map(|e| e.psnr_db).sum::<f64>() / n;
        let mean_ssim = entries.iter().map(|e| e.ssim).sum::<f64>() / n;
        let mean_initial_psnr_db = entries.iter().map(|e| e.initial_psnr_db).sum::<f64>() / n;
        Ok(BatchReport {
            method,
            border_crop,
            mean_psnr_db,
            mean_ssim,
            mean_initial_psnr_db,
            wall_seconds,
            entries,
        })
    }

    /// Quality numbers only, one row per observation, in manifest order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("image,kernel,psnr_db,ssim,initial_psnr_db\n");
        for e in &self.entries {
            text.push_str(&format!(
                "{},{},{:.4},{:.6},{:.4}\n",
                e.image, e.kernel_index, e.psnr_db, e.ssim, e.initial_psnr_db
            ));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(image: &str, k: usize, psnr: f64) -> EntryReport {
        EntryReport {
            image: image.into(),
            kernel_index: k,
            psnr_db: psnr,
            ssim: 0.9,
            initial_psnr_db: psnr - 3.0,
            wall_seconds: 0.5,
        }
    }

    #[test]
    fn means_and_round_trip() {
        let report = BatchReport::new(
            Method::Joint,
            50,
            vec![entry("a", 0, 30.0), entry("b", 1, 34.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(report.mean_psnr_db, 32.0);
        assert_eq!(report.mean_initial_psnr_db, 29.0);

        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("joint.json");
        report.save_json(&json).unwrap();
        let loaded = BatchReport::load_json(&json).unwrap();
        assert_eq!(loaded.entries.len(), 2);
        assert_eq!(loaded.method, Method::Joint);
        assert_eq!(loaded.mean_psnr_db, 32.0);

        let csv = dir.path().join("joint.csv");
        report.write_csv(&csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "image,kernel,psnr_db,ssim,initial_psnr_db");
        assert_eq!(lines.next().unwrap(), "a,0,30.0000,0.900000,27.0000");
        // Wall time stays out of the CSV.
        assert!(!text.contains("wall"));
    }

    #[test]
    fn empty_batches_are_refused() {
        assert!(BatchReport::new(Method::Joint, 50, vec![], 0.0).is_err());
    }
}
