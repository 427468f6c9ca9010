//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file (or no file at all) is a
//! valid configuration; files only state what they change.  Unknown keys
//! are rejected to catch typos.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blur::synth::WarpRanges;
use crate::isp::{CfaPattern, DemosaicMethod, IspParams, NoiseParams, NoiseSampler};
use crate::solver::{
    default_lambda, FourierTikhonov, HqsSchedule, ProxOperator, TvProx, DEFAULT_BETA_MAX,
    DEFAULT_BETA_MIN, DEFAULT_ITERATIONS,
};
use crate::{Error, Result};

/// Restoration strategy selected on the command line or in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One solver handles blur, mosaic, and noise together.
    Joint,
    /// Bilinear demosaicking first, then deblurring of the RGB result.
    TwostageBilinear,
    /// Gradient-corrected demosaicking first, then deblurring.
    TwostageClassical,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Joint, Method::TwostageBilinear, Method::TwostageClassical];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Joint => "joint",
            Method::TwostageBilinear => "twostage-bilinear",
            Method::TwostageClassical => "twostage-classical",
        }
    }

    /// The demosaicking used by the two-stage variants.
    pub fn demosaic(&self) -> Option<DemosaicMethod> {
        match self {
            Method::Joint => None,
            Method::TwostageBilinear => Some(DemosaicMethod::Bilinear),
            Method::TwostageClassical => Some(DemosaicMethod::GradientCorrected),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Method::Joint),
            "twostage-bilinear" => Ok(Method::TwostageBilinear),
            "twostage-classical" => Ok(Method::TwostageClassical),
            other => Err(Error::Parameter(format!(
                "unknown method {:?}; expected joint, twostage-bilinear, or twostage-classical",
                other
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Regularizer choice for the prox stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    Tikhonov,
    Tv,
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tikhonov" => Ok(Prior::Tikhonov),
            "tv" => Ok(Prior::Tv),
            other => Err(Error::Parameter(format!(
                "unknown prior {:?}; expected tikhonov or tv",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Ground-truth images to simulate from.
    pub fixtures: Vec<PathBuf>,
    /// Where simulated data and restoration results land.
    pub output_dir: PathBuf,
    /// CFA layout name: rggb, bggr, grbg, or gbrg.
    pub cfa: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            fixtures: ["astronaut", "chelsea", "coffee", "ihc"]
                .iter()
                .map(|n| PathBuf::from(format!("fixtures/{n}.png")))
                .collect(),
            output_dir: PathBuf::from("out"),
            cfa: "rggb".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Side of the synthesized blur kernels (odd).
    pub size: usize,
    /// Kernels drawn per ground-truth image during simulation.
    pub count: usize,
    /// Per-channel geometric jitter applied to the red and green taps.
    pub warp: WarpRanges,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            size: 25,
            count: 8,
            warp: WarpRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Outer iterations of the splitting loop.
    pub iterations: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Prior weight override; derived from the noise level when absent.
    pub lambda: Option<f64>,
    pub prior: Prior,
    /// Inner iterations of the TV prox when that prior is selected.
    pub tv_inner_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: DEFAULT_ITERATIONS,
            beta_min: DEFAULT_BETA_MIN,
            beta_max: DEFAULT_BETA_MAX,
            lambda: None,
            prior: Prior::Tikhonov,
            tv_inner_iterations: 20,
        }
    }
}

impl SolverConfig {
    /// Build the annealing schedule for a given noise level.
    pub fn schedule_for(&self, noise: &NoiseParams) -> Result<HqsSchedule> {
        let lambda = match self.lambda {
            Some(l) => l,
            None => default_lambda(noise),
        };
        HqsSchedule::log_spaced(self.iterations, self.beta_min, self.beta_max, lambda)
    }

    pub fn build_prox(&self) -> Box<dyn ProxOperator> {
        match self.prior {
            Prior::Tikhonov => Box::new(FourierTikhonov),
            Prior::Tv => Box::new(TvProx {
                inner_iterations: self.tv_inner_iterations,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Border (pixels) excluded on every side before scoring.
    pub border_crop: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { border_crop: 50 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TileConfig {
    pub tile_size: usize,
    pub overlap: usize,
    /// Taper padded tiles toward their cyclic blur before solving.
    pub taper: bool,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            tile_size: crate::tile::DEFAULT_TILE_SIZE,
            overlap: crate::tile::DEFAULT_OVERLAP,
            taper: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub kernel: KernelConfig,
    pub noise: NoiseSampler,
    pub solver: SolverConfig,
    pub metrics: MetricsConfig,
    pub isp: IspParams,
    pub tiles: TileConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {}", path.display(), msg)),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.fixtures.is_empty() {
            return Err(Error::Config("no fixtures listed".into()));
        }
        CfaPattern::from_name(&self.data.cfa)?;
        if self.kernel.size % 2 == 0 || self.kernel.size == 0 {
            return Err(Error::Config(format!(
                "kernel size must be odd, got {}",
                self.kernel.size
            )));
        }
        if self.kernel.count == 0 {
            return Err(Error::Config("kernel count must be positive".into()));
        }
        self.kernel.warp.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.solver.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if !(self.solver.beta_min > 0.0 && self.solver.beta_max >= self.solver.beta_min) {
            return Err(Error::Config(format!(
                "invalid beta range [{}, {}]",
                self.solver.beta_min, self.solver.beta_max
            )));
        }
        if let Some(lambda) = self.solver.lambda {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Config(format!("lambda must be positive, got {}", lambda)));
            }
        }
        if self.solver.tv_inner_iterations == 0 {
            return Err(Error::Config("tv_inner_iterations must be positive".into()));
        }
        if self.tiles.tile_size == 0
            || self.tiles.tile_size % 2 != 0
            || self.tiles.overlap % 2 != 0
            || self.tiles.overlap * 2 > self.tiles.tile_size
        {
            return Err(Error::Config(format!(
                "tile size {} and overlap {} must be even with overlap at most half the tile",
                self.tiles.tile_size, self.tiles.overlap
            )));
        }
        self.isp.validate()?;
        Ok(())
    }

    pub fn cfa(&self) -> CfaPattern {
        // Validated at load time.
        CfaPattern::from_name(&self.data.cfa).expect("validated cfa name")
    }
}
