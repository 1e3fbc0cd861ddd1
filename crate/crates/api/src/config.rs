//! Pipeline configuration, read from a TOML file.
//!
//! ```toml
//! resolution = 128            # voxels along each axis when voxelizing, 8..=512
//! tau_voxels = 3.0            # truncation band half-width in voxels, (0, 32]
//! padding = 0.05              # empty margin around meshes, fraction of the longest extent, [0, 1]
//! blend_width = 3             # default seam blend layers for tiling, 0..=64
//! max_dim = 512               # largest output length along a scaled axis, 16..=4096
//! output_dims = [32, 64, 128, 256]   # sizes accepted by `resample`
//! preview_resolution = 64     # longest axis of preview grids, 8..=512
//!
//! [decompose]
//! threshold = 0.05            # (0, 1]
//! beam = 3                    # 1..=16
//! max_depth = 8               # 1..=32
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::path::Path;

use partscale::parts::DecomposeOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config key `{key}` out of range: {reason}")]
    Range { key: &'static str, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub resolution: usize,
    pub tau_voxels: f64,
    pub padding: f64,
    pub blend_width: usize,
    pub max_dim: usize,
    pub output_dims: Vec<usize>,
    pub preview_resolution: usize,
    pub decompose: DecomposeConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub threshold: f64,
    pub beam: usize,
    pub max_depth: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            resolution: 128,
            tau_voxels: 3.0,
            padding: 0.05,
            blend_width: 3,
            max_dim: 512,
            output_dims: vec![32, 64, 128, 256],
            preview_resolution: 64,
            decompose: DecomposeConfig::default(),
        }
    }
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        let d = DecomposeOptions::default();
        DecomposeConfig {
            threshold: d.threshold,
            beam: d.beam,
            max_depth: d.max_depth,
        }
    }
}

fn check(ok: bool, key: &'static str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Range { key, reason: reason() })
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        PipelineConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check((8..=512).contains(&self.resolution), "resolution", || {
            format!("{} not in 8..=512", self.resolution)
        })?;
        check(self.tau_voxels > 0.0 && self.tau_voxels <= 32.0, "tau_voxels", || {
            format!("{} not in (0, 32]", self.tau_voxels)
        })?;
        check((0.0..=1.0).contains(&self.padding), "padding", || {
            format!("{} not in [0, 1]", self.padding)
        })?;
        check(self.blend_width <= 64, "blend_width", || format!("{} exceeds 64", self.blend_width))?;
        check((16..=4096).contains(&self.max_dim), "max_dim", || {
            format!("{} not in 16..=4096", self.max_dim)
        })?;
        check(!self.output_dims.is_empty(), "output_dims", || "empty".into())?;
        for &d in &self.output_dims {
            check((2..=self.max_dim).contains(&d), "output_dims", || {
                format!("{d} not in 2..={}", self.max_dim)
            })?;
        }
        check((8..=512).contains(&self.preview_resolution), "preview_resolution", || {
            format!("{} not in 8..=512", self.preview_resolution)
        })?;
        let d = &self.decompose;
        check(d.threshold > 0.0 && d.threshold <= 1.0, "decompose.threshold", || {
            format!("{} not in (0, 1]", d.threshold)
        })?;
        check((1..=16).contains(&d.beam), "decompose.beam", || format!("{} not in 1..=16", d.beam))?;
        check((1..=32).contains(&d.max_depth), "decompose.max_depth", || {
            format!("{} not in 1..=32", d.max_depth)
        })?;
        Ok(())
    }

    pub fn decompose_options(&self) -> DecomposeOptions {
        DecomposeOptions {
            threshold: self.decompose.threshold,
            beam: self.decompose.beam,
            max_depth: self.decompose.max_depth,
            ..DecomposeOptions::default()
        }
    }
}
