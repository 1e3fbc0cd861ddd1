//! Configuration, wire types and grid operations shared by the partscale
//! service and command line.

pub mod config;
pub mod ops;
pub mod wire;

pub use config::{ConfigError, PipelineConfig};
pub use wire::{AtlasBundle, ErrorBody, GridInfo, History, HistoryEntry, ObjectInfo, Operation};

/// Environment variable naming the service data directory.
pub const DATA_DIR_ENV: &str = "PARTSCALE_DATA_DIR";
/// Environment variable naming a pipeline config file.
pub const CONFIG_ENV: &str = "PARTSCALE_CONFIG";
