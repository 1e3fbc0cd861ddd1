//! JSON bodies exchanged between the service, its client and the CLI.

use partscale::grid::BandStats;
use partscale::io::AtlasMeta;
use partscale::parts::{DecomposeOptions, PartReport};
use partscale::ZoneEdit;
use serde::{Deserialize, Serialize};

/// Error body: `{code, message, offset?, field?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<u64>,
    /// Path of the offending request field, dot separated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ErrorBody {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> ErrorBody {
        ErrorBody {
            code: code.into(),
            message: message.into(),
            offset: None,
            field: None,
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> ErrorBody {
        self.field = Some(field.into());
        self
    }

    /// Single-line JSON rendering.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error body serializes")
    }
}

impl std::fmt::Display for ErrorBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ErrorBody {}

impl From<partscale::Error> for ErrorBody {
    fn from(e: partscale::Error) -> ErrorBody {
        let mut body = ErrorBody::new(e.code(), e.to_string());
        match e {
            partscale::Error::Format { offset, .. } => body.offset = Some(offset),
            partscale::Error::InvalidZone { field, .. } => body.field = Some(field.into()),
            _ => {}
        }
        body
    }
}

/// One recorded mutation of an object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Operation {
    Scale(ZoneEdit),
    Decompose(DecomposeOptions),
    Resample { dims: [usize; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub operation: Operation,
    /// Digest of the grid produced by this step.
    pub sha256: String,
    /// Seconds since the Unix epoch.
    pub at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub id: String,
    /// Digest of the uploaded grid.
    pub base: String,
    pub entries: Vec<HistoryEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dims: [usize; 3],
    pub origin: [f32; 3],
    pub voxel_size: f32,
    /// World length of the grid box along each axis.
    pub extent: [f64; 3],
    pub tau: f64,
    pub part_ids: Vec<u16>,
    pub part_count: usize,
    pub band: BandStats,
    /// Digest of the binary payload.
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub id: String,
    /// Number of applied history entries.
    pub version: usize,
    pub created: u64,
    pub updated: u64,
    pub grid: GridInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<PartReport>,
}

/// Atlas image with its sidecar, the PNG base64 encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasBundle {
    pub meta: AtlasMeta,
    pub png: String,
    /// Digest of the PNG bytes.
    pub sha256: String,
}

/// Body of a decompose request; absent fields come from the configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeRequest {
    pub threshold: Option<f64>,
    pub beam: Option<usize>,
    pub max_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeResponse {
    pub object: ObjectInfo,
    pub report: PartReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectList {
    pub objects: Vec<ObjectSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub id: String,
    pub version: usize,
    pub sha256: String,
}
