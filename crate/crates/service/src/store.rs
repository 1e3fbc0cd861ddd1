//! Object persistence: grids as content-addressed CSDF blobs, one JSON
//! manifest per object.
//!
//! ```text
//! <root>/blobs/<sha256>.csdf
//! <root>/objects/<id>.json
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use partscale::parts::PartReport;
use partscale::CsdfGrid;
use partscale_api::ops::{self, Applied};
use partscale_api::{HistoryEntry, ObjectInfo, Operation, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: String,
    pub created: u64,
    pub updated: u64,
    /// Digest of the uploaded grid.
    pub base: String,
    pub history: Vec<HistoryEntry>,
    /// Report of the latest decomposition.
    pub parts: Option<PartReport>,
}

impl ObjectRecord {
    pub fn version(&self) -> usize {
        self.history.len()
    }

    pub fn current(&self) -> &str {
        self.history.last().map_or(&self.base, |e| &e.sha256)
    }

    /// Digest of the grid at `version`.
    pub fn at(&self, version: usize) -> Option<&str> {
        match version {
            0 => Some(&self.base),
            v => self.history.get(v - 1).map(|e| e.sha256.as_str()),
        }
    }
}

/// Consistent view of one object.
#[derive(Clone)]
pub struct Snapshot {
    pub record: ObjectRecord,
    pub grid: Arc<CsdfGrid>,
}

struct Slot {
    /// Held for the whole of a mutation so writes to one object are serial.
    write: tokio::sync::Mutex<()>,
    state: RwLock<Snapshot>,
    /// Low resolution copy of the current grid, keyed by its digest.
    preview: Mutex<Option<(String, Arc<CsdfGrid>)>>,
}

pub struct Store {
    root: PathBuf,
    cfg: PipelineConfig,
    objects: RwLock<HashMap<String, Arc<Slot>>>,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp{:016x}", rand::random::<u64>()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

impl Store {
    /// Open or create a store under `root`, loading every object found there.
    pub fn open(root: impl Into<PathBuf>, cfg: PipelineConfig) -> Result<Store, ApiError> {
        let root = root.into();
        std::fs::create_dir_all(root.join("blobs")).map_err(ApiError::io)?;
        std::fs::create_dir_all(root.join("objects")).map_err(ApiError::io)?;
        let store = Store {
            root,
            cfg,
            objects: RwLock::new(HashMap::new()),
        };
        let mut loaded = HashMap::new();
        for entry in std::fs::read_dir(store.root.join("objects")).map_err(ApiError::io)? {
            let path = entry.map_err(ApiError::io)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read(&path).map_err(ApiError::io)?;
            let record: ObjectRecord = serde_json::from_slice(&text)
                .map_err(|e| ApiError::internal(format!("manifest {}: {e}", path.display())))?;
            let grid = store.load_blob(record.current())?;
            loaded.insert(record.id.clone(), Arc::new(Slot::new(Snapshot { record, grid: Arc::new(grid) })));
        }
        *store.objects.write().unwrap() = loaded;
        Ok(store)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    fn blob_path(&self, sha: &str) -> PathBuf {
        self.root.join("blobs").join(format!("{sha}.csdf"))
    }

    fn manifest_path(&self, id: &str) -> PathBuf {
        self.root.join("objects").join(format!("{id}.json"))
    }

    fn put_blob(&self, bytes: &[u8]) -> Result<String, ApiError> {
        let sha = ops::sha256_hex(bytes);
        let path = self.blob_path(&sha);
        if !path.exists() {
            write_atomic(&path, bytes).map_err(ApiError::io)?;
        }
        Ok(sha)
    }

    pub fn blob(&self, sha: &str) -> Result<Vec<u8>, ApiError> {
        std::fs::read(self.blob_path(sha)).map_err(ApiError::io)
    }

    fn load_blob(&self, sha: &str) -> Result<CsdfGrid, ApiError> {
        let bytes = self.blob(sha)?;
        if ops::sha256_hex(&bytes) != sha {
            return Err(ApiError::internal(format!("blob {sha} is corrupt")));
        }
        Ok(ops::decode_grid(&bytes)?)
    }

    fn save_manifest(&self, record: &ObjectRecord) -> Result<(), ApiError> {
        let json = serde_json::to_vec_pretty(record).map_err(|e| ApiError::internal(e.to_string()))?;
        write_atomic(&self.manifest_path(&record.id), &json).map_err(ApiError::io)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.objects
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn create(&self, grid: CsdfGrid) -> Result<Snapshot, ApiError> {
        let base = self.put_blob(&ops::encode_grid(&grid))?;
        let t = now();
        let record = ObjectRecord {
            id: format!("{:016x}", rand::random::<u64>()),
            created: t,
            updated: t,
            base,
            history: Vec::new(),
            parts: None,
        };
        self.save_manifest(&record)?;
        let snap = Snapshot {
            record,
            grid: Arc::new(grid),
        };
        self.objects
            .write()
            .unwrap()
            .insert(snap.record.id.clone(), Arc::new(Slot::new(snap.clone())));
        Ok(snap)
    }

    pub fn list(&self) -> Vec<ObjectRecord> {
        let mut out: Vec<ObjectRecord> = self
            .objects
            .read()
            .unwrap()
            .values()
            .map(|s| s.state.read().unwrap().record.clone())
            .collect();
        out.sort_by(|a, b| (a.created, &a.id).cmp(&(b.created, &b.id)));
        out
    }

    pub fn snapshot(&self, id: &str) -> Result<Snapshot, ApiError> {
        Ok(self.slot(id)?.state.read().unwrap().clone())
    }

    /// The grid at a past version.
    pub fn grid_bytes_at(&self, id: &str, version: usize) -> Result<Vec<u8>, ApiError> {
        let snap = self.snapshot(id)?;
        let sha = snap.record.at(version).ok_or_else(|| {
            ApiError::unprocessable(
                partscale_api::ErrorBody::new(
                    "invalid_version",
                    format!("version {version} does not exist; latest is {}", snap.record.version()),
                )
                .with_field("version"),
            )
        })?;
        self.blob(sha)
    }

    /// Low resolution copy of the current grid, computed once per version.
    pub fn preview_base(&self, id: &str) -> Result<Arc<CsdfGrid>, ApiError> {
        let slot = self.slot(id)?;
        let snap = slot.state.read().unwrap().clone();
        let mut cache = slot.preview.lock().unwrap();
        if let Some((sha, grid)) = cache.as_ref() {
            if sha == snap.record.current() {
                return Ok(grid.clone());
            }
        }
        let grid = Arc::new(ops::preview_grid(&snap.grid, &self.cfg)?);
        *cache = Some((snap.record.current().to_owned(), grid.clone()));
        Ok(grid)
    }

    /// Apply `op` to the current grid and append it to the history.
    ///
    /// Mutations of one object run one at a time. With `expected` set, the
    /// call fails with a conflict unless the object is still at that version
    /// once its turn comes.
    pub async fn mutate(
        self: &Arc<Self>,
        id: &str,
        expected: Option<usize>,
        op: Operation,
    ) -> Result<(Snapshot, Option<PartReport>), ApiError> {
        let slot = self.slot(id)?;
        let _guard = slot.write.lock().await;
        let snap = slot.state.read().unwrap().clone();
        if let Some(v) = expected {
            if v != snap.record.version() {
                return Err(ApiError::conflict(v, snap.record.version()));
            }
        }
        let store = self.clone();
        let grid = snap.grid.clone();
        let (op, applied, sha) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
            let applied: Applied = ops::apply(&grid, &op, &store.cfg)?;
            let sha = store.put_blob(&ops::encode_grid(&applied.grid))?;
            Ok((op, applied, sha))
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;

        let mut record = snap.record.clone();
        record.updated = now();
        if applied.report.is_some() {
            record.parts = applied.report.clone();
        }
        record.history.push(HistoryEntry {
            operation: op,
            sha256: sha,
            at: record.updated,
        });
        self.save_manifest(&record)?;
        let next = Snapshot {
            record,
            grid: Arc::new(applied.grid),
        };
        *slot.state.write().unwrap() = next.clone();
        tracing::info!(id, version = next.record.version(), "committed");
        Ok((next, applied.report))
    }

    pub fn info(&self, snap: &Snapshot) -> Result<ObjectInfo, ApiError> {
        Ok(ObjectInfo {
            id: snap.record.id.clone(),
            version: snap.record.version(),
            created: snap.record.created,
            updated: snap.record.updated,
            grid: ops::grid_info(&snap.grid, &self.cfg)?,
            parts: snap.record.parts.clone(),
        })
    }
}

impl Slot {
    fn new(snap: Snapshot) -> Slot {
        Slot {
            write: tokio::sync::Mutex::new(()),
            state: RwLock::new(snap),
            preview: Mutex::new(None),
        }
    }
}
