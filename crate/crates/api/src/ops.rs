//! Pipeline operations shared by the CLI and the service, so both paths
//! produce identical bytes.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use partscale::io::binary::{to_bytes, MAGIC};
use partscale::io::{encode_atlas, read_binary};
use partscale::mesh::io::{read_obj, read_stl};
use partscale::mesh::{voxelize, VoxelizeOptions};
use partscale::parts::{segment_grid, DecomposeOptions, PartReport};
use partscale::render::{sphere_trace, Camera, RenderOptions, Shading};
use partscale::scale::ScaleOptions;
use partscale::{CsdfGrid, Result, TriMesh, TruncationBand, ZoneEdit};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::wire::{AtlasBundle, DecomposeRequest, ErrorBody, GridInfo, Operation};

pub const MAX_RENDER_SIZE: u32 = 4096;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_grid(grid: &CsdfGrid) -> Vec<u8> {
    to_bytes(grid)
}

pub fn decode_grid(bytes: &[u8]) -> Result<CsdfGrid> {
    read_binary(bytes)
}

pub fn band_of(grid: &CsdfGrid, cfg: &PipelineConfig) -> Result<TruncationBand> {
    TruncationBand::voxels(grid, cfg.tau_voxels)
}

pub fn grid_info(grid: &CsdfGrid, cfg: &PipelineConfig) -> Result<GridInfo> {
    let band = band_of(grid, cfg)?;
    let h = grid.voxel_size() as f64;
    let part_ids = grid.part_ids();
    Ok(GridInfo {
        dims: grid.dims(),
        origin: grid.origin(),
        voxel_size: grid.voxel_size(),
        extent: grid.dims().map(|n| n as f64 * h),
        tau: band.tau(),
        part_count: part_ids.len(),
        part_ids,
        band: grid.band_stats(band),
        sha256: sha256_hex(&encode_grid(grid)),
    })
}

/// Input kinds accepted for upload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    Csdf,
    Obj,
    Stl,
}

impl InputKind {
    /// Guess from the leading bytes: the CSDF magic, a binary STL header, or
    /// OBJ text otherwise.
    pub fn sniff(bytes: &[u8]) -> InputKind {
        if bytes.starts_with(MAGIC) {
            InputKind::Csdf
        } else if bytes.len() >= 84 && std::str::from_utf8(&bytes[..84]).is_err() {
            InputKind::Stl
        } else {
            InputKind::Obj
        }
    }

    pub fn from_name(name: &str) -> Option<InputKind> {
        match name.to_ascii_lowercase().as_str() {
            "csdf" => Some(InputKind::Csdf),
            "obj" => Some(InputKind::Obj),
            "stl" => Some(InputKind::Stl),
            _ => None,
        }
    }
}

pub fn voxelize_mesh(mesh: &TriMesh, cfg: &PipelineConfig) -> Result<CsdfGrid> {
    let opts = VoxelizeOptions {
        padding: cfg.padding * mesh.bounds().extent().max(),
        tau_voxels: cfg.tau_voxels,
        ..VoxelizeOptions::default()
    };
    voxelize(mesh, [cfg.resolution; 3], &opts)
}

/// Decode an uploaded grid or voxelize an uploaded mesh.
pub fn load_input(bytes: &[u8], kind: InputKind, cfg: &PipelineConfig) -> Result<CsdfGrid> {
    match kind {
        InputKind::Csdf => decode_grid(bytes),
        InputKind::Obj => voxelize_mesh(&read_obj(bytes)?, cfg),
        InputKind::Stl => voxelize_mesh(&read_stl(bytes)?, cfg),
    }
}

fn json_error(e: serde_json::Error) -> ErrorBody {
    ErrorBody::new("malformed_json", e.to_string())
}

fn field_error(e: serde_path_to_error::Error<serde_json::Error>) -> ErrorBody {
    let path = e.path().to_string();
    let inner = e.into_inner().to_string();
    let field = if path == "." {
        inner
            .strip_prefix("unknown field `")
            .or_else(|| inner.strip_prefix("missing field `"))
            .and_then(|rest| rest.split('`').next())
            .map(str::to_owned)
    } else {
        Some(path)
    };
    let body = ErrorBody::new("invalid_zone", inner);
    match field {
        Some(f) => body.with_field(f),
        None => body,
    }
}

/// Parse a zone edit, filling `blend_width` from the configuration when the
/// body omits it.
pub fn parse_edit(bytes: &[u8], cfg: &PipelineConfig) -> Result<ZoneEdit, ErrorBody> {
    let mut value: Value = serde_json::from_slice(bytes).map_err(json_error)?;
    let Value::Object(map) = &mut value else {
        return Err(ErrorBody::new("invalid_zone", "zone must be a JSON object"));
    };
    map.entry("blend_width").or_insert(cfg.blend_width.into());
    let edit: ZoneEdit = serde_path_to_error::deserialize(value).map_err(field_error)?;
    edit.validate()?;
    Ok(edit)
}

pub fn parse_decompose(bytes: &[u8], cfg: &PipelineConfig) -> Result<DecomposeOptions, ErrorBody> {
    let req: DecomposeRequest = if bytes.iter().all(u8::is_ascii_whitespace) {
        DecomposeRequest::default()
    } else {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let mut body = field_error(e);
            body.code = "invalid_request".into();
            body
        })?
    };
    let mut opts = cfg.decompose_options();
    if let Some(t) = req.threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(ErrorBody::new("invalid_request", format!("threshold {t} not in (0, 1]")).with_field("threshold"));
        }
        opts.threshold = t;
    }
    if let Some(b) = req.beam {
        if !(1..=16).contains(&b) {
            return Err(ErrorBody::new("invalid_request", format!("beam {b} not in 1..=16")).with_field("beam"));
        }
        opts.beam = b;
    }
    if let Some(d) = req.max_depth {
        if !(1..=32).contains(&d) {
            return Err(ErrorBody::new("invalid_request", format!("max_depth {d} not in 1..=32")).with_field("max_depth"));
        }
        opts.max_depth = d;
    }
    Ok(opts)
}

pub struct Applied {
    pub grid: CsdfGrid,
    pub report: Option<PartReport>,
}

pub fn apply(grid: &CsdfGrid, op: &Operation, cfg: &PipelineConfig) -> Result<Applied> {
    match op {
        Operation::Scale(edit) => Ok(Applied {
            grid: edit.apply(grid, &ScaleOptions { max_dim: cfg.max_dim })?,
            report: None,
        }),
        Operation::Decompose(opts) => {
            let (grid, parts) = segment_grid(grid, opts)?;
            Ok(Applied {
                grid,
                report: Some(parts.report()),
            })
        }
        Operation::Resample { dims } => Ok(Applied {
            grid: grid.resample(*dims)?,
            report: None,
        }),
    }
}

/// Replay `ops` from `base`.
pub fn replay<'a>(base: &CsdfGrid, ops: impl IntoIterator<Item = &'a Operation>, cfg: &PipelineConfig) -> Result<CsdfGrid> {
    let mut grid = base.clone();
    for op in ops {
        grid = apply(&grid, op, cfg)?.grid;
    }
    Ok(grid)
}

/// Dimensions of a grid shrunk so its longest axis has `resolution` voxels.
pub fn preview_dims(dims: [usize; 3], resolution: usize) -> [usize; 3] {
    let longest = dims.into_iter().max().unwrap_or(1);
    if longest <= resolution {
        return dims;
    }
    let f = resolution as f64 / longest as f64;
    dims.map(|n| ((n as f64 * f).round() as usize).max(2))
}

pub fn preview_grid(grid: &CsdfGrid, cfg: &PipelineConfig) -> Result<CsdfGrid> {
    grid.resample(preview_dims(grid.dims(), cfg.preview_resolution))
}

pub fn atlas_bundle(grid: &CsdfGrid, cfg: &PipelineConfig) -> Result<AtlasBundle> {
    let atlas = encode_atlas(grid, band_of(grid, cfg)?);
    let png = atlas.to_png()?;
    Ok(AtlasBundle {
        meta: atlas.meta,
        sha256: sha256_hex(&png),
        png: B64.encode(png),
    })
}

pub fn atlas_png(bundle: &AtlasBundle) -> Result<Vec<u8>, ErrorBody> {
    B64.decode(&bundle.png)
        .map_err(|e| ErrorBody::new("format", format!("atlas png is not base64: {e}")))
}

pub fn render_png(grid: &CsdfGrid, width: u32, height: u32, parts: bool) -> Result<Vec<u8>> {
    if width == 0 || height == 0 || width > MAX_RENDER_SIZE || height > MAX_RENDER_SIZE {
        return Err(partscale::Error::InvalidDims([width as usize, height as usize, 1]));
    }
    let cam = Camera::framing(grid, width, height);
    let opts = RenderOptions {
        shading: if parts { Shading::Parts } else { Shading::Color },
        ..RenderOptions::default()
    };
    sphere_trace(grid, &cam, &opts)?.to_png()
}
