//! Part-aware stretching and tiling of colored signed distance fields.
//!
//! A [`CsdfGrid`] stores signed distance, surface color and a part index per
//! voxel. The pipeline voxelizes meshes into grids, segments them into
//! near-convex parts, and rescales planar zones of the object either by
//! stretching or by repeating the zone content, keeping geometry, color and
//! part indices continuous.

pub mod error;
pub mod fixtures;
pub mod geom;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod parts;
pub mod render;
pub mod scale;

pub use error::{Error, Result};
pub use geom::{Aabb, Vec3};
pub use grid::{Axis, CsdfGrid, Rgb, Sample, TruncationBand, UNASSIGNED};
pub use mesh::TriMesh;
pub use parts::{CutPlane, PartSet};
pub use scale::{ScaleMode, ScalingZone, SeamPolicy, ZoneEdit};
