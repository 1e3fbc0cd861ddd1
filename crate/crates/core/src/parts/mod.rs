//! Approximate convex decomposition and part-index transfer.
//!
//! A mesh is cut by planes until every piece is close to its convex hull,
//! adjacent pieces whose union is still near-convex are merged back, and the
//! resulting part ids are written into the grid band by nearest surface.

pub mod concavity;
pub mod cut;
pub mod decompose;
pub mod hull;
pub mod merge;
pub mod remap;
pub mod triangulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

pub use concavity::{concavity, concavity_of};
pub use cut::{cut, CutOutcome};
pub use decompose::{decompose, segment_grid, DecomposeOptions};
pub use hull::{convex_hull, ConvexHull};
pub use merge::merge_pass;
pub use remap::remap_indices;

/// Default sample count for concavity estimates.
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Origin of a triangle in a part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    /// Part of the original surface.
    Surface,
    /// Cap created by a cutting plane.
    Cut,
    /// Cap buried inside a merged part.
    Interior,
}

/// Mesh with a provenance tag per triangle.
#[derive(Clone, Debug)]
pub struct Piece {
    pub mesh: TriMesh,
    pub kinds: Vec<FaceKind>,
}

impl Piece {
    pub fn surface(mesh: TriMesh) -> Piece {
        let kinds = vec![FaceKind::Surface; mesh.triangles.len()];
        Piece { mesh, kinds }
    }

    /// Triangle indices of the given kind.
    pub fn triangles_of(&self, kind: FaceKind) -> Vec<usize> {
        (0..self.kinds.len()).filter(|&t| self.kinds[t] == kind).collect()
    }

    /// Split into vertex-connected pieces.
    pub fn components(&self) -> Vec<Piece> {
        let groups = self.mesh.connected_components();
        if groups.len() <= 1 {
            return vec![self.clone()];
        }
        groups
            .into_iter()
            .map(|g| Piece {
                kinds: g.iter().map(|&t| self.kinds[t]).collect(),
                mesh: self.mesh.subset(&g),
            })
            .collect()
    }
}

/// Oriented plane `normal · x = offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl CutPlane {
    pub fn new(normal: Vec3, offset: f64) -> Result<CutPlane> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "cut plane normal {normal:?} offset {offset}"
            )));
        }
        Ok(CutPlane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    /// Plane through `point` with the given normal.
    pub fn through(point: &Vec3, normal: Vec3) -> Result<CutPlane> {
        let n = CutPlane::new(normal, 0.0)?.normal;
        Ok(CutPlane {
            normal: n,
            offset: n.dot(point),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Part {
    pub piece: Piece,
    pub concavity: f64,
    /// Search stopped at the depth limit with concavity still above threshold.
    pub depth_limited: bool,
}

impl Part {
    pub fn mesh(&self) -> &TriMesh {
        &self.piece.mesh
    }
}

#[derive(Clone, Debug)]
pub struct PartSet {
    pub parts: Vec<Part>,
    /// Sorted pairs `(i, j)` with `i < j`.
    pub adjacency: Vec<(usize, usize)>,
    /// Cut-face contact distance used for adjacency.
    pub contact_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSummary {
    pub id: usize,
    pub concavity: f64,
    pub volume: f64,
    pub bbox: [[f64; 3]; 2],
    pub triangles: usize,
    pub depth_limited: bool,
}

/// JSON-facing description of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub parts: Vec<PartSummary>,
    pub adjacency: Vec<[usize; 2]>,
}

impl PartSet {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn concavities(&self) -> Vec<f64> {
        self.parts.iter().map(|p| p.concavity).collect()
    }

    pub fn report(&self) -> PartReport {
        PartReport {
            parts: self
                .parts
                .iter()
                .enumerate()
                .map(|(id, p)| {
                    let b = p.mesh().bounds();
                    PartSummary {
                        id,
                        concavity: p.concavity,
                        volume: p.mesh().volume(),
                        bbox: [b.min.into(), b.max.into()],
                        triangles: p.mesh().triangles.len(),
                        depth_limited: p.depth_limited,
                    }
                })
                .collect(),
            adjacency: self.adjacency.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}
