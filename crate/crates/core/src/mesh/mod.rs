//! Triangle meshes and the bridges between meshes and distance grids.

pub mod bvh;
pub mod io;
pub mod marching_cubes;
pub mod voxelize;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Aabb, Vec3};

pub use bvh::{NearestHit, SurfaceQueryIndex};
pub use marching_cubes::marching_cubes;
pub use voxelize::{voxelize, VoxelizeOptions};

/// Indexed triangle mesh, counter-clockwise winding seen from outside.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Optional per-vertex RGB in `[0, 1]`.
    pub colors: Option<Vec<[f64; 3]>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let m = TriMesh {
            vertices,
            triangles,
            colors: None,
        };
        m.check_indices()?;
        Ok(m)
    }

    pub fn with_colors(mut self, colors: Vec<[f64; 3]>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(Error::DegenerateGeometry(format!(
                "{} colors for {} vertices",
                colors.len(),
                self.vertices.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    fn check_indices(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::DegenerateGeometry(format!(
                "triangle {t:?} indexes past {n} vertices"
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                triangle_area(&a, &b, &c)
            })
            .sum()
    }

    /// Signed enclosed volume; positive for outward-facing closed meshes.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }

    /// Undirected edge → number of incident triangles.
    fn edge_counts(&self) -> HashMap<(u32, u32), usize> {
        let mut edges = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// `V - E + F` over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    /// Every edge is shared by exactly two triangles with opposite directions.
    pub fn is_closed(&self) -> bool {
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *directed.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        directed.values().all(|&v| v == 0) && self.edge_counts().values().all(|&c| c == 2)
    }

    /// Merge vertices closer than `tol_rel` times the bounding diagonal and drop
    /// degenerate triangles.
    pub fn cleaned(&self, tol_rel: f64) -> TriMesh {
        let tol = (self.bounds().diagonal() * tol_rel).max(f64::MIN_POSITIVE);
        let key = |p: &Vec3| [0, 1, 2].map(|a| (p[a] / tol).floor() as i64);
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut remap = vec![0u32; self.vertices.len()];
        let mut vertices: Vec<Vec3> = Vec::new();
        let mut colors: Vec<[f64; 3]> = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let k = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            if let Some(&j) = list
                                .iter()
                                .find(|&&j| (vertices[j as usize] - p).norm() <= tol)
                            {
                                found = Some(j);
                                break 'search;
                            }
                        }
                    }
                }
            }
            remap[i] = match found {
                Some(j) => j,
                None => {
                    let j = vertices.len() as u32;
                    vertices.push(*p);
                    if let Some(c) = &self.colors {
                        colors.push(c[i]);
                    }
                    cells.entry(k).or_default().push(j);
                    j
                }
            };
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| t.map(|i| remap[i as usize]))
            .filter(|t| {
                t[0] != t[1] && t[1] != t[2] && t[0] != t[2] && {
                    let [a, b, c] = t.map(|i| vertices[i as usize]);
                    triangle_area(&a, &b, &c) > 1e-12
                }
            })
            .collect();
        TriMesh {
            vertices,
            triangles,
            colors: self.colors.as_ref().map(|_| colors),
        }
    }

    /// Concatenate meshes without merging vertices.
    pub fn concat<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut out = TriMesh::default();
        let mut colors = Vec::new();
        let mut all_colored = true;
        for m in meshes {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&m.vertices);
            out.triangles
                .extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
            match &m.colors {
                Some(c) => colors.extend_from_slice(c),
                None => all_colored = false,
            }
        }
        if all_colored && !out.vertices.is_empty() {
            out.colors = Some(colors);
        }
        out
    }

    /// Sub-mesh made of the listed triangles, with unused vertices dropped.
    pub fn subset(&self, triangles: &[usize]) -> TriMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut out = TriMesh::default();
        let mut colors = Vec::new();
        for &t in triangles {
            let tri = self.triangles[t].map(|i| {
                let i = i as usize;
                if remap[i] == u32::MAX {
                    remap[i] = out.vertices.len() as u32;
                    out.vertices.push(self.vertices[i]);
                    if let Some(c) = &self.colors {
                        colors.push(c[i]);
                    }
                }
                remap[i]
            });
            out.triangles.push(tri);
        }
        if self.colors.is_some() {
            out.colors = Some(colors);
        }
        out
    }

    /// Triangle sets of the vertex-connected components, in order of first triangle.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for t in &self.triangles {
            let a = find(&mut parent, t[0] as usize);
            for &v in &t[1..] {
                let b = find(&mut parent, v as usize);
                if a != b {
                    parent[b] = a;
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            let root = find(&mut parent, t[0] as usize);
            let g = *slot.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(ti);
        }
        groups
    }

    pub fn translated(&self, offset: Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    pub fn with_uniform_color(mut self, c: [f64; 3]) -> TriMesh {
        self.colors = Some(vec![c; self.vertices.len()]);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn box_mesh_is_closed_with_unit_volume() {
        let m = fixtures::box_mesh(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0));
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        assert!((m.volume() - 6.0).abs() < 1e-12);
        assert!((m.area() - 22.0).abs() < 1e-12);
    }

    #[test]
    fn cleanup_merges_duplicates() {
        let a = fixtures::box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        // Unshare every vertex, then merge back.
        let mut split = TriMesh::default();
        for t in 0..a.triangles.len() {
            let base = split.vertices.len() as u32;
            split.vertices.extend(a.corners(t));
            split.triangles.push([base, base + 1, base + 2]);
        }
        assert!(!split.is_closed());
        let c = split.cleaned(1e-7);
        assert_eq!(c.vertices.len(), 8);
        assert!(c.is_closed());
    }

    #[test]
    fn components_of_two_boxes() {
        let m = fixtures::two_boxes_mesh();
        assert_eq!(m.connected_components().len(), 2);
    }
}
