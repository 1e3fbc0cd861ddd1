//! Bounding-volume hierarchy for exact nearest-surface queries.

use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, Aabb, Vec3};
use crate::mesh::TriMesh;

pub const DEFAULT_MAX_LEAF: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearestHit {
    /// Unsigned distance.
    pub distance: f64,
    pub point: Vec3,
    /// Index into the source mesh's triangle list.
    pub triangle: usize,
    /// Barycentric weights of `point` on that triangle.
    pub bary: [f64; 3],
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split BVH over a mesh's triangles. Immutable once built.
#[derive(Clone, Debug)]
pub struct SurfaceQueryIndex {
    corners: Vec<[Vec3; 3]>,
    /// Leaf-ordered triangle ids.
    order: Vec<usize>,
    nodes: Vec<Node>,
    max_leaf: usize,
}

impl SurfaceQueryIndex {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        Self::build_with_leaf(mesh, DEFAULT_MAX_LEAF)
    }

    pub fn build_with_leaf(mesh: &TriMesh, max_leaf: usize) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyGeometry("surface index needs at least one triangle"));
        }
        let corners: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let centroids: Vec<Vec3> = corners.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
        let mut index = SurfaceQueryIndex {
            corners,
            order: (0..mesh.triangles.len()).collect(),
            nodes: Vec::new(),
            max_leaf: max_leaf.max(1),
        };
        let n = index.order.len();
        index.split(&centroids, 0, n);
        Ok(index)
    }

    fn split(&mut self, centroids: &[Vec3], start: usize, end: usize) -> usize {
        let bounds = Aabb::from_points(self.order[start..end].iter().flat_map(|&t| self.corners[t].iter()));
        let slot = self.nodes.len();
        if end - start <= self.max_leaf {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return slot;
        }
        let cb = Aabb::from_points(self.order[start..end].iter().map(|&t| &centroids[t]));
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis])
        });
        // Placeholder, patched once the children exist.
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.split(centroids, start, mid);
        let right = self.split(centroids, mid, end);
        self.nodes[slot] = Node::Inner { bounds, left, right };
        slot
    }

    pub fn triangle_count(&self) -> usize {
        self.corners.len()
    }

    pub fn bounds(&self) -> Aabb {
        *self.nodes[0].bounds()
    }

    /// Triangle ids held by each leaf, for structural checks.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { start, end, .. } => Some(self.order[*start..*end].to_vec()),
                _ => None,
            })
            .collect()
    }

    fn hit(&self, p: &Vec3, t: usize) -> NearestHit {
        let [a, b, c] = &self.corners[t];
        let (q, bary) = closest_point_on_triangle(p, a, b, c);
        NearestHit {
            distance: (p - q).norm(),
            point: q,
            triangle: t,
            bary,
        }
    }

    /// Exact nearest point on the indexed surface.
    pub fn nearest(&self, p: &Vec3) -> NearestHit {
        self.nearest_with_hint(p, None)
    }

    /// As [`SurfaceQueryIndex::nearest`], seeding the search bound with a
    /// triangle expected to be close (e.g. the previous query's answer).
    pub fn nearest_with_hint(&self, p: &Vec3, hint: Option<usize>) -> NearestHit {
        let mut best = match hint {
            Some(t) if t < self.corners.len() => self.hit(p, t),
            _ => NearestHit {
                distance: f64::INFINITY,
                point: *p,
                triangle: usize::MAX,
                bary: [0.0; 3],
            },
        };
        let mut best_sq = best.distance * best.distance;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds().distance_sq(p)));
        while let Some((ni, dsq)) = stack.pop() {
            if dsq > best_sq {
                continue;
            }
            match &self.nodes[ni] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let h = self.hit(p, t);
                        let hsq = h.distance * h.distance;
                        if hsq < best_sq || (hsq == best_sq && t < best.triangle) {
                            best_sq = hsq;
                            best = h;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_sq(p);
                    let dr = self.nodes[*right].bounds().distance_sq(p);
                    // Push the farther child first so the nearer one is popped next.
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn brute(mesh: &TriMesh, p: &Vec3) -> f64 {
        (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                (p - closest_point_on_triangle(p, &a, &b, &c).0).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn every_triangle_in_exactly_one_leaf() {
        let m = fixtures::icosphere(Vec3::zeros(), 1.0, 3);
        let idx = SurfaceQueryIndex::build(&m).unwrap();
        let mut seen = vec![0; m.triangles.len()];
        for leaf in idx.leaves() {
            assert!(leaf.len() <= DEFAULT_MAX_LEAF);
            for t in leaf {
                seen[t] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn vertex_query_is_zero_and_far_query_is_bounded() {
        let m = fixtures::icosphere(Vec3::zeros(), 1.0, 2);
        let idx = SurfaceQueryIndex::build(&m).unwrap();
        assert_eq!(idx.nearest(&m.vertices[5]).distance, 0.0);
        let far = Vec3::new(40.0, -3.0, 7.0);
        assert!(idx.nearest(&far).distance >= idx.bounds().distance_sq(&far).sqrt());
    }

    #[test]
    fn empty_mesh_is_an_error() {
        assert!(matches!(
            SurfaceQueryIndex::build(&TriMesh::default()),
            Err(Error::EmptyGeometry(_))
        ));
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..40),
            sub in 0u32..3,
            hint in prop::option::of(0usize..80),
        ) {
            let m = fixtures::icosphere(Vec3::new(0.1, -0.2, 0.3), 0.8, sub);
            let idx = SurfaceQueryIndex::build(&m).unwrap();
            for (x, y, z) in pts {
                let p = Vec3::new(x, y, z);
                let got = idx.nearest_with_hint(&p, hint).distance;
                let want = brute(&m, &p);
                prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }
}
