//! Sampled one-sided Hausdorff distance from a surface to its convex hull.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hull::convex_hull;
use super::{FaceKind, Piece};
use crate::error::{Error, Result};
use crate::geom::{triangle_area, Vec3};
use crate::mesh::TriMesh;

const SEED: u64 = 0x5ca1_ab1e;

/// Concavity of a closed mesh, normalized by its bounding-box diagonal.
pub fn concavity(mesh: &TriMesh, samples: usize) -> Result<f64> {
    let all: Vec<usize> = (0..mesh.triangles.len()).collect();
    concavity_over(mesh, &all, samples)
}

/// Concavity ignoring caps buried inside a merged part.
pub fn concavity_of(piece: &Piece, samples: usize) -> Result<f64> {
    let tris: Vec<usize> = (0..piece.kinds.len())
        .filter(|&t| piece.kinds[t] != FaceKind::Interior)
        .collect();
    concavity_over(&piece.mesh, &tris, samples)
}

pub(crate) fn concavity_over(mesh: &TriMesh, tris: &[usize], samples: usize) -> Result<f64> {
    concavity_over_filtered(mesh, tris, samples, &|_| false)
}

/// Like [`concavity_over`] but ignores sample points for which `skip` holds.
pub(crate) fn concavity_over_filtered(
    mesh: &TriMesh,
    tris: &[usize],
    samples: usize,
    skip: &(dyn Fn(&Vec3) -> bool + Sync),
) -> Result<f64> {
    if mesh.is_empty() || tris.is_empty() {
        return Err(Error::EmptyGeometry("part has no triangles"));
    }
    let diag = mesh.bounds().diagonal();
    if !(diag > 0.0) || mesh.volume().abs() <= 1e-12 * diag.powi(3) {
        return Err(Error::DegenerateGeometry("part has zero volume".into()));
    }
    let hull = convex_hull(&mesh.vertices)?;
    let depth = |p: &Vec3| {
        let d = hull.depth(p);
        if d <= 0.0 || skip(p) {
            0.0
        } else {
            d
        }
    };

    let mut worst = 0.0f64;
    let mut used = vec![false; mesh.vertices.len()];
    for &t in tris {
        for &v in &mesh.triangles[t] {
            used[v as usize] = true;
        }
    }
    let verts: Vec<usize> = (0..used.len()).filter(|&v| used[v]).collect();
    let stride = verts.len().div_ceil(4 * samples.max(1)).max(1);
    for &v in verts.iter().step_by(stride) {
        worst = worst.max(depth(&mesh.vertices[v]));
    }

    let mut cumulative = Vec::with_capacity(tris.len());
    let mut total = 0.0;
    for &t in tris {
        let [a, b, c] = mesh.corners(t);
        total += triangle_area(&a, &b, &c);
        cumulative.push(total);
    }
    if total > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..samples {
            let r = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c < r).min(tris.len() - 1);
            let [a, b, c] = mesh.corners(tris[k]);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let p = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
            worst = worst.max(depth(&p));
        }
    }
    Ok(worst / diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn convex_shapes_score_near_zero() {
        let cube = fixtures::box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        assert!(concavity(&cube, 1000).unwrap() <= 1e-3);
        let sphere = fixtures::icosphere(Vec3::zeros(), 1.0, 3);
        assert!(concavity(&sphere, 1000).unwrap() <= 0.01);
    }

    #[test]
    fn l_prism_reaches_inner_corner() {
        let c = concavity(&fixtures::l_prism_mesh(), 1000).unwrap();
        // Deepest wall point sits mid-thickness, a quarter unit from both caps.
        let expected = 0.25 / 1.5;
        assert!((c - expected).abs() / expected < 0.05, "{c} vs {expected}");
    }

    #[test]
    fn flat_part_is_degenerate() {
        let flat = fixtures::box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0));
        assert!(concavity(&flat, 1000).is_err());
    }
}
