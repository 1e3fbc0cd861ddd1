//! Greedy merging of adjacent parts whose union stays near-convex.

use rayon::prelude::*;

use super::concavity::concavity_over_filtered;
use super::{FaceKind, Part, PartSet, Piece, DEFAULT_SAMPLES};
use crate::geom::Vec3;
use crate::mesh::{SurfaceQueryIndex, TriMesh};

pub fn merge_pass(set: PartSet, threshold: f64) -> PartSet {
    merge_pass_with(set, threshold, DEFAULT_SAMPLES)
}

pub fn merge_pass_with(set: PartSet, threshold: f64, samples: usize) -> PartSet {
    let tol = set.contact_tolerance;
    let mut parts = set.parts;
    let mut adj = set.adjacency;
    loop {
        let unions: Vec<(f64, usize, usize, Part)> = adj
            .par_iter()
            .filter_map(|&(i, j)| {
                let u = union(&parts[i], &parts[j], tol, samples)?;
                Some((u.concavity, i, j, u))
            })
            .collect();
        let best = unions
            .into_iter()
            .filter(|u| u.0 <= threshold)
            .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let Some((_, i, j, merged)) = best else {
            break;
        };
        parts[i] = merged;
        parts.remove(j);
        adj = adjacency(&parts, tol);
    }
    PartSet {
        parts,
        adjacency: adj,
        contact_tolerance: tol,
    }
}

fn cut_index(piece: &Piece) -> Option<SurfaceQueryIndex> {
    let tris = piece.triangles_of(FaceKind::Cut);
    if tris.is_empty() {
        return None;
    }
    SurfaceQueryIndex::build(&piece.mesh.subset(&tris)).ok()
}

fn cut_points(piece: &Piece) -> Vec<Vec3> {
    let mut pts = Vec::new();
    for t in piece.triangles_of(FaceKind::Cut) {
        let [a, b, c] = piece.mesh.corners(t);
        pts.extend([a, b, c, (a + b + c) / 3.0]);
    }
    pts
}

/// Pairs of parts with cut-face samples within `tol` of each other.
pub(crate) fn adjacency(parts: &[Part], tol: f64) -> Vec<(usize, usize)> {
    let indices: Vec<Option<SurfaceQueryIndex>> = parts.par_iter().map(|p| cut_index(&p.piece)).collect();
    let points: Vec<Vec<Vec3>> = parts.par_iter().map(|p| cut_points(&p.piece)).collect();
    let pairs: Vec<(usize, usize)> = (0..parts.len())
        .flat_map(|i| (i + 1..parts.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .filter(|&(i, j)| {
            let (Some(bi), Some(bj)) = (&indices[i], &indices[j]) else {
                return false;
            };
            let box_i = bi.bounds();
            let box_j = bj.bounds();
            let gap = (0..3)
                .map(|a| (box_i.min[a] - box_j.max[a]).max(box_j.min[a] - box_i.max[a]).max(0.0))
                .fold(0.0f64, |m, g| m.max(g));
            gap <= tol && points[i].iter().any(|p| bj.nearest(p).distance <= tol)
        })
        .collect()
}

fn union(a: &Part, b: &Part, tol: f64, samples: usize) -> Option<Part> {
    let ia = cut_index(&a.piece)?;
    let ib = cut_index(&b.piece)?;
    let mesh = TriMesh::concat([&a.piece.mesh, &b.piece.mesh]);
    let split = a.piece.kinds.len();
    let kinds: Vec<FaceKind> = a
        .piece
        .kinds
        .iter()
        .chain(b.piece.kinds.iter())
        .enumerate()
        .map(|(t, &k)| {
            if k != FaceKind::Cut {
                return k;
            }
            let [p, q, r] = mesh.corners(t);
            let other = if t < split { &ib } else { &ia };
            if other.nearest(&((p + q + r) / 3.0)).distance <= tol {
                FaceKind::Interior
            } else {
                k
            }
        })
        .collect();
    let tris: Vec<usize> = (0..kinds.len()).filter(|&t| kinds[t] != FaceKind::Interior).collect();
    let in_contact = |p: &Vec3| ia.nearest(p).distance <= tol && ib.nearest(p).distance <= tol;
    let concavity = concavity_over_filtered(&mesh, &tris, samples, &in_contact).ok()?;
    Some(Part {
        piece: Piece { mesh, kinds },
        concavity,
        depth_limited: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::parts::cut::cut;
    use crate::parts::{concavity_of, CutPlane};

    fn part(piece: Piece) -> Part {
        let c = concavity_of(&piece, 1000).unwrap();
        Part {
            piece,
            concavity: c,
            depth_limited: false,
        }
    }

    #[test]
    fn split_cube_merges_back() {
        let cube = Piece::surface(fixtures::box_mesh(Vec3::zeros(), Vec3::repeat(1.0)));
        let out = cut(&cube, &CutPlane::new(Vec3::y(), 0.5).unwrap()).unwrap();
        let parts = vec![part(out.below), part(out.above)];
        let tol = 1.5 / 128.0;
        let adj = adjacency(&parts, tol);
        assert_eq!(adj, vec![(0, 1)]);
        let merged = merge_pass(
            PartSet {
                parts,
                adjacency: adj,
                contact_tolerance: tol,
            },
            0.05,
        );
        assert_eq!(merged.len(), 1);
        assert!(merged.parts[0].concavity <= 1e-3);
        assert!((merged.parts[0].mesh().volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn l_prism_halves_stay_apart() {
        let l = Piece::surface(fixtures::l_prism_mesh());
        let out = cut(&l, &CutPlane::new(Vec3::x(), 0.5).unwrap()).unwrap();
        let parts = vec![part(out.below), part(out.above)];
        let tol = 1.5 / 128.0;
        let adj = adjacency(&parts, tol);
        assert_eq!(adj.len(), 1);
        let set = PartSet {
            parts,
            adjacency: adj,
            contact_tolerance: tol,
        };
        let u = union(&set.parts[0], &set.parts[1], tol, 1000).unwrap();
        assert!(u.concavity > 0.15, "{}", u.concavity);
        assert_eq!(merge_pass(set, 0.05).len(), 2);
    }

    #[test]
    fn no_adjacency_is_identity() {
        let a = part(Piece::surface(fixtures::box_mesh(Vec3::zeros(), Vec3::repeat(0.4))));
        let b = part(Piece::surface(fixtures::box_mesh(Vec3::repeat(0.6), Vec3::repeat(1.0))));
        let set = PartSet {
            parts: vec![a, b],
            adjacency: vec![],
            contact_tolerance: 0.01,
        };
        let out = merge_pass(set.clone(), 0.05);
        assert_eq!(out.len(), 2);
        for (x, y) in out.parts.iter().zip(&set.parts) {
            assert_eq!(x.mesh(), y.mesh());
        }
    }
}
