//! Splitting closed meshes by a plane and capping the cross-section.

use std::collections::HashMap;

use super::triangulate::triangulate;
use super::{CutPlane, FaceKind, Piece};
use crate::geom::{plane_basis, triangle_area};
use crate::mesh::TriMesh;

/// Both halves of a plane cut, each closed by a planar cap tagged [`FaceKind::Cut`].
#[derive(Clone, Debug)]
pub struct CutOutcome {
    /// Side where `normal · x < offset`.
    pub below: Piece,
    pub above: Piece,
    pub cap_area: f64,
    /// Plane actually used after nudging off vertices.
    pub plane: CutPlane,
}

/// Returns `None` when the plane misses the piece or the cross-section does
/// not form closed loops.
pub fn cut(piece: &Piece, plane: &CutPlane) -> Option<CutOutcome> {
    let mesh = &piece.mesh;
    let diag = mesh.bounds().diagonal();
    let eps = 1e-9 * diag;
    let n = plane.normal;
    let raw: Vec<f64> = mesh.vertices.iter().map(|v| n.dot(v) - plane.offset).collect();
    if raw.iter().all(|&x| x > -eps) || raw.iter().all(|&x| x < eps) {
        return None;
    }
    let mut offset = plane.offset;
    let mut s: Vec<f64>;
    let mut attempt = 0;
    loop {
        s = mesh.vertices.iter().map(|v| n.dot(v) - offset).collect();
        if s.iter().all(|x| x.abs() > eps) {
            break;
        }
        attempt += 1;
        if attempt > 32 {
            return None;
        }
        let step = 1e-7 * diag * attempt as f64 * 0.618_033_988_75;
        offset = plane.offset + if attempt % 2 == 1 { step } else { -step };
    }
    if s.iter().all(|&x| x < 0.0) || s.iter().all(|&x| x > 0.0) {
        return None;
    }

    let mut vertices = mesh.vertices.clone();
    let mut colors = mesh.colors.clone();
    let mut crossing: HashMap<(u32, u32), u32> = HashMap::new();
    let mut intersect = |i: u32, j: u32| -> u32 {
        let key = (i.min(j), i.max(j));
        *crossing.entry(key).or_insert_with(|| {
            let (a, b) = (key.0 as usize, key.1 as usize);
            let t = s[a] / (s[a] - s[b]);
            vertices.push(mesh.vertices[a] + (mesh.vertices[b] - mesh.vertices[a]) * t);
            if let Some(c) = colors.as_mut() {
                let (ca, cb) = (c[a], c[b]);
                c.push([0, 1, 2].map(|k| ca[k] + (cb[k] - ca[k]) * t));
            }
            (vertices.len() - 1) as u32
        })
    };

    let mut below: Vec<([u32; 3], FaceKind)> = Vec::new();
    let mut above: Vec<([u32; 3], FaceKind)> = Vec::new();
    let mut next: HashMap<u32, u32> = HashMap::new();
    let mut starts: Vec<u32> = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let kind = piece.kinds[t];
        let neg = tri.map(|i| s[i as usize] < 0.0);
        let count = neg.iter().filter(|&&b| b).count();
        if count == 3 {
            below.push((*tri, kind));
            continue;
        }
        if count == 0 {
            above.push((*tri, kind));
            continue;
        }
        let lone = (0..3).find(|&k| neg[k] != neg[(k + 1) % 3] && neg[k] != neg[(k + 2) % 3]).unwrap();
        let [a, b, c] = [tri[lone], tri[(lone + 1) % 3], tri[(lone + 2) % 3]];
        let pab = intersect(a, b);
        let pca = intersect(c, a);
        let tip = [a, pab, pca];
        let quad = [[pab, b, c], [pab, c, pca]];
        let seg = if neg[lone] {
            below.push((tip, kind));
            above.extend(quad.map(|q| (q, kind)));
            (pca, pab)
        } else {
            above.push((tip, kind));
            below.extend(quad.map(|q| (q, kind)));
            (pab, pca)
        };
        if next.insert(seg.0, seg.1).is_some() {
            return None;
        }
        starts.push(seg.0);
    }

    let mut loops: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashMap<u32, ()> = HashMap::new();
    for &start in &starts {
        if seen.contains_key(&start) {
            continue;
        }
        let mut ring = Vec::new();
        let mut v = start;
        loop {
            if seen.insert(v, ()).is_some() {
                return None;
            }
            ring.push(v as usize);
            v = *next.get(&v)?;
            if v == start {
                break;
            }
        }
        loops.push(ring);
    }

    let (u, w) = plane_basis(&n);
    let pos: Vec<[f64; 2]> = vertices.iter().map(|p| [p.dot(&u), p.dot(&w)]).collect();
    let cap = triangulate(&pos, &loops);
    let mut cap_area = 0.0;
    for t in &cap {
        let t = t.map(|i| i as u32);
        let [p, q, r] = t.map(|i| vertices[i as usize]);
        cap_area += triangle_area(&p, &q, &r);
        below.push((t, FaceKind::Cut));
        above.push(([t[0], t[2], t[1]], FaceKind::Cut));
    }

    let all = TriMesh {
        triangles: below.iter().chain(above.iter()).map(|(t, _)| *t).collect(),
        vertices,
        colors,
    };
    let split = below.len();
    let make = |range: std::ops::Range<usize>, src: &[([u32; 3], FaceKind)]| Piece {
        mesh: all.subset(&range.collect::<Vec<_>>()),
        kinds: src.iter().map(|(_, k)| *k).collect(),
    };
    Some(CutOutcome {
        below: make(0..split, &below),
        above: make(split..all.triangles.len(), &above),
        cap_area,
        plane: CutPlane {
            normal: n,
            offset,
        },
    })
}
