//! Quickhull in three dimensions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Convex hull as a set of outward-facing triangles.
#[derive(Clone, Debug)]
pub struct ConvexHull {
    pub points: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Supporting planes `(unit outward normal, offset)`, `normal · x <= offset`
    /// inside. Sliver faces that no point set lies behind are left out.
    pub planes: Vec<(Vec3, f64)>,
}

impl ConvexHull {
    /// Depth of `p` below the hull boundary; negative outside.
    pub fn depth(&self, p: &Vec3) -> f64 {
        self.planes
            .iter()
            .map(|(n, o)| o - n.dot(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.points[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn make_face(points: &[Vec3], v: [usize; 3]) -> Face {
    let [a, b, c] = v.map(|i| points[i]);
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    let normal = if len > 0.0 { n / len } else { n };
    Face {
        v,
        normal,
        offset: normal.dot(&a),
        outside: Vec::new(),
        alive: true,
    }
}

pub fn convex_hull(input: &[Vec3]) -> Result<ConvexHull> {
    let degenerate = |why: &str| Error::DegenerateGeometry(format!("convex hull: {why}"));
    if input.len() < 4 {
        return Err(degenerate("fewer than four points"));
    }
    let bounds = Aabb::from_points(input.iter());
    let scale = bounds.diagonal();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(degenerate("zero extent"));
    }
    let eps = 1e-8 * scale;

    // Initial simplex from extreme points.
    let mut i0 = 0;
    let mut i1 = 0;
    let mut best = -1.0;
    for a in 0..3 {
        let lo = (0..input.len()).min_by(|&i, &j| input[i][a].total_cmp(&input[j][a])).unwrap();
        let hi = (0..input.len()).max_by(|&i, &j| input[i][a].total_cmp(&input[j][a])).unwrap();
        let d = (input[hi] - input[lo]).norm();
        if d > best {
            best = d;
            i0 = lo;
            i1 = hi;
        }
    }
    let axis = (input[i1] - input[i0]).normalize();
    let line_dist = |p: &Vec3| {
        let v = p - input[i0];
        (v - axis * v.dot(&axis)).norm()
    };
    let i2 = (0..input.len())
        .max_by(|&i, &j| line_dist(&input[i]).total_cmp(&line_dist(&input[j])))
        .unwrap();
    if line_dist(&input[i2]) <= 1e-9 * scale {
        return Err(degenerate("points are collinear"));
    }
    let n = (input[i1] - input[i0]).cross(&(input[i2] - input[i0])).normalize();
    let plane_dist = |p: &Vec3| n.dot(&(p - input[i0]));
    let i3 = (0..input.len())
        .max_by(|&i, &j| plane_dist(&input[i]).abs().total_cmp(&plane_dist(&input[j]).abs()))
        .unwrap();
    if plane_dist(&input[i3]).abs() <= 1e-9 * scale {
        return Err(degenerate("points are coplanar"));
    }

    let points = input.to_vec();
    let mut faces: Vec<Face> = Vec::new();
    let centroid = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for mut v in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let probe = make_face(&points, v);
        if probe.normal.dot(&centroid) > probe.offset {
            v.swap(1, 2);
        }
        let f = faces.len();
        for k in 0..3 {
            edges.insert((v[k], v[(k + 1) % 3]), f);
        }
        faces.push(make_face(&points, v));
    }
    for (i, p) in points.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&i) {
            continue;
        }
        if let Some(f) = faces
            .iter_mut()
            .find(|f| f.normal.dot(p) - f.offset > eps)
        {
            f.outside.push(i);
        }
    }

    let mut pending: Vec<usize> = (0..faces.len()).filter(|&f| !faces[f].outside.is_empty()).collect();
    while let Some(fi) = pending.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let eye = {
            let f = &faces[fi];
            *f.outside
                .iter()
                .max_by(|&&a, &&b| {
                    (f.normal.dot(&points[a])).total_cmp(&f.normal.dot(&points[b]))
                })
                .unwrap()
        };
        let ep = points[eye];

        // Flood the faces visible from the eye point.
        let mut visible = vec![fi];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(fi, true);
        let mut k = 0;
        while k < visible.len() {
            let f = visible[k];
            k += 1;
            let v = faces[f].v;
            for e in 0..3 {
                let twin = edges[&(v[(e + 1) % 3], v[e])];
                if is_visible.contains_key(&twin) {
                    continue;
                }
                let vis = faces[twin].normal.dot(&ep) - faces[twin].offset > eps;
                is_visible.insert(twin, vis);
                if vis {
                    visible.push(twin);
                }
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                let twin = edges[&(b, a)];
                if !is_visible[&twin] {
                    horizon.push((a, b));
                }
            }
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                edges.remove(&(v[e], v[(e + 1) % 3]));
            }
            faces[f].alive = false;
            orphans.append(&mut faces[f].outside);
        }
        let first_new = faces.len();
        for (a, b) in horizon {
            let f = faces.len();
            let v = [a, b, eye];
            for k in 0..3 {
                edges.insert((v[k], v[(k + 1) % 3]), f);
            }
            faces.push(make_face(&points, v));
        }
        for p in orphans {
            if p == eye {
                continue;
            }
            let q = points[p];
            if let Some(f) = faces[first_new..]
                .iter_mut()
                .find(|f| f.normal.dot(&q) - f.offset > eps)
            {
                f.outside.push(p);
            }
        }
        pending.extend((first_new..faces.len()).filter(|&f| !faces[f].outside.is_empty()));
    }

    let alive: Vec<&Face> = faces.iter().filter(|f| f.alive).collect();
    let slack = 1e-6 * scale;
    let planes = alive
        .iter()
        .filter(|f| {
            f.normal != Vec3::zeros()
                && points.iter().all(|p| f.normal.dot(p) - f.offset <= slack)
        })
        .map(|f| (f.normal, f.offset))
        .collect();
    Ok(ConvexHull {
        faces: alive.iter().map(|f| f.v).collect(),
        planes,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cube_corners_and_interior_points() {
        let mut pts = Vec::new();
        for k in 0..8 {
            pts.push(Vec3::new((k & 1) as f64, (k >> 1 & 1) as f64, (k >> 2 & 1) as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            pts.push(Vec3::new(rng.random(), rng.random(), rng.random()));
        }
        let h = convex_hull(&pts).unwrap();
        assert!((h.volume() - 1.0).abs() < 1e-9);
        assert!((h.depth(&Vec3::repeat(0.5)) - 0.5).abs() < 1e-9);
        for p in &pts {
            assert!(h.depth(p) >= -1e-9);
        }
    }

    #[test]
    fn random_cloud_contains_all_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize() * rng.random_range(0.5..1.0))
            .collect();
        let h = convex_hull(&pts).unwrap();
        for p in &pts {
            assert!(h.depth(p) >= -1e-9);
        }
        // Closed and consistently oriented.
        let mut count: HashMap<(usize, usize), i32> = HashMap::new();
        for f in &h.faces {
            for k in 0..3 {
                *count.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &c) in &count {
            assert_eq!(c, 1);
            assert_eq!(count.get(&(b, a)), Some(&1));
        }
    }

    #[test]
    fn grid_aligned_points() {
        // Many coplanar and collinear points, as produced by surface extraction.
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                for k in [0.0, 0.25, 0.5] {
                    if i % 11 == 0 || j % 11 == 0 || k != 0.25 {
                        pts.push(Vec3::new(i as f64 / 11.0, j as f64 / 11.0, k));
                    }
                }
            }
        }
        pts.push(Vec3::new(0.5, 0.5, 0.25));
        let h = convex_hull(&pts).unwrap();
        assert!((h.volume() - 0.5).abs() < 1e-9);
        assert!((h.depth(&Vec3::new(0.5, 0.5, 0.25)) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn flat_input_is_degenerate() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(matches!(convex_hull(&pts), Err(Error::DegenerateGeometry(_))));
    }
}
