//! Synthetic shapes used by tests, benchmarks and demos.
//!
//! Grid fixtures live in the unit cube with `n` voxels per axis, voxel size
//! `1/n` and the first voxel center at `1/(2n)`.

use crate::geom::Vec3;
use crate::grid::{quantize_rgb, CsdfGrid, TruncationBand};
use crate::mesh::TriMesh;

/// Extrude a counter-clockwise polygon (star-shaped from its first vertex)
/// between `z0` and `z1`.
pub fn prism_mesh(outline: &[[f64; 2]], z0: f64, z1: f64) -> TriMesh {
    let n = outline.len() as u32;
    let mut vertices: Vec<Vec3> = outline.iter().map(|p| Vec3::new(p[0], p[1], z0)).collect();
    vertices.extend(outline.iter().map(|p| Vec3::new(p[0], p[1], z1)));
    let mut triangles = Vec::new();
    for k in 1..n - 1 {
        triangles.push([0, k + 1, k]);
        triangles.push([n, n + k, n + k + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, n + j]);
        triangles.push([i, n + j, n + i]);
    }
    TriMesh {
        vertices,
        triangles,
        colors: None,
    }
}

pub fn box_mesh(min: Vec3, max: Vec3) -> TriMesh {
    let outline = [[min.x, min.y], [max.x, min.y], [max.x, max.y], [min.x, max.y]];
    prism_mesh(&outline, min.z, max.z)
}

/// Two unit-spaced, disjoint cubes in one mesh.
pub fn two_boxes_mesh() -> TriMesh {
    let a = box_mesh(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.4, 0.4, 0.4));
    let b = box_mesh(Vec3::new(0.6, 0.0, 0.0), Vec3::new(1.0, 0.4, 0.4));
    TriMesh::concat([&a, &b])
}

/// L-shaped prism: unit arms of width 0.5, extruded 0.5 along z.
pub fn l_prism_mesh() -> TriMesh {
    let outline = [
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.5],
        [0.5, 0.5],
        [0.5, 1.0],
        [0.0, 1.0],
    ];
    prism_mesh(&outline, 0.0, 0.5)
}

/// Torus around the z axis with `major` ring radius and `minor` tube radius.
pub fn torus_mesh(major: f64, minor: f64, ring_segments: u32, tube_segments: u32) -> TriMesh {
    let tau = std::f64::consts::TAU;
    let mut vertices = Vec::new();
    for i in 0..ring_segments {
        let phi = tau * i as f64 / ring_segments as f64;
        for j in 0..tube_segments {
            let theta = tau * j as f64 / tube_segments as f64;
            let r = major + minor * theta.cos();
            vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), minor * theta.sin()));
        }
    }
    let id = |i: u32, j: u32| (i % ring_segments) * tube_segments + j % tube_segments;
    let mut triangles = Vec::new();
    for i in 0..ring_segments {
        for j in 0..tube_segments {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh {
        vertices,
        triangles,
        colors: None,
    }
}

pub fn icosphere(center: Vec3, radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let p = ((vertices[a as usize] + vertices[b as usize]) * 0.5).normalize();
                vertices.push(p);
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriMesh {
        vertices: vertices.into_iter().map(|v| center + v * radius).collect(),
        triangles,
        colors: None,
    }
}

/// Exact signed distance to an axis-aligned box.
pub fn box_sdf(p: &Vec3, min: &Vec3, max: &Vec3) -> f64 {
    let c = (min + max) * 0.5;
    let half = (max - min) * 0.5;
    let q = (p - c).abs() - half;
    let outside = q.sup(&Vec3::zeros()).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    outside + inside
}

fn unit_grid(n: usize, f: impl Fn(Vec3) -> f64 + Sync) -> CsdfGrid {
    let h = 1.0 / n as f32;
    CsdfGrid::from_fn([n; 3], [0.5 * h; 3], h, f).expect("fixture dims are valid")
}

/// Decorate the band with per-part colors and indices chosen by `label`.
fn label_band(grid: &mut CsdfGrid, label: impl Fn(Vec3) -> (u16, [f64; 3])) {
    let band = TruncationBand::default_for(grid);
    for i in 0..grid.len() {
        if band.contains(grid.distance()[i]) {
            let (part, color) = label(grid.center(grid.coords(i)));
            grid.set_color(i, Some(quantize_rgb(color)));
            grid.part_mut()[i] = part;
        }
    }
}

/// Sphere of radius `0.4` centered in the unit cube. Parts split at `z = 0.5`;
/// color is a ramp along `x`.
pub fn sphere_grid(n: usize) -> CsdfGrid {
    let c = Vec3::repeat(0.5);
    let mut g = unit_grid(n, |p| (p - c).norm() - 0.4);
    label_band(&mut g, |p| (u16::from(p.z >= 0.5), [p.x, 0.3, 1.0 - p.x]));
    g
}

/// A single box, one part, solid color.
pub fn box_grid(n: usize, min: Vec3, max: Vec3) -> CsdfGrid {
    let mut g = unit_grid(n, |p| box_sdf(&p, &min, &max));
    label_band(&mut g, |_| (0, [0.2, 0.5, 0.9]));
    g
}

/// Boxes making up a 3-shelf bookcase standing along `+y`, in unit-cube
/// coordinates. Returns `(min, max)` pairs: two side panels, then four boards
/// from bottom to top.
///
/// In units of 1/128: boards are 8 thick with bottoms at 12, 44, 76 and 108,
/// so the shelf pitch is 32 and board mid-gaps fall on 32 and 64.
pub fn bookcase_boxes() -> Vec<(Vec3, Vec3)> {
    let u = |v: f64| v / 128.0;
    let (z0, z1) = (u(36.0), u(92.0));
    let mut boxes = vec![
        (Vec3::new(u(16.0), u(12.0), z0), Vec3::new(u(26.0), u(116.0), z1)),
        (Vec3::new(u(102.0), u(12.0), z0), Vec3::new(u(112.0), u(116.0), z1)),
    ];
    for k in 0..4 {
        let y = 12.0 + 32.0 * k as f64;
        boxes.push((Vec3::new(u(26.0), u(y), z0), Vec3::new(u(102.0), u(y + 8.0), z1)));
    }
    boxes
}

/// Shelf pitch of [`bookcase_boxes`] in world units.
pub const BOOKCASE_PITCH: f64 = 32.0 / 128.0;

/// Exact distance to the bookcase.
///
/// The solid is the extrusion along `z` of a frame with three open shelf
/// gaps. A plain minimum over the touching boxes would put false zeros where
/// boards meet the panels.
pub fn bookcase_sdf(p: &Vec3) -> f64 {
    let u = |v: f64| v / 128.0;
    let rect = |x: f64, y: f64, (x0, y0, x1, y1): (f64, f64, f64, f64)| {
        let q = [(x0 - x).max(x - x1), (y0 - y).max(y - y1)];
        let out = (q[0].max(0.0).powi(2) + q[1].max(0.0).powi(2)).sqrt();
        out + q[0].max(q[1]).min(0.0)
    };
    let mut d2 = rect(p.x, p.y, (u(16.0), u(12.0), u(112.0), u(116.0)));
    for k in 0..3 {
        let y = 20.0 + 32.0 * k as f64;
        d2 = d2.max(-rect(p.x, p.y, (u(26.0), u(y), u(102.0), u(y + 24.0))));
    }
    let dz = (p.z - u(64.0)).abs() - u(28.0);
    (d2.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt() + d2.max(dz).min(0.0)
}

/// Bookcase grid; each box is its own part.
pub fn bookcase_grid(n: usize) -> CsdfGrid {
    let boxes = bookcase_boxes();
    let mut g = unit_grid(n, |p| bookcase_sdf(&p));
    label_band(&mut g, |p| {
        let (k, _) = boxes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| (k, box_sdf(&p, a, b)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let color = if k < 2 { [0.55, 0.35, 0.2] } else { [0.85, 0.65, 0.45] };
        (k as u16, color)
    });
    g
}

pub fn bookcase_mesh() -> TriMesh {
    let meshes: Vec<TriMesh> = bookcase_boxes().iter().map(|(a, b)| box_mesh(*a, *b)).collect();
    TriMesh::concat(meshes.iter())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_meshes_are_closed() {
        for m in [
            box_mesh(Vec3::zeros(), Vec3::repeat(1.0)),
            l_prism_mesh(),
            icosphere(Vec3::zeros(), 1.0, 2),
            two_boxes_mesh(),
        ] {
            assert!(m.is_closed());
            assert!(m.volume() > 0.0);
        }
        assert!((l_prism_mesh().volume() - 0.375).abs() < 1e-12);
    }

    #[test]
    fn box_sdf_values() {
        let (a, b) = (Vec3::zeros(), Vec3::repeat(1.0));
        assert!((box_sdf(&Vec3::repeat(0.5), &a, &b) + 0.5).abs() < 1e-12);
        assert!((box_sdf(&Vec3::new(2.0, 0.5, 0.5), &a, &b) - 1.0).abs() < 1e-12);
        assert!((box_sdf(&Vec3::new(2.0, 2.0, 0.5), &a, &b) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bookcase_sdf_agrees_with_boxes() {
        let boxes = bookcase_boxes();
        for i in 0..4000 {
            let p = Vec3::new((i % 20) as f64 / 19.0, (i / 20 % 20) as f64 / 19.0, (i / 400) as f64 / 9.0);
            let d = bookcase_sdf(&p);
            let union = boxes.iter().map(|(a, b)| box_sdf(&p, a, b)).fold(f64::INFINITY, f64::min);
            // Outside the distances coincide; inside the exact depth is never smaller.
            if union > 0.0 {
                assert!((d - union).abs() < 1e-12, "{p:?}");
            } else {
                assert!(d <= union + 1e-12, "{p:?}");
            }
        }
    }
}
