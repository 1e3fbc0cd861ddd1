//! Iso-surface extraction.
//!
//! Cells are polygonized by walking their faces: each face contributes the
//! marching-squares segments between its edge crossings, directed so the
//! positive side lies to the left when seen from outside the cell. Ambiguous
//! faces are split by the mean of their four corners. That decision depends
//! only on the face, so neighbouring cells always agree and the output is a
//! closed, consistently oriented manifold wherever the surface stays clear of
//! the grid boundary.

use std::collections::HashMap;

use crate::geom::Vec3;
use crate::grid::CsdfGrid;
use crate::mesh::TriMesh;

/// Corner `k` of a cell sits at offset `(k & 1, k >> 1 & 1, k >> 2 & 1)`.
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2], // -x
    [1, 3, 7, 5], // +x
    [0, 1, 5, 4], // -y
    [2, 6, 7, 3], // +y
    [0, 2, 3, 1], // -z
    [4, 5, 7, 6], // +z
];

/// Extract the `iso` level set of the grid's distance channel.
///
/// Normals point toward increasing distance. Values equal to `iso` count as
/// outside.
pub fn marching_cubes(grid: &CsdfGrid, iso: f64) -> TriMesh {
    let [nx, ny, nz] = grid.dims();
    let mut mesh = TriMesh::default();
    if nx < 2 || ny < 2 || nz < 2 {
        return mesh;
    }
    let d = grid.distance();
    let inside: Vec<bool> = d.iter().map(|&v| (v as f64) < iso).collect();
    let any_color = grid.valid().iter().any(|&v| v);
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut verts: HashMap<u64, u32> = HashMap::new();
    let h = grid.voxel_size() as f64;
    let origin = grid.origin_f64();

    let mut vertex_on = |mesh: &mut TriMesh,
                         colors: &mut Vec<[f64; 3]>,
                         c0: [usize; 3],
                         c1: [usize; 3]|
     -> u32 {
        let axis = (0..3).find(|&a| c0[a] != c1[a]).expect("edge spans one axis");
        let (lo, hi) = if c0[axis] < c1[axis] { (c0, c1) } else { (c1, c0) };
        let key = ((grid.index(lo[0], lo[1], lo[2]) as u64) << 2) | axis as u64;
        *verts.entry(key).or_insert_with(|| {
            let va = d[grid.index(lo[0], lo[1], lo[2])] as f64;
            let vb = d[grid.index(hi[0], hi[1], hi[2])] as f64;
            let t = ((iso - va) / (vb - va)).clamp(1e-6, 1.0 - 1e-6);
            let mut g = Vec3::new(lo[0] as f64, lo[1] as f64, lo[2] as f64);
            g[axis] += t;
            let p = origin + g * h;
            if any_color {
                colors.push(grid.sample_clamped(&p).color.unwrap_or([0.5; 3]));
            }
            mesh.vertices.push(p);
            (mesh.vertices.len() - 1) as u32
        })
    };

    let mut next = [usize::MAX; 12];
    let mut ids = [0u32; 12];
    for z in 0..nz - 1 {
        for y in 0..ny - 1 {
            for x in 0..nx - 1 {
                let corner = |k: usize| [x + (k & 1), y + (k >> 1 & 1), z + (k >> 2 & 1)];
                let cidx: [usize; 8] = std::array::from_fn(|k| {
                    let c = corner(k);
                    grid.index(c[0], c[1], c[2])
                });
                let n_in = cidx.iter().filter(|&&i| inside[i]).count();
                if n_in == 0 || n_in == 8 {
                    continue;
                }
                // Local edge slots are keyed by corner pair; at most 12 crossings.
                let mut slots: Vec<(usize, usize)> = Vec::with_capacity(12);
                next.fill(usize::MAX);
                let mut ambiguous = false;
                for face in FACES {
                    let mut ins = [0usize; 2];
                    let mut outs = [0usize; 2];
                    let (mut ni, mut no) = (0, 0);
                    for e in 0..4 {
                        let (a, b) = (face[e], face[(e + 1) % 4]);
                        match (inside[cidx[a]], inside[cidx[b]]) {
                            (false, true) => {
                                ins[ni] = e;
                                ni += 1;
                            }
                            (true, false) => {
                                outs[no] = e;
                                no += 1;
                            }
                            _ => {}
                        }
                    }
                    let mut link = |from: usize, to: usize| {
                        let a = slot(&mut slots, face[from], face[(from + 1) % 4]);
                        let b = slot(&mut slots, face[to], face[(to + 1) % 4]);
                        next[a] = b;
                    };
                    match ni {
                        0 => {}
                        1 => link(ins[0], outs[0]),
                        _ => {
                            ambiguous = true;
                            let mean: f64 =
                                face.iter().map(|&k| d[cidx[k]] as f64).sum::<f64>() / 4.0;
                            let negatives_joined = mean < iso;
                            for &e_in in &ins {
                                let e_out = if negatives_joined {
                                    (e_in + 3) % 4
                                } else {
                                    (e_in + 1) % 4
                                };
                                debug_assert!(outs.contains(&e_out));
                                link(e_in, e_out);
                            }
                        }
                    }
                }
                for (s, &(a, b)) in slots.iter().enumerate() {
                    ids[s] = vertex_on(&mut mesh, &mut colors, corner(a), corner(b));
                }
                let mut visited = [false; 12];
                for start in 0..slots.len() {
                    if visited[start] {
                        continue;
                    }
                    let mut ring: Vec<u32> = Vec::with_capacity(12);
                    let mut s = start;
                    while !visited[s] {
                        visited[s] = true;
                        ring.push(ids[s]);
                        s = next[s];
                    }
                    if ring.len() == 3 || !ambiguous {
                        for k in 1..ring.len() - 1 {
                            mesh.triangles.push([ring[0], ring[k], ring[k + 1]]);
                        }
                    } else {
                        // A fan diagonal could join two vertices of an ambiguous
                        // face and collide with the neighbour's fan; use a
                        // private center vertex instead.
                        let c = ring.iter().map(|&v| mesh.vertices[v as usize]).sum::<Vec3>()
                            / ring.len() as f64;
                        if any_color {
                            let mut col = [0.0; 3];
                            for &v in &ring {
                                for k in 0..3 {
                                    col[k] += colors[v as usize][k] / ring.len() as f64;
                                }
                            }
                            colors.push(col);
                        }
                        mesh.vertices.push(c);
                        let ci = (mesh.vertices.len() - 1) as u32;
                        for k in 0..ring.len() {
                            mesh.triangles.push([ci, ring[k], ring[(k + 1) % ring.len()]]);
                        }
                    }
                }
            }
        }
    }
    if any_color {
        mesh.colors = Some(colors);
    }
    mesh
}

fn slot(slots: &mut Vec<(usize, usize)>, a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    match slots.iter().position(|&s| s == key) {
        Some(i) => i,
        None => {
            slots.push(key);
            slots.len() - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere(n: usize, r: f64) -> CsdfGrid {
        let h = 1.0 / n as f32;
        let c = Vec3::repeat(0.5);
        CsdfGrid::from_fn([n; 3], [0.5 * h; 3], h, |p| (p - c).norm() - r).unwrap()
    }

    #[test]
    fn all_positive_grid_gives_empty_mesh() {
        let g = CsdfGrid::new([8, 8, 8], [0.0; 3], 1.0, 2.0).unwrap();
        assert!(marching_cubes(&g, 0.0).is_empty());
    }

    #[test]
    fn sphere_is_closed_genus_zero_and_outward() {
        let g = sphere(64, 0.4);
        let m = marching_cubes(&g, 0.0);
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.volume() > 0.0);
        let area = m.area();
        let exact = 4.0 * std::f64::consts::PI * 0.4 * 0.4;
        assert!((area - exact).abs() / exact < 0.02, "area {area} vs {exact}");
    }

    #[test]
    fn random_fields_stay_closed() {
        // Interior noise with a positive shell, so nothing touches the boundary.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut g = CsdfGrid::new([9, 9, 9], [0.0; 3], 1.0, 1.0).unwrap();
            for z in 1..8 {
                for y in 1..8 {
                    for x in 1..8 {
                        let i = g.index(x, y, z);
                        g.distance_mut()[i] = rng.random_range(-1.0..1.0);
                    }
                }
            }
            let m = marching_cubes(&g, 0.0);
            assert!(m.is_closed());
        }
    }
}
