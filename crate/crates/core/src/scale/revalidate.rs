//! Distance repair after a resampling edit.

use rayon::prelude::*;

use super::stretch::Voxel;
use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, Vec3};
use crate::grid::{quantize_rgb, Axis, CsdfGrid, TruncationBand, UNASSIGNED};
use crate::mesh::{marching_cubes, NearestHit, SurfaceQueryIndex, TriMesh};

/// Recompute distances near the world interval `range` along `axis`.
///
/// The zero level set is extracted and every voxel whose stored distance
/// reaches the interval gets the distance to it, keeping its sign. Other
/// voxels are left untouched. Voxels entering the band take their color from
/// the surface and their part from the nearest labelled voxel; voxels leaving
/// it are cleared.
///
/// Near the surface the nearest triangle comes from an exact query. Farther
/// out it is propagated from neighbouring voxels, which is exact up to the
/// rare case where the closest triangle is not the closest one of any
/// neighbour.
pub fn revalidate_sdf(grid: &CsdfGrid, axis: Axis, range: (f64, f64)) -> Result<CsdfGrid> {
    let mesh = marching_cubes(grid, 0.0);
    if mesh.is_empty() {
        return Err(Error::EmptyGeometry("grid has no zero crossing"));
    }
    let index = SurfaceQueryIndex::build(&mesh)?;
    let band = TruncationBand::default_for(grid);
    let near = 3.0 * band.tau();
    let a = axis.index();
    let [nx, ny, nz] = grid.dims();
    let (lo, hi) = range;
    let stale = |i: usize| {
        let c = grid.center(grid.coords(i));
        let gap = (lo - c[a]).max(c[a] - hi).max(0.0);
        (grid.distance()[i] as f64).abs() > gap
    };

    // Exact pass over the near-surface shell, whether stale or not, so that
    // propagation starts from every nearby piece of surface.
    let exact = |pick: &(dyn Fn(usize) -> bool + Sync)| -> Vec<(usize, NearestHit)> {
        (0..ny * nz)
            .into_par_iter()
            .flat_map_iter(|row| {
                let (y, z) = (row % ny, row / ny);
                let mut hint = None;
                let mut out = Vec::new();
                for x in 0..nx {
                    let i = grid.index(x, y, z);
                    if !pick(i) {
                        continue;
                    }
                    let hit = index.nearest_with_hint(&grid.center([x, y, z]), hint);
                    hint = Some(hit.triangle);
                    out.push((i, hit));
                }
                out
            })
            .collect()
    };
    let mut hits = exact(&|i| (grid.distance()[i] as f64).abs() <= near);
    let mut tri = vec![u32::MAX; grid.len()];
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut fixed = vec![false; grid.len()];
    for (i, h) in &hits {
        tri[*i] = h.triangle as u32;
        dist[*i] = h.distance;
        fixed[*i] = true;
    }
    propagate(grid, &mesh, &mut tri, &mut dist, &fixed);
    let late = exact(&|i| !fixed[i] && dist[i] <= near && stale(i));
    for (i, h) in &late {
        dist[*i] = h.distance;
        fixed[*i] = true;
    }
    hits.extend(late);

    let mut g = grid.clone();
    for (i, hit) in hits {
        if !stale(i) {
            continue;
        }
        let d = grid.distance()[i];
        let nd = if d < 0.0 { -hit.distance } else { hit.distance } as f32;
        let (d, c, p) = relabel(grid, &mesh, band, i, nd, &hit);
        g.distance_mut()[i] = d;
        g.set_color(i, c);
        g.part_mut()[i] = p;
    }
    for i in 0..grid.len() {
        if fixed[i] || !stale(i) || !dist[i].is_finite() {
            continue;
        }
        let d = grid.distance()[i];
        g.distance_mut()[i] = if d < 0.0 { -dist[i] } else { dist[i] } as f32;
        g.set_color(i, None);
        g.part_mut()[i] = UNASSIGNED;
    }
    Ok(g)
}

/// Two raster sweeps handing each voxel the closest of its neighbours'
/// triangles.
fn propagate(grid: &CsdfGrid, mesh: &TriMesh, tri: &mut [u32], dist: &mut [f64], fixed: &[bool]) {
    let [nx, ny, nz] = grid.dims();
    let mut forward = Vec::new();
    for dz in -1i64..=0 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let back = dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)));
                if back {
                    forward.push([dx, dy, dz]);
                }
            }
        }
    }
    let backward: Vec<[i64; 3]> = forward.iter().map(|o| o.map(|v| -v)).collect();
    let dims = [nx as i64, ny as i64, nz as i64];
    let sweep = |order: &mut dyn Iterator<Item = usize>, offsets: &[[i64; 3]], tri: &mut [u32], dist: &mut [f64]| {
        for i in order {
            if fixed[i] {
                continue;
            }
            let c = grid.coords(i);
            let p = grid.center(c);
            let mut tried = [u32::MAX; 13];
            for (k, o) in offsets.iter().enumerate() {
                let q = [0, 1, 2].map(|a| c[a] as i64 + o[a]);
                if (0..3).any(|a| q[a] < 0 || q[a] >= dims[a]) {
                    continue;
                }
                let j = grid.index(q[0] as usize, q[1] as usize, q[2] as usize);
                let t = tri[j];
                if t == u32::MAX || t == tri[i] || tried[..k].contains(&t) {
                    continue;
                }
                tried[k] = t;
                let [ta, tb, tc] = mesh.corners(t as usize);
                let (cp, _) = closest_point_on_triangle(&p, &ta, &tb, &tc);
                let d = (cp - p).norm();
                if d < dist[i] {
                    dist[i] = d;
                    tri[i] = t;
                }
            }
        }
    };
    let n = grid.len();
    sweep(&mut (0..n), &forward, tri, dist);
    sweep(&mut (0..n).rev(), &backward, tri, dist);
}

fn relabel(grid: &CsdfGrid, mesh: &TriMesh, band: TruncationBand, i: usize, d: f32, hit: &NearestHit) -> Voxel {
    if !band.contains(d) {
        return (d, None, UNASSIGNED);
    }
    let color = grid.color_at(i).or_else(|| {
        let colors = mesh.colors.as_ref()?;
        let t = mesh.triangles[hit.triangle];
        let mut c = [0.0; 3];
        for (k, &v) in t.iter().enumerate() {
            for ch in 0..3 {
                c[ch] += hit.bary[k] * colors[v as usize][ch];
            }
        }
        Some(quantize_rgb(c))
    });
    let part = match grid.part()[i] {
        UNASSIGNED => nearest_label(grid, &hit.point),
        p => p,
    };
    (d, color, part)
}

/// Part of the closest labelled voxel among the corners of the cell holding `p`.
fn nearest_label(grid: &CsdfGrid, p: &Vec3) -> u16 {
    let dims = grid.dims();
    let u = grid.to_grid(p);
    let base = [0, 1, 2].map(|k| (u[k].floor().max(0.0) as usize).min(dims[k] - 1));
    let mut best = (f64::INFINITY, UNASSIGNED);
    for k in 0..8 {
        let c = [0, 1, 2].map(|a| (base[a] + (k >> a & 1)).min(dims[a] - 1));
        let i = grid.index(c[0], c[1], c[2]);
        let part = grid.part()[i];
        if part == UNASSIGNED {
            continue;
        }
        let dist = (grid.center(c) - p).norm_squared();
        if dist < best.0 || (dist == best.0 && part < best.1) {
            best = (dist, part);
        }
    }
    best.1
}
