//! Mesh → CSDF conversion: exact unsigned distance from the BVH, sign from
//! axis-aligned ray parity, color from the nearest surface point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::{quantize_rgb, CsdfGrid, TruncationBand, DEFAULT_TAU_VOXELS, UNASSIGNED};
use crate::mesh::{SurfaceQueryIndex, TriMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelizeOptions {
    /// Empty margin around the mesh bounds, world units.
    pub padding: f64,
    /// Color band half-width, in voxels.
    pub tau_voxels: f64,
    /// Largest tolerated fraction of probe lines with odd crossing parity.
    pub parity_tolerance: f64,
    /// Color used when the mesh carries no vertex colors.
    pub default_color: [f64; 3],
}

impl Default for VoxelizeOptions {
    fn default() -> Self {
        VoxelizeOptions {
            padding: 0.0,
            tau_voxels: DEFAULT_TAU_VOXELS,
            parity_tolerance: 0.01,
            default_color: [0.7, 0.7, 0.7],
        }
    }
}

/// Voxelize a closed mesh onto a grid with `dims` cubic voxels.
///
/// The grid is centered on the padded mesh bounds and sized so the longest
/// relative extent exactly fills its axis. Part indices are left unassigned.
pub fn voxelize(mesh: &TriMesh, dims: [usize; 3], opts: &VoxelizeOptions) -> Result<CsdfGrid> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(dims));
    }
    let mesh = mesh.cleaned(1e-7);
    if mesh.is_empty() {
        return Err(Error::EmptyGeometry("cannot voxelize an empty mesh"));
    }
    let bounds = mesh.bounds();
    let ext = bounds.extent() + Vec3::repeat(2.0 * opts.padding);
    let h = (0..3).map(|a| ext[a] / dims[a] as f64).fold(0.0, f64::max);
    if !(h > 0.0) {
        return Err(Error::DegenerateGeometry("mesh has zero extent".into()));
    }
    let center = bounds.center();
    let origin = [0, 1, 2].map(|a| (center[a] - 0.5 * (dims[a] - 1) as f64 * h) as f32);
    let mut grid = CsdfGrid::new(dims, origin, h as f32, 0.0)?;
    let band = TruncationBand::voxels(&grid, opts.tau_voxels)?;

    let inside = parity_inside(&grid, &mesh, opts.parity_tolerance)?;
    let index = SurfaceQueryIndex::build(&mesh)?;
    let [nx, ny, _] = dims;
    let cells: Vec<(f32, Option<[u8; 3]>)> = (0..grid.len())
        .into_par_iter()
        .chunks(nx)
        .flat_map_iter(|row| {
            let mut hint = None;
            row.into_iter()
                .map(|i| {
                    let p = grid.center(grid.coords(i));
                    let hit = index.nearest_with_hint(&p, hint);
                    hint = Some(hit.triangle);
                    let d = if inside[i] { -hit.distance } else { hit.distance } as f32;
                    let color = band.contains(d).then(|| {
                        let c = match &mesh.colors {
                            Some(cols) => {
                                let t = mesh.triangles[hit.triangle];
                                let mut c = [0.0; 3];
                                for (k, &w) in hit.bary.iter().enumerate() {
                                    for ch in 0..3 {
                                        c[ch] += w * cols[t[k] as usize][ch];
                                    }
                                }
                                c
                            }
                            None => opts.default_color,
                        };
                        quantize_rgb(c)
                    });
                    (d, color)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    debug_assert_eq!(cells.len(), nx * ny * dims[2]);
    for (i, (d, c)) in cells.into_iter().enumerate() {
        grid.distance_mut()[i] = d;
        grid.set_color(i, c);
        grid.part_mut()[i] = UNASSIGNED;
    }
    Ok(grid)
}

/// Majority vote of three axis-aligned ray parities per voxel center.
fn parity_inside(grid: &CsdfGrid, mesh: &TriMesh, tolerance: f64) -> Result<Vec<bool>> {
    let dims = grid.dims();
    let h = grid.voxel_size() as f64;
    let o = grid.origin_f64();
    let jitter_base = 1e-6 * mesh.bounds().diagonal();
    let mut votes_in = vec![0u8; grid.len()];
    let mut votes_out = vec![0u8; grid.len()];
    let mut lines_hit = 0usize;
    let mut lines_odd = 0usize;

    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        let (nb, nc) = (dims[b], dims[c]);
        // Irrational-ish offsets keep probe lines off mesh edges and vertices.
        let jb = jitter_base * (1.0 + 0.414_213_562 * axis as f64);
        let jc = jitter_base * (0.732_050_808 + 0.302_775_638 * axis as f64);
        let line_b = |j: usize| o[b] + j as f64 * h + jb;
        let line_c = |k: usize| o[c] + k as f64 * h + jc;
        let mut hits: Vec<Vec<f64>> = vec![Vec::new(); nb * nc];
        for t in 0..mesh.triangles.len() {
            let [p0, p1, p2] = mesh.corners(t);
            let (bmin, bmax) = (p0[b].min(p1[b]).min(p2[b]), p0[b].max(p1[b]).max(p2[b]));
            let (cmin, cmax) = (p0[c].min(p1[c]).min(p2[c]), p0[c].max(p1[c]).max(p2[c]));
            let j0 = ((bmin - o[b] - jb) / h).ceil().max(0.0) as usize;
            let j1 = ((bmax - o[b] - jb) / h).floor();
            let k0 = ((cmin - o[c] - jc) / h).ceil().max(0.0) as usize;
            let k1 = ((cmax - o[c] - jc) / h).floor();
            if j1 < 0.0 || k1 < 0.0 {
                continue;
            }
            let j1 = (j1 as usize).min(nb - 1);
            let k1 = (k1 as usize).min(nc - 1);
            for k in k0..=k1 {
                for j in j0..=j1 {
                    let (qb, qc) = (line_b(j), line_c(k));
                    let e = |u: &Vec3, v: &Vec3| (v[b] - u[b]) * (qc - u[c]) - (v[c] - u[c]) * (qb - u[b]);
                    let (w0, w1, w2) = (e(&p1, &p2), e(&p2, &p0), e(&p0, &p1));
                    let pos = w0 > 0.0 && w1 > 0.0 && w2 > 0.0;
                    let neg = w0 < 0.0 && w1 < 0.0 && w2 < 0.0;
                    if !(pos || neg) {
                        continue;
                    }
                    let s = w0 + w1 + w2;
                    let x = (w0 * p0[axis] + w1 * p1[axis] + w2 * p2[axis]) / s;
                    hits[j + nb * k].push(x);
                }
            }
        }
        for k in 0..nc {
            for j in 0..nb {
                let line = &mut hits[j + nb * k];
                if !line.is_empty() {
                    lines_hit += 1;
                    if line.len() % 2 == 1 {
                        // Unreliable line: abstain.
                        lines_odd += 1;
                        continue;
                    }
                }
                line.sort_by(f64::total_cmp);
                let mut crossed = 0usize;
                for i in 0..dims[axis] {
                    let x = o[axis] + i as f64 * h;
                    while crossed < line.len() && line[crossed] < x {
                        crossed += 1;
                    }
                    let mut cidx = [0usize; 3];
                    cidx[axis] = i;
                    cidx[b] = j;
                    cidx[c] = k;
                    let v = grid.index(cidx[0], cidx[1], cidx[2]);
                    if crossed % 2 == 1 {
                        votes_in[v] += 1;
                    } else {
                        votes_out[v] += 1;
                    }
                }
            }
        }
    }
    if lines_hit > 0 {
        let odd_fraction = lines_odd as f64 / lines_hit as f64;
        if odd_fraction > tolerance {
            return Err(Error::NotWatertight { odd_fraction });
        }
    }
    Ok(votes_in
        .iter()
        .zip(&votes_out)
        .map(|(&i, &o)| i > o)
        .collect())
}
