//! Linear stretching of a zone along its axis.

use rayon::prelude::*;

use super::index::snap_transitions;
use super::revalidate::revalidate_sdf;
use super::{ScaleOptions, ScalingZone, ZonePlan};
use crate::error::Result;
use crate::grid::{quantize_rgb, Axis, CsdfGrid, Rgb, UNASSIGNED};
use crate::mesh::marching_cubes;

const SNAP: f64 = 1e-9;

/// Where an output layer takes its values from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Src {
    /// An exact source layer.
    Layer(usize),
    /// A fractional source coordinate along the axis.
    At(f64),
}

pub(crate) type Voxel = (f32, Option<Rgb>, u16);

pub(crate) fn read(grid: &CsdfGrid, i: usize) -> Voxel {
    (grid.distance()[i], grid.color_at(i), grid.part()[i])
}

/// Interpolate between two voxels. Colors blend only when both are set and
/// the part comes from the nearer voxel, falling back to the other if unset.
pub(crate) fn mix(a: Voxel, b: Voxel, t: f64) -> Voxel {
    let d = a.0 as f64 + t * (b.0 as f64 - a.0 as f64);
    let c = match (a.1, b.1) {
        (Some(x), Some(y)) => Some(quantize_rgb(
            [0, 1, 2].map(|k| (x[k] as f64 + t * (y[k] as f64 - x[k] as f64)) / 255.0),
        )),
        (x, y) => x.or(y),
    };
    let (near, far) = if t < 0.5 { (a.2, b.2) } else { (b.2, a.2) };
    let p = if near == UNASSIGNED { far } else { near };
    (d as f32, c, p)
}

/// Value of `grid` at `coords` with the axis coordinate replaced by `src`.
pub(crate) fn sample_line(grid: &CsdfGrid, axis: usize, mut coords: [usize; 3], src: Src) -> Voxel {
    let n = grid.dims()[axis];
    let at = |coords: [usize; 3]| grid.index(coords[0], coords[1], coords[2]);
    match src {
        Src::Layer(l) => {
            coords[axis] = l;
            read(grid, at(coords))
        }
        Src::At(u) => {
            let u = u.clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n - 1);
            let t = u - i0 as f64;
            if t < SNAP || i0 + 1 >= n {
                coords[axis] = i0;
                return read(grid, at(coords));
            }
            if t > 1.0 - SNAP {
                coords[axis] = i0 + 1;
                return read(grid, at(coords));
            }
            coords[axis] = i0;
            let a = read(grid, at(coords));
            coords[axis] = i0 + 1;
            let b = read(grid, at(coords));
            mix(a, b, t)
        }
    }
}

/// Build a grid of `dims` whose layer `j` along `axis` is sampled per `map[j]`.
pub(crate) fn remap_axis(grid: &CsdfGrid, axis: usize, map: &[Src]) -> Result<CsdfGrid> {
    let mut dims = grid.dims();
    dims[axis] = map.len();
    let n = dims[0] * dims[1] * dims[2];
    let voxels: Vec<Voxel> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
            sample_line(grid, axis, c, map[c[axis]])
        })
        .collect();
    assemble(grid, dims, voxels)
}

pub(crate) fn assemble(like: &CsdfGrid, dims: [usize; 3], voxels: Vec<Voxel>) -> Result<CsdfGrid> {
    let mut distance = Vec::with_capacity(voxels.len());
    let mut color = Vec::with_capacity(voxels.len());
    let mut valid = Vec::with_capacity(voxels.len());
    let mut part = Vec::with_capacity(voxels.len());
    for (d, c, p) in voxels {
        distance.push(d);
        color.push(c.unwrap_or([0; 3]));
        valid.push(c.is_some());
        part.push(p);
    }
    CsdfGrid::from_parts(dims, like.origin(), like.voxel_size(), distance, color, valid, part)
}

/// Restore distances and part boundaries inside the rescaled range.
pub(crate) fn finish(out: CsdfGrid, plan: &ZonePlan) -> Result<CsdfGrid> {
    if marching_cubes(&out, 0.0).is_empty() {
        return Ok(out);
    }
    let range = plan.changed_range(&out);
    let mut out = revalidate_sdf(&out, Axis::from_index(plan.axis), range)?;
    snap_transitions(&mut out, Axis::from_index(plan.axis), plan.inside_layers());
    Ok(out)
}

pub fn stretch(grid: &CsdfGrid, zone: &ScalingZone) -> Result<CsdfGrid> {
    stretch_with(grid, zone, &ScaleOptions::default())
}

/// Stretch the zone so its end plane lands on `zone.dest`.
///
/// The shift is rounded to whole voxels. Content before the zone is copied
/// and content beyond it is translated unchanged.
pub fn stretch_with(grid: &CsdfGrid, zone: &ScalingZone, opts: &ScaleOptions) -> Result<CsdfGrid> {
    let plan = ZonePlan::new(grid, zone, opts.max_dim)?;
    if plan.is_identity() {
        return Ok(grid.clone());
    }
    let (us, ue, ut) = (plan.start, plan.end, plan.moved_end());
    let map: Vec<Src> = (0..plan.n_out)
        .map(|j| {
            let jf = j as f64;
            if jf <= us {
                Src::Layer(j)
            } else if jf >= ut {
                Src::Layer((j as i64 - plan.shift) as usize)
            } else {
                Src::At(us + (jf - us) * (ue - us) / (ut - us))
            }
        })
        .collect();
    let out = remap_axis(grid, plan.axis, &map)?;
    finish(out, &plan)
}

/// Scale the whole grid by `factor` along `axis`.
pub fn global_stretch(grid: &CsdfGrid, axis: Axis, factor: f64) -> Result<CsdfGrid> {
    let b = grid.bounds();
    let a = axis.index();
    let zone = ScalingZone::new(axis, b.min[a], b.max[a], b.min[a] + factor * (b.max[a] - b.min[a]))?;
    stretch(grid, &zone)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Vec3;
    use crate::grid::TruncationBand;

    #[test]
    fn identity_is_bitwise() {
        let g = fixtures::sphere_grid(32);
        let b = g.bounds();
        let z = ScalingZone::new(Axis::Y, 0.3, 0.6, 0.6).unwrap();
        assert_eq!(stretch(&g, &z).unwrap(), g);
        let tiny = ScalingZone::new(Axis::Y, 0.3, 0.6, 0.6 + 0.4 * g.voxel_size() as f64).unwrap();
        assert_eq!(stretch(&g, &tiny).unwrap(), g);
        assert!(b.contains(&Vec3::repeat(0.5)));
    }

    #[test]
    fn before_and_beyond_are_copied() {
        let g = fixtures::box_grid(32, Vec3::repeat(0.2), Vec3::repeat(0.8));
        let h = g.voxel_size() as f64;
        let z = ScalingZone::new(Axis::X, 0.4, 0.6, 0.6 + 8.0 * h).unwrap();
        let out = stretch(&g, &z).unwrap();
        let [nx, ny, nz] = g.dims();
        assert_eq!(out.dims(), [nx + 8, ny, nz]);
        for zz in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let src = g.index(x, y, zz);
                    let cx = g.axis_coord(Axis::X, x);
                    // Revalidation may touch voxels whose distance reaches into the zone.
                    let reach = (g.distance()[src] as f64).abs();
                    if cx + reach < 0.4 - 1e-9 {
                        assert_eq!(out.distance()[out.index(x, y, zz)], g.distance()[src]);
                    }
                    if cx - reach > 0.6 + 1e-9 {
                        assert_eq!(out.distance()[out.index(x + 8, y, zz)], g.distance()[src]);
                    }
                }
            }
        }
    }

    #[test]
    fn stretched_box_matches_longer_box() {
        let n = 48;
        let (lo, hi) = (Vec3::repeat(0.2), Vec3::new(0.6, 0.8, 0.8));
        let g = fixtures::box_grid(n, lo, hi);
        let h = g.voxel_size() as f64;
        let shift = 12.0 * h;
        let z = ScalingZone::new(Axis::X, 0.45, 0.55, 0.55 + shift).unwrap();
        let out = stretch(&g, &z).unwrap();
        let oracle = |p: Vec3| {
            fixtures::box_sdf(&p, &lo, &Vec3::new(hi.x + shift, hi.y, hi.z))
        };
        let band = TruncationBand::default_for(&out).tau();
        let mut worst: f64 = 0.0;
        for i in 0..out.len() {
            let d = out.distance()[i] as f64;
            if d.abs() <= band {
                worst = worst.max((d - oracle(out.center(out.coords(i)))).abs());
            }
        }
        assert!(worst <= h, "{worst} vs {h}");
    }

    #[test]
    fn color_ramp_slope_halves() {
        let n = 32;
        let h = 1.0 / n as f32;
        let mut g = CsdfGrid::from_fn([n; 3], [0.5 * h; 3], h, |p| p.y - 0.5).unwrap();
        let band = TruncationBand::default_for(&g);
        for i in 0..g.len() {
            if band.contains(g.distance()[i]) {
                let x = g.center(g.coords(i)).x;
                g.set_color(i, Some(quantize_rgb([x, 0.5, 1.0 - x])));
                g.part_mut()[i] = 0;
            }
        }
        let (start, end) = (0.25, 0.5);
        let out = stretch(&g, &ScalingZone::new(Axis::X, start, end, 0.75).unwrap()).unwrap();
        assert_eq!(out.dims()[0], 40);
        for i in 0..out.len() {
            let p = out.center(out.coords(i));
            if !(p.x > start && p.x < 0.75) || !out.valid()[i] {
                continue;
            }
            let src = start + (p.x - start) / 2.0;
            let c = out.color()[i];
            assert!((c[0] as f64 - src * 255.0).abs() <= 1.0, "{p:?} {c:?}");
            assert!((c[2] as f64 - (1.0 - src) * 255.0).abs() <= 1.0, "{p:?} {c:?}");
        }
    }

    #[test]
    fn mix_rules() {
        let a: Voxel = (0.0, Some([0, 0, 0]), 1);
        let b: Voxel = (1.0, Some([255, 255, 255]), UNASSIGNED);
        assert_eq!(mix(a, b, 0.5), (0.5, Some([128; 3]), 1));
        assert_eq!(mix(a, b, 0.75).2, 1);
        assert_eq!(mix((0.0, None, 2), b, 0.25).1, Some([255; 3]));
        assert_eq!(mix((0.0, None, 2), (0.0, None, 3), 0.25).1, None);
    }
}
