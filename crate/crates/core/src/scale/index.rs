//! Part-boundary location along axis rays and boundary snapping.

use std::ops::Range;

use crate::grid::{Axis, CsdfGrid, TruncationBand, UNASSIGNED};

/// A line parallel to `axis` through the other two world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRay {
    pub axis: Axis,
    /// World coordinates on the remaining axes, in [`Axis::others`] order.
    pub across: [f64; 2],
}

/// Boundary position on a scanned interval.
///
/// Steps through `range` by `step` and, among positions `x` where
/// `part(x) != part(x + step)` with both assigned, returns the one with the
/// smallest `|sdf(x)|`. Ties go to the first position found.
pub fn index_boundary_fn(
    range: (f64, f64),
    step: f64,
    sdf: impl Fn(f64) -> f64,
    part: impl Fn(f64) -> u16,
) -> Option<f64> {
    if !(step > 0.0) || !(range.1 >= range.0) {
        return None;
    }
    let steps = ((range.1 - range.0) / step).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    let mut prev = part(range.0);
    for k in 0..steps {
        let x = range.0 + k as f64 * step;
        let next = part(x + step);
        if prev != UNASSIGNED && next != UNASSIGNED && prev != next {
            let s = sdf(x).abs();
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, x));
            }
        }
        prev = next;
    }
    best.map(|(_, x)| x)
}

/// Boundary position along `ray` across the whole grid, in world units.
/// `step` is in voxels.
///
/// Distances are interpolated linearly between voxel centers and part
/// indices are taken from the nearest voxel.
pub fn index_boundary(grid: &CsdfGrid, ray: AxisRay, step: f64) -> Option<f64> {
    let a = ray.axis.index();
    let (b, c) = ray.axis.others();
    let dims = grid.dims();
    let o = grid.origin_f64();
    let h = grid.voxel_size() as f64;
    let cell = |k: usize, w: f64| (((w - o[k]) / h).round().max(0.0) as usize).min(dims[k] - 1);
    let (jb, jc) = (cell(b, ray.across[0]), cell(c, ray.across[1]));
    let at = |j: usize| {
        let mut q = [0; 3];
        q[a] = j;
        q[b] = jb;
        q[c] = jc;
        grid.index(q[0], q[1], q[2])
    };
    let n = dims[a];
    let u = |x: f64| ((x - o[a]) / h).clamp(0.0, (n - 1) as f64);
    let sdf = |x: f64| {
        let u = u(x);
        let i0 = (u.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        let t = u - i0 as f64;
        let d = grid.distance();
        d[at(i0)] as f64 * (1.0 - t) + d[at(i1)] as f64 * t
    };
    let part = |x: f64| grid.part()[at((u(x).round() as usize).min(n - 1))];
    index_boundary_fn((o[a], o[a] + (n - 1) as f64 * h), step * h, sdf, part)
}

/// Move part transitions onto nearby minima of `|d|`.
///
/// Works on every line along `axis`, over transitions touching `layers`.
/// A transition between consecutive band voxels with different parts is
/// kept when a local minimum of `|d|` lies within one voxel of it. Otherwise
/// it moves to the nearest such minimum inside the two adjoining runs, and
/// the voxels passed over are relabelled. Returns the number of relabelled
/// voxels.
pub fn snap_transitions(grid: &mut CsdfGrid, axis: Axis, layers: Range<usize>) -> usize {
    let a = axis.index();
    let (b, c) = axis.others();
    let dims = grid.dims();
    let n = dims[a];
    if layers.is_empty() || n < 2 {
        return 0;
    }
    let band = TruncationBand::default_for(grid);
    let lo = layers.start.saturating_sub(1);
    let hi = layers.end.min(n - 1);
    let mut moved = 0;
    let mut line_d = vec![0.0f32; n];
    let mut line_p = vec![0u16; n];
    let mut idx = vec![0usize; n];
    for jc in 0..dims[c] {
        for jb in 0..dims[b] {
            for j in 0..n {
                let mut q = [0; 3];
                q[a] = j;
                q[b] = jb;
                q[c] = jc;
                idx[j] = grid.index(q[0], q[1], q[2]);
                line_d[j] = grid.distance()[idx[j]].abs();
                line_p[j] = grid.part()[idx[j]];
            }
            let changed = snap_line(&line_d, &mut line_p, band, lo, hi);
            if changed > 0 {
                moved += changed;
                for j in lo..=hi {
                    grid.part_mut()[idx[j]] = line_p[j];
                }
            }
        }
    }
    moved
}

pub(crate) fn is_local_min(d: &[f32], j: usize) -> bool {
    (j == 0 || d[j] <= d[j - 1]) && (j + 1 == d.len() || d[j] <= d[j + 1])
}

/// Snap transitions within `lo..=hi` of one line of `|d|` values.
fn snap_line(d: &[f32], p: &mut [u16], band: TruncationBand, lo: usize, hi: usize) -> usize {
    let ok = |p: &[u16], j: usize| band.contains(d[j]) && p[j] != UNASSIGNED;
    let near_min = |j: usize| (j.saturating_sub(1)..=(j + 2).min(d.len() - 1)).any(|m| is_local_min(d, m));
    let mut moved = 0;
    let mut j = lo;
    while j < hi {
        if !(ok(p, j) && ok(p, j + 1) && p[j] != p[j + 1]) || near_min(j) {
            j += 1;
            continue;
        }
        let (left, right) = (p[j], p[j + 1]);
        let mut l = j;
        while l > lo && ok(p, l - 1) && p[l - 1] == left {
            l -= 1;
        }
        let mut r = j + 1;
        while r < hi && ok(p, r + 1) && p[r + 1] == right {
            r += 1;
        }
        let target = (l..=r)
            .filter(|&m| is_local_min(d, m))
            .min_by(|&x, &y| {
                let dx = (x as f64 - j as f64 - 0.5).abs();
                let dy = (y as f64 - j as f64 - 0.5).abs();
                dx.total_cmp(&dy).then(x.cmp(&y))
            });
        let Some(m) = target else {
            j += 1;
            continue;
        };
        if m <= j {
            for v in p.iter_mut().take(j + 1).skip(m + 1) {
                *v = right;
            }
            moved += j - m;
            j = m + 1;
        } else {
            for v in p.iter_mut().take(m).skip(j + 1) {
                *v = left;
            }
            moved += m - 1 - j;
            j = m;
        }
    }
    moved
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_transition() {
        let part = |x: f64| if x < 5.0 { 1 } else { 2 };
        let sdf = |x: f64| x - 5.0;
        let x = index_boundary_fn((0.0, 10.0), 0.5, sdf, part).unwrap();
        assert!((x - 5.0).abs() <= 0.5, "{x}");
    }

    #[test]
    fn lower_distance_transition_wins() {
        let part = |x: f64| match x {
            x if x < 3.0 => 1,
            x if x < 7.0 => 2,
            _ => 3,
        };
        let sdf = |x: f64| if x < 5.0 { 0.9 } else { 0.1 };
        let x = index_boundary_fn((0.0, 10.0), 0.5, sdf, part).unwrap();
        assert!((x - 7.0).abs() <= 0.5, "{x}");
    }

    #[test]
    fn no_transition() {
        assert_eq!(index_boundary_fn((0.0, 10.0), 0.5, |x| x, |_| 1), None);
        assert_eq!(index_boundary_fn((0.0, 10.0), 0.5, |x| x, |x| if x < 5.0 { 1 } else { UNASSIGNED }), None);
    }

    #[test]
    fn snapping_moves_to_the_minimum() {
        let band = TruncationBand::new(10.0).unwrap();
        let d = [3.0, 2.0, 1.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut p = [1, 1, 1, 1, 1, 1, 1, 2, 2, 2];
        assert_eq!(snap_line(&d, &mut p, band, 0, 9), 3);
        assert_eq!(p, [1, 1, 1, 1, 2, 2, 2, 2, 2, 2]);
        let mut kept = [1, 1, 1, 2, 2, 2, 2, 2, 2, 2];
        assert_eq!(snap_line(&d, &mut kept, band, 0, 9), 0);
    }

    #[test]
    fn grid_ray_boundary() {
        let h = 0.1f32;
        let mut g = CsdfGrid::from_fn([20, 3, 3], [0.05, 0.05, 0.05], h, |p| p.x - 1.2).unwrap();
        for i in 0..g.len() {
            let x = g.center(g.coords(i)).x;
            g.part_mut()[i] = if x < 1.2 { 0 } else { 1 };
        }
        let ray = AxisRay {
            axis: Axis::X,
            across: [0.15, 0.15],
        };
        let x = index_boundary(&g, ray, 0.5).unwrap();
        assert!((x - 1.2).abs() <= 0.1, "{x}");
    }
}
