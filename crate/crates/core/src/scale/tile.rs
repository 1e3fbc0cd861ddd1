//! Filling a lengthened zone with rescaled copies of its content.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::stretch::{assemble, finish, mix, read, remap_axis, Src, Voxel};
use super::{ScaleMode, ScaleOptions, ScalingZone, SeamPolicy, ZonePlan};
use crate::error::{Error, Result};
use crate::grid::{CsdfGrid, TruncationBand, UNASSIGNED};

/// Copies needed to fill `target` with pieces of length `zone`, rounding
/// half away from zero and never below one.
pub fn repeat_count(zone: f64, target: f64) -> u32 {
    ((target / zone + 0.5 + 1e-9).floor() as u32).max(1)
}

/// Stretch factor applied to each of `copies` pieces filling `target`.
pub fn copy_scale(zone: f64, target: f64, copies: u32) -> f64 {
    target / (copies as f64 * zone)
}

pub fn tile(grid: &CsdfGrid, zone: &ScalingZone, repeats: Option<u32>, seam: SeamPolicy) -> Result<CsdfGrid> {
    tile_with(grid, zone, ScaleMode::Tile { repeats }, seam, &ScaleOptions::default())
}

/// Replace the zone by copies of its content, each rescaled to an equal share
/// of the new length.
///
/// Parts lying wholly inside the zone get fresh ids in every copy after the
/// first. The last `blend_width` layers of each copy fade towards the first
/// layer of the next one.
pub fn tile_with(
    grid: &CsdfGrid,
    zone: &ScalingZone,
    mode: ScaleMode,
    seam: SeamPolicy,
    opts: &ScaleOptions,
) -> Result<CsdfGrid> {
    let plan = ZonePlan::new(grid, zone, opts.max_dim)?;
    let n = match mode {
        ScaleMode::Tile { repeats: Some(0) } => {
            return Err(Error::InvalidZone {
                field: "repeats",
                reason: "repeat count must be at least 1".into(),
            })
        }
        ScaleMode::Tile { repeats: Some(r) } => r as usize,
        _ => repeat_count(zone.length(), zone.target_length()) as usize,
    };
    let (us, ue, ut) = (plan.start, plan.end, plan.moved_end());
    let zone_vox = ue - us;
    if seam.blend_width as f64 >= zone_vox {
        return Err(Error::InvalidZone {
            field: "blend_width",
            reason: format!("{} layers do not fit a zone of {zone_vox:.2} voxels", seam.blend_width),
        });
    }
    if n == 1 && plan.is_identity() {
        return Ok(grid.clone());
    }
    let copy_len = (ut - us) / n as f64;
    if copy_len < 2.0 {
        return Err(Error::TooThin { voxels: copy_len });
    }

    let mut copy_of: Vec<Option<usize>> = vec![None; plan.n_out];
    let map: Vec<Src> = (0..plan.n_out)
        .map(|j| {
            let jf = j as f64;
            if jf <= us {
                Src::Layer(j)
            } else if jf >= ut {
                Src::Layer((j as i64 - plan.shift) as usize)
            } else {
                let q = (jf - us) / copy_len;
                let c = (q.floor() as usize).min(n - 1);
                copy_of[j] = Some(c);
                Src::At(us + (q - c as f64) * zone_vox)
            }
        })
        .collect();
    let mut out = remap_axis(grid, plan.axis, &map)?;

    let blends = seam_weights(&copy_of, us, copy_len, n, seam.blend_width.min(copy_len.floor() as usize));
    if !blends.is_empty() {
        out = blend_layers(&out, plan.axis, &blends)?;
    }
    relabel_copies(grid, &mut out, &plan, &copy_of)?;
    finish(out, &plan)
}

/// `(layer, target layer, weight)` for every blended layer.
fn seam_weights(copy_of: &[Option<usize>], us: f64, copy_len: f64, n: usize, width: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    if width == 0 {
        return out;
    }
    for c in 0..n.saturating_sub(1) {
        let s = us + (c + 1) as f64 * copy_len;
        let Some(target) = (s.ceil() as usize..copy_of.len()).find(|&j| copy_of[j] == Some(c + 1)) else {
            continue;
        };
        for (j, owner) in copy_of.iter().enumerate().take(target) {
            if *owner != Some(c) {
                continue;
            }
            let m = (s - j as f64).ceil().max(1.0) as usize;
            if m <= width {
                let alpha = (width - m + 1) as f64 / (width + 1) as f64;
                out.push((j, target, alpha));
            }
        }
    }
    out
}

fn blend_layers(grid: &CsdfGrid, axis: usize, blends: &[(usize, usize, f64)]) -> Result<CsdfGrid> {
    let dims = grid.dims();
    let mut by_layer: Vec<Option<(usize, f64)>> = vec![None; dims[axis]];
    for &(j, t, a) in blends {
        by_layer[j] = Some((t, a));
    }
    let voxels: Vec<Voxel> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut c = [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
            let own = read(grid, i);
            let Some((t, alpha)) = by_layer[c[axis]] else {
                return own;
            };
            c[axis] = t;
            let other = read(grid, grid.index(c[0], c[1], c[2]));
            let (d, col, _) = mix(own, other, alpha);
            (d, col, own.2)
        })
        .collect();
    assemble(grid, dims, voxels)
}

/// Give parts confined to the zone a fresh id in each copy after the first.
fn relabel_copies(src: &CsdfGrid, out: &mut CsdfGrid, plan: &ZonePlan, copy_of: &[Option<usize>]) -> Result<()> {
    let band = TruncationBand::default_for(src);
    let mut inside = BTreeSet::new();
    let mut outside = BTreeSet::new();
    let mut max_id = None;
    for i in 0..src.len() {
        let p = src.part()[i];
        if p == UNASSIGNED || !band.contains(src.distance()[i]) {
            continue;
        }
        max_id = max_id.max(Some(p));
        let u = src.coords(i)[plan.axis] as f64;
        if u >= plan.start && u <= plan.end {
            inside.insert(p);
        } else {
            outside.insert(p);
        }
    }
    let confined: Vec<u16> = inside.difference(&outside).copied().collect();
    let copies = copy_of.iter().flatten().max().map_or(0, |&c| c + 1);
    if confined.is_empty() || copies < 2 {
        return Ok(());
    }
    let mut next = max_id.map_or(0, |m| m as usize + 1);
    let mut table: Vec<BTreeMap<u16, u16>> = vec![BTreeMap::new(); copies];
    for t in table.iter_mut().skip(1) {
        for &p in &confined {
            if next >= UNASSIGNED as usize {
                return Err(Error::TooLarge {
                    len: next + 1,
                    max: UNASSIGNED as usize,
                });
            }
            t.insert(p, next as u16);
            next += 1;
        }
    }
    let od = out.dims();
    let parts = out.part_mut();
    for (i, p) in parts.iter_mut().enumerate() {
        let c = [i % od[0], (i / od[0]) % od[1], i / (od[0] * od[1])];
        if let Some(k) = copy_of[c[plan.axis]] {
            if let Some(&fresh) = table[k].get(p) {
                *p = fresh;
            }
        }
    }
    Ok(())
}
