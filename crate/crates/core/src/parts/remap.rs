//! Nearest-part labelling of band voxels.

use rayon::prelude::*;

use super::{FaceKind, PartSet};
use crate::error::{Error, Result};
use crate::grid::{CsdfGrid, TruncationBand, UNASSIGNED};
use crate::mesh::SurfaceQueryIndex;

/// Label band voxels with the id of the part whose original surface is
/// nearest, using the default band of `grid`.
pub fn remap_indices(grid: &CsdfGrid, parts: &PartSet) -> Result<CsdfGrid> {
    remap_indices_in(grid, parts, TruncationBand::default_for(grid))
}

pub fn remap_indices_in(grid: &CsdfGrid, parts: &PartSet, band: TruncationBand) -> Result<CsdfGrid> {
    if parts.is_empty() {
        return Err(Error::EmptyGeometry("part set is empty"));
    }
    if parts.len() >= UNASSIGNED as usize {
        return Err(Error::TooLarge {
            len: parts.len(),
            max: UNASSIGNED as usize - 1,
        });
    }
    let slack = 2.0 * grid.voxel_size() as f64;
    let gb = grid.bounds();
    for (id, p) in parts.parts.iter().enumerate() {
        let b = p.mesh().bounds();
        let outside = (0..3).any(|a| b.min[a] < gb.min[a] - slack || b.max[a] > gb.max[a] + slack);
        if outside {
            return Err(Error::FrameMismatch(format!(
                "part {id} spans {:?}..{:?}, grid spans {:?}..{:?}",
                b.min.as_slice(),
                b.max.as_slice(),
                gb.min.as_slice(),
                gb.max.as_slice()
            )));
        }
    }
    let indices: Vec<SurfaceQueryIndex> = parts
        .parts
        .par_iter()
        .map(|p| {
            let mut tris = p.piece.triangles_of(FaceKind::Surface);
            if tris.is_empty() {
                tris = (0..p.piece.kinds.len())
                    .filter(|&t| p.piece.kinds[t] != FaceKind::Interior)
                    .collect();
            }
            SurfaceQueryIndex::build(&p.mesh().subset(&tris))
        })
        .collect::<Result<_>>()?;

    let mut out = grid.clone();
    let labels: Vec<u16> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !band.contains(grid.distance()[i]) {
                return UNASSIGNED;
            }
            let p = grid.center(grid.coords(i));
            let mut best = (f64::INFINITY, UNASSIGNED);
            for (id, index) in indices.iter().enumerate() {
                let d = index.nearest(&p).distance;
                if d < best.0 {
                    best = (d, id as u16);
                }
            }
            best.1
        })
        .collect();
    out.part_mut().copy_from_slice(&labels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Vec3;
    use crate::parts::{decompose, DecomposeOptions};

    #[test]
    fn two_cubes_match_brute_force() {
        let mesh = fixtures::two_boxes_mesh();
        let set = decompose(&mesh, &DecomposeOptions::default()).unwrap();
        let mut grid = CsdfGrid::from_fn([32, 32, 32], [1.0 / 64.0; 3], 1.0 / 32.0, |p| {
            let a = fixtures::box_sdf(&p, &Vec3::zeros(), &Vec3::repeat(0.4));
            let b = fixtures::box_sdf(&p, &Vec3::new(0.6, 0.0, 0.0), &Vec3::new(1.0, 0.4, 0.4));
            a.min(b)
        })
        .unwrap();
        grid.part_mut().fill(7);
        let out = remap_indices(&grid, &set).unwrap();
        let band = TruncationBand::default_for(&grid);
        for i in 0..grid.len() {
            let p = grid.center(grid.coords(i));
            if !band.contains(grid.distance()[i]) {
                assert_eq!(out.part()[i], UNASSIGNED);
                continue;
            }
            // Brute force over every surface triangle of each part.
            let mut best = (f64::INFINITY, 0u16);
            for (id, part) in set.parts.iter().enumerate() {
                for t in 0..part.mesh().triangles.len() {
                    let [a, b, c] = part.mesh().corners(t);
                    let (q, _) = crate::geom::closest_point_on_triangle(&p, &a, &b, &c);
                    let d = (q - p).norm();
                    if d < best.0 {
                        best = (d, id as u16);
                    }
                }
            }
            assert_eq!(out.part()[i], best.1);
        }
        assert_eq!(remap_indices(&out, &set).unwrap(), out);
    }

    #[test]
    fn frame_mismatch() {
        let set = decompose(&fixtures::two_boxes_mesh().translated(Vec3::repeat(5.0)), &DecomposeOptions::default()).unwrap();
        let grid = fixtures::box_grid(16, Vec3::repeat(0.2), Vec3::repeat(0.8));
        assert!(matches!(remap_indices(&grid, &set), Err(Error::FrameMismatch(_))));
    }
}
