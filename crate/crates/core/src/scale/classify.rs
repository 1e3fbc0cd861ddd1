//! Which side of a zone each voxel and part lies on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ScalingZone, ZonePlan};
use crate::error::Result;
use crate::grid::{CsdfGrid, UNASSIGNED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Before,
    Inside,
    Beyond,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartSide {
    Before,
    Intersecting,
    Beyond,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartRegion {
    pub side: PartSide,
    /// Voxel counts before, inside and beyond the zone.
    pub counts: [usize; 3],
    pub majority: Region,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub axis: usize,
    /// Region of each layer along the zone axis.
    pub layers: Vec<Region>,
    pub parts: BTreeMap<u16, PartRegion>,
}

impl RegionMap {
    pub fn region_of(&self, grid: &CsdfGrid, i: usize) -> Region {
        self.layers[grid.coords(i)[self.axis]]
    }
}

/// Label voxels by their center against the zone planes, and parts by the
/// voxels carrying their index. A part with any voxel inside, or with voxels
/// on both sides, intersects the zone.
pub fn classify(grid: &CsdfGrid, zone: &ScalingZone) -> Result<RegionMap> {
    let plan = ZonePlan::new(grid, zone, usize::MAX)?;
    let layers: Vec<Region> = (0..grid.dims()[plan.axis])
        .map(|j| {
            let u = j as f64;
            if u < plan.start {
                Region::Before
            } else if u <= plan.end {
                Region::Inside
            } else {
                Region::Beyond
            }
        })
        .collect();
    let mut counts: BTreeMap<u16, [usize; 3]> = BTreeMap::new();
    for (i, &p) in grid.part().iter().enumerate() {
        if p == UNASSIGNED {
            continue;
        }
        let r = layers[grid.coords(i)[plan.axis]];
        counts.entry(p).or_default()[r as usize] += 1;
    }
    let parts = counts
        .into_iter()
        .map(|(p, c)| {
            let side = if c[1] > 0 || (c[0] > 0 && c[2] > 0) {
                PartSide::Intersecting
            } else if c[0] > 0 {
                PartSide::Before
            } else {
                PartSide::Beyond
            };
            let majority = [Region::Before, Region::Inside, Region::Beyond]
                .into_iter()
                .max_by_key(|&r| (c[r as usize], std::cmp::Reverse(r as usize)))
                .unwrap();
            (
                p,
                PartRegion {
                    side,
                    counts: c,
                    majority,
                },
            )
        })
        .collect();
    Ok(RegionMap {
        axis: plan.axis,
        layers,
        parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::fixtures;
    use crate::grid::Axis;

    #[test]
    fn sphere_halves() {
        let g = fixtures::sphere_grid(32);
        let below = classify(&g, &ScalingZone::new(Axis::Z, 0.05, 0.3, 0.4).unwrap()).unwrap();
        assert_eq!(below.parts[&0].side, PartSide::Intersecting);
        assert_eq!(below.parts[&1].side, PartSide::Beyond);
        let above = classify(&g, &ScalingZone::new(Axis::Z, 0.7, 0.95, 1.0).unwrap()).unwrap();
        assert_eq!(above.parts[&0].side, PartSide::Before);
        assert_eq!(above.parts[&1].side, PartSide::Intersecting);
        let total = g.part().iter().filter(|&&p| p == 1).count();
        assert_eq!(above.parts[&1].counts.iter().sum::<usize>(), total);
        assert_eq!(below.parts[&1].majority, Region::Beyond);
        let mid = classify(&g, &ScalingZone::new(Axis::X, 0.45, 0.55, 0.6).unwrap()).unwrap();
        assert!(mid.parts.values().all(|p| p.side == PartSide::Intersecting));
        assert_eq!(mid.region_of(&g, g.index(0, 5, 5)), Region::Before);
        assert_eq!(mid.region_of(&g, g.index(16, 5, 5)), Region::Inside);
    }

    #[test]
    fn zone_extremes() {
        let g = fixtures::sphere_grid(16);
        let all = classify(&g, &ScalingZone::new(Axis::X, 0.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(all.layers.iter().all(|&r| r == Region::Inside));
        assert!(all.parts.values().all(|p| p.side == PartSide::Intersecting && p.counts[1] > 0));
        let sliver = classify(&g, &ScalingZone::new(Axis::X, 1.0 - 1e-6, 1.0, 1.0).unwrap()).unwrap();
        assert!(sliver.layers.iter().all(|&r| r == Region::Before));
        assert!(sliver.parts.values().all(|p| p.side == PartSide::Before));
    }

    #[test]
    fn zone_outside_the_grid() {
        let g = fixtures::sphere_grid(16);
        let z = ScalingZone::new(Axis::Y, 1.5, 2.0, 2.5).unwrap();
        assert!(matches!(classify(&g, &z), Err(Error::OutOfDomain { .. })));
    }
}
