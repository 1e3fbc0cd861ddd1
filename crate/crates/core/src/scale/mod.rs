//! Planar scaling zones: stretching and tiling of a grid along one axis.
//!
//! A zone is bounded by a start and an end plane perpendicular to an axis.
//! Moving the end plane to `dest` either stretches the zone content or fills
//! the new length with rescaled copies of it. Everything before the start
//! plane is copied, everything beyond the end plane is translated.

pub mod classify;
pub mod index;
pub mod revalidate;
pub mod stretch;
pub mod tile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, CsdfGrid};

pub use classify::{classify, PartRegion, Region, RegionMap};
pub use index::{index_boundary, index_boundary_fn, snap_transitions, AxisRay};
pub use revalidate::revalidate_sdf;
pub use stretch::{global_stretch, stretch, stretch_with};
pub use tile::{copy_scale, repeat_count, tile, tile_with};

pub const DEFAULT_MAX_DIM: usize = 512;
pub const DEFAULT_BLEND_WIDTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingZone {
    pub axis: Axis,
    pub start: f64,
    pub end: f64,
    /// New position of the end plane.
    pub dest: f64,
}

impl ScalingZone {
    pub fn new(axis: Axis, start: f64, end: f64, dest: f64) -> Result<ScalingZone> {
        let z = ScalingZone {
            axis,
            start,
            end,
            dest,
        };
        z.validate()?;
        Ok(z)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("start", self.start), ("end", self.end), ("dest", self.dest)] {
            if !v.is_finite() {
                return Err(Error::InvalidZone {
                    field,
                    reason: format!("{v} is not finite"),
                });
            }
        }
        if self.start >= self.end {
            return Err(Error::InvalidZone {
                field: "end",
                reason: format!("end {} must exceed start {}", self.end, self.start),
            });
        }
        if self.dest <= self.start {
            return Err(Error::InvalidZone {
                field: "dest",
                reason: format!("dest {} must exceed start {}", self.dest, self.start),
            });
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn target_length(&self) -> f64 {
        self.dest - self.start
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum ScaleMode {
    Stretch,
    Tile {
        /// Explicit copy count; derived from the target length when absent.
        repeats: Option<u32>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamPolicy {
    /// Layers crossfaded before each interior seam.
    pub blend_width: usize,
}

impl Default for SeamPolicy {
    fn default() -> Self {
        SeamPolicy {
            blend_width: DEFAULT_BLEND_WIDTH,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Stretch,
    Tile,
}

/// One edit as exchanged over the wire:
/// `{axis, start, end, dest, mode, repeats, blend_width}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneEdit {
    pub axis: Axis,
    pub start: f64,
    pub end: f64,
    pub dest: f64,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub repeats: Option<u32>,
    #[serde(default = "default_blend_width")]
    pub blend_width: usize,
}

fn default_blend_width() -> usize {
    DEFAULT_BLEND_WIDTH
}

impl ZoneEdit {
    pub fn stretch(zone: ScalingZone) -> ZoneEdit {
        ZoneEdit {
            axis: zone.axis,
            start: zone.start,
            end: zone.end,
            dest: zone.dest,
            mode: ModeName::Stretch,
            repeats: None,
            blend_width: DEFAULT_BLEND_WIDTH,
        }
    }

    pub fn tile(zone: ScalingZone, repeats: Option<u32>, seam: SeamPolicy) -> ZoneEdit {
        ZoneEdit {
            mode: ModeName::Tile,
            repeats,
            blend_width: seam.blend_width,
            ..ZoneEdit::stretch(zone)
        }
    }

    pub fn zone(&self) -> ScalingZone {
        ScalingZone {
            axis: self.axis,
            start: self.start,
            end: self.end,
            dest: self.dest,
        }
    }

    pub fn mode(&self) -> ScaleMode {
        match self.mode {
            ModeName::Stretch => ScaleMode::Stretch,
            ModeName::Tile => ScaleMode::Tile {
                repeats: self.repeats,
            },
        }
    }

    pub fn seam(&self) -> SeamPolicy {
        SeamPolicy {
            blend_width: self.blend_width,
        }
    }

    /// Checks that do not need a grid.
    pub fn validate(&self) -> Result<()> {
        self.zone().validate()?;
        if self.repeats == Some(0) {
            return Err(Error::InvalidZone {
                field: "repeats",
                reason: "repeat count must be at least 1".into(),
            });
        }
        if self.mode == ModeName::Stretch && self.repeats.is_some() {
            return Err(Error::InvalidZone {
                field: "repeats",
                reason: "repeats only applies to tile mode".into(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, grid: &CsdfGrid, opts: &ScaleOptions) -> Result<CsdfGrid> {
        self.validate()?;
        match self.mode() {
            ScaleMode::Stretch => stretch_with(grid, &self.zone(), opts),
            mode @ ScaleMode::Tile { .. } => tile_with(grid, &self.zone(), mode, self.seam(), opts),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScaleOptions {
    /// Largest output length along the zone axis, in voxels.
    pub max_dim: usize,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// A zone expressed in voxel units of a particular grid.
///
/// Coordinates are fractional voxel indices along the zone axis. The end
/// plane moves by a whole number of voxels so the beyond-region can be copied
/// without resampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ZonePlan {
    pub axis: usize,
    pub n: usize,
    pub start: f64,
    pub end: f64,
    /// Whole-voxel shift of the end plane.
    pub shift: i64,
    pub n_out: usize,
}

impl ZonePlan {
    pub fn new(grid: &CsdfGrid, zone: &ScalingZone, max_dim: usize) -> Result<ZonePlan> {
        zone.validate()?;
        let a = zone.axis.index();
        let b = grid.bounds();
        for v in [zone.start, zone.end] {
            if v < b.min[a] || v > b.max[a] {
                let mut p = b.center();
                p[a] = v;
                let c = b.clamp(&p);
                return Err(Error::OutOfDomain {
                    point: [p.x, p.y, p.z],
                    clamped: [c.x, c.y, c.z],
                });
            }
        }
        let h = grid.voxel_size() as f64;
        let o = grid.origin_f64()[a];
        let n = grid.dims()[a];
        let shift = ((zone.dest - zone.end) / h).round() as i64;
        let plan = ZonePlan {
            axis: a,
            n,
            start: (zone.start - o) / h,
            end: (zone.end - o) / h,
            shift,
            n_out: 0,
        };
        if plan.moved_end() <= plan.start {
            return Err(Error::InvalidZone {
                field: "dest",
                reason: "destination rounds onto the start plane".into(),
            });
        }
        let n_out = n as i64 + shift;
        if n_out as u64 > max_dim as u64 {
            return Err(Error::TooLarge {
                len: n_out as usize,
                max: max_dim,
            });
        }
        Ok(ZonePlan {
            n_out: n_out as usize,
            ..plan
        })
    }

    /// End plane after the move, in voxel units.
    pub fn moved_end(&self) -> f64 {
        self.end + self.shift as f64
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0
    }

    /// World interval occupied by the rescaled zone in the output.
    pub fn changed_range(&self, grid: &CsdfGrid) -> (f64, f64) {
        let h = grid.voxel_size() as f64;
        let o = grid.origin_f64()[self.axis];
        (o + self.start * h, o + self.moved_end() * h)
    }

    /// Output layers `j` with `start < j < moved_end`.
    pub fn inside_layers(&self) -> std::ops::Range<usize> {
        let lo = (self.start.floor() + 1.0).max(0.0) as usize;
        let hi = (self.moved_end().ceil().max(0.0) as usize).min(self.n_out);
        lo..hi.max(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_json_shape() {
        let e: ZoneEdit = serde_json::from_str(
            r#"{"axis":"y","start":0.1,"end":0.3,"dest":0.5,"mode":"tile","repeats":null,"blend_width":2}"#,
        )
        .unwrap();
        assert_eq!(e.axis, Axis::Y);
        assert_eq!(e.mode(), ScaleMode::Tile { repeats: None });
        assert_eq!(e.blend_width, 2);
        let back: ZoneEdit = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        let minimal: ZoneEdit = serde_json::from_str(r#"{"axis":"x","start":0,"end":1,"dest":2}"#).unwrap();
        assert_eq!(minimal.mode(), ScaleMode::Stretch);
        assert_eq!(minimal.blend_width, DEFAULT_BLEND_WIDTH);
        assert!(serde_json::from_str::<ZoneEdit>(r#"{"axis":"x","start":0,"end":1,"dest":2,"scale":3}"#).is_err());
    }

    #[test]
    fn zone_validation_names_fields() {
        let bad = |s, e, d| ScalingZone::new(Axis::X, s, e, d).unwrap_err();
        assert!(matches!(bad(0.5, 0.5, 1.0), Error::InvalidZone { field: "end", .. }));
        assert!(matches!(bad(0.5, 0.6, 0.4), Error::InvalidZone { field: "dest", .. }));
        assert!(matches!(bad(f64::NAN, 0.6, 0.7), Error::InvalidZone { field: "start", .. }));
        let mut e = ZoneEdit::stretch(ScalingZone::new(Axis::X, 0.1, 0.2, 0.3).unwrap());
        e.mode = ModeName::Tile;
        e.repeats = Some(0);
        assert!(matches!(e.validate(), Err(Error::InvalidZone { field: "repeats", .. })));
    }

    #[test]
    fn plan_rounds_to_whole_voxels() {
        let g = CsdfGrid::new([64, 8, 8], [0.5 / 64.0, 0.0, 0.0], 1.0 / 64.0, 1.0).unwrap();
        let z = ScalingZone::new(Axis::X, 0.25, 0.5, 0.76).unwrap();
        let p = ZonePlan::new(&g, &z, 512).unwrap();
        assert_eq!(p.shift, 17);
        assert_eq!(p.n_out, 81);
        let far = ScalingZone::new(Axis::X, 0.25, 0.5, 20.0).unwrap();
        assert!(matches!(ZonePlan::new(&g, &far, 512), Err(Error::TooLarge { .. })));
        let outside = ScalingZone::new(Axis::X, 0.25, 1.5, 2.0).unwrap();
        assert!(matches!(ZonePlan::new(&g, &outside, 512), Err(Error::OutOfDomain { .. })));
    }
}
