//! Dense colored signed distance grid.
//!
//! Voxel `(x, y, z)` has its center at `origin + (x, y, z) * voxel_size` and the
//! arrays are laid out with `x` fastest and `z` slowest. The grid's world box is
//! the union of its voxel cells, i.e. it extends half a voxel past the outermost
//! centers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Part index value for voxels that belong to no part.
pub const UNASSIGNED: u16 = u16::MAX;

/// Default truncation half-width, in voxels.
pub const DEFAULT_TAU_VOXELS: f64 = 3.0;

/// 8-bit RGB, each channel representing `value / 255` in `[0, 1]`.
pub type Rgb = [u8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two remaining axes in cyclic order.
    pub fn others(self) -> (usize, usize) {
        let a = self.index();
        ((a + 1) % 3, (a + 2) % 3)
    }
}

/// Half-width of the near-surface band, in world units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationBand {
    tau: f64,
}

impl TruncationBand {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "truncation band must be positive, got {tau}"
            )));
        }
        Ok(TruncationBand { tau })
    }

    /// `voxels` voxel widths of `grid`.
    pub fn voxels(grid: &CsdfGrid, voxels: f64) -> Result<Self> {
        Self::new(voxels * grid.voxel_size() as f64)
    }

    pub fn default_for(grid: &CsdfGrid) -> Self {
        TruncationBand {
            tau: DEFAULT_TAU_VOXELS * grid.voxel_size() as f64,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn contains(&self, d: f32) -> bool {
        (d as f64).abs() <= self.tau
    }
}

/// Result of a continuous lookup into a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub distance: f64,
    /// `None` when every contributing voxel is blank.
    pub color: Option<[f64; 3]>,
    pub part: u16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsdfGrid {
    dims: [usize; 3],
    origin: [f32; 3],
    voxel_size: f32,
    distance: Vec<f32>,
    color: Vec<Rgb>,
    valid: Vec<bool>,
    part: Vec<u16>,
}

impl CsdfGrid {
    /// A grid with every voxel at distance `fill`, blank color and no part.
    pub fn new(dims: [usize; 3], origin: [f32; 3], voxel_size: f32, fill: f32) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) || dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).is_none() {
            return Err(Error::InvalidDims(dims));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "voxel size must be positive, got {voxel_size}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(CsdfGrid {
            dims,
            origin,
            voxel_size,
            distance: vec![fill; n],
            color: vec![[0; 3]; n],
            valid: vec![false; n],
            part: vec![UNASSIGNED; n],
        })
    }

    /// Assemble a grid from raw channels.
    pub fn from_parts(
        dims: [usize; 3],
        origin: [f32; 3],
        voxel_size: f32,
        distance: Vec<f32>,
        color: Vec<Rgb>,
        valid: Vec<bool>,
        part: Vec<u16>,
    ) -> Result<Self> {
        let mut g = CsdfGrid::new(dims, origin, voxel_size, 0.0)?;
        let n = g.len();
        if distance.len() != n || color.len() != n || valid.len() != n || part.len() != n {
            return Err(Error::InvalidDims(dims));
        }
        g.distance = distance;
        g.color = color;
        g.valid = valid;
        g.part = part;
        Ok(g)
    }

    /// Fill distances from a closure evaluated at every voxel center.
    pub fn from_fn(
        dims: [usize; 3],
        origin: [f32; 3],
        voxel_size: f32,
        f: impl Fn(Vec3) -> f64 + Sync,
    ) -> Result<Self> {
        let mut g = CsdfGrid::new(dims, origin, voxel_size, 0.0)?;
        let [nx, ny, _] = dims;
        let o = g.origin_f64();
        let h = voxel_size as f64;
        g.distance
            .par_chunks_mut(nx * ny)
            .enumerate()
            .for_each(|(z, slab)| {
                for y in 0..ny {
                    for x in 0..nx {
                        let p = o + Vec3::new(x as f64, y as f64, z as f64) * h;
                        slab[x + nx * y] = f(p) as f32;
                    }
                }
            });
        Ok(g)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> [f32; 3] {
        self.origin
    }

    pub fn origin_f64(&self) -> Vec3 {
        Vec3::new(
            self.origin[0] as f64,
            self.origin[1] as f64,
            self.origin[2] as f64,
        )
    }

    pub fn voxel_size(&self) -> f32 {
        self.voxel_size
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// World position of a voxel center.
    #[inline]
    pub fn center(&self, c: [usize; 3]) -> Vec3 {
        let h = self.voxel_size as f64;
        self.origin_f64() + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * h
    }

    /// World coordinate of voxel `i` along `axis`.
    pub fn axis_coord(&self, axis: Axis, i: usize) -> f64 {
        self.origin[axis.index()] as f64 + i as f64 * self.voxel_size as f64
    }

    /// Union of voxel cells.
    pub fn bounds(&self) -> Aabb {
        let h = self.voxel_size as f64;
        let o = self.origin_f64();
        let last = Vec3::new(
            (self.dims[0] - 1) as f64,
            (self.dims[1] - 1) as f64,
            (self.dims[2] - 1) as f64,
        );
        Aabb {
            min: o - Vec3::repeat(0.5 * h),
            max: o + last * h + Vec3::repeat(0.5 * h),
        }
    }

    pub fn distance(&self) -> &[f32] {
        &self.distance
    }

    pub fn distance_mut(&mut self) -> &mut [f32] {
        &mut self.distance
    }

    pub fn color(&self) -> &[Rgb] {
        &self.color
    }

    pub fn color_mut(&mut self) -> &mut [Rgb] {
        &mut self.color
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_mut(&mut self) -> &mut [bool] {
        &mut self.valid
    }

    pub fn part(&self) -> &[u16] {
        &self.part
    }

    pub fn part_mut(&mut self) -> &mut [u16] {
        &mut self.part
    }

    /// Color of voxel `i`, if it carries one.
    pub fn color_at(&self, i: usize) -> Option<Rgb> {
        self.valid[i].then_some(self.color[i])
    }

    pub fn set_color(&mut self, i: usize, c: Option<Rgb>) {
        match c {
            Some(c) => {
                self.color[i] = c;
                self.valid[i] = true;
            }
            None => {
                self.color[i] = [0; 3];
                self.valid[i] = false;
            }
        }
    }

    /// Set every color inside the band to `c` and blank the rest.
    pub fn paint_band(&mut self, band: TruncationBand, c: Rgb) {
        for i in 0..self.len() {
            let inside = band.contains(self.distance[i]);
            self.set_color(i, inside.then_some(c));
        }
    }

    /// Sorted list of distinct assigned part ids.
    pub fn part_ids(&self) -> Vec<u16> {
        let mut seen = vec![false; UNASSIGNED as usize];
        for &p in &self.part {
            if p != UNASSIGNED {
                seen[p as usize] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i as u16)
            .collect()
    }

    /// Grid coordinate (fractional voxel index) of a world point.
    #[inline]
    pub fn to_grid(&self, p: &Vec3) -> Vec3 {
        (p - self.origin_f64()) / self.voxel_size as f64
    }

    /// Trilinear distance/color lookup with nearest-voxel part index.
    ///
    /// Blank voxels are dropped from the color blend and the remaining weights
    /// renormalized.
    pub fn sample_trilinear(&self, p: &Vec3) -> Result<Sample> {
        let b = self.bounds();
        if !b.contains(p) || !p.iter().all(|v| v.is_finite()) {
            let clamped = if p.iter().all(|v| v.is_finite()) {
                b.clamp(p)
            } else {
                b.center()
            };
            return Err(Error::OutOfDomain {
                point: [p.x, p.y, p.z],
                clamped: [clamped.x, clamped.y, clamped.z],
            });
        }
        Ok(self.sample_clamped(p))
    }

    /// As [`CsdfGrid::sample_trilinear`] but clamps points outside the grid to
    /// the outermost voxel centers.
    pub fn sample_clamped(&self, p: &Vec3) -> Sample {
        let u = self.to_grid(p);
        let cell = self.cell(&u);
        let mut d = 0.0;
        let mut c = [0.0; 3];
        let mut cw = 0.0;
        for (i, w) in cell.corners() {
            if w == 0.0 {
                continue;
            }
            d += w * self.distance[i] as f64;
            if self.valid[i] {
                for k in 0..3 {
                    c[k] += w * self.color[i][k] as f64 / 255.0;
                }
                cw += w;
            }
        }
        let color = (cw > 0.0).then(|| [c[0] / cw, c[1] / cw, c[2] / cw]);
        let near = [0, 1, 2].map(|a| {
            (u[a].round().max(0.0) as usize).min(self.dims[a] - 1)
        });
        Sample {
            distance: d,
            color,
            part: self.part[self.index(near[0], near[1], near[2])],
        }
    }

    /// Distance-only clamped lookup.
    #[inline]
    pub fn distance_clamped(&self, p: &Vec3) -> f64 {
        let u = self.to_grid(p);
        self.cell(&u)
            .corners()
            .map(|(i, w)| if w == 0.0 { 0.0 } else { w * self.distance[i] as f64 })
            .sum()
    }

    fn cell(&self, u: &Vec3) -> Cell {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        let mut step = [0usize; 3];
        for a in 0..3 {
            let n = self.dims[a];
            let v = u[a].clamp(0.0, (n - 1) as f64);
            let mut i0 = v.floor();
            let mut f = v - i0;
            // Snap so that lookups at voxel centers return stored values exactly.
            if f < 1e-9 {
                f = 0.0;
            } else if f > 1.0 - 1e-9 {
                i0 += 1.0;
                f = 0.0;
            }
            let i0 = (i0 as usize).min(n - 1);
            base[a] = i0;
            frac[a] = f;
            step[a] = if i0 + 1 < n { 1 } else { 0 };
        }
        let [nx, ny, _] = self.dims;
        Cell {
            base: self.index(base[0], base[1], base[2]),
            stride: [step[0], step[1] * nx, step[2] * nx * ny],
            frac,
        }
    }

    /// Resample onto `new_dims` voxels covering the same world box.
    ///
    /// Voxels stay cubic: when the requested aspect differs from the current
    /// one, the box is grown about its center along the under-covered axes and
    /// samples there are clamped to the outermost voxels.
    pub fn resample(&self, new_dims: [usize; 3]) -> Result<CsdfGrid> {
        if new_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidDims(new_dims));
        }
        if new_dims == self.dims {
            return Ok(self.clone());
        }
        let h = self.voxel_size as f64;
        let s = (0..3)
            .map(|a| self.dims[a] as f64 * h / new_dims[a] as f64)
            .fold(0.0, f64::max);
        let center = self.bounds().center();
        let origin = [0, 1, 2].map(|a| (center[a] - 0.5 * (new_dims[a] - 1) as f64 * s) as f32);
        let mut out = CsdfGrid::new(new_dims, origin, s as f32, 0.0)?;
        let band = TruncationBand::default_for(&out);
        let [nx, ny, _] = new_dims;
        let slab = nx * ny;
        let samples: Vec<Sample> = (0..out.len())
            .into_par_iter()
            .map(|i| {
                let c = [i % nx, (i / nx) % ny, i / slab];
                self.sample_clamped(&out.center(c))
            })
            .collect();
        for (i, smp) in samples.into_iter().enumerate() {
            out.distance[i] = smp.distance as f32;
            let color = smp.color.filter(|_| band.contains(out.distance[i]));
            out.set_color(i, color.map(quantize_rgb));
            if band.contains(out.distance[i]) {
                out.part[i] = smp.part;
            }
        }
        Ok(out)
    }

    /// Summary statistics used by `info` style reporting.
    pub fn band_stats(&self, band: TruncationBand) -> BandStats {
        let mut s = BandStats {
            min_distance: f64::INFINITY,
            max_distance: f64::NEG_INFINITY,
            ..Default::default()
        };
        for i in 0..self.len() {
            let d = self.distance[i];
            s.min_distance = s.min_distance.min(d as f64);
            s.max_distance = s.max_distance.max(d as f64);
            if d < 0.0 {
                s.inside += 1;
            }
            if band.contains(d) {
                s.band += 1;
                if self.valid[i] {
                    s.colored += 1;
                }
                if self.part[i] != UNASSIGNED {
                    s.assigned += 1;
                }
            }
        }
        s
    }

    /// Central-difference audit of `‖∇d‖ = 1` over voxels with `|d| < band`.
    ///
    /// Voxels on the grid boundary are skipped since they lack a centered stencil.
    pub fn eikonal_stats(&self, band: f64) -> EikonalStats {
        let [nx, ny, nz] = self.dims;
        let h = self.voxel_size as f64;
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        let mut count = 0usize;
        if nx < 3 || ny < 3 || nz < 3 {
            return EikonalStats::default();
        }
        for z in 1..nz - 1 {
            for y in 1..ny - 1 {
                for x in 1..nx - 1 {
                    let i = self.index(x, y, z);
                    if (self.distance[i] as f64).abs() >= band {
                        continue;
                    }
                    let d = |i: usize| self.distance[i] as f64;
                    let gx = d(i + 1) - d(i - 1);
                    let gy = d(i + nx) - d(i - nx);
                    let gz = d(i + nx * ny) - d(i - nx * ny);
                    let g = (gx * gx + gy * gy + gz * gz).sqrt() / (2.0 * h);
                    let e = (g - 1.0).abs();
                    sum += e;
                    max = max.max(e);
                    count += 1;
                }
            }
        }
        EikonalStats {
            mean: if count > 0 { sum / count as f64 } else { 0.0 },
            max,
            count,
        }
    }
}

pub(crate) fn quantize_rgb(c: [f64; 3]) -> Rgb {
    c.map(|v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
}

struct Cell {
    base: usize,
    stride: [usize; 3],
    frac: [f64; 3],
}

impl Cell {
    fn corners(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..8).map(move |k| {
            let mut i = self.base;
            let mut w = 1.0;
            for a in 0..3 {
                if k >> a & 1 == 1 {
                    i += self.stride[a];
                    w *= self.frac[a];
                } else {
                    w *= 1.0 - self.frac[a];
                }
            }
            (i, w)
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub min_distance: f64,
    pub max_distance: f64,
    /// Voxels with negative distance.
    pub inside: usize,
    /// Voxels within the truncation band.
    pub band: usize,
    /// Band voxels carrying a color.
    pub colored: usize,
    /// Band voxels carrying a part index.
    pub assigned: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EikonalStats {
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}
