//! CPU sphere tracing of a grid into an RGBA image.

use image::{ImageFormat, RgbaImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::{CsdfGrid, UNASSIGNED};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub eye: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    /// Vertical field of view in degrees.
    pub fov: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(eye: Vec3, target: Vec3, up: Vec3, fov: f64, width: u32, height: u32) -> Result<Camera> {
        let cam = Camera {
            eye: eye.into(),
            target: target.into(),
            up: up.into(),
            fov,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// A three-quarter view framing the whole grid.
    pub fn framing(grid: &CsdfGrid, width: u32, height: u32) -> Camera {
        let b = grid.bounds();
        let c = b.center();
        let dir = Vec3::new(0.55, 0.45, 1.0).normalize();
        let fov: f64 = 35.0;
        let dist = 0.5 * b.diagonal() / (0.5 * fov.to_radians()).sin() * 1.05;
        Camera {
            eye: (c + dir * dist).into(),
            target: c.into(),
            up: [0.0, 1.0, 0.0],
            fov,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDims([self.width as usize, self.height as usize, 1]));
        }
        let all = self.eye.iter().chain(&self.target).chain(&self.up).chain([&self.fov]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateGeometry("camera has non-finite values".into()));
        }
        if !(self.fov > 1.0 && self.fov < 179.0) {
            return Err(Error::DegenerateGeometry(format!("field of view {} outside (1, 179)", self.fov)));
        }
        let (eye, target, up) = (Vec3::from(self.eye), Vec3::from(self.target), Vec3::from(self.up));
        let fwd = target - eye;
        if fwd.norm() == 0.0 {
            return Err(Error::DegenerateGeometry("camera eye equals its target".into()));
        }
        if fwd.cross(&up).norm() <= 1e-12 * fwd.norm() * up.norm() {
            return Err(Error::DegenerateGeometry("camera up is parallel to the view direction".into()));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.fov.to_radians()).tan()
    }

    /// Unit direction through the center of pixel `(x, y)`, row 0 at the top.
    pub fn ray(&self, x: u32, y: u32) -> Vec3 {
        let eye = Vec3::from(self.eye);
        let fwd = (Vec3::from(self.target) - eye).normalize();
        let right = fwd.cross(&Vec3::from(self.up)).normalize();
        let up = right.cross(&fwd);
        let px = x as f64 + 0.5 - 0.5 * self.width as f64;
        let py = 0.5 * self.height as f64 - (y as f64 + 0.5);
        (fwd * self.focal() + right * px + up * py).normalize()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shading {
    #[default]
    Color,
    /// Flat false colors per part index.
    Parts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Hit threshold in voxels.
    pub hit_eps: f64,
    /// Smallest march step in voxels.
    pub min_step: f64,
    /// March limit in bounding-box diagonals.
    pub t_max: f64,
    pub max_steps: usize,
    pub shading: Shading,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            hit_eps: 0.25,
            min_step: 0.1,
            t_max: 4.0,
            max_steps: 512,
            shading: Shading::Color,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGBA.
    pub rgba: Vec<u8>,
}

impl RenderedImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = 4 * (y as usize * self.width as usize + x as usize);
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }

    pub fn opaque_pixels(&self) -> usize {
        self.rgba.chunks_exact(4).filter(|p| p[3] != 0).count()
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let img = RgbaImage::from_raw(self.width, self.height, self.rgba.clone())
            .ok_or_else(|| Error::Image("pixel buffer does not match image size".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(out.into_inner())
    }
}

/// Normalized central-difference gradient of the distance at `p`.
pub fn normal_at(grid: &CsdfGrid, p: &Vec3) -> Result<Vec3> {
    let h = grid.voxel_size() as f64;
    let mut g = Vec3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = h;
        g[a] = grid.distance_clamped(&(p + e)) - grid.distance_clamped(&(p - e));
    }
    let n = g.norm();
    if !(n > 1e-12 * h) {
        return Err(Error::DegenerateNormal);
    }
    Ok(g / n)
}

/// Where a ray first comes within `hit_eps` of the surface.
pub fn trace_ray(grid: &CsdfGrid, origin: &Vec3, dir: &Vec3, opts: &RenderOptions) -> Option<Vec3> {
    let b = grid.bounds();
    let h = grid.voxel_size() as f64;
    let (t0, t1) = b.ray_interval(origin, dir)?;
    let t_end = t1.min(opts.t_max * b.diagonal());
    let mut t = t0.max(0.0);
    for _ in 0..opts.max_steps {
        if t > t_end {
            return None;
        }
        let p = origin + dir * t;
        let d = grid.distance_clamped(&p);
        if d.abs() < opts.hit_eps * h {
            return Some(p);
        }
        t += d.max(opts.min_step * h);
    }
    None
}

const LIGHT: [f64; 3] = [0.35, 0.6, 0.72];
const AMBIENT: f64 = 0.2;
const BASE: [f64; 3] = [0.7, 0.7, 0.7];

/// Deterministic, well-separated color for a part id.
pub fn part_color(part: u16) -> [u8; 3] {
    if part == UNASSIGNED {
        return [128, 128, 128];
    }
    let hue = (part as f64 * 0.618_033_988_749_895).fract();
    let sector = hue * 6.0;
    let f = sector.fract();
    let (v, lo) = (0.9, 0.25);
    let up = lo + (v - lo) * f;
    let down = v - (v - lo) * f;
    let rgb = match sector as u32 {
        0 => [v, up, lo],
        1 => [down, v, lo],
        2 => [lo, v, up],
        3 => [lo, down, v],
        4 => [up, lo, v],
        _ => [v, lo, down],
    };
    rgb.map(|c| (c * 255.0).round() as u8)
}

pub fn sphere_trace(grid: &CsdfGrid, cam: &Camera, opts: &RenderOptions) -> Result<RenderedImage> {
    cam.validate()?;
    let (w, h) = (cam.width, cam.height);
    let eye = Vec3::from(cam.eye);
    let light = Vec3::from(LIGHT).normalize();
    let rgba: Vec<u8> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let mut row = Vec::with_capacity(4 * w as usize);
            for x in 0..w {
                let dir = cam.ray(x, y);
                let px = match trace_ray(grid, &eye, &dir, opts) {
                    None => [0; 4],
                    Some(p) => shade(grid, &p, &dir, &light, opts.shading),
                };
                row.extend(px);
            }
            row
        })
        .collect();
    Ok(RenderedImage { width: w, height: h, rgba })
}

fn shade(grid: &CsdfGrid, p: &Vec3, dir: &Vec3, light: &Vec3, shading: Shading) -> [u8; 4] {
    let s = grid.sample_clamped(p);
    if shading == Shading::Parts {
        let [r, g, b] = part_color(s.part);
        return [r, g, b, 255];
    }
    let base = s.color.unwrap_or(BASE);
    let lambert = match normal_at(grid, p) {
        Ok(n) => {
            let n = if n.dot(dir) > 0.0 { -n } else { n };
            AMBIENT + (1.0 - AMBIENT) * n.dot(light).max(0.0)
        }
        Err(_) => 1.0,
    };
    let c = base.map(|v| (v * lambert * 255.0).round().clamp(0.0, 255.0) as u8);
    [c[0], c[1], c[2], 255]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn front_camera(size: u32) -> Camera {
        Camera::new(Vec3::new(0.5, 0.5, 2.5), Vec3::repeat(0.5), Vec3::y(), 30.0, size, size).unwrap()
    }

    #[test]
    fn empty_grid_is_transparent() {
        let g = CsdfGrid::new([16; 3], [0.0; 3], 1.0 / 16.0, 10.0).unwrap();
        let img = sphere_trace(&g, &front_camera(32), &RenderOptions::default()).unwrap();
        assert_eq!(img.rgba.len(), 4 * 32 * 32);
        assert_eq!(img.opaque_pixels(), 0);
    }

    #[test]
    fn sphere_center_and_corners() {
        let g = fixtures::sphere_grid(48);
        let img = sphere_trace(&g, &front_camera(64), &RenderOptions::default()).unwrap();
        assert_eq!(img.pixel(32, 32)[3], 255);
        for (x, y) in [(0, 0), (63, 0), (0, 63), (63, 63)] {
            assert_eq!(img.pixel(x, y)[3], 0);
        }
        let again = sphere_trace(&g, &front_camera(64), &RenderOptions::default()).unwrap();
        assert_eq!(img, again);
    }

    #[test]
    fn normals() {
        let g = fixtures::sphere_grid(64);
        let c = Vec3::repeat(0.5);
        for dir in [Vec3::x(), Vec3::new(1.0, 1.0, 0.3).normalize(), Vec3::new(-0.2, 0.4, -0.9).normalize()] {
            let n = normal_at(&g, &(c + dir * 0.4)).unwrap();
            assert!(n.dot(&dir).clamp(-1.0, 1.0).acos().to_degrees() < 2.0);
        }
        let plane = CsdfGrid::from_fn([8; 3], [0.0; 3], 0.125, |p| p.y - 0.4).unwrap();
        assert_eq!(normal_at(&plane, &Vec3::new(0.4, 0.4, 0.4)).unwrap(), Vec3::y());
        let flat = CsdfGrid::new([8; 3], [0.0; 3], 0.125, 1.0).unwrap();
        assert!(matches!(normal_at(&flat, &Vec3::repeat(0.4)), Err(Error::DegenerateNormal)));
    }

    #[test]
    fn camera_validation() {
        let e = Vec3::repeat(1.0);
        assert!(Camera::new(e, e, Vec3::y(), 30.0, 8, 8).is_err());
        assert!(Camera::new(e, Vec3::zeros(), Vec3::y(), 180.0, 8, 8).is_err());
        assert!(Camera::new(e, Vec3::zeros(), Vec3::y(), 30.0, 0, 8).is_err());
    }

    #[test]
    fn part_colors_are_distinct() {
        let colors: Vec<[u8; 3]> = (0..8).map(part_color).collect();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(colors[i], colors[j]);
            }
        }
    }
}
