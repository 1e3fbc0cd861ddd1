//! 8-bit slice atlas: z-slices tiled row-major into one RGBA image, color in
//! RGB and the truncated distance in alpha.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use image::{ImageFormat, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CsdfGrid, TruncationBand};

/// Sidecar metadata needed to decode an atlas image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasMeta {
    pub dims: [usize; 3],
    pub origin: [f32; 3],
    pub voxel_size: f32,
    pub tau: f64,
    /// `[rows, cols]` of the tile layout.
    pub tiles: [usize; 2],
    /// Color validity bits, one per voxel, LSB first, base64 encoded.
    pub validity: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atlas {
    pub image: RgbaImage,
    pub meta: AtlasMeta,
}

impl Atlas {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.image
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png(png: &[u8], meta: AtlasMeta) -> Result<Atlas> {
        let image = image::load_from_memory_with_format(png, ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?
            .into_rgba8();
        Ok(Atlas { image, meta })
    }

    pub fn decode(&self) -> Result<CsdfGrid> {
        decode_atlas(&self.image, &self.meta)
    }
}

/// Smallest near-square layout holding `slices` tiles.
pub fn tile_layout(slices: usize) -> [usize; 2] {
    let cols = (slices as f64).sqrt().ceil().max(1.0) as usize;
    let rows = slices.div_ceil(cols);
    [rows, cols]
}

/// Alpha byte for a distance: `clamp(d / 2τ + 0.5, 0, 1)` rounded half up.
pub fn encode_distance(d: f64, tau: f64) -> u8 {
    let v = (d / (2.0 * tau) + 0.5).clamp(0.0, 1.0);
    (v * 255.0 + 0.5).floor() as u8
}

pub fn decode_distance(a: u8, tau: f64) -> f64 {
    (a as f64 / 255.0 - 0.5) * 2.0 * tau
}

pub fn encode_atlas(grid: &CsdfGrid, band: TruncationBand) -> Atlas {
    let [nx, ny, nz] = grid.dims();
    let tiles = tile_layout(nz);
    let tau = band.tau();
    let mut image = RgbaImage::new((tiles[1] * nx) as u32, (tiles[0] * ny) as u32);
    let mut bits = vec![0u8; grid.len().div_ceil(8)];
    for z in 0..nz {
        let (tr, tc) = (z / tiles[1], z % tiles[1]);
        for y in 0..ny {
            for x in 0..nx {
                let i = grid.index(x, y, z);
                let rgb = grid.color_at(i).unwrap_or([0; 3]);
                if grid.valid()[i] {
                    bits[i / 8] |= 1 << (i % 8);
                }
                let a = encode_distance(grid.distance()[i] as f64, tau);
                image.put_pixel(
                    (tc * nx + x) as u32,
                    (tr * ny + y) as u32,
                    image::Rgba([rgb[0], rgb[1], rgb[2], a]),
                );
            }
        }
    }
    Atlas {
        image,
        meta: AtlasMeta {
            dims: grid.dims(),
            origin: grid.origin(),
            voxel_size: grid.voxel_size(),
            tau,
            tiles,
            validity: B64.encode(&bits),
        },
    }
}

pub fn decode_atlas(image: &RgbaImage, meta: &AtlasMeta) -> Result<CsdfGrid> {
    let [nx, ny, nz] = meta.dims;
    let [rows, cols] = meta.tiles;
    if rows * cols < nz {
        return Err(Error::format(0, format!("{rows}x{cols} tiles cannot hold {nz} slices")));
    }
    if image.width() as usize != cols * nx || image.height() as usize != rows * ny {
        return Err(Error::format(
            0,
            format!(
                "raster is {}x{}, metadata implies {}x{}",
                image.width(),
                image.height(),
                cols * nx,
                rows * ny
            ),
        ));
    }
    if !(meta.tau > 0.0) {
        return Err(Error::format(0, "tau must be positive"));
    }
    let mut grid = CsdfGrid::new(meta.dims, meta.origin, meta.voxel_size, 0.0)?;
    let bits = B64
        .decode(&meta.validity)
        .map_err(|e| Error::format(0, format!("validity mask: {e}")))?;
    if bits.len() != grid.len().div_ceil(8) {
        return Err(Error::format(
            0,
            format!("validity mask holds {} bytes, expected {}", bits.len(), grid.len().div_ceil(8)),
        ));
    }
    for z in 0..nz {
        let (tr, tc) = (z / cols, z % cols);
        for y in 0..ny {
            for x in 0..nx {
                let i = grid.index(x, y, z);
                let px = image.get_pixel((tc * nx + x) as u32, (tr * ny + y) as u32).0;
                grid.distance_mut()[i] = decode_distance(px[3], meta.tau) as f32;
                let valid = bits[i / 8] >> (i % 8) & 1 == 1;
                grid.set_color(i, valid.then_some([px[0], px[1], px[2]]));
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    #[test]
    fn alpha_mapping_fixed_points() {
        let tau = 0.1;
        assert_eq!(encode_distance(0.0, tau), 128);
        assert_eq!(encode_distance(tau, tau), 255);
        assert_eq!(encode_distance(5.0, tau), 255);
        assert_eq!(encode_distance(-tau, tau), 0);
        assert_eq!(encode_distance(-3.0, tau), 0);
    }

    #[test]
    fn layout_covers_slices() {
        for n in 1..300 {
            let [r, c] = tile_layout(n);
            assert!(r * c >= n && (r - 1) * c < n);
        }
        assert_eq!(tile_layout(64), [8, 8]);
    }

    #[test]
    fn sphere_round_trip_within_quantization() {
        let n = 24;
        let h = 1.0 / n as f32;
        let c = Vec3::repeat(0.5);
        let mut g = CsdfGrid::from_fn([n; 3], [0.5 * h; 3], h, |p| (p - c).norm() - 0.35).unwrap();
        let band = TruncationBand::default_for(&g);
        for i in 0..g.len() {
            if band.contains(g.distance()[i]) {
                let q = g.center(g.coords(i));
                g.set_color(i, Some([(q.x * 255.0) as u8, 40, (q.z * 200.0) as u8]));
            }
        }
        let atlas = encode_atlas(&g, band);
        let png = atlas.to_png().unwrap();
        let back = Atlas::from_png(&png, atlas.meta.clone()).unwrap().decode().unwrap();
        let tau = band.tau();
        for i in 0..g.len() {
            let d = g.distance()[i] as f64;
            if d.abs() < tau {
                assert!((back.distance()[i] as f64 - d).abs() <= 2.0 * tau / 255.0);
            }
            assert_eq!(back.color_at(i), g.color_at(i));
        }
    }

    #[test]
    fn mismatched_metadata_is_rejected() {
        let g = CsdfGrid::new([4, 4, 4], [0.0; 3], 1.0, 0.0).unwrap();
        let atlas = encode_atlas(&g, TruncationBand::default_for(&g));
        let mut meta = atlas.meta.clone();
        meta.dims = [5, 4, 4];
        assert!(matches!(decode_atlas(&atlas.image, &meta), Err(Error::Format { .. })));
        let mut meta = atlas.meta.clone();
        meta.validity = String::new();
        assert!(matches!(decode_atlas(&atlas.image, &meta), Err(Error::Format { .. })));
    }
}
