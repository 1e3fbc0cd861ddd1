//! OBJ (with `v x y z r g b` vertex colors) and binary STL.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

pub fn read_obj(source: impl BufRead) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut triangles = Vec::new();
    let mut offset = 0u64;
    for line in source.lines() {
        let line = line?;
        let line_len = line.len() as u64 + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let nums: Vec<f64> = it
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format(offset, format!("vertex: {e}")))?;
                match nums.len() {
                    3 | 4 => vertices.push(Vec3::new(nums[0], nums[1], nums[2])),
                    6 | 7 => {
                        vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
                        colors.push([nums[3], nums[4], nums[5]]);
                    }
                    n => return Err(Error::format(offset, format!("vertex with {n} values"))),
                }
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let v: i64 = first
                            .parse()
                            .map_err(|e| Error::format(offset, format!("face index: {e}")))?;
                        let resolved = if v < 0 { vertices.len() as i64 + v } else { v - 1 };
                        if resolved < 0 {
                            return Err(Error::format(offset, format!("face index {v} out of range")));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::format(offset, "face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
        offset += line_len;
    }
    let colored = !colors.is_empty();
    if colored && colors.len() != vertices.len() {
        return Err(Error::format(0, "either all or no vertices must carry colors"));
    }
    let mesh = TriMesh::new(vertices, triangles)?;
    if colored {
        mesh.with_colors(colors)
    } else {
        Ok(mesh)
    }
}

pub fn write_obj(mesh: &TriMesh, mut sink: impl Write) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => {
                let c = c[i];
                writeln!(out, "v {} {} {} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2]).unwrap()
            }
            None => writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap(),
        }
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

/// Binary STL. Vertices are not shared; run [`TriMesh::cleaned`] to weld them.
pub fn read_stl(mut source: impl Read) -> Result<TriMesh> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 84 {
        return Err(Error::format(bytes.len() as u64, "truncated STL header"));
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let need = 84 + n * 50;
    if bytes.len() < need {
        return Err(Error::format(bytes.len() as u64, format!("STL declares {n} triangles")));
    }
    let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    let mut vertices = Vec::with_capacity(n * 3);
    let mut triangles = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + t * 50 + 12;
        for k in 0..3 {
            let o = base + k * 12;
            vertices.push(Vec3::new(f(o), f(o + 4), f(o + 8)));
        }
        let i = (t * 3) as u32;
        triangles.push([i, i + 1, i + 2]);
    }
    TriMesh::new(vertices, triangles)
}

pub fn write_stl(mesh: &TriMesh, mut sink: impl Write) -> Result<()> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for t in 0..mesh.triangles.len() {
        let n = mesh.face_normal(t);
        for v in std::iter::once(n).chain(mesh.corners(t)) {
            for a in 0..3 {
                out.extend_from_slice(&(v[a] as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    sink.write_all(&out)?;
    Ok(())
}

/// Load a mesh, choosing the format from the file extension.
pub fn load_mesh(path: &std::path::Path) -> Result<TriMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let file = std::fs::File::open(path)?;
    match ext.as_deref() {
        Some("stl") => read_stl(std::io::BufReader::new(file)),
        _ => read_obj(std::io::BufReader::new(file)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn obj_round_trip_keeps_colors() {
        let m = fixtures::box_mesh(Vec3::zeros(), Vec3::repeat(1.0)).with_uniform_color([0.2, 0.4, 1.0]);
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_polygons_are_fanned() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let m = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn stl_round_trip_welds_back() {
        let m = fixtures::box_mesh(Vec3::zeros(), Vec3::new(1.0, 2.0, 0.5));
        let mut buf = Vec::new();
        write_stl(&m, &mut buf).unwrap();
        let back = read_stl(buf.as_slice()).unwrap().cleaned(1e-7);
        assert!(back.is_closed());
        assert!((back.volume() - m.volume()).abs() < 1e-6);
        assert!(matches!(read_stl(&buf[..100]), Err(Error::Format { .. })));
    }
}
