//! Recursive plane cutting with a beam-limited lookahead search.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::concavity::concavity_of;
use super::cut::cut;
use super::merge::{adjacency, merge_pass_with};
use super::remap::remap_indices;
use super::{CutPlane, Part, PartSet, Piece, DEFAULT_SAMPLES, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::geom::{triangle_area, Vec3};
use crate::grid::CsdfGrid;
use crate::mesh::{marching_cubes, TriMesh};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeOptions {
    pub threshold: f64,
    pub max_depth: usize,
    /// Candidates kept per node for lookahead.
    pub beam: usize,
    /// Levels of cuts scored before committing to one.
    pub lookahead: usize,
    pub samples: usize,
    pub cut_area_weight: f64,
    /// Evenly spaced axis-aligned planes per axis.
    pub axis_offsets: usize,
    /// Cut-face contact distance for adjacency; defaults to 1.5 voxels of a
    /// 128-voxel grid spanning the mesh.
    pub contact_tolerance: Option<f64>,
    /// Extracted meshes above this size are rebuilt from a coarser grid.
    pub max_triangles: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            threshold: DEFAULT_THRESHOLD,
            max_depth: 8,
            beam: 3,
            lookahead: 2,
            samples: DEFAULT_SAMPLES,
            cut_area_weight: 0.1,
            axis_offsets: 17,
            contact_tolerance: None,
            max_triangles: 20_000,
        }
    }
}

struct Candidate {
    index: usize,
    children: Vec<(Piece, f64)>,
    penalty: f64,
    score: f64,
}

/// Split a closed mesh into near-convex parts. Parts are not merged.
pub fn decompose(mesh: &TriMesh, opts: &DecomposeOptions) -> Result<PartSet> {
    let mesh = closed_input(mesh)?;
    let ext = mesh.bounds().extent();
    let tol = opts
        .contact_tolerance
        .unwrap_or(1.5 * ext.max() / 128.0);
    let mut parts = Vec::new();
    for piece in Piece::surface(mesh).components() {
        let c = concavity_of(&piece, opts.samples)?;
        solve(piece, c, 0, opts, &mut parts);
    }
    let adjacency = adjacency(&parts, tol);
    Ok(PartSet {
        parts,
        adjacency,
        contact_tolerance: tol,
    })
}

/// Extract, decompose, merge and write part ids into the band of `grid`.
pub fn segment_grid(grid: &CsdfGrid, opts: &DecomposeOptions) -> Result<(CsdfGrid, PartSet)> {
    let mut source = grid.clone();
    let mut mesh = marching_cubes(&source, 0.0);
    if mesh.is_empty() {
        return Err(Error::EmptyGeometry("grid has no zero crossing"));
    }
    while mesh.triangles.len() > opts.max_triangles {
        let f = (mesh.triangles.len() as f64 / opts.max_triangles as f64).sqrt() * 1.05;
        let dims = source.dims().map(|n| ((n as f64 / f).floor() as usize).max(8));
        if dims == source.dims() {
            break;
        }
        source = grid.resample(dims)?;
        mesh = marching_cubes(&source, 0.0);
    }
    let mut local = opts.clone();
    local.contact_tolerance = Some(
        opts.contact_tolerance
            .unwrap_or(1.5 * source.voxel_size() as f64),
    );
    let parts = decompose(&mesh, &local)?;
    let merged = merge_pass_with(parts, opts.threshold, opts.samples);
    let out = remap_indices(grid, &merged)?;
    Ok((out, merged))
}

fn closed_input(mesh: &TriMesh) -> Result<TriMesh> {
    if mesh.is_empty() {
        return Err(Error::EmptyGeometry("mesh has no triangles"));
    }
    if mesh.is_closed() {
        return Ok(mesh.clone());
    }
    let cleaned = mesh.cleaned(1e-7);
    if cleaned.is_closed() {
        return Ok(cleaned);
    }
    let mut count = std::collections::HashMap::new();
    for t in &cleaned.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
        }
    }
    let bad = count.values().filter(|&&c| c != 2).count();
    Err(Error::NotWatertight {
        odd_fraction: bad as f64 / count.len().max(1) as f64,
    })
}

fn solve(piece: Piece, c: f64, depth: usize, opts: &DecomposeOptions, out: &mut Vec<Part>) {
    if c <= opts.threshold {
        out.push(Part {
            piece,
            concavity: c,
            depth_limited: false,
        });
        return;
    }
    let chosen = if depth < opts.max_depth {
        best_cut(&piece, opts)
    } else {
        None
    };
    match chosen {
        Some(cand) => {
            for (child, cc) in cand.children {
                solve(child, cc, depth + 1, opts, out);
            }
        }
        None => out.push(Part {
            piece,
            concavity: c,
            depth_limited: true,
        }),
    }
}

fn best_cut(piece: &Piece, opts: &DecomposeOptions) -> Option<Candidate> {
    let mut ranked = ranked_candidates(piece, opts);
    ranked.truncate(opts.beam.max(1));
    if opts.lookahead <= 1 {
        return ranked.into_iter().next();
    }
    let refined: Vec<f64> = ranked
        .par_iter()
        .map(|cand| {
            cand.penalty
                + cand
                    .children
                    .iter()
                    .map(|(p, c)| lookahead_value(p, *c, opts.lookahead - 1, opts))
                    .sum::<f64>()
        })
        .collect();
    let best = (0..ranked.len()).min_by(|&a, &b| refined[a].total_cmp(&refined[b]).then(a.cmp(&b)))?;
    ranked.into_iter().nth(best)
}

/// Best achievable score of `piece` within `level` further cuts.
fn lookahead_value(piece: &Piece, c: f64, level: usize, opts: &DecomposeOptions) -> f64 {
    if level == 0 || c <= opts.threshold {
        return c;
    }
    let mut ranked = ranked_candidates(piece, opts);
    ranked.truncate(opts.beam.max(1));
    ranked
        .iter()
        .map(|cand| {
            cand.penalty
                + cand
                    .children
                    .iter()
                    .map(|(p, cc)| lookahead_value(p, *cc, level - 1, opts))
                    .sum::<f64>()
        })
        .fold(c, f64::min)
}

/// Valid single cuts sorted by immediate score, ties by candidate order.
fn ranked_candidates(piece: &Piece, opts: &DecomposeOptions) -> Vec<Candidate> {
    let planes = candidate_planes(&piece.mesh, opts.axis_offsets);
    let diag = piece.mesh.bounds().diagonal();
    let mut evals: Vec<Candidate> = planes
        .par_iter()
        .enumerate()
        .filter_map(|(index, plane)| {
            let outcome = cut(piece, plane)?;
            let mut children = Vec::new();
            for half in [outcome.below, outcome.above] {
                for p in half.components() {
                    let c = concavity_of(&p, opts.samples).ok()?;
                    children.push((p, c));
                }
            }
            let penalty = opts.cut_area_weight * outcome.cap_area / (diag * diag);
            let score = penalty + children.iter().map(|(_, c)| c).sum::<f64>();
            Some(Candidate {
                index,
                children,
                penalty,
                score,
            })
        })
        .collect();
    evals.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.index.cmp(&b.index)));
    evals
}

/// Axis-aligned sweeps followed by the three principal planes through the centroid.
pub fn candidate_planes(mesh: &TriMesh, per_axis: usize) -> Vec<CutPlane> {
    let b = mesh.bounds();
    let ext = b.extent();
    let mut planes = Vec::with_capacity(3 * per_axis + 3);
    for a in 0..3 {
        if ext[a] <= 0.0 {
            continue;
        }
        let mut n = Vec3::zeros();
        n[a] = 1.0;
        for i in 1..=per_axis {
            let offset = b.min[a] + ext[a] * i as f64 / (per_axis + 1) as f64;
            planes.push(CutPlane { normal: n, offset });
        }
    }

    let mut area = 0.0;
    let mut centroid = Vec3::zeros();
    for t in 0..mesh.triangles.len() {
        let [p, q, r] = mesh.corners(t);
        let w = triangle_area(&p, &q, &r);
        area += w;
        centroid += (p + q + r) * (w / 3.0);
    }
    if area > 0.0 {
        centroid /= area;
        let mut cov = Matrix3::zeros();
        for t in 0..mesh.triangles.len() {
            let [p, q, r] = mesh.corners(t);
            let w = triangle_area(&p, &q, &r);
            for v in [p, q, r] {
                let d = v - centroid;
                cov += d * d.transpose() * (w / 3.0);
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        for k in order {
            let mut n: Vec3 = eig.eigenvectors.column(k).into_owned();
            let lead = (0..3).max_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
            if n[lead] < 0.0 {
                n = -n;
            }
            if let Ok(p) = CutPlane::through(&centroid, n) {
                planes.push(p);
            }
        }
    }
    planes
}
