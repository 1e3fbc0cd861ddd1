//! Ear clipping for planar cross-sections with holes.
//!
//! Loops index into a shared 2D point table. Counter-clockwise loops bound
//! material, clockwise loops are holes. Output triangles are counter-clockwise
//! and cover every loop edge exactly once, so a cap stitched onto a clipped
//! closed mesh keeps it closed even when the geometry is slightly degenerate.

type P2 = [f64; 2];

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn signed_area(pos: &[P2], ring: &[usize]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = pos[ring[i]];
            let b = pos[ring[(i + 1) % n]];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn contains(pos: &[P2], ring: &[usize], p: P2) -> bool {
    let mut inside = false;
    let n = ring.len();
    for i in 0..n {
        let a = pos[ring[i]];
        let b = pos[ring[(i + 1) % n]];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let d1 = cross(a, b, c);
    let d2 = cross(a, b, d);
    let d3 = cross(c, d, a);
    let d4 = cross(c, d, b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Triangulate all loops; returns triangles as indices into `pos`.
pub fn triangulate(pos: &[P2], loops: &[Vec<usize>]) -> Vec<[usize; 3]> {
    let areas: Vec<f64> = loops.iter().map(|l| signed_area(pos, l)).collect();
    let outers: Vec<usize> = (0..loops.len()).filter(|&i| areas[i] >= 0.0).collect();
    let mut holes_of: Vec<Vec<usize>> = vec![Vec::new(); loops.len()];
    let mut out = Vec::new();
    for h in (0..loops.len()).filter(|&i| areas[i] < 0.0) {
        let probe = pos[loops[h][0]];
        let owner = outers
            .iter()
            .copied()
            .filter(|&o| contains(pos, &loops[o], probe))
            .min_by(|&a, &b| areas[a].total_cmp(&areas[b]));
        match owner {
            Some(o) => holes_of[o].push(h),
            None => {
                // Orphan hole: clip it reversed and flip back so its edges stay matched.
                let rev: Vec<usize> = loops[h].iter().rev().copied().collect();
                out.extend(ear_clip(pos, rev).into_iter().map(|[a, b, c]| [a, c, b]));
            }
        }
    }
    for &o in &outers {
        let ring = bridge_holes(pos, loops[o].clone(), &holes_of[o], loops);
        out.extend(ear_clip(pos, ring));
    }
    out
}

fn bridge_holes(pos: &[P2], mut ring: Vec<usize>, holes: &[usize], loops: &[Vec<usize>]) -> Vec<usize> {
    let max_x = |l: &Vec<usize>| {
        (0..l.len())
            .max_by(|&a, &b| pos[l[a]][0].total_cmp(&pos[l[b]][0]).then(b.cmp(&a)))
            .unwrap()
    };
    let mut order: Vec<usize> = holes.to_vec();
    order.sort_by(|&a, &b| {
        let xa = pos[loops[a][max_x(&loops[a])]][0];
        let xb = pos[loops[b][max_x(&loops[b])]][0];
        xb.total_cmp(&xa).then(a.cmp(&b))
    });
    for (k, &h) in order.iter().enumerate() {
        let hole = &loops[h];
        let im = max_x(hole);
        let m = pos[hole[im]];
        let mut candidates: Vec<usize> = (0..ring.len()).collect();
        let d2 = |i: usize| {
            let p = pos[ring[i]];
            (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)
        };
        candidates.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)));
        let blocked = |p: P2, a: P2, b: P2| {
            let same = |x: P2, y: P2| x == y;
            !(same(a, p) || same(b, p) || same(a, m) || same(b, m)) && segments_cross(m, p, a, b)
        };
        let visible = |i: usize| {
            let p = pos[ring[i]];
            let n = ring.len();
            let ring_ok = (0..n).all(|j| !blocked(p, pos[ring[j]], pos[ring[(j + 1) % n]]));
            ring_ok
                && order[k..].iter().all(|&o| {
                    let l = &loops[o];
                    (0..l.len()).all(|j| !blocked(p, pos[l[j]], pos[l[(j + 1) % l.len()]]))
                })
        };
        let ip = candidates
            .iter()
            .copied()
            .find(|&i| visible(i))
            .unwrap_or(candidates[0]);
        let mut spliced = Vec::with_capacity(ring.len() + hole.len() + 2);
        spliced.extend_from_slice(&ring[..=ip]);
        for j in 0..=hole.len() {
            spliced.push(hole[(im + j) % hole.len()]);
        }
        spliced.extend_from_slice(&ring[ip..]);
        ring = spliced;
    }
    ring
}

fn ear_clip(pos: &[P2], mut ring: Vec<usize>) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(ring.len().saturating_sub(2));
    let scale = ring
        .iter()
        .map(|&i| pos[i][0].abs().max(pos[i][1].abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    let eps = 1e-14 * scale * scale;
    let mut cursor = 0;
    while ring.len() > 3 {
        let n = ring.len();
        let is_ear = |i: usize| {
            let (ia, ib, ic) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let (a, b, c) = (pos[ia], pos[ib], pos[ic]);
            if cross(a, b, c) <= eps {
                return false;
            }
            ring.iter().all(|&j| {
                let p = pos[j];
                if p == a || p == b || p == c {
                    return true;
                }
                !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0)
            })
        };
        let pick = (0..n)
            .map(|k| (cursor + k) % n)
            .find(|&i| is_ear(i))
            .unwrap_or_else(|| {
                // No clean ear: clip the most convex corner to guarantee progress.
                (0..n)
                    .max_by(|&i, &j| {
                        let c = |k: usize| cross(pos[ring[(k + n - 1) % n]], pos[ring[k]], pos[ring[(k + 1) % n]]);
                        c(i).total_cmp(&c(j)).then(j.cmp(&i))
                    })
                    .unwrap()
            });
        out.push([ring[(pick + n - 1) % n], ring[pick], ring[(pick + 1) % n]]);
        ring.remove(pick);
        cursor = if pick == 0 { 0 } else { pick - 1 };
    }
    if ring.len() == 3 {
        out.push([ring[0], ring[1], ring[2]]);
    }
    out.retain(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
    out
}
