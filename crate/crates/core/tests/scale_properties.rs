use partscale::fixtures::box_sdf;
use partscale::grid::TruncationBand;
use partscale::scale::{index_boundary_fn, repeat_count, stretch, tile, ScalingZone, SeamPolicy};
use partscale::{Axis, CsdfGrid, Vec3, UNASSIGNED};
use proptest::prelude::*;

const N: usize = 24;

fn h() -> f64 {
    1.0 / N as f64
}

fn box_grid(lo: Vec3, hi: Vec3) -> CsdfGrid {
    let h = h() as f32;
    let mut g = CsdfGrid::from_fn([N; 3], [0.5 * h; 3], h, |p| box_sdf(&p, &lo, &hi)).unwrap();
    let band = TruncationBand::default_for(&g);
    for i in 0..g.len() {
        if band.contains(g.distance()[i]) {
            g.part_mut()[i] = 0;
            g.set_color(i, Some([200, 100, 50]));
        }
    }
    g
}

/// Sign changes along the x line through voxel row `(y, z)`, in world units.
fn crossings(g: &CsdfGrid, y: usize, z: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for x in 0..g.dims()[0] - 1 {
        let a = g.distance()[g.index(x, y, z)] as f64;
        let b = g.distance()[g.index(x + 1, y, z)] as f64;
        if (a < 0.0) != (b < 0.0) {
            let t = a / (a - b);
            out.push(g.axis_coord(Axis::X, x) + t * g.voxel_size() as f64);
        }
    }
    out
}

fn arb_box() -> impl Strategy<Value = (Vec3, Vec3)> {
    (0.15f64..0.35, 0.55f64..0.8).prop_map(|(a, b)| (Vec3::new(a, 0.3, 0.3), Vec3::new(b, 0.7, 0.7)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unmoved_end_is_bitwise_identity((lo, hi) in arb_box(), s in 0.05f64..0.5, l in 0.05f64..0.45) {
        let g = box_grid(lo, hi);
        let z = ScalingZone::new(Axis::X, s, s + l, s + l).unwrap();
        prop_assert_eq!(stretch(&g, &z).unwrap(), g.clone());
        prop_assert_eq!(tile(&g, &z, None, SeamPolicy { blend_width: 0 }).unwrap(), g);
    }

    #[test]
    fn crossings_move_monotonically((lo, hi) in arb_box(), s in 0.05f64..0.45, l in 0.1f64..0.4, f in 0.5f64..2.0) {
        let g = box_grid(lo, hi);
        let end = (s + l).min(0.95);
        let dest = s + f * (end - s);
        let z = ScalingZone::new(Axis::X, s, end, dest).unwrap();
        let out = stretch(&g, &z).unwrap();
        let shift = ((dest - end) / h()).round() * h();
        let moved_end = end + shift;
        let map = |x: f64| {
            if x <= s { x } else if x >= end { x + shift } else { s + (x - s) * (moved_end - s) / (end - s) }
        };
        let before = crossings(&g, N / 2, N / 2);
        let after = crossings(&out, N / 2, N / 2);
        prop_assert_eq!(before.len(), after.len());
        for w in after.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((map(*a) - b).abs() <= h(), "{} -> {} vs {}", a, map(*a), b);
        }
    }

    #[test]
    fn stretch_and_back_restores_crossings((lo, hi) in arb_box(), s in 0.05f64..0.3, l in 0.15f64..0.3) {
        let g = box_grid(lo, hi);
        let end = s + l;
        let out = stretch(&g, &ScalingZone::new(Axis::X, s, end, s + 2.0 * l).unwrap()).unwrap();
        let moved = s + 2.0 * l;
        let back = stretch(&out, &ScalingZone::new(Axis::X, s, moved, end).unwrap()).unwrap();
        prop_assert_eq!(back.dims(), g.dims());
        for (y, z) in [(N / 2, N / 2), (N / 3, N / 2), (N / 2, 2 * N / 3)] {
            let a = crossings(&g, y, z);
            let b = crossings(&back, y, z);
            prop_assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= h());
            }
        }
    }

    #[test]
    fn outer_regions_are_copied_where_the_guard_holds((lo, hi) in arb_box(), s in 0.3f64..0.4, l in 0.1f64..0.2, k in 1usize..6) {
        let g = box_grid(lo, hi);
        let end = s + l;
        let dest = end + k as f64 * h();
        let out = stretch(&g, &ScalingZone::new(Axis::X, s, end, dest).unwrap()).unwrap();
        prop_assert_eq!(out.dims()[0], N + k);
        for i in 0..g.len() {
            let [x, y, z] = g.coords(i);
            let c = g.axis_coord(Axis::X, x);
            let d = (g.distance()[i] as f64).abs();
            if c < s && d <= s - c {
                let j = out.index(x, y, z);
                prop_assert_eq!(out.distance()[j].to_bits(), g.distance()[i].to_bits());
                prop_assert_eq!(out.part()[j], g.part()[i]);
                prop_assert_eq!(out.color_at(j), g.color_at(i));
            }
            if c > end && d <= c - end {
                let j = out.index(x + k, y, z);
                prop_assert_eq!(out.distance()[j].to_bits(), g.distance()[i].to_bits());
                prop_assert_eq!(out.part()[j], g.part()[i]);
            }
        }
    }

    #[test]
    fn boundary_scan_matches_exhaustive_search(
        labels in prop::collection::vec(prop_oneof![Just(UNASSIGNED), 0u16..3], 2..40),
        dist in prop::collection::vec(-3.0f64..3.0, 40),
    ) {
        let n = labels.len();
        let part = |x: f64| labels[(x.round() as usize).min(n - 1)];
        let sdf = |x: f64| {
            let i = (x.floor() as usize).min(n - 1);
            let j = (i + 1).min(n - 1);
            let t = x - i as f64;
            dist[i] * (1.0 - t) + dist[j] * t
        };
        let found = index_boundary_fn((0.0, (n - 1) as f64), 0.5, sdf, part);
        let mut best: Option<(f64, f64)> = None;
        let mut x = 0.0;
        while x + 0.5 <= (n - 1) as f64 {
            let (a, b) = (part(x), part(x + 0.5));
            if a != UNASSIGNED && b != UNASSIGNED && a != b {
                let v = sdf(x).abs();
                if best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, x));
                }
            }
            x += 0.5;
        }
        prop_assert_eq!(found, best.map(|b| b.1));
    }

    #[test]
    fn repeat_count_rounds_half_away(l in 1u32..40, t in 1u32..400) {
        let ratio = t as f64 / l as f64;
        let expected = if 2 * t % l == 0 && (2 * t / l) % 2 == 1 {
            (2 * t / l).div_ceil(2)
        } else {
            ratio.round() as u32
        };
        prop_assert_eq!(repeat_count(l as f64, t as f64), expected.max(1));
    }
}
