use convexseg::synth::NamedShape;
use convexseg::*;
use proptest::prelude::*;

fn field(w: usize, h: usize, v: Vec<f64>) -> ScalarField {
    ScalarField::new(w, h, v).unwrap()
}

fn random_field(w: usize, h: usize) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-10.0..10.0f64, w * h).prop_map(move |v| field(w, h, v))
}

fn disk(n: usize, cx: f64, cy: f64, r: f64) -> RegionMask {
    RegionMask::from_fn(n, n, |i, j| (j as f64 - cx).hypot(i as f64 - cy) <= r)
}

fn rot90(m: &RegionMask) -> RegionMask {
    let (w, h) = m.dims();
    RegionMask::from_fn(h, w, |r, c| m.get(h - 1 - c, r))
}

fn shift(m: &RegionMask, dr: isize, dc: isize) -> RegionMask {
    let (w, h) = m.dims();
    RegionMask::from_fn(w, h, |r, c| {
        let (sr, sc) = (r as isize - dr, c as isize - dc);
        sr >= 0 && sc >= 0 && (sr as usize) < h && (sc as usize) < w && m.get(sr as usize, sc as usize)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn laplacian_is_linear(f in random_field(9, 7), g in random_field(9, 7), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let lhs = laplacian(&f.linear_combination(a, &g, b).unwrap());
        let rhs = laplacian(&f).linear_combination(a, &laplacian(&g), b).unwrap();
        prop_assert!(lhs.max_abs_difference(&rhs) <= 1e-12 * (1.0 + f.max_value().abs() + g.max_value().abs()) * 10.0);
    }

    #[test]
    fn laplacian_sums_to_zero(f in random_field(11, 8)) {
        let sum: f64 = laplacian(&f).values().iter().sum();
        prop_assert!(sum.abs() <= 1e-9 * f.len() as f64, "{}", sum);
    }

    #[test]
    fn convexity_invariant_under_shift_and_rotation(
        cx in 18.0..30.0f64, cy in 18.0..30.0f64, r in 4.0..9.0f64,
        second in prop::option::of((-10.0..10.0f64, -10.0..10.0f64, 3.0..8.0f64)),
        dr in -6isize..6, dc in -6isize..6,
    ) {
        let n = 48;
        let mut m = disk(n, cx, cy, r);
        if let Some((ox, oy, r2)) = second {
            let other = disk(n, cx + 1.6 * ox, cy + 1.6 * oy, r2);
            m = RegionMask::from_fn(n, n, |i, j| m.get(i, j) || other.get(i, j));
        }
        let base = is_convex_region(&m, 1.0).unwrap();
        let moved = shift(&m, dr, dc);
        prop_assume!(moved.count() == m.count());
        prop_assert_eq!(is_convex_region(&moved, 1.0).unwrap(), base);
        prop_assert_eq!(is_convex_region(&rot90(&m), 1.0).unwrap(), base);
    }
}

#[test]
fn laplacian_examples() {
    let c = ScalarField::filled(6, 5, 7.0).unwrap();
    assert!(laplacian(&c).values().iter().all(|&v| v == 0.0));

    let q = ScalarField::from_fn(10, 10, |_, j| (j * j) as f64).unwrap();
    let lq = laplacian(&q);
    for ix in q.inner_nodes(1) {
        assert_eq!(lq[ix], 2.0);
    }

    let n = 100;
    let center = 49.5;
    let sdf = ScalarField::from_fn(n, n, |i, j| (j as f64 - center).hypot(i as f64 - center) - 20.0).unwrap();
    let l = laplacian(&sdf);
    for ix in sdf.inner_nodes(1) {
        let d = (ix.col as f64 - center).hypot(ix.row as f64 - center);
        if d > 2.0 && (d - 20.0).abs() > 2.0 {
            assert!(l[ix] >= -0.05, "{ix:?} {}", l[ix]);
        }
    }
}

#[test]
fn gradient_magnitude_examples() {
    let ramp = ScalarField::from_fn(8, 8, |_, j| j as f64).unwrap();
    let g = gradient_magnitude(&ramp);
    for ix in ramp.inner_nodes(1) {
        assert!((g[ix] - 1.0).abs() < 1e-12);
    }
    let flat = gradient_magnitude(&ScalarField::filled(5, 5, 2.0).unwrap());
    assert!(flat.values().iter().all(|&v| v == 0.0));

    let n = 80;
    let sdf = ScalarField::from_fn(n, n, |i, j| (j as f64 - 40.3).hypot(i as f64 - 39.6) - 25.0).unwrap();
    let gm = gradient_magnitude(&sdf);
    let mut interior: Vec<f64> = sdf.inner_nodes(1).map(|ix| gm[ix]).collect();
    interior.sort_by(f64::total_cmp);
    let median = interior[interior.len() / 2];
    assert!((0.98..=1.02).contains(&median), "{median}");
}

#[test]
fn convexity_examples() {
    let square = RegionMask::from_fn(100, 100, |i, j| (35..65).contains(&i) && (35..65).contains(&j));
    assert!(is_convex_region(&square, 1.0).unwrap());
    assert!(is_convex_region(&disk(100, 50.0, 50.0, 25.0), 1.0).unwrap());
    assert!(is_convex_region(&RegionMask::empty(4, 4), 1.0).is_err());
    assert!(is_convex_region(&square, -1.0).is_err());
}

/// Pairs of inside pixels whose midpoint is far from every inside pixel.
fn has_outside_midpoint(m: &RegionMask) -> bool {
    let inside: Vec<(f64, f64)> = m.iter_inside().map(|ix| (ix.row as f64, ix.col as f64)).collect();
    let far = |p: (f64, f64)| inside.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) > 2.0);
    let step = (inside.len() / 150).max(1);
    let sample: Vec<_> = inside.iter().step_by(step).collect();
    sample
        .iter()
        .any(|a| sample.iter().any(|b| far(((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0))))
}

#[test]
fn synthetic_truths_match_their_convexity() {
    for kind in [NamedShape::Disk, NamedShape::Square, NamedShape::Octagon] {
        let (_, m) = synth(&kind.spec(128, 128, 0), 128, 128, 0).unwrap();
        assert!(is_convex_region(&m, 1.0).unwrap(), "{kind:?}");
        assert!(!has_outside_midpoint(&m), "{kind:?}");
    }
    for kind in [
        NamedShape::Star,
        NamedShape::Pacman,
        NamedShape::LShape,
        NamedShape::Crescent,
    ] {
        let (_, m) = synth(&kind.spec(128, 128, 0), 128, 128, 0).unwrap();
        assert!(!is_convex_region(&m, 1.0).unwrap(), "{kind:?}");
        assert!(has_outside_midpoint(&m), "{kind:?}");
    }
}

#[test]
fn field_text_round_trip() {
    let f = ScalarField::from_fn(5, 3, |i, j| (i as f64 * 0.1 - j as f64 / 3.0).exp()).unwrap();
    let text = f.to_text();
    assert!(text.starts_with("3 5\n"));
    assert_eq!(ScalarField::from_text(&text).unwrap(), f);
}
