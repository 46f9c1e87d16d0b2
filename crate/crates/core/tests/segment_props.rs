use convexseg::synth::NamedShape;
use convexseg::*;
use std::time::Instant;

fn square_scene(n: usize, side: f64, sigma: f64) -> (ScalarField, RegionMask) {
    let mut spec = ShapeSpec::centered(ShapeKind::Square { side }, n, n);
    spec.sigma = sigma;
    let (img, truth) = synth(&spec, n, n, 7).unwrap();
    (img.intensity, truth)
}

fn centre(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

fn sharp_means(image: &ScalarField, region: &RegionMask) -> (f64, f64) {
    let (mut s_in, mut n_in, mut s_out, mut n_out) = (0.0, 0.0, 0.0, 0.0);
    for (&v, &inside) in image.values().iter().zip(region.as_slice()) {
        if inside {
            s_in += v;
            n_in += 1.0;
        } else {
            s_out += v;
            n_out += 1.0;
        }
    }
    (s_out / n_out, s_in / n_in)
}

#[test]
fn zero_length_weight_reaches_the_two_means_fixed_point() {
    let n = 64;
    let (image, _) = square_scene(n, 30.0, 0.1);
    let c = centre(n);
    let mut cfg = SegmentationConfig::chan_vese(InitSpec::Circle { cx: c, cy: c, r: 12.0 });
    cfg.energy.mu = 0.0;
    cfg.energy.heaviside_eps = 1e-3;
    cfg.outer_max = 1000;
    let res = segment(&image, &cfg).unwrap();
    let (c1, c2) = res.means.unwrap();
    let (t1, t2) = sharp_means(&image, &res.region);
    eprintln!(
        "iters {} converged {} smoothed ({c1}, {c2}) sharp ({t1}, {t2})",
        res.outer_iterations, res.converged
    );
    assert!(res.converged);
    assert!((c1 - t1).abs() <= 1e-3 && (c2 - t2).abs() <= 1e-3);
}

#[test]
fn segmentation_is_deterministic() {
    let n = 64;
    let (image, _) = square_scene(n, 32.0, 0.1);
    let c = centre(n);
    let mut cfg = SegmentationConfig::chan_vese(InitSpec::Circle { cx: c, cy: c, r: 20.0 }).with_prior(true);
    cfg.energy.mu = 1.0;
    cfg.outer_max = 40;
    let a = segment(&image, &cfg).unwrap();
    let b = segment(&image, &cfg).unwrap();
    assert_eq!(a.phi_final.to_text(), b.phi_final.to_text());
    assert_eq!(a.region, b.region);
    assert_eq!(a.trace_csv(), b.trace_csv());
}

#[test]
fn negating_phi_and_swapping_weights_gives_the_complement() {
    let n = 64;
    let (image, _) = square_scene(n, 32.0, 0.1);
    let c = centre(n);
    let init = InitSpec::Circle { cx: c, cy: c, r: 20.0 };
    let phi0 = init_levelset(&init, n, n).unwrap();
    let mut cfg = SegmentationConfig::chan_vese(init);
    cfg.energy.mu = 1.0;
    cfg.energy.lambda1 = 1.0;
    cfg.energy.lambda2 = 2.0;
    cfg.outer_max = 100;
    let a = segment_from(&image, phi0.clone(), &cfg).unwrap();
    let mut flipped = cfg.clone();
    flipped.energy.lambda1 = 2.0;
    flipped.energy.lambda2 = 1.0;
    let b = segment_from(&image, phi0.map(|v| -v).unwrap(), &flipped).unwrap();
    let differ = b.region.difference_count(&a.region.complement());
    assert!(differ * 100 <= n * n, "{differ} pixels differ");
    let (a1, a2) = a.means.unwrap();
    let (b1, b2) = b.means.unwrap();
    assert!((a1 - b2).abs() < 1e-3 && (a2 - b1).abs() < 1e-3);
}

#[test]
fn small_steps_descend_the_energy() {
    let n = 128;
    let (image, truth) = square_scene(n, 59.0, 0.0);
    let c = centre(n);
    let mut cfg = SegmentationConfig::chan_vese(InitSpec::Circle { cx: c, cy: c, r: 25.0 });
    cfg.dt = 0.1;
    cfg.outer_max = 1500;
    let t = Instant::now();
    let res = segment(&image, &cfg).unwrap();
    let energy = res.energy_trace();
    let rises: Vec<_> = energy
        .windows(2)
        .enumerate()
        .skip(5)
        .filter(|(_, w)| w[1] > w[0])
        .map(|(i, w)| (i + 2, w[1] - w[0]))
        .collect();
    eprintln!(
        "{} iterations in {:.1}s",
        res.outer_iterations,
        t.elapsed().as_secs_f64()
    );
    assert!(res.converged);
    assert!(rises.is_empty(), "{rises:?}");
    let agree = res
        .region
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    assert!(agree as f64 >= 0.98 * (n * n) as f64);
}

#[test]
fn prior_run_carries_a_certificate() {
    let n = 96;
    let spec = NamedShape::Pacman.spec(n, n, 0);
    let (img, truth) = synth(&spec, n, n, 0).unwrap();
    let c = centre(n);
    let mut cfg = SegmentationConfig::chan_vese(InitSpec::Circle { cx: c, cy: c, r: 30.0 }).with_prior(true);
    cfg.outer_max = 60;
    let res = segment(&img.intensity, &cfg).unwrap();
    let cert = res.convexity.unwrap();
    assert!(cert.convex && cert.slack == 1.0);
    assert!(is_convex_region(&res.region, 1.0).unwrap());
    assert!(!is_convex_region(&truth, 1.0).unwrap());
    assert_eq!(res.projection_diagnostics.len(), res.outer_iterations);
}

#[test]
fn collapse_reports_the_iteration() {
    let n = 64;
    let (image, _) = square_scene(n, 28.0, 0.0);
    let c = centre(n);
    // a small square cannot pay for its boundary at this length weight
    let cfg = SegmentationConfig::chan_vese(InitSpec::Circle { cx: c, cy: c, r: 6.0 });
    match segment(&image, &cfg) {
        Err(Error::RegionCollapse { iteration: Some(l), .. }) => assert!(l >= 1),
        other => panic!("expected a collapse, got {:?}", other.map(|r| r.outer_iterations)),
    }
}

#[test]
fn init_examples() {
    let phi = init_levelset(
        &InitSpec::Circle {
            cx: 100.0,
            cy: 100.0,
            r: 40.0,
        },
        201,
        201,
    )
    .unwrap();
    assert_eq!(phi.get(100, 100), -40.0);
    assert_eq!(phi.get(100, 140), 0.0);
    assert!((phi.get(130, 130) - (30.0f64.hypot(30.0) - 40.0)).abs() < 1e-12);

    let rect = InitSpec::Rectangle {
        x0: 10.0,
        y0: 8.0,
        x1: 30.0,
        y1: 20.0,
    };
    let phi = init_levelset(&rect, 40, 30).unwrap();
    let region = rect.region(40, 30).unwrap();
    for ix in phi.inner_nodes(0) {
        let on_edge = (ix.col == 10 || ix.col == 30) && (8..=20).contains(&ix.row)
            || (ix.row == 8 || ix.row == 20) && (10..=30).contains(&ix.col);
        if on_edge {
            assert!(phi[ix].abs() <= 0.51);
        }
    }
    assert_eq!(phi.get(14, 20), -6.0);
    assert_eq!(phi.get(3, 7), 5.0f64.hypot(3.0));
    assert_eq!(region.count(), 19 * 11);

    let n = 80;
    let star = synth(&NamedShape::Star.spec(n, n, 0), n, n, 0).unwrap().1;
    let spec = InitSpec::Mask(star.clone());
    assert_eq!(spec.region(n, n).unwrap(), star);

    let too_big = InitSpec::Circle {
        cx: 10.0,
        cy: 10.0,
        r: 9.0,
    };
    assert!(matches!(init_levelset(&too_big, 40, 40), Err(Error::InvalidInput(_))));
    assert!(init_levelset(&InitSpec::Mask(RegionMask::empty(n, n)), n, n).is_err());
    assert!(init_levelset(&InitSpec::Mask(star), n + 1, n).is_err());
}

#[test]
fn config_parsing() {
    assert_eq!(
        InitSpec::parse("circle:5,6,3").unwrap(),
        InitSpec::Circle {
            cx: 5.0,
            cy: 6.0,
            r: 3.0
        }
    );
    assert_eq!(
        InitSpec::parse("rect:1,2,3,4").unwrap(),
        InitSpec::Rectangle {
            x0: 1.0,
            y0: 2.0,
            x1: 3.0,
            y1: 4.0
        }
    );
    assert!(matches!(InitSpec::parse("circle:1,2"), Err(Error::Parse(_))));
    assert!(matches!(InitSpec::parse("ellipse:1,2,3"), Err(Error::Parse(_))));

    let cfg = SegmentationConfig::from_pairs(&[("model", "edge"), ("init", "circle:20,20,10"), ("convex_prior", "on")])
        .unwrap();
    assert_eq!(cfg.model, Model::EdgeOnly);
    assert!(cfg.convex_prior);
    assert_eq!(cfg.energy.lambda1, 0.0);
    assert!(SegmentationConfig::from_pairs(&[("init", "circle:20,20,10"), ("bogus", "1")]).is_err());
    cfg.validate().unwrap();
    let edge_with_data =
        SegmentationConfig::from_pairs(&[("model", "edge"), ("init", "circle:20,20,10"), ("lambda1", "1")]).unwrap();
    assert!(matches!(edge_with_data.validate(), Err(Error::InvalidParameter(_))));
    let negative_dt = SegmentationConfig::from_pairs(&[("init", "circle:20,20,10"), ("dt", "-1")]);
    assert!(negative_dt.is_err() || negative_dt.unwrap().validate().is_err());
}
