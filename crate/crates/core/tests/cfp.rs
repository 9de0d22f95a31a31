mod common;

use common::*;
use rand::Rng;
use sspg_core::cfp::{project_set, two_lines, CfpProblem, ConvexSet};
use sspg_core::oracle::ProxOracle;

fn halfspaces(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, CfpProblem) {
    let mut r = rng(seed);
    let a: Vec<Vec<f64>> = (0..3).map(|_| normal_vec(&mut r, 3)).collect();
    let b: Vec<f64> = (0..3).map(|_| r.gen_range(0.1..1.0)).collect();
    let sets = a
        .iter()
        .zip(&b)
        .map(|(a, &b)| ConvexSet::Halfspace { a: a.clone(), b })
        .collect();
    let p = CfpProblem::new(sets, Some(vec![0.0; 3])).unwrap();
    (a, b, p)
}

#[test]
fn intersection_distance_matches_dual_qp() {
    for seed in 0..20 {
        let (a, b, p) = halfspaces(seed);
        let mut r = rng(100 + seed);
        let x: Vec<f64> = normal_vec(&mut r, 3).iter().map(|v| 4.0 * v).collect();
        let z = halfspace_qp(&a, &b, &x, 200_000);
        let est = p.cfp_distance(&x, 1e-13).unwrap();
        assert!(!est.exact);
        assert!(est.converged);
        assert!(
            (est.distance - dist(&x, &z)).abs() <= 1e-8,
            "seed {seed}: {} vs {}",
            est.distance,
            dist(&x, &z)
        );
    }
}

#[test]
fn ball_and_plane_project_onto_disk() {
    let sets = vec![
        ConvexSet::Ball {
            center: vec![0.0; 3],
            radius: 1.0,
        },
        ConvexSet::Hyperplane {
            a: vec![0.0, 0.0, 1.0],
            b: 0.5,
        },
    ];
    let p = CfpProblem::new(sets, None).unwrap();
    let (z, est) = p.project_intersection(&[3.0, 0.0, 5.0], 1e-13);
    let expect = [0.75f64.sqrt(), 0.0, 0.5];
    assert!(dist(&z, &expect) <= 1e-9);
    assert!((est.distance - dist(&[3.0, 0.0, 5.0], &expect)).abs() <= 1e-9);
    let w = p.feasible_point();
    assert!(p.sets().iter().all(|s| s.distance(&w) <= 1e-9));
}

#[test]
fn affine_intersection_is_exact() {
    let sets = vec![
        ConvexSet::Hyperplane {
            a: vec![2.0, 0.0, 0.0],
            b: 2.0,
        },
        ConvexSet::Hyperplane {
            a: vec![0.0, 1.0, 0.0],
            b: 2.0,
        },
    ];
    let p = CfpProblem::new(sets, None).unwrap();
    assert!(p.is_affine());
    let (z, est) = p.project_intersection(&[5.0, -1.0, 7.0], 1e-12);
    assert!(est.exact);
    assert!(dist(&z, &[1.0, 2.0, 7.0]) <= 1e-12);
    assert!((est.distance - 5.0).abs() <= 1e-12);
}

fn kappa_on_grid(theta: f64) -> f64 {
    (0..200_000)
        .map(|i| {
            let phi = std::f64::consts::PI * i as f64 / 200_000.0;
            (phi.sin().powi(2) + (phi - theta).sin().powi(2)) / 2.0
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn kappa_of_two_lines() {
    for theta in [std::f64::consts::FRAC_PI_3, 0.4, 1.2] {
        let exact = kappa_on_grid(theta);
        let est = two_lines(theta).estimate_kappa(2000, 10.0, 1).unwrap();
        assert!(
            est >= exact * (1.0 - 1e-9),
            "theta {theta}: {est} < {exact}"
        );
        assert!(est <= exact * 1.05, "theta {theta}: {est} vs {exact}");
    }
    let a = two_lines(0.7).estimate_kappa(500, 3.0, 11).unwrap();
    let b = two_lines(0.7).estimate_kappa(500, 3.0, 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_set_has_unit_kappa() {
    let p = CfpProblem::new(
        vec![ConvexSet::Halfspace {
            a: vec![1.0, 1.0],
            b: 0.0,
        }],
        Some(vec![0.0, 0.0]),
    )
    .unwrap();
    let k = p.estimate_kappa(1000, 5.0, 3).unwrap();
    assert!((1.0 - 1e-9..=1.0).contains(&k));
}

#[test]
fn near_feasible_samples_are_an_error() {
    let p = CfpProblem::new(
        vec![ConvexSet::Ball {
            center: vec![0.0, 0.0],
            radius: 100.0,
        }],
        Some(vec![0.0, 0.0]),
    )
    .unwrap();
    assert!(p.estimate_kappa(200, 1.0, 0).is_err());
    assert!(p.estimate_kappa(10, 1.0, 0).is_err());
}

#[test]
fn rap_matches_hand_loop_and_is_fejer_monotone() {
    let (_, _, p) = halfspaces(5);
    let x0 = [6.0, -4.0, 2.0];
    let t = p.run_rap(77, 2000, &x0).unwrap();
    let mut idx = IndexStream::new(77);
    let mut x = x0.to_vec();
    let mut prev = nrm(&x);
    for _ in 0..2000 {
        x = project_set(&p.sets()[idx.next(3)], &x);
        let d = nrm(&x);
        assert!(d <= prev + 1e-12);
        prev = d;
    }
    assert_eq!(t.final_x, x);
    let dists: Vec<f64> = t
        .records
        .iter()
        .map(|r| r.dist_to_feasible.unwrap())
        .collect();
    assert!(dists.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn projections_are_idempotent_and_feasible_points_fixed() {
    let sets = [
        ConvexSet::Halfspace {
            a: vec![1.0, -2.0],
            b: 0.5,
        },
        ConvexSet::Hyperplane {
            a: vec![3.0, 1.0],
            b: -1.0,
        },
        ConvexSet::Ball {
            center: vec![1.0, 1.0],
            radius: 0.5,
        },
    ];
    let mut r = rng(9);
    for _ in 0..300 {
        let x: Vec<f64> = normal_vec(&mut r, 2).iter().map(|v| 3.0 * v).collect();
        for s in &sets {
            let p = project_set(s, &x);
            assert!(s.distance(&p) <= 1e-12);
            assert!(dist(&project_set(s, &p), &p) <= 1e-12);
        }
    }
    let c = two_lines(0.9);
    let (z, est) = c.project_intersection(&[0.0, 0.0], 1e-12);
    assert_eq!(z, vec![0.0, 0.0]);
    assert_eq!(est.distance, 0.0);
    assert_eq!(
        c.h_value(&[0.0, 0.0], sspg_core::oracle::SampleIndex(1)),
        0.0
    );
    assert_eq!(
        c.h_value(&[1.0, 1.0], sspg_core::oracle::SampleIndex(1)),
        f64::INFINITY
    );
}

#[test]
fn json_roundtrip_and_validation() {
    let (_, _, p) = halfspaces(2);
    let text = p.to_json();
    let q = CfpProblem::from_json(&text).unwrap();
    assert_eq!(q.sets(), p.sets());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sets.json");
    p.save(&path).unwrap();
    assert_eq!(CfpProblem::load(&path).unwrap().sets(), p.sets());

    let bad = [
        r#"[{"kind":"ball","center":[0,0],"radius":-1}]"#,
        r#"[{"kind":"halfspace","a":[0,0],"b":1}]"#,
        r#"[{"kind":"halfspace","a":[1,0],"b":1,"extra":2}]"#,
        r#"[{"kind":"cone","a":[1,0]}]"#,
        r#"[{"kind":"hyperplane","a":[1,0],"b":1},{"kind":"hyperplane","a":[1,0,0],"b":1}]"#,
        "[]",
    ];
    for s in bad {
        assert!(CfpProblem::from_json(s).is_err(), "{s}");
    }
    let outside = CfpProblem::new(
        vec![ConvexSet::Hyperplane {
            a: vec![1.0, 0.0],
            b: 1.0,
        }],
        Some(vec![0.0, 0.0]),
    );
    assert!(outside.is_err());
}
