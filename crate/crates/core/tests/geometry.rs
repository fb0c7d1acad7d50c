mod common;

use std::f64::consts::PI;

use common::rng;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thz_ris::geometry::{
    farfield_distance_sum, ring_scatterer_distance, sample_von_mises, ClusterRing, UePlacement,
    UlaGeometry, SPEED_OF_LIGHT,
};

fn ring(d: f64, phi: f64, r: f64) -> ClusterRing {
    ClusterRing {
        center_distance: d,
        center_angle: phi,
        radius: r,
        power_fraction: 1.0,
        mean_angle: 0.0,
        concentration: 0.0,
        scatterer_count: 1,
        reflection: 1.0,
    }
}

#[test]
fn distance_matches_explicit_coordinates() {
    let lambda = SPEED_OF_LIGHT / 142e9;
    let delta = 0.5 * lambda;
    let (d, phi, r, theta): (f64, f64, f64, f64) = (10.0, 0.3, 1.8, 1.1);
    let scatterer = (d * phi.cos() + r * theta.cos(), d * phi.sin() + r * theta.sin());
    let element: (f64, f64) = (0.0, 5.0 * delta);
    let expected = ((scatterer.0 - element.0).powi(2) + (scatterer.1 - element.1).powi(2)).sqrt();
    let got = ring_scatterer_distance(&ring(d, phi, r), theta, 5, delta);
    assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
}

#[test]
fn far_field_sum_tracks_exact_distances_at_large_range() {
    let lambda = SPEED_OF_LIGHT / 142e9;
    let delta = 0.5 * lambda;
    let rg = ring(100.0, 0.4, 1.0);
    for theta in [-2.5, -1.0, 0.0, 0.7, 3.0] {
        for q in -8..=8i64 {
            for p in -8..=8i64 {
                if (q - p).abs() > 8 {
                    continue;
                }
                let exact = ring_scatterer_distance(&rg, theta, q, delta)
                    + ring_scatterer_distance(&rg, theta, p, delta);
                let approx = farfield_distance_sum(&rg, theta, q, p, delta);
                assert!((approx / exact - 1.0).abs() < 1e-4, "θ={theta} q={q} p={p}");
            }
        }
    }
}

#[test]
fn element_positions() {
    let g = UlaGeometry::new(5, 0.25).unwrap();
    let pos = g.positions();
    assert_eq!(pos[2], [0.0, 0.0, 0.0]);
    for (i, p) in pos.iter().enumerate() {
        assert_eq!(*p, [0.0, (i as f64 - 2.0) * 0.25, 0.0]);
    }
    let even = UlaGeometry::new(4, 1.0).unwrap();
    assert_eq!(even.indices().collect::<Vec<_>>(), vec![-2, -1, 0, 1]);
}

#[test]
fn ue_position() {
    let ue = UePlacement::new(10.0, 0.5).unwrap();
    let p = ue.position();
    assert!((p[0] - 10.0 * 0.5f64.cos()).abs() < 1e-14);
    assert!((p[1] - 10.0 * 0.5f64.sin()).abs() < 1e-14);
    assert!(UePlacement::new(10.0, 2.0).is_err());
}

#[test]
fn zero_concentration_is_uniform() {
    let n = 100_000;
    let bins = 40;
    let mut counts = vec![0usize; bins];
    let mut r = rng(21);
    for _ in 0..n {
        let t = sample_von_mises(0.3, 0.0, &mut r);
        assert!((-PI..PI).contains(&t));
        let idx = (((t + PI) / (2.0 * PI)) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(stat < ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99));
}

#[test]
fn concentrated_draws_have_the_right_circular_mean() {
    let mut r = rng(22);
    let (mut s, mut c) = (0.0, 0.0);
    for _ in 0..100_000 {
        let t = sample_von_mises(0.5, 50.0, &mut r);
        s += t.sin();
        c += t.cos();
    }
    let mean = s.atan2(c);
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn von_mises_draws_are_reproducible() {
    let a: Vec<f64> = {
        let mut r = rng(9);
        (0..50).map(|_| sample_von_mises(1.0, 4.0, &mut r)).collect()
    };
    let b: Vec<f64> = {
        let mut r = rng(9);
        (0..50).map(|_| sample_von_mises(1.0, 4.0, &mut r)).collect()
    };
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn equivalent_center_angles_give_identical_distances(
        d in 1.0f64..50.0, phi in -1.5f64..1.5, theta in -3.1f64..3.1, q in -8i64..8,
    ) {
        let a = ring_scatterer_distance(&ring(d, phi, 0.5), theta, q, 1e-3);
        let b = ring_scatterer_distance(&ring(d, phi + 2.0 * PI, 0.5), theta, q, 1e-3);
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn distances_are_positive_for_valid_rings(
        d in 0.5f64..50.0, frac in 0.0f64..0.95, phi in -1.5f64..1.5, theta in -3.14f64..3.14, q in -64i64..64,
    ) {
        let rg = ring(d, phi, frac * d);
        prop_assert!(ring_scatterer_distance(&rg, theta, q, 1e-3) > 0.0);
    }
}
