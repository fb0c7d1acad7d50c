mod common;

use std::f64::consts::E;

use common::{adaptive_simpson, bessel_k0, rng, simpson};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thz_ris::mgdist::{gauss_laguerre_rule, mg_moments, mg_pdf, mg_product, mg_sample, MgParams};

fn two_component() -> MgParams {
    MgParams::new(&[0.5, 0.5], &[1.0, 2.0], &[1.0, 1.0]).unwrap()
}

#[test]
fn two_component_density_matches_hand_evaluation() {
    // 0.5 e^{-1} + 0.5 * 1 * e^{-1} / Γ(2)
    let p = mg_pdf(&two_component(), 1.0).unwrap();
    assert!((p - 1.0 / E).abs() < 1e-12, "{p}");
    assert!((p - 0.367879).abs() < 1e-6);
}

#[test]
fn moments_match_numerical_integration() {
    let mg = MgParams::new(&[0.5, 0.5], &[1.0, 4.0], &[1.0, 2.0]).unwrap();
    let f = |x: f64| mg_pdf(&mg, x).unwrap();
    let m1 = adaptive_simpson(&|x| x * f(x), 0.0, 80.0, 1e-13);
    let m2 = adaptive_simpson(&|x| x * x * f(x), 0.0, 80.0, 1e-13);
    // E[var] + var of component means = 1 + 0.25
    assert!((m1 - 1.5).abs() < 1e-8, "{m1}");
    assert!((m2 - m1 * m1 - 1.25).abs() < 1e-8, "{}", m2 - m1 * m1);
    let (mean, var) = mg_moments(&mg);
    assert!((mean - m1).abs() < 1e-8 * m1);
    assert!((var - (m2 - m1 * m1)).abs() < 1e-8 * var);
}

#[test]
fn exponential_sample_mean_within_clt_bound() {
    let mg = MgParams::exponential();
    let n = 100_000;
    let mut r = rng(11);
    let mean = (0..n).map(|_| mg_sample(&mg, &mut r)).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
}

#[test]
fn chi_squared_goodness_of_fit() {
    let mg = two_component();
    let n = 100_000usize;
    let bins = 50usize;
    // equiprobable bins from the CDF
    let mut edges = vec![0.0];
    for b in 1..bins {
        let target = b as f64 / bins as f64;
        let (mut lo, mut hi) = (0.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let cdf = adaptive_simpson(&|x| mg_pdf(&mg, x).unwrap(), 0.0, mid, 1e-12);
            if cdf < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push(0.5 * (lo + hi));
    }
    let mut counts = vec![0usize; bins];
    let mut r = rng(5);
    for _ in 0..n {
        let x = mg_sample(&mg, &mut r);
        let idx = edges.partition_point(|&e| e <= x) - 1;
        counts[idx] += 1;
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi2 {stat} >= {critical}");
}

#[test]
fn laguerre_order_two_nodes() {
    let rule = gauss_laguerre_rule(2).unwrap();
    let s = 2f64.sqrt();
    assert!((rule.nodes()[0] - (2.0 - s)).abs() < 1e-13);
    assert!((rule.nodes()[1] - (2.0 + s)).abs() < 1e-13);
}

#[test]
fn laguerre_rule_invariants() {
    for order in [1, 2, 3, 5, 10, 20, 30, 40, 64] {
        let rule = gauss_laguerre_rule(order).unwrap();
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-10, "order {order}: {w}");
        assert!(rule.nodes()[0] > 0.0);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        // ∫ t^n e^{-t} = n!
        let mut fact = 1.0;
        for deg in 0..=(2 * order - 1).min(5) {
            if deg > 0 {
                fact *= deg as f64;
            }
            let v = rule.integrate(|t| t.powi(deg as i32));
            assert!((v / fact - 1.0).abs() < 1e-10, "order {order} degree {deg}: {v}");
        }
    }
}

#[test]
fn product_mean_is_product_of_means() {
    let rule = gauss_laguerre_rule(30).unwrap();
    let a = MgParams::new(&[0.6, 0.4], &[2.0, 5.0], &[2.0, 3.0]).unwrap();
    let b = MgParams::new(&[0.3, 0.7], &[1.5, 3.0], &[1.0, 2.5]).unwrap();
    let prod = mg_product(&a, &b, &rule);
    let (ma, _) = mg_moments(&a);
    let (mb, _) = mg_moments(&b);
    let (m, _) = prod.moments();
    assert!((m / (ma * mb) - 1.0).abs() < 1e-3, "{m} vs {}", ma * mb);
    assert!((prod.weight_sum() - 1.0).abs() < 1e-3);
}

#[test]
fn exponential_product_moments() {
    let rule = gauss_laguerre_rule(40).unwrap();
    let e = MgParams::exponential();
    let prod = mg_product(&e, &e, &rule);
    let (m, v) = prod.moments();
    assert!((m - 1.0).abs() < 1e-3, "{m}");
    assert!((v + m * m - 4.0).abs() < 1e-2, "{}", v + m * m);
}

#[test]
fn near_degenerate_factor_scales_the_other_variance() {
    // Y ~ Gamma(1e4, 1e4) is essentially the constant 1, so XY ~ X. Y goes
    // first: the quadrature runs over the second factor, which must be smooth.
    let rule = gauss_laguerre_rule(30).unwrap();
    let x = MgParams::new(&[0.5, 0.5], &[2.0, 3.0], &[1.0, 2.0]).unwrap();
    let y = MgParams::gamma(1e4, 1e4).unwrap();
    let (mx, vx) = mg_moments(&x);
    // numerical E[(XY)^2] − E[XY]^2 with E[Y]=1, E[Y²] = 1 + 1e-4
    let ey2 = 1.0 + 1e-4;
    let ex2 = adaptive_simpson(&|t| t * t * mg_pdf(&x, t).unwrap(), 0.0, 60.0, 1e-12);
    let target = ex2 * ey2 - mx * mx;
    let (m, v) = mg_product(&y, &x, &rule).moments();
    assert!((m - mx).abs() < 1e-3 * mx);
    assert!((v / target - 1.0).abs() < 1e-2, "{v} vs {target} (X alone {vx})");
}

#[test]
fn exponential_product_density_against_bessel_oracle() {
    // the MG fit converges slowly near the log singularity at 0; away from
    // it the agreement is tight
    let rule = gauss_laguerre_rule(40).unwrap();
    let e = MgParams::exponential();
    let prod = mg_product(&e, &e, &rule);
    for x in [1.0f64, 2.0, 4.0] {
        let exact = 2.0 * bessel_k0(2.0 * x.sqrt());
        let got = prod.pdf(x).unwrap();
        assert!((got - exact).abs() < 1e-3, "x={x}: {got} vs {exact}");
    }
}

#[test]
fn normalization_error_non_increasing_in_order() {
    let e = MgParams::exponential();
    let residuals: Vec<f64> = [5, 10, 20, 40]
        .iter()
        .map(|&a| mg_product(&e, &e, &gauss_laguerre_rule(a).unwrap()).normalization_residual().abs())
        .collect();
    // all at round-off level for this pair, so allow that much slack
    for w in residuals.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{residuals:?}");
    }
}

#[test]
fn pdf_integrates_to_one() {
    for mg in [
        two_component(),
        MgParams::new(&[0.6, 0.4], &[2.0, 5.0], &[2.0, 3.0]).unwrap(),
        MgParams::gamma(3.0, 0.5).unwrap(),
    ] {
        let total = adaptive_simpson(&|x| mg_pdf(&mg, x).unwrap(), 0.0, 200.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}

#[test]
fn single_exponential_component_draws_are_exponential() {
    // J = 1, α = 1 reduces to Exp(β); check P(X > t) = e^{−βt}
    let mg = MgParams::gamma(1.0, 2.0).unwrap();
    let n = 100_000;
    let mut r = rng(3);
    let draws: Vec<f64> = (0..n).map(|_| mg_sample(&mg, &mut r)).collect();
    for t in [0.1, 0.5, 1.0, 2.0] {
        let tail = draws.iter().filter(|&&x| x > t).count() as f64 / n as f64;
        let exact = (-2.0 * t).exp();
        let sd = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((tail - exact).abs() < 4.0 * sd + 1e-4, "t={t}: {tail} vs {exact}");
    }
}

#[test]
fn simpson_oracle_sanity() {
    assert!((simpson(|x| x * x, 0.0, 3.0, 10) - 9.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn moments_agree_with_quadrature(
        w in prop::collection::vec(0.1f64..1.0, 1..=4),
        shapes in prop::collection::vec(1.0f64..6.0, 4),
        rates in prop::collection::vec(0.5f64..3.0, 4),
    ) {
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let j = w.len();
        let mg = MgParams::new(&w, &shapes[..j], &rates[..j]).unwrap();
        let upper = 150.0;
        let m1 = adaptive_simpson(&|x| x * mg_pdf(&mg, x).unwrap(), 0.0, upper, 1e-13);
        let m2 = adaptive_simpson(&|x| x * x * mg_pdf(&mg, x).unwrap(), 0.0, upper, 1e-13);
        let (mean, var) = mg_moments(&mg);
        prop_assert!((mean - m1).abs() <= 1e-8 * m1);
        prop_assert!((var - (m2 - m1 * m1)).abs() <= 1e-8 * (m2 - m1 * m1) + 1e-10);
    }

    #[test]
    fn samples_are_nonnegative(seed in any::<u64>(), shape in 0.2f64..8.0, rate in 0.1f64..5.0) {
        let mg = MgParams::gamma(shape, rate).unwrap();
        let mut r = rng(seed);
        for _ in 0..200 {
            prop_assert!(mg_sample(&mg, &mut r) >= 0.0);
        }
    }
}
