mod common;

use std::f64::consts::PI;

use common::{ci_oracle, induced_emf_z21, max_abs, random_psd, rel_frobenius};
use num_complex::Complex64;
use thz_ris::config::Link;
use thz_ris::correlation::CorrelationMatrix;
use thz_ris::coupling::{
    apply_coupling, build_coupling_matrix, coupled_product, coupling_from_impedance,
    impedance_matrix, mutual_impedance_sidebyside, self_impedance, CouplingParams,
};
use thz_ris::linalg::{hermitian_defect, trace_re, CMatrix};
use thz_ris::presets;
use thz_ris::runner::Scenario;
use thz_ris::special::{ci, si};

fn params(n: usize, spacing: f64) -> CouplingParams {
    CouplingParams {
        dipole_length: 0.5,
        dissipation: 2.0,
        spacing,
        element_count: n,
    }
}

#[test]
fn sine_and_cosine_integrals() {
    assert_eq!(si(0.0), 0.0);
    assert!((si(1e4) - PI / 2.0).abs() < 1e-4);
    assert!((ci(1.0).unwrap() - 0.337_403_922_9).abs() < 1e-9);
    for x in [0.3, 1.0, 2.5, 7.0] {
        assert!((ci(x).unwrap() - ci_oracle(x)).abs() < 1e-9, "Ci({x})");
    }
}

#[test]
fn half_wave_mutual_impedance_against_direct_integration() {
    let z = mutual_impedance_sidebyside(0.5, 0.5, 1.0).unwrap();
    let oracle = induced_emf_z21(0.5, 0.5, 1.0);
    assert!((z - oracle).norm() < 0.02 * oracle.norm(), "{z} vs {oracle}");
    assert!((z.re + 12.5).abs() < 0.1 && (z.im + 29.9).abs() < 0.1, "{z}");
    for d in [0.2, 0.8, 1.7] {
        let z = mutual_impedance_sidebyside(0.5, d, 1.0).unwrap();
        let o = induced_emf_z21(0.5, d, 1.0);
        assert!((z - o).norm() < 0.02 * o.norm(), "d={d}: {z} vs {o}");
    }
}

#[test]
fn coupling_vanishes_with_separation() {
    assert!(mutual_impedance_sidebyside(0.5, 100.0, 1.0).unwrap().norm() < 1.0);
}

#[test]
fn impedance_matrix_structure() {
    let z = impedance_matrix(&params(6, 0.5), 1.0).unwrap();
    let zs = self_impedance(0.5, 1.0).unwrap();
    for q in 0..6 {
        assert!((z[(q, q)] - zs).norm() < 1e-12);
        for p in 0..6 {
            assert!((z[(q, p)] - z[(p, q)]).norm() < 1e-10);
            if q > 0 && p > 0 {
                assert!((z[(q, p)] - z[(q - 1, p - 1)]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn coupling_matrix_definitions() {
    let m = coupling_from_impedance(&CMatrix::zeros(3, 3), 2.0).unwrap();
    assert!(max_abs(&(m - CMatrix::identity(3, 3) * Complex64::new(0.5, 0.0))) < 1e-15);
    // off-diagonal/diagonal ratio of M follows |Z21| / |Z11 + r_d| to first
    // order and decays like 1/d
    let zs = self_impedance(0.5, 1.0).unwrap() + 2.0;
    let mut last = f64::INFINITY;
    for d in [10.0, 100.0, 1000.0] {
        let m = build_coupling_matrix(&params(5, d), 1.0).unwrap();
        for q in 0..5 {
            for p in 0..5 {
                assert!((m[(q, p)] - m[(p, q)]).norm() < 1e-10);
            }
        }
        let ratio = m[(0, 1)].norm() / m[(0, 0)].norm();
        let first_order = mutual_impedance_sidebyside(0.5, d, 1.0).unwrap().norm() / zs.norm();
        assert!((ratio / first_order - 1.0).abs() < 0.05, "d={d}: {ratio} vs {first_order}");
        assert!(ratio < last / 5.0);
        last = ratio;
    }
    assert!(last < 1e-3);
}

#[test]
fn identity_correlation_becomes_the_coupling_matrix() {
    let m = build_coupling_matrix(&params(6, 0.5), 1.0).unwrap();
    let out = coupled_product(&CMatrix::identity(6, 6), &m).unwrap();
    assert!(rel_frobenius(&out, &m) < 1e-10);
    let r = random_psd(6, 2);
    let unchanged = coupled_product(&r, &CMatrix::identity(6, 6)).unwrap();
    assert!(rel_frobenius(&unchanged, &r) < 1e-12);
    let c = Complex64::new(0.3, 0.0);
    let scaled = coupled_product(&r, &(CMatrix::identity(6, 6) * c)).unwrap();
    assert!(rel_frobenius(&scaled, &(&r * c)) < 1e-12);
}

#[test]
fn hermitian_coupling_root_keeps_the_product_hermitian() {
    // a purely resistive, diagonally dominant Z gives a real symmetric M
    let z = CMatrix::from_fn(5, 5, |q, p| {
        Complex64::new(if q == p { 70.0 } else { 8.0 / (1.0 + (q as f64 - p as f64).abs()) }, 0.0)
    });
    let m = coupling_from_impedance(&z, 2.0).unwrap();
    let product = coupled_product(&random_psd(5, 4), &m).unwrap();
    assert!(hermitian_defect(&product) < 1e-9);
}

#[test]
fn default_scenario_coupling_is_symmetrized_and_attenuating() {
    let mut cfg = presets::preset("default").unwrap();
    cfg.coupling.enabled = true;
    let s = Scenario::new(&cfg).unwrap();
    let field = s.config.scenario.field_type;
    let raw = s.correlation(Link::BsRis, field, false).unwrap();
    let m = s.coupling.clone().unwrap();
    // Z11 + r_d has a phase near 30 degrees, so the raw product is far from
    // Hermitian here; only its Hermitian part is kept
    let product = coupled_product(&raw.entries, &m).unwrap();
    assert!(hermitian_defect(&product) > 0.1);
    let coupled: CorrelationMatrix = apply_coupling(&raw, &m).unwrap();
    assert!(coupled.coupling_adjusted);
    assert!(hermitian_defect(&coupled.entries) < 1e-12);
    let herm = (&product + product.adjoint()) * Complex64::new(0.5, 0.0);
    assert!(rel_frobenius(&coupled.entries, &herm) < 1e-6);
    assert!(trace_re(&coupled.entries) < trace_re(&raw.entries));
}
