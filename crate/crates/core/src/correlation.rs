//! Near- and far-field spatial correlation matrices for ring-scattering
//! channels, and the Hermitian square root used by the Kronecker model.
//!
//! Both builders integrate over the scatterer angle `θ ∈ [-π, π)` with the
//! composite trapezoid rule. The integrands are smooth and `2π`-periodic,
//! so the rule converges spectrally; every build is re-run at twice the
//! number of points and rejected if any entry moves by more than
//! [`CONVERGENCE_TOL`] relative to the largest entry.
//!
//! Each builder writes the integrand as `g(θ) g(θ)^H` with a per-element
//! steering-like vector `g`, so the quadrature sum is a weighted Gram matrix
//! and Hermitian PSD up to round-off.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    reference_distance, scatterer_distance_at, scatterer_height, ClusterRing, UlaGeometry,
    SPEED_OF_LIGHT,
};
use crate::linalg::{c64, CMatrix, HermitianEigen};
use crate::special::bessel_i0_scaled;

/// Default number of trapezoid points over `[-π, π)`.
pub const DEFAULT_QUAD_POINTS: usize = 2048;

/// Smallest accepted number of quadrature points.
pub const MIN_QUAD_POINTS: usize = 64;

/// Largest tolerated entry change when the point count is doubled.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Nodes whose von Mises weight is below `e^{-42}` (about 6e-19) of the
/// ring's peak are dropped.
const NEGLIGIBLE_LOG_WEIGHT: f64 = -42.0;

/// Carrier, absorption and power settings shared by all links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub carrier_frequency: f64,
    pub wavelength: f64,
    /// Molecular absorption coefficient `K_a`, 1/m.
    pub absorption: f64,
    /// Total small-scale power `Ω`.
    pub total_power: f64,
}

impl PropagationParams {
    pub fn new(carrier_frequency: f64, absorption: f64, total_power: f64) -> Result<Self> {
        if !(carrier_frequency > 0.0) || !carrier_frequency.is_finite() {
            return Err(Error::invalid("f_c", "carrier frequency must be positive"));
        }
        if !(absorption >= 0.0) || !absorption.is_finite() {
            return Err(Error::invalid("K_a", "absorption coefficient must be >= 0"));
        }
        if !(total_power > 0.0) || !total_power.is_finite() {
            return Err(Error::invalid("omega", "total power must be positive"));
        }
        Ok(Self {
            carrier_frequency,
            wavelength: SPEED_OF_LIGHT / carrier_frequency,
            absorption,
            total_power,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Near,
    Far,
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldType::Near => "near",
            FieldType::Far => "far",
        })
    }
}

/// Absorption term used by the far-field builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FarfieldAbsorption {
    /// Linearized excess-path absorption, `exp((K_a/2)(q+p) δ S/ρ)`.
    #[default]
    #[serde(rename = "final", alias = "linearized")]
    Linearized,
    /// Exact excess-path absorption `exp(-(K_a/2)(d_q + d_p − 2 d_0))`.
    #[serde(rename = "exact")]
    ExcessPath,
}

/// A spatial correlation matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: CMatrix,
    pub field: FieldType,
    pub coupling_adjusted: bool,
    pub quad_points: usize,
}

impl CorrelationMatrix {
    /// Identity correlation (uncorrelated, unit power), used by sanity
    /// scenarios.
    pub fn identity(n: usize) -> Self {
        Self {
            entries: CMatrix::identity(n, n),
            field: FieldType::Far,
            coupling_adjusted: false,
            quad_points: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// von Mises density `exp(κ cos(θ − μ)) / (2π I0(κ))`.
pub fn von_mises_pdf(theta: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) {
        return Err(Error::Domain(format!(
            "von Mises concentration must be >= 0, got {kappa}"
        )));
    }
    Ok(von_mises_unchecked(theta, mu, kappa))
}

#[inline]
fn von_mises_unchecked(theta: f64, mu: f64, kappa: f64) -> f64 {
    // scaled by e^{-κ} top and bottom so large κ cannot overflow
    (kappa * ((theta - mu).cos() - 1.0)).exp() / (2.0 * PI * bessel_i0_scaled(kappa))
}

fn check_builder_inputs(rings: &[ClusterRing], quad_points: usize) -> Result<()> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(Error::invalid(
            "quad_points",
            format!("at least {MIN_QUAD_POINTS} quadrature points required, got {quad_points}"),
        ));
    }
    if rings.is_empty() {
        return Err(Error::invalid("rings", "at least one ring is required"));
    }
    for (l, r) in rings.iter().enumerate() {
        if !(r.center_distance >= 0.0 && r.radius >= 0.0 && r.concentration >= 0.0)
            || !(r.power_fraction > 0.0)
        {
            return Err(Error::invalid(
                format!("ring {l}"),
                "distances, concentration and power fraction must be non-negative",
            ));
        }
    }
    Ok(())
}

/// Steering-like vector `g(θ)` for one ring angle; the integrand is
/// `g g^H` times the angular weight.
type SteeringFn<'a> = dyn Fn(&ClusterRing, f64, &mut [num_complex::Complex64]) + Sync + 'a;

/// Unit-step quadrature sum `Σ w(θ_i) g g^H` over the nodes `θ_i = -π + i h`,
/// `h = 2π/points`, with `i ≡ first (mod stride)`.
fn gram_sum(
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    points: usize,
    first: usize,
    stride: usize,
    steering: &SteeringFn<'_>,
) -> CMatrix {
    let n = geom.element_count();
    let step = 2.0 * PI / points as f64;
    // one column per (ring, node), pre-scaled by sqrt of the angular weight;
    // nodes far out in the von Mises tail contribute nothing at f64 precision
    let nodes: Vec<(&ClusterRing, f64, f64)> = rings
        .iter()
        .flat_map(|ring| {
            let scale = prop.total_power * ring.power_fraction * ring.reflection * ring.reflection
                / (2.0 * PI * bessel_i0_scaled(ring.concentration));
            (first..points)
                .step_by(stride)
                .map(move |i| (ring, scale, -PI + step * i as f64))
        })
        .filter_map(|(ring, scale, theta)| {
            let shape = ring.concentration * ((theta - ring.mean_angle).cos() - 1.0);
            (shape > NEGLIGIBLE_LOG_WEIGHT).then_some((ring, scale * shape.exp(), theta))
        })
        .collect::<Vec<_>>();
    let mut flat = vec![c64(0.0, 0.0); n * nodes.len()];
    flat.par_chunks_mut(n)
        .zip(nodes.par_iter())
        .for_each(|(g, &(ring, w, theta))| {
            steering(ring, theta, g);
            let sw = w.sqrt();
            g.iter_mut().for_each(|z| *z *= sw);
        });
    let mut gram = CMatrix::zeros(n, n);
    for g in flat.chunks_exact(n) {
        for p in 0..n {
            let gp = g[p].conj();
            for q in 0..=p {
                gram[(q, p)] += g[q] * gp;
            }
        }
    }
    for p in 0..n {
        for q in 0..p {
            gram[(p, q)] = gram[(q, p)].conj();
        }
    }
    gram
}

fn build_with_check(
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    quad_points: usize,
    field: FieldType,
    steering: &SteeringFn<'_>,
) -> Result<CorrelationMatrix> {
    check_builder_inputs(rings, quad_points)?;
    // the refined grid reuses the coarse nodes and adds the midpoints
    let fine_points = 2 * quad_points;
    let even = gram_sum(geom, rings, prop, fine_points, 0, 2, steering);
    let odd = gram_sum(geom, rings, prop, fine_points, 1, 2, steering);
    let h = 2.0 * PI / quad_points as f64;
    let coarse = &even * c64(h, 0.0);
    let fine = (&even + &odd) * c64(0.5 * h, 0.0);
    let scale = fine.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        for r in 0..coarse.nrows() {
            for c in 0..coarse.ncols() {
                let change = (coarse[(r, c)] - fine[(r, c)]).norm() / scale;
                if change > CONVERGENCE_TOL {
                    return Err(Error::QuadratureNotConverged {
                        points: fine_points,
                        row: r,
                        col: c,
                        change,
                    });
                }
            }
        }
    }
    Ok(CorrelationMatrix {
        entries: coarse,
        field,
        coupling_adjusted: false,
        quad_points,
    })
}

/// Near-field correlation: entry `(q, p)` is
/// `Ω Σ_l ε_l ∫ d_0²/(d_q d_p) e^{−jk(d_q − d_p)} e^{−(K_a/2)(d_q + d_p − 2 d_0)} p_l(θ) dθ`
/// with exact spherical distances.
pub fn build_nearfield_correlation(
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    quad_points: usize,
) -> Result<CorrelationMatrix> {
    let k = prop.wavenumber();
    let ka = prop.absorption;
    let offsets: Vec<f64> = geom
        .indices()
        .map(|q| q as f64 * geom.spacing())
        .collect();
    let steering = move |ring: &ClusterRing, theta: f64, g: &mut [num_complex::Complex64]| {
        let d0 = reference_distance(ring, theta);
        for (gq, &off) in g.iter_mut().zip(&offsets) {
            let dq = scatterer_distance_at(ring, theta, off);
            let amp = d0 / dq * (-0.5 * ka * (dq - d0)).exp();
            *gq = num_complex::Complex64::from_polar(amp, -k * dq);
        }
    };
    build_with_check(geom, rings, prop, quad_points, FieldType::Near, &steering)
}

/// Far-field correlation from the first-order (planar-wavefront) expansion
/// of the element distances about the array origin.
///
/// The phase of entry `(q, p)` is `k (q − p) δ S(θ)/ρ(θ)` with
/// `S = D sin φ + r sin θ`, `ρ = sqrt(D² + r² + 2 D r cos(φ − θ))`; this is
/// the phase the exact near-field integrand tends to as `D` grows.
/// Absorption follows `absorption_mode`.
pub fn build_farfield_correlation(
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    quad_points: usize,
    absorption_mode: FarfieldAbsorption,
) -> Result<CorrelationMatrix> {
    let k = prop.wavenumber();
    let ka = prop.absorption;
    let spacing = geom.spacing();
    let indices: Vec<f64> = geom.indices().map(|q| q as f64).collect();
    let steering = move |ring: &ClusterRing, theta: f64, g: &mut [num_complex::Complex64]| {
        let rho = reference_distance(ring, theta);
        let slope = if rho > 0.0 {
            spacing * scatterer_height(ring, theta) / rho
        } else {
            0.0
        };
        for (gq, &q) in g.iter_mut().zip(&indices) {
            let log_amp = match absorption_mode {
                FarfieldAbsorption::Linearized => 0.5 * ka * q * slope,
                FarfieldAbsorption::ExcessPath => {
                    -0.5 * ka * (scatterer_distance_at(ring, theta, q * spacing) - rho)
                }
            };
            *gq = num_complex::Complex64::from_polar(log_amp.exp(), k * q * slope);
        }
    };
    let built = build_with_check(geom, rings, prop, quad_points, FieldType::Far, &steering)?;
    if ka > 0.0 {
        let worst = built
            .entries
            .diagonal()
            .iter()
            .map(|z| (z.re / prop.total_power - 1.0).abs())
            .fold(0.0, f64::max);
        if worst > 0.01 {
            log::warn!(
                "far-field absorption moves the diagonal by {:.2}% from the total power \
                 (K_a = {ka}, N = {}); the linearized term grows with element index",
                100.0 * worst,
                geom.element_count()
            );
        }
    }
    Ok(built)
}

/// Dispatches on the field type.
pub fn build_correlation(
    field: FieldType,
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    quad_points: usize,
    absorption_mode: FarfieldAbsorption,
) -> Result<CorrelationMatrix> {
    match field {
        FieldType::Near => build_nearfield_correlation(geom, rings, prop, quad_points),
        FieldType::Far => {
            build_farfield_correlation(geom, rings, prop, quad_points, absorption_mode)
        }
    }
}

/// Hermitian PSD square root `S` with `S S = R` after clamping eigenvalues
/// in `[-1e-9 λ_max, 0)` to zero.
pub fn hermitian_sqrt(r: &CMatrix) -> Result<CMatrix> {
    let eig = HermitianEigen::new(r)?.clamp_psd()?;
    Ok(eig.map(f64::sqrt))
}
