//! Planar geometry of the arrays, the UE and the scatterer rings.
//!
//! Arrays are uniform linear arrays on the Y-axis, element `k` at
//! `[0, k δ, 0]` with `k` running from `-ceil((N-1)/2)` to `floor((N-1)/2)`.
//! Even `N` therefore gives an asymmetric index range (e.g. `-2..=1` for
//! `N = 4`). Z coordinates are always zero.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mgdist::MgParams;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array along the Y-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    element_count: usize,
    spacing: f64,
}

impl UlaGeometry {
    pub fn new(element_count: usize, spacing: f64) -> Result<Self> {
        if element_count == 0 {
            return Err(Error::invalid("element_count", "must be at least 1"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {spacing}"),
            ));
        }
        Ok(Self {
            element_count,
            spacing,
        })
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Lowest element index, `-ceil((N-1)/2)`.
    pub fn first_index(&self) -> i64 {
        -(self.element_count as i64 / 2)
    }

    /// Signed element indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        let first = self.first_index();
        (0..self.element_count as i64).map(move |i| first + i)
    }

    /// Position of the element at signed index `k`.
    pub fn position(&self, k: i64) -> [f64; 3] {
        [0.0, k as f64 * self.spacing, 0.0]
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.indices().map(|k| self.position(k)).collect()
    }
}

/// UE location `L_U [cos θ_U, sin θ_U, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePlacement {
    pub distance: f64,
    pub angle: f64,
}

impl UePlacement {
    pub fn new(distance: f64, angle: f64) -> Result<Self> {
        if !(distance > 0.0) {
            return Err(Error::invalid("ue.distance", "must be positive"));
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&angle) {
            return Err(Error::invalid(
                "ue.angle",
                format!("must lie in [-pi/2, pi/2], got {angle}"),
            ));
        }
        Ok(Self { distance, angle })
    }

    pub fn position(&self) -> [f64; 3] {
        [
            self.distance * self.angle.cos(),
            self.distance * self.angle.sin(),
            0.0,
        ]
    }
}

/// One scatterer ring (cluster).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterRing {
    /// Distance from the array origin to the ring center, m.
    pub center_distance: f64,
    /// Angle of the ring center from the +X axis, rad.
    pub center_angle: f64,
    /// Ring radius, m.
    pub radius: f64,
    /// Fraction of the link power carried by this ring.
    pub power_fraction: f64,
    /// von Mises mean of the scatterer angle on the ring.
    pub mean_angle: f64,
    /// von Mises concentration.
    pub concentration: f64,
    /// Scatterers drawn per realization.
    pub scatterer_count: usize,
    /// Reflection coefficient magnitude applied to every path of the ring.
    pub reflection: f64,
}

impl ClusterRing {
    /// Checks the per-ring invariants.
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &str, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(name, reason))
            }
        };
        check(
            self.center_distance > 0.0 && self.center_distance.is_finite(),
            "D_l",
            format!("ring center distance must be positive, got {}", self.center_distance),
        )?;
        check(
            self.radius >= 0.0 && self.radius < self.center_distance,
            "r_l",
            format!(
                "ring radius must satisfy 0 <= r_l < D_l (r_l = {}, D_l = {})",
                self.radius, self.center_distance
            ),
        )?;
        check(
            (-PI / 2.0..PI / 2.0).contains(&self.center_angle),
            "phi_l",
            format!("ring angle must lie in [-pi/2, pi/2), got {}", self.center_angle),
        )?;
        check(
            self.power_fraction > 0.0,
            "eps_l",
            format!("power fraction must be positive, got {}", self.power_fraction),
        )?;
        check(
            self.concentration >= 0.0 && self.concentration.is_finite(),
            "kappa_l",
            format!("concentration must be >= 0, got {}", self.concentration),
        )?;
        check(
            self.scatterer_count >= 1,
            "N_l",
            "at least one scatterer per ring".to_string(),
        )?;
        check(
            self.reflection > 0.0 && self.reflection <= 1.0,
            "rho_l",
            format!("reflection magnitude must lie in (0, 1], got {}", self.reflection),
        )
    }

    /// Scatterer position for ring angle `theta`.
    pub fn scatterer_position(&self, theta: f64) -> [f64; 3] {
        [
            self.center_distance * self.center_angle.cos() + self.radius * theta.cos(),
            self.center_distance * self.center_angle.sin() + self.radius * theta.sin(),
            0.0,
        ]
    }
}

/// Validates a ring set: each ring, and the power fractions summing to one.
pub fn validate_rings(rings: &[ClusterRing]) -> Result<()> {
    if rings.is_empty() {
        return Err(Error::invalid("rings", "at least one ring is required"));
    }
    for (l, ring) in rings.iter().enumerate() {
        ring.validate()
            .map_err(|e| e.context(format!("ring {l}")))?;
    }
    let total: f64 = rings.iter().map(|r| r.power_fraction).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "eps_l",
            format!("ring power fractions must sum to 1 (got {total:.15})"),
        ));
    }
    Ok(())
}

/// Distance from the scatterer at ring angle `theta` to the element at
/// position `q_offset = q δ` on the Y-axis.
#[inline]
pub fn scatterer_distance_at(ring: &ClusterRing, theta: f64, q_offset: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = ring.center_angle.sin_cos();
    let x = ring.center_distance * cp + ring.radius * ct;
    let y = ring.center_distance * sp + ring.radius * st - q_offset;
    x.hypot(y)
}

/// `d_q^l(θ)`: scatterer-to-element distance for signed element index `q`.
pub fn ring_scatterer_distance(ring: &ClusterRing, theta: f64, q: i64, spacing: f64) -> f64 {
    scatterer_distance_at(ring, theta, q as f64 * spacing)
}

/// Distance from the ring scatterer at `theta` to the array origin,
/// `sqrt(D² + r² + 2 D r cos(φ − θ))`.
#[inline]
pub fn reference_distance(ring: &ClusterRing, theta: f64) -> f64 {
    let d = ring.center_distance;
    let r = ring.radius;
    (d * d + r * r + 2.0 * d * r * (ring.center_angle - theta).cos()).sqrt()
}

/// `D sin φ + r sin θ`, the Y coordinate of the scatterer.
#[inline]
pub fn scatterer_height(ring: &ClusterRing, theta: f64) -> f64 {
    ring.center_distance * ring.center_angle.sin() + ring.radius * theta.sin()
}

/// First-order correction term of the far-field distance sum for the
/// element pair `(q, p)`.
pub fn farfield_correction(ring: &ClusterRing, theta: f64, q: i64, p: i64, spacing: f64) -> f64 {
    -((q - p) as f64) * spacing * scatterer_height(ring, theta) / reference_distance(ring, theta)
}

/// Two-term Taylor approximation of `d_q(θ) + d_p(θ)`:
/// `2 sqrt(D² + r² + 2 D r cos(φ − θ)) − (q − p) δ (D sin φ + r sin θ) / sqrt(...)`.
pub fn farfield_distance_sum(ring: &ClusterRing, theta: f64, q: i64, p: i64, spacing: f64) -> f64 {
    2.0 * reference_distance(ring, theta) + farfield_correction(ring, theta, q, p, spacing)
}

/// One scatterer realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererDraw {
    /// Angle on the ring, in `[-π, π)`.
    pub angle: f64,
    /// Path phase, uniform on `[-π, π)`.
    pub phase: f64,
    /// Magnitude factor `h̃_n` (MG draw, second-moment normalized, times the
    /// ring reflection magnitude).
    pub magnitude: f64,
    /// Reflection coefficient magnitude.
    pub reflection: f64,
    /// Distance from the transmitter to the scatterer, m.
    pub source_distance: f64,
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t -= 2.0 * PI;
    }
    t
}

/// Draws from the von Mises law with mean `mu` and concentration `kappa`
/// (Best–Fisher rejection sampler). Output lies in `[-π, π)`.
pub fn sample_von_mises<R: Rng + ?Sized>(mu: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return -PI + 2.0 * PI * rng.random::<f64>();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return wrap_angle(mu + theta);
        }
    }
}

/// Draws the `N_l` scatterers of one ring.
///
/// Magnitudes come from `fading` divided by `sqrt(E[X²])` so that
/// `E[h̃²] = 1`, then scaled by the ring reflection magnitude.
pub fn draw_scatterers<R: Rng + ?Sized>(
    ring: &ClusterRing,
    fading: &MgParams,
    source: [f64; 3],
    rng: &mut R,
) -> Vec<ScattererDraw> {
    let norm = fading.second_moment().sqrt();
    (0..ring.scatterer_count)
        .map(|_| {
            let angle = sample_von_mises(ring.mean_angle, ring.concentration, rng);
            let phase = -PI + 2.0 * PI * rng.random::<f64>();
            let magnitude = ring.reflection * fading.sample(rng) / norm;
            let s = ring.scatterer_position(angle);
            let source_distance = (s[0] - source[0]).hypot(s[1] - source[1]);
            ScattererDraw {
                angle,
                phase,
                magnitude,
                reflection: ring.reflection,
                source_distance,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(d: f64, phi: f64, r: f64) -> ClusterRing {
        ClusterRing {
            center_distance: d,
            center_angle: phi,
            radius: r,
            power_fraction: 1.0,
            mean_angle: 0.0,
            concentration: 0.0,
            scatterer_count: 4,
            reflection: 1.0,
        }
    }

    #[test]
    fn index_range_matches_ceil_floor_convention() {
        let odd = UlaGeometry::new(5, 1.0).unwrap();
        assert_eq!(odd.indices().collect::<Vec<_>>(), vec![-2, -1, 0, 1, 2]);
        let even = UlaGeometry::new(4, 1.0).unwrap();
        assert_eq!(even.indices().collect::<Vec<_>>(), vec![-2, -1, 0, 1]);
        let one = UlaGeometry::new(1, 1.0).unwrap();
        assert_eq!(one.indices().collect::<Vec<_>>(), vec![0]);
        assert_eq!(odd.position(0), [0.0, 0.0, 0.0]);
        assert_eq!(odd.position(2), [0.0, 2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_arrays() {
        assert!(UlaGeometry::new(0, 1.0).is_err());
        assert!(UlaGeometry::new(3, 0.0).is_err());
    }

    #[test]
    fn center_scatterer_sits_at_ring_distance() {
        let r = ring(7.0, 0.4, 0.0);
        assert!((ring_scatterer_distance(&r, 1.3, 0, 1e-3) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_scatterer_is_d_plus_r() {
        let r = ring(7.0, 0.4, 1.5);
        assert!((ring_scatterer_distance(&r, 0.4, 0, 1e-3) - 8.5).abs() < 1e-12);
    }

    #[test]
    fn distance_sum_at_reference_pair() {
        let r = ring(12.0, -0.2, 2.0);
        let theta = 0.9;
        let expected =
            2.0 * (144.0 + 4.0 + 2.0 * 12.0 * 2.0 * (-0.2f64 - theta).cos()).sqrt();
        assert!((farfield_distance_sum(&r, theta, 0, 0, 1e-3) - expected).abs() < 1e-12);
    }

    #[test]
    fn correction_is_antisymmetric() {
        let r = ring(12.0, -0.2, 2.0);
        let a = farfield_correction(&r, 0.3, 5, -2, 1e-3);
        let b = farfield_correction(&r, 0.3, -2, 5, 1e-3);
        assert_eq!(a, -b);
    }

    #[test]
    fn ring_validation() {
        assert!(ring(5.0, 0.0, 1.0).validate().is_ok());
        assert!(ring(1.0, 0.0, 1.0).validate().is_err());
        assert!(ring(5.0, PI / 2.0, 1.0).validate().is_err());
        let mut bad = ring(5.0, 0.0, 1.0);
        bad.power_fraction = 0.5;
        let e = validate_rings(&[bad]).unwrap_err();
        assert!(e.to_string().contains("eps_l"));
    }

    #[test]
    fn wrap_angle_range() {
        for &t in &[-10.0, -PI, 0.0, PI, 3.0 * PI, 7.5] {
            let w = wrap_angle(t);
            assert!((-PI..PI).contains(&w), "{t} -> {w}");
        }
        assert_eq!(wrap_angle(PI), -PI);
    }

    #[test]
    fn scatterer_draws_are_reproducible() {
        let mut r = ring(5.0, 0.1, 1.0);
        r.concentration = 3.0;
        let mg = MgParams::exponential();
        let a = draw_scatterers(&r, &mg, [10.0, 0.0, 0.0], &mut ChaCha8Rng::seed_from_u64(4));
        let b = draw_scatterers(&r, &mg, [10.0, 0.0, 0.0], &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for d in &a {
            assert!((-PI..PI).contains(&d.angle));
            assert!((-PI..PI).contains(&d.phase));
            assert!(d.magnitude > 0.0);
        }
    }
}
