//! Channel realizations.
//!
//! Two generators live here. The Kronecker generator colors iid MG-magnitude
//! entries with Hermitian square roots of the spatial correlations; it is
//! what the Monte Carlo runner uses. The direct spherical-wave generator sums
//! ring scatterers path by path and serves as the ground truth the
//! correlation builders are checked against.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::correlation::{hermitian_sqrt, PropagationParams};
use crate::error::{Error, Result};
use crate::geometry::{scatterer_distance_at, ClusterRing, ScattererDraw, UlaGeometry};
use crate::linalg::{CMatrix, CVector};
use crate::mgdist::MgParams;

/// MG magnitude law together with its second-moment normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingLaw {
    mg: MgParams,
    norm: f64,
}

impl FadingLaw {
    pub fn new(mg: MgParams) -> Self {
        let norm = mg.second_moment().sqrt();
        Self { mg, norm }
    }

    /// Raw magnitudes, `E[|entry|²] = E[X²]`. Used when the fading power
    /// itself is the quantity under study.
    pub fn unnormalized(mg: MgParams) -> Self {
        Self { mg, norm: 1.0 }
    }

    pub fn mg(&self) -> &MgParams {
        &self.mg
    }

    /// `s = sqrt(E[X²])`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    /// `(X / s) e^{jφ}` with `φ` uniform on `[-π, π)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let magnitude = self.mg.sample(rng) / self.norm;
        let phase = -PI + 2.0 * PI * rng.random::<f64>();
        Complex64::from_polar(magnitude, phase)
    }
}

/// Matrix of iid zero-mean, unit-second-moment MG-magnitude entries.
pub fn sample_iid_mg_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    law: &FadingLaw,
    rng: &mut R,
) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = law.sample(rng);
        }
    }
    m
}

/// Kronecker-correlated channel `R_rx^{1/2} H̃ R_tx^{1/2}`, or
/// `R^{1/2} h̃` when there is no transmit-side correlation.
#[derive(Debug, Clone)]
pub struct KroneckerChannel {
    rx_root: CMatrix,
    tx_root: Option<CMatrix>,
}

impl KroneckerChannel {
    pub fn new(rx: &CMatrix, tx: Option<&CMatrix>) -> Result<Self> {
        Ok(Self {
            rx_root: hermitian_sqrt(rx)?,
            tx_root: tx.map(hermitian_sqrt).transpose()?,
        })
    }

    /// Builds from already computed square-root factors.
    pub fn from_roots(rx_root: CMatrix, tx_root: Option<CMatrix>) -> Result<Self> {
        if !rx_root.is_square() || tx_root.as_ref().is_some_and(|t| !t.is_square()) {
            return Err(Error::DimensionMismatch("correlation roots must be square".into()));
        }
        Ok(Self { rx_root, tx_root })
    }

    pub fn rows(&self) -> usize {
        self.rx_root.nrows()
    }

    pub fn cols(&self) -> usize {
        self.tx_root.as_ref().map_or(1, |t| t.nrows())
    }

    pub fn rx_root(&self) -> &CMatrix {
        &self.rx_root
    }

    pub fn tx_root(&self) -> Option<&CMatrix> {
        self.tx_root.as_ref()
    }

    /// Colors a given iid draw of shape `rows × cols`.
    pub fn color(&self, iid: &CMatrix) -> Result<CMatrix> {
        if iid.nrows() != self.rows() || iid.ncols() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "iid draw is {}x{}, channel expects {}x{}",
                iid.nrows(),
                iid.ncols(),
                self.rows(),
                self.cols()
            )));
        }
        let left = &self.rx_root * iid;
        Ok(match &self.tx_root {
            Some(tx) => left * tx,
            None => left,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, law: &FadingLaw, rng: &mut R) -> CMatrix {
        let iid = sample_iid_mg_matrix(self.rows(), self.cols(), law, rng);
        self.color(&iid).expect("draw matches channel shape")
    }
}

/// One-shot form: colors a fresh iid draw with the given correlations.
pub fn kronecker_channel<R: Rng + ?Sized>(
    rx: &CMatrix,
    tx: Option<&CMatrix>,
    law: &FadingLaw,
    rng: &mut R,
) -> Result<CMatrix> {
    Ok(KroneckerChannel::new(rx, tx)?.sample(law, rng))
}

fn check_draws(rings: &[ClusterRing], draws: &[Vec<ScattererDraw>]) -> Result<()> {
    if rings.len() != draws.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rings but {} scatterer sets",
            rings.len(),
            draws.len()
        )));
    }
    Ok(())
}

/// Spherical-wave channel, vector form: for each scatterer the whole
/// distance vector `d_n` is formed and
/// `h̃_n d_n^0 e^{−jk t_n + (K_a/2) d_n^0 + jψ_n} (1/d_n ⊙ e^{−jk d_n − (K_a/2) d_n})`
/// is accumulated with weight `sqrt(Ω ε_l / N_l)`.
pub fn direct_swm_channel(
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    draws: &[Vec<ScattererDraw>],
) -> Result<CVector> {
    check_draws(rings, draws)?;
    let k = prop.wavenumber();
    let ka = prop.absorption;
    let offsets: Vec<f64> = geom
        .indices()
        .map(|q| q as f64 * geom.spacing())
        .collect();
    let mut h = CVector::zeros(geom.element_count());
    let mut dist = vec![0.0; offsets.len()];
    for (ring, set) in rings.iter().zip(draws) {
        if set.is_empty() {
            continue;
        }
        let ring_scale = (prop.total_power * ring.power_fraction / set.len() as f64).sqrt();
        for s in set {
            let d0 = scatterer_distance_at(ring, s.angle, 0.0);
            for (d, &off) in dist.iter_mut().zip(&offsets) {
                *d = scatterer_distance_at(ring, s.angle, off);
            }
            let common = Complex64::from_polar(
                ring_scale * s.magnitude * d0 * (0.5 * ka * d0).exp(),
                -k * s.source_distance + s.phase,
            );
            for (hq, &dq) in h.iter_mut().zip(&dist) {
                *hq += common * Complex64::from_polar((-0.5 * ka * dq).exp() / dq, -k * dq);
            }
        }
    }
    Ok(h)
}

/// Spherical-wave coefficient of a single element (signed index `q`),
/// summed path by path.
pub fn direct_swm_coefficient(
    q: i64,
    geom: &UlaGeometry,
    rings: &[ClusterRing],
    prop: &PropagationParams,
    draws: &[Vec<ScattererDraw>],
) -> Result<Complex64> {
    check_draws(rings, draws)?;
    let k = prop.wavenumber();
    let ka = prop.absorption;
    let mut sum = Complex64::new(0.0, 0.0);
    for (ring, set) in rings.iter().zip(draws) {
        let weight = (ring.power_fraction / set.len().max(1) as f64).sqrt();
        for s in set {
            let dn = scatterer_distance_at(ring, s.angle, 0.0);
            let dqn = scatterer_distance_at(ring, s.angle, q as f64 * geom.spacing());
            let amp = weight * s.magnitude * dn / dqn * (-0.5 * ka * (dqn - dn)).exp();
            sum += Complex64::from_polar(amp, -k * (s.source_distance + dqn) + s.phase);
        }
    }
    Ok(sum * prop.total_power.sqrt())
}

/// One cascaded-channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// UE–RIS channel, length `K`.
    pub h_ru: CVector,
    /// RIS–BS channel, `M × K`.
    pub h_br: CMatrix,
    /// Cascaded channel `H_BR diag(h_RU)`, `M × K`.
    pub cascaded: CMatrix,
    /// Column-major vectorization of `cascaded`: index `k M + m`.
    pub c: CVector,
}

/// Forms `C = H_BR diag(h_RU)` and its column-stacked vector.
pub fn cascade(h_ru: &CVector, h_br: &CMatrix) -> Result<ChannelRealization> {
    if h_br.ncols() != h_ru.len() {
        return Err(Error::DimensionMismatch(format!(
            "H_BR has {} columns but h_RU has {} entries",
            h_br.ncols(),
            h_ru.len()
        )));
    }
    let mut cascaded = h_br.clone();
    for (k, mut col) in cascaded.column_iter_mut().enumerate() {
        col *= h_ru[k];
    }
    // nalgebra storage is column-major, which is exactly the stacking order
    let c = CVector::from_column_slice(cascaded.as_slice());
    Ok(ChannelRealization {
        h_ru: h_ru.clone(),
        h_br: h_br.clone(),
        cascaded,
        c,
    })
}

/// Samples cascaded channels from the Kronecker model of both hops.
#[derive(Debug, Clone)]
pub struct CascadedChannelModel {
    pub ue_link: KroneckerChannel,
    pub bs_link: KroneckerChannel,
    pub ue_fading: FadingLaw,
    pub bs_fading: FadingLaw,
}

impl CascadedChannelModel {
    /// `r_ru`: K×K UE–RIS correlation. `r_br`: M×M BS-side and `r_rb`: K×K
    /// RIS-side correlations of the RIS–BS hop.
    pub fn new(
        r_ru: &CMatrix,
        r_br: &CMatrix,
        r_rb: &CMatrix,
        ue_fading: FadingLaw,
        bs_fading: FadingLaw,
    ) -> Result<Self> {
        if r_ru.nrows() != r_rb.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "UE-RIS correlation is {0}x{0} but RIS-side BS-link correlation is {1}x{1}",
                r_ru.nrows(),
                r_rb.nrows()
            )));
        }
        Ok(Self {
            ue_link: KroneckerChannel::new(r_ru, None)?,
            bs_link: KroneckerChannel::new(r_br, Some(r_rb))?,
            ue_fading,
            bs_fading,
        })
    }

    pub fn ris_elements(&self) -> usize {
        self.ue_link.rows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.bs_link.rows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let h_ru = self.ue_link.sample(&self.ue_fading, rng);
        let h_br = self.bs_link.sample(&self.bs_fading, rng);
        let h_ru = CVector::from_column_slice(h_ru.as_slice());
        cascade(&h_ru, &h_br).expect("model dimensions are consistent")
    }
}
