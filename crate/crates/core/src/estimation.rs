//! DFT training, LS and LMMSE estimation of the cascaded channel, and the
//! matching theoretical error covariances.
//!
//! Pilot convention: the transmitted pilot is `sqrt(ρ) s_ℓ` with `|s_ℓ| = 1`
//! and `Q` is built from `s`, so `y = sqrt(ρ) Q c + n` and the LS estimator
//! carries the `1/sqrt(ρ)` prefactor exactly once.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c64, hadamard, kron, trace_re, CMatrix, CVector, HermitianEigen};

/// Largest `M·K` accepted by the LMMSE path (the covariance is `MK × MK`).
pub const MAX_LMMSE_DIM: usize = 4096;

/// Training schedule: length and unit-modulus pilot symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub training_length: usize,
    pub pilots: Vec<Complex64>,
}

impl TrainingConfig {
    /// All-ones pilots.
    pub fn unit(training_length: usize) -> Self {
        Self {
            training_length,
            pilots: vec![c64(1.0, 0.0); training_length],
        }
    }

    pub fn validate(&self, ris_elements: usize) -> Result<()> {
        if self.training_length < ris_elements {
            return Err(Error::invalid(
                "T_p",
                format!(
                    "training length {} is shorter than the RIS size {ris_elements}; the cascaded channel is not identifiable",
                    self.training_length
                ),
            ));
        }
        if self.pilots.len() != self.training_length {
            return Err(Error::DimensionMismatch(format!(
                "{} pilots for a training length of {}",
                self.pilots.len(),
                self.training_length
            )));
        }
        if let Some(i) = self.pilots.iter().position(|s| (s.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid(
                "pilots",
                format!("pilot {i} is not unit-modulus"),
            ));
        }
        Ok(())
    }
}

/// `Φ[ℓ, k] = exp(−j 2π ℓ k / T_p)`, zero-based `ℓ`, `k`.
pub fn dft_phase_matrix(training_length: usize, ris_elements: usize) -> Result<CMatrix> {
    if training_length < ris_elements {
        return Err(Error::invalid(
            "T_p",
            format!(
                "training length {training_length} < RIS size {ris_elements}: not identifiable"
            ),
        ));
    }
    let tp = training_length as f64;
    Ok(CMatrix::from_fn(training_length, ris_elements, |l, k| {
        // reduce the exponent modulo T_p to keep the argument small
        let idx = (l * k) % training_length;
        Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / tp)
    }))
}

/// `Q = X Ψ` with `Ψ = Φ ⊗ I_M` and `X = diag(s_1 1_M, …, s_{T_p} 1_M)`.
pub fn assemble_q(phases: &CMatrix, pilots: &[Complex64], bs_antennas: usize) -> Result<CMatrix> {
    if pilots.len() != phases.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} pilots for {} training slots",
            pilots.len(),
            phases.nrows()
        )));
    }
    if bs_antennas == 0 {
        return Err(Error::invalid("M", "at least one BS antenna"));
    }
    if let Some(i) = pilots.iter().position(|s| (s.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::invalid("pilots", format!("pilot {i} is not unit-modulus")));
    }
    let mut q = kron(phases, &CMatrix::identity(bs_antennas, bs_antennas));
    for (slot, s) in pilots.iter().enumerate() {
        for m in 0..bs_antennas {
            let mut row = q.row_mut(slot * bs_antennas + m);
            row *= *s;
        }
    }
    Ok(q)
}

/// Circularly-symmetric complex Gaussian vector with per-entry variance
/// `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> CVector {
    let sd = (0.5 * variance).sqrt();
    CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(sd * re, sd * im)
    })
}

/// `y = sqrt(ρ) Q c + n` with `n ~ CN(0, σ² I)`.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    q: &CMatrix,
    c: &CVector,
    pilot_power: f64,
    noise_variance: f64,
    rng: &mut R,
) -> Result<CVector> {
    if q.ncols() != c.len() {
        return Err(Error::DimensionMismatch(format!(
            "Q has {} columns, c has {} entries",
            q.ncols(),
            c.len()
        )));
    }
    let noise = complex_gaussian(q.nrows(), noise_variance, rng);
    Ok(q * c * c64(pilot_power.sqrt(), 0.0) + noise)
}

/// `ĉ = (1/sqrt(ρ)) (Q^H Q)^{-1} Q^H y`.
pub fn ls_estimate(y: &CVector, q: &CMatrix, pilot_power: f64) -> Result<CVector> {
    if y.len() != q.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "y has {} entries, Q has {} rows",
            y.len(),
            q.nrows()
        )));
    }
    if !(pilot_power > 0.0) {
        return Err(Error::invalid("rho", "pilot power must be positive"));
    }
    if q.nrows() < q.ncols() {
        return Err(Error::Solver(format!(
            "Q is {}x{}: rank deficient",
            q.nrows(),
            q.ncols()
        )));
    }
    let gram = q.adjoint() * q;
    let eig = HermitianEigen::new(&gram)?;
    if eig.min_value() <= 1e-12 * eig.max_value() {
        return Err(Error::Solver("Q is rank deficient".into()));
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Solver("Q^H Q is not positive definite".into()))?;
    Ok(chol.solve(&(q.adjoint() * y)) * c64(1.0 / pilot_power.sqrt(), 0.0))
}

/// `ĉ = sqrt(ρ) R Q^H (ρ Q R Q^H + σ² I)^{-1} y`, via a Cholesky solve.
pub fn lmmse_estimate(
    y: &CVector,
    q: &CMatrix,
    pilot_power: f64,
    noise_variance: f64,
    rcc: &CMatrix,
) -> Result<CVector> {
    if y.len() != q.nrows() || rcc.nrows() != q.ncols() || !rcc.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "y: {}, Q: {}x{}, R_cc: {}x{}",
            y.len(),
            q.nrows(),
            q.ncols(),
            rcc.nrows(),
            rcc.ncols()
        )));
    }
    if rcc.nrows() > MAX_LMMSE_DIM {
        return Err(Error::invalid(
            "M*K",
            format!("LMMSE limited to M*K <= {MAX_LMMSE_DIM}, got {}", rcc.nrows()),
        ));
    }
    if !(noise_variance > 0.0) {
        return Err(Error::invalid("sigma2", "noise variance must be positive"));
    }
    let n = q.nrows();
    let qr = q * rcc;
    let mut sigma = &qr * q.adjoint() * c64(pilot_power, 0.0);
    for i in 0..n {
        sigma[(i, i)] += noise_variance;
    }
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Solver("measurement covariance is not positive definite".into()))?;
    let x = chol.solve(y);
    // R Q^H = (Q R)^H for Hermitian R
    Ok(qr.adjoint() * x * c64(pilot_power.sqrt(), 0.0))
}

/// `R_e,LS = I/(γ T_p)` and `R_e,LMMSE = (R_cc^{-1} + γ T_p I)^{-1}`, the
/// latter through the eigenvalue map `λ → λ / (1 + γ T_p λ)`.
pub fn theoretical_error_covariances(
    snr: f64,
    training_length: usize,
    rcc: &CMatrix,
) -> Result<(CMatrix, CMatrix)> {
    if !(snr > 0.0) || training_length == 0 {
        return Err(Error::invalid("gamma", "SNR and training length must be positive"));
    }
    let gt = snr * training_length as f64;
    let n = rcc.nrows();
    let ls = CMatrix::identity(n, n) * c64(1.0 / gt, 0.0);
    let eig = HermitianEigen::new(rcc)?.clamp_psd()?;
    let lmmse = eig.map(|l| l / (1.0 + gt * l));
    Ok((ls, lmmse))
}

/// `tr(R_e) / tr(R_cc)`.
pub fn nmse(error_cov: &CMatrix, rcc: &CMatrix) -> Result<f64> {
    let denom = trace_re(rcc);
    if !(denom > 0.0) {
        return Err(Error::Domain("channel covariance has non-positive trace".into()));
    }
    Ok(trace_re(error_cov) / denom)
}

/// Cascaded covariance `(R_RU ⊙ R_RB) ⊗ R_BR`, optionally with `R_RB`
/// transposed. The transposed form is the covariance of
/// `vec(R_BR^{1/2} H̃ R_RB^{1/2} diag(h))` for Hermitian square roots.
pub fn cascaded_covariance(
    r_ru: &CMatrix,
    r_rb: &CMatrix,
    r_br: &CMatrix,
    transpose_rrb: bool,
) -> Result<CMatrix> {
    Ok(kron(&ris_factor(r_ru, r_rb, transpose_rrb)?, r_br))
}

/// RIS-side factor `R_RU ⊙ R_RB` (or `R_RU ⊙ R_RB^T`) of the cascaded
/// covariance.
pub fn ris_factor(r_ru: &CMatrix, r_rb: &CMatrix, transpose_rrb: bool) -> Result<CMatrix> {
    if transpose_rrb {
        hadamard(r_ru, &r_rb.transpose())
    } else {
        hadamard(r_ru, r_rb)
    }
}

/// LMMSE operator specialised to orthogonal training (`Q^H Q = T_p I`),
/// built once per prior covariance from its eigendecomposition.
///
/// With orthogonal training the estimator collapses to
/// `ĉ = V diag(sqrt(ρ) λ / (ρ T_p λ + σ²)) V^H Q^H y`, which also covers a
/// singular prior.
#[derive(Debug, Clone)]
pub struct OrthogonalLmmse {
    eig: HermitianEigen,
    training_length: usize,
}

impl OrthogonalLmmse {
    pub fn new(rcc: &CMatrix, training_length: usize) -> Result<Self> {
        if rcc.nrows() > MAX_LMMSE_DIM {
            return Err(Error::invalid(
                "M*K",
                format!("LMMSE limited to M*K <= {MAX_LMMSE_DIM}, got {}", rcc.nrows()),
            ));
        }
        Ok(Self {
            eig: HermitianEigen::new(rcc)?.clamp_psd()?,
            training_length,
        })
    }

    /// Same operator for `R_cc = ris ⊗ bs`, from the two small factors.
    pub fn from_kronecker(ris: &CMatrix, bs: &CMatrix, training_length: usize) -> Result<Self> {
        let dim = ris.nrows() * bs.nrows();
        if dim > MAX_LMMSE_DIM {
            return Err(Error::invalid(
                "M*K",
                format!("LMMSE limited to M*K <= {MAX_LMMSE_DIM}, got {dim}"),
            ));
        }
        let a = HermitianEigen::new(ris)?.clamp_psd()?;
        let b = HermitianEigen::new(bs)?.clamp_psd()?;
        Ok(Self {
            eig: HermitianEigen::kron(&a, &b),
            training_length,
        })
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    /// Per-eigenmode gain applied to `V^H Q^H y`.
    pub fn gains(&self, pilot_power: f64, noise_variance: f64) -> Vec<f64> {
        let tp = self.training_length as f64;
        self.eig
            .values
            .iter()
            .map(|&l| pilot_power.sqrt() * l / (pilot_power * tp * l + noise_variance))
            .collect()
    }

    /// Estimate from the matched-filter output `z = Q^H y`.
    pub fn estimate(&self, matched: &CVector, pilot_power: f64, noise_variance: f64) -> CVector {
        let mut rotated = self.eig.vectors.adjoint() * matched;
        for (z, g) in rotated.iter_mut().zip(self.gains(pilot_power, noise_variance)) {
            *z *= g;
        }
        &self.eig.vectors * rotated
    }

    /// Rotates a vector into the eigenbasis (`V^H x`).
    pub fn rotate(&self, x: &CVector) -> CVector {
        self.eig.vectors.adjoint() * x
    }

    /// `‖ĉ − c‖²` computed in the eigenbasis, given `V^H c`, `V^H Q^H Q c`
    /// and `V^H Q^H n₀` for unit-variance noise `n₀`.
    pub fn error_energy(
        &self,
        channel: &CVector,
        signal: &CVector,
        noise: &CVector,
        pilot_power: f64,
        noise_variance: f64,
    ) -> f64 {
        let sr = pilot_power.sqrt();
        let sn = noise_variance.sqrt();
        self.gains(pilot_power, noise_variance)
            .iter()
            .enumerate()
            .map(|(i, &g)| (g * (signal[i] * sr + noise[i] * sn) - channel[i]).norm_sqr())
            .sum()
    }

    /// `tr((R^{-1} + γ T_p I)^{-1})`.
    pub fn theory_trace(&self, snr: f64) -> f64 {
        let gt = snr * self.training_length as f64;
        self.eig.values.iter().map(|&l| l / (1.0 + gt * l)).sum()
    }
}

/// Checks `Q^H Q = T_p I` to within `tol` (max-abs entry).
pub fn is_orthogonal_training(q: &CMatrix, training_length: usize, tol: f64) -> bool {
    let gram = q.adjoint() * q;
    let n = gram.nrows();
    let target = CMatrix::identity(n, n) * c64(training_length as f64, 0.0);
    (gram - target).iter().all(|z| z.norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_first_row_and_two_by_two() {
        let phi = dft_phase_matrix(4, 3).unwrap();
        assert!(phi.row(0).iter().all(|z| (*z - c64(1.0, 0.0)).norm() < 1e-15));
        let phi = dft_phase_matrix(2, 2).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0)],
        );
        assert!((phi - expected).norm() < 1e-15);
        assert!(dft_phase_matrix(2, 3).is_err());
    }

    #[test]
    fn single_antenna_q_is_pilot_scaled_phases() {
        let phi = dft_phase_matrix(3, 3).unwrap();
        let pilots = [c64(1.0, 0.0), c64(0.0, 1.0), c64(-1.0, 0.0)];
        let q = assemble_q(&phi, &pilots, 1).unwrap();
        let diag = CMatrix::from_diagonal(&CVector::from_row_slice(&pilots));
        assert!((q - diag * phi).norm() < 1e-15);
    }

    #[test]
    fn q_rejects_bad_pilots() {
        let phi = dft_phase_matrix(2, 2).unwrap();
        assert!(assemble_q(&phi, &[c64(1.0, 0.0), c64(0.5, 0.0)], 2).is_err());
        assert!(assemble_q(&phi, &[c64(1.0, 0.0)], 2).is_err());
    }

    #[test]
    fn training_config_identifiability() {
        assert!(TrainingConfig::unit(4).validate(4).is_ok());
        assert!(TrainingConfig::unit(3).validate(4).is_err());
    }

    #[test]
    fn ls_rank_deficiency() {
        let q = CMatrix::from_element(4, 2, c64(1.0, 0.0));
        let y = CVector::zeros(4);
        assert!(matches!(ls_estimate(&y, &q, 1.0), Err(Error::Solver(_))));
    }

    #[test]
    fn theory_covariances_substitution() {
        let rcc = CMatrix::identity(4, 4);
        let (ls, lmmse) = theoretical_error_covariances(1.0, 4, &rcc).unwrap();
        assert!((ls - CMatrix::identity(4, 4) * c64(0.25, 0.0)).norm() < 1e-15);
        assert!((lmmse - CMatrix::identity(4, 4) * c64(0.2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn nmse_edge_cases() {
        let r = CMatrix::identity(3, 3) * c64(2.0, 0.0);
        assert!((nmse(&r, &r).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(nmse(&CMatrix::zeros(3, 3), &r).unwrap(), 0.0);
        assert!(nmse(&r, &CMatrix::zeros(3, 3)).is_err());
        // γ = 1, T_p = MK, tr(R_cc) = 1
        let mk = 6;
        let (ls, _) = theoretical_error_covariances(1.0, mk, &CMatrix::identity(mk, mk)).unwrap();
        let mut rcc = CMatrix::zeros(mk, mk);
        rcc[(0, 0)] = c64(1.0, 0.0);
        assert!((nmse(&ls, &rcc).unwrap() - 1.0).abs() < 1e-14);
    }
}
