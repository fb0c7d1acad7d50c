//! Mutual coupling between side-by-side thin dipoles of a linear array.
//!
//! Induced-EMF closed forms with sinusoidal current distributions, referred
//! to the current maxima. The coupling matrix is `M = (Z + r_d I)^{-1}` and
//! the coupled correlation is `M^{1/2} R M^{1/2}` with the principal root.
//! `M` is complex symmetric rather than Hermitian, so that product is not
//! Hermitian in general; [`apply_coupling`] returns its Hermitian part and
//! logs the size of the correction. For nearly rank-deficient `R` the
//! Hermitian part can pick up small negative eigenvalues, which are zeroed.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_defect, hermitian_part, principal_sqrt, CMatrix, HermitianEigen};
use crate::special::{sici, EULER_GAMMA};

/// Free-space wave impedance, ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;

/// Default dissipation resistance, ohms.
pub const DEFAULT_DISSIPATION_OHMS: f64 = 2.0;

/// Condition number above which `Z + r_d I` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `(Si(x), Ci(x))` for `x > 0`.
pub fn sine_cosine_integrals(x: f64) -> Result<(f64, f64)> {
    sici(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Dipole length, m.
    pub dipole_length: f64,
    /// Dissipation resistance `r_d`, ohms.
    pub dissipation: f64,
    /// Element spacing, m.
    pub spacing: f64,
    pub element_count: usize,
}

impl CouplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dissipation > 0.0) {
            return Err(Error::invalid("r_d_ohms", "dissipation resistance must be positive"));
        }
        if !(self.dipole_length > 0.0) {
            return Err(Error::invalid("dipole_length_lambda", "dipole length must be positive"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::invalid("spacing", "element spacing must be positive"));
        }
        if self.element_count == 0 {
            return Err(Error::invalid("element_count", "at least one element"));
        }
        Ok(())
    }
}

/// Mutual impedance of two parallel side-by-side dipoles of length `length`
/// at separation `distance`:
///
/// ```text
/// R21 =  η/4π [2 Ci(u0) − Ci(u1) − Ci(u2)]
/// X21 = −η/4π [2 Si(u0) − Si(u1) − Si(u2)]
/// u0 = k d,  u1 = k (sqrt(d² + l²) + l),  u2 = k (sqrt(d² + l²) − l)
/// ```
pub fn mutual_impedance_sidebyside(length: f64, distance: f64, wavelength: f64) -> Result<Complex64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "dipole separation must be positive, got {distance}"
        )));
    }
    let k = 2.0 * PI / wavelength;
    let hyp = distance.hypot(length);
    let u0 = k * distance;
    let u1 = k * (hyp + length);
    // hyp − l without cancellation
    let u2 = k * distance * distance / (hyp + length);
    let (s0, c0) = sici(u0)?;
    let (s1, c1) = sici(u1)?;
    let (s2, c2) = sici(u2)?;
    let scale = FREE_SPACE_IMPEDANCE / (4.0 * PI);
    Ok(c64(
        scale * (2.0 * c0 - c1 - c2),
        -scale * (2.0 * s0 - s1 - s2),
    ))
}

/// Self-impedance of a thin dipole, the `d → 0` limit of the side-by-side
/// form: `R = η/4π [γ + ln(2kl) − Ci(2kl)]`, `X = η/4π Si(2kl)`.
///
/// For a half-wave dipole this is `73.08 + j42.51` ohms.
pub fn self_impedance(length: f64, wavelength: f64) -> Result<Complex64> {
    if !(length > 0.0) {
        return Err(Error::Domain("dipole length must be positive".into()));
    }
    let x = 2.0 * 2.0 * PI / wavelength * length;
    let (s, c) = sici(x)?;
    let scale = FREE_SPACE_IMPEDANCE / (4.0 * PI);
    Ok(c64(scale * (EULER_GAMMA + x.ln() - c), scale * s))
}

/// Toeplitz impedance matrix: self-impedance on the diagonal, side-by-side
/// mutual impedance at `|q − p| δ` elsewhere.
pub fn impedance_matrix(params: &CouplingParams, wavelength: f64) -> Result<CMatrix> {
    params.validate()?;
    let n = params.element_count;
    let diag = self_impedance(params.dipole_length, wavelength)?;
    let lags: Vec<Complex64> = (1..n)
        .map(|lag| {
            mutual_impedance_sidebyside(params.dipole_length, lag as f64 * params.spacing, wavelength)
        })
        .collect::<Result<_>>()?;
    Ok(CMatrix::from_fn(n, n, |q, p| {
        if q == p {
            diag
        } else {
            lags[q.abs_diff(p) - 1]
        }
    }))
}

/// `M = (Z + r_d I)^{-1}` for an arbitrary impedance matrix.
pub fn coupling_from_impedance(z: &CMatrix, dissipation: f64) -> Result<CMatrix> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch("impedance matrix must be square".into()));
    }
    if !(dissipation > 0.0) {
        return Err(Error::invalid("r_d_ohms", "dissipation resistance must be positive"));
    }
    let n = z.nrows();
    let loaded = z + CMatrix::identity(n, n) * c64(dissipation, 0.0);
    let sv = loaded.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::NearSingularImpedance(cond));
    }
    loaded
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Solver("impedance matrix inversion failed".into()))
}

/// Builds the coupling matrix of a uniform dipole array.
pub fn build_coupling_matrix(params: &CouplingParams, wavelength: f64) -> Result<CMatrix> {
    let z = impedance_matrix(params, wavelength)?;
    coupling_from_impedance(&z, params.dissipation)
}

/// Raw `M^{1/2} R M^{1/2}` with the principal square root of `M`.
pub fn coupled_product(r: &CMatrix, m: &CMatrix) -> Result<CMatrix> {
    if r.shape() != m.shape() {
        return Err(Error::DimensionMismatch(format!(
            "correlation is {:?} but coupling matrix is {:?}",
            r.shape(),
            m.shape()
        )));
    }
    let root = principal_sqrt(m)?;
    Ok(&root * r * &root)
}

/// Coupling-adjusted correlation: Hermitian part of `M^{1/2} R M^{1/2}`.
pub fn apply_coupling(r: &CorrelationMatrix, m: &CMatrix) -> Result<CorrelationMatrix> {
    let raw = coupled_product(&r.entries, m)?;
    let defect = hermitian_defect(&raw);
    if defect > 1e-9 {
        log::debug!("coupled correlation symmetrized (relative anti-Hermitian part {defect:.3e})");
    }
    let mut entries = hermitian_part(&raw);
    let eig = HermitianEigen::new(&entries)?;
    let min = eig.min_value();
    if min < 0.0 {
        log::debug!(
            "coupled correlation projected to PSD (min eigenvalue {min:.3e}, max {:.3e})",
            eig.max_value()
        );
        entries = hermitian_part(&eig.map(|v| v.max(0.0)));
    }
    Ok(CorrelationMatrix {
        entries,
        field: r.field,
        coupling_adjusted: true,
        quad_points: r.quad_points,
    })
}
