//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative threshold below which negative eigenvalues count as round-off.
pub const PSD_CLAMP_REL: f64 = 1e-9;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, with
/// matching unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian eigendecomposition needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermitian_part(m);
        let eig = herm.symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Fails if any eigenvalue is below `-PSD_CLAMP_REL * λ_max`, otherwise
    /// zeroes the small negative ones.
    pub fn clamp_psd(mut self) -> Result<Self> {
        let max = self.max_value().max(0.0);
        let min = self.min_value();
        if min < -PSD_CLAMP_REL * max {
            return Err(Error::NotPsd {
                min_eig: min,
                max_eig: max,
            });
        }
        self.values.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(self)
    }

    /// Eigenpairs of `A ⊗ B` from those of `A` and `B`, sorted ascending.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let (na, nb) = (a.values.len(), b.values.len());
        let mut pairs: Vec<(f64, usize, usize)> = (0..na)
            .flat_map(|i| (0..nb).map(move |j| (i, j)))
            .map(|(i, j)| (a.values[i] * b.values[j], i, j))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let n = na * nb;
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &(_, i, j)) in pairs.iter().enumerate() {
            let col = kron(
                &CMatrix::from_column_slice(na, 1, a.vectors.column(i).as_slice()),
                &CMatrix::from_column_slice(nb, 1, b.vectors.column(j).as_slice()),
            );
            vectors.set_column(dst, &col.column(0));
        }
        Self {
            values: DVector::from_iterator(n, pairs.iter().map(|p| p.0)),
            vectors,
        }
    }

    /// `V diag(f(λ)) V^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= c64(f(self.values[j]), 0.0);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// `‖A − A^H‖_F / ‖A‖_F` (zero for an exactly Hermitian matrix).
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn rel_frobenius(a: &CMatrix, reference: &CMatrix) -> f64 {
    (a - reference).norm() / reference.norm()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Entrywise product.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Hadamard product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Principal square root of a general square complex matrix via the
/// complex Schur form `A = Q T Q^H` and the triangular recurrence
/// `U_ii = sqrt(T_ii)`, `U_ij = (T_ij − Σ_k U_ik U_kj) / (U_ii + U_jj)`.
pub fn principal_sqrt(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix square root needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Solver("complex Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for j in 1..n {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let denom = u[(i, i)] + u[(j, j)];
            if denom.norm() < 1e-300 {
                return Err(Error::Solver(
                    "matrix square root undefined (opposite eigenvalue pair on the branch cut)".into(),
                ));
            }
            u[(i, j)] = s / denom;
        }
    }
    Ok(&q * u * q.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_and_hadamard_shapes() {
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::from_element(3, 3, c64(2.0, 0.0));
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(4, 5)], c64(2.0, 0.0));
        assert_eq!(k[(0, 4)], c64(0.0, 0.0));
        assert!(hadamard(&a, &b).is_err());
    }

    #[test]
    fn principal_sqrt_of_complex_symmetric() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c64(4.0, 1.0),
                c64(0.5, -0.3),
                c64(0.1, 0.2),
                c64(0.5, -0.3),
                c64(3.0, 0.5),
                c64(0.2, 0.0),
                c64(0.1, 0.2),
                c64(0.2, 0.0),
                c64(5.0, -1.0),
            ],
        );
        let s = principal_sqrt(&m).unwrap();
        assert!(rel_frobenius(&(&s * &s), &m) < 1e-12);
        // principal branch: eigenvalues in the right half plane
        assert!(s.diagonal().iter().all(|z| z.re > 0.0));
        // square root of a complex symmetric matrix is symmetric
        assert!((&s - s.transpose()).norm() < 1e-12);
    }

    #[test]
    fn clamp_rejects_indefinite() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.0, 0.0), c64(-0.5, 0.0)]));
        let e = HermitianEigen::new(&m).unwrap().clamp_psd();
        assert!(matches!(e, Err(Error::NotPsd { .. })));
    }
}
