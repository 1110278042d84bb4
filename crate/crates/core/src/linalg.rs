//! Dense complex matrix helpers shared by every module.
//!
//! All operators (Hamiltonian, propagators, restoring unitaries, density
//! matrices) are carried as [`ComplexMatrix`]. Structural properties are not
//! encoded in types; they are checked at the point of use with the
//! tolerances below.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_norm(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

pub fn unitarity_error(m: &ComplexMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let id = ComplexMatrix::identity(m.nrows(), m.ncols());
    max_abs_diff(&prod, &id)
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    check_square(m)?;
    let err = hermiticity_error(m);
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

pub fn check_unitary(m: &ComplexMatrix) -> Result<()> {
    check_square(m)?;
    let err = unitarity_error(m);
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

/// Hermitian, unit trace, and positive semidefinite up to [`PSD_TOL`].
pub fn check_density(m: &ComplexMatrix) -> Result<()> {
    check_density_with(m, HERMITIAN_TOL, TRACE_TOL)
}

/// Density check with caller-chosen Hermiticity and trace tolerances, for
/// matrices produced by long floating-point pipelines.
pub fn check_density_with(m: &ComplexMatrix, herm_tol: f64, trace_tol: f64) -> Result<()> {
    check_square(m)?;
    let herm = hermiticity_error(m);
    if herm > herm_tol {
        return Err(Error::NotDensity(format!("Hermiticity error {herm:e}")));
    }
    let tr = m.trace();
    if (tr - ONE).norm() > trace_tol {
        return Err(Error::NotDensity(format!("trace {tr}")));
    }
    let min_eig = min_eigenvalue_hermitian(m);
    if min_eig < -PSD_TOL {
        return Err(Error::NotDensity(format!(
            "negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue_hermitian(m: &ComplexMatrix) -> f64 {
    let h = hermitian_part(m);
    h.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `|psi><psi|`
pub fn outer(psi: &[C64]) -> ComplexMatrix {
    let n = psi.len();
    ComplexMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Reference implementation used to cross-check the eigendecomposition
/// propagator; it is not on any hot path.
pub fn expm_scaling_squaring(a: &ComplexMatrix) -> ComplexMatrix {
    let n = check_square(a).expect("expm requires a square matrix");
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.25 {
        (norm1 / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::new(2f64.powi(-squarings), 0.0);

    let mut result = ComplexMatrix::identity(n, n);
    let mut term = ComplexMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if max_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_x_rotation() {
        let theta = 0.7;
        let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let u = expm_scaling_squaring(&(x * C64::new(0.0, theta)));
        let expected = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(theta.cos(), 0.0),
                C64::new(0.0, theta.sin()),
                C64::new(0.0, theta.sin()),
                C64::new(theta.cos(), 0.0),
            ],
        );
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }

    #[test]
    fn density_checks() {
        let rho = outer(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        check_density(&rho).unwrap();

        let mut bad = rho.clone();
        bad[(0, 0)] += C64::new(0.1, 0.0);
        assert!(matches!(check_density(&bad), Err(Error::NotDensity(_))));

        let neg = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.5, 0.0),
            C64::new(-0.5, 0.0),
        ]));
        assert!(matches!(check_density(&neg), Err(Error::NotDensity(_))));
    }

    #[test]
    fn unitarity_detects_scaling() {
        let m = ComplexMatrix::identity(3, 3) * C64::new(1.001, 0.0);
        assert!(check_unitary(&m).is_err());
        check_unitary(&ComplexMatrix::identity(3, 3)).unwrap();
    }
}
