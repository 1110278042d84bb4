//! Evolution operator `V(τ) = exp(−iHτ)` from a cached eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::chain::{block_max_norm, GradedBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64};

/// Tolerance for the odd-parity blocks of a parity-structured operator.
pub const PARITY_TOL: f64 = 1e-12;

/// `H = Q diag(w) Q†` with `w` ascending.
#[derive(Debug, Clone)]
pub struct EigenCache {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub tau: f64,
    pub matrix: ComplexMatrix,
}

pub fn diagonalize(h: &ComplexMatrix) -> Result<EigenCache> {
    linalg::check_hermitian(h)?;
    let n = h.nrows();
    let (values, vectors): (Vec<f64>, ComplexMatrix) = if h.iter().all(|z| z.im == 0.0) {
        let real = DMatrix::from_fn(n, n, |i, j| h[(i, j)].re);
        let eig = SymmetricEigen::new(real);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(linalg::hermitian_part(h));
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = perm.iter().map(|&k| values[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vectors[(i, perm[j])]);
    Ok(EigenCache {
        eigenvalues,
        vectors,
    })
}

impl EigenCache {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn phases(&self, tau: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.dim(),
            self.eigenvalues
                .iter()
                .map(|&w| C64::from_polar(1.0, -w * tau)),
        )
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&w| C64::new(w, 0.0)),
        );
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[j];
        }
        scaled * self.vectors.adjoint()
    }

    pub fn evolve(&self, tau: f64) -> Result<Propagator> {
        if !tau.is_finite() {
            return Err(Error::NonFiniteTime(tau));
        }
        let phases = self.phases(tau);
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        Ok(Propagator {
            tau,
            matrix: scaled * self.vectors.adjoint(),
        })
    }

    /// Selected columns of `V(τ)`, i.e. the images of the given basis states.
    pub fn evolve_columns(&self, tau: f64, columns: &[usize]) -> Result<ComplexMatrix> {
        if !tau.is_finite() {
            return Err(Error::NonFiniteTime(tau));
        }
        let phases = self.phases(tau);
        let n = self.dim();
        // (Q† e_c) scaled by the phases, then mapped back with Q
        let mut coeffs = ComplexMatrix::zeros(n, columns.len());
        for (k, &c) in columns.iter().enumerate() {
            for j in 0..n {
                coeffs[(j, k)] = self.vectors[(c, j)].conj() * phases[j];
            }
        }
        Ok(&self.vectors * coeffs)
    }
}

/// First `(n, m)` block with odd `n − m` whose max norm exceeds `tol`.
pub fn parity_violation(
    m: &ComplexMatrix,
    basis: &GradedBasis,
    tol: f64,
) -> Option<(usize, usize, f64)> {
    let n = basis.n_spins();
    for r in 0..=n {
        for c in 0..=n {
            if (r + c) % 2 == 1 {
                let norm = block_max_norm(m, basis, r, c);
                if norm > tol {
                    return Some((r, c, norm));
                }
            }
        }
    }
    None
}

pub fn check_parity_structure(m: &ComplexMatrix, basis: &GradedBasis) -> Result<()> {
    if m.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: m.nrows(),
        });
    }
    match parity_violation(m, basis, PARITY_TOL) {
        Some((row, col, norm)) => Err(Error::ParityViolation { row, col, norm }),
        None => Ok(()),
    }
}

/// Largest entry over all odd-parity blocks.
pub fn odd_block_max_norm(m: &ComplexMatrix, basis: &GradedBasis) -> f64 {
    let n = basis.n_spins();
    let mut worst: f64 = 0.0;
    for r in 0..=n {
        for c in 0..=n {
            if (r + c) % 2 == 1 {
                worst = worst.max(block_max_norm(m, basis, r, c));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_xy_hamiltonian, ChainConfig};
    use crate::linalg::{expm_scaling_squaring, max_abs_diff, unitarity_error};
    use std::f64::consts::PI;

    fn setup(n: usize) -> (GradedBasis, ComplexMatrix, EigenCache) {
        let b = GradedBasis::new(n).unwrap();
        let h = build_xy_hamiltonian(&ChainConfig::new(n, 1.0).unwrap(), &b).unwrap();
        let eig = diagonalize(&h).unwrap();
        (b, h, eig)
    }

    #[test]
    fn two_site_spectrum() {
        let (_, _, eig) = setup(2);
        let w = eig.eigenvalues();
        let expected = [-0.5, 0.0, 0.0, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_matrix_spectrum() {
        let eig = diagonalize(&ComplexMatrix::zeros(5, 5)).unwrap();
        assert!(eig.eigenvalues().iter().all(|&w| w == 0.0));
        assert!(unitarity_error(eig.eigenvectors()) < 1e-12);
    }

    #[test]
    fn six_site_spectrum_is_symmetric() {
        let (_, h, eig) = setup(6);
        let w = eig.eigenvalues();
        let n = w.len();
        for k in 0..n {
            assert!((w[k] + w[n - 1 - k]).abs() < 1e-10);
        }
        assert!(max_abs_diff(&eig.reconstruct(), &h) < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(diagonalize(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn identity_at_zero_time() {
        let (_, _, eig) = setup(5);
        let v = eig.evolve(0.0).unwrap();
        assert!(max_abs_diff(&v.matrix, &ComplexMatrix::identity(32, 32)) < 1e-13);
        assert!(matches!(eig.evolve(f64::NAN), Err(Error::NonFiniteTime(_))));
    }

    #[test]
    fn two_site_pair_flip() {
        let (b, _, eig) = setup(2);
        let v = eig.evolve(PI).unwrap().matrix;
        let g = b.index_of(0b00);
        let e = b.index_of(0b11);
        assert!((v[(e, g)].norm() - 1.0).abs() < 1e-13);
        assert!(v[(g, g)].norm() < 1e-13);
    }

    #[test]
    fn registration_time_structure() {
        let (b, _, eig) = setup(6);
        let v = eig.evolve(55.5352).unwrap().matrix;
        assert!(unitarity_error(&v) < 1e-10);
        assert!(odd_block_max_norm(&v, &b) <= 1e-12);
        check_parity_structure(&v, &b).unwrap();
    }

    #[test]
    fn matches_scaling_and_squaring() {
        for n in 2..=4 {
            let (_, h, eig) = setup(n);
            for &tau in &[0.3, 2.0, 17.5] {
                let v = eig.evolve(tau).unwrap().matrix;
                let oracle = expm_scaling_squaring(&(&h * C64::new(0.0, -tau)));
                assert!(max_abs_diff(&v, &oracle) < 1e-9, "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn columns_match_full_propagator() {
        let (_, _, eig) = setup(5);
        let v = eig.evolve(3.7).unwrap().matrix;
        let cols = eig.evolve_columns(3.7, &[0, 4, 9]).unwrap();
        for (k, &c) in [0usize, 4, 9].iter().enumerate() {
            for i in 0..32 {
                assert!((cols[(i, k)] - v[(i, c)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn group_law_and_inverse() {
        let (_, _, eig) = setup(4);
        let (t1, t2) = (12.25, 71.5);
        let a = eig.evolve(t1).unwrap().matrix;
        let b = eig.evolve(t2).unwrap().matrix;
        let ab = eig.evolve(t1 + t2).unwrap().matrix;
        assert!(max_abs_diff(&(a.clone() * b), &ab) < 1e-9);
        let minus = eig.evolve(-t1).unwrap().matrix;
        assert!(max_abs_diff(&minus, &a.adjoint()) < 1e-10);
    }

    #[test]
    fn parity_check_reports_block() {
        let b = GradedBasis::new(2).unwrap();
        let mut m = ComplexMatrix::identity(4, 4);
        m[(0, 1)] = C64::new(0.1, 0.0);
        match check_parity_structure(&m, &b) {
            Err(Error::ParityViolation { row, col, .. }) => assert_eq!((row, col), (0, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
