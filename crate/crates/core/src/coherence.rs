//! Multiple-quantum coherence decomposition.
//!
//! Entry `ρ_ij` with bra excitation `a = exc(i)` and ket excitation
//! `b = exc(j)` belongs to order `b − a`, so positive orders sit above the
//! block diagonal in graded order.

use std::collections::BTreeMap;

use crate::chain::GradedBasis;
use crate::error::{Error, Result};
use crate::linalg::{max_norm, ComplexMatrix};
use crate::propagator::check_parity_structure;

/// Populated orders are those whose matrix exceeds this max norm.
pub const ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CoherenceDecomposition {
    pub order_matrices: BTreeMap<i32, ComplexMatrix>,
}

impl CoherenceDecomposition {
    pub fn order(&self, n: i32) -> Option<&ComplexMatrix> {
        self.order_matrices.get(&n)
    }

    /// Orders whose matrix has max norm above `tol`.
    pub fn populated(&self, tol: f64) -> Vec<i32> {
        self.order_matrices
            .iter()
            .filter(|(_, m)| max_norm(m) > tol)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn sum(&self) -> ComplexMatrix {
        let mut it = self.order_matrices.values();
        let first = it
            .next()
            .expect("decomposition has at least order 0")
            .clone();
        it.fold(first, |acc, m| acc + m)
    }

    /// Max norm over all odd orders.
    pub fn odd_max_norm(&self) -> f64 {
        self.order_matrices
            .iter()
            .filter(|(n, _)| *n % 2 != 0)
            .fold(0.0f64, |acc, (_, m)| acc.max(max_norm(m)))
    }
}

pub fn coherence_order(basis: &GradedBasis, row: usize, col: usize) -> i32 {
    basis.excitation(col) as i32 - basis.excitation(row) as i32
}

pub fn decompose(rho: &ComplexMatrix, basis: &GradedBasis) -> Result<CoherenceDecomposition> {
    let dim = basis.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rho.nrows(),
        });
    }
    let n = basis.n_spins() as i32;
    let mut order_matrices: BTreeMap<i32, ComplexMatrix> = (-n..=n)
        .map(|k| (k, ComplexMatrix::zeros(dim, dim)))
        .collect();
    for i in 0..dim {
        for j in 0..dim {
            let k = coherence_order(basis, i, j);
            order_matrices.get_mut(&k).expect("order within range")[(i, j)] = rho[(i, j)];
        }
    }
    Ok(CoherenceDecomposition { order_matrices })
}

#[derive(Debug, Clone)]
pub struct ParityMixingReport {
    pub source_orders: Vec<i32>,
    pub evolved_orders: Vec<i32>,
    /// Largest odd-order entry of the evolved state when the source has only
    /// even orders (and vice versa); zero when both parities are present.
    pub foreign_parity_norm: f64,
    /// Every evolved order differs from some source order by an even number.
    pub parity_preserved: bool,
}

/// Evolves `rho0` by `W ρ0 W†` and reports which coherence orders appear.
pub fn parity_mixing_check(
    rho0: &ComplexMatrix,
    w: &ComplexMatrix,
    basis: &GradedBasis,
) -> Result<ParityMixingReport> {
    check_parity_structure(w, basis)?;
    let source = decompose(rho0, basis)?;
    let evolved = decompose(&(w * rho0 * w.adjoint()), basis)?;
    let source_orders = source.populated(ORDER_TOL);
    let evolved_orders = evolved.populated(ORDER_TOL);

    let has_even = source_orders.iter().any(|n| n % 2 == 0);
    let has_odd = source_orders.iter().any(|n| n % 2 != 0);
    let foreign_parity_norm = evolved
        .order_matrices
        .iter()
        .filter(|(n, _)| {
            let odd = *n % 2 != 0;
            (odd && !has_odd) || (!odd && !has_even)
        })
        .fold(0.0f64, |acc, (_, m)| acc.max(max_norm(m)));
    let parity_preserved = evolved_orders
        .iter()
        .all(|e| source_orders.iter().any(|s| (e - s) % 2 == 0));
    Ok(ParityMixingReport {
        source_orders,
        evolved_orders,
        foreign_parity_norm,
        parity_preserved,
    })
}
