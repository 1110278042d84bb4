//! Excitation-graded basis and the nearest-neighbour XY Hamiltonian.
//!
//! Computational states are bitmasks with site 1 as the most significant
//! bit; a set bit is an excited spin. The graded basis groups the `2^N`
//! masks by excitation number, so operators built in it expose their
//! `(n, m)` excitation blocks as contiguous sub-matrices.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Largest chain the dense representation accepts.
pub const MAX_SITES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedBasis {
    n_spins: usize,
    order: Vec<u32>,
    inverse: Vec<usize>,
    /// `(offset, size)` of the block holding `n` excitations, indexed by `n`.
    blocks: Vec<(usize, usize)>,
}

impl GradedBasis {
    /// Masks are sorted by excitation count, then by mask value.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidConfig("basis needs at least one site".into()));
        }
        if n_spins > MAX_SITES {
            return Err(Error::Capacity(n_spins));
        }
        let dim = 1usize << n_spins;
        let mut order: Vec<u32> = (0..dim as u32).collect();
        order.sort_by_key(|&m| (m.count_ones(), m));

        let mut inverse = vec![0; dim];
        for (idx, &mask) in order.iter().enumerate() {
            inverse[mask as usize] = idx;
        }

        let mut blocks = vec![(0, 0); n_spins + 1];
        let mut offset = 0;
        for (n, block) in blocks.iter_mut().enumerate() {
            let size = binomial(n_spins, n);
            *block = (offset, size);
            offset += size;
        }
        Ok(Self {
            n_spins,
            order,
            inverse,
            blocks,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// Graded position -> bitmask.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn mask(&self, index: usize) -> u32 {
        self.order[index]
    }

    /// Bitmask -> graded position.
    pub fn index_of(&self, mask: u32) -> usize {
        self.inverse[mask as usize]
    }

    /// Excitation number of the state at graded position `index`.
    pub fn excitation(&self, index: usize) -> usize {
        self.order[index].count_ones() as usize
    }

    pub fn block(&self, excitations: usize) -> (usize, usize) {
        self.blocks[excitations]
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.0).collect()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.1).collect()
    }

    /// Graded positions whose states carry `n` excitations.
    pub fn block_range(&self, n: usize) -> std::ops::Range<usize> {
        let (off, size) = self.blocks[n];
        off..off + size
    }

    /// Permutation matrix taking computational-order vectors to graded order.
    pub fn to_graded(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| {
            m[(self.order[i] as usize, self.order[j] as usize)]
        })
    }

    pub fn to_computational(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| m[(self.inverse[i], self.inverse[j])])
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Homogeneous chain with coupling `D`; time is measured as `τ = D t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainConfig {
    pub n_spins: usize,
    pub coupling: f64,
}

impl ChainConfig {
    pub fn new(n_spins: usize, coupling: f64) -> Result<Self> {
        let cfg = Self { n_spins, coupling };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 {
            return Err(Error::InvalidConfig(format!(
                "chain needs at least 2 sites, got {}",
                self.n_spins
            )));
        }
        if self.n_spins > MAX_SITES {
            return Err(Error::Capacity(self.n_spins));
        }
        if self.coupling == 0.0 || !self.coupling.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "coupling must be nonzero, got {}",
                self.coupling
            )));
        }
        Ok(())
    }
}

/// `H = Σ D (I_x I_x − I_y I_y)` over neighbouring pairs, in graded order.
///
/// Each term equals `D/2 (I⁺I⁺ + I⁻I⁻)`: it flips an adjacent `00` pair to
/// `11` or back with amplitude `D/2`, so only blocks with `|n − m| = 2` are
/// populated. Entries are assigned, never accumulated, so forbidden blocks
/// are exactly zero.
pub fn build_xy_hamiltonian(cfg: &ChainConfig, basis: &GradedBasis) -> Result<ComplexMatrix> {
    cfg.validate()?;
    if basis.n_spins() != cfg.n_spins {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_spins,
            actual: basis.n_spins(),
        });
    }
    let n = cfg.n_spins;
    let dim = basis.dim();
    let element = C64::new(cfg.coupling / 2.0, 0.0);
    let mut h = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mask = basis.mask(col);
        for site in 0..n - 1 {
            // sites `site` and `site + 1` (0-based from the left) occupy bits
            // n-1-site and n-2-site
            let pair = 0b11u32 << (n - 2 - site);
            let bits = mask & pair;
            if bits == 0 || bits == pair {
                let row = basis.index_of(mask ^ pair);
                h[(row, col)] += element;
            }
        }
    }
    Ok(h)
}

/// Largest entry in the `(n, m)` excitation block.
pub fn block_max_norm(m: &ComplexMatrix, basis: &GradedBasis, n: usize, k: usize) -> f64 {
    let mut norm: f64 = 0.0;
    for i in basis.block_range(n) {
        for j in basis.block_range(k) {
            norm = norm.max(m[(i, j)].norm());
        }
    }
    norm
}

/// Total z-projection `I_z = Σ σ_z / 2` (diagonal in any computational order).
pub fn total_iz(basis: &GradedBasis) -> ComplexMatrix {
    let n = basis.n_spins() as f64;
    let diag: Vec<C64> = (0..basis.dim())
        .map(|i| C64::new(basis.excitation(i) as f64 - n / 2.0, 0.0))
        .collect();
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff, max_norm, I, ONE, ZERO};

    #[test]
    fn single_and_two_site_orders() {
        assert_eq!(GradedBasis::new(1).unwrap().order(), &[0, 1]);
        assert_eq!(
            GradedBasis::new(2).unwrap().order(),
            &[0b00, 0b01, 0b10, 0b11]
        );
    }

    #[test]
    fn four_site_blocks_match_enumeration() {
        let basis = GradedBasis::new(4).unwrap();
        let mut counts = [0usize; 5];
        for mask in 0u32..16 {
            counts[mask.count_ones() as usize] += 1;
        }
        assert_eq!(counts, [1, 4, 6, 4, 1]);
        assert_eq!(basis.block_sizes(), counts.to_vec());
        assert_eq!(basis.block_offsets(), vec![0, 1, 5, 11, 15]);
    }

    #[test]
    fn capacity_and_empty() {
        assert_eq!(GradedBasis::new(21).unwrap_err(), Error::Capacity(21));
        assert!(GradedBasis::new(0).is_err());
        assert!(ChainConfig::new(1, 1.0).is_err());
        assert!(ChainConfig::new(4, 0.0).is_err());
    }

    #[test]
    fn basis_invariants_hold() {
        for n in 1..=10 {
            let basis = GradedBasis::new(n).unwrap();
            let mut seen = vec![false; basis.dim()];
            for (i, &m) in basis.order().iter().enumerate() {
                assert!(!seen[m as usize]);
                seen[m as usize] = true;
                assert_eq!(basis.index_of(m), i);
                if i > 0 {
                    assert!(basis.excitation(i) >= basis.excitation(i - 1));
                }
            }
            let total: usize = basis.block_sizes().iter().sum();
            assert_eq!(total, basis.dim());
            for k in 0..=n {
                assert_eq!(basis.block(k).1, binomial(n, k));
            }
        }
    }

    fn entry(h: &ComplexMatrix, b: &GradedBasis, row: u32, col: u32) -> C64 {
        h[(b.index_of(row), b.index_of(col))]
    }

    #[test]
    fn two_site_hamiltonian() {
        let b = GradedBasis::new(2).unwrap();
        let h = build_xy_hamiltonian(&ChainConfig::new(2, 1.0).unwrap(), &b).unwrap();
        let nonzero = h.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
        assert_eq!(entry(&h, &b, 0b00, 0b11), C64::new(0.5, 0.0));
        assert_eq!(entry(&h, &b, 0b11, 0b00), C64::new(0.5, 0.0));
    }

    #[test]
    fn three_site_hamiltonian() {
        let b = GradedBasis::new(3).unwrap();
        let h = build_xy_hamiltonian(&ChainConfig::new(3, 1.0).unwrap(), &b).unwrap();
        let half = C64::new(0.5, 0.0);
        assert_eq!(entry(&h, &b, 0b000, 0b110), half);
        assert_eq!(entry(&h, &b, 0b000, 0b011), half);
        assert_eq!(entry(&h, &b, 0b100, 0b111), half);
        assert_eq!(entry(&h, &b, 0b001, 0b111), half);
        // 4 independent pairs, 8 entries in total
        assert_eq!(h.iter().filter(|z| z.norm() > 0.0).count(), 8);
    }

    /// Independent construction from explicit Pauli factors in computational
    /// order.
    fn pauli_hamiltonian(n: usize, d: f64) -> ComplexMatrix {
        let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let y = ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        let id = ComplexMatrix::identity(2, 2);
        let dim = 1 << n;
        let mut h = ComplexMatrix::zeros(dim, dim);
        for site in 0..n - 1 {
            let chain = |op: &ComplexMatrix| {
                let mut acc = ComplexMatrix::identity(1, 1);
                for k in 0..n {
                    let f = if k == site || k == site + 1 { op } else { &id };
                    acc = kron(&acc, f);
                }
                acc
            };
            h += (chain(&x) - chain(&y)) * C64::new(d / 4.0, 0.0);
        }
        h
    }

    #[test]
    fn matches_pauli_construction() {
        for n in 2..=7 {
            let b = GradedBasis::new(n).unwrap();
            let h = build_xy_hamiltonian(&ChainConfig::new(n, 1.3).unwrap(), &b).unwrap();
            let oracle = b.to_graded(&pauli_hamiltonian(n, 1.3));
            assert!(max_abs_diff(&h, &oracle) <= 1e-14, "n = {n}");
        }
    }

    #[test]
    fn block_structure_is_exact() {
        for n in 2..=8 {
            let b = GradedBasis::new(n).unwrap();
            let h = build_xy_hamiltonian(&ChainConfig::new(n, 1.0).unwrap(), &b).unwrap();
            for r in 0..=n {
                for c in 0..=n {
                    if r.abs_diff(c) != 2 {
                        assert_eq!(block_max_norm(&h, &b, r, c), 0.0);
                    }
                }
            }
            assert!(h.iter().all(|z| z.im == 0.0));
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn does_not_commute_with_iz() {
        for n in 2..=6 {
            let b = GradedBasis::new(n).unwrap();
            let h = build_xy_hamiltonian(&ChainConfig::new(n, 1.0).unwrap(), &b).unwrap();
            let iz = total_iz(&b);
            assert!(max_norm(&(&h * &iz - &iz * &h)) > 0.0);
        }
    }

    #[test]
    fn basis_mismatch_rejected() {
        let b = GradedBasis::new(3).unwrap();
        let err = build_xy_hamiltonian(&ChainConfig::new(4, 1.0).unwrap(), &b).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                actual: 3
            }
        );
    }
}
