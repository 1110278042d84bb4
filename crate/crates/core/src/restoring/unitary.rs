//! Parameterized unitaries on the extended receiver.
//!
//! `U(φ) = Π_j exp(i A_j φ_j)`, where every `A_j` has exactly two nonzero
//! entries connecting a pair of graded basis states of equal excitation
//! parity. Each exponential is a 2×2 rotation embedded in the identity.

use serde::{Deserialize, Serialize};

use crate::chain::{binomial, GradedBasis};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// `A = |p⟩⟨q| + |q⟩⟨p|`
    Symmetric,
    /// `A = −i|p⟩⟨q| + i|q⟩⟨p|`
    Antisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub p: usize,
    pub q: usize,
    pub flavor: Flavor,
}

impl Generator {
    pub fn new(basis: &GradedBasis, p: usize, q: usize, flavor: Flavor) -> Result<Self> {
        if p >= q || q >= basis.dim() || (basis.excitation(p) + basis.excitation(q)) % 2 == 1 {
            return Err(Error::MixedParityGenerator { p, q });
        }
        Ok(Self { p, q, flavor })
    }

    /// Rows/columns `(p, q)` of `exp(iθA)` as `[[g_pp, g_pq], [g_qp, g_qq]]`.
    #[inline]
    pub fn rotation(&self, theta: f64) -> [[C64; 2]; 2] {
        let (s, c) = theta.sin_cos();
        match self.flavor {
            Flavor::Symmetric => [
                [C64::new(c, 0.0), C64::new(0.0, s)],
                [C64::new(0.0, s), C64::new(c, 0.0)],
            ],
            Flavor::Antisymmetric => [
                [C64::new(c, 0.0), C64::new(s, 0.0)],
                [C64::new(-s, 0.0), C64::new(c, 0.0)],
            ],
        }
    }

    /// Derivative of [`Generator::rotation`] with respect to `θ`.
    #[inline]
    pub fn rotation_derivative(&self, theta: f64) -> [[C64; 2]; 2] {
        let (s, c) = theta.sin_cos();
        match self.flavor {
            Flavor::Symmetric => [
                [C64::new(-s, 0.0), C64::new(0.0, c)],
                [C64::new(0.0, c), C64::new(-s, 0.0)],
            ],
            Flavor::Antisymmetric => [
                [C64::new(-s, 0.0), C64::new(c, 0.0)],
                [C64::new(-c, 0.0), C64::new(-s, 0.0)],
            ],
        }
    }

    /// `x ← G x` for a vector indexed by graded positions.
    #[inline]
    pub fn apply(&self, g: &[[C64; 2]; 2], x: &mut [C64]) {
        let (xp, xq) = (x[self.p], x[self.q]);
        x[self.p] = g[0][0] * xp + g[0][1] * xq;
        x[self.q] = g[1][0] * xp + g[1][1] * xq;
    }

    /// `M ← M G`, touching only columns `p` and `q`.
    #[inline]
    pub fn apply_right(&self, g: &[[C64; 2]; 2], m: &mut ComplexMatrix) {
        for r in 0..m.nrows() {
            let (mp, mq) = (m[(r, self.p)], m[(r, self.q)]);
            m[(r, self.p)] = mp * g[0][0] + mq * g[1][0];
            m[(r, self.q)] = mp * g[0][1] + mq * g[1][1];
        }
    }

    pub fn hermitian_generator(&self, dim: usize) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(dim, dim);
        match self.flavor {
            Flavor::Symmetric => {
                a[(self.p, self.q)] = ONE;
                a[(self.q, self.p)] = ONE;
            }
            Flavor::Antisymmetric => {
                a[(self.p, self.q)] = -I;
                a[(self.q, self.p)] = I;
            }
        }
        a
    }
}

/// Number of real parameters of a parity-preserving unitary on `n` qubits:
/// `Σ_{n−m even} C(n,k)·C(n,m) − 2^n`.
pub fn parameter_count(n_qubits: usize) -> usize {
    let mut total = 0;
    for k in 0..=n_qubits {
        for m in 0..=n_qubits {
            if (k + m) % 2 == 0 {
                total += binomial(n_qubits, k) * binomial(n_qubits, m);
            }
        }
    }
    total - (1 << n_qubits)
}

/// All equal-parity pairs `p < q`, two flavors each, ordered by
/// `(p, q, flavor)`.
pub fn generator_set(basis: &GradedBasis) -> Vec<Generator> {
    let dim = basis.dim();
    let mut out = Vec::new();
    for p in 0..dim {
        for q in p + 1..dim {
            if (basis.excitation(p) + basis.excitation(q)).is_multiple_of(2) {
                out.push(Generator {
                    p,
                    q,
                    flavor: Flavor::Symmetric,
                });
                out.push(Generator {
                    p,
                    q,
                    flavor: Flavor::Antisymmetric,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryParams {
    pub phi: Vec<f64>,
    pub generators: Vec<Generator>,
}

impl UnitaryParams {
    pub fn zeros(basis: &GradedBasis) -> Self {
        let generators = generator_set(basis);
        Self {
            phi: vec![0.0; generators.len()],
            generators,
        }
    }

    pub fn with_angles(basis: &GradedBasis, phi: Vec<f64>) -> Result<Self> {
        let generators = generator_set(basis);
        if phi.len() != generators.len() {
            return Err(Error::DimensionMismatch {
                expected: generators.len(),
                actual: phi.len(),
            });
        }
        Ok(Self { phi, generators })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn validate(&self, basis: &GradedBasis) -> Result<()> {
        if self.phi.len() != self.generators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.generators.len(),
                actual: self.phi.len(),
            });
        }
        for g in &self.generators {
            Generator::new(basis, g.p, g.q, g.flavor)?;
        }
        Ok(())
    }
}

/// `U = G_0 G_1 ⋯ G_{P−1}` in the graded basis of `basis`.
pub fn build_unitary(params: &UnitaryParams, basis: &GradedBasis) -> Result<ComplexMatrix> {
    params.validate(basis)?;
    let dim = basis.dim();
    let mut u = ComplexMatrix::identity(dim, dim);
    for (g, &theta) in params.generators.iter().zip(&params.phi) {
        g.apply_right(&g.rotation(theta), &mut u);
    }
    Ok(u)
}

/// `Π_j exp(i A_j φ_j)` through general matrix exponentials; test oracle for
/// [`build_unitary`].
pub fn build_unitary_expm(params: &UnitaryParams, basis: &GradedBasis) -> ComplexMatrix {
    let dim = basis.dim();
    let mut u = ComplexMatrix::identity(dim, dim);
    for (g, &theta) in params.generators.iter().zip(&params.phi) {
        let a = g.hermitian_generator(dim) * C64::new(0.0, theta);
        u *= crate::linalg::expm_scaling_squaring(&a);
    }
    u
}
