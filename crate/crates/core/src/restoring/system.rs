//! Restoring conditions as a real least-squares problem in the angles `φ`.
//!
//! Only the columns `V|c,0…0⟩` of the propagator enter the λ-tensor. Each is
//! cut into rows `b_{c,o}` indexed by the extended receiver (one row per
//! outer state `o`), so applying `I ⊗ U` is a sequence of 2×2 rotations on
//! short vectors:
//!
//! `λ_{ab,cd}(φ) = Σ_{o,t} (U b_{c,o})[t,a] · conj((U b_{d,o})[t,b])`
//!
//! where `t` runs over the extended-receiver sites outside the receiver.

use nalgebra::{DMatrix, DVector};

use super::targets::{restored_element_set, RestoreMode};
use super::unitary::{build_unitary, generator_set, Generator, UnitaryParams};
use crate::chain::{build_xy_hamiltonian, ChainConfig, GradedBasis};
use crate::comm_line::{CommLayout, LambdaTensor, LayoutBases};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64, ZERO};
use crate::propagator::{check_parity_structure, diagonalize};

/// Real residual with a Jacobian, as consumed by the solver.
pub trait LeastSquares: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residual(&self, x: &[f64]) -> DVector<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// Central differences with step `h`.
    fn jacobian_central_difference(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n_residuals(), self.n_params());
        let mut probe = x.to_vec();
        for j in 0..self.n_params() {
            probe[j] = x[j] + h;
            let plus = self.residual(&probe);
            probe[j] = x[j] - h;
            let minus = self.residual(&probe);
            probe[j] = x[j];
            jac.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        jac
    }
}

/// One complex restoring condition `λ_{ab,cd} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Condition {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

#[derive(Debug, Clone)]
pub struct RestoringSystem {
    layout: CommLayout,
    bases: LayoutBases,
    mode: RestoreMode,
    tau: f64,
    coupling: Option<f64>,
    v: ComplexMatrix,
    generators: Vec<Generator>,
    targets: Vec<(usize, usize)>,
    conditions: Vec<Condition>,
    /// `rows[c * n_outer + o]`, each of length `d_ER`.
    rows: Vec<Vec<C64>>,
    n_outer_states: usize,
    /// `er_index[t * d_R + a]`: graded ER position of line part `t` and
    /// receiver graded state `a`.
    er_index: Vec<usize>,
}

impl RestoringSystem {
    /// `v` is the full-chain propagator at the registration time, in graded
    /// order.
    pub fn new(
        v: &ComplexMatrix,
        layout: &CommLayout,
        mode: RestoreMode,
        tau: f64,
    ) -> Result<Self> {
        let bases = LayoutBases::new(layout)?;
        let dim = bases.full.dim();
        if v.nrows() != dim || v.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.nrows(),
            });
        }
        linalg::check_unitary(v)?;
        check_parity_structure(v, &bases.full)?;

        let d_e = layout.extended_dim();
        let d_r = layout.receiver_dim();
        let n_outer_states = 1usize << layout.n_outer();
        let sender_cols = bases.sender_columns(layout);
        let n_e = layout.n_extended as u32;
        let mut rows = Vec::with_capacity(sender_cols.len() * n_outer_states);
        for &col in &sender_cols {
            for o in 0..n_outer_states as u32 {
                let row: Vec<C64> = (0..d_e)
                    .map(|e| {
                        v[(
                            bases.full.index_of((o << n_e) | bases.extended.mask(e)),
                            col,
                        )]
                    })
                    .collect();
                rows.push(row);
            }
        }
        let n_r = layout.n_receiver as u32;
        let n_t = 1usize << (layout.n_extended - layout.n_receiver);
        let mut er_index = vec![0; n_t * d_r];
        for t in 0..n_t {
            for a in 0..d_r {
                er_index[t * d_r + a] = bases
                    .extended
                    .index_of(((t as u32) << n_r) | bases.receiver.mask(a));
            }
        }

        let targets = restored_element_set(&bases.receiver, mode);
        let ds = bases.sender.dim();
        let probe = LambdaTensor::zeros(bases.receiver.clone(), bases.sender.clone(), tau, vec![]);
        let mut conditions = Vec::new();
        for &(a, b) in &targets {
            for c in 0..ds {
                for d in 0..ds {
                    if (c, d) != (a, b) && probe.coupling_allowed(a, b, c, d) {
                        conditions.push(Condition { a, b, c, d });
                    }
                }
            }
        }
        let generators = generator_set(&bases.extended);
        Ok(Self {
            layout: *layout,
            bases,
            mode,
            tau,
            coupling: None,
            v: v.clone(),
            generators,
            targets,
            conditions,
            rows,
            n_outer_states,
            er_index,
        })
    }

    /// Builds the propagator of the chain `chain` at time `tau` first.
    pub fn from_chain(
        chain: &ChainConfig,
        layout: &CommLayout,
        mode: RestoreMode,
        tau: f64,
    ) -> Result<Self> {
        if chain.n_spins != layout.n_total {
            return Err(Error::InvalidConfig(format!(
                "chain has {} sites but the layout needs {}",
                chain.n_spins, layout.n_total
            )));
        }
        let basis = GradedBasis::new(chain.n_spins)?;
        let h = build_xy_hamiltonian(chain, &basis)?;
        let v = diagonalize(&h)?.evolve(tau)?.matrix;
        let mut system = Self::new(&v, layout, mode, tau)?;
        system.coupling = Some(chain.coupling);
        Ok(system)
    }

    pub fn coupling(&self) -> Option<f64> {
        self.coupling
    }

    pub fn layout(&self) -> &CommLayout {
        &self.layout
    }

    pub fn bases(&self) -> &LayoutBases {
        &self.bases
    }

    pub fn mode(&self) -> RestoreMode {
        self.mode
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn propagator(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn n_complex_equations(&self) -> usize {
        self.conditions.len()
    }

    pub fn params(&self, phi: &[f64]) -> Result<UnitaryParams> {
        UnitaryParams::with_angles(&self.bases.extended, phi.to_vec())
    }

    fn rotated_rows(&self, phi: &[f64]) -> Vec<Vec<C64>> {
        let mut rows = self.rows.clone();
        // U b = G_0 (G_1 (⋯ (G_{P−1} b)))
        for (g, &theta) in self.generators.iter().zip(phi).rev() {
            let rot = g.rotation(theta);
            for row in rows.iter_mut() {
                g.apply(&rot, row);
            }
        }
        rows
    }

    #[inline]
    fn pair_sum(&self, xc: &[Vec<C64>], xd: &[Vec<C64>], cond: Condition) -> C64 {
        let d_r = self.bases.receiver.dim();
        let n_t = self.er_index.len() / d_r;
        let mut acc = ZERO;
        for o in 0..self.n_outer_states {
            let rc = &xc[cond.c * self.n_outer_states + o];
            let rd = &xd[cond.d * self.n_outer_states + o];
            for t in 0..n_t {
                acc += rc[self.er_index[t * d_r + cond.a]]
                    * rd[self.er_index[t * d_r + cond.b]].conj();
            }
        }
        acc
    }

    /// Values of all restoring conditions at `phi`.
    pub fn condition_values(&self, phi: &[f64]) -> Vec<C64> {
        let x = self.rotated_rows(phi);
        self.conditions
            .iter()
            .map(|&cond| self.pair_sum(&x, &x, cond))
            .collect()
    }

    /// Complete λ-tensor of the restored channel.
    pub fn lambda_tensor(&self, phi: &[f64]) -> LambdaTensor {
        let x = self.rotated_rows(phi);
        let mut tensor = LambdaTensor::zeros(
            self.bases.receiver.clone(),
            self.bases.sender.clone(),
            self.tau,
            phi.to_vec(),
        );
        let d_r = self.bases.receiver.dim();
        let d_s = self.bases.sender.dim();
        for a in 0..d_r {
            for b in 0..d_r {
                for c in 0..d_s {
                    for d in 0..d_s {
                        if tensor.coupling_allowed(a, b, c, d) {
                            tensor.set(a, b, c, d, self.pair_sum(&x, &x, Condition { a, b, c, d }));
                        }
                    }
                }
            }
        }
        tensor
    }

    /// `λ_{ab,ab}` for every restored element, both triangles, in target
    /// order with each conjugate partner following its element.
    pub fn restored_lambdas(&self, phi: &[f64]) -> Vec<((usize, usize), C64)> {
        let x = self.rotated_rows(phi);
        let mut out = Vec::with_capacity(2 * self.targets.len());
        for &(a, b) in &self.targets {
            let lam = self.pair_sum(&x, &x, Condition { a, b, c: a, d: b });
            out.push(((a, b), lam));
            out.push(((b, a), lam.conj()));
        }
        out
    }

    pub fn unitary(&self, phi: &[f64]) -> Result<ComplexMatrix> {
        build_unitary(&self.params(phi)?, &self.bases.extended)
    }

    /// `W = (I_outer ⊗ U) V` in the full graded basis.
    pub fn total_unitary(&self, phi: &[f64]) -> Result<ComplexMatrix> {
        let u = self.unitary(phi)?;
        let u_comp = self.bases.extended.to_computational(&u);
        let d_outer = self.n_outer_states;
        let lifted = linalg::kron(&ComplexMatrix::identity(d_outer, d_outer), &u_comp);
        Ok(self.bases.full.to_graded(&lifted) * &self.v)
    }
}

impl LeastSquares for RestoringSystem {
    fn n_params(&self) -> usize {
        self.generators.len()
    }

    fn n_residuals(&self) -> usize {
        2 * self.conditions.len()
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let values = self.condition_values(x);
        DVector::from_iterator(values.len() * 2, values.iter().flat_map(|z| [z.re, z.im]))
    }

    /// Exact derivatives from prefix products `P_j = G_0⋯G_{j−1}` and
    /// suffix images `f_j = G_j⋯G_{P−1} b`:
    /// `∂(U b)/∂φ_j = P_j G'_j f_{j+1}`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n_p = self.generators.len();
        let n_rows = self.rows.len();
        let d_e = self.bases.extended.dim();

        // suffix[j] holds f_j for all rows; suffix[n_p] = b
        let mut suffix: Vec<Vec<Vec<C64>>> = Vec::with_capacity(n_p + 1);
        suffix.push(self.rows.clone());
        for (g, &theta) in self.generators.iter().zip(x).rev() {
            let rot = g.rotation(theta);
            let mut next = suffix.last().expect("suffix seeded").clone();
            for row in next.iter_mut() {
                g.apply(&rot, row);
            }
            suffix.push(next);
        }
        suffix.reverse();
        let images = &suffix[0];

        let mut jac = DMatrix::zeros(2 * self.conditions.len(), n_p);
        let mut prefix = ComplexMatrix::identity(d_e, d_e);
        let mut d_rows = vec![vec![ZERO; d_e]; n_rows];
        for (j, g) in self.generators.iter().enumerate() {
            let dg = g.rotation_derivative(x[j]);
            for (r, f) in suffix[j + 1].iter().enumerate() {
                let gp = dg[0][0] * f[g.p] + dg[0][1] * f[g.q];
                let gq = dg[1][0] * f[g.p] + dg[1][1] * f[g.q];
                let out = &mut d_rows[r];
                for (e, slot) in out.iter_mut().enumerate() {
                    *slot = prefix[(e, g.p)] * gp + prefix[(e, g.q)] * gq;
                }
            }
            for (k, &cond) in self.conditions.iter().enumerate() {
                let dl =
                    self.pair_sum(&d_rows, images, cond) + self.pair_sum(images, &d_rows, cond);
                jac[(2 * k, j)] = dl.re;
                jac[(2 * k + 1, j)] = dl.im;
            }
            g.apply_right(&g.rotation(x[j]), &mut prefix);
        }
        jac
    }
}
