//! Sender / transmission line / receiver partition and the λ-map that takes
//! sender density matrices to receiver density matrices.
//!
//! Site ranges (0-based, left to right): the sender occupies the first
//! `n_sender` sites, the receiver the last `n_receiver`, and the extended
//! receiver the last `n_extended`. Everything left of the extended receiver
//! (sender plus the part of the line outside it) is called the *outer*
//! register below.

use serde::{Deserialize, Serialize};

use crate::chain::GradedBasis;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64, ZERO};
use crate::propagator::check_parity_structure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLayout {
    pub n_total: usize,
    pub n_sender: usize,
    pub n_receiver: usize,
    pub n_extended: usize,
}

impl CommLayout {
    pub fn new(
        n_total: usize,
        n_sender: usize,
        n_receiver: usize,
        n_extended: usize,
    ) -> Result<Self> {
        let layout = Self {
            n_total,
            n_sender,
            n_receiver,
            n_extended,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Six sites, two-qubit sender and receiver, four-qubit extended receiver.
    pub fn reference() -> Self {
        Self {
            n_total: 6,
            n_sender: 2,
            n_receiver: 2,
            n_extended: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_sender == 0 || self.n_receiver == 0 {
            return bad("sender and receiver need at least one site".into());
        }
        if self.n_sender != self.n_receiver {
            return bad(format!(
                "sender ({}) and receiver ({}) must have equal size",
                self.n_sender, self.n_receiver
            ));
        }
        if self.n_sender + self.n_receiver > self.n_total {
            return bad(format!(
                "sender and receiver ({} + {}) exceed the chain length {}",
                self.n_sender, self.n_receiver, self.n_total
            ));
        }
        if self.n_extended < self.n_receiver || self.n_extended > self.n_total - self.n_sender {
            return bad(format!(
                "extended receiver size {} must lie in [{}, {}]",
                self.n_extended,
                self.n_receiver,
                self.n_total - self.n_sender
            ));
        }
        if self.n_total > crate::chain::MAX_SITES {
            return Err(Error::Capacity(self.n_total));
        }
        Ok(())
    }

    pub fn n_line(&self) -> usize {
        self.n_total - self.n_sender - self.n_receiver
    }

    pub fn sender_sites(&self) -> std::ops::Range<usize> {
        0..self.n_sender
    }

    pub fn line_sites(&self) -> std::ops::Range<usize> {
        self.n_sender..self.n_total - self.n_receiver
    }

    pub fn receiver_sites(&self) -> std::ops::Range<usize> {
        self.n_total - self.n_receiver..self.n_total
    }

    pub fn extended_sites(&self) -> std::ops::Range<usize> {
        self.n_total - self.n_extended..self.n_total
    }

    /// Sites outside the extended receiver.
    pub fn n_outer(&self) -> usize {
        self.n_total - self.n_extended
    }

    pub fn sender_dim(&self) -> usize {
        1 << self.n_sender
    }

    pub fn receiver_dim(&self) -> usize {
        1 << self.n_receiver
    }

    pub fn extended_dim(&self) -> usize {
        1 << self.n_extended
    }

    /// Full-chain mask of sender state `sender_mask` with everything else in
    /// the ground state.
    pub fn embed_sender_mask(&self, sender_mask: u32) -> u32 {
        sender_mask << (self.n_total - self.n_sender)
    }
}

/// Subsystem bases used when indexing λ-tensors.
#[derive(Debug, Clone)]
pub struct LayoutBases {
    pub full: GradedBasis,
    pub sender: GradedBasis,
    pub receiver: GradedBasis,
    pub extended: GradedBasis,
}

impl LayoutBases {
    pub fn new(layout: &CommLayout) -> Result<Self> {
        layout.validate()?;
        Ok(Self {
            full: GradedBasis::new(layout.n_total)?,
            sender: GradedBasis::new(layout.n_sender)?,
            receiver: GradedBasis::new(layout.n_receiver)?,
            extended: GradedBasis::new(layout.n_extended)?,
        })
    }

    /// Graded full-chain columns holding `|c⟩_S |0…0⟩`, in sender graded order.
    pub fn sender_columns(&self, layout: &CommLayout) -> Vec<usize> {
        (0..self.sender.dim())
            .map(|c| {
                self.full
                    .index_of(layout.embed_sender_mask(self.sender.mask(c)))
            })
            .collect()
    }
}

/// `ρ(0) = s ⊗ |0…0⟩⟨0…0|` in the full graded basis.
pub fn initial_state(s: &ComplexMatrix, layout: &CommLayout) -> Result<ComplexMatrix> {
    layout.validate()?;
    if s.nrows() != layout.sender_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.sender_dim(),
            actual: s.nrows(),
        });
    }
    linalg::check_density_with(s, 1e-10, 1e-10)?;
    let bases = LayoutBases::new(layout)?;
    Ok(embed_sender_operator(s, layout, &bases))
}

fn embed_sender_operator(
    s: &ComplexMatrix,
    layout: &CommLayout,
    bases: &LayoutBases,
) -> ComplexMatrix {
    let dim = bases.full.dim();
    let cols = bases.sender_columns(layout);
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for (i, &fi) in cols.iter().enumerate() {
        for (j, &fj) in cols.iter().enumerate() {
            rho[(fi, fj)] = s[(i, j)];
        }
    }
    rho
}

/// `r = Tr_{S,TL} ρ`, returned in the receiver's graded basis.
pub fn receiver_state(rho: &ComplexMatrix, layout: &CommLayout) -> Result<ComplexMatrix> {
    layout.validate()?;
    let dim = 1usize << layout.n_total;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rho.nrows(),
        });
    }
    let bases = LayoutBases::new(layout)?;
    Ok(partial_trace_to_receiver(rho, layout, &bases))
}

fn partial_trace_to_receiver(
    rho: &ComplexMatrix,
    layout: &CommLayout,
    bases: &LayoutBases,
) -> ComplexMatrix {
    let comp = bases.full.to_computational(rho);
    let d_r = layout.receiver_dim();
    let d_rest = 1usize << (layout.n_total - layout.n_receiver);
    let mut r_comp = ComplexMatrix::zeros(d_r, d_r);
    for a in 0..d_r {
        for b in 0..d_r {
            let mut acc = ZERO;
            for x in 0..d_rest {
                acc += comp[(x * d_r + a, x * d_r + b)];
            }
            r_comp[(a, b)] = acc;
        }
    }
    bases.receiver.to_graded(&r_comp)
}

/// Linear map `r_ab = Σ_cd λ_{ab,cd} s_cd`; receiver indices `a, b` and
/// sender indices `c, d` are graded positions.
///
/// In block notation `λ^{(nmkl)}_{ij ĩ j̃}` is the entry with `a` the `i`-th
/// state of receiver block `n`, `b` the `j`-th of block `m`, `c` the `ĩ`-th
/// of sender block `k` and `d` the `j̃`-th of block `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTensor {
    receiver: GradedBasis,
    sender: GradedBasis,
    entries: Vec<C64>,
    pub tau: f64,
    pub phi: Vec<f64>,
}

impl LambdaTensor {
    pub fn zeros(receiver: GradedBasis, sender: GradedBasis, tau: f64, phi: Vec<f64>) -> Self {
        let dr = receiver.dim();
        let ds = sender.dim();
        Self {
            receiver,
            sender,
            entries: vec![ZERO; dr * dr * ds * ds],
            tau,
            phi,
        }
    }

    pub fn receiver_dim(&self) -> usize {
        self.receiver.dim()
    }

    pub fn sender_dim(&self) -> usize {
        self.sender.dim()
    }

    pub fn receiver_basis(&self) -> &GradedBasis {
        &self.receiver
    }

    pub fn sender_basis(&self) -> &GradedBasis {
        &self.sender
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        let dr = self.receiver.dim();
        let ds = self.sender.dim();
        ((a * dr + b) * ds + c) * ds + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.entries[self.offset(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, value: C64) {
        let k = self.offset(a, b, c, d);
        self.entries[k] = value;
    }

    /// `λ^{(nmkl)}_{ij ĩ j̃}` addressed by excitation blocks and in-block
    /// positions.
    #[allow(clippy::too_many_arguments)]
    pub fn block_entry(
        &self,
        n: usize,
        m: usize,
        k: usize,
        l: usize,
        i: usize,
        j: usize,
        ti: usize,
        tj: usize,
    ) -> C64 {
        let a = self.receiver.block(n).0 + i;
        let b = self.receiver.block(m).0 + j;
        let c = self.sender.block(k).0 + ti;
        let d = self.sender.block(l).0 + tj;
        self.get(a, b, c, d)
    }

    /// Whether `λ_{ab,cd}` can be nonzero under a parity-preserving evolution
    /// from `|c⟩⟨d| ⊗ |0⟩⟨0|`: the coherence orders `exc(b) − exc(a)` and
    /// `exc(d) − exc(c)` must have equal parity.
    pub fn coupling_allowed(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        let r = self.receiver.excitation(b) as i64 - self.receiver.excitation(a) as i64;
        let s = self.sender.excitation(d) as i64 - self.sender.excitation(c) as i64;
        (r - s).rem_euclid(2) == 0
    }

    pub fn contract(&self, s: &ComplexMatrix) -> ComplexMatrix {
        let dr = self.receiver.dim();
        let ds = self.sender.dim();
        assert_eq!(s.nrows(), ds, "sender matrix dimension");
        ComplexMatrix::from_fn(dr, dr, |a, b| {
            let mut acc = ZERO;
            for c in 0..ds {
                for d in 0..ds {
                    acc += self.get(a, b, c, d) * s[(c, d)];
                }
            }
            acc
        })
    }

    pub fn max_abs_diff(&self, other: &LambdaTensor) -> f64 {
        assert_eq!(self.entries.len(), other.entries.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
    }

    /// Largest `|λ_{ab,cd} − conj(λ_{ba,dc})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let dr = self.receiver.dim();
        let ds = self.sender.dim();
        let mut worst: f64 = 0.0;
        for a in 0..dr {
            for b in 0..dr {
                for c in 0..ds {
                    for d in 0..ds {
                        worst =
                            worst.max((self.get(a, b, c, d) - self.get(b, a, d, c).conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest entry among couplings forbidden by parity.
    pub fn forbidden_max_norm(&self) -> f64 {
        let dr = self.receiver.dim();
        let ds = self.sender.dim();
        let mut worst: f64 = 0.0;
        for a in 0..dr {
            for b in 0..dr {
                for c in 0..ds {
                    for d in 0..ds {
                        if !self.coupling_allowed(a, b, c, d) {
                            worst = worst.max(self.get(a, b, c, d).norm());
                        }
                    }
                }
            }
        }
        worst
    }
}

fn validate_total_unitary(
    w: &ComplexMatrix,
    layout: &CommLayout,
    bases: &LayoutBases,
) -> Result<()> {
    let dim = 1usize << layout.n_total;
    if w.nrows() != dim || w.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: w.nrows(),
        });
    }
    linalg::check_unitary(w)?;
    check_parity_structure(w, &bases.full)
}

/// λ-tensor read off the total unitary `W` element by element:
/// `λ_{ab,cd} = Σ_x W_{(x,a),(c,0)} conj(W_{(x,b),(d,0)})`, where `x` runs
/// over the sender and line states and `(c, 0)` is the sender state `c`
/// with the rest of the chain in its ground state. Only `x` whose excitation
/// parity matches the `W` block of the `(c, a)` pair are visited; forbidden
/// couplings are never computed.
pub fn lambda_tensor_direct(w: &ComplexMatrix, layout: &CommLayout) -> Result<LambdaTensor> {
    let bases = LayoutBases::new(layout)?;
    validate_total_unitary(w, layout, &bases)?;
    Ok(lambda_direct_unchecked(w, layout, &bases, 0.0, Vec::new()))
}

pub(crate) fn lambda_direct_unchecked(
    w: &ComplexMatrix,
    layout: &CommLayout,
    bases: &LayoutBases,
    tau: f64,
    phi: Vec<f64>,
) -> LambdaTensor {
    let mut tensor = LambdaTensor::zeros(bases.receiver.clone(), bases.sender.clone(), tau, phi);
    let cols = bases.sender_columns(layout);
    let n_r = layout.n_receiver as u32;
    let d_rest = 1u32 << (layout.n_total - layout.n_receiver);
    let dr = bases.receiver.dim();
    let ds = bases.sender.dim();
    for a in 0..dr {
        let ma = bases.receiver.mask(a);
        for b in 0..dr {
            let mb = bases.receiver.mask(b);
            for c in 0..ds {
                let exc_c = bases.sender.excitation(c) as u32;
                for d in 0..ds {
                    if !tensor.coupling_allowed(a, b, c, d) {
                        continue;
                    }
                    let mut acc = ZERO;
                    for x in 0..d_rest {
                        // W_{(x,a),(c,0)} lies in an even block only
                        if (x.count_ones() + ma.count_ones() + exc_c) % 2 == 1 {
                            continue;
                        }
                        let row_a = bases.full.index_of((x << n_r) | ma);
                        let row_b = bases.full.index_of((x << n_r) | mb);
                        acc += w[(row_a, cols[c])] * w[(row_b, cols[d])].conj();
                    }
                    tensor.set(a, b, c, d, acc);
                }
            }
        }
    }
    tensor
}

/// λ-tensor by linearity: each sender matrix unit `|c⟩⟨d|` is embedded,
/// propagated as `W ρ W†` and traced down to the receiver; the result is the
/// `(c, d)` column of the map.
pub fn lambda_tensor_oracle(w: &ComplexMatrix, layout: &CommLayout) -> Result<LambdaTensor> {
    let bases = LayoutBases::new(layout)?;
    validate_total_unitary(w, layout, &bases)?;
    let ds = bases.sender.dim();
    let dr = bases.receiver.dim();
    let mut tensor = LambdaTensor::zeros(
        bases.receiver.clone(),
        bases.sender.clone(),
        0.0,
        Vec::new(),
    );
    let w_adj = w.adjoint();
    let columns = crate::exec::Exec::default().map(ds * ds, |k| {
        let (c, d) = (k / ds, k % ds);
        let mut unit = ComplexMatrix::zeros(ds, ds);
        unit[(c, d)] = C64::new(1.0, 0.0);
        let rho = embed_sender_operator(&unit, layout, &bases);
        let evolved = w * rho * &w_adj;
        partial_trace_to_receiver(&evolved, layout, &bases)
    });
    for (k, r) in columns.iter().enumerate() {
        let (c, d) = (k / ds, k % ds);
        for a in 0..dr {
            for b in 0..dr {
                tensor.set(a, b, c, d, r[(a, b)]);
            }
        }
    }
    Ok(tensor)
}

/// λ-tensor from the images `W|c,0⟩` of the sender basis states, each given
/// as a computational-order vector of the full chain.
pub fn lambda_from_images(
    images: &ComplexMatrix,
    layout: &CommLayout,
    bases: &LayoutBases,
    tau: f64,
    phi: Vec<f64>,
) -> LambdaTensor {
    let dr = bases.receiver.dim();
    let ds = bases.sender.dim();
    let d_rest = 1usize << (layout.n_total - layout.n_receiver);
    let mut tensor = LambdaTensor::zeros(bases.receiver.clone(), bases.sender.clone(), tau, phi);
    let ra: Vec<usize> = (0..dr).map(|a| bases.receiver.mask(a) as usize).collect();
    for a in 0..dr {
        for b in 0..dr {
            for c in 0..ds {
                for d in 0..ds {
                    if !tensor.coupling_allowed(a, b, c, d) {
                        continue;
                    }
                    let mut acc = ZERO;
                    for x in 0..d_rest {
                        acc += images[(x * dr + ra[a], c)] * images[(x * dr + ra[b], d)].conj();
                    }
                    tensor.set(a, b, c, d, acc);
                }
            }
        }
    }
    tensor
}
