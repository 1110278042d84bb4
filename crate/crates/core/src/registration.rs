//! State-averaged transfer fidelity and the registration time `τ₀`.
//!
//! `F(τ) = E⟨ψ|r(τ)|ψ⟩ = Σ λ_{ab,cd}(τ) E[conj ψ_a ψ_b ψ_c conj ψ_d]`, so one
//! moment tensor per measure turns each grid point into a contraction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{build_xy_hamiltonian, ChainConfig, GradedBasis};
use crate::comm_line::{lambda_from_images, CommLayout, LambdaTensor, LayoutBases};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::propagator::{diagonalize, EigenCache};
use crate::sampling::stream_rng;
use crate::states::{MomentTensor, StateMeasure};

pub const QUAD_NODES: usize = 32;

/// `Σ λ_{ab,cd} M_{abcd}`, the averaged `⟨ψ|r|ψ⟩`.
pub fn fidelity_of_tensor(tensor: &LambdaTensor, moments: &MomentTensor) -> f64 {
    let dr = tensor.receiver_dim();
    let ds = tensor.sender_dim();
    assert_eq!(dr, moments.dim(), "receiver and measure dimensions differ");
    assert_eq!(ds, moments.dim(), "sender and measure dimensions differ");
    let mut acc = 0.0;
    for a in 0..dr {
        for b in 0..dr {
            for c in 0..ds {
                for d in 0..ds {
                    let m = moments.get(a, b, c, d);
                    if m != 0.0 {
                        acc += tensor.get(a, b, c, d).re * m;
                    }
                }
            }
        }
    }
    acc
}

/// Eigen-cached chain plus moment tensor; evaluates `F(τ)` at `φ = 0`.
#[derive(Debug, Clone)]
pub struct FidelityModel {
    layout: CommLayout,
    bases: LayoutBases,
    eig: EigenCache,
    sender_cols: Vec<usize>,
    measure: StateMeasure,
    moments: MomentTensor,
}

impl FidelityModel {
    pub fn new(chain: &ChainConfig, layout: &CommLayout, measure: StateMeasure) -> Result<Self> {
        Self::with_nodes(chain, layout, measure, QUAD_NODES)
    }

    /// As [`FidelityModel::new`] with `nodes` Gauss–Legendre nodes per angle.
    pub fn with_nodes(
        chain: &ChainConfig,
        layout: &CommLayout,
        measure: StateMeasure,
        nodes: usize,
    ) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidConfig("quad_nodes must be positive".into()));
        }
        chain.validate()?;
        if chain.n_spins != layout.n_total {
            return Err(Error::InvalidConfig(format!(
                "chain has {} sites but the layout needs {}",
                chain.n_spins, layout.n_total
            )));
        }
        let bases = LayoutBases::new(layout)?;
        if measure.dim() != bases.sender.dim() {
            return Err(Error::DimensionMismatch {
                expected: bases.sender.dim(),
                actual: measure.dim(),
            });
        }
        let h = build_xy_hamiltonian(chain, &bases.full)?;
        let eig = diagonalize(&h)?;
        let sender_cols = bases.sender_columns(layout);
        Ok(Self {
            layout: *layout,
            bases,
            eig,
            sender_cols,
            measure,
            moments: measure.moment_tensor(nodes),
        })
    }

    pub fn layout(&self) -> &CommLayout {
        &self.layout
    }

    pub fn measure(&self) -> StateMeasure {
        self.measure
    }

    pub fn moments(&self) -> &MomentTensor {
        &self.moments
    }

    pub fn eigen(&self) -> &EigenCache {
        &self.eig
    }

    pub fn full_basis(&self) -> &GradedBasis {
        &self.bases.full
    }

    /// λ-tensor of the bare chain at time `tau`.
    pub fn lambda_at(&self, tau: f64) -> Result<LambdaTensor> {
        let cols = self.eig.evolve_columns(tau, &self.sender_cols)?;
        let dim = self.bases.full.dim();
        let comp = ComplexMatrix::from_fn(dim, cols.ncols(), |i, c| {
            cols[(self.bases.full.index_of(i as u32), c)]
        });
        Ok(lambda_from_images(
            &comp,
            &self.layout,
            &self.bases,
            tau,
            Vec::new(),
        ))
    }

    pub fn fidelity(&self, tau: f64) -> Result<f64> {
        Ok(fidelity_of_tensor(&self.lambda_at(tau)?, &self.moments))
    }

    /// Monte Carlo estimate of `F(τ)` with its standard error.
    pub fn fidelity_monte_carlo(&self, tau: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let tensor = self.lambda_at(tau)?;
        let mut rng = stream_rng(seed, 0);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            let psi = self.measure.sample(&mut rng);
            let v = pure_state_fidelity(&tensor, &psi);
            sum += v;
            sum_sq += v * v;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok((mean, (var / n).sqrt()))
    }
}

/// `⟨ψ|r|ψ⟩` with `r` the image of `|ψ⟩⟨ψ|`.
pub fn pure_state_fidelity(tensor: &LambdaTensor, psi: &[C64]) -> f64 {
    let dr = tensor.receiver_dim();
    let ds = tensor.sender_dim();
    let mut acc = ZERO;
    for a in 0..dr {
        for b in 0..dr {
            let mut r_ab = ZERO;
            for c in 0..ds {
                for d in 0..ds {
                    r_ab += tensor.get(a, b, c, d) * psi[c] * psi[d].conj();
                }
            }
            acc += psi[a].conj() * r_ab * psi[b];
        }
    }
    acc.re
}

/// `F(τ)` at `φ = 0` for the given measure.
pub fn averaged_fidelity(
    tau: f64,
    chain: &ChainConfig,
    layout: &CommLayout,
    measure: StateMeasure,
) -> Result<f64> {
    FidelityModel::new(chain, layout, measure)?.fidelity(tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityScan {
    pub grid: Vec<(f64, f64)>,
    pub tau0: f64,
    pub f0: f64,
    pub horizon: f64,
    pub step: f64,
    /// The best grid point was an end of the interval.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub tau0: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    pub horizon: f64,
    pub step: f64,
    pub boundary: bool,
}

impl FidelityScan {
    pub fn summary(&self) -> ScanSummary {
        ScanSummary {
            tau0: self.tau0,
            f0: self.f0,
            horizon: self.horizon,
            step: self.step,
            boundary: self.boundary,
        }
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid scan of `[0, horizon]`, then golden-section refinement around the
/// best grid point.
pub fn scan_for_tau0(
    model: &FidelityModel,
    horizon: f64,
    step: f64,
    exec: Exec,
) -> Result<FidelityScan> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scan.horizon must be positive, got {horizon}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scan.step must be positive, got {step}"
        )));
    }
    let n = (horizon / step).round() as usize + 1;
    let taus: Vec<f64> = (0..n).map(|k| (k as f64 * step).min(horizon)).collect();
    let values = exec.map(n, |k| model.fidelity(taus[k]));
    let mut grid = Vec::with_capacity(n);
    for (tau, v) in taus.iter().zip(values) {
        grid.push((*tau, v?));
    }
    let (best, _) =
        grid.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &(_, f))| if f > acc.1 { (k, f) } else { acc },
        );
    let boundary = best == 0 || best == n - 1;
    let lo = if best == 0 { 0.0 } else { grid[best - 1].0 };
    let hi = if best == n - 1 {
        horizon
    } else {
        grid[best + 1].0
    };
    let eval = |t: f64| model.fidelity(t).unwrap_or(f64::NEG_INFINITY);
    let (mut tau0, mut f0) = golden_section_max(eval, lo, hi, 1e-7);
    if grid[best].1 >= f0 {
        tau0 = grid[best].0;
        f0 = grid[best].1;
    }
    Ok(FidelityScan {
        grid,
        tau0,
        f0,
        horizon,
        step,
        boundary,
    })
}

/// Average of a random pure-state estimate, used to cross-check moment
/// contractions for arbitrary tensors.
pub fn monte_carlo_fidelity<R: Rng>(
    tensor: &LambdaTensor,
    measure: StateMeasure,
    samples: usize,
    rng: &mut R,
) -> f64 {
    (0..samples)
        .map(|_| pure_state_fidelity(tensor, &measure.sample(rng)))
        .sum::<f64>()
        / samples as f64
}
