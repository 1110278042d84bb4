//! Wootters concurrence and statistics of its transfer from sender to
//! receiver.

use nalgebra::Schur;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comm_line::LambdaTensor;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, ComplexMatrix, C64};
use crate::sampling::{inverse_cdf_sin, inverse_cdf_sin2, random_shifts, stream_rng, RdSequence};
use crate::states::{density, even_state, general_state, SenderParams};

use std::f64::consts::PI;

/// Largest imaginary part tolerated in the spectrum of `ρ ρ̃`.
pub const SPECTRUM_IMAG_TOL: f64 = 1e-8;

fn sigma_yy() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m
}

/// Concurrence of a two-qubit density matrix in computational order.
pub fn concurrence(rho: &ComplexMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.nrows(),
        });
    }
    linalg::check_density_with(rho, 1e-9, 1e-9)?;
    concurrence_unchecked(rho)
}

/// Eigenvalues of `ρ` below this fraction of the largest are treated as zero
/// when factoring `ρ = X X†`.
pub const RANK_TOL: f64 = 1e-14;

/// [`concurrence`] without the density checks, for states that are valid by
/// construction.
///
/// The `λ_i` are the singular values of the complex symmetric matrix
/// `Xᵀ (σy⊗σy) X` with `ρ = X X†`, which avoids square roots of the
/// near-zero spectrum of `ρ ρ̃` that rank-deficient states produce.
pub fn concurrence_unchecked(rho: &ComplexMatrix) -> Result<f64> {
    let eig = rho.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let mut x = eig.eigenvectors;
    for (k, &d) in eig.eigenvalues.iter().enumerate() {
        let w = if d > RANK_TOL * top { d.sqrt() } else { 0.0 };
        x.column_mut(k).scale_mut(w);
    }
    let a = x.transpose() * sigma_yy() * &x;
    let mut lambdas: Vec<f64> = a.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Concurrence from the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)` by Schur
/// decomposition. Accurate to about `sqrt(ε)` on rank-deficient states.
pub fn concurrence_spectral(rho: &ComplexMatrix) -> Result<f64> {
    let yy = sigma_yy();
    let m = rho * &yy * rho.conjugate() * &yy;
    let (_, t) = Schur::new(m).unpack();
    let mut lambdas = [0.0f64; 4];
    for (k, slot) in lambdas.iter_mut().enumerate() {
        let z = t[(k, k)];
        if z.im.abs() > SPECTRUM_IMAG_TOL {
            return Err(Error::NotDensity(format!(
                "spectrum of rho*rho~ has imaginary part {:.3e}",
                z.im
            )));
        }
        *slot = z.re.max(0.0).sqrt();
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// `2|ψ_00 ψ_11 − ψ_01 ψ_10|` for a normalized pure state.
pub fn concurrence_pure(psi: &[C64]) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceSample {
    pub params: SenderParams,
    pub c_sender: f64,
    pub c_receiver: f64,
}

/// Receiver state for sender `s` through `tensor`, in computational order.
fn receiver_of(tensor: &LambdaTensor, s: &ComplexMatrix) -> ComplexMatrix {
    tensor
        .receiver_basis()
        .to_computational(&tensor.contract(s))
}

fn sender_matrix(tensor: &LambdaTensor, psi: &[C64]) -> ComplexMatrix {
    tensor.sender_basis().to_graded(&density(psi))
}

/// Random sender states with all six angles uniform on their ranges (no
/// Jacobian weight), each mapped through `tensor`.
pub fn scatter_experiment(
    tensor: &LambdaTensor,
    n_samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<ConcurrenceSample>> {
    let out = exec.map(n_samples, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let mut v = [0.0; 6];
        for (k, x) in v.iter_mut().enumerate() {
            let (lo, hi) = SenderParams::range(k);
            *x = lo + (hi - lo) * rng.random::<f64>();
        }
        let params = SenderParams::from_array(v);
        let psi = general_state(&params);
        let c_sender = concurrence_unchecked(&density(&psi))?;
        let c_receiver = concurrence_unchecked(&receiver_of(tensor, &sender_matrix(tensor, &psi)))?;
        Ok(ConcurrenceSample {
            params,
            c_sender,
            c_receiver,
        })
    });
    out.into_iter().collect()
}

/// Largest sender concurrence among samples whose concurrence grows in
/// transit, if any.
pub fn amplification_threshold(samples: &[ConcurrenceSample]) -> Option<f64> {
    samples
        .iter()
        .filter(|s| s.c_receiver > s.c_sender)
        .map(|s| s.c_sender)
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Sender,
    Receiver,
}

pub fn parameter_index(name: &str) -> Result<usize> {
    SenderParams::NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::UnknownParameter(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsOptions {
    pub grid_size: usize,
    /// Quasi-random points per grid node, split evenly over the replicates.
    pub points_per_node: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            grid_size: 20,
            points_per_node: 100_000,
            replicates: 8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceStats {
    pub parameter: String,
    pub side: Side,
    pub grid: Vec<f64>,
    /// `⟨C(a)⟩` per grid node.
    pub mean: Vec<f64>,
    /// `δ_a C = sqrt(⟨C²⟩ − ⟨C⟩²)` per grid node.
    pub delta: Vec<f64>,
    /// Standard error of `⟨C(a)⟩` across replicates.
    pub stderr: Vec<f64>,
    /// `Δ_a C = max ⟨C(a)⟩ − min ⟨C(a)⟩`.
    #[serde(rename = "Delta")]
    pub variation: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl ConcurrenceStats {
    fn from_nodes(parameter: &str, side: Side, grid: Vec<f64>, nodes: &[NodeMoments]) -> Self {
        let mean: Vec<f64> = nodes.iter().map(|n| n.mean).collect();
        let delta: Vec<f64> = nodes
            .iter()
            .map(|n| (n.mean_sq - n.mean * n.mean).max(0.0).sqrt())
            .collect();
        let stderr: Vec<f64> = nodes.iter().map(|n| n.stderr).collect();
        let max = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = mean.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            parameter: parameter.to_string(),
            side,
            variation: max - min,
            delta_min: delta.iter().copied().fold(f64::INFINITY, f64::min),
            delta_max: delta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            grid,
            mean,
            delta,
            stderr,
        }
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeMoments {
    mean: f64,
    mean_sq: f64,
    stderr: f64,
}

fn summarize(per_replicate: &[(f64, f64)]) -> NodeMoments {
    let r = per_replicate.len() as f64;
    let mean = per_replicate.iter().map(|x| x.0).sum::<f64>() / r;
    let mean_sq = per_replicate.iter().map(|x| x.1).sum::<f64>() / r;
    let var = if per_replicate.len() > 1 {
        per_replicate
            .iter()
            .map(|x| (x.0 - mean).powi(2))
            .sum::<f64>()
            / (r - 1.0)
    } else {
        0.0
    };
    NodeMoments {
        mean,
        mean_sq,
        stderr: (var / r).sqrt(),
    }
}

/// Sender and (when a tensor is given) receiver statistics for one held
/// parameter, from the same quasi-random points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub sender: ConcurrenceStats,
    pub receiver: Option<ConcurrenceStats>,
}

/// Holds parameter `param` on a grid and averages `C` and `C²` over the
/// other five with weight `sin φ1 sin² φ2`, normalized per grid node.
/// Weighted angles are drawn by inverse CDF from a shifted `R_5` sequence.
pub fn param_stats(
    param: &str,
    tensor: Option<&LambdaTensor>,
    opts: &StatsOptions,
    exec: Exec,
) -> Result<ParamStats> {
    let held = parameter_index(param)?;
    if opts.grid_size < 2 || opts.replicates == 0 || opts.points_per_node < opts.replicates {
        return Err(Error::InvalidConfig(
            "stats need grid_size ≥ 2 and at least one point per replicate".into(),
        ));
    }
    let (lo, hi) = SenderParams::range(held);
    let grid: Vec<f64> = (0..opts.grid_size)
        .map(|k| lo + (hi - lo) * k as f64 / (opts.grid_size - 1) as f64)
        .collect();
    let seq = RdSequence::new(5);
    let shifts = random_shifts(opts.seed, held as u64, opts.replicates, 5);
    let per_rep = opts.points_per_node / opts.replicates;
    let free: Vec<usize> = (0..6).filter(|&k| k != held).collect();

    let results = exec.map(
        opts.grid_size,
        |node| -> Result<(NodeMoments, Option<NodeMoments>)> {
            let mut u = [0.0; 5];
            let mut v = [0.0; 6];
            v[held] = grid[node];
            let mut sender_reps = Vec::with_capacity(opts.replicates);
            let mut receiver_reps = Vec::with_capacity(opts.replicates);
            for shift in &shifts {
                let (mut s1, mut s2, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0);
                for n in 0..per_rep {
                    seq.point(n as u64, shift, &mut u);
                    for (slot, &k) in free.iter().enumerate() {
                        v[k] = match k {
                            1 => inverse_cdf_sin(u[slot]),
                            2 => inverse_cdf_sin2(u[slot]),
                            _ => 2.0 * PI * u[slot],
                        };
                    }
                    let psi = general_state(&SenderParams::from_array(v));
                    let s = density(&psi);
                    let cs = concurrence_unchecked(&s)?;
                    s1 += cs;
                    s2 += cs * cs;
                    if let Some(t) = tensor {
                        let cr = concurrence_unchecked(&receiver_of(t, &sender_matrix(t, &psi)))?;
                        r1 += cr;
                        r2 += cr * cr;
                    }
                }
                let n = per_rep as f64;
                sender_reps.push((s1 / n, s2 / n));
                receiver_reps.push((r1 / n, r2 / n));
            }
            Ok((
                summarize(&sender_reps),
                tensor.map(|_| summarize(&receiver_reps)),
            ))
        },
    );
    let mut sender_nodes = Vec::with_capacity(opts.grid_size);
    let mut receiver_nodes = Vec::with_capacity(opts.grid_size);
    for r in results {
        let (s, rcv) = r?;
        sender_nodes.push(s);
        if let Some(x) = rcv {
            receiver_nodes.push(x);
        }
    }
    let sender = ConcurrenceStats::from_nodes(param, Side::Sender, grid.clone(), &sender_nodes);
    let receiver =
        tensor.map(|_| ConcurrenceStats::from_nodes(param, Side::Receiver, grid, &receiver_nodes));
    Ok(ParamStats { sender, receiver })
}

pub fn one_param_stats(
    side: Side,
    param: &str,
    tensor: Option<&LambdaTensor>,
    opts: &StatsOptions,
    exec: Exec,
) -> Result<ConcurrenceStats> {
    match side {
        Side::Sender => Ok(param_stats(param, None, opts, exec)?.sender),
        Side::Receiver => {
            let t = tensor.ok_or_else(|| {
                Error::InvalidConfig("receiver statistics need a λ-tensor".into())
            })?;
            Ok(param_stats(param, Some(t), opts, exec)?
                .receiver
                .expect("tensor supplied"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub chi: f64,
    pub phi: f64,
    pub c_s: f64,
    pub c_r: f64,
}

/// `C_s` and `C_r` for the even-order family on an inclusive
/// `[0, 2π] × [0, π]` grid.
pub fn region_map_even(
    tensor: &LambdaTensor,
    n_chi: usize,
    n_phi: usize,
    exec: Exec,
) -> Result<Vec<RegionPoint>> {
    if n_chi < 2 || n_phi < 2 {
        return Err(Error::InvalidConfig(
            "region map needs at least 2 points per axis".into(),
        ));
    }
    let rows = exec.map(n_phi, |j| -> Result<Vec<RegionPoint>> {
        let phi = PI * j as f64 / (n_phi - 1) as f64;
        (0..n_chi)
            .map(|i| {
                let chi = 2.0 * PI * i as f64 / (n_chi - 1) as f64;
                let psi = even_state(phi, chi);
                let s = density(&psi);
                let c_s = concurrence_unchecked(&s)?;
                let c_r =
                    concurrence_unchecked(&receiver_of(tensor, &sender_matrix(tensor, &psi)))?;
                Ok(RegionPoint { chi, phi, c_s, c_r })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(n_chi * n_phi);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Points of a region map where `C_r` vanishes (below `1e-9`).
pub fn zero_region(points: &[RegionPoint]) -> Vec<RegionPoint> {
    points.iter().copied().filter(|p| p.c_r <= 1e-9).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, outer, ZERO};

    fn werner(p: f64) -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = outer(&[C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]);
        bell * C64::new(p, 0.0) + ComplexMatrix::identity(4, 4) * C64::new((1.0 - p) / 4.0, 0.0)
    }

    #[test]
    fn bell_and_product() {
        assert!((concurrence(&werner(1.0)).unwrap() - 1.0).abs() < 1e-12);
        let a = outer(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let b = outer(&[C64::new(0.28, 0.96), C64::new(0.0, 0.0)]);
        assert!(concurrence(&kron(&a, &b)).unwrap() < 1e-12);
    }

    #[test]
    fn werner_closed_form() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
            let c = concurrence(&werner(p)).unwrap();
            let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert!((c - expected).abs() < 1e-9, "p={p}: {c}");
        }
    }

    #[test]
    fn pure_state_formula() {
        let p = SenderParams::from_array([0.7, 2.0, 1.3, 0.4, 5.0, 2.2]);
        let psi = general_state(&p);
        let c = concurrence(&density(&psi)).unwrap();
        assert!((c - concurrence_pure(&psi)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_density() {
        assert!(concurrence(&ComplexMatrix::identity(4, 4)).is_err());
        assert!(concurrence(&ComplexMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn parameter_names() {
        assert_eq!(parameter_index("chi2").unwrap(), 4);
        assert!(matches!(
            parameter_index("theta"),
            Err(Error::UnknownParameter(_))
        ));
    }

    #[test]
    fn even_family_concurrence() {
        for &phi in &[0.0, 0.4, PI / 2.0, 2.5, PI] {
            for &chi in &[0.0, 1.0, 4.0] {
                let c = concurrence(&density(&even_state(phi, chi))).unwrap();
                assert!((c - phi.sin()).abs() < 1e-12, "phi={phi} chi={chi}: {c}");
            }
        }
    }

    #[test]
    fn agrees_with_spectral_path() {
        for p in [0.0, 0.3, 0.6, 0.9] {
            let w = werner(p);
            assert!((concurrence(&w).unwrap() - concurrence_spectral(&w).unwrap()).abs() < 1e-7);
        }
        let psi = general_state(&SenderParams::from_array([1.7, 0.8, 2.6, 3.0, 1.1, 0.3]));
        let s = density(&psi);
        assert!((concurrence(&s).unwrap() - concurrence_spectral(&s).unwrap()).abs() < 1e-7);
    }
}
