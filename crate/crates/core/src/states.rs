//! Parameterized pure sender states and the measures used to average over
//! them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comm_line::CommLayout;
use crate::error::{Error, Result};
use crate::linalg::{outer, ComplexMatrix, C64, ZERO};
use crate::quadrature::IntervalRule;
use crate::restoring::RestoreMode;
use crate::sampling::{inverse_cdf_sin, inverse_cdf_sin2};

use std::f64::consts::PI;

/// Angles of a general two-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenderParams {
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
}

impl SenderParams {
    pub const NAMES: [&'static str; 6] = ["phi0", "phi1", "phi2", "chi1", "chi2", "chi3"];

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            phi0: v[0],
            phi1: v[1],
            phi2: v[2],
            chi1: v[3],
            chi2: v[4],
            chi3: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.phi0, self.phi1, self.phi2, self.chi1, self.chi2, self.chi3,
        ]
    }

    /// Range of each parameter: `[0, 2π]` except `φ1, φ2 ∈ [0, π]`.
    pub fn range(index: usize) -> (f64, f64) {
        match index {
            1 | 2 => (0.0, PI),
            _ => (0.0, 2.0 * PI),
        }
    }
}

pub fn general_amplitudes(phi0: f64, phi1: f64, phi2: f64) -> [f64; 4] {
    let (s0, c0) = (phi0 / 2.0).sin_cos();
    let (s1, c1) = (phi1 / 2.0).sin_cos();
    let (s2, c2) = (phi2 / 2.0).sin_cos();
    [s0 * s1 * s2, c0 * s1 * s2, c1 * s2, c2]
}

/// `(sin sin sin, e^{iχ1} cos sin sin, e^{iχ2} cos sin, e^{iχ3} cos)` of the
/// half angles.
pub fn general_state(p: &SenderParams) -> [C64; 4] {
    let a = general_amplitudes(p.phi0, p.phi1, p.phi2);
    [
        C64::new(a[0], 0.0),
        C64::from_polar(a[1], p.chi1),
        C64::from_polar(a[2], p.chi2),
        C64::from_polar(a[3], p.chi3),
    ]
}

/// `(sin(φ/2), 0, 0, e^{iχ} cos(φ/2))`: only orders 0 and ±2.
pub fn even_state(phi: f64, chi: f64) -> [C64; 4] {
    let (s, c) = (phi / 2.0).sin_cos();
    [C64::new(s, 0.0), ZERO, ZERO, C64::from_polar(c, chi)]
}

/// `(cos(θ/2), e^{iχ} sin(θ/2))`.
pub fn bloch_state(theta: f64, chi: f64) -> [C64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::from_polar(s, chi)]
}

pub fn density(psi: &[C64]) -> ComplexMatrix {
    outer(psi)
}

/// Distribution of pure sender states used for averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMeasure {
    /// Six angles, weight `sin φ1 sin² φ2`, all phases uniform.
    General,
    /// `(φ, χ)` family of [`even_state`], weight `sin φ`.
    EvenOnly,
    /// One-qubit states, weight `sin θ`.
    Bloch,
}

/// `E[conj ψ_a ψ_b ψ_c conj ψ_d]` over a [`StateMeasure`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor {
    dim: usize,
    values: Vec<f64>,
}

impl MomentTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.values[((a * self.dim + b) * self.dim + c) * self.dim + d]
    }
}

struct Family {
    dim: usize,
    /// Phase index carried by each component.
    charges: &'static [Option<usize>],
    n_phases: usize,
    angle_rules: Vec<IntervalRule>,
    amplitudes: fn(&[f64]) -> [f64; 4],
}

impl StateMeasure {
    pub fn for_layout(layout: &CommLayout, mode: RestoreMode) -> Result<Self> {
        match (layout.n_sender, mode) {
            (1, _) => Ok(StateMeasure::Bloch),
            (2, RestoreMode::AllOrders) => Ok(StateMeasure::General),
            (2, RestoreMode::EvenOnly) => Ok(StateMeasure::EvenOnly),
            (n, _) => Err(Error::InvalidConfig(format!(
                "no state family for a {n}-qubit sender"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            StateMeasure::Bloch => 2,
            _ => 4,
        }
    }

    fn family(&self, nodes: usize) -> Family {
        let rule = |a: f64, b: f64, w: fn(f64) -> f64| {
            let mut r = IntervalRule::gauss_legendre(nodes, a, b);
            for (x, wt) in r.nodes.iter().zip(r.weights.iter_mut()) {
                *wt *= w(*x);
            }
            r
        };
        match self {
            StateMeasure::General => Family {
                dim: 4,
                charges: &[None, Some(0), Some(1), Some(2)],
                n_phases: 3,
                angle_rules: vec![
                    rule(0.0, 2.0 * PI, |_| 1.0),
                    rule(0.0, PI, f64::sin),
                    rule(0.0, PI, |x| x.sin().powi(2)),
                ],
                amplitudes: |a| general_amplitudes(a[0], a[1], a[2]),
            },
            StateMeasure::EvenOnly => Family {
                dim: 4,
                charges: &[None, None, None, Some(0)],
                n_phases: 1,
                angle_rules: vec![rule(0.0, PI, f64::sin)],
                amplitudes: |a| {
                    let (s, c) = (a[0] / 2.0).sin_cos();
                    [s, 0.0, 0.0, c]
                },
            },
            StateMeasure::Bloch => Family {
                dim: 2,
                charges: &[None, Some(0)],
                n_phases: 1,
                angle_rules: vec![rule(0.0, PI, f64::sin)],
                amplitudes: |a| {
                    let (s, c) = (a[0] / 2.0).sin_cos();
                    [c, s, 0.0, 0.0]
                },
            },
        }
    }

    /// Total volume `∫ J` over angles and phases.
    pub fn volume(&self, nodes: usize) -> f64 {
        let fam = self.family(nodes);
        let angular: f64 = fam
            .angle_rules
            .iter()
            .map(|r| r.weights.iter().sum::<f64>())
            .product();
        angular * (2.0 * PI).powi(fam.n_phases as i32)
    }

    /// Fourth moments by the phase selection rule and tensor-product
    /// quadrature over the angles.
    pub fn moment_tensor(&self, nodes: usize) -> MomentTensor {
        let fam = self.family(nodes);
        let d = fam.dim;
        let balanced = |a: usize, b: usize, c: usize, dd: usize| {
            (0..fam.n_phases).all(|k| {
                let q = |i: usize| (fam.charges[i] == Some(k)) as i32;
                q(b) + q(c) - q(a) - q(dd) == 0
            })
        };
        let mut values = vec![0.0; d * d * d * d];
        let sizes: Vec<usize> = fam.angle_rules.iter().map(IntervalRule::len).collect();
        let mut idx = vec![0usize; sizes.len()];
        let mut angles = vec![0.0; sizes.len()];
        let mut total_weight = 0.0;
        'outer: loop {
            let mut w = 1.0;
            for (k, r) in fam.angle_rules.iter().enumerate() {
                angles[k] = r.nodes[idx[k]];
                w *= r.weights[idx[k]];
            }
            total_weight += w;
            let amp = (fam.amplitudes)(&angles);
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        for dd in 0..d {
                            values[((a * d + b) * d + c) * d + dd] +=
                                w * amp[a] * amp[b] * amp[c] * amp[dd];
                        }
                    }
                }
            }
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < sizes[k] {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let v = &mut values[((a * d + b) * d + c) * d + dd];
                        *v = if balanced(a, b, c, dd) {
                            *v / total_weight
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        MomentTensor { dim: d, values }
    }

    /// One state drawn from the measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        let two_pi = 2.0 * PI;
        match self {
            StateMeasure::General => {
                let p = SenderParams {
                    phi0: rng.random::<f64>() * two_pi,
                    phi1: inverse_cdf_sin(rng.random()),
                    phi2: inverse_cdf_sin2(rng.random()),
                    chi1: rng.random::<f64>() * two_pi,
                    chi2: rng.random::<f64>() * two_pi,
                    chi3: rng.random::<f64>() * two_pi,
                };
                general_state(&p).to_vec()
            }
            StateMeasure::EvenOnly => {
                let phi = inverse_cdf_sin(rng.random());
                even_state(phi, rng.random::<f64>() * two_pi).to_vec()
            }
            StateMeasure::Bloch => {
                let theta = inverse_cdf_sin(rng.random());
                bloch_state(theta, rng.random::<f64>() * two_pi).to_vec()
            }
        }
    }
}
