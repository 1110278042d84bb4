use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::system::RestoringSystem;
use super::targets::{restored_fraction, RestoreMode};
use super::unitary::UnitaryParams;
use crate::comm_line::{initial_state, receiver_state, CommLayout, LambdaTensor};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    /// Receiver element `(row, col)`, 0-based graded positions.
    pub pos: [usize; 2],
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub arg: f64,
}

impl LambdaEntry {
    pub fn new(pos: (usize, usize), value: C64) -> Self {
        Self {
            pos: [pos.0, pos.1],
            re: value.re,
            im: value.im,
            abs: value.norm(),
            arg: value.arg(),
        }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `N_r = restored / total`.
    pub restored: usize,
    pub total: usize,
    /// `Λ`, absent when nothing is restored.
    pub lambda_min: Option<f64>,
    /// `Λ_avr`, absent when nothing is restored.
    pub lambda_avr: Option<f64>,
}

impl Metrics {
    pub fn from_lambdas(lambdas: &[LambdaEntry], total: usize) -> Self {
        let restored = lambdas.len();
        if restored == 0 {
            return Self {
                restored,
                total,
                lambda_min: None,
                lambda_avr: None,
            };
        }
        let min = lambdas.iter().map(|l| l.abs).fold(f64::INFINITY, f64::min);
        let avr = lambdas.iter().map(|l| l.abs).sum::<f64>() / restored as f64;
        Self {
            restored,
            total,
            lambda_min: Some(min),
            lambda_avr: Some(avr),
        }
    }

    pub fn restored_fraction(&self) -> f64 {
        self.restored as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreSolution {
    pub layout: CommLayout,
    /// Coupling of the chain the propagator came from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    pub tau: f64,
    pub mode: RestoreMode,
    pub seed: u64,
    pub start: usize,
    pub phi: Vec<f64>,
    pub residual: f64,
    pub lambdas: Vec<LambdaEntry>,
    pub metrics: Metrics,
}

impl RestoreSolution {
    pub fn from_system(
        system: &RestoringSystem,
        phi: Vec<f64>,
        residual: f64,
        seed: u64,
        start: usize,
    ) -> Self {
        let lambdas: Vec<LambdaEntry> = system
            .restored_lambdas(&phi)
            .into_iter()
            .map(|(pos, v)| LambdaEntry::new(pos, v))
            .collect();
        let (_, total) = restored_fraction(&system.bases().receiver, system.targets());
        let metrics = Metrics::from_lambdas(&lambdas, total);
        Self {
            layout: *system.layout(),
            coupling: system.coupling(),
            tau: system.tau(),
            mode: system.mode(),
            seed,
            start,
            phi,
            residual,
            lambdas,
            metrics,
        }
    }

    pub fn params(&self) -> Result<UnitaryParams> {
        let basis = crate::chain::GradedBasis::new(self.layout.n_extended)?;
        UnitaryParams::with_angles(&basis, self.phi.clone())
    }

    pub fn lambda(&self, row: usize, col: usize) -> Option<C64> {
        self.lambdas
            .iter()
            .find(|l| l.pos == [row, col])
            .map(LambdaEntry::value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("solution file: {e}")))
    }
}

/// Best first: larger `Λ`, then larger `Λ_avr`, then smaller residual, then
/// lower start index.
pub fn rank(a: &RestoreSolution, b: &RestoreSolution) -> Ordering {
    let key = |s: &RestoreSolution| {
        (
            s.metrics.lambda_min.unwrap_or(f64::INFINITY),
            s.metrics.lambda_avr.unwrap_or(f64::INFINITY),
        )
    };
    let (ka, kb) = (key(a), key(b));
    kb.0.total_cmp(&ka.0)
        .then(kb.1.total_cmp(&ka.1))
        .then(a.residual.total_cmp(&b.residual))
        .then(a.start.cmp(&b.start))
}

/// Solution maximizing `Λ` (ties as in [`rank`]).
pub fn select_optimal(solutions: &[RestoreSolution]) -> Result<&RestoreSolution> {
    solutions
        .iter()
        .min_by(|a, b| rank(a, b))
        .ok_or(Error::EmptySolutions)
}

#[derive(Debug, Clone)]
pub struct RestoringCheck {
    /// Largest `|r_ij − λ_ij s_ij|` over targets and states.
    pub max_deviation: f64,
    /// Largest spread of `r_ij / s_ij` across states, over targets where
    /// `|s_ij|` is not small.
    pub universality_spread: f64,
    /// Largest `|λ|` among restored elements.
    pub max_lambda_abs: f64,
}

/// Propagates each sender state through the full chain with the restoring
/// unitary applied and compares targeted receiver elements with `λ s`.
pub fn check_restoring(
    system: &RestoringSystem,
    solution: &RestoreSolution,
    states: &[ComplexMatrix],
) -> Result<RestoringCheck> {
    let w = system.total_unitary(&solution.phi)?;
    let w_adj = w.adjoint();
    let mut max_deviation: f64 = 0.0;
    let mut ratios: Vec<Vec<C64>> = vec![Vec::new(); solution.lambdas.len()];
    for s in states {
        let rho = initial_state(s, system.layout())?;
        let r = receiver_state(&(&w * rho * &w_adj), system.layout())?;
        for (k, entry) in solution.lambdas.iter().enumerate() {
            let (i, j) = (entry.pos[0], entry.pos[1]);
            max_deviation = max_deviation.max((r[(i, j)] - entry.value() * s[(i, j)]).norm());
            if s[(i, j)].norm() > 1e-3 {
                ratios[k].push(r[(i, j)] / s[(i, j)]);
            }
        }
    }
    let universality_spread = ratios
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| {
            let mut worst: f64 = 0.0;
            for x in v {
                for y in v {
                    worst = worst.max((x - y).norm());
                }
            }
            worst
        })
        .fold(0.0, f64::max);
    let max_lambda_abs = solution.lambdas.iter().map(|l| l.abs).fold(0.0, f64::max);
    Ok(RestoringCheck {
        max_deviation,
        universality_spread,
        max_lambda_abs,
    })
}

fn polar(z: C64) -> String {
    format!("{:.4} e^{{{:.4} i}}", z.norm(), z.arg())
}

/// Plain-text receiver matrix: restored elements as `λ s_ij`, the others
/// expanded over all sender elements they depend on. Positions are 1-based.
pub fn restored_matrix_report(solution: &RestoreSolution, tensor: &LambdaTensor) -> String {
    let dr = tensor.receiver_dim();
    let ds = tensor.sender_dim();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode: {}  tau: {}  start: {}  seed: {}",
        solution.mode, solution.tau, solution.start, solution.seed
    );
    let _ = writeln!(
        out,
        "N_r = {}/{}  Lambda = {}  Lambda_avr = {}  residual = {:.3e}",
        solution.metrics.restored,
        solution.metrics.total,
        solution
            .metrics
            .lambda_min
            .map_or("-".into(), |x| format!("{x:.4}")),
        solution
            .metrics
            .lambda_avr
            .map_or("-".into(), |x| format!("{x:.4}")),
        solution.residual
    );
    let _ = writeln!(out);
    for a in 0..dr {
        let cells: Vec<String> = (0..dr)
            .map(|b| match solution.lambda(a, b) {
                Some(l) if a < b => format!("{} s{}{}", polar(l), a + 1, b + 1),
                Some(l) => format!("{} s*{}{}", polar(l), b + 1, a + 1),
                None if a <= b => format!("r{}{}", a + 1, b + 1),
                None => format!("r*{}{}", b + 1, a + 1),
            })
            .collect();
        let _ = writeln!(out, "  [ {} ]", cells.join(" | "));
    }
    let _ = writeln!(out);
    for a in 0..dr {
        for b in a..dr {
            if solution.lambda(a, b).is_some() {
                continue;
            }
            let mut terms = Vec::new();
            for c in 0..ds {
                for d in 0..ds {
                    let l = tensor.get(a, b, c, d);
                    if l.norm() >= 5e-5 {
                        terms.push(format!("{} s{}{}", polar(l), c + 1, d + 1));
                    }
                }
            }
            let body = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            };
            let _ = writeln!(out, "r{}{} = {}", a + 1, b + 1, body);
        }
    }
    out
}
