//! Experiment configuration: compiled defaults, then a TOML or JSON file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xychain::restoring::SolverOptions;
use xychain::{ChainConfig, CommLayout, RestoreMode};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub n_spins: usize,
    pub coupling: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            n_spins: 6,
            coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub n_sender: usize,
    pub n_receiver: usize,
    pub n_extended: usize,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            n_sender: 2,
            n_receiver: 2,
            n_extended: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub horizon: f64,
    pub step: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            n_starts: d.n_starts,
            seed: d.seed,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Scatter samples.
    pub n_samples: usize,
    /// Quasi-random points per grid node for the one-parameter statistics.
    pub stats_points: usize,
    pub grid_size: usize,
    pub replicates: usize,
    pub seed: u64,
    pub quad_nodes: usize,
    pub region_chi: usize,
    pub region_phi: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            stats_points: 100_000,
            grid_size: 20,
            replicates: 8,
            seed: 7,
            quad_nodes: 32,
            region_chi: 101,
            region_phi: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainSection,
    pub layout: LayoutSection,
    pub mode: RestoreMode,
    pub scan: ScanSection,
    pub solver: SolverSection,
    pub sampling: SamplingSection,
    /// Registration time; found by a fidelity scan when absent.
    pub tau: Option<f64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chain: ChainSection::default(),
            layout: LayoutSection::default(),
            mode: RestoreMode::AllOrders,
            scan: ScanSection::default(),
            solver: SolverSection::default(),
            sampling: SamplingSection::default(),
            tau: None,
            out: PathBuf::from("results"),
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub starts: Option<usize>,
    pub samples: Option<usize>,
    pub mode: Option<RestoreMode>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default();
        match ext {
            "toml" => toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            "json" => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            _ => Err(CliError::Config(format!(
                "{}: expected a .toml or .json file",
                path.display()
            ))),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.tau {
            self.tau = Some(t);
        }
        if let Some(s) = o.seed {
            self.solver.seed = s;
        }
        if let Some(n) = o.starts {
            self.solver.n_starts = n;
        }
        if let Some(n) = o.samples {
            self.sampling.n_samples = n;
            self.sampling.stats_points = n;
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.chain_config()?;
        self.comm_layout()?;
        self.solver_options()
            .validate()
            .map_err(|e| field("solver", e))?;
        let s = &self.scan;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "scan.horizon must be positive, got {}",
                s.horizon
            )));
        }
        if !(s.step > 0.0 && s.step <= s.horizon) {
            return Err(CliError::Config(format!(
                "scan.step must be in (0, horizon], got {}",
                s.step
            )));
        }
        let m = &self.sampling;
        if m.grid_size < 2 {
            return Err(CliError::Config(
                "sampling.grid_size must be at least 2".into(),
            ));
        }
        if m.replicates == 0 || m.stats_points < m.replicates {
            return Err(CliError::Config(
                "sampling.stats_points must be at least sampling.replicates ≥ 1".into(),
            ));
        }
        if m.quad_nodes == 0 || m.region_chi == 0 || m.region_phi == 0 {
            return Err(CliError::Config(
                "sampling.quad_nodes and region sizes must be positive".into(),
            ));
        }
        if let Some(t) = self.tau {
            if !t.is_finite() || t < 0.0 {
                return Err(CliError::Config(format!(
                    "tau must be finite and non-negative, got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn chain_config(&self) -> Result<ChainConfig, CliError> {
        ChainConfig::new(self.chain.n_spins, self.chain.coupling).map_err(|e| field("chain", e))
    }

    pub fn comm_layout(&self) -> Result<CommLayout, CliError> {
        let l = &self.layout;
        CommLayout::new(self.chain.n_spins, l.n_sender, l.n_receiver, l.n_extended)
            .map_err(|e| field("layout", e))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            n_starts: self.solver.n_starts,
            seed: self.solver.seed,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            ..SolverOptions::default()
        }
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.out = PathBuf::new();
        let text = serde_json::to_string(&copy).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn field(section: &str, e: xychain::Error) -> CliError {
    CliError::Config(format!("{section}: {e}"))
}
