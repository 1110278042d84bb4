use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use xychain::chain::GradedBasis;
use xychain::coherence::decompose;
use xychain::entanglement::{
    amplification_threshold, param_stats, region_map_even, scatter_experiment, zero_region,
    ConcurrenceStats, StatsOptions,
};
use xychain::io::{read_csv, write_csv, write_json, write_text};
use xychain::linalg::max_norm;
use xychain::registration::{fidelity_of_tensor, scan_for_tau0, FidelityModel, ScanSummary};
use xychain::restoring::{
    restored_matrix_report, select_optimal, solve_restoring, RestoringSystem,
};
use xychain::states::{SenderParams, StateMeasure};
use xychain::{ChainConfig, ComplexMatrix, Exec, RestoreMode, RestoreSolution, C64};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SCAN_CSV: &str = "fidelity_scan.csv";
pub const SCAN_SUMMARY: &str = "fidelity_summary.json";
pub const SOLUTIONS: &str = "solutions.json";
pub const BEST_SOLUTION: &str = "best_solution.json";
pub const REPORT: &str = "restored_matrix.txt";
pub const MANIFEST: &str = "manifest.json";

/// Reference values quoted next to the computed ones in reports.
const REFERENCE_F_ALL: f64 = 0.2489;
const REFERENCE_F_EVEN: f64 = 0.6569;
const REFERENCE_THRESHOLD: f64 = 0.561;
/// Parameter, `Δ C_s`, `δ C_s` range, `Δ C_r`, `δ C_r` range.
type TableEntry = (&'static str, f64, [f64; 2], f64, [f64; 2]);

const REFERENCE_TABLE: [TableEntry; 6] = [
    ("phi0", 0.389, [0.136, 0.235], 0.229, [0.081, 0.208]),
    ("phi1", 0.540, [0.0, 0.299], 0.106, [0.057, 0.226]),
    ("phi2", 0.499, [0.0, 0.296], 0.386, [0.003, 0.259]),
    ("chi1", 0.001, [0.227, 0.229], 0.0, [0.186, 0.187]),
    ("chi2", 0.001, [0.227, 0.230], 0.0, [0.186, 0.186]),
    ("chi3", 0.001, [0.227, 0.230], 0.018, [0.183, 0.190]),
];

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn exec() -> Exec {
    Exec::default()
}

pub fn scan_fidelity(
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(ScanSummary, Vec<PathBuf>), CliError> {
    ensure_dir(dir)?;
    let layout = cfg.comm_layout()?;
    let measure = StateMeasure::for_layout(&layout, RestoreMode::AllOrders)?;
    let model = FidelityModel::with_nodes(
        &cfg.chain_config()?,
        &layout,
        measure,
        cfg.sampling.quad_nodes,
    )?;
    let scan = scan_for_tau0(&model, cfg.scan.horizon, cfg.scan.step, exec())?;
    let csv = dir.join(SCAN_CSV);
    write_csv(
        &csv,
        &["tau", "fidelity"],
        scan.grid.iter().map(|&(t, f)| vec![t, f]),
    )?;
    let summary = scan.summary();
    let json = dir.join(SCAN_SUMMARY);
    write_json(&json, &summary)?;
    println!(
        "tau0 = {:.6}, F = {:.6}{}",
        summary.tau0,
        summary.f0,
        if summary.boundary {
            " (at the end of the scanned interval)"
        } else {
            ""
        }
    );
    Ok((summary, vec![csv, json]))
}

/// Registration time: explicit value, else a previous scan in `dir`, else a
/// fresh scan.
pub fn resolve_tau(cfg: &ExperimentConfig, dir: &Path) -> Result<(f64, Vec<PathBuf>), CliError> {
    if let Some(t) = cfg.tau {
        return Ok((t, Vec::new()));
    }
    let previous = dir.join(SCAN_SUMMARY);
    if previous.exists() {
        let text = fs::read_to_string(&previous)
            .map_err(|e| CliError::Io(format!("{}: {e}", previous.display())))?;
        let s: ScanSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", previous.display())))?;
        return Ok((s.tau0, Vec::new()));
    }
    let (s, files) = scan_fidelity(cfg, dir)?;
    Ok((s.tau0, files))
}

fn restored_fidelity(
    system: &RestoringSystem,
    solution: &RestoreSolution,
    nodes: usize,
) -> Result<f64, CliError> {
    let measure = StateMeasure::for_layout(system.layout(), system.mode())?;
    Ok(fidelity_of_tensor(
        &system.lambda_tensor(&solution.phi),
        &measure.moment_tensor(nodes),
    ))
}

pub fn solve(
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(RestoreSolution, Vec<PathBuf>), CliError> {
    ensure_dir(dir)?;
    let (tau, mut files) = resolve_tau(cfg, dir)?;
    let system =
        RestoringSystem::from_chain(&cfg.chain_config()?, &cfg.comm_layout()?, cfg.mode, tau)?;
    let solutions = solve_restoring(&system, &cfg.solver_options(), exec())?;
    let best = select_optimal(&solutions)?.clone();

    let all = dir.join(SOLUTIONS);
    write_json(&all, &solutions)?;
    let best_path = dir.join(BEST_SOLUTION);
    write_json(&best_path, &best)?;

    let f = restored_fidelity(&system, &best, cfg.sampling.quad_nodes)?;
    let reference = match cfg.mode {
        RestoreMode::AllOrders => REFERENCE_F_ALL,
        RestoreMode::EvenOnly => REFERENCE_F_EVEN,
    };
    let mut report = restored_matrix_report(&best, &system.lambda_tensor(&best.phi));
    report.push_str(&format!(
        "\naccepted solutions: {} of {} starts\nrestored-channel fidelity F = {f:.4} (reference {reference})\n",
        solutions.len(),
        cfg.solver.n_starts
    ));
    let report_path = dir.join(REPORT);
    write_text(&report_path, &report)?;

    let m = &best.metrics;
    println!(
        "{}: tau = {tau:.4}, {} of {} starts accepted, N_r = {}/{}, Lambda = {:.4}, Lambda_avr = {:.4}, F = {f:.4}",
        cfg.mode,
        solutions.len(),
        cfg.solver.n_starts,
        m.restored,
        m.total,
        m.lambda_min.unwrap_or(f64::NAN),
        m.lambda_avr.unwrap_or(f64::NAN)
    );
    files.extend([all, best_path, report_path]);
    Ok((best, files))
}

pub fn load_solution(path: &Path) -> Result<RestoreSolution, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    RestoreSolution::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn system_for(
    cfg: &ExperimentConfig,
    solution: &RestoreSolution,
) -> Result<RestoringSystem, CliError> {
    if solution.mode != cfg.mode {
        return Err(CliError::Config(format!(
            "solution was computed for mode {} but the configuration asks for {}",
            solution.mode, cfg.mode
        )));
    }
    let coupling = solution.coupling.unwrap_or(cfg.chain.coupling);
    let chain = ChainConfig::new(solution.layout.n_total, coupling)?;
    let system =
        RestoringSystem::from_chain(&chain, &solution.layout, solution.mode, solution.tau)?;
    if solution.phi.len() != system.generators().len() {
        return Err(CliError::Config(format!(
            "solution has {} angles, the layout needs {}",
            solution.phi.len(),
            system.generators().len()
        )));
    }
    Ok(system)
}

fn write_stats(dir: &Path, tag: &str, s: &ConcurrenceStats) -> Result<Vec<PathBuf>, CliError> {
    let csv = dir.join(format!("stats_{tag}_{}.csv", s.parameter));
    write_csv(
        &csv,
        &["a_value", "mean", "delta"],
        s.grid
            .iter()
            .zip(&s.mean)
            .zip(&s.delta)
            .map(|((a, m), d)| vec![*a, *m, *d]),
    )?;
    let json_path = dir.join(format!("stats_{tag}_{}.json", s.parameter));
    write_json(
        &json_path,
        &json!({
            "parameter": s.parameter,
            "side": s.side,
            "Delta": s.variation,
            "delta_min": s.delta_min,
            "delta_max": s.delta_max,
            "stderr": s.max_stderr(),
        }),
    )?;
    Ok(vec![csv, json_path])
}

#[derive(Serialize)]
struct TableRow {
    parameter: String,
    #[serde(rename = "Delta_s")]
    delta_s_variation: f64,
    delta_s: [f64; 2],
    #[serde(rename = "Delta_r")]
    delta_r_variation: f64,
    delta_r: [f64; 2],
    stderr_s: f64,
    stderr_r: f64,
    reference: serde_json::Value,
}

pub fn entanglement(
    cfg: &ExperimentConfig,
    dir: &Path,
    solution: &RestoreSolution,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let system = system_for(cfg, solution)?;
    let tensor = system.lambda_tensor(&solution.phi);
    let s = &cfg.sampling;
    let mut files = Vec::new();
    match solution.mode {
        RestoreMode::AllOrders => {
            let samples = scatter_experiment(&tensor, s.n_samples, s.seed, exec())?;
            let scatter = dir.join("scatter.csv");
            let mut header: Vec<&str> = SenderParams::NAMES.to_vec();
            header.extend(["c_s", "c_r"]);
            write_csv(
                &scatter,
                &header,
                samples.iter().map(|x| {
                    let mut row = x.params.to_array().to_vec();
                    row.extend([x.c_sender, x.c_receiver]);
                    row
                }),
            )?;
            let amplified = samples.iter().filter(|x| x.c_receiver > x.c_sender).count();
            let threshold = amplification_threshold(&samples);
            let summary = dir.join("scatter_summary.json");
            write_json(
                &summary,
                &json!({
                    "n_samples": samples.len(),
                    "seed": s.seed,
                    "amplified": amplified,
                    "threshold": threshold,
                    "reference_threshold": REFERENCE_THRESHOLD,
                }),
            )?;
            files.extend([scatter, summary]);
            println!(
                "scatter: {amplified} of {} samples amplified, largest such C_s = {}",
                samples.len(),
                threshold.map_or("-".into(), |t| format!("{t:.4}"))
            );

            let opts = StatsOptions {
                grid_size: s.grid_size,
                points_per_node: s.stats_points,
                replicates: s.replicates,
                seed: s.seed,
            };
            let mut rows = Vec::new();
            for (name, ds, ds_range, dr, dr_range) in REFERENCE_TABLE {
                let st = param_stats(name, Some(&tensor), &opts, exec())?;
                let rcv = st.receiver.expect("tensor supplied");
                files.extend(write_stats(dir, "s", &st.sender)?);
                files.extend(write_stats(dir, "r", &rcv)?);
                println!(
                    "{name}: Delta C_s = {:.3}, Delta C_r = {:.3}",
                    st.sender.variation, rcv.variation
                );
                rows.push(TableRow {
                    parameter: name.to_string(),
                    delta_s_variation: st.sender.variation,
                    delta_s: [st.sender.delta_min, st.sender.delta_max],
                    delta_r_variation: rcv.variation,
                    delta_r: [rcv.delta_min, rcv.delta_max],
                    stderr_s: st.sender.max_stderr(),
                    stderr_r: rcv.max_stderr(),
                    reference: json!({"Delta_s": ds, "delta_s": ds_range, "Delta_r": dr, "delta_r": dr_range}),
                });
            }
            let table = dir.join("table1.json");
            write_json(
                &table,
                &json!({
                    "grid_size": s.grid_size,
                    "points_per_node": s.stats_points,
                    "replicates": s.replicates,
                    "seed": s.seed,
                    "rows": rows,
                }),
            )?;
            files.push(table);
        }
        RestoreMode::EvenOnly => {
            let points = region_map_even(&tensor, s.region_chi, s.region_phi, exec())?;
            let map = dir.join("region_map.csv");
            write_csv(
                &map,
                &["chi", "phi", "c_s", "c_r"],
                points.iter().map(|p| vec![p.chi, p.phi, p.c_s, p.c_r]),
            )?;
            let zero = zero_region(&points);
            let amplified = points.iter().filter(|p| p.c_r > p.c_s).count();
            let summary = dir.join("region_summary.json");
            write_json(
                &summary,
                &json!({
                    "n_chi": s.region_chi,
                    "n_phi": s.region_phi,
                    "zero_region_points": zero.len(),
                    "amplified_points": amplified,
                    "max_c_r": points.iter().map(|p| p.c_r).fold(0.0, f64::max),
                }),
            )?;
            println!(
                "region map: {} points, {} with C_r = 0, {amplified} with C_r > C_s",
                points.len(),
                zero.len()
            );
            files.extend([map, summary]);
        }
    }
    Ok(files)
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

fn file_entry(root: &Path, path: &Path) -> Result<ManifestEntry, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(ManifestEntry {
        path: rel.to_string_lossy().replace('\\', "/"),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Scan, both restoring modes, entanglement analyses and a manifest.
pub fn run_paper(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let root = cfg.out.clone();
    ensure_dir(&root)?;
    let mut files = Vec::new();
    let config_path = root.join("config.json");
    let mut recorded = cfg.clone();
    recorded.out = PathBuf::new();
    write_json(&config_path, &recorded)?;
    files.push(config_path);

    let tau = match cfg.tau {
        Some(t) => t,
        None => {
            let (summary, scan_files) = scan_fidelity(cfg, &root)?;
            files.extend(scan_files);
            summary.tau0
        }
    };
    for mode in [RestoreMode::AllOrders, RestoreMode::EvenOnly] {
        let mut sub = cfg.clone();
        sub.mode = mode;
        sub.tau = Some(tau);
        let dir = root.join(mode.as_str());
        let (best, solve_files) = solve(&sub, &dir)?;
        files.extend(solve_files);
        files.extend(entanglement(&sub, &dir, &best)?);
    }

    let entries = files
        .iter()
        .map(|p| file_entry(&root, p))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = root.join(MANIFEST);
    write_json(
        &manifest,
        &json!({
            "config_hash": cfg.hash(),
            "solver_seed": cfg.solver.seed,
            "sampling_seed": cfg.sampling.seed,
            "tau0": tau,
            "files": entries,
        }),
    )?;
    files.push(manifest);
    println!("wrote {} files to {}", files.len(), root.display());
    Ok(files)
}

/// Orders present in a density matrix stored as JSON `{"re": [[..]], "im":
/// [[..]]}` in computational order, or as a CSV of `re,im` rows in
/// row-major order.
pub fn decompose_file(path: &Path) -> Result<String, CliError> {
    let rho = read_state(path)?;
    let dim = rho.nrows();
    if dim != rho.ncols() || !dim.is_power_of_two() || dim < 2 {
        return Err(CliError::Config(format!(
            "state must be a square 2^n matrix, got {}x{}",
            dim,
            rho.ncols()
        )));
    }
    let basis = GradedBasis::new(dim.trailing_zeros() as usize)?;
    let dec = decompose(&basis.to_graded(&rho), &basis)?;
    let mut out = String::new();
    for (n, m) in &dec.order_matrices {
        let norm = max_norm(m);
        if norm > 0.0 {
            out.push_str(&format!("order {n:+}: max |entry| = {norm:.6e}\n"));
        }
    }
    out.push_str(&format!(
        "odd orders: max |entry| = {:.6e}\n",
        dec.odd_max_norm()
    ));
    Ok(out)
}

fn read_state(path: &Path) -> Result<ComplexMatrix, CliError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default();
    match ext {
        "json" => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let part = |key: &str| -> Result<Vec<Vec<f64>>, CliError> {
                match v.get(key) {
                    None => Ok(Vec::new()),
                    Some(x) => serde_json::from_value(x.clone()).map_err(|e| {
                        CliError::Config(format!("{}: field {key}: {e}", path.display()))
                    }),
                }
            };
            let (re, im) = (part("re")?, part("im")?);
            let n = re.len();
            if n == 0
                || re.iter().any(|r| r.len() != n)
                || !(im.is_empty() || (im.len() == n && im.iter().all(|r| r.len() == n)))
            {
                return Err(CliError::Config(format!(
                    "{}: re/im must be square arrays of one size",
                    path.display()
                )));
            }
            Ok(ComplexMatrix::from_fn(n, n, |i, j| {
                C64::new(re[i][j], if im.is_empty() { 0.0 } else { im[i][j] })
            }))
        }
        "csv" => {
            let (_, rows) = read_csv(path)?;
            let n = (rows.len() as f64).sqrt().round() as usize;
            if n * n != rows.len() || rows.iter().any(|r| r.len() != 2) {
                return Err(CliError::Config(format!(
                    "{}: expected n^2 rows of re,im",
                    path.display()
                )));
            }
            Ok(ComplexMatrix::from_fn(n, n, |i, j| {
                C64::new(rows[i * n + j][0], rows[i * n + j][1])
            }))
        }
        _ => Err(CliError::Config(format!(
            "{}: expected a .json or .csv state file",
            path.display()
        ))),
    }
}
