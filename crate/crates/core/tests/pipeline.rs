use std::f64::consts::{PI, TAU};

use xychain::entanglement::{param_stats, region_map_even, scatter_experiment, StatsOptions};
use xychain::io::{format_float, read_csv, write_csv};
use xychain::registration::{scan_for_tau0, FidelityModel};
use xychain::restoring::*;
use xychain::states::{density, general_state, SenderParams, StateMeasure};
use xychain::*;

fn reference_system(mode: RestoreMode) -> RestoringSystem {
    let chain = ChainConfig::new(6, 1.0).unwrap();
    RestoringSystem::from_chain(&chain, &CommLayout::reference(), mode, 55.5352).unwrap()
}

fn sample_states(n: usize) -> Vec<ComplexMatrix> {
    (0..n)
        .map(|k| {
            let x = k as f64;
            let p = SenderParams::from_array([
                (1.3 * x + 0.2) % TAU,
                (0.7 * x + 0.5) % PI,
                (1.9 * x + 1.1) % PI,
                (2.3 * x) % TAU,
                (0.9 * x + 3.0) % TAU,
                (3.1 * x + 1.0) % TAU,
            ]);
            density(&general_state(&p))
        })
        .collect()
}

#[test]
fn parallel_and_sequential_solves_agree() {
    let sys = reference_system(RestoreMode::EvenOnly);
    let opts = SolverOptions {
        n_starts: 12,
        ..SolverOptions::default()
    };
    let a = solve_restoring(&sys, &opts, Exec::Parallel).unwrap();
    let b = solve_restoring(&sys, &opts, Exec::Sequential).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_json(), y.to_json());
    }
}

#[test]
fn accepted_solutions_restore_every_state() {
    for mode in [RestoreMode::EvenOnly, RestoreMode::AllOrders] {
        let sys = reference_system(mode);
        let opts = SolverOptions {
            n_starts: 4,
            ..SolverOptions::default()
        };
        let states = sample_states(10);
        for sol in solve_restoring(&sys, &opts, Exec::default()).unwrap() {
            assert!(sol.residual <= opts.tol);
            let check = check_restoring(&sys, &sol, &states).unwrap();
            assert!(
                check.max_deviation < 1e-7,
                "{mode:?}: {}",
                check.max_deviation
            );
            assert!(check.universality_spread < 1e-4, "{mode:?}: {check:?}");
            let m = &sol.metrics;
            let (lo, avr) = (m.lambda_min.unwrap(), m.lambda_avr.unwrap());
            assert!(0.0 <= lo && lo <= avr && avr <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn even_only_restores_one_pair() {
    let sys = reference_system(RestoreMode::EvenOnly);
    let sol = solve_restoring(
        &sys,
        &SolverOptions {
            n_starts: 3,
            ..SolverOptions::default()
        },
        Exec::default(),
    )
    .unwrap();
    let best = select_optimal(&sol).unwrap();
    assert_eq!(best.lambdas.len(), 2);
    assert_eq!((best.metrics.restored, best.metrics.total), (2, 16));
    let back = RestoreSolution::from_json(&best.to_json()).unwrap();
    assert_eq!(back.phi, best.phi);
    let report = restored_matrix_report(best, &sys.lambda_tensor(&best.phi));
    assert!(report.contains("s14"), "{report}");
}

#[test]
fn small_chain_scan_finishes() {
    let chain = ChainConfig::new(4, 1.0).unwrap();
    let layout = CommLayout::new(4, 2, 2, 2).unwrap();
    let model = FidelityModel::new(&chain, &layout, StateMeasure::General).unwrap();
    let scan = scan_for_tau0(&model, 20.0, 0.05, Exec::default()).unwrap();
    assert_eq!(scan.grid.len(), 401);
    assert!(scan.f0 >= scan.grid.iter().map(|g| g.1).fold(0.0, f64::max) - 1e-12);
}

#[test]
fn scatter_is_reproducible_and_bounded() {
    let sys = reference_system(RestoreMode::AllOrders);
    let sol = solve_restoring(
        &sys,
        &SolverOptions {
            n_starts: 2,
            ..SolverOptions::default()
        },
        Exec::default(),
    )
    .unwrap();
    let tensor = sys.lambda_tensor(&sol[0].phi);
    let a = scatter_experiment(&tensor, 500, 3, Exec::Parallel).unwrap();
    let b = scatter_experiment(&tensor, 500, 3, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    for s in &a {
        assert!((0.0..=1.0).contains(&s.c_sender));
        assert!((0.0..=1.0).contains(&s.c_receiver));
    }
}

#[test]
fn chi_is_a_weak_parameter() {
    let opts = StatsOptions {
        grid_size: 6,
        points_per_node: 4000,
        replicates: 4,
        seed: 1,
    };
    let chi = param_stats("chi2", None, &opts, Exec::default())
        .unwrap()
        .sender;
    let phi = param_stats("phi1", None, &opts, Exec::default())
        .unwrap()
        .sender;
    assert!(chi.variation < 0.02);
    assert!(phi.variation > 0.35);
    assert!(param_stats("psi", None, &opts, Exec::default()).is_err());
}

#[test]
fn region_map_has_exact_sender_curve() {
    let sys = reference_system(RestoreMode::EvenOnly);
    let sol = solve_restoring(
        &sys,
        &SolverOptions {
            n_starts: 2,
            ..SolverOptions::default()
        },
        Exec::default(),
    )
    .unwrap();
    let pts = region_map_even(&sys.lambda_tensor(&sol[0].phi), 9, 11, Exec::default()).unwrap();
    assert_eq!(pts.len(), 99);
    for p in pts {
        assert!((p.c_s - p.phi.sin()).abs() < 1e-12);
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("values.csv");
    let rows: Vec<Vec<f64>> = (1..50)
        .map(|k| {
            let x = (k as f64).sqrt() * 1e-3_f64.powi(k % 5);
            vec![x, -x / 7.0]
        })
        .collect();
    write_csv(&path, &["a", "b"], rows.clone()).unwrap();
    let (header, back) = read_csv(&path).unwrap();
    assert_eq!(header, vec!["a", "b"]);
    for (r, b) in rows.iter().zip(&back) {
        for (x, y) in r.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
            assert_eq!(format_float(*x), format_float(*y));
        }
    }
}
