//! Restoring unitary on the extended receiver: parameterization, restoring
//! conditions, multi-start solution and selection by `Λ`.

pub mod solution;
pub mod solver;
pub mod system;
pub mod targets;
pub mod unitary;

pub use solution::{
    check_restoring, restored_matrix_report, select_optimal, LambdaEntry, Metrics, RestoreSolution,
    RestoringCheck,
};
pub use solver::{levenberg_marquardt, solve_restoring, JacobianMethod, SolverOptions};
pub use system::{LeastSquares, RestoringSystem};
pub use targets::{restored_element_set, restored_fraction, RestoreMode};
pub use unitary::{
    build_unitary, generator_set, parameter_count, Flavor, Generator, UnitaryParams,
};
