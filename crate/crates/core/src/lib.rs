//! Quantum state transfer along XY spin chains with a restoring unitary on
//! the extended receiver.
//!
//! The pipeline is: build the chain Hamiltonian in the graded basis
//! ([`chain`]), diagonalize it once and evolve ([`propagator`]), map sender
//! states to receiver states through the λ-tensor ([`comm_line`]), pick the
//! registration time from the averaged fidelity ([`registration`]), solve for
//! a restoring unitary ([`restoring`]) and study how entanglement survives
//! the transfer ([`entanglement`]).

pub mod chain;
pub mod coherence;
pub mod comm_line;
pub mod entanglement;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod propagator;
pub mod quadrature;
pub mod registration;
pub mod restoring;
pub mod sampling;
pub mod states;

pub use chain::{build_xy_hamiltonian, ChainConfig, GradedBasis};
pub use comm_line::{CommLayout, LambdaTensor};
pub use error::{Error, Result};
pub use exec::Exec;
pub use linalg::{ComplexMatrix, C64};
pub use propagator::{diagonalize, EigenCache};
pub use restoring::{RestoreMode, RestoreSolution};
