//! Eigensolver and conjugate gradient, plus the test signal used to drive
//! the convergence experiments.

mod cg;
pub mod eigen;
mod signal;

pub use cg::{conjugate_gradient, solve_for_known_solution, CgOptions, CgOutcome, CgRunReport};
pub use eigen::{symmetric_eigendecomposition, symmetric_eigenvalues, EigenDecomposition};
pub use signal::{fourier_amplitude, make_test_signal, SignalDescriptor, TestSignal};
