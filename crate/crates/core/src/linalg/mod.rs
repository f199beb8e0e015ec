//! Dense complex linear algebra: kets, operators, Pauli strings and spectra.

mod eigen;
mod expm;
mod ket;
mod lowrank;
mod operator;
mod pauli;
mod psd;
mod spectrum;

pub use eigen::{
    hermitian_eigendecomposition, hermitian_eigenvalues, hermitian_function, orthonormality_error,
    EigenDecomposition,
};
pub use expm::expm;
pub use ket::Ket;
pub use lowrank::LowRankOperator;
pub use operator::{Operator, RealMatrix};
pub use pauli::{pauli_string, product_state, single_site, MAX_QUBITS};
pub use psd::matrix_sqrt_psd;
pub use spectrum::{group_spectrum, HamiltonianSpectrum, DEFAULT_CLUSTER_TOLERANCE};
