//! Hamiltonians, exact spectra and time evolution.

pub mod builders;
pub mod evolution;
pub mod hamiltonian;
pub mod pauli;
pub mod spectrum;

pub use builders::{build_illustrative, build_tfim, build_toric, Boundary, ToricLattice};
pub use evolution::{BackendKind, ImaginaryResult, Propagator};
pub use hamiltonian::{HamiltonianDoc, Normalization, PauliSumHamiltonian, PauliTerm};
pub use pauli::{Pauli, PauliString};
pub use spectrum::{eigendecompose, EigenMode, Spectrum};
