//! Eigenvalue locations and multiplicities from multi-state Hadamard-test
//! data: signal synthesis, Gaussian filtering, search-and-block, SVD
//! thresholding and projected-observable spectra.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod acquisition;
pub mod dods;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod models;
pub mod nufft;
pub mod observables;
pub mod oracle;
pub mod scalar;
pub mod serial;
pub mod stateprep;

pub use acquisition::{exact_signal, sample_times, shot_sample, SignalMode, SignalSource, SpectralModel};
pub use dods::{run_qfames, QfamesConfig};
pub use error::{QfamesError, Result};
pub use scalar::Real;

pub type Hamiltonian = models::PauliSumHamiltonian<f64>;
pub type Spectrum = models::Spectrum<f64>;
pub type StateSet = stateprep::StateSet<f64>;
pub type TimeSamples = acquisition::TimeSamples<f64>;
pub type SignalTensor = acquisition::SignalTensor<f64>;
pub type ObservableTensor = acquisition::ObservableTensor<f64>;
pub type Observable = acquisition::Observable<f64>;
pub type Landscape = dods::Landscape<f64>;
pub type ClusterEstimate = dods::ClusterEstimate<f64>;
pub type DodsEstimate = dods::DodsEstimate<f64>;
pub type ProjectedPair = observables::ProjectedPair<f64>;
