//! Time sampling, signal synthesis and the magnitude-only reconstruction.

pub mod ancilla;
pub mod observable;
pub mod signal;
pub mod storage;
pub mod times;

pub use ancilla::{ancilla_free_reconstruct, AncillaFreeProbe, ReconstructedSignal};
pub use observable::{
    observable_exact_signal, observable_shot_sample, observable_signal_by_evolution, Observable, ObservableTensor,
    Pairing,
};
pub use signal::{exact_signal, shot_sample, EvolutionSource, SignalMode, SignalSource, SignalTensor, SpectralModel};
pub use times::{characteristic_function, sample_times, zero_atom_mass, TimeSamples};
