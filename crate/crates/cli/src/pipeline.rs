//! Model, states, signal source and oracle from a validated config.

use qfames::acquisition::ancilla::ReconstructedSignal;
use qfames::experiment::{magnetization, DataMode};
use qfames::models::builders::{build_illustrative, build_tfim, build_toric};
use qfames::models::evolution::{BackendKind, Propagator};
use qfames::models::hamiltonian::HamiltonianDoc;
use qfames::models::pauli::PauliString;
use qfames::models::spectrum::{eigendecompose, EigenMode, DENSE_LIMIT};
use qfames::oracle::{brute_force_dods, GroundTruth};
use qfames::scalar::{CMat, C};
use qfames::stateprep::{boosted_random_states, low_energy_mixtures, overlap_matrices, states_from_overlaps};
use qfames::{Hamiltonian, Observable, SignalSource, SpectralModel, Spectrum, StateSet};

use crate::config::{DataSpec, ExperimentConfig, ModelSpec, OperatorSpec, StateSpec};
use crate::Failure;

/// Krylov dimension cap for signal models without a full spectrum.
const KRYLOV_MAX: usize = 60;

pub struct Model {
    pub hamiltonian: Hamiltonian,
    pub spectrum: Option<Spectrum>,
}

impl Model {
    pub fn norm_scale(&self) -> f64 {
        self.hamiltonian.norm_scale()
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model, Failure> {
    let h = match &cfg.model {
        ModelSpec::Illustrative => build_illustrative::<f64>().0,
        ModelSpec::Tfim { l, g } => build_tfim::<f64>(*l, *g)?,
        ModelSpec::Toric { rows, cols, boundary } => build_toric::<f64>(*rows, *cols, *boundary)?,
        ModelSpec::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::validation(format!("model.file {}: {e}", path.display())))?;
            let doc: HamiltonianDoc = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("model.file {}: {e}", path.display())))?;
            Hamiltonian::from_doc(&doc)?
        }
    };
    let (h, _) = h.normalize_spectrum();
    let levels = cfg.oracle.as_ref().and_then(|o| o.levels);
    let spectrum = match levels {
        Some(k) => Some(eigendecompose(&h, EigenMode::Lowest { k })?),
        None if h.dimension() <= DENSE_LIMIT => Some(eigendecompose(&h, EigenMode::Dense)?),
        None => None,
    };
    Ok(Model { hamiltonian: h, spectrum })
}

fn complex_rows(rows: &[Vec<[f64; 2]>]) -> CMat<f64> {
    CMat::from_fn(rows.len(), rows[0].len(), |i, j| C::new(rows[i][j][0], rows[i][j][1]))
}

fn need_spectrum<'a>(model: &'a Model, what: &str) -> Result<&'a Spectrum, Failure> {
    model
        .spectrum
        .as_ref()
        .ok_or_else(|| Failure::validation(format!("{what} needs an oracle spectrum; set oracle.levels")))
}

/// Left and right families for one seed.
pub fn build_states(cfg: &ExperimentConfig, model: &Model, seed: u64) -> Result<(StateSet, StateSet), Failure> {
    match &cfg.states {
        StateSpec::OverlapMatrix { phi, psi } => {
            let spectrum = need_spectrum(model, "states.overlap-matrix")?;
            if !spectrum.complete {
                return Err(Failure::validation("states.overlap-matrix needs the full spectrum"));
            }
            let left = states_from_overlaps(spectrum, &complex_rows(phi))?;
            let right = match psi {
                Some(p) => states_from_overlaps(spectrum, &complex_rows(p))?,
                None => left.clone(),
            };
            Ok((left, right))
        }
        StateSpec::HaarBoost { beta, count } => {
            let h = &model.hamiltonian;
            let prop = if !h.is_dense() && h.all_commuting() {
                Propagator::new(h, BackendKind::CommutingProduct)?
            } else {
                Propagator::auto(h)?
            };
            let s = boosted_random_states(&prop, *beta, *count, seed)?;
            Ok((s.clone(), s))
        }
        StateSpec::LowestK { k, count } => {
            let s = low_energy_mixtures(need_spectrum(model, "states.lowest-k")?, *k, *count, seed)?;
            Ok((s.clone(), s))
        }
    }
}

/// Overlap matrix of the illustrative model, for presets.
pub fn illustrative_phi() -> Vec<Vec<[f64; 2]>> {
    let (_, phi) = build_illustrative::<f64>();
    (0..phi.nrows())
        .map(|i| (0..phi.ncols()).map(|j| [phi[(i, j)].re, phi[(i, j)].im]).collect())
        .collect()
}

/// Whether the families lie in the span of the computed levels.
fn spanned(cfg: &ExperimentConfig, spectrum: &Spectrum) -> bool {
    spectrum.complete || matches!(cfg.states, StateSpec::LowestK { .. })
}

pub fn exact_model(
    cfg: &ExperimentConfig,
    model: &Model,
    left: &StateSet,
    right: &StateSet,
) -> Result<SpectralModel<f64>, Failure> {
    Ok(match &model.spectrum {
        Some(s) if spanned(cfg, s) => SpectralModel::from_spectrum(s, left, right)?,
        _ => SpectralModel::from_krylov(&model.hamiltonian, left, right, KRYLOV_MAX)?,
    })
}

/// Signal source for the configured data mode, and the mode used to sample it.
pub fn signal_source(
    cfg: &ExperimentConfig,
    model: &Model,
    left: &StateSet,
    right: &StateSet,
) -> Result<(Box<dyn SignalSource<f64>>, DataMode), Failure> {
    match cfg.data {
        DataSpec::Exact => Ok((Box::new(exact_model(cfg, model, left, right)?), DataMode::Exact)),
        DataSpec::Shots { shots_per_entry } => Ok((
            Box::new(exact_model(cfg, model, left, right)?),
            DataMode::Shots(shots_per_entry),
        )),
        DataSpec::Reconstructed { h, dt, shots_per_entry } => {
            let prop = Propagator::auto(&model.hamiltonian)?;
            let t_max = cfg.qfames.max_time();
            let rec = ReconstructedSignal::build(&prop, left, right, t_max, dt, h)?;
            Ok((Box::new(rec), DataMode::Shots(shots_per_entry)))
        }
    }
}

pub fn observable(spec: &OperatorSpec, model: &Model) -> Result<Observable, Failure> {
    let n = model.hamiltonian.n_qubits();
    let parse = |s: &str| -> Result<PauliString, Failure> {
        let p = PauliString::parse(s)?;
        if p.n_qubits() != n {
            return Err(Failure::validation(format!(
                "observable: Pauli string {s} has {} qubits, the model has {n}",
                p.n_qubits()
            )));
        }
        Ok(p)
    };
    Ok(match spec {
        OperatorSpec::Magnetization => magnetization(n)?,
        OperatorSpec::Pauli { string } => Observable::Pauli(parse(string)?),
        OperatorSpec::PauliSum { terms } => Observable::PauliSum(
            terms
                .iter()
                .map(|(c, s)| Ok((*c, parse(s)?)))
                .collect::<Result<_, Failure>>()?,
        ),
    })
}

/// Brute-force ground truth for one pair of families.
pub fn truth(cfg: &ExperimentConfig, model: &Model, left: &StateSet, right: &StateSet) -> Result<GroundTruth, Failure> {
    let spectrum = need_spectrum(model, "the oracle")?;
    let oracle = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| Failure::validation("oracle: section required (c_p, gap, width)"))?;
    let (phi, psi) = overlap_matrices(spectrum, left, right)?;
    Ok(brute_force_dods(spectrum, &phi, &psi, oracle.c_p, oracle.gap, oracle.width)?)
}
