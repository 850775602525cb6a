//! Ready-made problems and trial drivers shared by the command line tool and
//! the acceptance tests.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::acquisition::ancilla::ReconstructedSignal;
use crate::acquisition::observable::{observable_exact_signal, Observable, Pairing};
use crate::acquisition::signal::{exact_signal, shot_sample, SignalSource, SignalTensor, SpectralModel};
use crate::acquisition::times::sample_times;
use crate::dods::{run_qfames, DodsEstimate, QfamesConfig};
use crate::error::{invalid, Result};
use crate::models::builders::{build_illustrative, build_tfim, build_toric, Boundary};
use crate::models::evolution::{BackendKind, Propagator};
use crate::models::hamiltonian::{Normalization, PauliSumHamiltonian};
use crate::models::pauli::{Pauli, PauliString};
use crate::models::spectrum::{eigendecompose, EigenMode, Spectrum};
use crate::observables::{observable_spectra, ObservableSpectrum};
use crate::oracle::{brute_force_dods, error_metric, qmegs_run, GroundTruth};
use crate::scalar::CMat;
use crate::stateprep::{boosted_random_states, low_energy_mixtures, overlap_matrices, states_from_overlaps, StateSet};

/// Seed offset separating shot noise from time sampling.
const SHOT_STREAM: u64 = 0x5407_0000_0000_0001;

/// A Hamiltonian (in normalized units), its oracle spectrum, the two state
/// families and an exact signal model.
pub struct Problem {
    pub name: String,
    pub hamiltonian: PauliSumHamiltonian<f64>,
    pub normalization: Normalization<f64>,
    pub spectrum: Spectrum<f64>,
    pub left: StateSet<f64>,
    pub right: StateSet<f64>,
    pub model: SpectralModel<f64>,
}

impl Problem {
    pub fn norm_scale(&self) -> f64 {
        self.hamiltonian.norm_scale()
    }

    pub fn overlaps(&self) -> Result<(CMat<f64>, CMat<f64>)> {
        overlap_matrices(&self.spectrum, &self.left, &self.right)
    }

    pub fn truth(&self, c_p: f64, gap: f64, width: f64) -> Result<GroundTruth> {
        let (phi, psi) = self.overlaps()?;
        brute_force_dods(&self.spectrum, &phi, &psi, c_p, gap, width)
    }

    pub fn propagator(&self) -> Result<Propagator<'_, f64>> {
        Propagator::auto(&self.hamiltonian)
    }
}

fn normalized(h: PauliSumHamiltonian<f64>) -> (PauliSumHamiltonian<f64>, Normalization<f64>) {
    h.normalize_spectrum()
}

/// Three-level model with a doubly degenerate level at 0 and one at 0.1.
pub fn illustrative_problem() -> Result<Problem> {
    let (h, phi) = build_illustrative::<f64>();
    let (h, norm) = normalized(h);
    let spectrum = eigendecompose(&h, EigenMode::Dense)?;
    let states = states_from_overlaps(&spectrum, &phi)?;
    let model = SpectralModel::from_spectrum(&spectrum, &states, &states)?;
    Ok(Problem {
        name: "illustrative".into(),
        hamiltonian: h,
        normalization: norm,
        spectrum,
        left: states.clone(),
        right: states,
        model,
    })
}

/// Open-chain transverse-field Ising model with `count` orthonormal mixtures
/// of the lowest `k` levels as both families.
pub fn tfim_problem(l: usize, g: f64, k: usize, count: usize, seed: u64) -> Result<Problem> {
    let (h, norm) = normalized(build_tfim::<f64>(l, g)?);
    let spectrum = eigendecompose(&h, EigenMode::Dense)?;
    let states = low_energy_mixtures(&spectrum, k, count, seed)?;
    let model = SpectralModel::from_spectrum(&spectrum, &states, &states)?;
    Ok(Problem {
        name: format!("tfim(L={l}, g={g})"),
        hamiltonian: h,
        normalization: norm,
        spectrum,
        left: states.clone(),
        right: states,
        model,
    })
}

/// Normalized toric-code Hamiltonian with an optional partial oracle
/// spectrum (the lowest `levels` eigenpairs).
pub struct ToricModel {
    pub hamiltonian: PauliSumHamiltonian<f64>,
    pub normalization: Normalization<f64>,
    pub spectrum: Option<Spectrum<f64>>,
    pub label: String,
}

pub fn toric_model(rows: usize, cols: usize, boundary: Boundary, levels: Option<usize>) -> Result<ToricModel> {
    let (h, norm) = normalized(build_toric::<f64>(rows, cols, boundary)?);
    let spectrum = levels.map(|k| eigendecompose(&h, EigenMode::Lowest { k })).transpose()?;
    Ok(ToricModel {
        hamiltonian: h,
        normalization: norm,
        spectrum,
        label: format!("toric({rows}x{cols}, {boundary:?})"),
    })
}

impl ToricModel {
    /// `count` Haar states boosted by `e^{-βH}` and their exact signal model.
    pub fn boosted(&self, beta: f64, count: usize, seed: u64) -> Result<(StateSet<f64>, SpectralModel<f64>)> {
        let prop = Propagator::new(&self.hamiltonian, BackendKind::CommutingProduct)?;
        let states = boosted_random_states(&prop, beta, count, seed)?;
        let model = SpectralModel::from_krylov(&self.hamiltonian, &states, &states, 60)?;
        Ok((states, model))
    }

    /// Requires the oracle spectrum.
    pub fn problem(&self, beta: f64, count: usize, seed: u64) -> Result<Problem> {
        let spectrum = self
            .spectrum
            .clone()
            .ok_or_else(|| invalid("toric problem needs an oracle spectrum"))?;
        let (states, model) = self.boosted(beta, count, seed)?;
        Ok(Problem {
            name: format!("{} beta={beta}", self.label),
            hamiltonian: self.hamiltonian.clone(),
            normalization: self.normalization,
            spectrum,
            left: states.clone(),
            right: states,
            model,
        })
    }
}

/// How signal data are produced for a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataMode {
    Exact,
    Shots(usize),
}

/// Exact or sampled tensor for `(T, σ, N)` from `config`; times use `seed`,
/// shots a derived stream.
pub fn trial_tensor<S: SignalSource<f64> + ?Sized>(
    source: &S,
    config: &QfamesConfig,
    mode: DataMode,
    seed: u64,
) -> Result<SignalTensor<f64>> {
    let times = Arc::new(sample_times(config.t, config.sigma, config.n, seed)?);
    let exact = exact_signal(source, times)?;
    match mode {
        DataMode::Exact => Ok(exact),
        DataMode::Shots(k) => shot_sample(&exact, k, seed ^ SHOT_STREAM),
    }
}

pub fn run_trial<S: SignalSource<f64> + ?Sized>(
    source: &S,
    config: &QfamesConfig,
    mode: DataMode,
    seed: u64,
) -> Result<DodsEstimate<f64>> {
    run_qfames(&trial_tensor(source, config, mode, seed)?, config)
}

/// One row of a `T` sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub seed: u64,
    pub method: &'static str,
    #[serde(rename = "T")]
    pub t: f64,
    pub t_max: f64,
    pub t_total: f64,
    pub n: usize,
    pub error: f64,
    pub multiplicities: String,
}

/// QFAMES and the single-entry baseline on matched total evolution time:
/// the baseline uses `L R N` samples of entry `qmegs_entry`.
pub fn sweep_t<S: SignalSource<f64> + ?Sized>(
    source: &S,
    truth: &GroundTruth,
    base: &QfamesConfig,
    ts: &[f64],
    seeds: &[u64],
    mode: DataMode,
    qmegs_entry: (usize, usize),
) -> Result<Vec<SweepRecord>> {
    if ts.is_empty() || seeds.is_empty() {
        return Err(invalid("sweep needs at least one T and one seed"));
    }
    if let Some(bad) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(invalid(format!("T values must be positive, got {bad}")));
    }
    let (l, r) = source.shape();
    let centers = truth.centers();
    let jobs: Vec<(f64, u64)> = ts.iter().flat_map(|&t| seeds.iter().map(move |&s| (t, s))).collect();
    let rows: Vec<Vec<SweepRecord>> = jobs
        .par_iter()
        .map(|&(t, seed)| {
            let cfg = QfamesConfig { t, ..*base };
            let t_max = cfg.sigma * t;
            let est = run_trial(source, &cfg, mode, seed)?;
            let q = error_metric(&est.centers(), &centers);
            let nq = l * r * cfg.n;
            let qcfg = QfamesConfig {
                n: nq,
                i_tilde: truth.clusters.len(),
                ..cfg
            };
            let times = Arc::new(sample_times(t, cfg.sigma, nq, seed)?);
            let single = SingleEntry { inner: source, entry: qmegs_entry };
            let exact = exact_signal(&single, times)?;
            let tensor = match mode {
                DataMode::Exact => exact,
                DataMode::Shots(k) => shot_sample(&exact, k, seed ^ SHOT_STREAM)?,
            };
            let qm = qmegs_run(&tensor, &qcfg, (0, 0))?;
            let e2 = error_metric(&qm.centers, &centers);
            let fmt = |m: Vec<usize>| m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            Ok(vec![
                SweepRecord {
                    seed,
                    method: "qfames",
                    t,
                    t_max,
                    t_total: (l * r * cfg.n) as f64 * t_max,
                    n: cfg.n,
                    error: q.value,
                    multiplicities: fmt(est.clusters.iter().map(|c| c.multiplicity).collect()),
                },
                SweepRecord {
                    seed,
                    method: "qmegs",
                    t,
                    t_max,
                    t_total: nq as f64 * t_max,
                    n: nq,
                    error: e2.value,
                    multiplicities: String::new(),
                },
            ])
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// A `1 × 1` view of one entry of another source.
pub struct SingleEntry<'a, S: ?Sized> {
    pub inner: &'a S,
    pub entry: (usize, usize),
}

impl<S: SignalSource<f64> + ?Sized> SignalSource<f64> for SingleEntry<'_, S> {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn slice(&self, t: f64) -> Result<CMat<f64>> {
        let m = self.inner.slice(t)?;
        Ok(CMat::from_element(1, 1, m[self.entry]))
    }
}

/// Ancilla-free reconstruction of the problem's signal on `[-t_max, t_max]`.
pub fn reconstructed_source(problem: &Problem, t_max: f64, dt: f64, h: f64) -> Result<ReconstructedSignal> {
    let prop = problem.propagator()?;
    ReconstructedSignal::build(&prop, &problem.left, &problem.right, t_max, dt, h)
}

/// `S^z = (1/2L) Σ Z_i` as a Pauli sum.
pub fn magnetization(l: usize) -> Result<Observable<f64>> {
    let terms = (0..l)
        .map(|i| Ok((1.0 / (2.0 * l as f64), PauliString::from_sparse(l, &[(i, Pauli::Z)])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Observable::PauliSum(terms))
}

/// Observable stage on an existing estimate with exact `𝓩^O` data.
pub fn observable_trial(
    problem: &Problem,
    estimate: &DodsEstimate<f64>,
    observable: &Observable<f64>,
    pairing: Pairing,
    seed: u64,
) -> Result<Vec<ObservableSpectrum>> {
    let c = &estimate.config;
    let tensor = observable_exact_signal(
        &problem.spectrum,
        &problem.left,
        &problem.right,
        observable,
        c.t,
        c.sigma,
        c.n,
        pairing,
        seed,
    )?;
    observable_spectra(&estimate.clusters, &tensor)
}

/// Eigenvalues of `O` restricted to the given eigenvectors.
pub fn projected_observable_oracle(spectrum: &Spectrum<f64>, members: &[usize], observable: &Observable<f64>) -> Vec<f64> {
    let basis = CMat::from_fn(spectrum.dim(), members.len(), |i, j| spectrum.eigenvectors[(i, members[j])]);
    let o = observable.in_basis(&basis);
    let (ev, _) = crate::linalg::hermitian_eigh(&o);
    ev
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
