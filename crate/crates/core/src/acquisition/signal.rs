//! Cross-correlation signals `𝓩_{l,r}(t) = ⟨φ_l|e^{-iHt}|ψ_r⟩`, exact and
//! shot-sampled.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::acquisition::times::TimeSamples;
use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::linalg::{tridiag_eigh, Lanczos};
use crate::models::evolution::Propagator;
use crate::models::hamiltonian::PauliSumHamiltonian;
use crate::models::spectrum::Spectrum;
use crate::scalar::{cabs, cis, czero, CMat, CVec, Real, C};
use crate::stateprep::{overlap_matrices, StateSet};

/// Anything that can produce the `L×R` matrix `𝓩(t)`.
pub trait SignalSource<T: Real>: Sync {
    fn shape(&self) -> (usize, usize);

    fn slice(&self, t: T) -> Result<CMat<T>>;
}

/// Signal written as a finite sum of damped-free exponentials:
/// `𝓩_{l,r}(t) = Σ_k a_{l,r,k} e^{-i ω_k t}`.
#[derive(Debug, Clone)]
pub struct SpectralModel<T: Real> {
    l: usize,
    r: usize,
    freqs: Vec<T>,
    /// Per pair `(l, r)` in row-major order: `(frequency index, amplitude)`.
    terms: Vec<Vec<(usize, C<T>)>>,
}

/// Error growth per unit time accepted for Krylov signal models.
pub const KRYLOV_RATE: f64 = 1e-13;

/// Amplitudes at or below this are dropped from spectral models.
pub const AMPLITUDE_FLOOR: f64 = 1e-15;

impl<T: Real> SpectralModel<T> {
    /// `𝓩 = Φ diag(e^{-iλt}) Ψ†`, with exactly equal eigenvalues merged.
    pub fn from_overlaps(eigenvalues: &[T], phi: &CMat<T>, psi: &CMat<T>) -> Result<Self> {
        if phi.ncols() != eigenvalues.len() || psi.ncols() != eigenvalues.len() {
            return Err(mismatch("overlap matrices must have one column per eigenvalue"));
        }
        let (l, r) = (phi.nrows(), psi.nrows());
        let mut freqs: Vec<T> = Vec::new();
        let mut group = Vec::with_capacity(eigenvalues.len());
        for &e in eigenvalues {
            let tol = T::lit(1e-13) * e.abs().max(T::one());
            match freqs.iter().position(|&f| (f - e).abs() <= tol) {
                Some(k) => group.push(k),
                None => {
                    group.push(freqs.len());
                    freqs.push(e);
                }
            }
        }
        let mut terms = Vec::with_capacity(l * r);
        for li in 0..l {
            for ri in 0..r {
                let mut acc = vec![czero::<T>(); freqs.len()];
                for (m, &k) in group.iter().enumerate() {
                    acc[k] += phi[(li, m)] * psi[(ri, m)].conj();
                }
                terms.push(
                    acc.into_iter()
                        .enumerate()
                        .filter(|(_, a)| cabs(a) > T::lit(AMPLITUDE_FLOOR))
                        .collect(),
                );
            }
        }
        Ok(Self { l, r, freqs, terms })
    }

    /// From an eigendecomposition. For a partial spectrum the states must lie
    /// in the computed eigenspace.
    pub fn from_spectrum(spectrum: &Spectrum<T>, left: &StateSet<T>, right: &StateSet<T>) -> Result<Self> {
        let (phi, psi) = overlap_matrices(spectrum, left, right)?;
        if !spectrum.complete {
            for m in [&phi, &psi] {
                for i in 0..m.nrows() {
                    let n = m.row(i).norm().f64();
                    if (n - 1.0).abs() > 1e-8 {
                        return Err(invalid(format!(
                            "state has weight {:.3e} outside the computed eigenspace",
                            1.0 - n * n
                        )));
                    }
                }
            }
        }
        Self::from_overlaps(&spectrum.eigenvalues, &phi, &psi)
    }

    /// Per right state, a Lanczos run whose Ritz pairs represent
    /// `e^{-iHt}|ψ_r⟩` with error at most `|t| β_m Σ_k |b_k y_{m,k}|`; the run
    /// stops once that rate is below `KRYLOV_RATE` or the space is invariant,
    /// and fails if neither happens within `max_subspace` vectors.
    pub fn from_krylov(
        h: &PauliSumHamiltonian<T>,
        left: &StateSet<T>,
        right: &StateSet<T>,
        max_subspace: usize,
    ) -> Result<Self> {
        if left.dim() != h.dimension() || right.dim() != h.dimension() {
            return Err(mismatch("state dimension differs from the Hamiltonian"));
        }
        let (l, r) = (left.len(), right.len());
        let empty: [CVec<T>; 0] = [];
        let per_r: Vec<Result<(Vec<T>, Vec<Vec<C<T>>>)>> = right
            .states()
            .par_iter()
            .map(|psi| {
                let mut lz = Lanczos::new(psi.clone(), &empty, T::lit(1e-11));
                let mut converged = false;
                while lz.len() < max_subspace {
                    let more = lz.step(h);
                    let m = lz.len();
                    let (_, y) = tridiag_eigh(&lz.alpha, &lz.beta[..m - 1]);
                    let rate = (0..m).fold(T::zero(), |acc, k| acc + (y[(0, k)] * y[(m - 1, k)]).abs())
                        * lz.residual_beta();
                    if !more || rate <= T::lit(KRYLOV_RATE) {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(QfamesError::Numerical(format!(
                        "Krylov representation not converged after {max_subspace} vectors"
                    )));
                }
                let m = lz.len();
                let (theta, y) = tridiag_eigh(&lz.alpha, &lz.beta[..m - 1]);
                // ⟨φ_l|u_k⟩ = Σ_j ⟨φ_l|q_j⟩ y_{j,k}, without forming u_k.
                let proj: Vec<Vec<C<T>>> = left
                    .states()
                    .iter()
                    .map(|phi| lz.basis.iter().map(|q| phi.dotc(q)).collect())
                    .collect();
                let amps: Vec<Vec<C<T>>> = proj
                    .iter()
                    .map(|p| {
                        (0..m)
                            .map(|k| {
                                let s = (0..m).fold(czero(), |acc, j| acc + p[j] * y[(j, k)]);
                                s * y[(0, k)]
                            })
                            .collect()
                    })
                    .collect();
                Ok((theta, amps))
            })
            .collect();
        let mut freqs = Vec::new();
        let mut terms = vec![Vec::new(); l * r];
        for (ri, res) in per_r.into_iter().enumerate() {
            let (theta, amps) = res?;
            let base = freqs.len();
            freqs.extend_from_slice(&theta);
            for (li, row) in amps.iter().enumerate() {
                for (k, a) in row.iter().enumerate() {
                    if cabs(a) > T::lit(AMPLITUDE_FLOOR) {
                        terms[li * r + ri].push((base + k, *a));
                    }
                }
            }
        }
        Ok(Self { l, r, freqs, terms })
    }

    pub fn eval(&self, l: usize, r: usize, t: T) -> C<T> {
        self.terms[l * self.r + r]
            .iter()
            .fold(czero(), |acc, (k, a)| acc + a * cis(-self.freqs[*k] * t))
    }

    pub fn frequency_count(&self) -> usize {
        self.freqs.len()
    }
}

impl<T: Real> SignalSource<T> for SpectralModel<T> {
    fn shape(&self) -> (usize, usize) {
        (self.l, self.r)
    }

    fn slice(&self, t: T) -> Result<CMat<T>> {
        let phases: Vec<C<T>> = self.freqs.iter().map(|&f| cis(-f * t)).collect();
        Ok(CMat::from_fn(self.l, self.r, |li, ri| {
            self.terms[li * self.r + ri]
                .iter()
                .fold(czero(), |acc, (k, a)| acc + a * phases[*k])
        }))
    }
}

/// Signal computed by propagating each right state with a backend.
pub struct EvolutionSource<'a, 'h, T: Real> {
    pub propagator: &'a Propagator<'h, T>,
    pub left: &'a StateSet<T>,
    pub right: &'a StateSet<T>,
}

impl<T: Real> SignalSource<T> for EvolutionSource<'_, '_, T> {
    fn shape(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }

    fn slice(&self, t: T) -> Result<CMat<T>> {
        let mut out = CMat::zeros(self.left.len(), self.right.len());
        for (ri, psi) in self.right.states().iter().enumerate() {
            let evolved = self.propagator.evolve(psi, t)?;
            for (li, phi) in self.left.states().iter().enumerate() {
                out[(li, ri)] = phi.dotc(&evolved);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalMode {
    Exact,
    Shot { shots_per_entry: usize, seed: u64 },
}

/// `L×R×N` data tensor stored in `(l, r, n)` row-major order.
#[derive(Debug, Clone)]
pub struct SignalTensor<T: Real> {
    pub l: usize,
    pub r: usize,
    pub data: Vec<C<T>>,
    pub mode: SignalMode,
    pub times: Arc<TimeSamples<T>>,
}

impl<T: Real> SignalTensor<T> {
    pub fn new(l: usize, r: usize, data: Vec<C<T>>, mode: SignalMode, times: Arc<TimeSamples<T>>) -> Result<Self> {
        if l == 0 || r == 0 || times.is_empty() {
            return Err(invalid("signal tensor dimensions must be positive"));
        }
        if data.len() != l * r * times.len() {
            return Err(mismatch(format!(
                "signal data has {} entries, expected {}x{}x{}",
                data.len(),
                l,
                r,
                times.len()
            )));
        }
        Ok(Self { l, r, data, mode, times })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn index(&self, l: usize, r: usize, n: usize) -> usize {
        (l * self.r + r) * self.n() + n
    }

    pub fn get(&self, l: usize, r: usize, n: usize) -> C<T> {
        self.data[self.index(l, r, n)]
    }

    /// All `N` samples of entry `(l, r)`.
    pub fn series(&self, l: usize, r: usize) -> &[C<T>] {
        let start = self.index(l, r, 0);
        &self.data[start..start + self.n()]
    }

    /// The `1×1` tensor of a single entry.
    pub fn restrict(&self, l: usize, r: usize) -> Result<Self> {
        if l >= self.l || r >= self.r {
            return Err(invalid(format!("entry ({l}, {r}) outside a {}x{} tensor", self.l, self.r)));
        }
        Self::new(1, 1, self.series(l, r).to_vec(), self.mode, self.times.clone())
    }
}

/// Evaluates a source at every sampled time.
pub fn exact_signal<T: Real, S: SignalSource<T> + ?Sized>(
    source: &S,
    times: Arc<TimeSamples<T>>,
) -> Result<SignalTensor<T>> {
    let (l, r) = source.shape();
    let n = times.len();
    let slices: Vec<CMat<T>> = times
        .times
        .par_iter()
        .map(|&t| source.slice(t))
        .collect::<Result<_>>()?;
    let mut data = vec![czero(); l * r * n];
    for (ni, s) in slices.iter().enumerate() {
        for li in 0..l {
            for ri in 0..r {
                data[(li * r + ri) * n + ni] = s[(li, ri)];
            }
        }
    }
    SignalTensor::new(l, r, data, SignalMode::Exact, times)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for entry `(l, r, n)`; independent of evaluation order.
pub(crate) fn entry_rng(seed: u64, l: usize, r: usize, n: usize) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ l as u64) ^ ((r as u64) << 1 | 1));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(n as u64);
    rng
}

/// Average of `shots` Hadamard-test outcomes `X + iY`, `X, Y ∈ {±1}`.
pub(crate) fn hadamard_shots<T: Real>(z: C<T>, shots: usize, rng: &mut ChaCha8Rng) -> C<T> {
    let p_re = ((1.0 + z.re.f64()) / 2.0).clamp(0.0, 1.0);
    let p_im = ((1.0 + z.im.f64()) / 2.0).clamp(0.0, 1.0);
    let (mut sx, mut sy) = (0i64, 0i64);
    for _ in 0..shots {
        sx += if rng.random::<f64>() < p_re { 1 } else { -1 };
        sy += if rng.random::<f64>() < p_im { 1 } else { -1 };
    }
    let s = shots as f64;
    C::new(T::lit(sx as f64 / s), T::lit(sy as f64 / s))
}

pub(crate) fn check_amplitudes<T: Real>(data: &[C<T>]) -> Result<()> {
    for z in data {
        let a = cabs(z).f64();
        if !a.is_finite() {
            return Err(QfamesError::NonFinite("signal entry".into()));
        }
        if a > 1.0 + 1e-9 {
            return Err(QfamesError::InvalidAmplitude(a));
        }
    }
    Ok(())
}

/// Simulates single-ancilla measurements of every entry: real and imaginary
/// parts are independent `±1` outcomes with means `Re 𝓩` and `Im 𝓩`.
pub fn shot_sample<T: Real>(exact: &SignalTensor<T>, shots_per_entry: usize, seed: u64) -> Result<SignalTensor<T>> {
    if exact.mode != SignalMode::Exact {
        return Err(invalid("shot sampling needs an exact-mode tensor"));
    }
    if shots_per_entry == 0 {
        return Err(invalid("shots_per_entry must be at least 1"));
    }
    check_amplitudes(&exact.data)?;
    let n = exact.n();
    let r = exact.r;
    let data: Vec<C<T>> = exact
        .data
        .par_iter()
        .enumerate()
        .map(|(idx, &z)| {
            let (pair, ni) = (idx / n, idx % n);
            let mut rng = entry_rng(seed, pair / r, pair % r, ni);
            hadamard_shots(z, shots_per_entry, &mut rng)
        })
        .collect();
    SignalTensor::new(
        exact.l,
        exact.r,
        data,
        SignalMode::Shot {
            shots_per_entry,
            seed,
        },
        exact.times.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::times::sample_times;
    use crate::models::builders::build_illustrative;
    use crate::models::evolution::BackendKind;
    use crate::models::spectrum::{eigendecompose, EigenMode};
    use crate::stateprep::states_from_overlaps;

    fn illustrative_model() -> SpectralModel<f64> {
        let (h, phi) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        SpectralModel::from_overlaps(&s.eigenvalues, &phi, &phi).unwrap()
    }

    #[test]
    fn illustrative_cross_entry() {
        let m = illustrative_model();
        for t in [0.0, 1.0, -7.5, 33.0] {
            let z = m.eval(0, 1, t);
            assert!((z - cis(-0.1 * t) / 3.0).norm() < 1e-14);
        }
        let (_, phi) = build_illustrative::<f64>();
        assert!((m.slice(0.0).unwrap() - &phi * phi.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn spectral_and_evolution_paths_agree() {
        let (h, phi) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let states = states_from_overlaps(&s, &phi).unwrap();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let times = Arc::new(sample_times(40.0, 1.0, 64, 5).unwrap());
        let a = exact_signal(&illustrative_model(), times.clone()).unwrap();
        let src = EvolutionSource {
            propagator: &p,
            left: &states,
            right: &states,
        };
        let b = exact_signal(&src, times).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn shots_are_in_the_alphabet() {
        let times = Arc::new(sample_times(40.0, 1.0, 50, 1).unwrap());
        let exact = exact_signal(&illustrative_model(), times).unwrap();
        let shot = shot_sample(&exact, 1, 3).unwrap();
        for z in &shot.data {
            assert!(z.re.abs() == 1.0 && z.im.abs() == 1.0);
        }
        let again = shot_sample(&exact, 1, 3).unwrap();
        assert_eq!(shot.data, again.data);
    }

    #[test]
    fn unit_signal_has_deterministic_real_part() {
        let times = Arc::new(TimeSamples::from_times(vec![0.0; 2000], 1.0, 1.0).unwrap());
        let exact = SignalTensor::new(1, 1, vec![C::new(1.0, 0.0); 2000], SignalMode::Exact, times).unwrap();
        let shot = shot_sample(&exact, 1, 9).unwrap();
        assert!(shot.data.iter().all(|z| z.re == 1.0));
        let mean_im = shot.data.iter().map(|z| z.im).sum::<f64>() / 2000.0;
        assert!(mean_im.abs() < 3.0 * (2.0f64 / 2000.0).sqrt());
    }

    #[test]
    fn rejects_large_amplitudes() {
        let times = Arc::new(TimeSamples::from_times(vec![0.0], 1.0, 1.0).unwrap());
        let exact = SignalTensor::new(1, 1, vec![C::new(1.1, 0.0)], SignalMode::Exact, times).unwrap();
        assert!(matches!(shot_sample(&exact, 1, 0), Err(QfamesError::InvalidAmplitude(_))));
    }

    #[test]
    fn krylov_model_matches_spectrum() {
        let h = crate::models::builders::build_tfim::<f64>(5, 0.8).unwrap();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let states = crate::stateprep::low_energy_mixtures(&s, 3, 2, 4).unwrap();
        let a = SpectralModel::from_spectrum(&s, &states, &states).unwrap();
        let b = SpectralModel::from_krylov(&h, &states, &states, 40).unwrap();
        for t in [0.0, 0.5, -3.0, 12.0] {
            assert!((a.slice(t).unwrap() - b.slice(t).unwrap()).norm() < 1e-9);
        }
    }
}
