//! Initial-state families and overlap diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::linalg::{random_unit_vector, svd};
use crate::models::evolution::Propagator;
use crate::models::spectrum::Spectrum;
use crate::scalar::{CMat, CVec, Real, C};
use crate::serial::{pairs_to_vector, vector_to_pairs};

const UNIT_TOL: f64 = 1e-10;

/// A family of normalized states of common dimension.
#[derive(Debug, Clone)]
pub struct StateSet<T: Real> {
    states: Vec<CVec<T>>,
    labels: Vec<String>,
}

impl<T: Real> StateSet<T> {
    pub fn new(states: Vec<CVec<T>>, labels: Vec<String>) -> Result<Self> {
        if states.is_empty() {
            return Err(invalid("state set is empty"));
        }
        if labels.len() != states.len() {
            return Err(mismatch("one label per state required"));
        }
        let dim = states[0].len();
        for (i, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(mismatch(format!("state {i} has length {}, expected {dim}", s.len())));
            }
            let n = s.norm().f64();
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(QfamesError::NotNormalized(n));
            }
        }
        Ok(Self { states, labels })
    }

    /// Labels every state with `prefix` and its index.
    pub fn labelled(states: Vec<CVec<T>>, prefix: &str) -> Result<Self> {
        let labels = (0..states.len()).map(|i| format!("{prefix}[{i}]")).collect();
        Self::new(states, labels)
    }

    pub fn states(&self) -> &[CVec<T>] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// States as columns.
    pub fn matrix(&self) -> CMat<T> {
        CMat::from_fn(self.dim(), self.len(), |i, j| self.states[j][i])
    }

    pub fn to_doc(&self) -> StateSetDoc {
        StateSetDoc {
            labels: self.labels.clone(),
            states: self.states.iter().map(vector_to_pairs).collect(),
        }
    }

    pub fn from_doc(doc: &StateSetDoc) -> Result<Self> {
        Self::new(
            doc.states.iter().map(|s| pairs_to_vector(s)).collect(),
            doc.labels.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSetDoc {
    pub labels: Vec<String>,
    pub states: Vec<Vec<[f64; 2]>>,
}

/// States whose eigenbasis overlaps are exactly the rows of `phi`:
/// `|φ_l⟩ = Σ_m conj(Φ_{l,m}) |E_m⟩`.
pub fn states_from_overlaps<T: Real>(spectrum: &Spectrum<T>, phi: &CMat<T>) -> Result<StateSet<T>> {
    if phi.ncols() != spectrum.len() {
        return Err(mismatch(format!(
            "overlap matrix has {} columns, spectrum has {} levels",
            phi.ncols(),
            spectrum.len()
        )));
    }
    for l in 0..phi.nrows() {
        let n = phi.row(l).norm().f64();
        if (n - 1.0).abs() > 1e-8 {
            return Err(QfamesError::NotNormalized(n));
        }
    }
    let states = (0..phi.nrows())
        .map(|l| {
            let coeffs = phi.row(l).transpose().map(|z| z.conj());
            let v = &spectrum.eigenvectors * coeffs;
            // Absorb the row-norm tolerance so the state is unit to 1e-10.
            let n = v.norm();
            v / C::new(n, T::zero())
        })
        .collect();
    StateSet::labelled(states, "overlap")
}

/// Normalized complex Gaussian vectors (exact Haar measure).
pub fn haar_random_states<T: Real>(dim: usize, count: usize, seed: u64) -> Result<StateSet<T>> {
    if dim == 0 || count == 0 {
        return Err(invalid("haar states need dim >= 1 and count >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..count).map(|_| random_unit_vector(dim, &mut rng)).collect();
    StateSet::labelled(states, &format!("haar(seed={seed})"))
}

/// Haar states passed through `e^{-βH}` and renormalized.
pub fn boosted_random_states<T: Real>(
    propagator: &Propagator<'_, T>,
    beta: T,
    count: usize,
    seed: u64,
) -> Result<StateSet<T>> {
    let dim = propagator.hamiltonian().dimension();
    let haar = haar_random_states::<T>(dim, count, seed)?;
    let states = haar
        .states()
        .iter()
        .map(|s| propagator.imaginary_evolve(s, beta).map(|r| r.state))
        .collect::<Result<Vec<_>>>()?;
    StateSet::labelled(states, &format!("boosted(beta={}, seed={seed})", beta.f64()))
}

/// Random combinations of the lowest `k` eigenvectors. For `count <= k` the
/// states are mutually orthogonal (columns of a Haar unitary).
pub fn low_energy_mixtures<T: Real>(spectrum: &Spectrum<T>, k: usize, count: usize, seed: u64) -> Result<StateSet<T>> {
    if k == 0 || k > spectrum.len() || count == 0 {
        return Err(invalid(format!(
            "low-energy mixtures need 1 <= k <= {} and count >= 1",
            spectrum.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<CVec<T>> = if count <= k {
        let cols: Vec<CVec<T>> = (0..k).map(|_| random_unit_vector(k, &mut rng)).collect();
        let q = nalgebra::linalg::QR::new(crate::linalg::from_columns(&cols)).q();
        (0..count).map(|j| q.column(j).into_owned()).collect()
    } else {
        (0..count).map(|_| random_unit_vector(k, &mut rng)).collect()
    };
    let basis = spectrum.eigenvectors.columns(0, k);
    let states = coeffs
        .into_iter()
        .map(|c| {
            let v = basis * c;
            let n = v.norm();
            v / C::new(n, T::zero())
        })
        .collect();
    StateSet::labelled(states, &format!("lowest{k}(seed={seed})"))
}

/// `Φ_{l,m} = ⟨φ_l|E_m⟩`, `Ψ_{r,m} = ⟨ψ_r|E_m⟩`.
pub fn overlap_matrices<T: Real>(
    spectrum: &Spectrum<T>,
    left: &StateSet<T>,
    right: &StateSet<T>,
) -> Result<(CMat<T>, CMat<T>)> {
    if left.dim() != spectrum.dim() || right.dim() != spectrum.dim() {
        return Err(mismatch("state dimension differs from the spectrum dimension"));
    }
    let phi = left.matrix().ad_mul(&spectrum.eigenvectors);
    let psi = right.matrix().ad_mul(&spectrum.eigenvectors);
    Ok((phi, psi))
}

/// `p_m = ‖Φ_{:,m}‖ ‖Ψ_{:,m}‖`.
pub fn overlap_scores<T: Real>(phi: &CMat<T>, psi: &CMat<T>) -> Result<Vec<T>> {
    if phi.ncols() != psi.ncols() {
        return Err(mismatch("Φ and Ψ have different column counts"));
    }
    Ok((0..phi.ncols())
        .map(|m| phi.column(m).norm() * psi.column(m).norm())
        .collect())
}

/// Uniform-overlap statistics of one cluster.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterOverlap {
    pub members: Vec<usize>,
    pub s_min_phi: f64,
    pub s_avg_phi: f64,
    pub s_min_psi: f64,
    pub s_avg_psi: f64,
    /// Smallest χ with `s_min > s_avg / (1 + χ)` for both families; infinite
    /// when a restriction is rank deficient.
    pub chi: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceDiagnostics {
    pub p_per_eigenvector: Vec<f64>,
    pub dominant_set: Vec<usize>,
    pub p_min: f64,
    pub p_tail: f64,
    /// `p_min / p_tail`, infinite when `p_tail = 0`.
    pub dominance_ratio: f64,
    pub c_p: f64,
    pub condition_holds: bool,
    pub clusters: Vec<ClusterOverlap>,
    pub warnings: Vec<String>,
}

/// Singular-value statistics `(s_min, s_avg)` of `a` restricted to `cols`.
/// `s_avg = ‖A‖_F / √|cols|`; `s_min` is zero when `A` has fewer rows than
/// columns.
pub fn restricted_singular_stats<T: Real>(a: &CMat<T>, cols: &[usize]) -> Result<(f64, f64)> {
    let sub = CMat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
    let n = cols.len() as f64;
    let s_avg = sub.norm().f64() / n.sqrt();
    if a.nrows() < cols.len() {
        return Ok((0.0, s_avg));
    }
    let s = svd(&sub)?.s;
    Ok((s.last().map_or(0.0, |x| x.f64()), s_avg))
}

fn chi_of(s_min: f64, s_avg: f64) -> f64 {
    if s_min <= 0.0 {
        f64::INFINITY
    } else {
        (s_avg / s_min - 1.0).max(0.0)
    }
}

pub fn dominance_diagnostics<T: Real>(
    phi: &CMat<T>,
    psi: &CMat<T>,
    dominant: &[usize],
    clusters: &[Vec<usize>],
    c_p: f64,
) -> Result<DominanceDiagnostics> {
    if dominant.is_empty() {
        return Err(invalid("dominant set is empty"));
    }
    let p: Vec<f64> = overlap_scores(phi, psi)?.into_iter().map(|x| x.f64()).collect();
    if let Some(&bad) = dominant.iter().find(|&&m| m >= p.len()) {
        return Err(invalid(format!("dominant index {bad} out of range")));
    }
    let mut in_d = vec![false; p.len()];
    for &m in dominant {
        in_d[m] = true;
    }
    let mut covered = vec![false; p.len()];
    for c in clusters {
        for &m in c {
            if m >= p.len() || !in_d[m] || covered[m] {
                return Err(invalid("clusters must partition the dominant set"));
            }
            covered[m] = true;
        }
    }
    if covered != in_d {
        return Err(invalid("clusters must partition the dominant set"));
    }
    let p_min = dominant.iter().map(|&m| p[m]).fold(f64::INFINITY, f64::min);
    let p_tail: f64 = (0..p.len()).filter(|&m| !in_d[m]).map(|m| p[m]).sum();
    let ratio = if p_tail == 0.0 { f64::INFINITY } else { p_min / p_tail };
    let mut warnings = Vec::new();
    let mut out_clusters = Vec::new();
    for c in clusters {
        let (s_min_phi, s_avg_phi) = restricted_singular_stats(phi, c)?;
        let (s_min_psi, s_avg_psi) = restricted_singular_stats(psi, c)?;
        let chi = chi_of(s_min_phi, s_avg_phi).max(chi_of(s_min_psi, s_avg_psi));
        let rank_deficient = !chi.is_finite();
        if rank_deficient {
            warnings.push(format!(
                "cluster {c:?}: restricted overlap matrix is rank deficient; its multiplicity cannot be \
                 resolved from these initial states (an indistinguishable lower-multiplicity instance exists)"
            ));
        }
        out_clusters.push(ClusterOverlap {
            members: c.clone(),
            s_min_phi,
            s_avg_phi,
            s_min_psi,
            s_avg_psi,
            chi,
            rank_deficient,
        });
    }
    Ok(DominanceDiagnostics {
        p_per_eigenvector: p,
        dominant_set: dominant.to_vec(),
        p_min,
        p_tail,
        dominance_ratio: ratio,
        c_p,
        condition_holds: p_min >= c_p * p_tail,
        clusters: out_clusters,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builders::build_illustrative;
    use crate::models::spectrum::{eigendecompose, EigenMode};

    fn illustrative() -> (Spectrum<f64>, CMat<f64>) {
        let (h, phi) = build_illustrative::<f64>();
        (eigendecompose(&h, EigenMode::Dense).unwrap(), phi)
    }

    #[test]
    fn overlap_round_trip() {
        let (s, phi) = illustrative();
        let set = states_from_overlaps(&s, &phi).unwrap();
        let (p, q) = overlap_matrices(&s, &set, &set).unwrap();
        assert!((p - &phi).norm() < 1e-12);
        assert!((q - &phi).norm() < 1e-12);
    }

    #[test]
    fn identity_overlaps_give_eigenvectors() {
        let (s, _) = illustrative();
        let set = states_from_overlaps(&s, &CMat::identity(3, 3)).unwrap();
        for (m, st) in set.states().iter().enumerate() {
            assert!((st - s.eigenvectors.column(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn non_unit_rows_rejected() {
        let (s, mut phi) = illustrative();
        phi[(0, 0)] *= C::new(2.0, 0.0);
        assert!(states_from_overlaps(&s, &phi).is_err());
    }

    #[test]
    fn illustrative_diagnostics() {
        let (_, phi) = illustrative();
        let d = dominance_diagnostics(&phi, &phi, &[0, 1, 2], &[vec![0, 1], vec![2]], 10.0).unwrap();
        assert_eq!(d.p_tail, 0.0);
        assert!(d.p_per_eigenvector.iter().all(|p| (p - 1.0).abs() < 1e-14));
        assert!(d.dominance_ratio.is_infinite());
        assert!((d.clusters[0].chi - (1.5f64.sqrt() - 1.0)).abs() < 1e-12);
        assert_eq!(d.clusters[1].chi, 0.0);
    }

    #[test]
    fn single_state_cannot_resolve_pair() {
        let phi = CMat::<f64>::from_row_slice(1, 2, &[C::new(0.6, 0.0), C::new(0.8, 0.0)]);
        let d = dominance_diagnostics(&phi, &phi, &[0, 1], &[vec![0, 1]], 1.0).unwrap();
        assert!(d.clusters[0].rank_deficient);
        assert!(d.clusters[0].chi.is_infinite());
        assert!(!d.warnings.is_empty());
    }

    #[test]
    fn empty_dominant_set_rejected() {
        let (_, phi) = illustrative();
        assert!(dominance_diagnostics(&phi, &phi, &[], &[], 1.0).is_err());
    }

    #[test]
    fn haar_is_deterministic_and_unit() {
        let a = haar_random_states::<f64>(5, 4, 9).unwrap();
        let b = haar_random_states::<f64>(5, 4, 9).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            assert_eq!(x, y);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_second_moment() {
        let n = 1000;
        let set = haar_random_states::<f64>(2, n, 21).unwrap();
        let w: Vec<f64> = set.states().iter().map(|s| s[0].norm_sqr()).collect();
        let mean = w.iter().sum::<f64>() / n as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - 0.5).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn mixtures_orthonormal_when_few() {
        let h = crate::models::builders::build_tfim::<f64>(5, 0.5).unwrap();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let set = low_energy_mixtures(&s, 4, 3, 1).unwrap();
        let m = set.matrix();
        assert!((m.ad_mul(&m) - CMat::identity(3, 3)).norm() < 1e-12);
        let (phi, _) = overlap_matrices(&s, &set, &set).unwrap();
        for m in 4..phi.ncols() {
            assert!(phi.column(m).norm() < 1e-12);
        }
    }

    #[test]
    fn doc_round_trip() {
        let set = haar_random_states::<f64>(3, 2, 4).unwrap();
        let back = StateSet::<f64>::from_doc(&set.to_doc()).unwrap();
        assert_eq!(back.states(), set.states());
    }
}
