//! Observable-weighted signals `𝓩^O_{l,r}(t, t') = ⟨φ_l|e^{iHt'} O e^{-iHt}|ψ_r⟩`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::acquisition::signal::{check_amplitudes, entry_rng, hadamard_shots, SignalMode};
use crate::acquisition::times::{sample_times, TimeSamples};
use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::models::evolution::Propagator;
use crate::models::pauli::PauliString;
use crate::models::spectrum::Spectrum;
use crate::scalar::{cis, czero, CMat, CVec, Real, C};
use crate::stateprep::StateSet;

/// A Hermitian observable.
#[derive(Debug, Clone)]
pub enum Observable<T: Real> {
    Identity,
    Pauli(PauliString),
    /// `Σ c_j P_j`; unitary only in special cases.
    PauliSum(Vec<(T, PauliString)>),
    Dense(CMat<T>),
}

impl<T: Real> Observable<T> {
    pub fn apply(&self, v: &CVec<T>) -> CVec<T> {
        match self {
            Observable::Identity => v.clone(),
            Observable::Pauli(p) => CVec::from_vec(p.apply(v.as_slice())),
            Observable::PauliSum(terms) => {
                let mut out = vec![czero(); v.len()];
                for (c, p) in terms {
                    p.apply_add(C::new(*c, T::zero()), v.as_slice(), &mut out);
                }
                CVec::from_vec(out)
            }
            Observable::Dense(m) => m * v,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Observable::Identity => "identity".into(),
            Observable::Pauli(p) => format!("pauli:{p}"),
            Observable::PauliSum(t) => format!("pauli-sum:{} terms", t.len()),
            Observable::Dense(m) => format!("dense:{}x{}", m.nrows(), m.ncols()),
        }
    }

    /// Checks `O†O = I`. A real-coefficient Pauli sum is Hermitian, so it is
    /// tested as `O² = I` on a few fixed random vectors.
    pub fn is_unitary(&self, dim: usize) -> bool {
        match self {
            Observable::Identity | Observable::Pauli(_) => true,
            Observable::PauliSum(terms) => {
                if terms.len() == 1 {
                    return (terms[0].0.abs() - T::one()).abs() <= T::lit(1e-12);
                }
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x0b5e);
                (0..3).all(|_| {
                    let v: CVec<T> = crate::linalg::random_unit_vector(dim, &mut rng);
                    (self.apply(&self.apply(&v)) - &v).norm() <= T::lit(1e-10)
                })
            }
            Observable::Dense(m) => {
                m.is_square() && (m.ad_mul(m) - CMat::identity(m.nrows(), m.ncols())).norm() <= T::lit(1e-10)
            }
        }
    }

    /// `⟨E_k|O|E_k'⟩` for the given basis columns.
    pub fn in_basis(&self, basis: &CMat<T>) -> CMat<T> {
        let images: Vec<CVec<T>> = (0..basis.ncols())
            .into_par_iter()
            .map(|k| self.apply(&basis.column(k).into_owned()))
            .collect();
        let images = crate::linalg::from_columns(&images);
        basis.ad_mul(&images)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// `(t_n, t'_n)` drawn independently for every `n`.
    IidPairs,
    /// All pairs from two draws of `⌊√N⌋` times each.
    ProductGrid,
}

/// Observable data tensor with its time pairs. `t` and `t_prime` have one
/// entry per sample `n`.
#[derive(Debug, Clone)]
pub struct ObservableTensor<T: Real> {
    pub l: usize,
    pub r: usize,
    pub data: Vec<C<T>>,
    pub mode: SignalMode,
    pub t: Vec<T>,
    pub t_prime: Vec<T>,
    pub base_times: Arc<TimeSamples<T>>,
    pub base_times_prime: Arc<TimeSamples<T>>,
    pub pairing: Pairing,
    pub observable: String,
    pub unitary: bool,
}

impl<T: Real> ObservableTensor<T> {
    pub fn n(&self) -> usize {
        self.t.len()
    }

    pub fn series(&self, l: usize, r: usize) -> &[C<T>] {
        let start = (l * self.r + r) * self.n();
        &self.data[start..start + self.n()]
    }
}

/// Draws the two time families with width `T/√2` and pairs them.
pub fn observable_times<T: Real>(
    width: T,
    sigma: T,
    n: usize,
    pairing: Pairing,
    seed: u64,
) -> Result<(Arc<TimeSamples<T>>, Arc<TimeSamples<T>>, Vec<T>, Vec<T>)> {
    let w = width / T::lit(std::f64::consts::SQRT_2);
    let count = match pairing {
        Pairing::IidPairs => n,
        Pairing::ProductGrid => {
            let k = (n as f64).sqrt().floor() as usize;
            if k * k != n {
                return Err(invalid(format!("product-grid pairing needs a square N, got {n}")));
            }
            k
        }
    };
    let a = Arc::new(sample_times(w, sigma, count, seed)?);
    let b = Arc::new(sample_times(w, sigma, count, seed ^ 0x7157_5eed_0000_0001)?);
    let (t, tp) = match pairing {
        Pairing::IidPairs => (a.times.clone(), b.times.clone()),
        Pairing::ProductGrid => {
            let mut t = Vec::with_capacity(n);
            let mut tp = Vec::with_capacity(n);
            for &x in &a.times {
                for &y in &b.times {
                    t.push(x);
                    tp.push(y);
                }
            }
            (t, tp)
        }
    };
    Ok((a, b, t, tp))
}

/// Eigenvectors whose overlap columns are both below this are left out.
const SUPPORT_FLOOR: f64 = 1e-12;

/// Exact `𝓩^O` in the eigenbasis. Only eigenvectors with nonzero weight in
/// either family enter, so the spectrum may be partial as long as the states
/// lie in its span.
#[allow(clippy::too_many_arguments)]
pub fn observable_exact_signal<T: Real>(
    spectrum: &Spectrum<T>,
    left: &StateSet<T>,
    right: &StateSet<T>,
    observable: &Observable<T>,
    width: T,
    sigma: T,
    n: usize,
    pairing: Pairing,
    seed: u64,
) -> Result<ObservableTensor<T>> {
    let (phi, psi) = crate::stateprep::overlap_matrices(spectrum, left, right)?;
    for m in [&phi, &psi] {
        for i in 0..m.nrows() {
            let w = m.row(i).norm().f64();
            if (w - 1.0).abs() > 1e-8 {
                return Err(invalid(format!(
                    "state has weight {:.3e} outside the computed eigenspace",
                    1.0 - w * w
                )));
            }
        }
    }
    let support: Vec<usize> = (0..spectrum.len())
        .filter(|&k| phi.column(k).norm() > T::lit(SUPPORT_FLOOR) || psi.column(k).norm() > T::lit(SUPPORT_FLOOR))
        .collect();
    let basis = CMat::from_fn(spectrum.dim(), support.len(), |i, j| spectrum.eigenvectors[(i, support[j])]);
    let o = observable.in_basis(&basis);
    let lam: Vec<T> = support.iter().map(|&k| spectrum.eigenvalues[k]).collect();
    let phi_s = CMat::from_fn(phi.nrows(), support.len(), |i, j| phi[(i, support[j])]);
    let psi_s = CMat::from_fn(psi.nrows(), support.len(), |i, j| psi[(i, support[j])]);

    let (bt, btp, t, tp) = observable_times(width, sigma, n, pairing, seed)?;
    let (l, r, k) = (phi_s.nrows(), psi_s.nrows(), support.len());

    // w_r(t) = O · (conj(Ψ_r) ⊙ e^{-iλt}); v_l(t') = Φ_l ⊙ e^{iλt'}.
    let right_vecs = |time: T| -> Vec<CVec<T>> {
        (0..r)
            .map(|ri| {
                let c = CVec::from_fn(k, |m, _| psi_s[(ri, m)].conj() * cis(-lam[m] * time));
                &o * c
            })
            .collect()
    };
    let left_vecs = |time: T| -> Vec<CVec<T>> {
        (0..l)
            .map(|li| CVec::from_fn(k, |m, _| phi_s[(li, m)] * cis(lam[m] * time)))
            .collect()
    };
    let contract = |v: &CVec<T>, w: &CVec<T>| v.iter().zip(w.iter()).fold(czero(), |acc, (a, b)| acc + a * b);

    let mut data = vec![czero(); l * r * n];
    match pairing {
        Pairing::ProductGrid => {
            let ws: Vec<Vec<CVec<T>>> = bt.times.par_iter().map(|&x| right_vecs(x)).collect();
            let vs: Vec<Vec<CVec<T>>> = btp.times.par_iter().map(|&y| left_vecs(y)).collect();
            let m = btp.len();
            for (i, wi) in ws.iter().enumerate() {
                for (j, vj) in vs.iter().enumerate() {
                    let ni = i * m + j;
                    for li in 0..l {
                        for ri in 0..r {
                            data[(li * r + ri) * n + ni] = contract(&vj[li], &wi[ri]);
                        }
                    }
                }
            }
        }
        Pairing::IidPairs => {
            let slices: Vec<Vec<C<T>>> = t
                .par_iter()
                .zip(tp.par_iter())
                .map(|(&x, &y)| {
                    let ws = right_vecs(x);
                    let vs = left_vecs(y);
                    let mut out = Vec::with_capacity(l * r);
                    for v in &vs {
                        for w in &ws {
                            out.push(contract(v, w));
                        }
                    }
                    out
                })
                .collect();
            for (ni, s) in slices.iter().enumerate() {
                for (pair, z) in s.iter().enumerate() {
                    data[pair * n + ni] = *z;
                }
            }
        }
    }
    Ok(ObservableTensor {
        l,
        r,
        data,
        mode: SignalMode::Exact,
        t,
        t_prime: tp,
        base_times: bt,
        base_times_prime: btp,
        pairing,
        observable: observable.label(),
        unitary: observable.is_unitary(spectrum.dim()),
    })
}

/// Same quantity by direct propagation; used to cross-check the eigenbasis
/// path.
pub fn observable_signal_by_evolution<T: Real>(
    propagator: &Propagator<'_, T>,
    left: &StateSet<T>,
    right: &StateSet<T>,
    observable: &Observable<T>,
    t: T,
    t_prime: T,
) -> Result<CMat<T>> {
    let mut out = CMat::zeros(left.len(), right.len());
    let lefts: Vec<CVec<T>> = left
        .states()
        .iter()
        .map(|s| propagator.evolve(s, t_prime))
        .collect::<Result<_>>()?;
    for (ri, psi) in right.states().iter().enumerate() {
        let w = observable.apply(&propagator.evolve(psi, t)?);
        for (li, v) in lefts.iter().enumerate() {
            out[(li, ri)] = v.dotc(&w);
        }
    }
    Ok(out)
}

/// Shot model for `𝓩^O`; needs a unitary observable.
pub fn observable_shot_sample<T: Real>(exact: &ObservableTensor<T>, seed: u64) -> Result<ObservableTensor<T>> {
    if exact.mode != SignalMode::Exact {
        return Err(invalid("shot sampling needs an exact-mode tensor"));
    }
    if !exact.unitary {
        return Err(QfamesError::NonUnitaryObservable);
    }
    check_amplitudes(&exact.data)?;
    let n = exact.n();
    let r = exact.r;
    let data = exact
        .data
        .par_iter()
        .enumerate()
        .map(|(idx, &z)| {
            let (pair, ni) = (idx / n, idx % n);
            let mut rng = entry_rng(seed ^ 0x0b5e_7ab1_e000_0000, pair / r, pair % r, ni);
            hadamard_shots(z, 1, &mut rng)
        })
        .collect();
    Ok(ObservableTensor {
        data,
        mode: SignalMode::Shot {
            shots_per_entry: 1,
            seed,
        },
        ..exact.clone()
    })
}

/// Tensor from explicit data, for tests and loaders.
pub fn observable_tensor_from_parts<T: Real>(
    l: usize,
    r: usize,
    data: Vec<C<T>>,
    t: Vec<T>,
    t_prime: Vec<T>,
    width: T,
    sigma: T,
) -> Result<ObservableTensor<T>> {
    if t.len() != t_prime.len() || data.len() != l * r * t.len() {
        return Err(mismatch("observable tensor shape"));
    }
    let w = width / T::lit(std::f64::consts::SQRT_2);
    let bt = Arc::new(TimeSamples::from_times(t.clone(), w, sigma)?);
    let btp = Arc::new(TimeSamples::from_times(t_prime.clone(), w, sigma)?);
    Ok(ObservableTensor {
        l,
        r,
        data,
        mode: SignalMode::Exact,
        t,
        t_prime,
        base_times: bt,
        base_times_prime: btp,
        pairing: Pairing::IidPairs,
        observable: "explicit".into(),
        unitary: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builders::{build_illustrative, build_tfim};
    use crate::models::evolution::BackendKind;
    use crate::models::pauli::Pauli;
    use crate::models::spectrum::{eigendecompose, EigenMode};
    use crate::stateprep::{haar_random_states, states_from_overlaps};

    #[test]
    fn identity_at_zero_time() {
        let (h, phi) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let st = states_from_overlaps(&s, &phi).unwrap();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let z = observable_signal_by_evolution(&p, &st, &st, &Observable::Identity, 0.0, 0.0).unwrap();
        assert!((z - &phi * phi.adjoint()).norm() < 1e-14);
        // O = I with t, t' reduces to 𝓩(t - t').
        let z = observable_signal_by_evolution(&p, &st, &st, &Observable::Identity, 3.0, 1.0).unwrap();
        assert!((z[(0, 1)] - cis(-0.1 * 2.0) / 3.0).norm() < 1e-14);
    }

    #[test]
    fn eigenbasis_matches_evolution_on_tfim() {
        let h = build_tfim::<f64>(6, 0.7).unwrap().normalize_spectrum().0;
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let st = haar_random_states::<f64>(64, 2, 3).unwrap();
        let o = Observable::Pauli(PauliString::from_sparse(6, &[(1, Pauli::Z)]).unwrap());
        let tensor = observable_exact_signal(&s, &st, &st, &o, 5.0, 1.0, 16, Pairing::ProductGrid, 2).unwrap();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        for ni in [0, 5, 15] {
            let z = observable_signal_by_evolution(&p, &st, &st, &o, tensor.t[ni], tensor.t_prime[ni]).unwrap();
            for li in 0..2 {
                for ri in 0..2 {
                    assert!((z[(li, ri)] - tensor.series(li, ri)[ni]).norm() < 1e-9);
                }
            }
        }
        assert!(tensor.unitary);
    }

    #[test]
    fn non_unitary_rejected_for_shots() {
        let h = build_tfim::<f64>(3, 0.7).unwrap();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let st = haar_random_states::<f64>(8, 2, 3).unwrap();
        let sz = Observable::PauliSum(
            (0..3)
                .map(|i| (1.0 / 6.0, PauliString::from_sparse(3, &[(i, Pauli::Z)]).unwrap()))
                .collect(),
        );
        let t = observable_exact_signal(&s, &st, &st, &sz, 2.0, 1.0, 9, Pairing::ProductGrid, 1).unwrap();
        assert!(!t.unitary);
        assert!(matches!(observable_shot_sample(&t, 0), Err(QfamesError::NonUnitaryObservable)));
    }

    #[test]
    fn product_grid_needs_square() {
        assert!(observable_times::<f64>(1.0, 1.0, 10, Pairing::ProductGrid, 0).is_err());
        let (a, _, t, _) = observable_times::<f64>(2.0, 1.0, 9, Pairing::ProductGrid, 0).unwrap();
        assert_eq!(t.len(), 9);
        assert!((a.width - 2.0 / 2f64.sqrt()).abs() < 1e-15);
    }
}
