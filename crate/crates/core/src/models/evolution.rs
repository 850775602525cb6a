//! Real- and imaginary-time propagation of statevectors.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{mismatch, QfamesError, Result};
use crate::linalg::{tridiag_eigh, Lanczos, LinearOp};
use crate::models::hamiltonian::PauliSumHamiltonian;
use crate::models::spectrum::{eigendecompose, EigenMode, Spectrum, DENSE_LIMIT};
use crate::scalar::{cabs, cis, CVec, Real, C};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackendKind {
    /// Full diagonalization, dimension at most `2^13`.
    DenseEigen,
    /// Product of exact single-term exponentials; needs commuting terms.
    CommutingProduct,
    /// Lanczos approximation of the exponential action.
    Krylov { tol: f64, max_subspace: usize },
}

impl BackendKind {
    pub fn krylov() -> Self {
        BackendKind::Krylov {
            tol: 1e-10,
            max_subspace: 40,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::DenseEigen => "dense-eigen",
            BackendKind::CommutingProduct => "commuting-product",
            BackendKind::Krylov { .. } => "krylov",
        }
    }
}

/// `e^{-βH}|ψ⟩` normalized, plus `ln ‖e^{-βH}|ψ⟩‖`.
#[derive(Debug, Clone)]
pub struct ImaginaryResult<T: Real> {
    pub state: CVec<T>,
    pub log_norm: T,
}

impl<T: Real> ImaginaryResult<T> {
    /// `‖e^{-βH}|ψ⟩‖`.
    pub fn norm(&self) -> T {
        self.log_norm.exp()
    }
}

/// Evolution backend bound to one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator<'h, T: Real> {
    h: &'h PauliSumHamiltonian<T>,
    kind: BackendKind,
    spectrum: Option<Arc<Spectrum<T>>>,
}

const NORM_TOL: f64 = 1e-8;

impl<'h, T: Real> Propagator<'h, T> {
    pub fn new(h: &'h PauliSumHamiltonian<T>, kind: BackendKind) -> Result<Self> {
        let spectrum = match kind {
            BackendKind::DenseEigen => {
                if h.dimension() > DENSE_LIMIT {
                    return Err(QfamesError::TooLarge {
                        dim: h.dimension(),
                        limit: DENSE_LIMIT,
                        mode: "dense-eigen backend",
                    });
                }
                Some(Arc::new(eigendecompose(h, EigenMode::Dense)?))
            }
            BackendKind::CommutingProduct => {
                if h.is_dense() || !h.all_commuting() {
                    return Err(QfamesError::BackendMismatch(
                        "commuting-product backend needs a Pauli sum with pairwise commuting terms".into(),
                    ));
                }
                None
            }
            BackendKind::Krylov { tol, max_subspace } => {
                if !(tol > 0.0) || max_subspace < 2 {
                    return Err(QfamesError::InvalidArgument(
                        "krylov backend needs tol > 0 and max_subspace >= 2".into(),
                    ));
                }
                None
            }
        };
        Ok(Self { h, kind, spectrum })
    }

    /// Dense-eigen backend reusing an already computed complete spectrum.
    pub fn with_spectrum(h: &'h PauliSumHamiltonian<T>, spectrum: Arc<Spectrum<T>>) -> Result<Self> {
        if !spectrum.complete || spectrum.dim() != h.dimension() {
            return Err(QfamesError::BackendMismatch(
                "dense-eigen backend needs a complete spectrum of the same Hamiltonian".into(),
            ));
        }
        Ok(Self {
            h,
            kind: BackendKind::DenseEigen,
            spectrum: Some(spectrum),
        })
    }

    /// Picks dense-eigen for small systems, commuting-product when possible,
    /// Krylov otherwise.
    pub fn auto(h: &'h PauliSumHamiltonian<T>) -> Result<Self> {
        if h.dimension() <= 1 << 11 {
            Self::new(h, BackendKind::DenseEigen)
        } else if !h.is_dense() && h.all_commuting() {
            Self::new(h, BackendKind::CommutingProduct)
        } else {
            Self::new(h, BackendKind::krylov())
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn hamiltonian(&self) -> &'h PauliSumHamiltonian<T> {
        self.h
    }

    pub fn spectrum(&self) -> Option<&Arc<Spectrum<T>>> {
        self.spectrum.as_ref()
    }

    fn check_state(&self, state: &CVec<T>) -> Result<()> {
        if state.len() != self.h.dimension() {
            return Err(mismatch(format!(
                "state of length {} for a {}-dimensional Hamiltonian",
                state.len(),
                self.h.dimension()
            )));
        }
        let n = state.norm().f64();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(QfamesError::NotNormalized(n));
        }
        Ok(())
    }

    /// `e^{-iHt}|ψ⟩`.
    pub fn evolve(&self, state: &CVec<T>, t: T) -> Result<CVec<T>> {
        self.check_state(state)?;
        if !t.is_finite() {
            return Err(QfamesError::NonFinite("evolution time".into()));
        }
        if t == T::zero() {
            return Ok(state.clone());
        }
        match self.kind {
            BackendKind::DenseEigen => {
                let s = self.spectrum.as_ref().expect("dense backend has a spectrum");
                let mut c = s.eigenvectors.ad_mul(state);
                for (ck, &l) in c.iter_mut().zip(&s.eigenvalues) {
                    *ck *= cis(-l * t);
                }
                Ok(&s.eigenvectors * c)
            }
            BackendKind::CommutingProduct => {
                let mut psi = state.clone();
                let mut scratch = CVec::zeros(psi.len());
                for term in self.h.terms() {
                    let (s, c) = (term.coefficient * t).sin_cos();
                    scratch.fill(C::new(T::zero(), T::zero()));
                    term.string
                        .apply_add(C::new(T::zero(), -s), psi.as_slice(), scratch.as_mut_slice());
                    psi *= C::new(c, T::zero());
                    psi += &scratch;
                }
                Ok(psi)
            }
            BackendKind::Krylov { tol, max_subspace } => {
                krylov_propagate(self.h, state, t, false, T::lit(tol), max_subspace).map(|r| r.state)
            }
        }
    }

    /// `e^{-βH}|ψ⟩` for `β ≥ 0`, normalized, with its norm.
    pub fn imaginary_evolve(&self, state: &CVec<T>, beta: T) -> Result<ImaginaryResult<T>> {
        if beta < T::zero() {
            return Err(QfamesError::InvalidArgument("imaginary time must be non-negative".into()));
        }
        self.exp_minus(state, beta)
    }

    /// `e^{-sH}|ψ⟩` for any real `s`, normalized, with its norm.
    pub fn exp_minus(&self, state: &CVec<T>, s: T) -> Result<ImaginaryResult<T>> {
        self.check_state(state)?;
        if !s.is_finite() {
            return Err(QfamesError::NonFinite("imaginary time".into()));
        }
        if s == T::zero() {
            return Ok(ImaginaryResult {
                state: state.clone(),
                log_norm: T::zero(),
            });
        }
        let out = match self.kind {
            BackendKind::DenseEigen => {
                let sp = self.spectrum.as_ref().expect("dense backend has a spectrum");
                let mut c = sp.eigenvectors.ad_mul(state);
                // Shift by the dominant exponent so nothing overflows.
                let shift = sp
                    .eigenvalues
                    .iter()
                    .zip(c.iter())
                    .filter(|(_, ck)| cabs(ck) > T::zero())
                    .map(|(&l, _)| -s * l)
                    .fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
                for (ck, &l) in c.iter_mut().zip(&sp.eigenvalues) {
                    *ck *= C::new((-s * l - shift).exp(), T::zero());
                }
                let v = &sp.eigenvectors * c;
                let n = v.norm();
                ImaginaryResult {
                    log_norm: n.ln() + shift,
                    state: v / C::new(n, T::zero()),
                }
            }
            BackendKind::CommutingProduct => {
                let mut psi = state.clone();
                let mut log_norm = T::zero();
                let mut scratch = CVec::zeros(psi.len());
                for term in self.h.terms() {
                    let x = term.coefficient * s;
                    scratch.fill(C::new(T::zero(), T::zero()));
                    term.string
                        .apply_add(C::new(-x.sinh(), T::zero()), psi.as_slice(), scratch.as_mut_slice());
                    psi *= C::new(x.cosh(), T::zero());
                    psi += &scratch;
                    let n = psi.norm();
                    if n <= T::zero() || !n.is_finite() {
                        return Err(QfamesError::DegenerateOverlap(n.f64()));
                    }
                    psi /= C::new(n, T::zero());
                    log_norm += n.ln();
                }
                ImaginaryResult { state: psi, log_norm }
            }
            BackendKind::Krylov { tol, max_subspace } => {
                krylov_propagate(self.h, state, s, true, T::lit(tol), max_subspace)?
            }
        };
        if !out.log_norm.is_finite() || out.log_norm.f64() < (1e-300f64).ln() {
            return Err(QfamesError::DegenerateOverlap(out.log_norm.f64().exp()));
        }
        Ok(out)
    }
}

/// Substep-split Lanczos propagation. With `imaginary` the map is
/// `e^{-tH}` and the result is renormalized after every substep.
fn krylov_propagate<T: Real>(
    h: &PauliSumHamiltonian<T>,
    state: &CVec<T>,
    t: T,
    imaginary: bool,
    tol: T,
    max_subspace: usize,
) -> Result<ImaginaryResult<T>> {
    let total = t.abs();
    let sign = if t < T::zero() { -T::one() } else { T::one() };
    let hnorm = h.norm_bound().max(T::lit(1e-300));
    let mut remaining = total;
    let mut psi = state.clone();
    let mut log_norm = T::zero();
    let cap = max_subspace.min(h.dimension());
    let empty: [CVec<T>; 0] = [];
    let mut guard = 0usize;
    while remaining > T::zero() {
        guard += 1;
        if guard > 1_000_000 {
            return Err(QfamesError::Numerical("Krylov propagation made no progress".into()));
        }
        let mut lz = Lanczos::new(psi.clone(), &empty, T::lit(1e-14));
        while lz.len() < cap && lz.step(h) {}
        let m = lz.len();
        let (theta, y) = tridiag_eigh(&lz.alpha, &lz.beta[..m - 1]);
        let resid = lz.residual_beta();
        let mut dt = remaining.min(T::lit(20.0) / hnorm);
        let (coeffs, step_log) = loop {
            let (c, lg) = krylov_coeffs(&theta, &y, sign * dt, imaginary);
            let err = resid * cabs(&c[m - 1]);
            let budget = tol * (dt / total).max(T::lit(1e-3));
            if err <= budget || dt <= total * T::lit(1e-12) {
                break (c, lg);
            }
            dt *= T::lit(0.5);
        };
        let next = lz.combine(&coeffs);
        let n = next.norm();
        if imaginary {
            if n <= T::zero() || !n.is_finite() {
                return Err(QfamesError::DegenerateOverlap(0.0));
            }
            log_norm += step_log + n.ln();
        }
        psi = next / C::new(n, T::zero());
        remaining -= dt;
    }
    Ok(ImaginaryResult { state: psi, log_norm })
}

/// Coefficients of `f(T_m) e_1` in the Lanczos basis, where `f(x) = e^{-ixdt}`
/// or, for imaginary steps, `e^{-x dt}` shifted by its largest value (the
/// shift is returned as a log factor).
fn krylov_coeffs<T: Real>(theta: &[T], y: &DMatrix<T>, dt: T, imaginary: bool) -> (Vec<C<T>>, T) {
    let m = theta.len();
    let shift = if imaginary {
        theta
            .iter()
            .map(|&th| -th * dt)
            .fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b))
    } else {
        T::zero()
    };
    let f: Vec<C<T>> = theta
        .iter()
        .map(|&th| {
            if imaginary {
                C::new((-th * dt - shift).exp(), T::zero())
            } else {
                cis(-th * dt)
            }
        })
        .collect();
    let coeffs = (0..m)
        .map(|i| {
            (0..m).fold(C::new(T::zero(), T::zero()), |acc, k| {
                acc + f[k] * (y[(i, k)] * y[(0, k)])
            })
        })
        .collect();
    (coeffs, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unit_vector;
    use crate::models::builders::{build_illustrative, build_tfim, build_toric, Boundary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_state(dim: usize, seed: u64) -> CVec<f64> {
        random_unit_vector(dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn backends_agree_on_tfim() {
        let h = build_tfim::<f64>(6, 0.9).unwrap().normalize_spectrum().0;
        let psi = rand_state(64, 1);
        let dense = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let kry = Propagator::new(&h, BackendKind::krylov()).unwrap();
        for t in [0.0, 0.3, -2.0, 17.5] {
            let a = dense.evolve(&psi, t).unwrap();
            let b = kry.evolve(&psi, t).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-8);
            assert!((&a - &b).norm() < 1e-7, "t = {t}: {}", (&a - &b).norm());
        }
    }

    #[test]
    fn all_three_agree_on_commuting_model() {
        let h = PauliSumHamiltonian::<f64>::from_strings(4, &[(-1.0, "ZZII"), (-0.5, "IZZI"), (0.3, "XXXX"), (0.7, "IIZZ")])
            .unwrap();
        assert!(h.all_commuting());
        let psi = rand_state(16, 2);
        let ps: Vec<_> = [BackendKind::DenseEigen, BackendKind::CommutingProduct, BackendKind::krylov()]
            .into_iter()
            .map(|k| Propagator::new(&h, k).unwrap())
            .collect();
        for t in [0.7, -3.1] {
            let out: Vec<_> = ps.iter().map(|p| p.evolve(&psi, t).unwrap()).collect();
            assert!((&out[0] - &out[1]).norm() < 1e-7);
            assert!((&out[0] - &out[2]).norm() < 1e-7);
        }
        for beta in [0.5, 4.0] {
            let out: Vec<_> = ps.iter().map(|p| p.imaginary_evolve(&psi, beta).unwrap()).collect();
            assert!((&out[0].state - &out[1].state).norm() < 1e-7);
            assert!((&out[0].state - &out[2].state).norm() < 1e-7);
            assert!((out[0].log_norm - out[1].log_norm).abs() < 1e-8);
            assert!((out[0].log_norm - out[2].log_norm).abs() < 1e-8);
        }
    }

    #[test]
    fn toric_commuting_vs_krylov() {
        let h = build_toric::<f64>(2, 4, Boundary::Torus).unwrap();
        let psi = rand_state(1 << 16, 3);
        let a = Propagator::new(&h, BackendKind::CommutingProduct).unwrap().evolve(&psi, 1.3).unwrap();
        let b = Propagator::new(&h, BackendKind::krylov()).unwrap().evolve(&psi, 1.3).unwrap();
        assert!((&a - &b).norm() < 1e-7);
    }

    #[test]
    fn eigenstate_phase_and_scaling() {
        let h = build_tfim::<f64>(4, 1.1).unwrap();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let s = p.spectrum().unwrap().clone();
        let e = s.eigenvectors.column(3).into_owned();
        let out = p.evolve(&e, 0.8).unwrap();
        let ov = e.dotc(&out);
        assert!((ov - cis(-s.eigenvalues[3] * 0.8)).norm() < 1e-12);
        let im = p.imaginary_evolve(&e, 0.6).unwrap();
        assert!((im.norm() - (-0.6 * s.eigenvalues[3]).exp()).abs() < 1e-12);
    }

    #[test]
    fn large_beta_projects_to_ground_space() {
        let (h, _) = build_illustrative::<f64>();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let psi = rand_state(3, 4);
        let w: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let out = p.imaginary_evolve(&psi, 30.0).unwrap();
        let fidelity = out.state[0].norm_sqr() + out.state[1].norm_sqr();
        let damp = (-2.0 * 30.0 * 0.1f64).exp();
        let expect = (w[0] + w[1]) / (w[0] + w[1] + w[2] * damp);
        assert!((fidelity - expect).abs() < 1e-12);
        let out = p.imaginary_evolve(&psi, 100.0).unwrap();
        assert!(out.state[0].norm_sqr() + out.state[1].norm_sqr() > 1.0 - 1e-6);
        let zero = p.imaginary_evolve(&psi, 0.0).unwrap();
        assert_eq!(zero.log_norm, 0.0);
    }

    #[test]
    fn rejects_mismatches() {
        let h = build_tfim::<f64>(3, 1.0).unwrap();
        assert!(matches!(
            Propagator::new(&h, BackendKind::CommutingProduct),
            Err(QfamesError::BackendMismatch(_))
        ));
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        assert!(p.evolve(&rand_state(4, 0), 1.0).is_err());
        let mut bad = rand_state(8, 0);
        bad *= C::new(2.0, 0.0);
        assert!(matches!(p.evolve(&bad, 1.0), Err(QfamesError::NotNormalized(_))));
    }
}
