//! Signal recovery from magnitudes only, via the Cauchy-Riemann relation
//! `dφ/dt = (1/2h)[ln r(t - ih) - ln r(t + ih)]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::acquisition::signal::SignalSource;
use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::models::evolution::Propagator;
use crate::scalar::{cabs, CMat, CVec, Real, C};
use crate::stateprep::StateSet;

/// Magnitude data and the integrated phase on a uniform grid `t_k = k·dt`.
#[derive(Debug, Clone, Serialize)]
pub struct AncillaFreeProbe {
    pub h: f64,
    pub grid_dt: f64,
    pub phase0: f64,
    /// `‖e^{hH}ψ‖`.
    pub c_plus: f64,
    /// `‖e^{-hH}ψ‖`.
    pub c_minus: f64,
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    /// `r(t + ih) = |⟨φ|e^{-iHt} e^{hH}|ψ⟩|`.
    pub r_plus: Vec<f64>,
    /// `r(t - ih) = |⟨φ|e^{-iHt} e^{-hH}|ψ⟩|`.
    pub r_minus: Vec<f64>,
    pub phase: Vec<f64>,
}

impl AncillaFreeProbe {
    pub fn reconstructed(&self) -> Vec<C<f64>> {
        self.r
            .iter()
            .zip(&self.phase)
            .map(|(&r, &p)| C::from_polar(r, p))
            .collect()
    }
}

const ZERO_TOL: f64 = 1e-8;

/// Reconstructs `𝓩(t) = ⟨φ|e^{-iHt}|ψ⟩` on `[0, t_max]`.
pub fn ancilla_free_reconstruct<T: Real>(
    propagator: &Propagator<'_, T>,
    phi: &CVec<T>,
    psi: &CVec<T>,
    t_max: f64,
    grid_dt: f64,
    h: f64,
) -> Result<AncillaFreeProbe> {
    if !(grid_dt > 0.0 && h > 0.0 && t_max >= 0.0) {
        return Err(invalid("need grid_dt > 0, h > 0 and t_max >= 0"));
    }
    if phi.len() != psi.len() {
        return Err(mismatch("left and right states differ in dimension"));
    }
    let overlap = phi.dotc(psi);
    let r0 = cabs(&overlap).f64();
    if r0 < ZERO_TOL {
        return Err(QfamesError::ZeroCrossing { t: 0.0, value: r0 });
    }
    let phase0 = overlap.im.f64().atan2(overlap.re.f64());
    let plus = propagator.exp_minus(psi, T::lit(-h))?;
    let minus = propagator.exp_minus(psi, T::lit(h))?;
    let (c_plus, c_minus) = (plus.norm().f64(), minus.norm().f64());

    let steps = (t_max / grid_dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * grid_dt).collect();
    let mags: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let tt = T::lit(t);
            let m = |v: &CVec<T>| -> Result<f64> { Ok(cabs(&phi.dotc(&propagator.evolve(v, tt)?)).f64()) };
            Ok((m(psi)?, c_plus * m(&plus.state)?, c_minus * m(&minus.state)?))
        })
        .collect::<Result<_>>()?;
    let mut r = Vec::with_capacity(mags.len());
    let mut r_plus = Vec::with_capacity(mags.len());
    let mut r_minus = Vec::with_capacity(mags.len());
    for (k, &(a, b, c)) in mags.iter().enumerate() {
        let low = a.min(b).min(c);
        if low < ZERO_TOL {
            return Err(QfamesError::ZeroCrossing { t: times[k], value: low });
        }
        r.push(a);
        r_plus.push(b);
        r_minus.push(c);
    }
    let rate: Vec<f64> = r_plus
        .iter()
        .zip(&r_minus)
        .map(|(p, m)| (m.ln() - p.ln()) / (2.0 * h))
        .collect();
    let mut phase = Vec::with_capacity(rate.len());
    phase.push(phase0);
    for k in 1..rate.len() {
        let prev = phase[k - 1];
        phase.push(prev + 0.5 * grid_dt * (rate[k - 1] + rate[k]));
    }
    Ok(AncillaFreeProbe {
        h,
        grid_dt,
        phase0,
        c_plus,
        c_minus,
        times,
        r,
        r_plus,
        r_minus,
        phase,
    })
}

/// Signal source assembled from reconstructed grids of every pair, evaluated
/// at arbitrary `|t| ≤ t_max` by linear interpolation. Negative times use
/// `𝓩_{l,r}(-t) = conj ⟨ψ_r|e^{-iHt}|φ_l⟩`.
#[derive(Debug, Clone)]
pub struct ReconstructedSignal {
    l: usize,
    r: usize,
    grid_dt: f64,
    forward: Vec<Vec<C<f64>>>,
    backward: Vec<Vec<C<f64>>>,
}

impl ReconstructedSignal {
    pub fn build<T: Real>(
        propagator: &Propagator<'_, T>,
        left: &StateSet<T>,
        right: &StateSet<T>,
        t_max: f64,
        grid_dt: f64,
        h: f64,
    ) -> Result<Self> {
        let (l, r) = (left.len(), right.len());
        let mut forward = Vec::with_capacity(l * r);
        let mut backward = Vec::with_capacity(l * r);
        for phi in left.states() {
            for psi in right.states() {
                forward.push(ancilla_free_reconstruct(propagator, phi, psi, t_max, grid_dt, h)?.reconstructed());
                backward.push(ancilla_free_reconstruct(propagator, psi, phi, t_max, grid_dt, h)?.reconstructed());
            }
        }
        Ok(Self {
            l,
            r,
            grid_dt,
            forward,
            backward,
        })
    }

    pub fn eval(&self, l: usize, r: usize, t: f64) -> Result<C<f64>> {
        let (grid, conj) = if t >= 0.0 {
            (&self.forward[l * self.r + r], false)
        } else {
            (&self.backward[l * self.r + r], true)
        };
        let x = t.abs() / self.grid_dt;
        let k = x.floor() as usize;
        if k + 1 >= grid.len() {
            if k < grid.len() && (x - k as f64) < 1e-9 {
                let z = grid[k];
                return Ok(if conj { z.conj() } else { z });
            }
            return Err(invalid(format!("time {t} outside the reconstructed range")));
        }
        let w = x - k as f64;
        let z = grid[k] * (1.0 - w) + grid[k + 1] * w;
        Ok(if conj { z.conj() } else { z })
    }
}

impl<T: Real> SignalSource<T> for ReconstructedSignal {
    fn shape(&self) -> (usize, usize) {
        (self.l, self.r)
    }

    fn slice(&self, t: T) -> Result<CMat<T>> {
        let mut out = CMat::zeros(self.l, self.r);
        for li in 0..self.l {
            for ri in 0..self.r {
                let z = self.eval(li, ri, t.f64())?;
                out[(li, ri)] = C::new(T::lit(z.re), T::lit(z.im));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builders::build_illustrative;
    use crate::models::evolution::BackendKind;
    use crate::models::spectrum::{eigendecompose, EigenMode};
    use crate::scalar::cis;
    use crate::stateprep::states_from_overlaps;

    fn setup() -> (crate::models::PauliSumHamiltonian<f64>, StateSet<f64>) {
        let (h, phi) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let st = states_from_overlaps(&s, &phi).unwrap();
        (h, st)
    }

    #[test]
    fn eigenstate_pair_is_exact() {
        let (h, _) = setup();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let e = CVec::from_vec(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        let probe = ancilla_free_reconstruct(&p, &e, &e, 5.0, 0.05, 0.3).unwrap();
        for (t, z) in probe.times.iter().zip(probe.reconstructed()) {
            assert!((z - cis(-0.1 * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn illustrative_pair_accuracy_and_order() {
        let (h, st) = setup();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let err = |l: usize, r: usize, dt: f64, hh: f64| {
            let probe = ancilla_free_reconstruct(&p, &st.states()[l], &st.states()[r], 10.0, dt, hh).unwrap();
            let exact = |t: f64| {
                let (a, b) = if l == r { (2.0, 1.0) } else { (0.0, 1.0) };
                (C::new(a, 0.0) + cis(-0.1 * t) * b) / 3.0
            };
            probe
                .times
                .iter()
                .zip(probe.reconstructed())
                .map(|(t, z)| (z - exact(*t)).norm())
                .fold(0.0, f64::max)
        };
        assert!(err(0, 1, 0.01, 0.01) < 1e-3);
        // Constant magnitude makes the difference quotient exact.
        assert!(err(0, 1, 0.01, 0.01) < 1e-10);
        let e1 = err(0, 0, 0.01, 0.01);
        assert!(e1 < 1e-3, "{e1}");
        let ratio = err(0, 0, 0.02, 0.02) / e1;
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn orthogonal_pair_reports_zero_crossing() {
        let (h, _) = setup();
        let p = Propagator::new(&h, BackendKind::DenseEigen).unwrap();
        let a = CVec::from_vec(vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]);
        let b = CVec::from_vec(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        assert!(matches!(
            ancilla_free_reconstruct(&p, &a, &b, 1.0, 0.1, 0.1),
            Err(QfamesError::ZeroCrossing { .. })
        ));
    }
}
