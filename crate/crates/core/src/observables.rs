//! Projected-observable spectra inside a located cluster.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::observable::ObservableTensor;
use crate::dods::ClusterEstimate;
use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::linalg::eigenvalues_general;
use crate::scalar::{cis, cplx, czero, CMat, Real, C};

/// Residual imaginary parts above this are reported as warnings.
pub const IMAG_WARN: f64 = 0.05;

/// `G^O(θ)_{l,r} = (1/N) Σ_n 𝓩^O_{l,r,n} e^{iθt_n} e^{-iθt'_n}`.
pub fn filtered_observable_matrix<T: Real>(tensor: &ObservableTensor<T>, theta: T) -> CMat<T> {
    let n = tensor.n();
    let phases: Vec<C<T>> = tensor
        .t
        .iter()
        .zip(&tensor.t_prime)
        .map(|(&t, &tp)| cis(theta * (t - tp)))
        .collect();
    let inv = T::one() / <T as Real>::from_count(n.max(1));
    CMat::from_fn(tensor.l, tensor.r, |l, r| {
        tensor
            .series(l, r)
            .iter()
            .zip(&phases)
            .fold(czero(), |acc, (z, p)| acc + z * p)
            * inv
    })
}

#[derive(Debug, Clone)]
pub struct ProjectedPair<T: Real> {
    /// Diagonal of `G̃`, the retained singular values.
    pub g_tilde: Vec<T>,
    pub g_tilde_o: CMat<T>,
    pub theta_star: T,
    pub multiplicity: usize,
}

impl<T: Real> ProjectedPair<T> {
    pub fn g_tilde_matrix(&self) -> CMat<T> {
        let m = self.g_tilde.len();
        CMat::from_fn(m, m, |i, j| if i == j { cplx(self.g_tilde[i], T::zero()) } else { czero() })
    }
}

/// Projects `G^O(θ*)` onto the top `m` singular vectors stored in the cluster.
pub fn projected_pair<T: Real>(cluster: &ClusterEstimate<T>, g_o: &CMat<T>) -> Result<ProjectedPair<T>> {
    let m = cluster.multiplicity;
    if m == 0 {
        return Err(invalid("cluster has multiplicity 0; nothing to project onto"));
    }
    if g_o.nrows() != cluster.u.nrows() || g_o.ncols() != cluster.v.nrows() {
        return Err(mismatch(format!(
            "G^O is {}x{} but the cluster factors are for {}x{}",
            g_o.nrows(),
            g_o.ncols(),
            cluster.u.nrows(),
            cluster.v.nrows()
        )));
    }
    let u = cluster.u.columns(0, m);
    let v = cluster.v.columns(0, m);
    Ok(ProjectedPair {
        g_tilde: cluster.singular_values[..m].to_vec(),
        g_tilde_o: u.adjoint() * g_o * v,
        theta_star: cluster.theta_star,
        multiplicity: m,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSpectrum {
    pub theta_star: f64,
    /// Real parts, ascending.
    pub eigenvalues: Vec<f64>,
    pub residual_imag: Vec<f64>,
    pub range: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ObservableSpectrum {
    pub fn max_residual_imag(&self) -> f64 {
        self.residual_imag.iter().cloned().fold(0.0, f64::max)
    }
}

/// Eigenvalues of `G̃⁻¹ G̃^O`.
pub fn solve_generalized<T: Real>(pair: &ProjectedPair<T>) -> Result<ObservableSpectrum> {
    let m = pair.g_tilde.len();
    if m == 0 || pair.g_tilde_o.nrows() != m || pair.g_tilde_o.ncols() != m {
        return Err(mismatch("projected pair shape"));
    }
    if pair.g_tilde.iter().any(|s| !(s.is_finite() && *s > T::zero())) {
        return Err(QfamesError::NonFinite("retained singular value".into()));
    }
    if pair.g_tilde_o.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(QfamesError::NonFinite("projected observable matrix".into()));
    }
    let a = CMat::from_fn(m, m, |i, j| pair.g_tilde_o[(i, j)] / pair.g_tilde[i]);
    let mut ev: Vec<(f64, f64)> = eigenvalues_general(&a)?
        .into_iter()
        .map(|z| (z.re.f64(), z.im.f64()))
        .collect();
    if ev.iter().any(|(r, i)| !r.is_finite() || !i.is_finite()) {
        return Err(QfamesError::NonFinite("observable eigenvalue".into()));
    }
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues: Vec<f64> = ev.iter().map(|e| e.0).collect();
    let residual_imag: Vec<f64> = ev.iter().map(|e| e.1.abs()).collect();
    let mut warnings = Vec::new();
    let worst = residual_imag.iter().cloned().fold(0.0, f64::max);
    if worst > IMAG_WARN {
        warnings.push(format!(
            "residual imaginary part {worst:.3} exceeds {IMAG_WARN}; eigenvalues near theta = {:.6} are unreliable",
            pair.theta_star.f64()
        ));
    }
    let range = [eigenvalues[0], eigenvalues[m - 1]];
    Ok(ObservableSpectrum {
        theta_star: pair.theta_star.f64(),
        eigenvalues,
        residual_imag,
        range,
        warnings,
    })
}

/// `[min λ^O, max λ^O]`.
pub fn observable_range(spectrum: &ObservableSpectrum) -> Result<[f64; 2]> {
    let lo = spectrum.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = spectrum.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if spectrum.eigenvalues.is_empty() {
        return Err(invalid("empty observable spectrum"));
    }
    Ok([lo, hi])
}

/// Runs the observable stage on every cluster with `m ≥ 1`.
pub fn observable_spectra<T: Real>(
    clusters: &[ClusterEstimate<T>],
    tensor: &ObservableTensor<T>,
) -> Result<Vec<ObservableSpectrum>> {
    clusters
        .par_iter()
        .filter(|c| c.multiplicity > 0)
        .map(|c| {
            let g_o = filtered_observable_matrix(tensor, c.theta_star);
            solve_generalized(&projected_pair(c, &g_o)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::observable::observable_tensor_from_parts;
    use crate::linalg::svd;

    fn cluster(g: &CMat<f64>, tau: f64) -> ClusterEstimate<f64> {
        let s = svd(g).unwrap();
        ClusterEstimate {
            theta_star: 0.0,
            multiplicity: s.s.iter().filter(|&&x| x > tau).count(),
            singular_values: s.s,
            block_interval: (-0.1, 0.1),
            u: s.u,
            v: s.v,
        }
    }

    #[test]
    fn zero_times_give_plain_product() {
        let data: Vec<C<f64>> = (0..2)
            .flat_map(|l| (0..2).flat_map(move |_r| std::iter::repeat_n(C::new(l as f64, 1.0), 5)))
            .collect();
        let t = observable_tensor_from_parts(2, 2, data, vec![0.0; 5], vec![0.0; 5], 1.0, 1.0).unwrap();
        let g = filtered_observable_matrix(&t, 0.7);
        assert!((g[(1, 0)] - C::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_observable_gives_ones() {
        let g = CMat::from_fn(3, 3, |i, j| C::new(1.0 / (1 + i + j) as f64, 0.1 * (i as f64 - j as f64)));
        let c = cluster(&g, 1e-6);
        let sp = solve_generalized(&projected_pair(&c, &g).unwrap()).unwrap();
        for (e, im) in sp.eigenvalues.iter().zip(&sp.residual_imag) {
            assert!((e - 1.0).abs() < 1e-8 && *im < 1e-8);
        }
    }

    #[test]
    fn synthetic_diagonal_observable() {
        // Φ_D = Ψ_D with G = Φ Φ† and G^O = Φ O_D Φ†.
        let phi = CMat::from_row_slice(3, 2, &[
            C::new(0.8, 0.0), C::new(0.1, 0.2),
            C::new(0.3, -0.1), C::new(0.7, 0.0),
            C::new(0.0, 0.4), C::new(0.2, 0.5),
        ]);
        let o = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C::new(0.7, 0.0), C::new(-0.2, 0.0)]));
        let g = &phi * phi.adjoint();
        let g_o = &phi * o * phi.adjoint();
        let c = cluster(&g, 1e-6);
        assert_eq!(c.multiplicity, 2);
        let sp = solve_generalized(&projected_pair(&c, &g_o).unwrap()).unwrap();
        assert!((sp.eigenvalues[0] + 0.2).abs() < 1e-10);
        assert!((sp.eigenvalues[1] - 0.7).abs() < 1e-10);
        assert_eq!(observable_range(&sp).unwrap(), sp.range);
        let p = projected_pair(&c, &g).unwrap();
        assert!((&p.g_tilde_o - p.g_tilde_matrix()).norm() < 1e-12);
    }

    #[test]
    fn zero_multiplicity_refused() {
        let g = CMat::from_element(2, 2, C::new(1e-3, 0.0));
        let c = cluster(&g, 1.0);
        assert!(projected_pair(&c, &g).is_err());
    }

    #[test]
    fn imaginary_warning() {
        let pair = ProjectedPair {
            g_tilde: vec![1.0, 1.0],
            g_tilde_o: CMat::from_row_slice(2, 2, &[C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(-1.0, 0.0), C::new(0.0, 0.0)]),
            theta_star: 0.0,
            multiplicity: 2,
        };
        let sp = solve_generalized(&pair).unwrap();
        assert!(!sp.warnings.is_empty());
        assert!((sp.max_residual_imag() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn range_of_single() {
        let sp = ObservableSpectrum {
            theta_star: 0.0,
            eigenvalues: vec![1.0],
            residual_imag: vec![0.0],
            range: [1.0, 1.0],
            warnings: vec![],
        };
        assert_eq!(observable_range(&sp).unwrap(), [1.0, 1.0]);
    }
}
