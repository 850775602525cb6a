//! Filtered matrices, the Frobenius landscape, search-and-block and SVD
//! multiplicity counting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::signal::SignalTensor;
use crate::error::{invalid, QfamesError, Result};
use crate::linalg::svd;
use crate::nufft::uniform_grid_sum;
use crate::scalar::{cis, czero, norm_sqr, CMat, Real, C};

/// Default memory budget for cached landscape matrices, in complex numbers.
pub const CACHE_BUDGET: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfamesConfig {
    /// Samples per entry.
    #[serde(rename = "N")]
    pub n: usize,
    /// Filter width.
    #[serde(rename = "T")]
    pub t: f64,
    pub sigma: f64,
    /// Number of candidates to search for.
    pub i_tilde: usize,
    /// SVD threshold.
    pub tau: f64,
    /// Grid spacing is `q / T`.
    pub q: f64,
    /// Block radius is `α / T`.
    pub alpha: f64,
}

impl QfamesConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos(self.t, "T")?;
        pos(self.sigma, "sigma")?;
        pos(self.q, "q")?;
        pos(self.alpha, "alpha")?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be non-negative, got {}", self.tau)));
        }
        if self.i_tilde == 0 {
            return Err(invalid("i_tilde must be at least 1"));
        }
        if self.n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if self.grid_count() == 0 {
            return Err(invalid(format!("q = {} is too large: the search grid is empty", self.q)));
        }
        Ok(())
    }

    /// `J = ⌊2πT/q⌋`.
    pub fn grid_count(&self) -> usize {
        (2.0 * std::f64::consts::PI * self.t / self.q).floor() as usize
    }

    /// `σT`.
    pub fn max_time(&self) -> f64 {
        self.sigma * self.t
    }

    fn check_tensor<T: Real>(&self, tensor: &SignalTensor<T>) -> Result<()> {
        self.validate()?;
        let w = tensor.times.width.f64();
        if (w - self.t).abs() > 1e-12 * self.t.max(1.0) {
            return Err(invalid(format!("config T = {} but the tensor was sampled with T = {w}", self.t)));
        }
        if tensor.n() != self.n {
            return Err(invalid(format!("config N = {} but the tensor has {} samples", self.n, tensor.n())));
        }
        Ok(())
    }
}

/// `G(θ)_{l,r} = (1/N) Σ_n Z_{l,r,n} e^{iθt_n}`.
pub fn filtered_matrix<T: Real>(tensor: &SignalTensor<T>, theta: T) -> CMat<T> {
    let n = tensor.n();
    let phases: Vec<C<T>> = tensor.times.times.iter().map(|&t| cis(theta * t)).collect();
    let inv = T::one() / <T as Real>::from_count(n);
    CMat::from_fn(tensor.l, tensor.r, |l, r| {
        let s = tensor
            .series(l, r)
            .iter()
            .zip(&phases)
            .fold(czero(), |acc, (z, p)| acc + z * p);
        s * inv
    })
}

/// `θ_j = -π + j q/T` for `j = 0..=J` and `W_j = ‖G(θ_j)‖_F`.
#[derive(Debug, Clone)]
pub struct Landscape<T: Real> {
    pub theta0: T,
    pub step: T,
    pub values: Vec<T>,
    /// Per-entry grids `G_{l,r}(θ_j)`, row-major over `(l, r)`, when cached.
    pub cache: Option<Vec<Vec<C<T>>>>,
}

impl<T: Real> Landscape<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn theta(&self, j: usize) -> T {
        self.theta0 + self.step * <T as Real>::from_count(j)
    }

    pub fn grid(&self) -> Vec<T> {
        (0..self.len()).map(|j| self.theta(j)).collect()
    }

    /// Index of the grid point closest to `theta`.
    pub fn nearest(&self, theta: T) -> usize {
        let x = ((theta - self.theta0) / self.step).f64().round();
        (x.max(0.0) as usize).min(self.len() - 1)
    }

    /// Cached `G(θ_j)`, if available.
    pub fn cached_matrix(&self, j: usize, l: usize, r: usize) -> Option<CMat<T>> {
        let c = self.cache.as_ref()?;
        Some(CMat::from_fn(l, r, |a, b| c[a * r + b][j]))
    }

    /// Two-column CSV `theta,frobenius_norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,frobenius_norm\n");
        for j in 0..self.len() {
            s.push_str(&format!("{},{}\n", self.theta(j).f64(), self.values[j].f64()));
        }
        s
    }
}

/// Evaluates the landscape; `cache_budget` bounds the number of complex
/// entries kept for later reuse (0 disables caching).
pub fn landscape_with_budget<T: Real>(
    tensor: &SignalTensor<T>,
    config: &QfamesConfig,
    cache_budget: usize,
) -> Result<Landscape<T>> {
    config.check_tensor(tensor)?;
    let count = config.grid_count() + 1;
    let theta0 = T::lit(-std::f64::consts::PI);
    let step = T::lit(config.q / config.t);
    let inv = T::one() / <T as Real>::from_count(tensor.n());
    let pairs: Vec<(usize, usize)> = (0..tensor.l).flat_map(|l| (0..tensor.r).map(move |r| (l, r))).collect();
    let keep = cache_budget > 0 && count.saturating_mul(pairs.len()) <= cache_budget;
    let grids: Vec<Vec<C<T>>> = pairs
        .par_iter()
        .map(|&(l, r)| {
            let mut g = uniform_grid_sum(tensor.series(l, r), &tensor.times.times, theta0, step, count);
            g.iter_mut().for_each(|z| *z *= inv);
            g
        })
        .collect();
    let mut values = vec![T::zero(); count];
    for g in &grids {
        for (v, z) in values.iter_mut().zip(g) {
            *v += norm_sqr(z);
        }
    }
    values.iter_mut().for_each(|v| *v = v.sqrt());
    if values.iter().any(|v| !v.is_finite()) {
        return Err(QfamesError::NonFinite("landscape value".into()));
    }
    Ok(Landscape {
        theta0,
        step,
        values,
        cache: keep.then_some(grids),
    })
}

/// Landscape without cached matrices.
pub fn landscape<T: Real>(tensor: &SignalTensor<T>, config: &QfamesConfig) -> Result<Landscape<T>> {
    landscape_with_budget(tensor, config, 0)
}

#[derive(Debug, Clone)]
pub struct SearchResult<T: Real> {
    /// Candidates in the order found (descending landscape height).
    pub thetas: Vec<T>,
    pub indices: Vec<usize>,
    /// True if every grid point was blocked before `I_tilde` candidates were
    /// found.
    pub exhausted: bool,
}

/// Repeated argmax over unblocked points; each pick blocks the open interval
/// `(θ* - α/T, θ* + α/T)`. Ties go to the lowest `θ`.
pub fn search_and_block<T: Real>(landscape: &Landscape<T>, i_tilde: usize, alpha: f64, t: f64) -> SearchResult<T> {
    let radius = alpha / t;
    let mut blocked = vec![false; landscape.len()];
    let mut thetas = Vec::new();
    let mut indices = Vec::new();
    let mut exhausted = false;
    for _ in 0..i_tilde {
        let mut best: Option<usize> = None;
        for (j, &v) in landscape.values.iter().enumerate() {
            if !blocked[j] && best.is_none_or(|b| v > landscape.values[b]) {
                best = Some(j);
            }
        }
        let Some(j) = best else {
            exhausted = true;
            break;
        };
        let th = landscape.theta(j);
        thetas.push(th);
        indices.push(j);
        let step = landscape.step.f64();
        let reach = (radius / step).ceil() as usize + 1;
        let lo = j.saturating_sub(reach);
        let hi = (j + reach).min(landscape.len() - 1);
        for (k, b) in blocked.iter_mut().enumerate().take(hi + 1).skip(lo) {
            if (landscape.theta(k) - th).abs().f64() < radius {
                *b = true;
            }
        }
    }
    SearchResult {
        thetas,
        indices,
        exhausted,
    }
}

/// A located candidate and its SVD.
#[derive(Debug, Clone)]
pub struct ClusterEstimate<T: Real> {
    pub theta_star: T,
    pub multiplicity: usize,
    /// Descending.
    pub singular_values: Vec<T>,
    pub block_interval: (T, T),
    /// Left and right singular vectors (all of them; the first
    /// `multiplicity` columns span the cluster).
    pub u: CMat<T>,
    pub v: CMat<T>,
}

/// SVD of `G(θ*)` for each candidate; returns `(kept, discarded)` where the
/// discarded candidates have no singular value above `τ`.
pub fn multiplicities<T: Real>(
    tensor: &SignalTensor<T>,
    thetas: &[T],
    tau: f64,
    alpha_over_t: f64,
) -> Result<(Vec<ClusterEstimate<T>>, Vec<ClusterEstimate<T>>)> {
    if !(tau >= 0.0) {
        return Err(invalid("tau must be non-negative"));
    }
    let tau_t = T::lit(tau);
    let radius = T::lit(alpha_over_t);
    let estimates: Vec<ClusterEstimate<T>> = thetas
        .par_iter()
        .map(|&th| {
            let g = filtered_matrix(tensor, th);
            let s = svd(&g)?;
            let m = s.s.iter().filter(|&&x| x > tau_t).count();
            Ok(ClusterEstimate {
                theta_star: th,
                multiplicity: m,
                singular_values: s.s,
                block_interval: (th - radius, th + radius),
                u: s.u,
                v: s.v,
            })
        })
        .collect::<Result<_>>()?;
    Ok(estimates.into_iter().partition(|c| c.multiplicity > 0))
}

#[derive(Debug, Clone)]
pub struct DodsEstimate<T: Real> {
    /// Sorted by `θ*`.
    pub clusters: Vec<ClusterEstimate<T>>,
    pub discarded: Vec<ClusterEstimate<T>>,
    pub config: QfamesConfig,
    pub total_multiplicity: usize,
    pub exhausted: bool,
}

impl<T: Real> DodsEstimate<T> {
    pub fn centers(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.theta_star.f64()).collect()
    }

    pub fn atoms(&self) -> Vec<(f64, usize)> {
        self.clusters
            .iter()
            .map(|c| (c.theta_star.f64(), c.multiplicity))
            .collect()
    }

    /// Serializable summary; `norm_scale` converts energies to physical
    /// units.
    pub fn to_doc(&self, norm_scale: f64) -> DodsDoc {
        let doc = |c: &ClusterEstimate<T>| ClusterDoc {
            theta_star: c.theta_star.f64(),
            theta_star_physical: c.theta_star.f64() / norm_scale,
            multiplicity: c.multiplicity,
            singular_values: c.singular_values.iter().map(|s| s.f64()).collect(),
            block: [c.block_interval.0.f64(), c.block_interval.1.f64()],
        };
        DodsDoc {
            clusters: self.clusters.iter().map(doc).collect(),
            discarded: self.discarded.iter().map(doc).collect(),
            config: self.config,
            total_multiplicity: self.total_multiplicity,
            exhausted: self.exhausted,
            norm_scale,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub theta_star: f64,
    pub theta_star_physical: f64,
    pub multiplicity: usize,
    pub singular_values: Vec<f64>,
    pub block: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DodsDoc {
    pub clusters: Vec<ClusterDoc>,
    pub discarded: Vec<ClusterDoc>,
    pub config: QfamesConfig,
    pub total_multiplicity: usize,
    pub exhausted: bool,
    pub norm_scale: f64,
}

/// Landscape, search-and-block, then multiplicities.
pub fn run_qfames<T: Real>(tensor: &SignalTensor<T>, config: &QfamesConfig) -> Result<DodsEstimate<T>> {
    let land = landscape(tensor, config)?;
    run_on_landscape(tensor, config, &land)
}

/// As `run_qfames`, reusing an already computed landscape.
pub fn run_on_landscape<T: Real>(
    tensor: &SignalTensor<T>,
    config: &QfamesConfig,
    land: &Landscape<T>,
) -> Result<DodsEstimate<T>> {
    config.check_tensor(tensor)?;
    let found = search_and_block(land, config.i_tilde, config.alpha, config.t);
    let (mut clusters, discarded) = multiplicities(tensor, &found.thetas, config.tau, config.alpha / config.t)?;
    clusters.sort_by(|a, b| {
        a.theta_star
            .partial_cmp(&b.theta_star)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let total = clusters.iter().map(|c| c.multiplicity).sum();
    Ok(DodsEstimate {
        clusters,
        discarded,
        config: *config,
        total_multiplicity: total,
        exhausted: found.exhausted,
    })
}

/// One heuristic choice and the asymptotic condition it instantiates.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub parameter: String,
    pub condition: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefaultParams {
    pub config: QfamesConfig,
    pub report: Vec<ConditionReport>,
    pub warnings: Vec<String>,
}

/// Heuristic defaults from a gap guess, a tail-overlap guess, the family
/// sizes and a guess of the number of dominant eigenvalues.
pub fn default_params(delta: f64, p_tail: f64, l: usize, r: usize, k: usize) -> Result<DefaultParams> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("gap guess must be positive"));
    }
    if !(p_tail >= 0.0) || l == 0 || r == 0 || k == 0 {
        return Err(invalid("p_tail >= 0 and L, R, K >= 1 required"));
    }
    let lr = (l * r) as f64;
    let sigma = 1.0;
    let t = (10.0 / delta).max(1.0);
    let tau = (2.0 * p_tail).max(0.1 * lr.sqrt());
    let q = (p_tail / ((1.0 + sigma) * (k as f64 * lr).sqrt())).clamp(1e-4, 0.1);
    let alpha = (k as f64 * lr / p_tail.max(1e-3)).ln().max(5.0);
    let n = ((lr / p_tail.max(0.1).powi(2)).ceil() as usize).max(1000);
    let config = QfamesConfig {
        n,
        t,
        sigma,
        i_tilde: k,
        tau,
        q,
        alpha,
    };
    let mut warnings = Vec::new();
    if alpha / t >= delta {
        warnings.push(format!(
            "block radius alpha/T = {:.4} is not below the gap guess {delta}; neighbouring clusters may be blocked",
            alpha / t
        ));
    }
    let report = vec![
        ConditionReport {
            parameter: "T".into(),
            condition: "T = Omega~(1/Delta); here max(10/Delta, 1)".into(),
            value: t,
        },
        ConditionReport {
            parameter: "N".into(),
            condition: "N = Omega~(L R p_tail^-2); here max(1000, LR/max(p_tail,0.1)^2)".into(),
            value: n as f64,
        },
        ConditionReport {
            parameter: "tau".into(),
            condition: "tau = Theta(p_tail); here max(2 p_tail, 0.1 sqrt(LR))".into(),
            value: tau,
        },
        ConditionReport {
            parameter: "q".into(),
            condition: "q = O(p_tail / ((1+sigma) sqrt(K L R))); clamped to [1e-4, 0.1]".into(),
            value: q,
        },
        ConditionReport {
            parameter: "alpha".into(),
            condition: "alpha = O(Delta T); here max(5, ln(K L R / max(p_tail, 1e-3)))".into(),
            value: alpha,
        },
    ];
    Ok(DefaultParams {
        config,
        report,
        warnings,
    })
}

/// Result of a distance computation between atomic measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    /// Set when the two measures have different total multiplicity.
    pub mismatch: bool,
}

/// `W_1` between the normalized measures `(1/K) Σ m_i δ_{x_i}`, by sorted
/// matching of the expanded atoms.
pub fn wasserstein1(estimate: &[(f64, usize)], exact: &[(f64, usize)]) -> Distance {
    let expand = |a: &[(f64, usize)]| {
        let mut v: Vec<f64> = a.iter().flat_map(|&(x, m)| std::iter::repeat_n(x, m)).collect();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        v
    };
    let (a, b) = (expand(estimate), expand(exact));
    if a.len() != b.len() || a.is_empty() {
        return Distance {
            value: f64::INFINITY,
            mismatch: true,
        };
    }
    let value = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    Distance { value, mismatch: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::signal::{exact_signal, SignalMode, SpectralModel};
    use crate::acquisition::times::{sample_times, TimeSamples};
    use crate::models::builders::build_illustrative;
    use std::sync::Arc;

    fn cfg(n: usize, t: f64) -> QfamesConfig {
        QfamesConfig {
            n,
            t,
            sigma: 1.0,
            i_tilde: 2,
            tau: 0.3,
            q: 0.005,
            alpha: 5.0,
        }
    }

    #[test]
    fn zero_times_collapse_phases() {
        let times = Arc::new(TimeSamples::from_times(vec![0.0; 4], 1.0, 1.0).unwrap());
        let data: Vec<C<f64>> = (0..8).map(|i| C::new(i as f64, 1.0)).collect();
        let t = SignalTensor::new(1, 2, data, SignalMode::Exact, times).unwrap();
        for th in [-1.0, 0.3, 2.0] {
            let g = filtered_matrix(&t, th);
            assert!((g[(0, 0)] - C::new(1.5, 1.0)).norm() < 1e-14);
            assert!((g[(0, 1)] - C::new(5.5, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn grid_count_arithmetic() {
        assert_eq!(cfg(1, 40.0).grid_count(), 50265);
        let bad = QfamesConfig { q: 1e3, ..cfg(1, 1.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn illustrative_exact_pipeline() {
        let (_, phi) = build_illustrative::<f64>();
        let model = SpectralModel::from_overlaps(&[0.0, 0.0, 0.1], &phi, &phi).unwrap();
        let times = Arc::new(sample_times(100.0, 8.0, 4000, 3).unwrap());
        let tensor = exact_signal(&model, times).unwrap();
        let c = QfamesConfig { sigma: 8.0, ..cfg(4000, 100.0) };
        let est = run_qfames(&tensor, &c).unwrap();
        assert_eq!(est.clusters.len(), 2);
        assert_eq!(est.clusters[0].multiplicity, 2);
        assert_eq!(est.clusters[1].multiplicity, 1);
        assert!(est.clusters[0].theta_star.abs() < 2e-3);
        assert!((est.clusters[1].theta_star - 0.1).abs() < 2e-3);
    }

    #[test]
    fn blocking_is_open_and_sound() {
        let values = vec![1.0f64, 0.5, 0.9, 0.2, 0.95, 0.1];
        let land = Landscape {
            theta0: 0.0,
            step: 1.0,
            values,
            cache: None,
        };
        // Radius 2: index 2 (distance 2) stays searchable after picking 0.
        let s = search_and_block(&land, 3, 2.0, 1.0);
        assert_eq!(s.indices, vec![0, 4, 2]);
        for (i, a) in s.thetas.iter().enumerate() {
            for b in &s.thetas[i + 1..] {
                assert!((a - b).abs() >= 2.0);
            }
        }
        let s = search_and_block(&land, 10, 3.0, 1.0);
        assert!(s.exhausted);
    }

    #[test]
    fn ties_pick_lowest_theta() {
        let land = Landscape {
            theta0: -1.0,
            step: 0.5,
            values: vec![0.0, 2.0, 1.0, 2.0],
            cache: None,
        };
        assert_eq!(search_and_block(&land, 1, 0.1, 1.0).indices, vec![1]);
    }

    #[test]
    fn wasserstein_examples() {
        let a = [(0.0, 2), (0.1, 1)];
        assert_eq!(wasserstein1(&a, &a).value, 0.0);
        let b = [(0.001, 2), (0.099, 1)];
        assert!((wasserstein1(&a, &b).value - 0.001).abs() < 1e-15);
        let c = [(0.0, 1)];
        let d = wasserstein1(&a, &c);
        assert!(d.mismatch && d.value.is_infinite());
    }

    #[test]
    fn defaults_follow_heuristics() {
        let d = default_params(0.1, 0.0, 3, 3, 3).unwrap();
        assert!((d.config.tau - 0.3).abs() < 1e-15);
        assert_eq!(d.config.t, 100.0);
        assert!(d.config.alpha >= 5.0);
        assert!(!d.warnings.is_empty());
        assert!(default_params(0.0, 0.0, 1, 1, 1).is_err());
    }

    #[test]
    fn cache_respects_budget() {
        let (_, phi) = build_illustrative::<f64>();
        let model = SpectralModel::from_overlaps(&[0.0, 0.0, 0.1], &phi, &phi).unwrap();
        let times = Arc::new(sample_times(10.0, 1.0, 50, 3).unwrap());
        let tensor = exact_signal(&model, times).unwrap();
        let c = QfamesConfig { q: 0.05, ..cfg(50, 10.0) };
        let small = landscape_with_budget(&tensor, &c, 10).unwrap();
        assert!(small.cache.is_none());
        let big = landscape_with_budget(&tensor, &c, CACHE_BUDGET).unwrap();
        let j = 1234;
        let g = big.cached_matrix(j, 3, 3).unwrap();
        assert!((g - filtered_matrix(&tensor, big.theta(j))).norm() < 1e-10);
    }
}
