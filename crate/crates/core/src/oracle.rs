//! Brute-force ground truth, the single-state baseline, the
//! indistinguishability construction and center error metrics.

use serde::Serialize;

use crate::acquisition::signal::SignalTensor;
use crate::dods::{landscape, search_and_block, Distance, QfamesConfig};
use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::linalg::svd;
use crate::models::spectrum::Spectrum;
use crate::scalar::{cplx, CMat, Real};
use crate::stateprep::overlap_scores;

/// Overlap scores below this fraction of the largest are treated as zero.
const ZERO_SCORE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct TruthCluster {
    /// Midpoint of the member eigenvalues.
    pub center: f64,
    /// Eigenvector indices into the spectrum.
    pub members: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    /// Ascending by center.
    pub clusters: Vec<TruthCluster>,
    /// Smallest distance between neighbouring clusters (infinite for one).
    pub gap: f64,
    /// Largest cluster width.
    pub width: f64,
    pub dominant_set: Vec<usize>,
    pub p_min: f64,
    pub p_tail: f64,
    /// False when no subset satisfies the dominance condition.
    pub valid: bool,
}

impl GroundTruth {
    pub fn centers(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.center).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.multiplicity).collect()
    }

    pub fn atoms(&self) -> Vec<(f64, usize)> {
        self.clusters.iter().map(|c| (c.center, c.multiplicity)).collect()
    }

    /// Total dominant count `K`.
    pub fn k(&self) -> usize {
        self.dominant_set.len()
    }

    /// Expanded dominant eigenvalues, ascending.
    pub fn dominant_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.clusters.iter().flat_map(|c| c.eigenvalues.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Exhaustive dominant-set and cluster computation from overlaps.
///
/// Eigenvectors are ranked by `p_m`; `D` is the shortest prefix with
/// `p_min ≥ C_p p_tail`. For a partial spectrum the weight outside the
/// computed levels is bounded by Cauchy-Schwarz and added to `p_tail`.
pub fn brute_force_dods<T: Real>(
    spectrum: &Spectrum<T>,
    phi: &CMat<T>,
    psi: &CMat<T>,
    c_p: f64,
    gap: f64,
    width: f64,
) -> Result<GroundTruth> {
    if phi.ncols() != spectrum.len() || psi.ncols() != spectrum.len() {
        return Err(mismatch("overlap matrices do not match the spectrum"));
    }
    if !(c_p >= 0.0 && gap > 0.0 && width >= 0.0) {
        return Err(invalid("C_p >= 0, gap > 0 and width >= 0 required"));
    }
    let p: Vec<f64> = overlap_scores(phi, psi)?.iter().map(|x| x.f64()).collect();
    let outside = {
        let a = (phi.nrows() as f64 - phi.norm_squared().f64()).max(0.0);
        let b = (psi.nrows() as f64 - psi.norm_squared().f64()).max(0.0);
        let w = (a * b).sqrt();
        if w < 1e-12 {
            0.0
        } else {
            w
        }
    };
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..p.len()).filter(|&m| p[m] > ZERO_SCORE * pmax).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&m| p[m]).sum::<f64>() + outside;

    let mut chosen = None;
    let mut acc = 0.0;
    for (i, &m) in order.iter().enumerate() {
        acc += p[m];
        let tail = (total - acc).max(0.0);
        let tail = if i + 1 == order.len() { outside } else { tail };
        if p[m] >= c_p * tail {
            chosen = Some((i + 1, p[m], tail));
            break;
        }
    }
    let Some((size, p_min, p_tail)) = chosen else {
        return Ok(GroundTruth {
            clusters: Vec::new(),
            gap: f64::INFINITY,
            width: 0.0,
            dominant_set: Vec::new(),
            p_min: 0.0,
            p_tail: total,
            valid: false,
        });
    };
    let mut dominant: Vec<usize> = order[..size].to_vec();
    dominant.sort_by(|&a, &b| spectrum.eigenvalues[a].partial_cmp(&spectrum.eigenvalues[b]).unwrap().then(a.cmp(&b)));

    let lam = |m: usize| spectrum.eigenvalues[m].f64();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &m in &dominant {
        match groups.last_mut() {
            Some(g) if lam(m) - lam(*g.last().unwrap()) < gap => g.push(m),
            _ => groups.push(vec![m]),
        }
    }
    let clusters: Vec<TruthCluster> = groups
        .into_iter()
        .map(|g| {
            let ev: Vec<f64> = g.iter().map(|&m| lam(m)).collect();
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            TruthCluster {
                center: 0.5 * (lo + hi),
                multiplicity: g.len(),
                members: g,
                eigenvalues: ev,
            }
        })
        .collect();
    let realized_width = clusters
        .iter()
        .map(|c| c.eigenvalues[c.eigenvalues.len() - 1] - c.eigenvalues[0])
        .fold(0.0, f64::max);
    if realized_width > width {
        return Err(invalid(format!(
            "cluster width {realized_width:.3e} exceeds delta = {width:.3e} for gap threshold {gap:.3e}"
        )));
    }
    let realized_gap = clusters
        .windows(2)
        .map(|w| w[1].eigenvalues[0] - w[0].eigenvalues[w[0].eigenvalues.len() - 1])
        .fold(f64::INFINITY, f64::min);
    Ok(GroundTruth {
        clusters,
        gap: realized_gap,
        width: realized_width,
        dominant_set: dominant,
        p_min,
        p_tail,
        valid: true,
    })
}

/// Centers from the single-entry restriction of the pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct QmegsEstimate {
    pub entry: (usize, usize),
    /// Ascending.
    pub centers: Vec<f64>,
    pub exhausted: bool,
}

/// Search-and-block on `|G_{l,r}(θ)|` alone. There is no multiplicity stage.
pub fn qmegs_run<T: Real>(tensor: &SignalTensor<T>, config: &QfamesConfig, entry: (usize, usize)) -> Result<QmegsEstimate> {
    if entry.0 >= tensor.l || entry.1 >= tensor.r {
        return Err(invalid(format!("entry {entry:?} outside a {}x{} tensor", tensor.l, tensor.r)));
    }
    let single = tensor.restrict(entry.0, entry.1)?;
    let land = landscape(&single, config)?;
    let found = search_and_block(&land, config.i_tilde, config.alpha, config.t);
    let mut centers: Vec<f64> = found.thetas.iter().map(|t| t.f64()).collect();
    centers.sort_by(f64::total_cmp);
    Ok(QmegsEstimate {
        entry,
        centers,
        exhausted: found.exhausted,
    })
}

/// Overlap matrices with a lower-multiplicity dominant block that produce
/// the same signal as the input.
#[derive(Debug, Clone)]
pub struct NoGoConstruction<T: Real> {
    /// `L × (k + |rest| + 1)`: rotated dominant block, the untouched columns,
    /// then a zero padding column.
    pub phi: CMat<T>,
    pub psi: CMat<T>,
    /// Alternative multiplicity, the rank of `Φ_{:,D}`.
    pub k: usize,
    /// Original indices of the untouched columns, in order.
    pub rest: Vec<usize>,
}

impl<T: Real> NoGoConstruction<T> {
    /// Eigenvalues matching the columns of the construction; the padding
    /// level is placed at `pad`.
    pub fn alternative_eigenvalues(&self, eigenvalues: &[T], lambda_star: T, pad: T) -> Vec<T> {
        let mut v = vec![lambda_star; self.k];
        v.extend(self.rest.iter().map(|&m| eigenvalues[m]));
        v.push(pad);
        v
    }
}

pub fn nogo_construct<T: Real>(phi: &CMat<T>, psi: &CMat<T>, dominant: &[usize]) -> Result<NoGoConstruction<T>> {
    if phi.ncols() != psi.ncols() {
        return Err(mismatch("Φ and Ψ have different column counts"));
    }
    if dominant.is_empty() || dominant.iter().any(|&m| m >= phi.ncols()) {
        return Err(invalid("dominant set empty or out of range"));
    }
    let d = dominant.len();
    let phi_d = CMat::from_fn(phi.nrows(), d, |i, j| phi[(i, dominant[j])]);
    let psi_d = CMat::from_fn(psi.nrows(), d, |i, j| psi[(i, dominant[j])]);
    let s = svd(&phi_d)?;
    let smax = s.s.first().map_or(T::zero(), |x| *x);
    let tol = smax * T::lit(1e-10);
    let k = s.s.iter().filter(|&&x| x > tol).count();
    if k >= d {
        return Err(QfamesError::Refused(format!(
            "Φ restricted to the dominant set has full rank {k}; no lower-multiplicity instance exists"
        )));
    }
    let vk = s.v.columns(0, k).into_owned();
    let a = &phi_d * &vk;
    let b = &psi_d * &vk;
    let rest: Vec<usize> = (0..phi.ncols()).filter(|m| !dominant.contains(m)).collect();
    let cols = k + rest.len() + 1;
    let mut pt = CMat::zeros(phi.nrows(), cols);
    let mut qt = CMat::zeros(psi.nrows(), cols);
    pt.columns_mut(0, k).copy_from(&a);
    qt.columns_mut(0, k).copy_from(&b);
    for (j, &m) in rest.iter().enumerate() {
        pt.column_mut(k + j).copy_from(&phi.column(m));
        qt.column_mut(k + j).copy_from(&psi.column(m));
    }
    for i in 0..qt.nrows() {
        let w = qt.row(i).norm_squared();
        let target = psi.row(i).norm_squared();
        let pad = (target - w).max(T::zero()).sqrt();
        qt[(i, cols - 1)] = cplx(pad, T::zero());
    }
    Ok(NoGoConstruction {
        phi: pt,
        psi: qt,
        k,
        rest,
    })
}

/// `max_i |θ*_i - λ*_i|` after sorted matching; a count mismatch gives an
/// infinite distance with the flag set.
pub fn error_metric(estimated: &[f64], truth: &[f64]) -> Distance {
    if estimated.len() != truth.len() || estimated.is_empty() {
        return Distance {
            value: f64::INFINITY,
            mismatch: true,
        };
    }
    let mut a = estimated.to_vec();
    let mut b = truth.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let value = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Distance { value, mismatch: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::signal::SpectralModel;
    use crate::models::builders::build_illustrative;
    use crate::models::spectrum::{eigendecompose, EigenMode};
    use crate::scalar::C;
    use crate::stateprep::{overlap_matrices, states_from_overlaps};

    #[test]
    fn illustrative_truth() {
        let (h, phi) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let st = states_from_overlaps(&s, &phi).unwrap();
        let (p, q) = overlap_matrices(&s, &st, &st).unwrap();
        let gt = brute_force_dods(&s, &p, &q, 10.0, 0.05, 1e-8).unwrap();
        assert!(gt.valid);
        assert_eq!(gt.k(), 3);
        assert_eq!(gt.multiplicities(), vec![2, 1]);
        assert!(gt.centers()[0].abs() < 1e-12 && (gt.centers()[1] - 0.1).abs() < 1e-12);
        assert_eq!(gt.p_tail, 0.0);
        assert!((gt.gap - 0.1).abs() < 1e-12);
        // Width violation.
        assert!(brute_force_dods(&s, &p, &q, 10.0, 0.5, 0.01).is_err());
    }

    #[test]
    fn zero_overlap_excluded() {
        let s = Spectrum::from_parts(vec![0.0, 0.5, 1.0], CMat::identity(3, 3), 1.0).unwrap();
        let phi = CMat::from_row_slice(1, 3, &[C::new(0.8, 0.0), C::new(0.6, 0.0), C::new(0.0, 0.0)]);
        let gt = brute_force_dods(&s, &phi, &phi, 0.0, 0.1, 0.0).unwrap();
        assert!(!gt.dominant_set.contains(&2));
    }

    #[test]
    fn no_valid_set_flagged() {
        let s = Spectrum::from_parts(vec![0.0, 0.5], CMat::identity(2, 2), 1.0).unwrap();
        let h = C::new(0.5f64.sqrt(), 0.0);
        let phi = CMat::from_row_slice(1, 2, &[h, h]);
        // With C_p = 10 only the full set qualifies.
        let gt = brute_force_dods(&s, &phi, &phi, 10.0, 0.1, 0.0).unwrap();
        assert!(gt.valid && gt.k() == 2);
        // Partial spectrum: half of the weight is unaccounted for.
        let s1 = Spectrum::from_parts(vec![0.0], CMat::from_column_slice(2, 1, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]), 1.0).unwrap();
        let phi1 = CMat::from_row_slice(1, 1, &[h]);
        let gt = brute_force_dods(&s1, &phi1, &phi1, 10.0, 0.1, 0.0).unwrap();
        assert!(!gt.valid);
    }

    #[test]
    fn nogo_by_hand() {
        let a = C::new(0.5f64.sqrt(), 0.0);
        let phi = CMat::from_row_slice(1, 2, &[a, a]);
        let c = nogo_construct(&phi, &phi, &[0, 1]).unwrap();
        assert_eq!(c.k, 1);
        let lhs = c.phi.columns(0, 1) * c.psi.columns(0, 1).adjoint();
        assert!((lhs - &phi * phi.adjoint()).norm() < 1e-14);
        assert!((c.phi.row(0).norm() - 1.0).abs() < 1e-12);
        assert!((c.psi.row(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nogo_signal_identity() {
        let phi = CMat::from_row_slice(2, 3, &[
            C::new(0.6, 0.0), C::new(0.0, 0.6), C::new(0.529150262212918, 0.0),
            C::new(0.3, 0.1), C::new(-0.1, 0.3), C::new(0.0, 0.8944271909999159),
        ]);
        let psi = phi.map(|z| z * C::new(0.0, 1.0));
        let eig = [0.2, 0.2, -0.4];
        let c = nogo_construct(&phi, &psi, &[0, 1]).unwrap();
        assert_eq!(c.k, 1);
        let alt = c.alternative_eigenvalues(&eig, 0.2, 1.3);
        let m0 = SpectralModel::from_overlaps(&eig, &phi, &psi).unwrap();
        let m1 = SpectralModel::from_overlaps(&alt, &c.phi, &c.psi).unwrap();
        for i in 0..50 {
            let t = -20.0 + 0.8 * i as f64;
            for l in 0..2 {
                for r in 0..2 {
                    assert!((m0.eval(l, r, t) - m1.eval(l, r, t)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn nogo_refuses_full_rank() {
        let (_, phi) = build_illustrative::<f64>();
        assert!(matches!(nogo_construct(&phi, &phi, &[0, 1]), Err(QfamesError::Refused(_))));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(error_metric(&[0.0, 0.1], &[0.0, 0.1]).value, 0.0);
        assert!((error_metric(&[0.099, 0.001], &[0.0, 0.1]).value - 0.001).abs() < 1e-15);
        assert!(error_metric(&[0.0], &[0.0, 0.1]).mismatch);
    }
}
