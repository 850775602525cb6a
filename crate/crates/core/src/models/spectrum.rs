//! Exact eigendecomposition, the ground-truth oracle.

use crate::error::{QfamesError, Result};
use crate::linalg::{from_columns, hermitian_eigh, lowest_eigenpairs};
use crate::models::hamiltonian::PauliSumHamiltonian;
use crate::scalar::{CMat, Real};

/// Largest dimension diagonalized densely.
pub const DENSE_LIMIT: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    /// Full dense diagonalization.
    Dense,
    /// Lowest `k` levels by deflated Lanczos.
    Lowest { k: usize },
}

/// Eigenpairs in ascending order. Columns of `eigenvectors` are `|E_m⟩`.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMat<T>,
    pub norm_scale: T,
    /// False when only the lowest levels were computed.
    pub complete: bool,
}

impl<T: Real> Spectrum<T> {
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in physical units.
    pub fn physical(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|&e| e / self.norm_scale).collect()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMat<T> {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// Spectrum given directly by eigenvalues and an orthonormal basis.
    pub fn from_parts(eigenvalues: Vec<T>, eigenvectors: CMat<T>, norm_scale: T) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(QfamesError::DimensionMismatch("eigenvalue count vs eigenvector columns".into()));
        }
        let complete = eigenvectors.ncols() == eigenvectors.nrows();
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eigenvalues[a]
                .partial_cmp(&eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let n = eigenvectors.nrows();
        Ok(Self {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            eigenvectors: CMat::from_fn(n, order.len(), |i, j| eigenvectors[(i, order[j])]),
            norm_scale,
            complete,
        })
    }
}

pub fn eigendecompose<T: Real>(h: &PauliSumHamiltonian<T>, mode: EigenMode) -> Result<Spectrum<T>> {
    let dim = h.dimension();
    match mode {
        EigenMode::Dense => {
            if dim > DENSE_LIMIT {
                return Err(QfamesError::TooLarge {
                    dim,
                    limit: DENSE_LIMIT,
                    mode: "dense diagonalization",
                });
            }
            let m = h.to_dense(DENSE_LIMIT)?;
            let (vals, vecs) = hermitian_eigh(&m);
            Ok(Spectrum {
                eigenvalues: vals,
                eigenvectors: vecs,
                norm_scale: h.norm_scale(),
                complete: true,
            })
        }
        EigenMode::Lowest { k } => {
            let (vals, vecs) = lowest_eigenpairs(h, k, T::lit(1e-10), 60, 0x5eed)?;
            Ok(Spectrum {
                eigenvalues: vals,
                eigenvectors: from_columns(&vecs),
                norm_scale: h.norm_scale(),
                complete: k == dim,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builders::{build_illustrative, build_tfim};

    #[test]
    fn illustrative_is_diagonal() {
        let (h, _) = build_illustrative::<f64>();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 0.0, 0.1]);
        let id = CMat::<f64>::identity(3, 3);
        let p = s.eigenvectors.map(|z| crate::scalar::C::new(z.norm(), 0.0));
        // Up to ordering within the degenerate pair the basis is canonical.
        assert!((p.column(2) - id.column(2)).norm() < 1e-14);
    }

    #[test]
    fn round_trip_and_orthonormality() {
        let h = build_tfim::<f64>(6, 0.7).unwrap();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        let m = h.to_dense(64).unwrap();
        assert!((s.reconstruct() - &m).norm() < 1e-9);
        let g = s.eigenvectors.adjoint() * &s.eigenvectors;
        assert!((g - CMat::identity(64, 64)).norm() < 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_hamiltonian() {
        let h = PauliSumHamiltonian::<f64>::from_terms(2, Vec::new()).unwrap();
        let s = eigendecompose(&h, EigenMode::Dense).unwrap();
        assert!(s.eigenvalues.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lowest_agrees_with_dense() {
        let h = build_tfim::<f64>(7, 0.6).unwrap();
        let full = eigendecompose(&h, EigenMode::Dense).unwrap();
        let low = eigendecompose(&h, EigenMode::Lowest { k: 3 }).unwrap();
        assert!(!low.complete);
        for i in 0..3 {
            assert!((full.eigenvalues[i] - low.eigenvalues[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn too_large_for_dense() {
        let h = build_tfim::<f64>(14, 1.0).unwrap();
        assert!(matches!(
            eigendecompose(&h, EigenMode::Dense),
            Err(QfamesError::TooLarge { .. })
        ));
    }
}
