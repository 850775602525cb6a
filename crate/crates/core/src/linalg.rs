//! Dense and Krylov linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QfamesError, Result};
use crate::scalar::{cabs, czero, CMat, CVec, Real, C};

/// Hermitian operator acting on dense statevectors.
pub trait LinearOp<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[C<T>], y: &mut [C<T>]);

    /// Cheap upper bound on the spectral norm.
    fn norm_bound(&self) -> T;
}

impl<T: Real> LinearOp<T> for CMat<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = czero();
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }

    fn norm_bound(&self) -> T {
        row_sum_bound(self)
    }
}

/// Maximum absolute row sum, an upper bound on the spectral radius.
pub fn row_sum_bound<T: Real>(m: &CMat<T>) -> T {
    (0..m.nrows())
        .map(|i| m.row(i).iter().fold(T::zero(), |acc, z| acc + cabs(z)))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

pub fn is_hermitian<T: Real>(m: &CMat<T>, tol: T) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| cabs(z) <= tol)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Real symmetric inputs take the (much cheaper) real path.
pub fn hermitian_eigh<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let real = m.iter().all(|z| z.im == T::zero());
    let (vals, vecs): (Vec<T>, CMat<T>) = if real {
        let r = DMatrix::from_fn(n, n, |i, j| m[(i, j)].re);
        let eig = SymmetricEigen::new(r);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| C::new(x, T::zero())),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = CMat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    (sorted_vals, sorted_vecs)
}

/// Thin SVD `A = U diag(s) V†` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    pub u: CMat<T>,
    pub s: Vec<T>,
    pub v: CMat<T>,
}

pub fn svd<T: Real>(a: &CMat<T>) -> Result<Svd<T>> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QfamesError::NonFinite("matrix passed to SVD".into()));
    }
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMat::zeros(rows, 0),
            s: Vec::new(),
            v: CMat::zeros(cols, 0),
        });
    }
    let dec = a.clone().svd(true, true);
    let u = dec.u.ok_or_else(|| QfamesError::Numerical("SVD did not return U".into()))?;
    let v_t = dec
        .v_t
        .ok_or_else(|| QfamesError::Numerical("SVD did not return V".into()))?;
    let vals: Vec<T> = dec.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| vals[y].partial_cmp(&vals[x]).unwrap_or(std::cmp::Ordering::Equal));
    let u_sorted = CMat::from_fn(rows, k, |i, j| u[(i, order[j])]);
    let v_sorted = CMat::from_fn(cols, k, |i, j| v_t[(order[j], i)].conj());
    Ok(Svd {
        u: u_sorted,
        s: order.iter().map(|&i| vals[i]).collect(),
        v: v_sorted,
    })
}

/// Eigenvalues of a general (non-Hermitian) complex square matrix.
pub fn eigenvalues_general<T: Real>(a: &CMat<T>) -> Result<Vec<C<T>>> {
    if !a.is_square() {
        return Err(QfamesError::DimensionMismatch("eigenvalues of non-square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QfamesError::NonFinite("matrix passed to eigensolver".into()));
    }
    let n = a.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[(0, 0)]]),
        _ => {}
    }
    let schur = nalgebra::Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| QfamesError::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    // Complex Schur form is upper triangular.
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

pub fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm<T: Real>(a: &[C<T>]) -> T {
    a.iter()
        .fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im)
        .sqrt()
}

/// `y -= alpha x`.
fn axpy_sub<T: Real>(alpha: C<T>, x: &[C<T>], y: &mut [C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

/// Normalized complex Gaussian vector.
pub fn random_unit_vector<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> CVec<T> {
    let v = CVec::from_fn(dim, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C::new(T::lit(a), T::lit(b))
    });
    let n = v.norm();
    v / C::new(n, T::zero())
}

/// Lanczos recurrence with full reorthogonalization, optionally deflated
/// against a set of locked orthonormal vectors.
pub struct Lanczos<'a, T: Real> {
    pub basis: Vec<CVec<T>>,
    pub alpha: Vec<T>,
    /// `beta[j]` couples basis vectors `j` and `j + 1`.
    pub beta: Vec<T>,
    pub invariant: bool,
    locked: &'a [CVec<T>],
    pending: Option<CVec<T>>,
    breakdown: T,
}

impl<'a, T: Real> Lanczos<'a, T> {
    /// `start` must be normalized and orthogonal to `locked`.
    pub fn new(start: CVec<T>, locked: &'a [CVec<T>], breakdown: T) -> Self {
        Self {
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            invariant: false,
            locked,
            pending: Some(start),
            breakdown,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Adds one basis vector. Returns false once the space is invariant.
    pub fn step(&mut self, op: &dyn LinearOp<T>) -> bool {
        let Some(v) = self.pending.take() else {
            return false;
        };
        let mut w = CVec::zeros(v.len());
        op.apply(v.as_slice(), w.as_mut_slice());
        let a = dot(v.as_slice(), w.as_slice()).re;
        axpy_sub(C::new(a, T::zero()), v.as_slice(), w.as_mut_slice());
        if let (Some(prev), Some(&b)) = (self.basis.last(), self.beta.last()) {
            axpy_sub(C::new(b, T::zero()), prev.as_slice(), w.as_mut_slice());
        }
        self.alpha.push(a);
        self.basis.push(v);
        // Second Gram-Schmidt pass only when the first one cancelled a lot.
        let mut b = norm(w.as_slice());
        for _ in 0..2 {
            for q in self.locked.iter().chain(self.basis.iter()) {
                let c = dot(q.as_slice(), w.as_slice());
                axpy_sub(c, q.as_slice(), w.as_mut_slice());
            }
            let after = norm(w.as_slice());
            let enough = after > T::lit(0.7) * b;
            b = after;
            if enough {
                break;
            }
        }
        let scale = op.norm_bound().max(T::one());
        if b <= self.breakdown * scale || self.basis.len() + self.locked.len() >= op.dim() {
            self.invariant = true;
            self.beta.push(b);
            return false;
        }
        self.beta.push(b);
        self.pending = Some(w / C::new(b, T::zero()));
        true
    }

    /// Eigendecomposition of the current tridiagonal projection.
    pub fn ritz(&self) -> (Vec<T>, DMatrix<T>) {
        tridiag_eigh(&self.alpha, &self.beta[..self.alpha.len().saturating_sub(1)])
    }

    /// Residual coupling of the last basis vector to the rest of the space.
    pub fn residual_beta(&self) -> T {
        if self.invariant {
            T::zero()
        } else {
            self.beta.last().copied().unwrap_or(T::zero())
        }
    }

    /// `Σ_k coeff_k · basis_k`.
    pub fn combine(&self, coeffs: &[C<T>]) -> CVec<T> {
        let dim = self.basis[0].len();
        let mut out = CVec::zeros(dim);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.axpy(*c, b, C::new(T::one(), T::zero()));
        }
        out
    }
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta` (ascending eigenvalues).
pub fn tridiag_eigh<T: Real>(alpha: &[T], beta: &[T]) -> (Vec<T>, DMatrix<T>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            T::zero()
        }
    });
    let eig = SymmetricEigen::new(t);
    let vals: Vec<T> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vecs = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    (order.iter().map(|&i| vals[i]).collect(), vecs)
}

/// Lowest `k` eigenpairs of a Hermitian operator by deflated, thick-restarted
/// Lanczos. Degenerate levels are resolved one vector at a time.
pub fn lowest_eigenpairs<T: Real>(
    op: &dyn LinearOp<T>,
    k: usize,
    tol: T,
    max_subspace: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<CVec<T>>)> {
    let dim = op.dim();
    if k > dim {
        return Err(QfamesError::InvalidArgument(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = op.norm_bound().max(T::one());
    let mut locked: Vec<CVec<T>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let max_restarts = 200;
    while locked.len() < k {
        let mut start = orthogonalized(random_unit_vector(dim, &mut rng), &locked)
            .ok_or_else(|| QfamesError::Numerical("could not draw a deflated start vector".into()))?;
        let mut converged = None;
        for _ in 0..max_restarts {
            let mut lz = Lanczos::new(start.clone(), &locked, T::lit(1e-13));
            let cap = max_subspace.min(dim - locked.len());
            let mut best = None;
            while lz.len() < cap {
                let more = lz.step(op);
                if lz.len().is_multiple_of(8) || !more || lz.len() == cap {
                    let (vals, vecs) = lz.ritz();
                    let last = vecs[(lz.len() - 1, 0)].abs();
                    let res = lz.residual_beta() * last;
                    best = Some((vals[0], vecs.column(0).into_owned(), res));
                    if res <= tol * scale {
                        break;
                    }
                }
                if !more {
                    break;
                }
            }
            let (val, y, res) = best.expect("at least one Lanczos step");
            let coeffs: Vec<C<T>> = y.iter().map(|&x| C::new(x, T::zero())).collect();
            let x = lz.combine(&coeffs);
            let x = orthogonalized(x, &locked)
                .ok_or_else(|| QfamesError::Numerical("Ritz vector collapsed under deflation".into()))?;
            if res <= tol * scale {
                converged = Some((val, x));
                break;
            }
            start = x;
        }
        let (_, x) = converged.ok_or_else(|| {
            QfamesError::Numerical(format!("Lanczos failed to converge eigenpair {}", locked.len()))
        })?;
        let mut hx = CVec::zeros(dim);
        op.apply(x.as_slice(), hx.as_mut_slice());
        values.push(dot(x.as_slice(), hx.as_slice()).re);
        locked.push(x);
    }
    // Sort in case deflation surfaced a level out of order.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| locked[i].clone()).collect(),
    ))
}

/// Projects out `against` (twice) and normalizes; `None` if nothing is left.
pub fn orthogonalized<T: Real>(mut v: CVec<T>, against: &[CVec<T>]) -> Option<CVec<T>> {
    for _ in 0..2 {
        for q in against {
            let c = dot(q.as_slice(), v.as_slice());
            axpy_sub(c, q.as_slice(), v.as_mut_slice());
        }
    }
    let n = v.norm();
    if n <= T::lit(1e-12) {
        None
    } else {
        Some(v / C::new(n, T::zero()))
    }
}

/// Columns of a dense matrix as vectors.
pub fn columns<T: Real>(m: &CMat<T>) -> Vec<CVec<T>> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub fn from_columns<T: Real>(cols: &[CVec<T>]) -> CMat<T> {
    let rows = cols.first().map_or(0, |c| c.len());
    CMat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn real_vec<T: Real>(v: &DVector<T>) -> CVec<T> {
    v.map(|x| C::new(x, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn general_eigenvalues_of_triangular_and_rotation() {
        let a = CMat::<f64>::from_row_slice(
            2,
            2,
            &[C::new(1.0, 0.0), C::new(2.0, 1.0), C::new(0.0, 0.0), C::new(-3.0, 0.5)],
        );
        let mut ev = eigenvalues_general(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert_relative_eq!(ev[0].re, -3.0, epsilon = 1e-12);
        assert_relative_eq!(ev[0].im, 0.5, epsilon = 1e-12);
        assert_relative_eq!(ev[1].re, 1.0, epsilon = 1e-12);

        // Rotation generator has eigenvalues ±i.
        let r = CMat::<f64>::from_row_slice(
            2,
            2,
            &[C::new(0.0, 0.0), C::new(-1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)],
        );
        let mut ev = eigenvalues_general(&r).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert_relative_eq!(ev[0].im, -1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn general_eigenvalues_similarity() {
        let d = [0.7, -0.2, 0.3];
        let p = CMat::<f64>::from_fn(3, 3, |i, j| {
            let d = if i == j { 2.0 } else { 0.0 };
            C::new(d + ((i * 7 + j * 3) % 5) as f64 * 0.2, (i as f64 - j as f64) * 0.3)
        });
        let pinv = p.clone().try_inverse().unwrap();
        let diag = CMat::from_fn(3, 3, |i, j| if i == j { C::new(d[i], 0.0) } else { C::new(0.0, 0.0) });
        let a = &p * diag * pinv;
        let mut ev: Vec<f64> = eigenvalues_general(&a).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_relative_eq!(ev[0], -0.2, epsilon = 1e-10);
        assert_relative_eq!(ev[1], 0.3, epsilon = 1e-10);
        assert_relative_eq!(ev[2], 0.7, epsilon = 1e-10);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let a = CMat::<f64>::from_fn(4, 3, |i, j| C::new((i * 3 + j) as f64 % 5.0 - 2.0, (i as f64) * 0.1 - j as f64 * 0.3));
        let s = svd(&a).unwrap();
        assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
        let sig = CMat::from_fn(3, 3, |i, j| if i == j { C::new(s.s[i], 0.0) } else { C::new(0.0, 0.0) });
        let back = &s.u * sig * s.v.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn hermitian_eigh_sorted_complex() {
        let h = CMat::<f64>::from_row_slice(
            2,
            2,
            &[C::new(1.0, 0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), C::new(1.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigh(&h);
        assert_relative_eq!(vals[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 2.0, epsilon = 1e-12);
        let resid = &h * vecs.column(1) - vecs.column(1) * C::new(2.0, 0.0);
        assert!(resid.norm() < 1e-12);
    }

    #[test]
    fn lanczos_lowest_resolves_degenerate_pair() {
        let diag = [0.0, 0.0, 0.5, 1.0, 1.5, 2.0];
        let mut h = CMat::<f64>::zeros(6, 6);
        for (i, d) in diag.iter().enumerate() {
            h[(i, i)] = C::new(*d, 0.0);
        }
        // Random unitary rotation keeps the spectrum.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<CVec<f64>> = (0..6).map(|_| random_unit_vector(6, &mut rng)).collect();
        let q = nalgebra::linalg::QR::new(from_columns(&cols)).q();
        let h = &q * h * q.adjoint();
        let (vals, vecs) = lowest_eigenpairs(&h, 3, 1e-12, 6, 11).unwrap();
        assert_relative_eq!(vals[0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(vals[1], 0.0, epsilon = 1e-10);
        assert_relative_eq!(vals[2], 0.5, epsilon = 1e-10);
        assert!(dot(vecs[0].as_slice(), vecs[1].as_slice()).norm() < 1e-10);
    }
}
