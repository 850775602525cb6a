//! The three model families: a 3-level toy, the transverse-field Ising chain
//! and the toric code.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, QfamesError, Result};
use crate::models::hamiltonian::{PauliSumHamiltonian, PauliTerm};
use crate::models::pauli::{Pauli, PauliString};
use crate::scalar::{czero, CMat, Real, C};

/// Largest toric lattice accepted, in qubits.
pub const TORIC_MAX_QUBITS: usize = 20;

/// `H = diag(0, 0, 0.1)` and its three-state overlap matrix.
pub fn build_illustrative<T: Real>() -> (PauliSumHamiltonian<T>, CMat<T>) {
    let mut h = CMat::zeros(3, 3);
    h[(2, 2)] = C::new(T::lit(0.1), T::zero());
    let s = T::one() / T::lit(3.0).sqrt();
    let signs = [[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]];
    let phi = CMat::from_fn(3, 3, |i, j| C::new(s * T::lit(signs[i][j]), T::zero()));
    (
        PauliSumHamiltonian::from_dense(h).expect("diagonal matrix is Hermitian"),
        phi,
    )
}

/// Open chain `H = -Σ Z_i Z_{i+1} - g Σ X_i`.
pub fn build_tfim<T: Real>(l: usize, g: f64) -> Result<PauliSumHamiltonian<T>> {
    if l == 0 {
        return Err(invalid("TFIM needs at least one site"));
    }
    if !g.is_finite() {
        return Err(QfamesError::NonFinite("TFIM coupling g".into()));
    }
    let mut terms = Vec::with_capacity(2 * l - 1);
    for i in 0..l.saturating_sub(1) {
        terms.push(PauliTerm {
            coefficient: -T::one(),
            string: PauliString::from_sparse(l, &[(i, Pauli::Z), (i + 1, Pauli::Z)])?,
        });
    }
    for i in 0..l {
        terms.push(PauliTerm {
            coefficient: T::lit(-g),
            string: PauliString::from_sparse(l, &[(i, Pauli::X)])?,
        });
    }
    PauliSumHamiltonian::from_terms(l, terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Cylinder,
}

/// Edge layout of a toric code lattice.
///
/// Rows are always periodic. On the torus columns wrap as well; on the
/// cylinder there are `cols + 1` vertex columns and open left/right edges.
#[derive(Debug, Clone)]
pub struct ToricLattice {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub vertices: Vec<Vec<usize>>,
    pub plaquettes: Vec<Vec<usize>>,
    pub n_qubits: usize,
}

impl ToricLattice {
    pub fn new(rows: usize, cols: usize, boundary: Boundary) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(QfamesError::UnsupportedSize(format!(
                "toric lattice {rows}x{cols}: rows and cols must both be at least 2"
            )));
        }
        let vcols = match boundary {
            Boundary::Torus => cols,
            Boundary::Cylinder => cols + 1,
        };
        let hcols = cols;
        let n_qubits = rows * vcols + rows * hcols;
        if n_qubits > TORIC_MAX_QUBITS {
            return Err(QfamesError::UnsupportedSize(format!(
                "toric lattice {rows}x{cols} ({boundary:?}) needs {n_qubits} qubits; at most {TORIC_MAX_QUBITS} are supported"
            )));
        }
        // Vertical edge (r, c) joins (r, c) and (r + 1, c); horizontal edge
        // (r, c) joins (r, c) and (r, c + 1).
        let v_edge = |r: usize, c: usize| (r % rows) * vcols + c;
        let h_edge = |r: usize, c: usize| rows * vcols + (r % rows) * hcols + (c % cols);

        let mut vertices = Vec::new();
        for r in 0..rows {
            for c in 0..vcols {
                let mut e = vec![v_edge(r, c), v_edge(r + rows - 1, c)];
                match boundary {
                    Boundary::Torus => {
                        e.push(h_edge(r, c));
                        e.push(h_edge(r, c + cols - 1));
                    }
                    Boundary::Cylinder => {
                        if c < cols {
                            e.push(h_edge(r, c));
                        }
                        if c > 0 {
                            e.push(h_edge(r, c - 1));
                        }
                    }
                }
                vertices.push(e);
            }
        }
        let mut plaquettes = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let right = match boundary {
                    Boundary::Torus => (c + 1) % cols,
                    Boundary::Cylinder => c + 1,
                };
                plaquettes.push(vec![h_edge(r, c), h_edge(r + 1, c), v_edge(r, c), v_edge(r, right)]);
            }
        }
        Ok(Self {
            rows,
            cols,
            boundary,
            vertices,
            plaquettes,
            n_qubits,
        })
    }

    /// Vertex operators `∏X` followed by plaquette operators `∏Z`.
    pub fn stabilizers(&self) -> Result<Vec<PauliString>> {
        let mut out = Vec::new();
        for v in &self.vertices {
            let ops: Vec<_> = v.iter().map(|&q| (q, Pauli::X)).collect();
            out.push(PauliString::from_sparse(self.n_qubits, &ops)?);
        }
        for p in &self.plaquettes {
            let ops: Vec<_> = p.iter().map(|&q| (q, Pauli::Z)).collect();
            out.push(PauliString::from_sparse(self.n_qubits, &ops)?);
        }
        Ok(out)
    }
}

/// `H = -Σ_v A_v - Σ_p B_p`.
pub fn build_toric<T: Real>(rows: usize, cols: usize, boundary: Boundary) -> Result<PauliSumHamiltonian<T>> {
    let lattice = ToricLattice::new(rows, cols, boundary)?;
    let terms = lattice
        .stabilizers()?
        .into_iter()
        .map(|string| PauliTerm {
            coefficient: -T::one(),
            string,
        })
        .collect();
    PauliSumHamiltonian::from_terms(lattice.n_qubits, terms)
}

/// Rank over GF(2) of a set of Pauli strings in the symplectic representation.
pub fn gf2_rank(strings: &[PauliString]) -> usize {
    let mut rows: Vec<u128> = strings
        .iter()
        .map(|p| (p.x_mask() as u128) | ((p.z_mask() as u128) << 64))
        .collect();
    let mut rank = 0;
    for bit in 0..128 {
        let mask = 1u128 << bit;
        if let Some(pivot) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) {
            rows.swap(rank, pivot);
            let p = rows[rank];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != rank && *r & mask != 0 {
                    *r ^= p;
                }
            }
            rank += 1;
        }
    }
    rank
}

/// `(1/2L) Σ_i Z_i` on an `l`-site chain, as a diagonal matrix.
pub fn magnetization_diagonal<T: Real>(l: usize) -> Vec<C<T>> {
    let dim = 1usize << l;
    (0..dim)
        .map(|b| {
            let ups = l as f64 - 2.0 * (b.count_ones() as f64);
            C::new(T::lit(ups / (2.0 * l as f64)), T::zero())
        })
        .collect()
}

/// Dense form of a diagonal.
pub fn diagonal_matrix<T: Real>(d: &[C<T>]) -> CMat<T> {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { d[i] } else { czero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigh;

    #[test]
    fn illustrative_shapes() {
        let (h, phi) = build_illustrative::<f64>();
        assert_eq!(h.dimension(), 3);
        for i in 0..3 {
            assert!((phi.row(i).norm() - 1.0).abs() < 1e-15);
        }
        let z0 = &phi * phi.adjoint();
        let expect = [[3.0, 1.0, 1.0], [1.0, 3.0, -1.0], [1.0, -1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((z0[(i, j)].re - expect[i][j] / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tfim_small_limits() {
        let h = build_tfim::<f64>(1, 1.0).unwrap();
        let (v, _) = hermitian_eigh(&h.to_dense(2).unwrap());
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
        let h = build_tfim::<f64>(2, 0.0).unwrap();
        let (v, _) = hermitian_eigh(&h.to_dense(4).unwrap());
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(build_tfim::<f64>(0, 1.0).is_err());
        assert_eq!(build_tfim::<f64>(10, 1.0).unwrap().terms().len(), 19);
    }

    #[test]
    fn toric_counts() {
        let t = ToricLattice::new(2, 4, Boundary::Torus).unwrap();
        assert_eq!(t.n_qubits, 16);
        let s = t.stabilizers().unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(t.n_qubits - gf2_rank(&s), 2);

        let c = ToricLattice::new(2, 4, Boundary::Cylinder).unwrap();
        assert_eq!(c.n_qubits, 18);
        let s = c.stabilizers().unwrap();
        assert_eq!(c.n_qubits - gf2_rank(&s), 1);
    }

    #[test]
    fn toric_terms_commute_exhaustively() {
        for b in [Boundary::Torus, Boundary::Cylinder] {
            let s = ToricLattice::new(2, 4, b).unwrap().stabilizers().unwrap();
            for x in &s {
                for y in &s {
                    assert!(x.commutes_with(y));
                }
            }
            assert!(build_toric::<f64>(2, 4, b).unwrap().all_commuting());
        }
    }

    #[test]
    fn toric_rejects_bad_sizes() {
        assert!(matches!(
            build_toric::<f64>(1, 4, Boundary::Torus),
            Err(QfamesError::UnsupportedSize(_))
        ));
        assert!(matches!(
            build_toric::<f64>(4, 4, Boundary::Torus),
            Err(QfamesError::UnsupportedSize(_))
        ));
    }

    #[test]
    fn every_edge_in_two_vertices_on_torus() {
        let t = ToricLattice::new(2, 4, Boundary::Torus).unwrap();
        let mut count = vec![0; t.n_qubits];
        for v in &t.vertices {
            assert_eq!(v.len(), 4);
            for &e in v {
                count[e] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 2));
    }
}
