//! Hermitian operators written as weighted Pauli sums or explicit matrices.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, QfamesError, Result};
use crate::linalg::{is_hermitian, row_sum_bound, LinearOp};
use crate::models::pauli::PauliString;
use crate::scalar::{czero, CMat, Real, C};

/// Largest statevector dimension any backend will allocate.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone)]
pub struct PauliTerm<T: Real> {
    pub coefficient: T,
    pub string: PauliString,
}

#[derive(Debug, Clone)]
pub struct PauliSumHamiltonian<T: Real> {
    n_qubits: usize,
    terms: Vec<PauliTerm<T>>,
    all_commuting: bool,
    norm_scale: T,
    dense: Option<CMat<T>>,
    /// Sum of the pure-Z terms, built on first use.
    diagonal: OnceLock<Vec<T>>,
}

/// What `normalize_spectrum` did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization<T> {
    Unchanged,
    Scaled(T),
    /// Zero operator; left as is.
    ZeroHamiltonian,
}

impl<T: Real> PauliSumHamiltonian<T> {
    pub fn from_terms(n_qubits: usize, terms: Vec<PauliTerm<T>>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(invalid("Hamiltonian needs at least one qubit"));
        }
        if n_qubits > MAX_QUBITS {
            return Err(QfamesError::TooLarge {
                dim: 1 << n_qubits.min(63),
                limit: 1 << MAX_QUBITS,
                mode: "statevector simulation",
            });
        }
        for t in &terms {
            if t.string.n_qubits() != n_qubits {
                return Err(mismatch(format!(
                    "term {} acts on {} qubits, Hamiltonian has {n_qubits}",
                    t.string,
                    t.string.n_qubits()
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(QfamesError::NonFinite(format!("coefficient of {}", t.string)));
            }
        }
        let all_commuting = terms
            .iter()
            .enumerate()
            .all(|(i, a)| terms[i + 1..].iter().all(|b| a.string.commutes_with(&b.string)));
        Ok(Self {
            n_qubits,
            terms,
            all_commuting,
            norm_scale: T::one(),
            dense: None,
            diagonal: OnceLock::new(),
        })
    }

    /// Convenience constructor from `(coefficient, "XZI...")` pairs.
    pub fn from_strings(n_qubits: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|(c, s)| {
                Ok(PauliTerm {
                    coefficient: T::lit(*c),
                    string: PauliString::parse(s)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_qubits, terms)
    }

    /// Operator given only as an explicit Hermitian matrix of any dimension.
    pub fn from_dense(m: CMat<T>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(mismatch("dense Hamiltonian must be square and nonempty"));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QfamesError::NonFinite("dense Hamiltonian entry".into()));
        }
        let scale = row_sum_bound(&m).max(T::one());
        if !is_hermitian(&m, T::lit(1e-12) * scale) {
            return Err(invalid("dense Hamiltonian is not Hermitian"));
        }
        let n_qubits = (m.nrows() as f64).log2().ceil().max(1.0) as usize;
        Ok(Self {
            n_qubits,
            terms: Vec::new(),
            all_commuting: false,
            norm_scale: T::one(),
            dense: Some(m),
            diagonal: OnceLock::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm<T>] {
        &self.terms
    }

    pub fn all_commuting(&self) -> bool {
        self.all_commuting
    }

    pub fn norm_scale(&self) -> T {
        self.norm_scale
    }

    pub fn dense_matrix(&self) -> Option<&CMat<T>> {
        self.dense.as_ref()
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Hilbert space dimension.
    pub fn dimension(&self) -> usize {
        match &self.dense {
            Some(m) => m.nrows(),
            None => 1 << self.n_qubits,
        }
    }

    /// `Σ|c_j|` for Pauli sums, maximum absolute row sum for dense operators.
    pub fn spectral_bound(&self) -> T {
        match &self.dense {
            Some(m) => row_sum_bound(m),
            None => self
                .terms
                .iter()
                .fold(T::zero(), |acc, t| acc + t.coefficient.abs()),
        }
    }

    /// Rescales so that the spectrum lies in `[-0.9π, 0.9π]`.
    ///
    /// Operators already inside that window are left untouched, which makes the
    /// call idempotent.
    pub fn normalize_spectrum(&self) -> (Self, Normalization<T>) {
        let bound = self.spectral_bound();
        let target = T::lit(0.9 * std::f64::consts::PI);
        if bound == T::zero() {
            return (self.clone(), Normalization::ZeroHamiltonian);
        }
        if bound <= target * T::lit(1.0 + 1e-12) {
            return (self.clone(), Normalization::Unchanged);
        }
        let s = target / bound;
        (self.scaled(s), Normalization::Scaled(s))
    }

    /// `s · H`, with `norm_scale` multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient *= s;
        }
        if let Some(m) = &mut out.dense {
            *m *= C::new(s, T::zero());
        }
        out.norm_scale *= s;
        out.diagonal = OnceLock::new();
        out
    }

    /// Maps a normalized energy back to physical units.
    pub fn to_physical(&self, e: T) -> T {
        e / self.norm_scale
    }

    /// Explicit matrix. Pauli sums are expanded, so only small systems qualify.
    pub fn to_dense(&self, limit: usize) -> Result<CMat<T>> {
        if let Some(m) = &self.dense {
            return Ok(m.clone());
        }
        let dim = self.dimension();
        if dim > limit {
            return Err(QfamesError::TooLarge {
                dim,
                limit,
                mode: "dense matrix",
            });
        }
        let mut m = CMat::zeros(dim, dim);
        for t in &self.terms {
            for b in 0..dim {
                let (ph, tgt) = t.string.action(b);
                m[(tgt, b)] += C::new(T::lit(ph.re as f64), T::lit(ph.im as f64)) * t.coefficient;
            }
        }
        Ok(m)
    }

    pub fn to_doc(&self) -> HamiltonianDoc {
        HamiltonianDoc {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| TermDoc {
                    coeff: t.coefficient.f64(),
                    paulis: t.string.to_string(),
                })
                .collect(),
            dense: self.dense.as_ref().map(|m| {
                let n = m.nrows();
                (0..n * n)
                    .map(|k| {
                        let z = m[(k / n, k % n)];
                        [z.re.f64(), z.im.f64()]
                    })
                    .collect()
            }),
            norm_scale: Some(self.norm_scale.f64()),
        }
    }

    pub fn from_doc(doc: &HamiltonianDoc) -> Result<Self> {
        let mut h = if let Some(flat) = &doc.dense {
            if !doc.terms.is_empty() {
                return Err(invalid("Hamiltonian document has both terms and a dense matrix"));
            }
            let n = (flat.len() as f64).sqrt().round() as usize;
            if n * n != flat.len() {
                return Err(mismatch("dense matrix entry count is not a square"));
            }
            Self::from_dense(CMat::from_fn(n, n, |i, j| {
                let [re, im] = flat[i * n + j];
                C::new(T::lit(re), T::lit(im))
            }))?
        } else {
            let terms = doc
                .terms
                .iter()
                .map(|t| {
                    Ok(PauliTerm {
                        coefficient: T::lit(t.coeff),
                        string: PauliString::parse(&t.paulis)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Self::from_terms(doc.n_qubits, terms)?
        };
        if let Some(s) = doc.norm_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("norm_scale must be positive"));
            }
            h.norm_scale = T::lit(s);
        }
        Ok(h)
    }
}

impl<T: Real> LinearOp<T> for PauliSumHamiltonian<T> {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        if let Some(m) = &self.dense {
            m.apply(x, y);
            return;
        }
        let is_diag = |t: &PauliTerm<T>| t.string.x_mask() == 0;
        if self.terms.iter().filter(|t| is_diag(t)).count() < 2 {
            y.iter_mut().for_each(|v| *v = czero());
            for t in &self.terms {
                t.string.apply_add(C::new(t.coefficient, T::zero()), x, y);
            }
            return;
        }
        let d = self.diagonal.get_or_init(|| {
            let mut d = vec![T::zero(); x.len()];
            for t in self.terms.iter().filter(|t| is_diag(t)) {
                let z = t.string.z_mask();
                for (b, v) in d.iter_mut().enumerate() {
                    if ((b as u64) & z).count_ones() & 1 == 1 {
                        *v -= t.coefficient;
                    } else {
                        *v += t.coefficient;
                    }
                }
            }
            d
        });
        for ((o, v), dv) in y.iter_mut().zip(x).zip(d) {
            *o = v * *dv;
        }
        for t in self.terms.iter().filter(|t| !is_diag(t)) {
            t.string.apply_add(C::new(t.coefficient, T::zero()), x, y);
        }
    }

    fn norm_bound(&self) -> T {
        self.spectral_bound()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coeff: f64,
    pub paulis: String,
}

/// JSON form of a Hamiltonian. `dense` holds row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDoc {
    pub n_qubits: usize,
    #[serde(default)]
    pub terms: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_scale: Option<f64>,
}
