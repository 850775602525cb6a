//! Pauli strings stored as bit masks.
//!
//! Letter `i` of a string acts on qubit `i`, which is bit `i` of a
//! computational basis index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(invalid(format!("unknown Pauli letter {other:?}"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis on at most 64 qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    x: u64,
    z: u64,
    n_y: u32,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.len() > 64 {
            return Err(invalid("Pauli strings are limited to 64 qubits"));
        }
        let (mut x, mut z, mut n_y) = (0u64, 0u64, 0u32);
        for (i, p) in letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << i,
                Pauli::Z => z |= 1 << i,
                Pauli::Y => {
                    x |= 1 << i;
                    z |= 1 << i;
                    n_y += 1;
                }
            }
        }
        Ok(Self { letters, x, z, n_y })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(vec![Pauli::I; n_qubits]).expect("identity within size limit")
    }

    /// Parses e.g. `"XIZ"`.
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(s.chars().map(Pauli::from_char).collect::<Result<_>>()?)
    }

    /// String with the given letter on each listed qubit and identity elsewhere.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(invalid(format!("qubit {q} out of range for {n_qubits} qubits")));
            }
            letters[q] = p;
        }
        Self::new(letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Two Pauli strings commute iff they anticommute on an even number of sites.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Phase and target of `P|b⟩ = phase · |b ⊕ x⟩`.
    #[inline]
    pub fn action(&self, b: usize) -> (C<i8>, usize) {
        let sign: i8 = if ((b as u64) & self.z).count_ones().is_multiple_of(2) { 1 } else { -1 };
        let phase = match self.n_y % 4 {
            0 => C::new(sign, 0),
            1 => C::new(0, sign),
            2 => C::new(-sign, 0),
            _ => C::new(0, -sign),
        };
        (phase, b ^ self.x as usize)
    }

    /// `out += coeff · P · input`.
    pub fn apply_add<T: Real>(&self, coeff: C<T>, input: &[C<T>], out: &mut [C<T>]) {
        let x = self.x as usize;
        let z = self.z;
        let base = match self.n_y % 4 {
            0 => coeff,
            1 => coeff * C::new(T::zero(), T::one()),
            2 => -coeff,
            _ => coeff * C::new(T::zero(), -T::one()),
        };
        for (b, v) in input.iter().enumerate() {
            let odd = ((b as u64) & z).count_ones() & 1 == 1;
            let term = base * v;
            if odd {
                out[b ^ x] -= term;
            } else {
                out[b ^ x] += term;
            }
        }
    }

    /// `P · input` into a fresh vector.
    pub fn apply<T: Real>(&self, input: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::new(T::zero(), T::zero()); input.len()];
        self.apply_add(C::new(T::one(), T::zero()), input, &mut out);
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, b: usize) -> Vec<C<f64>> {
        let mut v = vec![C::new(0.0, 0.0); dim];
        v[b] = C::new(1.0, 0.0);
        v
    }

    #[test]
    fn single_qubit_actions() {
        let y = PauliString::parse("Y").unwrap();
        assert_eq!(y.apply(&basis(2, 0)), vec![C::new(0.0, 0.0), C::new(0.0, 1.0)]);
        assert_eq!(y.apply(&basis(2, 1)), vec![C::new(0.0, -1.0), C::new(0.0, 0.0)]);
        let z = PauliString::parse("Z").unwrap();
        assert_eq!(z.apply(&basis(2, 1))[1], C::new(-1.0, 0.0));
        let x = PauliString::parse("X").unwrap();
        assert_eq!(x.apply(&basis(2, 0))[1], C::new(1.0, 0.0));
    }

    #[test]
    fn qubit_order_is_little_endian() {
        let p = PauliString::parse("XI").unwrap();
        assert_eq!(p.apply(&basis(4, 0))[1], C::new(1.0, 0.0));
    }

    #[test]
    fn action_matches_apply() {
        let p = PauliString::parse("YZX").unwrap();
        for b in 0..8 {
            let v = p.apply(&basis(8, b));
            let (ph, tgt) = p.action(b);
            assert_eq!(v[tgt], C::new(ph.re as f64, ph.im as f64));
        }
    }

    #[test]
    fn commutation_rules() {
        let xx = PauliString::parse("XX").unwrap();
        let zz = PauliString::parse("ZZ").unwrap();
        let zi = PauliString::parse("ZI").unwrap();
        assert!(xx.commutes_with(&zz));
        assert!(!xx.commutes_with(&zi));
        assert!(PauliString::parse("Y").unwrap().commutes_with(&PauliString::parse("Y").unwrap()));
    }

    #[test]
    fn square_is_identity() {
        let p = PauliString::parse("XYZY").unwrap();
        let v: Vec<C<f64>> = (0..16).map(|i| C::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let back = p.apply(&p.apply(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
