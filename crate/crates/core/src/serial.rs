//! JSON forms of complex matrices and vectors (row-major `[re, im]` pairs).

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Result};
use crate::scalar::{CMat, CVec, Real, C};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix<T: Real>(m: &CMat<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                data.push([z.re.f64(), z.im.f64()]);
            }
        }
        Self { rows, cols, data }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<CMat<T>> {
        if self.data.len() != self.rows * self.cols {
            return Err(mismatch(format!(
                "matrix document declares {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C::new(T::lit(re), T::lit(im))
        }))
    }
}

pub fn vector_to_pairs<T: Real>(v: &CVec<T>) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re.f64(), z.im.f64()]).collect()
}

pub fn pairs_to_vector<T: Real>(p: &[[f64; 2]]) -> CVec<T> {
    CVec::from_iterator(p.len(), p.iter().map(|[re, im]| C::new(T::lit(*re), T::lit(*im))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = CMat::<f64>::from_fn(2, 3, |i, j| C::new(i as f64, j as f64 - 0.5));
        let doc = MatrixDoc::from_matrix(&m);
        let back: CMat<f64> = serde_json::from_str::<MatrixDoc>(&serde_json::to_string(&doc).unwrap())
            .unwrap()
            .to_matrix()
            .unwrap();
        assert_eq!(back, m);
        let bad = MatrixDoc { rows: 2, cols: 2, data: vec![[0.0, 0.0]] };
        assert!(bad.to_matrix::<f64>().is_err());
    }
}
