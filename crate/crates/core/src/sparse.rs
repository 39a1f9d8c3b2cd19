//! Compressed sparse row storage for complex Hermitian operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_parts(n: usize, indptr: Vec<usize>, indices: Vec<u32>, values: Vec<C64>) -> Self {
        assert_eq!(indptr.len(), n + 1);
        assert_eq!(indices.len(), values.len());
        Self { n, indptr, indices, values }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    indices.push(c as u32);
                    values.push(m[(r, c)]);
                }
            }
            indptr.push(indices.len());
        }
        Self { n, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().zip(&self.values[a..b]).map(|(c, v)| (*c as usize, *v))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n);
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for k in a..b {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            *yr = acc;
        }
    }

    /// `y += s · A x`.
    pub fn matvec_add(&self, s: f64, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for k in a..b {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            *yr += acc * s;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Maximum absolute row sum; bounds the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n)
            .map(|r| self.row(r).find(|(c, _)| *c == r).map(|(_, v)| v).unwrap_or_default())
            .collect()
    }

    /// Largest |A_rc − conj(A_cr)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let t = self.get(c, r);
                worst = worst.max((v - t.conj()).norm());
            }
        }
        worst
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&(c as u32)) {
            Ok(k) => self.values[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Frobenius norm of `[A, D]` for the diagonal operator `D = diag(d)`.
    pub fn commutator_with_diagonal(&self, d: &[f64]) -> f64 {
        let mut s = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                s += (v * (d[c] - d[r])).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip() {
        let m = DMatrix::from_fn(5, 5, |r, c| {
            if (r + 2 * c) % 3 == 0 {
                C64::new(r as f64 - c as f64, (r * c) as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let s = CsrMatrix::from_dense(&m);
        assert_eq!(s.to_dense(), m);
        let x: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0)).collect();
        let y = s.apply(&x);
        let yd = &m * nalgebra::DVector::from_vec(x.clone());
        for k in 0..5 {
            assert!((y[k] - yd[k]).norm() < 1e-12);
        }
        assert_eq!(s.get(0, 0), m[(0, 0)]);
    }
}
