//! Symmetric matrices stored by their upper triangle.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    d: usize,
    /// Row-major upper triangle, `d (d + 1) / 2` entries.
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            upper: vec![0.0; d * (d + 1) / 2],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::diag(&vec![1.0; d])
    }

    pub fn diag(v: &[f64]) -> Self {
        let mut m = Self::zeros(v.len());
        for (i, &x) in v.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// From a row-major full matrix, symmetrizing.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let d = rows.len();
        Self::from_fn(d, |i, j| 0.5 * (rows[i][j] + rows[j][i]))
    }

    pub fn from_upper(d: usize, upper: Vec<f64>) -> Option<Self> {
        (upper.len() == d * (d + 1) / 2).then_some(Self { d, upper })
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.d - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.upper[k] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self other)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            d: self.d,
            upper: self.upper.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self {
            d: self.d,
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self.get(i, j))
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.d == 1 {
            return vec![self.upper[0]];
        }
        let mut v: Vec<f64> = SymmetricEigen::new(self.to_dmatrix()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `Q diag(lambda) Q^T`.
    pub fn conjugate_diag(q: &DMatrix<f64>, lambda: &[f64]) -> Self {
        let d = lambda.len();
        Self::from_fn(d, |i, j| (0..d).map(|k| q[(i, k)] * lambda[k] * q[(j, k)]).sum())
    }

    /// Whether every eigenvalue lies in `[delta, 1/delta]` (with slack `tol`).
    pub fn in_s_delta(&self, delta: f64, tol: f64) -> Result<(), f64> {
        for l in self.eigenvalues() {
            if l < delta - tol || l > 1.0 / delta + tol {
                return Err(l);
            }
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian-like sample.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| normal(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            for i in 0..d {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    q
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Symmetric matrix with independent normal upper-triangle entries.
pub fn random_symmetric<R: Rng>(d: usize, rng: &mut R) -> SymMatrix {
    let upper = (0..d * (d + 1) / 2).map(|_| normal(rng)).collect();
    SymMatrix { d, upper }
}

/// Random element of `S_delta`: random eigenbasis, eigenvalues uniform in
/// `[delta, 1/delta]`.
pub fn random_s_delta<R: Rng>(d: usize, delta: f64, rng: &mut R) -> SymMatrix {
    let q = random_orthogonal(d, rng);
    let l: Vec<f64> = (0..d).map(|_| rng.gen_range(delta..=1.0 / delta)).collect();
    SymMatrix::conjugate_diag(&q, &l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn storage_is_symmetric() {
        let mut m = SymMatrix::zeros(3);
        m.set(2, 0, 5.0);
        assert_eq!(m.get(0, 2), 5.0);
        assert_eq!(m.upper().len(), 6);
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]);
        assert_eq!(r.get(0, 1), 3.0);
    }

    #[test]
    fn norms_and_traces() {
        let m = SymMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 0.0]]);
        assert_eq!(m.trace(), 2.0);
        assert!((m.norm() - 22f64.sqrt()).abs() < 1e-15);
        let e = m.eigenvalues();
        assert!((e[0] + e[1] - 2.0).abs() < 1e-12);
        assert!((e[0] * e[1] + 9.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_conjugation_keeps_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_orthogonal(3, &mut rng);
        let m = SymMatrix::conjugate_diag(&q, &[-1.0, 0.5, 2.0]);
        let e = m.eigenvalues();
        for (a, b) in e.iter().zip([-1.0, 0.5, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let a = random_s_delta(3, 0.25, &mut rng);
        assert!(a.in_s_delta(0.25, 1e-12).is_ok());
        assert_eq!(SymMatrix::diag(&[0.1, 1.0]).in_s_delta(0.5, 0.0), Err(0.1));
    }
}
