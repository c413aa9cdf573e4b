//! Real symmetric matrix storage used by the chain builders and eigensolvers.

use serde::{Deserialize, Serialize};

/// Symmetric tridiagonal matrix: `diag.len() == n`, `offdiag.len() == n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(
            offdiag.len() + 1 == diag.len() || (diag.is_empty() && offdiag.is_empty()),
            "tridiagonal: off-diagonal must have length n - 1"
        );
        Self { diag, offdiag }
    }

    /// Zero diagonal with the given off-diagonal.
    pub fn hollow(offdiag: Vec<f64>) -> Self {
        Self::new(vec![0.0; offdiag.len() + 1], offdiag)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        let n = self.dim();
        let mut m = DenseSymmetric::zeros(n);
        for (i, &d) in self.diag.iter().enumerate() {
            m.set(i, i, d);
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m.set(i, i + 1, e);
        }
        m
    }
}

/// Dense symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest distance from the diagonal of a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut kd = 0;
        for i in 0..self.n {
            for j in 0..i {
                if self.get(i, j) != 0.0 {
                    kd = kd.max(i - j);
                    break;
                }
            }
        }
        kd
    }
}

/// Single-particle Hamiltonian matrix of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RealSymmetricMatrix {
    Tridiagonal(SymTridiagonal),
    Dense(DenseSymmetric),
}

impl RealSymmetricMatrix {
    pub fn dim(&self) -> usize {
        match self {
            Self::Tridiagonal(t) => t.dim(),
            Self::Dense(d) => d.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Tridiagonal(t) => match i.abs_diff(j) {
                0 => t.diag[i],
                1 => t.offdiag[i.min(j)],
                _ => 0.0,
            },
            Self::Dense(d) => d.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        match self {
            Self::Tridiagonal(t) => t.to_dense(),
            Self::Dense(d) => d.clone(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        match self {
            Self::Tridiagonal(t) => (0..n)
                .map(|i| {
                    let mut s = t.diag[i] * x[i];
                    if i > 0 {
                        s += t.offdiag[i - 1] * x[i - 1];
                    }
                    if i + 1 < n {
                        s += t.offdiag[i] * x[i + 1];
                    }
                    s
                })
                .collect(),
            Self::Dense(d) => (0..n).map(|i| (0..n).map(|j| d.get(i, j) * x[j]).sum()).collect(),
        }
    }

    /// Infinity norm (max absolute row sum); equal to the 1-norm by symmetry.
    pub fn norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| match self {
                Self::Tridiagonal(_) => {
                    let lo = i.saturating_sub(1);
                    let hi = (i + 2).min(n);
                    (lo..hi).map(|j| self.get(i, j).abs()).sum::<f64>()
                }
                Self::Dense(d) => (0..n).map(|j| d.get(i, j).abs()).sum(),
            })
            .fold(0.0, f64::max)
    }

    /// trace(M^2) = sum of squared entries.
    pub fn trace_of_square(&self) -> f64 {
        match self {
            Self::Tridiagonal(t) => {
                t.diag.iter().map(|d| d * d).sum::<f64>() + 2.0 * t.offdiag.iter().map(|e| e * e).sum::<f64>()
            }
            Self::Dense(d) => d.data.iter().map(|v| v * v).sum(),
        }
    }
}
