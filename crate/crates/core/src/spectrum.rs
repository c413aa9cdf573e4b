//! Eigensolvers for the chain Hamiltonians.
//!
//! Open chains are symmetric tridiagonal and go straight to implicit-shift QL.
//! Dense matrices are first reduced by Householder reflections. Periodic chains
//! have a second route: folding the ring `(0, M-1, 1, M-2, ...)` makes the
//! matrix pentadiagonal, which Givens bulge chasing reduces to tridiagonal form
//! in O(M^2) instead of O(M^3).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseSymmetric, RealSymmetricMatrix, SymTridiagonal};
use crate::model::{bond_sequence, BoundaryCondition, ChainParams, Realization};

const MAX_QL_ITERATIONS: usize = 60;
const MAX_INVERSE_ITERATIONS: usize = 50;
/// Pairs closer than this (relative to the matrix norm) are treated as one
/// two-dimensional invariant subspace.
const DEGENERACY_TOLERANCE: f64 = 1e-6;
const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `2 * min |E_j|`.
    pub gap: f64,
    /// Indices (ascending) of the eigenvalue closest to zero and its chiral partner.
    pub min_pair: (usize, usize),
}

impl SpectralResult {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let n = eigenvalues.len();
        if n == 0 {
            return Self {
                eigenvalues,
                gap: 0.0,
                min_pair: (0, 0),
            };
        }
        let closest = (0..n)
            .min_by(|&i, &j| eigenvalues[i].abs().total_cmp(&eigenvalues[j].abs()))
            .unwrap_or(0);
        let target = -eigenvalues[closest];
        let partner = (0..n)
            .filter(|&j| j != closest)
            .min_by(|&i, &j| {
                (eigenvalues[i] - target)
                    .abs()
                    .total_cmp(&(eigenvalues[j] - target).abs())
            })
            .unwrap_or(closest);
        Self {
            gap: 2.0 * eigenvalues[closest].abs(),
            min_pair: (closest.min(partner), closest.max(partner)),
            eigenvalues,
        }
    }

    /// `min |E_j|`.
    pub fn min_abs(&self) -> f64 {
        0.5 * self.gap
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Largest `|E_j + E_{n-1-j}|` over the sorted spectrum.
    pub fn chiral_mismatch(&self) -> f64 {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|j| (self.eigenvalues[j] + self.eigenvalues[n - 1 - j]).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
pub fn tridiagonal_eigenvalues(t: &SymTridiagonal) -> Result<Vec<f64>> {
    let n = t.dim();
    let mut d = t.diag.clone();
    if n <= 1 {
        return Ok(d);
    }
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let norm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let floor = norm * 1e-30;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    index: l,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Householder reduction of a dense symmetric matrix to tridiagonal form
/// (eigenvalues only, no accumulated transform).
pub fn householder_tridiagonalize(m: &DenseSymmetric) -> SymTridiagonal {
    let n = m.dim();
    let mut a: Vec<f64> = (0..n * n).map(|k| m.get(k / n, k % n)).collect();
    let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let norm_x = (start..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            offdiag.push(0.0);
            continue;
        }
        let x0 = a[start * n + k];
        let alpha = -norm_x.copysign(x0);
        for i in start..n {
            v[i] = a[i * n + k];
        }
        v[start] -= alpha;
        let vnorm = (start..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            offdiag.push(x0);
            continue;
        }
        for vi in &mut v[start..n] {
            *vi /= vnorm;
        }
        // p = A22 v, K = v.p, q = p - K v, A22 -= 2 (v q^T + q v^T)
        for i in start..n {
            p[i] = (start..n).map(|j| a[i * n + j] * v[j]).sum();
        }
        let kk: f64 = (start..n).map(|i| v[i] * p[i]).sum();
        for i in start..n {
            p[i] -= kk * v[i];
        }
        for i in start..n {
            for j in start..n {
                a[i * n + j] -= 2.0 * (v[i] * p[j] + p[i] * v[j]);
            }
        }
        offdiag.push(alpha);
        for i in start..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
    }
    if n >= 2 {
        offdiag.push(a[(n - 1) * n + (n - 2)]);
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    SymTridiagonal::new(diag, offdiag)
}

/// Reduces a symmetric band matrix with half-bandwidth `kd` to tridiagonal
/// form by Givens rotations with bulge chasing.
pub fn reduce_banded(mut m: DenseSymmetric, kd: usize) -> SymTridiagonal {
    let n = m.dim();
    if kd > 1 {
        let a = m.data_mut();
        for j in 0..n.saturating_sub(2) {
            for k in (2..=kd).rev() {
                let i = j + k;
                if i >= n {
                    continue;
                }
                if !givens_zero(a, n, kd, i - 1, j) {
                    continue;
                }
                let mut r = i;
                loop {
                    let b = r + kd;
                    if b >= n || !givens_zero(a, n, kd, b - 1, r - 1) {
                        break;
                    }
                    r = b;
                }
            }
        }
    }
    let diag = (0..n).map(|i| m.get(i, i)).collect();
    let offdiag = (0..n.saturating_sub(1)).map(|i| m.get(i + 1, i)).collect();
    SymTridiagonal::new(diag, offdiag)
}

/// Rotates rows/columns `(p, p + 1)` so that entry `(p + 1, col)` vanishes.
/// Returns false when the entry was already zero.
fn givens_zero(a: &mut [f64], n: usize, kd: usize, p: usize, col: usize) -> bool {
    let q = p + 1;
    let x = a[p * n + col];
    let y = a[q * n + col];
    if y == 0.0 {
        return false;
    }
    let r = x.hypot(y);
    let (c, s) = (x / r, y / r);
    let lo = p.saturating_sub(kd + 2);
    let hi = (q + kd + 2).min(n);
    for j in lo..hi {
        let (u, v) = (a[p * n + j], a[q * n + j]);
        a[p * n + j] = c * u + s * v;
        a[q * n + j] = -s * u + c * v;
    }
    for i in lo..hi {
        let (u, v) = (a[i * n + p], a[i * n + q]);
        a[i * n + p] = c * u + s * v;
        a[i * n + q] = -s * u + c * v;
    }
    a[q * n + col] = 0.0;
    a[col * n + q] = 0.0;
    true
}

/// Full spectrum of an Open-chain (tridiagonal) Hamiltonian.
pub fn eigenvalues_tridiagonal(m: &RealSymmetricMatrix) -> Result<SpectralResult> {
    match m {
        RealSymmetricMatrix::Tridiagonal(t) => {
            Ok(SpectralResult::from_eigenvalues(tridiagonal_eigenvalues(t)?))
        }
        RealSymmetricMatrix::Dense(_) => Err(Error::InvalidParameter(
            "eigenvalues_tridiagonal requires tridiagonal storage".into(),
        )),
    }
}

/// Full spectrum through Householder tridiagonalization and QL.
pub fn eigenvalues_dense(m: &RealSymmetricMatrix) -> Result<SpectralResult> {
    let t = householder_tridiagonalize(&m.to_dense());
    Ok(SpectralResult::from_eigenvalues(tridiagonal_eigenvalues(&t)?))
}

/// Spectrum of a ring with nearest-neighbour bonds `bonds[k]` between sites
/// `k` and `k + 1 (mod M)` and zero on-site energies.
pub fn ring_eigenvalues(bonds: &[f64]) -> Result<SpectralResult> {
    let m = bonds.len();
    if m < 3 {
        return Err(Error::InvalidParameter("a ring needs at least 3 sites".into()));
    }
    // position of ring site k in the folded order (0, M-1, 1, M-2, ...)
    let pos = |k: usize| if k < m - k { 2 * k } else { 2 * (m - 1 - k) + 1 };
    let mut folded = DenseSymmetric::zeros(m);
    for (k, &t) in bonds.iter().enumerate() {
        let (i, j) = (pos(k), pos((k + 1) % m));
        folded.set(i, j, folded.get(i, j) + t);
    }
    let t = reduce_banded(folded, 2);
    Ok(SpectralResult::from_eigenvalues(tridiagonal_eigenvalues(&t)?))
}

/// Spectrum of the chain, using the fastest exact route for its boundary condition.
pub fn chain_spectrum(params: &ChainParams, r: &Realization) -> Result<SpectralResult> {
    let bonds = bond_sequence(params, r)?;
    match params.bc {
        BoundaryCondition::Open => Ok(SpectralResult::from_eigenvalues(tridiagonal_eigenvalues(
            &SymTridiagonal::hollow(bonds),
        )?)),
        BoundaryCondition::Periodic => ring_eigenvalues(&bonds),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// The two eigenstates with energies closest to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NearZeroPair {
    pub plus_energy: f64,
    pub minus_energy: f64,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    /// The pair was resolved as a two-dimensional subspace.
    pub degenerate: bool,
}

impl NearZeroPair {
    pub fn vector(&self, which: Branch) -> &[f64] {
        match which {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }
}

pub fn eigenvector_near_zero(
    m: &RealSymmetricMatrix,
    spectrum: &SpectralResult,
    which: Branch,
) -> Result<Vec<f64>> {
    let pair = near_zero_pair(m, spectrum)?;
    Ok(match which {
        Branch::Plus => pair.plus,
        Branch::Minus => pair.minus,
    })
}

/// Inverse iteration for the `+-E_min` pair. Well separated members get their
/// own shift; a near-degenerate pair is found as a block with the midpoint
/// shift and split by Rayleigh-Ritz.
pub fn near_zero_pair(m: &RealSymmetricMatrix, spectrum: &SpectralResult) -> Result<NearZeroPair> {
    let n = m.dim();
    if spectrum.eigenvalues.len() != n || n < 2 {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: spectrum.eigenvalues.len(),
        });
    }
    let norm = m.norm().max(f64::MIN_POSITIVE);
    let (lo, hi) = spectrum.min_pair;
    let (e_minus, e_plus) = (spectrum.eigenvalues[lo], spectrum.eigenvalues[hi]);
    let tol = RESIDUAL_TOLERANCE * norm;

    if e_plus - e_minus > DEGENERACY_TOLERANCE * norm {
        let plus = inverse_iteration(m, e_plus, &[], norm, tol, 1)?;
        let minus = inverse_iteration(m, e_minus, &[&plus], norm, tol, 2)?;
        return Ok(NearZeroPair {
            plus_energy: e_plus,
            minus_energy: e_minus,
            plus,
            minus,
            degenerate: false,
        });
    }

    let shift = 0.5 * (e_plus + e_minus);
    let solver = ShiftedSolver::new(m, shift, norm);
    let mut x1 = start_vector(n, 1);
    let mut x2 = start_vector(n, 2);
    orthonormalize_pair(&mut x1, &mut x2);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        x1 = solver.solve(&x1);
        x2 = solver.solve(&x2);
        orthonormalize_pair(&mut x1, &mut x2);
        let (l_minus, v_minus, l_plus, v_plus) = rayleigh_ritz_pair(m, &x1, &x2);
        let res = residual(m, &v_plus, l_plus).max(residual(m, &v_minus, l_minus));
        best = best.min(res);
        if res <= tol {
            return Ok(NearZeroPair {
                plus_energy: l_plus,
                minus_energy: l_minus,
                plus: v_plus,
                minus: v_minus,
                degenerate: true,
            });
        }
    }
    Err(Error::InverseIteration { residual: best })
}

fn inverse_iteration(
    m: &RealSymmetricMatrix,
    shift: f64,
    deflate: &[&[f64]],
    norm: f64,
    tol: f64,
    salt: u64,
) -> Result<Vec<f64>> {
    let solver = ShiftedSolver::new(m, shift, norm);
    let mut x = start_vector(m.dim(), salt);
    project_out(&mut x, deflate);
    normalize(&mut x);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        x = solver.solve(&x);
        project_out(&mut x, deflate);
        normalize(&mut x);
        let mx = m.matvec(&x);
        let lambda = dot(&x, &mx);
        let res = mx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        best = best.min(res);
        if res <= tol {
            return Ok(x);
        }
    }
    Err(Error::InverseIteration { residual: best })
}

fn residual(m: &RealSymmetricMatrix, v: &[f64], lambda: f64) -> f64 {
    m.matvec(v)
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Ritz pairs of `m` on span{x1, x2} (orthonormal), ascending by Ritz value.
fn rayleigh_ritz_pair(m: &RealSymmetricMatrix, x1: &[f64], x2: &[f64]) -> (f64, Vec<f64>, f64, Vec<f64>) {
    let (m1, m2) = (m.matvec(x1), m.matvec(x2));
    let a = dot(x1, &m1);
    let b = 0.5 * (dot(x1, &m2) + dot(x2, &m1));
    let d = dot(x2, &m2);
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    let (l_lo, l_hi) = (mean - radius, mean + radius);
    // eigenvector of [[a, b], [b, d]] for l_hi
    let (c, s) = if radius == 0.0 {
        (1.0, 0.0)
    } else {
        let (p, q) = if (a - l_hi).abs() + b.abs() >= (d - l_hi).abs() + b.abs() {
            (b, l_hi - a)
        } else {
            (l_hi - d, b)
        };
        let r = p.hypot(q);
        (p / r, q / r)
    };
    let hi: Vec<f64> = x1.iter().zip(x2).map(|(u, v)| c * u + s * v).collect();
    let lo: Vec<f64> = x1.iter().zip(x2).map(|(u, v)| -s * u + c * v).collect();
    (l_lo, lo, l_hi, hi)
}

fn start_vector(n: usize, salt: u64) -> Vec<f64> {
    // SplitMix64 stream: deterministic and free of structure aligned with the lattice.
    let mut state = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(salt.wrapping_add(1));
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn project_out(x: &mut [f64], basis: &[&[f64]]) {
    // twice is enough (Kahan)
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            x.iter_mut().zip(b.iter()).for_each(|(v, bv)| *v -= c * bv);
        }
    }
}

fn orthonormalize_pair(x1: &mut [f64], x2: &mut [f64]) {
    normalize(x1);
    project_out(x2, &[x1]);
    normalize(x2);
}

/// Factorization of `M - shift I` reused across inverse iterations.
enum ShiftedSolver {
    Tridiagonal(TridiagonalLu),
    Dense(DenseLu),
}

impl ShiftedSolver {
    fn new(m: &RealSymmetricMatrix, shift: f64, norm: f64) -> Self {
        let tiny = f64::EPSILON * norm;
        match m {
            RealSymmetricMatrix::Tridiagonal(t) => {
                let d = t.diag.iter().map(|x| x - shift).collect();
                Self::Tridiagonal(TridiagonalLu::new(t.offdiag.clone(), d, t.offdiag.clone(), tiny))
            }
            RealSymmetricMatrix::Dense(a) => Self::Dense(DenseLu::new(a, shift, tiny)),
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Tridiagonal(lu) => lu.solve(b),
            Self::Dense(lu) => lu.solve(b),
        }
    }
}

/// Tridiagonal LU with partial pivoting (LAPACK gttrf/gtts2 layout).
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn new(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, tiny: f64) -> Self {
        let n = d.len();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for di in &mut d {
            if di.abs() < tiny {
                *di = if *di < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

/// Dense real LU with partial pivoting.
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn new(a: &DenseSymmetric, shift: f64, tiny: f64) -> Self {
        let n = a.dim();
        let mut lu: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                a.get(i, j) - if i == j { shift } else { 0.0 }
            })
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs()))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            if lu[k * n + k].abs() < tiny {
                lu[k * n + k] = if lu[k * n + k] < 0.0 { -tiny } else { tiny };
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Self { n, lu, perm }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}
