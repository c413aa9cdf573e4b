//! Single-particle matrices of the dimerized chain.
//!
//! Sites are ordered `(a_1, b_1, a_2, b_2, ..., a_N, b_N)`. The "u-bond" of
//! dimer `i` joins `a_i` and `b_i` with the random amplitude `u_i`; the
//! "w-bond" joins `b_i` and `a_{i+1}` with the constant amplitude `w`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::matrix::{DenseSymmetric, RealSymmetricMatrix, SymTridiagonal};
use crate::numeric::clu::{self, LogDet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of dimers.
    pub n: usize,
    /// Mean u-bond amplitude.
    pub u: f64,
    /// w-bond amplitude.
    pub w: f64,
    pub bc: BoundaryCondition,
}

impl ChainParams {
    pub fn new(n: usize, u: f64, w: f64, bc: BoundaryCondition) -> Result<Self> {
        let p = Self { n, u, w, bc };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimer count must be >= 2, got {}",
                self.n
            )));
        }
        if !self.u.is_finite() || !self.w.is_finite() {
            return Err(Error::InvalidParameter("u and w must be finite".into()));
        }
        Ok(())
    }

    /// Requires `u != 0`, needed wherever ratios `u_i / u` appear.
    pub fn require_nonzero_u(&self) -> Result<()> {
        if self.u == 0.0 {
            return Err(Error::InvalidParameter("mean coupling u must be nonzero".into()));
        }
        Ok(())
    }
}

/// Where a realization came from: master seed and realization index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub index: u64,
}

/// One draw of the N u-bond amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    couplings: Vec<f64>,
    origin: Option<Provenance>,
}

impl Realization {
    pub fn new(couplings: Vec<f64>, origin: Option<Provenance>) -> Self {
        Self { couplings, origin }
    }

    pub fn from_couplings(couplings: Vec<f64>) -> Self {
        Self::new(couplings, None)
    }

    /// All u-bonds equal to the mean `u`.
    pub fn clean(params: &ChainParams) -> Self {
        Self::from_couplings(vec![params.u; params.n])
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn origin(&self) -> Option<Provenance> {
        self.origin
    }

    pub fn check_matches(&self, params: &ChainParams) -> Result<()> {
        if self.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Bond amplitudes around the chain in site order: `[u_1, w, u_2, w, ..., u_N]`,
/// followed by the closing `w` (between `b_N` and `a_1`) for periodic chains.
pub fn bond_sequence(params: &ChainParams, r: &Realization) -> Result<Vec<f64>> {
    r.check_matches(params)?;
    let mut bonds = Vec::with_capacity(2 * params.n);
    for (i, &ui) in r.couplings().iter().enumerate() {
        if i > 0 {
            bonds.push(params.w);
        }
        bonds.push(ui);
    }
    if params.bc == BoundaryCondition::Periodic {
        bonds.push(params.w);
    }
    Ok(bonds)
}

/// Real-space Hamiltonian on `2N` sites. Open chains are tridiagonal; periodic
/// chains carry the extra `w` at `(1, 2N)` and are stored dense.
pub fn build_chain(params: &ChainParams, r: &Realization) -> Result<RealSymmetricMatrix> {
    params.validate()?;
    let mut bonds = bond_sequence(params, r)?;
    match params.bc {
        BoundaryCondition::Open => Ok(RealSymmetricMatrix::Tridiagonal(SymTridiagonal::hollow(bonds))),
        BoundaryCondition::Periodic => {
            let closing = bonds.pop().expect("periodic chain has a closing bond");
            let mut m = SymTridiagonal::hollow(bonds).to_dense();
            let last = 2 * params.n - 1;
            m.set(0, last, closing);
            Ok(RealSymmetricMatrix::Dense(m))
        }
    }
}

/// The N x N block `h(phi)` of the periodic chain that maps b-states to a-states,
/// with the Aharonov-Bohm phase dropped on the closing bond.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxMatrix {
    couplings: Vec<f64>,
    w: f64,
    phi: f64,
}

pub fn build_flux_matrix(r: &Realization, w: f64, phi: f64) -> FluxMatrix {
    FluxMatrix {
        couplings: r.couplings().to_vec(),
        w,
        phi,
    }
}

impl FluxMatrix {
    pub fn dim(&self) -> usize {
        self.couplings.len()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let n = self.dim();
        let mut v = Complex64::new(0.0, 0.0);
        if i == j {
            v += self.couplings[i];
        }
        if i == j + 1 {
            v += self.w;
        }
        if i == 0 && j == n - 1 {
            v += Complex64::from_polar(self.w, self.phi);
        }
        v
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n * n).map(|k| self.entry(k / n, k % n)).collect()
    }

    /// `prod u_i + (-1)^(N+1) w^N e^{i phi}` from cofactor expansion along the first row.
    pub fn det_closed_form(&self) -> Complex64 {
        let n = self.dim();
        let product: f64 = self.couplings.iter().product();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let corner = sign * self.w.powi(n as i32);
        Complex64::new(product, 0.0) + Complex64::from_polar(corner, self.phi)
    }

    /// Determinant by complex LU with partial pivoting.
    pub fn det_lu(&self) -> LogDet {
        clu::log_det(self.to_dense(), self.dim())
    }
}

/// Lower-band dispersion `-sqrt(u^2 + w^2 + 2 u w cos k)`.
pub fn dispersion(u: f64, w: f64, k: f64) -> f64 {
    // Clamp tiny negative round-off at the band touching point.
    -(u * u + w * w + 2.0 * u * w * k.cos()).max(0.0).sqrt()
}

/// Bloch Hamiltonian `[[0, u + w e^{-ik}], [u + w e^{ik}, 0]]`.
pub fn bloch_hamiltonian(u: f64, w: f64, k: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let lower = Complex64::new(u, 0.0) + Complex64::from_polar(w, k);
    [[zero, lower.conj()], [lower, zero]]
}

/// Momenta `2 pi m / N`, `m = 0..N`, of a periodic chain of N dimers.
pub fn momentum_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// Edge-mode decay length `1 / ln|w/u|`, defined in the topological regime only.
pub fn coherence_length(u: f64, w: f64) -> Result<f64> {
    if !(w.abs() > u.abs() && u != 0.0) {
        return Err(Error::NoEdgeMode { u, w });
    }
    Ok(1.0 / (w / u).abs().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::clu::log_det;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, u: f64, w: f64, bc: BoundaryCondition) -> ChainParams {
        ChainParams::new(n, u, w, bc).unwrap()
    }

    #[test]
    fn open_chain_offdiagonal_sequence() {
        let p = params(2, 1.0, 2.0, BoundaryCondition::Open);
        let m = build_chain(&p, &Realization::from_couplings(vec![1.0, 1.0])).unwrap();
        match m {
            RealSymmetricMatrix::Tridiagonal(t) => {
                assert_eq!(t.offdiag, vec![1.0, 2.0, 1.0]);
                assert_eq!(t.diag, vec![0.0; 4]);
            }
            _ => panic!("open chain must be tridiagonal"),
        }
    }

    #[test]
    fn periodic_chain_has_corner() {
        let p = params(3, 1.0, 0.7, BoundaryCondition::Periodic);
        let m = build_chain(&p, &Realization::from_couplings(vec![1.0, 1.1, 0.9])).unwrap();
        assert_eq!(m.get(0, 5), 0.7);
        assert_eq!(m.get(5, 0), 0.7);
        assert_eq!(m.get(4, 5), 0.9);
        assert!((0..6).all(|i| m.get(i, i) == 0.0));
        assert!(m.to_dense().is_symmetric());
    }

    #[test]
    fn rejects_short_chain_and_mismatch() {
        assert!(ChainParams::new(1, 1.0, 1.0, BoundaryCondition::Open).is_err());
        let p = params(4, 1.0, 1.0, BoundaryCondition::Open);
        let err = build_chain(&p, &Realization::from_couplings(vec![1.0; 3])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                actual: 3
            }
        );
    }

    #[test]
    fn chiral_symmetry_anticommutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let n = rng.random_range(2..12);
            let bc = if trial % 2 == 0 {
                BoundaryCondition::Open
            } else {
                BoundaryCondition::Periodic
            };
            let p = params(n, 1.0, rng.random_range(0.2..2.0), bc);
            let r = Realization::from_couplings((0..n).map(|_| rng.random_range(-1.0..3.0)).collect());
            let h = build_chain(&p, &r).unwrap();
            let s = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            for i in 0..2 * n {
                for j in 0..2 * n {
                    assert_eq!(s(i) * h.get(i, j) * s(j), -h.get(i, j));
                }
            }
        }
    }

    #[test]
    fn flux_matrix_structure() {
        let r = Realization::from_couplings(vec![1.0, 2.0, 3.0]);
        let h = build_flux_matrix(&r, 0.5, 0.3);
        assert_eq!(h.entry(1, 0), Complex64::new(0.5, 0.0));
        assert_eq!(h.entry(0, 1), Complex64::new(0.0, 0.0));
        assert_eq!(h.entry(0, 2), Complex64::from_polar(0.5, 0.3));
        let non_real: Vec<_> = h
            .to_dense()
            .iter()
            .enumerate()
            .filter(|(_, z)| z.im != 0.0)
            .map(|(k, _)| k)
            .collect();
        assert_eq!(non_real, vec![2]);
        let h0 = build_flux_matrix(&r, 0.5, 0.0);
        assert!(h0.to_dense().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn flux_determinant_examples() {
        let diag = build_flux_matrix(&Realization::from_couplings(vec![1.0; 3]), 0.0, 1.234);
        assert!((diag.det_closed_form() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((diag.det_lu().value() - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let critical = build_flux_matrix(&Realization::from_couplings(vec![1.0; 2]), 1.0, 0.0);
        assert_eq!(critical.det_closed_form(), Complex64::new(0.0, 0.0));
        assert!(critical.det_lu().value().norm() < 1e-15);
    }

    #[test]
    fn flux_determinant_closed_form_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            let r = Realization::from_couplings((0..n).map(|_| rng.random_range(-2.0..3.0)).collect());
            let h = build_flux_matrix(&r, rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0 * PI));
            let closed = h.det_closed_form();
            let lu = log_det(h.to_dense(), n).value();
            let scale = closed.norm().max(1e-300);
            assert!((closed - lu).norm() / scale <= 1e-12, "{closed} vs {lu}");
        }
    }

    #[test]
    fn flux_determinant_is_affine_in_phase_factor() {
        let r = Realization::from_couplings(vec![0.7, 1.3, -0.4, 2.0, 1.1]);
        let det_at = |phi: f64| build_flux_matrix(&r, 1.2, phi).det_lu().value();
        // det = a + b z with z = e^{i phi}; fit from two samples, check at a third and beyond.
        let (z0, z1) = (Complex64::from_polar(1.0, 0.0), Complex64::from_polar(1.0, 1.0));
        let (d0, d1) = (det_at(0.0), det_at(1.0));
        let b = (d1 - d0) / (z1 - z0);
        let a = d0 - b * z0;
        for k in 0..16 {
            let phi = 0.4 * k as f64;
            let want = a + b * Complex64::from_polar(1.0, phi);
            assert!((det_at(phi) - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(1.0, 1.0, PI), 0.0);
        for k in [0.0, 0.3, 2.0, PI] {
            assert_eq!(dispersion(1.0, 0.0, k), -1.0);
        }
        let e = dispersion(1.0, 0.8, PI);
        assert!((e + 0.2).abs() < 1e-15);
        assert!((2.0 * e.abs() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn coherence_length_examples() {
        assert!((coherence_length(1.0, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            coherence_length(1.0, 1.0),
            Err(Error::NoEdgeMode { .. })
        ));
        assert!(coherence_length(1.0, 0.5).is_err());
        let xi = coherence_length(0.8, 1.0).unwrap();
        assert!((xi - 4.481_420_117_724_549).abs() < 1e-12);
    }
}
