//! Monte Carlo over the flat coupling distribution.
//!
//! Realization `k` of a run with master seed `s` is drawn from ChaCha8 seeded
//! with `s` on stream `k`, so it never depends on which thread evaluates it or
//! how many realizations come before it. Workers map realizations in parallel;
//! results are collected in index order and reduced sequentially, which keeps
//! every estimate bit-identical across thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::DisorderDensity;
use crate::error::{Error, Result};
use crate::invariant::winding_closed_form;
use crate::model::{build_chain, BoundaryCondition, ChainParams, Provenance, Realization};
use crate::spectrum::{chain_spectrum, eigenvalues_tridiagonal, near_zero_pair};

/// Uniform density on `[u - sqrt(3) gamma, u + sqrt(3) gamma]` (variance `gamma^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatDistribution {
    pub gamma: f64,
    pub u: f64,
}

impl FlatDistribution {
    pub fn new(gamma: f64, u: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "disorder strength must be >= 0, got {gamma}"
            )));
        }
        if !u.is_finite() {
            return Err(Error::InvalidParameter("mean coupling must be finite".into()));
        }
        Ok(Self { gamma, u })
    }

    pub fn half_width(&self) -> f64 {
        3f64.sqrt() * self.gamma
    }

    /// Maps a unit uniform variate onto the support.
    fn transform(&self, t: f64) -> f64 {
        let a = self.half_width();
        self.u - a + 2.0 * a * t
    }
}

impl DisorderDensity for FlatDistribution {
    fn pdf(&self, eps: f64) -> f64 {
        let a = self.half_width();
        if a > 0.0 && eps.abs() <= a {
            0.5 / a
        } else {
            0.0
        }
    }

    fn support(&self) -> (f64, f64) {
        let a = self.half_width();
        (-a, a)
    }
}

fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Realization `index` of the run seeded with `master_seed`.
pub fn sample_realization(dist: &FlatDistribution, n: usize, master_seed: u64, index: u64) -> Realization {
    let mut rng = stream(master_seed, index);
    let couplings = (0..n).map(|_| dist.transform(rng.random())).collect();
    Realization::new(couplings, Some(Provenance { master_seed, index }))
}

/// Like [`sample_realization`], but any exact zero is redrawn from the same
/// stream. Returns the number of redraws.
pub fn sample_nonzero_realization(
    dist: &FlatDistribution,
    n: usize,
    master_seed: u64,
    index: u64,
) -> (Realization, usize) {
    let mut rng = stream(master_seed, index);
    let mut redraws = 0;
    let couplings = (0..n)
        .map(|_| loop {
            let x = dist.transform(rng.random());
            if x != 0.0 {
                break x;
            }
            redraws += 1;
        })
        .collect();
    (
        Realization::new(couplings, Some(Provenance { master_seed, index })),
        redraws,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    MeanNu,
    MeanGap,
    WavefunctionProfile,
    /// `values = [mean, variance]` of `eta`.
    EtaMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub quantity: Quantity,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Realizations that entered the estimate.
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Realizations dropped as critical (mean-nu only).
    pub excluded: usize,
    /// Couplings redrawn because they were exactly zero (eta moments only).
    pub resampled: usize,
}

impl EnsembleEstimate {
    /// First (for scalar quantities, the only) value.
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn error(&self) -> f64 {
        self.stderr[0]
    }
}

/// Mean and `sample_std / sqrt(R)`; the error is NaN for a single sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

fn check_realizations(r: usize, min: usize) -> Result<()> {
    if r < min {
        return Err(Error::InvalidParameter(format!(
            "need at least {min} realizations, got {r}"
        )));
    }
    Ok(())
}

fn check_center(params: &ChainParams, dist: &FlatDistribution) -> Result<()> {
    params.validate()?;
    if params.u != dist.u {
        return Err(Error::InvalidParameter(format!(
            "distribution center {} differs from chain u = {}",
            dist.u, params.u
        )));
    }
    Ok(())
}

fn par_map<T, F>(r: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..r as u64).into_par_iter().map(f).collect()
}

/// Binary index of every realization, `None` where the realization is critical.
pub fn nu_samples(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<Vec<Option<u8>>> {
    check_center(params, dist)?;
    par_map(r, |k| {
        let real = sample_realization(dist, params.n, seed, k);
        match winding_closed_form(&real, params) {
            Ok(res) => Ok(Some(res.nu)),
            Err(Error::CriticalRealization(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

/// `<nu>` over `r` realizations by the product criterion.
pub fn estimate_mean_nu(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    check_realizations(r, 2)?;
    let samples = nu_samples(params, dist, r, seed)?;
    let kept: Vec<f64> = samples.iter().flatten().map(|&nu| f64::from(nu)).collect();
    let excluded = r - kept.len();
    if kept.len() < 2 {
        return Err(Error::CriticalRealization(format!(
            "{excluded} of {r} realizations critical"
        )));
    }
    let (mean, err) = mean_and_stderr(&kept);
    Ok(EnsembleEstimate {
        quantity: Quantity::MeanNu,
        values: vec![mean],
        stderr: vec![err],
        n_realizations: kept.len(),
        master_seed: seed,
        excluded,
        resampled: 0,
    })
}

/// `eta = sum_i ln|u_i / u|` per realization, with the total number of redrawn zeros.
pub fn eta_samples(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<(Vec<f64>, usize)> {
    check_center(params, dist)?;
    params.require_nonzero_u()?;
    let u = params.u;
    let per: Vec<(f64, usize)> = par_map(r, |k| {
        let (real, redraws) = sample_nonzero_realization(dist, params.n, seed, k);
        let eta = real.couplings().iter().map(|ui| (ui / u).abs().ln()).sum();
        Ok((eta, redraws))
    })?;
    let resampled = per.iter().map(|p| p.1).sum();
    Ok((per.into_iter().map(|p| p.0).collect(), resampled))
}

/// Sample mean and variance of `eta`, to be compared with `N z1` and `N z2`.
pub fn estimate_eta_moments(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    check_realizations(r, 100)?;
    let (eta, resampled) = eta_samples(params, dist, r, seed)?;
    let rf = r as f64;
    let (mean, mean_err) = mean_and_stderr(&eta);
    let m2 = eta.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rf;
    let m4 = eta.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / rf;
    let var = m2 * rf / (rf - 1.0);
    let var_err = ((m4 - m2 * m2).max(0.0) / rf).sqrt();
    Ok(EnsembleEstimate {
        quantity: Quantity::EtaMoments,
        values: vec![mean, var],
        stderr: vec![mean_err, var_err],
        n_realizations: r,
        master_seed: seed,
        excluded: 0,
        resampled,
    })
}

/// Per-dimer `|psi|^2` of the two states closest to zero energy, summed over
/// both states and both sublattices, normalized to total weight 2.
pub fn wavefunction_profile(params: &ChainParams, real: &Realization) -> Result<Vec<f64>> {
    if params.bc != BoundaryCondition::Open {
        return Err(Error::InvalidParameter("edge profiles need an open chain".into()));
    }
    let m = build_chain(params, real)?;
    let spectrum = eigenvalues_tridiagonal(&m)?;
    let pair = near_zero_pair(&m, &spectrum)?;
    let mut profile: Vec<f64> = (0..params.n)
        .map(|d| {
            [&pair.plus, &pair.minus]
                .iter()
                .map(|v| v[2 * d].powi(2) + v[2 * d + 1].powi(2))
                .sum()
        })
        .collect();
    let total: f64 = profile.iter().sum();
    for p in &mut profile {
        *p *= 2.0 / total;
    }
    Ok(profile)
}

/// Realization average of [`wavefunction_profile`]; `values[n]` is dimer `n + 1`.
pub fn estimate_wavefunction_profile(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    check_realizations(r, 1)?;
    check_center(params, dist)?;
    let profiles = par_map(r, |k| {
        wavefunction_profile(params, &sample_realization(dist, params.n, seed, k))
    })?;
    let mut values = Vec::with_capacity(params.n);
    let mut stderr = Vec::with_capacity(params.n);
    for d in 0..params.n {
        let column: Vec<f64> = profiles.iter().map(|p| p[d]).collect();
        let (mean, err) = mean_and_stderr(&column);
        values.push(mean);
        stderr.push(err);
    }
    Ok(EnsembleEstimate {
        quantity: Quantity::WavefunctionProfile,
        values,
        stderr,
        n_realizations: r,
        master_seed: seed,
        excluded: 0,
        resampled: 0,
    })
}

/// Spectral gap `2 min|E_j|` of every realization.
pub fn gap_samples(params: &ChainParams, dist: &FlatDistribution, r: usize, seed: u64) -> Result<Vec<f64>> {
    check_center(params, dist)?;
    par_map(r, |k| {
        Ok(chain_spectrum(params, &sample_realization(dist, params.n, seed, k))?.gap)
    })
}

pub fn estimate_mean_gap(
    params: &ChainParams,
    dist: &FlatDistribution,
    r: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    check_realizations(r, 1)?;
    let gaps = gap_samples(params, dist, r, seed)?;
    let (mean, err) = mean_and_stderr(&gaps);
    Ok(EnsembleEstimate {
        quantity: Quantity::MeanGap,
        values: vec![mean],
        stderr: vec![err],
        n_realizations: r,
        master_seed: seed,
        excluded: 0,
        resampled: 0,
    })
}

/// Sum of the first and last `width` entries of a profile, over its total.
pub fn edge_weight_fraction(profile: &[f64], width: usize) -> f64 {
    let n = profile.len();
    let width = width.min(n / 2);
    let edge: f64 = profile[..width].iter().sum::<f64>() + profile[n - width..].iter().sum::<f64>();
    edge / profile.iter().sum::<f64>()
}
