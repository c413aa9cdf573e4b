//! Closed-form averages over the disorder ensemble.
//!
//! With `eta = sum_i ln|1 + du_i/u|` Gaussian by the central limit theorem,
//! `<nu> = P(N ln|u/w| + eta < 0)` is an erfc of the first two cumulants
//! `z1`, `z2` of `ln|1 + eps/u|`. The cumulants come either from adaptive
//! quadrature over an arbitrary density or, for the flat density, in closed form.
//!
//! The log is taken of `|1 + eps/u|` throughout, so supports that reach
//! negative couplings (`sqrt(3) gamma > |u|`) are handled the same way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, QuadOptions};
use crate::numeric::special::{erf, erfc};

/// Allowed deviation of the total probability from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
/// Absolute tolerance of the cumulant quadratures.
pub const CUMULANT_TOLERANCE: f64 = 1e-10;

/// Below this value of `x = sqrt(3) gamma / |u|` the flat cumulants use their
/// Taylor series; above it the logarithmic closed forms are well conditioned.
const SERIES_CUTOFF: f64 = 0.25;

/// Density of the coupling deviations `eps = u_i - u`.
pub trait DisorderDensity {
    fn pdf(&self, eps: f64) -> f64;
    /// Closed support `[lo, hi]`; `lo == hi` is a point mass.
    fn support(&self) -> (f64, f64);
    /// Interior points where the density is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CumulantMethod {
    Quadrature,
    FlatClosedForm,
    SmallGammaExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub z1: f64,
    pub z2: f64,
    pub method: CumulantMethod,
}

/// `z1` of the flat density together with how it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatZ1 {
    pub value: f64,
    pub method: CumulantMethod,
    /// `sqrt(3) gamma == |u|` exactly; the finite limit `ln 2 - 1` was returned.
    pub removable_point: bool,
}

fn breakpoints<D: DisorderDensity + ?Sized>(density: &D, u: f64) -> Result<Vec<f64>> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::InvalidParameter(
            "mean coupling u must be finite and nonzero".into(),
        ));
    }
    let (lo, hi) = density.support();
    let mut points = vec![lo, hi];
    points.extend(density.kinks().into_iter().filter(|&x| x > lo && x < hi));
    // ln|1 + eps/u| is singular at eps = -u
    if -u > lo && -u < hi {
        points.push(-u);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(points)
}

fn moment<D, F>(density: &D, points: &[f64], g: F) -> Result<f64>
where
    D: DisorderDensity + ?Sized,
    F: Fn(f64) -> f64,
{
    let opts = QuadOptions {
        abs_tol: CUMULANT_TOLERANCE,
        ..QuadOptions::default()
    };
    Ok(integrate(|e| g(e) * density.pdf(e), points, opts)?.value)
}

fn check_normalized<D: DisorderDensity + ?Sized>(density: &D, points: &[f64]) -> Result<()> {
    let total = moment(density, points, |_| 1.0)?;
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { integral: total });
    }
    Ok(())
}

/// `z1 = int ln|1 + eps/u| p(eps) d eps`.
pub fn z1_quadrature<D: DisorderDensity + ?Sized>(density: &D, u: f64) -> Result<f64> {
    let points = breakpoints(density, u)?;
    if points.len() < 2 {
        return Ok(0.0);
    }
    check_normalized(density, &points)?;
    moment(density, &points, |e| (1.0 + e / u).abs().ln())
}

/// `z2 = int ln^2|1 + eps/u| p(eps) d eps - z1^2`.
pub fn z2_quadrature<D: DisorderDensity + ?Sized>(density: &D, u: f64) -> Result<f64> {
    let points = breakpoints(density, u)?;
    if points.len() < 2 {
        return Ok(0.0);
    }
    check_normalized(density, &points)?;
    let z1 = moment(density, &points, |e| (1.0 + e / u).abs().ln())?;
    let second = moment(density, &points, |e| (1.0 + e / u).abs().ln().powi(2))?;
    Ok((second - z1 * z1).max(0.0))
}

pub fn cumulants_quadrature<D: DisorderDensity + ?Sized>(density: &D, u: f64) -> Result<Cumulants> {
    Ok(Cumulants {
        z1: z1_quadrature(density, u)?,
        z2: z2_quadrature(density, u)?,
        method: CumulantMethod::Quadrature,
    })
}

fn check_flat_args(gamma: f64, u: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "disorder strength must be >= 0, got {gamma}"
        )));
    }
    if u == 0.0 || !u.is_finite() {
        return Err(Error::InvalidParameter(
            "mean coupling u must be finite and nonzero".into(),
        ));
    }
    Ok(3f64.sqrt() * gamma / u.abs())
}

/// `-sum_k x^{2k} / (2k (2k + 1))`
fn z1_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= x2;
        let kf = k as f64;
        let add = term / (2.0 * kf * (2.0 * kf + 1.0));
        sum += add;
        if add < 1e-18 * sum {
            break;
        }
    }
    -sum
}

/// `E[ln^2(1 + s)]`, `s` uniform on `[-x, x]`: `sum_k H_{2k-1} x^{2k} / (k (2k + 1))`.
fn second_moment_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= x2;
        let kf = k as f64;
        harmonic += if k == 1 {
            1.0
        } else {
            1.0 / (2.0 * kf - 2.0) + 1.0 / (2.0 * kf - 1.0)
        };
        let add = harmonic * term / (kf * (2.0 * kf + 1.0));
        sum += add;
        if add < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Flat-density `z1` with evaluation details.
pub fn z1_flat(gamma: f64, u: f64) -> Result<FlatZ1> {
    let x = check_flat_args(gamma, u)?;
    if x == 0.0 {
        return Ok(FlatZ1 {
            value: 0.0,
            method: CumulantMethod::FlatClosedForm,
            removable_point: false,
        });
    }
    if x < SERIES_CUTOFF {
        return Ok(FlatZ1 {
            value: z1_series(x),
            method: CumulantMethod::SmallGammaExpansion,
            removable_point: false,
        });
    }
    if x == 1.0 {
        return Ok(FlatZ1 {
            value: std::f64::consts::LN_2 - 1.0,
            method: CumulantMethod::FlatClosedForm,
            removable_point: true,
        });
    }
    // -1 + (u / 2 sqrt3 gamma) ln((1 + x)/|1 - x|) + 1/2 ln|1 - x^2|, regrouped
    // so that the two ln|1 - x| pieces cancel analytically near x = 1.
    let value = -1.0 + 0.5 * (1.0 + 1.0 / x) * x.ln_1p() + 0.5 * (1.0 - 1.0 / x) * (1.0 - x).abs().ln();
    Ok(FlatZ1 {
        value,
        method: CumulantMethod::FlatClosedForm,
        removable_point: false,
    })
}

/// `-1 + (u / 2 sqrt(3) gamma) ln((u + sqrt(3) gamma) / |u - sqrt(3) gamma|)
///  + 1/2 ln|1 - 3 gamma^2 / u^2|`
pub fn z1_flat_closed_form(gamma: f64, u: f64) -> Result<f64> {
    Ok(z1_flat(gamma, u)?.value)
}

/// Flat-density `z2` from the antiderivative `y (ln^2|y| - 2 ln|y| + 2)` of `ln^2|y|`.
pub fn z2_flat_closed_form(gamma: f64, u: f64) -> Result<f64> {
    let x = check_flat_args(gamma, u)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let z1 = z1_flat(gamma, u)?.value;
    let second = if x < SERIES_CUTOFF {
        second_moment_series(x)
    } else {
        let anti = |y: f64| {
            if y == 0.0 {
                0.0
            } else {
                let l = y.abs().ln();
                y * (l * l - 2.0 * l + 2.0)
            }
        };
        (anti(1.0 + x) - anti(1.0 - x)) / (2.0 * x)
    };
    Ok((second - z1 * z1).max(0.0))
}

/// Both cumulants of the flat density, by series or closed form.
pub fn flat_cumulants(gamma: f64, u: f64) -> Result<Cumulants> {
    let z1 = z1_flat(gamma, u)?;
    Ok(Cumulants {
        z1: z1.value,
        z2: z2_flat_closed_form(gamma, u)?,
        method: z1.method,
    })
}

fn check_couplings(u: f64, w: f64) -> Result<()> {
    if u == 0.0 || w == 0.0 || !u.is_finite() || !w.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "u and w must be finite and nonzero (u = {u}, w = {w})"
        )));
    }
    Ok(())
}

/// `<nu>` from the cumulants: `1/2 erfc(sqrt(N) (ln|u/w| + z1) / sqrt(2 z2))`.
pub fn mean_nu_from_cumulants(n: usize, u: f64, w: f64, c: &Cumulants) -> Result<f64> {
    check_couplings(u, w)?;
    let drift = (u / w).abs().ln() + c.z1;
    if c.z2 == 0.0 {
        if drift == 0.0 {
            return Err(Error::CriticalRealization(
                "z2 = 0 on the critical surface: <nu> undefined".into(),
            ));
        }
        return Ok(if drift < 0.0 { 1.0 } else { 0.0 });
    }
    let arg = (n as f64).sqrt() * drift / (2.0 * c.z2).sqrt();
    Ok(0.5 * erfc(arg))
}

/// Averaged index for the flat density. `gamma = 0` is the exact step `[|w| > |u|]`.
pub fn mean_nu_analytic(n: usize, u: f64, w: f64, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimer count must be >= 1".into()));
    }
    check_couplings(u, w)?;
    if gamma == 0.0 {
        if u.abs() == w.abs() {
            return Err(Error::CriticalRealization("|u| = |w| in the clean chain".into()));
        }
        return Ok(if w.abs() > u.abs() { 1.0 } else { 0.0 });
    }
    mean_nu_from_cumulants(n, u, w, &flat_cumulants(gamma, u)?)
}

/// Critical inter-dimer coupling `w0 = u exp(z1)`.
pub fn critical_w(u: f64, gamma: f64) -> Result<f64> {
    Ok(u * z1_flat_closed_form(gamma, u)?.exp())
}

/// Weak-disorder, weak-dimerization critical strength `sqrt(2 u (u - w))`.
pub fn critical_gamma_weak(u: f64, w: f64) -> Result<f64> {
    if !(u >= w && w > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weak-disorder critical strength needs u >= w > 0 (u = {u}, w = {w})"
        )));
    }
    Ok((2.0 * u * (u - w)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceMode {
    /// `<nu> (1 - <nu>)` with the full flat cumulants.
    General,
    /// `1/4 (1 - erf^2[sqrt(N/2) ((u - w)/gamma - gamma/2u)])`.
    WeakLimit,
}

/// Finite-size variance of the binary index.
pub fn variance_nu(n: usize, u: f64, w: f64, gamma: f64, mode: VarianceMode) -> Result<f64> {
    match mode {
        VarianceMode::General => {
            let p = mean_nu_analytic(n, u, w, gamma)?;
            Ok(p * (1.0 - p))
        }
        VarianceMode::WeakLimit => {
            check_couplings(u, w)?;
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter(
                    "weak-limit variance needs gamma > 0".into(),
                ));
            }
            let e = erf((0.5 * n as f64).sqrt() * ((u - w) / gamma - gamma / (2.0 * u)));
            Ok(0.25 * (1.0 - e * e))
        }
    }
}

/// Order-of-magnitude width `|u| / sqrt(N)` of the fluctuation region.
pub fn fluctuation_width(u: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimer count must be >= 1".into()));
    }
    Ok(u.abs() / (n as f64).sqrt())
}

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidParameter(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Disorder strength in `[lo, hi]` where `<nu> = 1/2`, i.e. `z1(gamma) = ln|w/u|`.
pub fn critical_gamma_bisect(u: f64, w: f64, lo: f64, hi: f64) -> Result<f64> {
    check_couplings(u, w)?;
    let target = (w / u).abs().ln();
    bisect(|g| Ok(z1_flat_closed_form(g, u)? - target), lo, hi, 1e-13)
}
