//! Disorder-averaged Green function of the clean chain plus random u-bonds,
//! to first order in the disorder variance.
//!
//! The averaged self-energy is `gamma^2 (f sigma_0 + g sigma_x)`; it shifts
//! `omega -> omega - gamma^2 f` and `u -> u + gamma^2 g` in the bare resolvent.
//! `f` and `g` are Brillouin-zone integrals, evaluated here either by adaptive
//! quadrature or by the midgap narrow-peak forms valid for `|u - w| << u`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, QuadOptions};

/// Absolute tolerance of the Brillouin-zone quadratures (per real component).
pub const BZ_TOLERANCE: f64 = 1e-9;
/// Regulator used when none is given, in units of `u`.
pub const DEFAULT_ALPHA_OVER_U: f64 = 1e-6;

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BornParams {
    pub u: f64,
    pub w: f64,
    pub gamma: f64,
    /// Positive infinitesimal of the retarded prescription `omega + i alpha`.
    pub alpha: f64,
    pub omega: f64,
}

impl BornParams {
    pub fn new(u: f64, w: f64, gamma: f64, alpha: f64, omega: f64) -> Result<Self> {
        let p = Self {
            u,
            w,
            gamma,
            alpha,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    /// Midgap parameters with the default regulator `alpha = 1e-6 |u|`.
    pub fn midgap(u: f64, w: f64, gamma: f64) -> Result<Self> {
        Self::new(u, w, gamma, DEFAULT_ALPHA_OVER_U * u.abs(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regulator alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if ![self.u, self.w, self.gamma, self.alpha, self.omega]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidParameter("Born parameters must be finite".into()));
        }
        Ok(())
    }

    /// Dimerization `u - w`.
    pub fn delta(&self) -> f64 {
        self.u - self.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BornMethod {
    Quadrature,
    NarrowPeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BornFunctions {
    pub f: Complex64,
    pub g: Complex64,
    pub method: BornMethod,
}

/// `[z sigma_0 + (u + w cos k) sigma_x + w sin k sigma_y] / (z^2 - eps_k^2)`
/// with complex `z` and `u`, which covers both the bare and renormalized cases.
fn resolvent(z: Complex64, u: Complex64, w: f64, k: f64) -> Matrix2 {
    let a = u + w * k.cos();
    let b = Complex64::new(0.0, w * k.sin());
    let eps2 = u * u + w * w + 2.0 * u * w * k.cos();
    let den = z * z - eps2;
    [[z / den, (a - b) / den], [(a + b) / den, z / den]]
}

/// Retarded resolvent of the clean Bloch Hamiltonian at frequency `omega + i alpha`.
pub fn bare_greens_function(k: f64, p: &BornParams) -> Result<Matrix2> {
    p.validate()?;
    Ok(resolvent(
        Complex64::new(p.omega, p.alpha),
        Complex64::new(p.u, 0.0),
        p.w,
        k,
    ))
}

/// Breakpoints on `[0, pi]` refined geometrically toward each point where the
/// integrand peaks: the zone edge `k = pi` and, for in-band `omega`, the
/// resonance `eps_k = |omega|`.
fn bz_breakpoints(p: &BornParams) -> Vec<f64> {
    let (u, w) = (p.u, p.w);
    let scale = u.abs() + w.abs();
    let mut peaks = vec![PI];
    if u != 0.0 && w != 0.0 {
        let c = (p.omega * p.omega - u * u - w * w) / (2.0 * u * w);
        if c.abs() <= 1.0 {
            peaks.push(c.acos());
        }
    }
    let finest = 0.1 * p.alpha.min(p.delta().abs().hypot(p.alpha)) / scale.max(f64::MIN_POSITIVE);
    let mut points = vec![0.0, PI];
    for &c in &peaks {
        points.push(c);
        let mut h = finest;
        while h < PI {
            for x in [c - h, c + h] {
                if x > 0.0 && x < PI {
                    points.push(x);
                }
            }
            h *= 4.0;
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// `int_{-pi}^{pi} num(k) / ((omega + i alpha)^2 - eps_k^2) dk / 2 pi` for an even numerator.
fn bz_integral<F: Fn(f64) -> f64>(p: &BornParams, num: F, tol: f64) -> Result<Complex64> {
    let z = Complex64::new(p.omega, p.alpha);
    let (u, w) = (p.u, p.w);
    let integrand = |k: f64| num(k) / (z * z - (u * u + w * w + 2.0 * u * w * k.cos()));
    let points = bz_breakpoints(p);
    let opts = QuadOptions {
        abs_tol: tol,
        max_intervals: 20_000,
    };
    // the integrand is even in k: fold onto [0, pi]
    let re = integrate(|k| integrand(k).re, &points, opts)?;
    let im = integrate(|k| integrand(k).im, &points, opts)?;
    Ok(Complex64::new(re.value, im.value) / PI)
}

/// `f = int (omega + i alpha) / ((omega + i alpha)^2 - eps_k^2) dk / 2 pi`.
pub fn f_quadrature(p: &BornParams) -> Result<Complex64> {
    f_quadrature_tol(p, BZ_TOLERANCE)
}

pub fn f_quadrature_tol(p: &BornParams, tol: f64) -> Result<Complex64> {
    p.validate()?;
    let z = Complex64::new(p.omega, p.alpha);
    // numerator is the constant z; integrate 1/den and multiply, scaling the tolerance
    let inv = bz_integral(p, |_| 1.0, tol / z.norm().max(1e-300))?;
    Ok(z * inv)
}

/// `g = int (u + w cos k) / ((omega + i alpha)^2 - eps_k^2) dk / 2 pi`.
pub fn g_quadrature(p: &BornParams) -> Result<Complex64> {
    g_quadrature_tol(p, BZ_TOLERANCE)
}

pub fn g_quadrature_tol(p: &BornParams, tol: f64) -> Result<Complex64> {
    p.validate()?;
    bz_integral(p, |k| p.u + p.w * k.cos(), tol)
}

fn check_narrow(delta: f64, u: f64, alpha: f64) -> Result<()> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "narrow-peak forms are derived for delta >= 0, got {delta}"
        )));
    }
    if !(alpha > 0.0) || u == 0.0 {
        return Err(Error::InvalidParameter("need alpha > 0 and u != 0".into()));
    }
    Ok(())
}

/// Midgap `f ~ -i alpha / (2 u sqrt(delta^2 + alpha^2))`.
pub fn f_narrow_peak(delta: f64, u: f64, alpha: f64) -> Result<Complex64> {
    check_narrow(delta, u, alpha)?;
    Ok(Complex64::new(0.0, -alpha / (2.0 * u * delta.hypot(alpha))))
}

/// Midgap `g ~ -delta / (2 u sqrt(delta^2 + alpha^2))`.
pub fn g_narrow_peak(delta: f64, u: f64, alpha: f64) -> Result<Complex64> {
    check_narrow(delta, u, alpha)?;
    Ok(Complex64::new(-delta / (2.0 * u * delta.hypot(alpha)), 0.0))
}

/// Self-energy scalars by the chosen method. The narrow-peak forms are
/// midgap results and require `omega = 0`.
pub fn born_functions(p: &BornParams, method: BornMethod) -> Result<BornFunctions> {
    p.validate()?;
    let (f, g) = match method {
        BornMethod::Quadrature => (f_quadrature(p)?, g_quadrature(p)?),
        BornMethod::NarrowPeak => {
            if p.omega != 0.0 {
                return Err(Error::InvalidParameter(
                    "narrow-peak forms hold at omega = 0 only".into(),
                ));
            }
            (
                f_narrow_peak(p.delta(), p.u, p.alpha)?,
                g_narrow_peak(p.delta(), p.u, p.alpha)?,
            )
        }
    };
    Ok(BornFunctions { f, g, method })
}

/// Bare resolvent at `omega - gamma^2 f` and `u + gamma^2 g`.
pub fn averaged_greens_function(k: f64, p: &BornParams, funcs: &BornFunctions) -> Result<Matrix2> {
    p.validate()?;
    let g2 = p.gamma * p.gamma;
    let z = Complex64::new(p.omega, p.alpha) - g2 * funcs.f;
    let u = Complex64::new(p.u, 0.0) + g2 * funcs.g;
    Ok(resolvent(z, u, p.w, k))
}

/// Midgap density of states for `delta = u - w > 0`:
/// `alpha (1 + s) / (2 pi u sqrt((delta - gamma^2/2u)^2 + alpha^2 (1 + s)^2))`, `s = gamma^2 / (2 u delta)`.
pub fn midgap_dos(delta: f64, u: f64, gamma: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "midgap density is derived for delta > 0, got {delta}"
        )));
    }
    if !(alpha > 0.0) || !(u > 0.0) || !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(
            "need alpha > 0, u > 0, gamma >= 0".into(),
        ));
    }
    let g2 = gamma * gamma;
    let s = 1.0 + g2 / (2.0 * u * delta);
    let detuning = delta - g2 / (2.0 * u);
    Ok(alpha * s / (2.0 * PI * u * detuning.hypot(alpha * s)))
}

/// Disorder strength where the midgap density peaks: `gamma^2 = 2 u (u - w)`.
pub fn band_touch_gamma(u: f64, w: f64) -> Result<f64> {
    if !(u >= w && w > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "band touching needs u >= w > 0 (u = {u}, w = {w})"
        )));
    }
    let delta = u - w;
    Ok((2.0 * u * delta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::critical_gamma_weak;
    use crate::model::dispersion;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn inverse(m: &Matrix2) -> Matrix2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    }

    #[test]
    fn bare_function_inverts_z_minus_h() {
        let p = BornParams::new(1.0, 0.8, 0.0, 1e-3, 0.37).unwrap();
        for k in [-2.0, 0.0, 0.5, PI] {
            let g = bare_greens_function(k, &p).unwrap();
            let inv = inverse(&g);
            let h = crate::model::bloch_hamiltonian(1.0, 0.8, k);
            let z = c(0.37, 1e-3);
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j { z } else { c(0.0, 0.0) } - h[i][j];
                    assert!((inv[i][j] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_dimer_poles() {
        let near = |omega: f64| {
            let p = BornParams::new(1.0, 0.0, 0.0, 1e-6, omega).unwrap();
            bare_greens_function(1.3, &p).unwrap()[0][0].norm()
        };
        assert!(near(1.0) > 1e5);
        assert!(near(-1.0) > 1e5);
        assert!(near(0.5) < 10.0);
    }

    #[test]
    fn antihermitian_part_is_the_regulator() {
        let p = BornParams::new(1.0, 0.8, 0.0, 0.05, 0.3).unwrap();
        let k = 0.7;
        let g = bare_greens_function(k, &p).unwrap();
        // G - G^dagger = -2 i alpha G G^dagger for a resolvent
        for i in 0..2 {
            for j in 0..2 {
                let lhs = g[i][j] - g[j][i].conj();
                let gg: Complex64 = (0..2).map(|l| g[i][l] * g[j][l].conj()).sum();
                assert!((lhs - c(0.0, -2.0 * 0.05) * gg).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zone_edge_dispersion() {
        assert!((dispersion(1.0, 0.8, PI).abs() - 0.2).abs() < 1e-15);
        let p = BornParams::new(1.0, 0.8, 0.0, 1e-8, 0.2).unwrap();
        assert!(bare_greens_function(PI, &p).unwrap()[0][0].norm() > 1e6);
    }

    #[test]
    fn f_is_imaginary_at_midgap() {
        let p = BornParams::new(1.0, 0.9, 0.0, 1e-3, 0.0).unwrap();
        let f = f_quadrature(&p).unwrap();
        assert_eq!(f.re, 0.0);
        assert!(f.im < 0.0);
    }

    #[test]
    fn retarded_sign() {
        for omega in [-2.5, -1.0, -0.1, 0.0, 0.15, 0.6, 1.7, 3.0] {
            let p = BornParams::new(1.0, 0.8, 0.0, 1e-3, omega).unwrap();
            assert!(f_quadrature(&p).unwrap().im <= 0.0, "omega {omega}");
        }
    }

    #[test]
    fn g_vanishes_in_the_topological_phase() {
        let p = BornParams::new(0.8, 1.0, 0.0, 1e-8, 0.0).unwrap();
        assert!(g_quadrature(&p).unwrap().re.abs() < 1e-7);
    }

    // residue calculus: int (u + w cos k) / (u^2 + w^2 + 2uw cos k) dk/2pi = 1/u for |w| < |u|
    #[test]
    fn g_trivial_phase_contour_value() {
        let p = BornParams::new(1.0, 0.8, 0.0, 1e-9, 0.0).unwrap();
        assert!((g_quadrature(&p).unwrap().re + 1.0).abs() < 1e-7);
    }

    #[test]
    fn f_matches_narrow_peak() {
        let (u, delta, alpha) = (1.0, 0.01, 1e-5);
        let p = BornParams::new(u, u - delta, 0.0, alpha, 0.0).unwrap();
        let q = f_quadrature(&p).unwrap();
        let n = f_narrow_peak(delta, u, alpha).unwrap();
        assert!((q - n).norm() / n.norm() < 0.05);
    }

    #[test]
    fn f_converges_to_narrow_peak() {
        let mut last = f64::INFINITY;
        for delta in [0.1, 0.03, 0.01] {
            let alpha = 1e-3 * delta;
            let p = BornParams::new(1.0, 1.0 - delta, 0.0, alpha, 0.0).unwrap();
            let q = f_quadrature(&p).unwrap();
            let n = f_narrow_peak(delta, 1.0, alpha).unwrap();
            let rel = (q - n).norm() / n.norm();
            assert!(rel < last);
            last = rel;
        }
    }

    #[test]
    fn quadrature_is_stable_under_tighter_tolerance() {
        let p = BornParams::new(1.0, 0.97, 0.0, 1e-5, 0.0).unwrap();
        let (f1, f2) = (
            f_quadrature(&p).unwrap(),
            f_quadrature_tol(&p, 0.5 * BZ_TOLERANCE).unwrap(),
        );
        let (g1, g2) = (
            g_quadrature(&p).unwrap(),
            g_quadrature_tol(&p, 0.5 * BZ_TOLERANCE).unwrap(),
        );
        assert!((f1 - f2).norm() < BZ_TOLERANCE);
        assert!((g1 - g2).norm() < BZ_TOLERANCE);
    }

    #[test]
    fn narrow_peak_special_values() {
        let u = 1.5;
        assert_eq!(f_narrow_peak(0.0, u, 1e-4).unwrap(), c(0.0, -1.0 / (2.0 * u)));
        assert_eq!(g_narrow_peak(0.0, u, 1e-4).unwrap(), c(-0.0, 0.0));
        assert!(f_narrow_peak(0.1, u, 1e-14).unwrap().norm() < 1e-12);
        assert!((g_narrow_peak(0.1, u, 1e-14).unwrap().re + 1.0 / (2.0 * u)).abs() < 1e-12);
        let s = 2f64.sqrt();
        assert!((f_narrow_peak(0.2, u, 0.2).unwrap() - c(0.0, -1.0 / (2.0 * s * u))).norm() < 1e-15);
        assert!((g_narrow_peak(0.2, u, 0.2).unwrap() - c(-1.0 / (2.0 * s * u), 0.0)).norm() < 1e-15);
        assert!(f_narrow_peak(-0.1, u, 1e-3).is_err());
    }

    #[test]
    fn clean_average_is_bare() {
        let p = BornParams::new(1.0, 0.9, 0.0, 1e-4, 0.05).unwrap();
        let funcs = born_functions(&p, BornMethod::Quadrature).unwrap();
        for k in [0.0, 1.0, PI] {
            assert_eq!(
                averaged_greens_function(k, &p, &funcs).unwrap(),
                bare_greens_function(k, &p).unwrap()
            );
        }
    }

    #[test]
    fn averaged_function_diverges_at_touching() {
        let (u, delta): (f64, f64) = (1.0, 0.01);
        let gamma = (2.0 * u * delta).sqrt();
        let sizes: Vec<f64> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&alpha| {
                let p = BornParams::new(u, u - delta, gamma, alpha, 0.0).unwrap();
                let funcs = born_functions(&p, BornMethod::NarrowPeak).unwrap();
                averaged_greens_function(PI, &p, &funcs).unwrap()[0][0].norm()
            })
            .collect();
        assert!(sizes[1] > 50.0 * sizes[0] && sizes[2] > 50.0 * sizes[1]);
    }

    #[test]
    fn averaged_function_is_retarded() {
        let p = BornParams::new(1.0, 0.95, 0.2, 1e-3, 0.0).unwrap();
        let funcs = born_functions(&p, BornMethod::NarrowPeak).unwrap();
        for omega in [-0.5, -0.05, 0.0, 0.05, 0.5] {
            let q = BornParams { omega, ..p };
            for k in [0.0, 2.0, PI] {
                assert!(averaged_greens_function(k, &q, &funcs).unwrap()[0][0].im < 0.0);
            }
        }
    }

    #[test]
    fn dos_at_touching_is_universal() {
        for u in [0.5f64, 1.0, 2.0] {
            for alpha in [1e-3, 1e-6, 1e-9] {
                let delta = 0.02 * u;
                let gamma = (2.0 * u * delta).sqrt();
                let rho = midgap_dos(delta, u, gamma, alpha).unwrap();
                assert!((rho - 1.0 / (2.0 * PI * u)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn clean_gapped_dos_vanishes() {
        let a = midgap_dos(0.1, 1.0, 0.0, 1e-4).unwrap();
        let b = midgap_dos(0.1, 1.0, 0.0, 1e-8).unwrap();
        assert!(b < a && b < 1e-6);
        assert!(midgap_dos(-0.1, 1.0, 0.0, 1e-4).is_err());
    }

    #[test]
    fn dos_peaks_at_touching_gamma() {
        let (u, delta, alpha) = (1.0, 0.05, 1e-6);
        let step = 1e-4;
        let (best, _) = (1..5000)
            .map(|i| {
                let g = step * i as f64;
                (g, midgap_dos(delta, u, g, alpha).unwrap())
            })
            .fold((0.0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best - (2.0 * u * delta).sqrt()).abs() <= step);
    }

    #[test]
    fn touching_gamma_matches_weak_critical_strength() {
        assert_eq!(band_touch_gamma(1.0, 1.0).unwrap(), 0.0);
        assert!((band_touch_gamma(1.0, 0.8).unwrap() - 0.632_455_532_033_675_9).abs() < 1e-15);
        assert!(band_touch_gamma(0.8, 1.0).is_err());
        for i in 1..50 {
            let u = 0.3 * i as f64;
            let w = u * (1.0 - 0.017 * i as f64);
            assert_eq!(
                band_touch_gamma(u, w).unwrap(),
                critical_gamma_weak(u, w).unwrap()
            );
        }
    }
}
