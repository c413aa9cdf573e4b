//! The Z2 index of the chain, computed three ways:
//!
//! - winding of `det h(phi)` as the flux `phi` goes once around `[0, 2 pi]`
//!   (determinant by complex LU, phase increments summed on the principal branch);
//! - the product criterion `nu = [xi < 1]`, with
//!   `ln xi = N ln|u/w| + sum_i ln|u_i/u|` accumulated in log space;
//! - for clean chains, the Zak phase from a discretized Wilson loop over the
//!   lower Bloch band.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bloch_hamiltonian, build_flux_matrix, ChainParams, Realization};

pub const MIN_PHASE_SAMPLES: usize = 16;
pub const MAX_PHASE_SAMPLES: usize = 4096;
pub const MIN_MOMENTUM_SAMPLES: usize = 64;
/// `|det h|` below this at any flux sample marks the realization as critical.
pub const CRITICAL_DETERMINANT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingResult {
    pub nu: u8,
    /// Number of flux samples that resolved the winding.
    pub phase_samples: usize,
    /// Accumulated phase of `det h` over one flux period, radians.
    pub total_phase: f64,
}

/// `ln xi` for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiValue {
    pub log_xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    pub nu: u8,
    pub xi: XiValue,
    /// Some `u_i` was exactly zero; `xi = 0` and `nu = 1` by convention.
    pub zero_coupling: bool,
}

pub fn winding_integral(r: &Realization, w: f64, m_phi: usize) -> Result<WindingResult> {
    if m_phi < MIN_PHASE_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_PHASE_SAMPLES} flux samples required, got {m_phi}"
        )));
    }
    let critical_log = CRITICAL_DETERMINANT.ln();
    let phase_at = |phi: f64| -> Result<Complex64> {
        let det = build_flux_matrix(r, w, phi).det_lu();
        if !(det.log_abs >= critical_log) {
            return Err(Error::CriticalRealization(format!(
                "|det h({phi:.6})| = exp({:.3}) below {CRITICAL_DETERMINANT:e}",
                det.log_abs
            )));
        }
        Ok(det.phase)
    };

    let start = phase_at(0.0)?;
    let mut samples = m_phi;
    'refine: loop {
        let mut total = 0.0;
        let mut prev = start;
        let m = samples;
        for j in 1..=m {
            let current = if j == m {
                start
            } else {
                phase_at(2.0 * PI * j as f64 / m as f64)?
            };
            let step = (current * prev.conj()).arg();
            if step.abs() >= 0.5 * PI {
                samples *= 2;
                if samples > MAX_PHASE_SAMPLES.max(m_phi) {
                    return Err(Error::UnresolvedWinding { samples: samples / 2 });
                }
                continue 'refine;
            }
            total += step;
            prev = current;
        }
        let turns = total / (2.0 * PI);
        let nu = turns.round();
        debug_assert!((turns - nu).abs() < 1e-6);
        return match nu as i64 {
            0 => Ok(WindingResult {
                nu: 0,
                phase_samples: samples,
                total_phase: total,
            }),
            1 => Ok(WindingResult {
                nu: 1,
                phase_samples: samples,
                total_phase: total,
            }),
            other => Err(Error::CriticalRealization(format!(
                "winding {other} outside {{0, 1}}"
            ))),
        };
    }
}

/// `ln xi = N ln|u/w| + sum_i ln|u_i/u|`.
pub fn log_xi(r: &Realization, params: &ChainParams) -> Result<XiValue> {
    r.check_matches(params)?;
    params.require_nonzero_u()?;
    if params.w == 0.0 {
        return Err(Error::InvalidParameter("w must be nonzero".into()));
    }
    let u = params.u;
    let disorder: f64 = r.couplings().iter().map(|ui| (ui / u).abs().ln()).sum();
    Ok(XiValue {
        log_xi: params.n as f64 * (u / params.w).abs().ln() + disorder,
    })
}

/// `nu = theta(1 - xi)`; an exact tie `xi = 1` is an error.
pub fn winding_closed_form(r: &Realization, params: &ChainParams) -> Result<ClosedFormResult> {
    let xi = log_xi(r, params)?;
    if r.couplings().contains(&0.0) {
        return Ok(ClosedFormResult {
            nu: 1,
            xi: XiValue {
                log_xi: f64::NEG_INFINITY,
            },
            zero_coupling: true,
        });
    }
    if xi.log_xi == 0.0 {
        return Err(Error::CriticalRealization("xi = 1 exactly".into()));
    }
    Ok(ClosedFormResult {
        nu: u8::from(xi.log_xi < 0.0),
        xi,
        zero_coupling: false,
    })
}

/// Lower-band eigenvector of a 2x2 Hermitian matrix (arbitrary gauge).
fn lower_eigenvector(h: &[[Complex64; 2]; 2]) -> [Complex64; 2] {
    let (a, d) = (h[0][0].re, h[1][1].re);
    let b = h[0][1];
    let lambda = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    let v1 = [b, Complex64::new(lambda - a, 0.0)];
    let v2 = [Complex64::new(lambda - d, 0.0), b.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let s = n.sqrt();
    [v[0] / s, v[1] / s]
}

/// Zak phase of the lower band from the Wilson loop of `m_k` overlaps, in `(-pi, pi]`.
pub fn zak_phase(u: f64, w: f64, m_k: usize) -> Result<f64> {
    if u.abs() == w.abs() {
        return Err(Error::Gapless(u.abs()));
    }
    if m_k < MIN_MOMENTUM_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_MOMENTUM_SAMPLES} momentum samples required, got {m_k}"
        )));
    }
    let states: Vec<[Complex64; 2]> = (0..m_k)
        .map(|j| {
            let k = -PI + 2.0 * PI * j as f64 / m_k as f64;
            lower_eigenvector(&bloch_hamiltonian(u, w, k))
        })
        .collect();
    let mut loop_product = Complex64::new(1.0, 0.0);
    for j in 0..m_k {
        let (a, b) = (&states[j], &states[(j + 1) % m_k]);
        let overlap = a[0].conj() * b[0] + a[1].conj() * b[1];
        loop_product *= overlap / overlap.norm();
    }
    Ok(-loop_product.arg())
}

/// Clean-limit index `round(phi_Zak / pi) mod 2`.
pub fn zak_phase_clean(u: f64, w: f64, m_k: usize) -> Result<u8> {
    let phase = zak_phase(u, w, m_k)?;
    Ok(((phase / PI).round() as i64).rem_euclid(2) as u8)
}
