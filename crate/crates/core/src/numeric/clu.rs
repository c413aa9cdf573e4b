//! Dense complex LU with partial pivoting, used for determinants.

use num_complex::Complex64;

/// Determinant in polar, log-scaled form: `det = exp(log_abs) * phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    /// Unit-modulus phase factor; zero when the matrix is singular.
    pub phase: Complex64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        self.phase * self.log_abs.exp()
    }

    pub fn arg(&self) -> f64 {
        self.phase.arg()
    }
}

/// Row-major `n x n` matrix. Zero multipliers are skipped, so sparse
/// banded inputs factor in roughly O(n^2).
pub fn log_det(mut a: Vec<Complex64>, n: usize) -> LogDet {
    assert_eq!(a.len(), n * n, "log_det: storage does not match n");
    let mut log_abs = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let (mut p, mut best) = (k, a[k * n + k].norm());
        for i in k + 1..n {
            let v = a[i * n + k].norm();
            if v > best {
                p = i;
                best = v;
            }
        }
        if best == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: Complex64::new(0.0, 0.0),
            };
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        let pivot = a[k * n + k];
        log_abs += best.ln();
        phase *= pivot / best;
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[i * n + k] = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                let upper = a[k * n + j];
                if upper != Complex64::new(0.0, 0.0) {
                    a[i * n + j] -= factor * upper;
                }
            }
        }
    }
    // Re-normalize accumulated rounding in the phase.
    let m = phase.norm();
    LogDet {
        log_abs,
        phase: phase / m,
    }
}
