//! Quick internal consistency checks, run by `sshlab selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sshlab_core::analytic::{critical_w, flat_cumulants, mean_nu_analytic, z1_quadrature, z2_quadrature};
use sshlab_core::born::{band_touch_gamma, midgap_dos};
use sshlab_core::ensemble::{estimate_mean_nu, sample_realization, FlatDistribution};
use sshlab_core::invariant::{winding_closed_form, winding_integral, zak_phase_clean};
use sshlab_core::model::{build_chain, BoundaryCondition, ChainParams, Realization};
use sshlab_core::spectrum::{eigenvalues_dense, eigenvalues_tridiagonal};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("winding integral equals product criterion", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut mismatches = 0;
            for k in 0..100 {
                let n = rng.random_range(4..=48);
                let gamma = rng.random_range(0.0..2.0);
                let w = rng.random_range(0.5..1.5);
                let p = ChainParams::new(n, 1.0, w, BoundaryCondition::Periodic).map_err(err)?;
                let r = sample_realization(&FlatDistribution::new(gamma, 1.0).map_err(err)?, n, 2, k);
                let a = winding_integral(&r, w, 64).map_err(err)?.nu;
                let b = winding_closed_form(&r, &p).map_err(err)?.nu;
                mismatches += usize::from(a != b);
            }
            if mismatches == 0 {
                Ok("100 realizations".into())
            } else {
                Err(format!("{mismatches} mismatches"))
            }
        }),
        check("clean index by winding, product and Zak phase", || {
            for i in 0..20 {
                let w = 0.5 + 0.05 * i as f64 + 0.01;
                let p = ChainParams::new(20, 1.0, w, BoundaryCondition::Periodic).map_err(err)?;
                let r = Realization::clean(&p);
                let expect = u8::from(w > 1.0);
                let got = [
                    winding_integral(&r, w, 64).map_err(err)?.nu,
                    winding_closed_form(&r, &p).map_err(err)?.nu,
                    zak_phase_clean(1.0, w, 128).map_err(err)?,
                ];
                if got.iter().any(|&x| x != expect) {
                    return Err(format!("w = {w}: {got:?}"));
                }
            }
            Ok("20 pairs".into())
        }),
        check("averaged index is 1/2 on the critical surface", || {
            for i in 1..=20 {
                let gamma = 0.1 * i as f64;
                let p =
                    mean_nu_analytic(100, 1.0, critical_w(1.0, gamma).map_err(err)?, gamma).map_err(err)?;
                if (p - 0.5).abs() > 1e-10 {
                    return Err(format!("gamma = {gamma}: {p}"));
                }
            }
            Ok("gamma in (0, 2]".into())
        }),
        check("flat cumulants agree with quadrature", || {
            for gamma in [0.05, 0.3, 0.9, 1.5] {
                let d = FlatDistribution::new(gamma, 1.0).map_err(err)?;
                let c = flat_cumulants(gamma, 1.0).map_err(err)?;
                let dz1 = (c.z1 - z1_quadrature(&d, 1.0).map_err(err)?).abs();
                let dz2 = (c.z2 - z2_quadrature(&d, 1.0).map_err(err)?).abs();
                if dz1 > 1e-8 || dz2 > 1e-8 {
                    return Err(format!("gamma = {gamma}: |dz1| = {dz1:e}, |dz2| = {dz2:e}"));
                }
            }
            Ok("4 strengths".into())
        }),
        check("tridiagonal and dense eigensolvers agree", || {
            let mut worst: f64 = 0.0;
            for k in 0..10 {
                let p = ChainParams::new(30, 1.0, 0.9, BoundaryCondition::Open).map_err(err)?;
                let r = sample_realization(&FlatDistribution::new(0.5, 1.0).map_err(err)?, 30, 3, k);
                let m = build_chain(&p, &r).map_err(err)?;
                let a = eigenvalues_tridiagonal(&m).map_err(err)?;
                let b = eigenvalues_dense(&m).map_err(err)?;
                for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                    worst = worst.max((x - y).abs());
                }
                worst = worst.max(a.chiral_mismatch());
            }
            if worst <= 1e-10 {
                Ok(format!("max deviation {worst:e}"))
            } else {
                Err(format!("max deviation {worst:e}"))
            }
        }),
        check("midgap density at band touching", || {
            for u in [0.5, 1.0, 2.0] {
                let w = 0.97 * u;
                let gamma = band_touch_gamma(u, w).map_err(err)?;
                let rho = midgap_dos(u - w, u, gamma, 1e-6 * u).map_err(err)?;
                let expect = 1.0 / (2.0 * std::f64::consts::PI * u);
                if (rho - expect).abs() > 1e-10 {
                    return Err(format!("u = {u}: {rho} vs {expect}"));
                }
            }
            Ok("u in {0.5, 1, 2}".into())
        }),
        check("estimates do not depend on thread count", || {
            let p = ChainParams::new(50, 1.0, 0.95, BoundaryCondition::Open).map_err(err)?;
            let d = FlatDistribution::new(0.4, 1.0).map_err(err)?;
            let run = |threads| -> Result<_, String> {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(err)?;
                pool.install(|| estimate_mean_nu(&p, &d, 500, 4)).map_err(err)
            };
            if run(1)? == run(4)? {
                Ok("1 vs 4 threads".into())
            } else {
                Err("estimates differ".into())
            }
        }),
    ]
}
