//! One function per experiment, each turning a [`RunConfig`] into a [`Table`].
//!
//! All Monte Carlo draws come from the run's master seed: realization `k` at
//! every grid point uses stream `k`, so neighbouring grid points share their
//! underlying uniform variates and differ only through `gamma` and `w`.

use num_complex::Complex64;
use rayon::prelude::*;
use sshlab_core::analytic::{critical_w, mean_nu_analytic};
use sshlab_core::born::{f_narrow_peak, f_quadrature, g_narrow_peak, g_quadrature, midgap_dos, BornParams};
use sshlab_core::ensemble::{
    edge_weight_fraction, estimate_mean_gap, estimate_mean_nu, estimate_wavefunction_profile,
    sample_realization, FlatDistribution,
};
use sshlab_core::invariant::{winding_closed_form, winding_integral, zak_phase_clean, MIN_MOMENTUM_SAMPLES};
use sshlab_core::model::{BoundaryCondition, ChainParams};
use sshlab_core::spectrum::chain_spectrum;

use crate::config::{Experiment, RunConfig};
use crate::error::Result;
use crate::output::{Cell, Table};

/// Flux samples the winding integral starts from (it refines on its own).
pub const FLUX_SAMPLES: usize = 64;
/// Dimers counted at each end for the edge-weight column.
pub const EDGE_WIDTH: usize = 5;

pub fn run(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Invariant => run_invariant(cfg),
        Experiment::MeanNuCurve => run_mean_nu_curve(cfg),
        Experiment::PhaseDiagram => run_phase_diagram(cfg),
        Experiment::EdgeModes => run_edge_modes(cfg),
        Experiment::GapScan => run_gap_scan(cfg),
        Experiment::Born => run_born(cfg),
    }
}

fn dist(cfg: &RunConfig, gamma: f64) -> Result<FlatDistribution> {
    Ok(FlatDistribution::new(gamma, cfg.params.u)?)
}

fn analytic_or_nan(n: usize, u: f64, w: f64, gamma: f64) -> f64 {
    mean_nu_analytic(n, u, w, gamma).unwrap_or(f64::NAN)
}

/// Per realization: flux winding, product criterion, `ln xi`, and for clean
/// chains the Zak-phase index. Critical realizations get NaN entries.
pub fn run_invariant(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params;
    let jobs: Vec<(f64, u64)> = cfg
        .gamma_grid
        .iter()
        .flat_map(|&g| (0..cfg.realizations as u64).map(move |k| (g, k)))
        .collect();
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(gamma, k)| -> Result<Vec<Cell>> {
            let r = sample_realization(&dist(cfg, gamma)?, p.n, cfg.master_seed, k);
            let winding = winding_integral(&r, p.w, FLUX_SAMPLES).ok();
            let closed = winding_closed_form(&r, &p).ok();
            let zak = if gamma == 0.0 {
                zak_phase_clean(p.u, p.w, MIN_MOMENTUM_SAMPLES).ok()
            } else {
                None
            };
            let opt = |x: Option<u8>| x.map_or(Cell::Float(f64::NAN), Cell::from);
            Ok(vec![
                gamma.into(),
                Cell::Int(k as i64),
                opt(winding.map(|x| x.nu)),
                opt(closed.map(|x| x.nu)),
                closed.map_or(f64::NAN, |x| x.xi.log_xi).into(),
                winding.map_or(Cell::Float(f64::NAN), |x| x.phase_samples.into()),
                opt(zak),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new([
        "gamma",
        "realization",
        "nu_winding",
        "nu_closed_form",
        "log_xi",
        "flux_samples",
        "nu_zak",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Monte Carlo `<nu>(gamma)` next to the erfc formula.
pub fn run_mean_nu_curve(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params;
    let mut t = Table::new([
        "gamma",
        "mc_mean_nu",
        "mc_stderr",
        "analytic_mean_nu",
        "n_excluded",
    ]);
    for &gamma in &cfg.gamma_grid {
        let e = estimate_mean_nu(&p, &dist(cfg, gamma)?, cfg.realizations, cfg.master_seed)?;
        t.push(vec![
            gamma.into(),
            e.value().into(),
            e.error().into(),
            analytic_or_nan(p.n, p.u, p.w, gamma).into(),
            e.excluded.into(),
        ]);
    }
    Ok(t)
}

/// `w = u sqrt(1 - gamma^2 / 2u^2)`, NaN once the root turns imaginary.
pub fn weak_boundary(u: f64, gamma: f64) -> f64 {
    let s = 1.0 - gamma * gamma / (2.0 * u * u);
    if s >= 0.0 {
        u * s.sqrt()
    } else {
        f64::NAN
    }
}

/// Gap and index over the `(gamma, w)` grid for one realization: the same
/// uniform variates (stream 0) are rescaled to every `gamma`.
pub fn run_phase_diagram(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params;
    let jobs: Vec<(f64, f64)> = cfg
        .gamma_grid
        .iter()
        .flat_map(|&g| cfg.w_grid.iter().map(move |&w| (g, w)))
        .collect();
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(gamma, w)| -> Result<Vec<Cell>> {
            let params = ChainParams { w, ..p };
            let r = sample_realization(&dist(cfg, gamma)?, p.n, cfg.master_seed, 0);
            let gap = chain_spectrum(&params, &r)?.gap;
            let nu = winding_closed_form(&r, &params).map_or(Cell::Float(f64::NAN), |c| c.nu.into());
            Ok(vec![
                gamma.into(),
                w.into(),
                (gap / (2.0 * p.u.abs())).ln().into(),
                nu,
                critical_w(p.u, gamma)?.into(),
                weak_boundary(p.u, gamma).into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(["gamma", "w", "log_gap", "nu", "w0_analytic", "w0_weak"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Averaged near-zero `|psi|^2` per dimer for each `gamma`, with `<nu>`.
pub fn run_edge_modes(cfg: &RunConfig) -> Result<Table> {
    let p = ChainParams {
        bc: BoundaryCondition::Open,
        ..cfg.params
    };
    let mut columns: Vec<String> = ["gamma", "mean_nu", "mean_nu_stderr", "edge_weight"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    columns.extend((1..=p.n).map(|d| format!("psi2_{d}")));
    let mut t = Table::new(columns);
    for &gamma in &cfg.gamma_grid {
        let d = dist(cfg, gamma)?;
        let profile = estimate_wavefunction_profile(&p, &d, cfg.realizations, cfg.master_seed)?;
        let nu = estimate_mean_nu(&p, &d, cfg.realizations, cfg.master_seed)?;
        let mut row = vec![
            gamma.into(),
            nu.value().into(),
            nu.error().into(),
            edge_weight_fraction(&profile.values, EDGE_WIDTH).into(),
        ];
        row.extend(profile.values.iter().map(|&x| Cell::from(x)));
        t.push(row);
    }
    Ok(t)
}

/// Mean spectral gap and `<nu>` versus `gamma`.
pub fn run_gap_scan(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params;
    let mut t = Table::new(["gamma", "mean_gap", "gap_stderr", "mc_mean_nu"]);
    for &gamma in &cfg.gamma_grid {
        let d = dist(cfg, gamma)?;
        let gap = estimate_mean_gap(&p, &d, cfg.realizations, cfg.master_seed)?;
        let nu = estimate_mean_nu(&p, &d, cfg.realizations, cfg.master_seed)?;
        t.push(vec![
            gamma.into(),
            gap.value().into(),
            gap.error().into(),
            nu.value().into(),
        ]);
    }
    Ok(t)
}

/// Midgap self-energy scalars, both ways, and the density of states for
/// `delta = u - w` over the `w` grid and every `gamma`.
pub fn run_born(cfg: &RunConfig) -> Result<Table> {
    let (u, alpha) = (cfg.params.u, cfg.alpha);
    let per_w: Vec<Vec<Vec<Cell>>> = cfg
        .w_grid
        .par_iter()
        .map(|&w| -> Result<Vec<Vec<Cell>>> {
            let delta = u - w;
            let bp = BornParams::new(u, w, 0.0, alpha, 0.0)?;
            let (f, g) = (f_quadrature(&bp)?, g_quadrature(&bp)?);
            let nan = Complex64::new(f64::NAN, f64::NAN);
            let (fn_, gn) = if delta >= 0.0 {
                (f_narrow_peak(delta, u, alpha)?, g_narrow_peak(delta, u, alpha)?)
            } else {
                (nan, nan)
            };
            cfg.gamma_grid
                .iter()
                .map(|&gamma| {
                    let rho = if delta > 0.0 && u > 0.0 {
                        midgap_dos(delta, u, gamma, alpha)?
                    } else {
                        f64::NAN
                    };
                    Ok(vec![
                        delta.into(),
                        gamma.into(),
                        alpha.into(),
                        f.re.into(),
                        f.im.into(),
                        g.re.into(),
                        g.im.into(),
                        fn_.re.into(),
                        fn_.im.into(),
                        gn.re.into(),
                        gn.im.into(),
                        rho.into(),
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new([
        "delta", "gamma", "alpha", "f_re", "f_im", "g_re", "g_im", "f_np_re", "f_np_im", "g_np_re",
        "g_np_im", "rho0",
    ]);
    per_w.into_iter().flatten().for_each(|r| t.push(r));
    Ok(t)
}
