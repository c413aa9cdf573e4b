use proptest::prelude::*;
use sshlab_core::analytic::{
    flat_cumulants, mean_nu_analytic, variance_nu, z1_flat_closed_form, z1_quadrature, z2_quadrature,
    VarianceMode,
};
use sshlab_core::ensemble::{sample_realization, FlatDistribution};
use sshlab_core::invariant::{log_xi, winding_closed_form, winding_integral};
use sshlab_core::model::{build_chain, build_flux_matrix, BoundaryCondition, ChainParams, Realization};
use sshlab_core::spectrum::{chain_spectrum, eigenvalues_dense};

fn bc() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![Just(BoundaryCondition::Open), Just(BoundaryCondition::Periodic)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn winding_matches_product(n in 4usize..64, gamma in 0.0..2.0f64, w in 0.5..1.5f64, k in 0u64..1000) {
        let p = ChainParams::new(n, 1.0, w, BoundaryCondition::Periodic).unwrap();
        let r = sample_realization(&FlatDistribution::new(gamma, 1.0).unwrap(), n, 3, k);
        let a = winding_integral(&r, w, 64).unwrap();
        let b = winding_closed_form(&r, &p).unwrap();
        prop_assert_eq!(a.nu, b.nu);
        prop_assert!((a.total_phase / std::f64::consts::TAU - a.nu as f64).abs() < 1e-6);
    }

    #[test]
    fn flux_determinant_lu_matches_cofactor(n in 2usize..24, w in -1.5..1.5f64, phi in 0.0..6.2f64, k in 0u64..100) {
        let r = sample_realization(&FlatDistribution::new(0.7, 1.0).unwrap(), n, 5, k);
        let m = build_flux_matrix(&r, w, phi);
        let exact = m.det_closed_form();
        let lu = m.det_lu().value();
        prop_assert!((exact - lu).norm() <= 1e-10 * (1.0 + exact.norm()));
    }

    #[test]
    fn spectrum_is_chiral_and_matches_dense(n in 3usize..40, gamma in 0.0..1.5f64, w in 0.2..1.8f64, bc in bc(), k in 0u64..100) {
        let p = ChainParams::new(n, 1.0, w, bc).unwrap();
        let r = sample_realization(&FlatDistribution::new(gamma, 1.0).unwrap(), n, 6, k);
        let fast = chain_spectrum(&p, &r).unwrap();
        let dense = eigenvalues_dense(&build_chain(&p, &r).unwrap()).unwrap();
        prop_assert!(fast.chiral_mismatch() <= 1e-10);
        for (x, y) in fast.eigenvalues.iter().zip(&dense.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!((fast.gap - dense.gap).abs() <= 1e-10);
    }

    #[test]
    fn log_xi_is_log_ratio(n in 2usize..50, w in 0.1..2.0f64, k in 0u64..100) {
        let p = ChainParams::new(n, 1.0, w, BoundaryCondition::Open).unwrap();
        let r = sample_realization(&FlatDistribution::new(0.4, 1.0).unwrap(), n, 8, k);
        let direct: f64 = r.couplings().iter().map(|u| u.abs().ln()).sum::<f64>() - n as f64 * w.ln();
        prop_assert!((log_xi(&r, &p).unwrap().log_xi - direct).abs() < 1e-10);
    }

    #[test]
    fn averaged_index_is_a_probability_increasing_in_w(gamma in 0.01..2.0f64, w in 0.3..1.6f64) {
        let a = mean_nu_analytic(100, 1.0, w, gamma).unwrap();
        let b = mean_nu_analytic(100, 1.0, w * 1.01, gamma).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
        let v = variance_nu(100, 1.0, w, gamma, VarianceMode::General).unwrap();
        prop_assert!((v - a * (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn flat_cumulants_match_quadrature(gamma in 0.02..2.0f64) {
        prop_assume!(((3f64).sqrt() * gamma - 1.0).abs() > 1e-3);
        let d = FlatDistribution::new(gamma, 1.0).unwrap();
        let c = flat_cumulants(gamma, 1.0).unwrap();
        prop_assert!((c.z1 - z1_quadrature(&d, 1.0).unwrap()).abs() < 1e-8);
        prop_assert!((c.z2 - z2_quadrature(&d, 1.0).unwrap()).abs() < 1e-8);
        prop_assert!(c.z2 >= 0.0);
    }

    #[test]
    fn z1_scales_with_gamma_over_u(gamma in 0.01..1.5f64, u in 0.2..5.0f64) {
        let a = z1_flat_closed_form(gamma * u, u).unwrap();
        let b = z1_flat_closed_form(gamma, 1.0).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn realizations_are_reproducible_and_distinct() {
    let d = FlatDistribution::new(0.5, 1.0).unwrap();
    let a = sample_realization(&d, 50, 42, 3);
    assert_eq!(a, sample_realization(&d, 50, 42, 3));
    assert_ne!(a.couplings(), sample_realization(&d, 50, 42, 4).couplings());
    assert_ne!(a.couplings(), sample_realization(&d, 50, 43, 3).couplings());
    let h = d.half_width();
    assert!(a.couplings().iter().all(|&x| (x - 1.0).abs() <= h));
}

#[test]
fn clean_chain_gap_is_twice_dimerization() {
    for (u, w) in [(1.0, 0.6), (0.7, 1.3), (2.0, -1.0)] {
        let p = ChainParams::new(40, u, w, BoundaryCondition::Periodic).unwrap();
        let s = chain_spectrum(&p, &Realization::clean(&p)).unwrap();
        assert!(
            (s.gap - 2.0 * (u.abs() - w.abs()).abs()).abs() < 1e-10,
            "{u} {w}: {}",
            s.gap
        );
    }
}
