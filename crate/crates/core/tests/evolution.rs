use std::f64::consts::PI;

use floquet_core::evolution::*;
use floquet_core::localization::local_spectrum_scan;
use floquet_core::newton::LRule;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn strang_error_drops_fourfold_per_halving() {
    let u0 = FourierState::power_law_truncated(16, 2.0, 8).unwrap();
    let run = |steps| {
        evolve(&u0, 0.1, 4.0 * PI, steps, &[1.0])
            .unwrap()
            .final_state
    };
    let reference = run(8192);
    let e64 = run(64).distance(&reference);
    let e128 = run(128).distance(&reference);
    let e256 = run(256).distance(&reference);
    assert!(e64 / e128 >= 4.0, "ratio {}", e64 / e128);
    assert!(e128 / e256 >= 4.0, "ratio {}", e128 / e256);
}

#[test]
fn split_step_agrees_with_bloch_waves() {
    let u0 = FourierState::power_law_truncated(16, 2.0, 8).unwrap();
    let basis = build_bloch_basis(0.1, 16, 16, &u0).unwrap();
    assert!(basis.completeness_defect < 1e-12);
    let opts = EvolveOptions {
        steps_per_period: 4096,
        keep_states: true,
        s_values: vec![0.0],
        grid_size: None,
    };
    let tr = evolve_with(&u0, 0.1, 2.0 * PI * 3.0, &opts).unwrap();
    for st in &tr.states {
        let b = bloch_reconstruct(&basis, &u0, st.time).unwrap();
        assert!(b.distance(st) / u0.l2_norm() < 1e-6);
    }
}

#[test]
fn single_mode_without_drive_is_a_phase_at_every_time() {
    let u0 = FourierState::single_mode(8, 3).unwrap();
    let basis = build_bloch_basis(0.0, 8, 8, &u0).unwrap();
    for t in [0.0, 0.3, 1.0, 5.5] {
        let u = bloch_reconstruct(&basis, &u0, t).unwrap();
        assert!((u.coeff(3) - Complex64::from_polar(1.0, -9.0 * t)).norm() < 1e-13);
    }
}

#[test]
fn long_run_stays_bounded() {
    let u0 = FourierState::power_law(32, 2.0).unwrap();
    let tr = evolve(&u0, 0.1, 2.0 * PI * 500.0, 64, &[1.0, 2.0]).unwrap();
    assert!(tr.l2_drift < 1e-10);
    assert!(!tr.truncation_unsafe);
    for k in 0..2 {
        let st = tr.stabilization(k);
        assert!(st.ratio <= 1.1);
        assert!(st.envelope_respected);
    }
}

#[test]
fn single_mode_keeps_its_norm_over_a_thousand_periods() {
    let u0 = FourierState::single_mode(64, 3).unwrap();
    let tr = evolve(&u0, 0.1, 2.0 * PI * 1000.0, 64, &[1.0]).unwrap();
    assert!(tr.l2_drift <= 1e-8, "{}", tr.l2_drift);
}

#[test]
fn bloch_energies_near_zero_match_local_eigenvalues() {
    let u0 = FourierState::power_law_truncated(12, 2.0, 4).unwrap();
    let basis = build_bloch_basis_in_window(0.1, 12, 40, &u0, -0.2, 0.2).unwrap();
    assert!(basis.orthogonality_defect < 1e-10);
    let scan = local_spectrum_scan(0.1, 6, LRule::Minimal).unwrap();
    for j in 3..=6i64 {
        for lambda in [scan.lambda(j).unwrap(), scan.lambda(-j).unwrap()] {
            let gap = basis
                .energies
                .iter()
                .map(|e| (e - lambda).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(gap <= (-(j as f64)).exp(), "j = {j}: gap {gap:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_step_is_unitary(
        delta in 0.0..0.24f64,
        re in proptest::collection::vec(-1.0..1.0f64, 17),
        im in proptest::collection::vec(-1.0..1.0f64, 17),
        periods in 1usize..4,
    ) {
        let coeffs: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        prop_assume!(coeffs.iter().any(|c| c.norm() > 1e-3));
        let u0 = FourierState::new(8, coeffs).unwrap();
        let tr = evolve(&u0, delta, 2.0 * PI * periods as f64, 64, &[0.0]).unwrap();
        prop_assert!(tr.l2_drift <= 1e-12);
    }
}
