use floquet_core::feshbach::spectral_membership;
use floquet_core::lattice::{FloquetOperator, LatticeBox};
use floquet_core::linalg::dense_spectrum;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // E is in the box spectrum exactly when the effective matrix is singular.
    #[test]
    fn membership_matches_the_dense_spectrum(l in 2u32..=6, delta in 0.02..0.2f64, x in -1.0..1.0f64) {
        let b = LatticeBox::centered(l);
        let eig = dense_spectrum(&FloquetOperator::full(b, delta).unwrap()).unwrap().0;
        let window: Vec<f64> = eig.iter().copied().filter(|e| e.abs() <= 2.0 * delta).collect();
        for e in &window {
            prop_assert!(spectral_membership(&b, delta, *e, None).unwrap().member);
        }
        let e = 2.0 * delta * x;
        let gap = eig.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min);
        if gap > 1e-6 {
            prop_assert!(!spectral_membership(&b, delta, e, None).unwrap().member);
        }
    }
}
