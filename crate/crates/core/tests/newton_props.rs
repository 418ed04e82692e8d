use floquet_core::lattice::FloquetOperator;
use floquet_core::newton::{
    init_newton, newton_step, residual_from_scratch, resolvent_constant, LRule, LambdaBox,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tracked_residual_matches_recomputation_and_de_bound(
        j in prop_oneof![-12i64..=-4, 4i64..=12],
        delta in 0.005..0.1f64,
        maximal in any::<bool>(),
    ) {
        let rule = if maximal { LRule::Maximal } else { LRule::Minimal };
        let lb = LambdaBox::with_rule(j, rule).unwrap();
        let op = FloquetOperator::full(*lb.lattice_box(), delta).unwrap();
        let c = resolvent_constant(delta);
        let mut state = init_newton(&lb, delta).unwrap();
        for _ in 0..3 {
            let f_prev = state.residual_norm();
            let next = newton_step(&state, &op).unwrap();
            prop_assert!(next.last_delta_e.abs() <= c / j.abs() as f64 * f_prev * (1.0 + 1e-12));
            let fresh = residual_from_scratch(&next, &op);
            let gap = next.residual.iter().zip(&fresh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(gap <= 1e-14, "tracked residual off by {gap}");
            prop_assert!(next.residual_norm() <= 0.5 * f_prev + 1e-15);
            state = next;
        }
    }
}
