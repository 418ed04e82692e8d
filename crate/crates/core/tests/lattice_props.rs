use floquet_core::lattice::{FloquetOperator, LatticeBox, Site};
use floquet_core::linalg::dense_spectrum;
use proptest::prelude::*;

fn small_box() -> impl Strategy<Value = LatticeBox> {
    (-6i64..=6, -40i64..=6, 0u32..=4, 0u32..=4)
        .prop_map(|(j, n, a, b)| LatticeBox::new(Site::new(j, n), a, b))
}

fn sorted_spectrum(op: &FloquetOperator) -> Vec<f64> {
    let mut v = dense_spectrum(op).unwrap().0;
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_is_symmetric_with_the_stencil(b in small_box(), delta in 0.0..0.24f64) {
        let op = FloquetOperator::full(b, delta).unwrap();
        let m = op.to_dense().unwrap();
        for x in 0..op.dim() {
            let sx = op.site(x);
            prop_assert_eq!(m[(x, x)], sx.diagonal() as f64);
            for y in 0..op.dim() {
                prop_assert_eq!(m[(x, y)], m[(y, x)]);
                if x != y {
                    let want = if sx.is_hopping_neighbor(op.site(y)) { delta } else { 0.0 };
                    prop_assert_eq!(m[(x, y)], want);
                }
            }
        }
    }

    #[test]
    fn banded_and_matrix_free_products_agree(
        b in small_box(),
        delta in 0.0..0.24f64,
        seed in proptest::collection::vec(-1.0..1.0f64, 81),
    ) {
        let op = FloquetOperator::full(b, delta).unwrap();
        let v: Vec<f64> = (0..op.dim()).map(|i| seed[i % seed.len()]).collect();
        let a = op.apply(&v).unwrap();
        let c = op.apply_matrix_free(&v).unwrap();
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn restriction_is_the_principal_submatrix(
        b in small_box(),
        delta in 0.0..0.24f64,
        picks in proptest::collection::vec(0usize..81, 0..6),
    ) {
        let full = FloquetOperator::full(b, delta).unwrap();
        let excluded: Vec<Site> = picks.iter().map(|k| b.site_at(k % b.len())).collect();
        let op = FloquetOperator::new(b, delta, excluded.iter().copied()).unwrap();
        let big = full.to_dense().unwrap();
        let small = op.to_dense().unwrap();
        for x in 0..op.dim() {
            for y in 0..op.dim() {
                let (bx, by) = (b.index_of(op.site(x)).unwrap(), b.index_of(op.site(y)).unwrap());
                prop_assert_eq!(small[(x, y)], big[(bx, by)]);
            }
        }
        let v: Vec<f64> = (0..op.dim()).map(|i| i as f64).collect();
        prop_assert_eq!(op.restrict(&op.embed(&v).unwrap()).unwrap(), v);
        for s in &excluded {
            prop_assert!(op.index_of(*s).is_none());
        }
    }

    #[test]
    fn time_translation_shifts_the_spectrum(b in small_box(), delta in 0.0..0.24f64, k in -20i64..20) {
        let a = sorted_spectrum(&FloquetOperator::full(b, delta).unwrap());
        let t = sorted_spectrum(&FloquetOperator::full(b.translated(0, k), delta).unwrap());
        for (x, y) in a.iter().zip(&t) {
            prop_assert!((x + k as f64 - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn reflection_preserves_the_spectrum(b in small_box(), delta in 0.0..0.24f64) {
        let r = LatticeBox::new(Site::new(-b.center.j, b.center.n), b.half_width_j, b.half_width_n);
        let a = sorted_spectrum(&FloquetOperator::full(b, delta).unwrap());
        let c = sorted_spectrum(&FloquetOperator::full(r, delta).unwrap());
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn index_round_trip(b in small_box()) {
        for (i, s) in b.sites().enumerate() {
            prop_assert_eq!(b.index_of(s), Some(i));
            prop_assert_eq!(b.site_at(i), s);
        }
    }
}
