use floquet_core::localization::{check_parabola_separation, check_single_resonance};

#[test]
fn parabola_separation_up_to_fifty() {
    assert_eq!(check_parabola_separation(50), Ok(()));
}

#[test]
fn every_admissible_box_holds_one_resonance_up_to_fifty() {
    let checked = check_single_resonance(50).unwrap();
    // sum over 2 <= |j| <= 50 of |j| - 1 admissible sides, both signs
    let want: usize = (2..=50).map(|j| 2 * (j - 1)).sum();
    assert_eq!(checked, want);
}
