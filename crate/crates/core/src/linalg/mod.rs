//! Numerical kernels shared by the spectral modules.

pub mod banded;
pub mod eigen;

pub use banded::{
    count_below, count_below_robust, relative_residual, smallest_singular_estimate, solve_refined,
    BandedLu,
};
pub use eigen::{
    count_in_window, dense_spectrum, normalize_sign, residual_norm, shift_invert_window,
    window_eigenpairs, RawPair, DENSE_LIMIT,
};
