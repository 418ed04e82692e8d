//! Eigenpairs of box operators inside an energy window.
//!
//! Small operators go through a dense symmetric eigensolve. Larger ones use
//! shift-invert subspace iteration around the window center, with the number
//! of eigenvalues in the window fixed beforehand by inertia counts so that
//! nothing in the window can be missed.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::banded::{count_below_robust, BandedLu};
use crate::error::{Error, Result};
use crate::lattice::FloquetOperator;

/// Operators up to this many sites are diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;

/// An eigenvalue with its unit eigenvector in the operator's site order.
#[derive(Debug, Clone)]
pub struct RawPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Full dense eigendecomposition, eigenvalues ascending.
pub fn dense_spectrum(op: &FloquetOperator) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = op.to_dense()?;
    let rows = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(rows, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn residual_norm(op: &FloquetOperator, value: f64, v: &[f64]) -> f64 {
    let mut hv = vec![0.0; v.len()];
    op.mul_into(v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(h, x)| (h - value * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dense_window(op: &FloquetOperator, lo: f64, hi: f64) -> Result<Vec<RawPair>> {
    let (values, vectors) = dense_spectrum(op)?;
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= lo && v <= hi)
        .map(|(c, &v)| {
            let vector: Vec<f64> = vectors.column(c).iter().copied().collect();
            let residual = residual_norm(op, v, &vector);
            RawPair {
                value: v,
                vector,
                residual,
            }
        })
        .collect())
}

/// Eigenpairs with eigenvalue in `[lo, hi]`, ascending.
pub fn window_eigenpairs(op: &FloquetOperator, lo: f64, hi: f64) -> Result<Vec<RawPair>> {
    if op.dim() <= DENSE_LIMIT {
        dense_window(op, lo, hi)
    } else {
        shift_invert_window(op, lo, hi)
    }
}

/// Number of eigenvalues in `[lo, hi)`.
pub fn count_in_window(op: &FloquetOperator, lo: f64, hi: f64) -> Result<usize> {
    Ok(count_below_robust(op, hi)? - count_below_robust(op, lo)?)
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

struct Xorshift(u64);

impl Xorshift {
    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

/// Shift-invert subspace iteration for the eigenpairs in `[lo, hi]`.
pub fn shift_invert_window(op: &FloquetOperator, lo: f64, hi: f64) -> Result<Vec<RawPair>> {
    let n = op.dim();
    let wanted = count_in_window(op, lo, hi)?;
    if wanted == 0 {
        return Ok(Vec::new());
    }
    let scale = op.norm_bound().max(1.0);
    let tol = (1e-11_f64).max(64.0 * f64::EPSILON * scale);
    let half = 0.5 * (hi - lo);

    let mut block = (wanted + (wanted / 4).max(8)).min(n);
    loop {
        let center = 0.5 * (lo + hi);
        let mut lu = None;
        for k in 0..6 {
            let sigma = center + half.max(1e-3) * 1e-4 * (0.618_033_988_7 + k as f64);
            if let Ok(f) = BandedLu::factor_shifted(op, sigma) {
                lu = Some(f);
                break;
            }
        }
        let lu =
            lu.ok_or_else(|| Error::Eigensolver("shift-invert factorization failed".into()))?;

        let mut rng = Xorshift(0x9E37_79B9_7F4A_7C15);
        let mut x = DMatrix::from_fn(n, block, |_, _| rng.next_f64());
        let mut found = Vec::new();
        let mut converged = false;
        for _ in 0..400 {
            let cols: Vec<Vec<f64>> = (0..block)
                .into_par_iter()
                .map(|c| {
                    let mut col: Vec<f64> = x.column(c).iter().copied().collect();
                    lu.solve_in_place(&mut col);
                    col
                })
                .collect();
            let y = DMatrix::from_fn(n, block, |r, c| cols[c][r]);
            let q = orthonormalize(y);
            let hq_cols: Vec<Vec<f64>> = (0..q.ncols())
                .into_par_iter()
                .map(|c| {
                    let col: Vec<f64> = q.column(c).iter().copied().collect();
                    let mut out = vec![0.0; n];
                    op.mul_into(&col, &mut out);
                    out
                })
                .collect();
            let hq = DMatrix::from_fn(n, q.ncols(), |r, c| hq_cols[c][r]);
            let t = q.transpose() * &hq;
            let t = (&t + t.transpose()) * 0.5;
            let eig = t.symmetric_eigen();
            let ritz = &q * &eig.eigenvectors;
            let hritz = &hq * &eig.eigenvectors;

            // Unconverged Ritz values can pass through the window on their
            // way out; only converged ones count against the inertia total.
            found.clear();
            for (c, &theta) in eig.eigenvalues.iter().enumerate() {
                if theta < lo || theta > hi {
                    continue;
                }
                let r = (hritz.column(c) - ritz.column(c) * theta).norm();
                if r <= tol {
                    found.push(RawPair {
                        value: theta,
                        vector: ritz.column(c).iter().copied().collect(),
                        residual: r,
                    });
                }
            }
            x = ritz;
            if found.len() == wanted {
                converged = true;
                break;
            }
        }
        if converged {
            found.sort_by(|a, b| a.value.total_cmp(&b.value));
            return Ok(found);
        }
        if block == n {
            return Err(Error::Eigensolver(format!(
                "subspace iteration found {} of {wanted} eigenvalues in [{lo}, {hi}]",
                found.len()
            )));
        }
        block = (2 * block).min(n);
    }
}

/// Normalize to unit length and fix the sign so that the entry at `anchor` is
/// nonnegative (or the largest-magnitude entry when `anchor` is `None`).
pub fn normalize_sign(v: &mut [f64], anchor: Option<usize>) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let idx = anchor.unwrap_or_else(|| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    });
    if v.get(idx).copied().unwrap_or(0.0) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_operator, LatticeBox};

    #[test]
    fn shift_invert_agrees_with_dense() {
        let op = build_operator(
            LatticeBox::new(crate::lattice::Site::new(0, -8), 5, 12),
            0.1,
            [],
        )
        .unwrap();
        let dense = dense_window(&op, -0.2, 0.2).unwrap();
        let si = shift_invert_window(&op, -0.2, 0.2).unwrap();
        assert_eq!(dense.len(), si.len());
        assert!(!si.is_empty());
        for (a, b) in dense.iter().zip(&si) {
            assert!(
                (a.value - b.value).abs() < 1e-11,
                "{} vs {}",
                a.value,
                b.value
            );
            assert!(b.residual < 1e-9);
        }
    }

    #[test]
    fn shift_invert_handles_degenerate_pairs() {
        // The j -> -j reflection makes the (+-j, -j^2) eigenvalues nearly equal.
        let b = LatticeBox::from_ranges(-7..=7, -55..=5).unwrap();
        let op = build_operator(b, 0.1, []).unwrap();
        let dense = dense_window(&op, -0.2, 0.2).unwrap();
        let si = shift_invert_window(&op, -0.2, 0.2).unwrap();
        let dv: Vec<f64> = dense.iter().map(|p| p.value).collect();
        let sv: Vec<f64> = si.iter().map(|p| p.value).collect();
        assert_eq!(dv.len(), sv.len());
        for (a, b) in dv.iter().zip(&sv) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn empty_window() {
        let op = build_operator(LatticeBox::centered(4), 0.1, []).unwrap();
        assert!(shift_invert_window(&op, 0.4, 0.6).unwrap().is_empty());
    }
}
