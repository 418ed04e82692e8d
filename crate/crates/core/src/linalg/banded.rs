//! Direct factorizations of shifted operators `H - sigma` in band storage.
//!
//! The row-major site order makes every operator banded with half-bandwidth
//! equal to the box width plus one, so a band LU is a sparse direct solver
//! whose fill is confined to the band.

use crate::error::{Error, Result};
use crate::lattice::FloquetOperator;

/// LU factorization with partial pivoting of `H - shift`, stored LAPACK-style:
/// row `i` holds columns `i - kl ..= i + kl + ku` (the extra `kl` columns
/// receive fill from row interchanges).
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    min_pivot: f64,
    shift: f64,
}

impl BandedLu {
    pub fn factor_shifted(op: &FloquetOperator, shift: f64) -> Result<Self> {
        let n = op.dim();
        let b = op.bandwidth();
        let (kl, ku) = (b, b);
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
            min_pivot: f64::INFINITY,
            shift,
        };
        let diag = op.diagonal_entries();
        let delta = op.delta();
        for i in 0..n {
            *lu.at_mut(i, i) = diag[i] - shift;
            for &k in op.neighbors(i) {
                *lu.at_mut(i, k) = delta;
            }
        }
        lu.factor()?;
        Ok(lu)
    }

    #[inline]
    fn offset(&self, i: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= i && c <= i + self.kl + self.ku);
        i * self.width + (c + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, c: usize) -> f64 {
        self.data[self.offset(i, c)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, c: usize) -> &mut f64 {
        let o = self.offset(i, c);
        &mut self.data[o]
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);

            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            if best == 0.0 {
                return Err(Error::SingularFactor { row: k });
            }
            self.min_pivot = self.min_pivot.min(best);
            if p != k {
                for c in k..=last_col {
                    let a = self.offset(k, c);
                    let b = self.offset(p, c);
                    self.data.swap(a, b);
                }
            }

            let pivot = self.at(k, k);
            for i in k + 1..=last_row {
                let l = self.at(i, k) / pivot;
                *self.at_mut(i, k) = l;
                if l != 0.0 {
                    for c in k + 1..=last_col {
                        let u = self.at(k, c);
                        *self.at_mut(i, c) -= l * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Smallest pivot magnitude encountered; a crude singularity indicator.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Overwrite `b` with `(H - shift)^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "right-hand side has wrong length");
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=last_col {
                s -= self.at(k, c) * b[c];
            }
            b[k] = s / self.at(k, k);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Relative residual `||(H - shift) x - b|| / ||b||`.
pub fn relative_residual(op: &FloquetOperator, shift: f64, x: &[f64], b: &[f64]) -> f64 {
    let mut hx = vec![0.0; x.len()];
    op.mul_into(x, &mut hx);
    let num: f64 = hx
        .iter()
        .zip(x)
        .zip(b)
        .map(|((h, xi), bi)| (h - shift * xi - bi).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solve `(H - shift) x = b` and apply one step of iterative refinement.
pub fn solve_refined(op: &FloquetOperator, lu: &BandedLu, b: &[f64]) -> Vec<f64> {
    let shift = lu.shift();
    let mut x = lu.solve(b);
    let mut hx = vec![0.0; x.len()];
    op.mul_into(&x, &mut hx);
    let mut r: Vec<f64> = b
        .iter()
        .zip(&hx)
        .zip(&x)
        .map(|((bi, h), xi)| bi - (h - shift * xi))
        .collect();
    lu.solve_in_place(&mut r);
    for (xi, d) in x.iter_mut().zip(&r) {
        *xi += d;
    }
    x
}

/// Estimate of the smallest singular value of the symmetric matrix
/// `H - shift` by power iteration on its inverse.
pub fn smallest_singular_estimate(lu: &BandedLu, iterations: usize) -> f64 {
    let n = lu.dim();
    if n == 0 {
        return f64::INFINITY;
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin())
        .collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let x0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= x0);
    let mut growth = 0.0;
    for _ in 0..iterations.max(1) {
        lu.solve_in_place(&mut x);
        let g = norm(&x);
        if !g.is_finite() || g == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= g);
        let converged = (g - growth).abs() <= 1e-8 * g;
        growth = g;
        if converged {
            break;
        }
    }
    1.0 / growth
}

/// Number of eigenvalues of `op` strictly below `x`, by Sylvester's law of
/// inertia applied to an unpivoted band `LDL^T` of `H - x`.
///
/// Fails when a pivot is too small to trust its sign; callers nudge `x`.
pub fn count_below(op: &FloquetOperator, x: f64) -> Result<usize> {
    let n = op.dim();
    let b = op.bandwidth();
    let w = b + 1;
    // Row i stores l_{i,c} for c in i-b..=i at offset c + b - i; the slot
    // c = i holds d_i.
    let mut l = vec![0.0; n * w];
    let diag = op.diagonal_entries();
    let delta = op.delta();
    let scale = op.norm_bound().max(1.0);
    let tiny = 1e-13 * scale;
    let mut negatives = 0;
    let mut row_a = vec![0.0; w];
    for i in 0..n {
        let c0 = i.saturating_sub(b);
        row_a.iter_mut().for_each(|v| *v = 0.0);
        for &k in op.neighbors(i) {
            if k < i {
                row_a[k + b - i] = delta;
            }
        }
        for c in c0..i {
            let ck0 = c.saturating_sub(b).max(c0);
            let mut s = row_a[c + b - i];
            for m in ck0..c {
                s -= l[i * w + (m + b - i)] * l[m * w + b] * l[c * w + (m + b - c)];
            }
            l[i * w + (c + b - i)] = s / l[c * w + b];
        }
        let mut d = diag[i] - x;
        for m in c0..i {
            let lim = l[i * w + (m + b - i)];
            d -= lim * lim * l[m * w + b];
        }
        if d.abs() < tiny || !d.is_finite() {
            return Err(Error::Eigensolver(format!(
                "inertia count at x = {x} hit pivot {d:e} at row {i}"
            )));
        }
        l[i * w + b] = d;
        if d < 0.0 {
            negatives += 1;
        }
    }
    Ok(negatives)
}

/// [`count_below`] with small deterministic nudges of `x` on pivot failure.
pub fn count_below_robust(op: &FloquetOperator, x: f64) -> Result<usize> {
    let scale = op.norm_bound().max(1.0);
    let mut last = None;
    for attempt in 0..8 {
        let nudge = if attempt == 0 {
            0.0
        } else {
            let mag = 1e-11 * scale * 4f64.powi(attempt);
            if attempt % 2 == 0 {
                mag
            } else {
                -mag
            }
        };
        match count_below(op, x + nudge) {
            Ok(c) => return Ok(c),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Eigensolver("inertia count failed".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_operator, LatticeBox, Site};

    fn dense_solve(op: &FloquetOperator, shift: f64, b: &[f64]) -> Vec<f64> {
        let mut m = op.to_dense().unwrap();
        for i in 0..op.dim() {
            m[(i, i)] -= shift;
        }
        let x = m
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(b))
            .unwrap();
        x.iter().copied().collect()
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        let op = build_operator(
            LatticeBox::new(Site::new(2, -3), 4, 3),
            0.2,
            [Site::new(2, -4)],
        )
        .unwrap();
        let b: Vec<f64> = (0..op.dim()).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        for shift in [0.0, 0.37, -2.5] {
            let lu = BandedLu::factor_shifted(&op, shift).unwrap();
            let x = lu.solve(&b);
            let y = dense_solve(&op, shift, &b);
            for (a, c) in x.iter().zip(&y) {
                assert!((a - c).abs() < 1e-10, "{a} vs {c}");
            }
            assert!(relative_residual(&op, shift, &x, &b) < 1e-13);
        }
    }

    #[test]
    fn singular_shift_is_reported() {
        // delta = 0 makes the operator diagonal; shifting by an entry is singular.
        let op = build_operator(LatticeBox::centered(2), 0.0, []).unwrap();
        assert!(matches!(
            BandedLu::factor_shifted(&op, 0.0),
            Err(Error::SingularFactor { .. })
        ));
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        let op = build_operator(LatticeBox::centered(5), 0.15, []).unwrap();
        let eig = op.to_dense().unwrap().symmetric_eigen();
        for x in [-3.3, -0.2, 0.05, 0.2, 1.5, 40.1] {
            let want = eig.eigenvalues.iter().filter(|&&v| v < x).count();
            assert_eq!(count_below_robust(&op, x).unwrap(), want, "x = {x}");
        }
    }

    #[test]
    fn smallest_singular_of_diagonal_shift() {
        let op = build_operator(LatticeBox::centered(3), 0.0, []).unwrap();
        let lu = BandedLu::factor_shifted(&op, 0.3).unwrap();
        let s = smallest_singular_estimate(&lu, 50);
        assert!((s - 0.3).abs() < 1e-6, "{s}");
    }
}
