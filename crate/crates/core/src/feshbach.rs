//! Schur complement (Feshbach / Grushin) reduction onto the resonant parabola.
//!
//! With `P` the projection onto the sites of the box where `n + j^2 = 0` and
//! `P^c` its complement, `E` is an eigenvalue of the box operator exactly when
//! `0` is an eigenvalue of the effective matrix
//!
//! ```text
//! H~_E = E - H^00 - H^0c (E - H^cc)^{-1} H^c0
//! ```
//!
//! which only has one row per parabola site. The inner resolvent is applied
//! with a band LU of `H^cc - E`; a Neumann-series evaluation is kept as an
//! independent cross-check for small `delta`.

use nalgebra::{DMatrix, SMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{check_delta, FloquetOperator, LatticeBox, Site};
use crate::linalg::{smallest_singular_estimate, solve_refined, window_eigenpairs, BandedLu};

/// Inner solves must reach this relative residual.
pub const SOLVE_TOLERANCE: f64 = 1e-12;

/// Below this smallest singular value `E - H^cc` is treated as singular.
pub const RESOLVENT_GAP_TOLERANCE: f64 = 1e-9;

/// Site order of [`effective_5x5_series`].
pub const SERIES_SITES: [Site; 5] = [
    Site::new(0, 0),
    Site::new(1, -1),
    Site::new(-1, -1),
    Site::new(2, -4),
    Site::new(-2, -4),
];

/// Default `c` in the lower bound `|mu| >= c delta^2` on the nonzero
/// eigenvalues near zero of the `[-8, 8]^2` box.
pub const H1_MARGIN: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    pub resonant_sites: Vec<Site>,
    pub energy: f64,
    pub delta: f64,
    pub matrix: DMatrix<f64>,
    /// Estimated smallest singular value of `E - H^cc`.
    pub resolvent_gap: f64,
    /// Worst relative residual of the inner solves.
    pub solve_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOperatorRecord {
    pub sites: Vec<Site>,
    pub energy: f64,
    pub delta: f64,
    pub entries: Vec<Vec<f64>>,
    pub smallest_singular_value: f64,
    pub resolvent_gap: f64,
}

impl EffectiveOperator {
    pub fn size(&self) -> usize {
        self.resonant_sites.len()
    }

    /// Singular values of the (symmetric) effective matrix, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .collect();
        s.sort_by(f64::total_cmp);
        s
    }

    pub fn record(&self) -> EffectiveOperatorRecord {
        EffectiveOperatorRecord {
            sites: self.resonant_sites.clone(),
            energy: self.energy,
            delta: self.delta,
            entries: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            smallest_singular_value: self.singular_values().first().copied().unwrap_or(0.0),
            resolvent_gap: self.resolvent_gap,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.record())?)
    }
}

fn check_energy(delta: f64, energy: f64) -> Result<()> {
    if !energy.is_finite() || energy.abs() > 2.0 * delta + 1e-14 {
        return Err(Error::param(
            "energy",
            format!("|E| = {} exceeds 2 delta = {}", energy.abs(), 2.0 * delta),
        ));
    }
    Ok(())
}

/// `H^c0` column of a parabola site: `delta` on its neighbours in the complement.
fn coupling_column(hcc: &FloquetOperator, site: Site) -> Vec<f64> {
    let mut b = vec![0.0; hcc.dim()];
    for t in site.hopping_neighbors() {
        if let Some(k) = hcc.index_of(t) {
            b[k] = hcc.delta();
        }
    }
    b
}

fn direct_block(resonant: &[Site], delta: f64, energy: f64) -> DMatrix<f64> {
    let m = resonant.len();
    DMatrix::from_fn(m, m, |a, b| {
        let e = if a == b { energy } else { 0.0 };
        let h00 = if resonant[a].is_hopping_neighbor(resonant[b]) {
            delta
        } else {
            0.0
        };
        e - h00
    })
}

/// Effective matrix `H~_E` on the parabola sites of `lattice_box`.
pub fn effective_operator(
    lattice_box: &LatticeBox,
    delta: f64,
    energy: f64,
) -> Result<EffectiveOperator> {
    check_delta(delta)?;
    check_energy(delta, energy)?;
    let resonant = lattice_box.parabola_sites();
    if resonant.is_empty() {
        return Err(Error::param(
            "box",
            format!("{lattice_box} contains no site with n + j^2 = 0"),
        ));
    }
    let hcc = FloquetOperator::new(*lattice_box, delta, resonant.iter().copied())?;
    let m = resonant.len();
    let mut matrix = direct_block(&resonant, delta, energy);

    if hcc.dim() == 0 || delta == 0.0 {
        return Ok(EffectiveOperator {
            resonant_sites: resonant,
            energy,
            delta,
            matrix,
            resolvent_gap: f64::INFINITY,
            solve_residual: 0.0,
        });
    }

    let lu = BandedLu::factor_shifted(&hcc, energy).map_err(|_| Error::ResolventSingular {
        gap: 0.0,
        tol: RESOLVENT_GAP_TOLERANCE,
    })?;
    let gap = smallest_singular_estimate(&lu, 40);
    if gap < RESOLVENT_GAP_TOLERANCE {
        return Err(Error::ResolventSingular {
            gap,
            tol: RESOLVENT_GAP_TOLERANCE,
        });
    }

    let columns: Vec<Vec<f64>> = resonant.iter().map(|s| coupling_column(&hcc, *s)).collect();
    let mut worst = 0.0_f64;
    let mut solutions = Vec::with_capacity(m);
    for b in &columns {
        if b.iter().all(|v| *v == 0.0) {
            solutions.push(vec![0.0; b.len()]);
            continue;
        }
        let x = solve_refined(&hcc, &lu, b);
        let r = crate::linalg::relative_residual(&hcc, energy, &x, b);
        if r > SOLVE_TOLERANCE {
            return Err(Error::InaccurateSolve {
                residual: r,
                tol: SOLVE_TOLERANCE,
            });
        }
        worst = worst.max(r);
        solutions.push(x);
    }

    // H~ = E - H00 + H0c (Hcc - E)^{-1} Hc0
    for a in 0..m {
        for b in 0..m {
            let s: f64 = columns[a]
                .iter()
                .zip(&solutions[b])
                .map(|(u, v)| u * v)
                .sum();
            matrix[(a, b)] += s;
        }
    }
    let matrix = (&matrix + matrix.transpose()) * 0.5;

    Ok(EffectiveOperator {
        resonant_sites: resonant,
        energy,
        delta,
        matrix,
        resolvent_gap: gap,
        solve_residual: worst,
    })
}

/// Effective matrix with the inner resolvent expanded as the Neumann series
/// `sum_k [(E - D)^{-1} delta hop]^k (E - D)^{-1}`, truncated after `terms`
/// terms. Converges for small `delta`.
pub fn neumann_effective_operator(
    lattice_box: &LatticeBox,
    delta: f64,
    energy: f64,
    terms: usize,
) -> Result<DMatrix<f64>> {
    check_delta(delta)?;
    check_energy(delta, energy)?;
    let resonant = lattice_box.parabola_sites();
    if resonant.is_empty() {
        return Err(Error::param("box", "no parabola sites"));
    }
    let hcc = FloquetOperator::new(*lattice_box, delta, resonant.iter().copied())?;
    let inv_gap: Vec<f64> = hcc
        .diagonal_entries()
        .iter()
        .map(|d| 1.0 / (energy - d))
        .collect();
    let columns: Vec<Vec<f64>> = resonant.iter().map(|s| coupling_column(&hcc, *s)).collect();

    let m = resonant.len();
    let mut matrix = direct_block(&resonant, delta, energy);
    for b in 0..m {
        // y_0 = (E - D)^{-1} b,  y_{k+1} = (E - D)^{-1} delta hop y_k
        let mut y: Vec<f64> = columns[b]
            .iter()
            .zip(&inv_gap)
            .map(|(v, g)| v * g)
            .collect();
        let mut acc = y.clone();
        for _ in 1..terms {
            let next: Vec<f64> = (0..hcc.dim())
                .map(|i| {
                    let hop: f64 = hcc.neighbors(i).iter().map(|&k| y[k]).sum();
                    inv_gap[i] * delta * hop
                })
                .collect();
            y = next;
            acc.iter_mut().zip(&y).for_each(|(a, v)| *a += v);
        }
        for a in 0..m {
            let s: f64 = columns[a].iter().zip(&acc).map(|(u, v)| u * v).sum();
            matrix[(a, b)] -= s;
        }
    }
    Ok(matrix)
}

/// Second-order expansion `A = delta M1 - delta^2 M2` of `E - H~_E` on the
/// `[-8, 8]^2` box, in the site order of [`SERIES_SITES`].
///
/// `M1` is the hopping among `(0,0), (1,-1), (-1,-1)`. `M2[a][b]` is the sum
/// over non-parabola common neighbours `k` of `1 / (n_k + j_k^2)`; at the
/// `(+-2, -4)` sites the four neighbour energies are `-2, 6, -4, 4`, giving
/// `-1/3`.
pub fn effective_5x5_series(delta: f64) -> SMatrix<f64, 5, 5> {
    #[rustfmt::skip]
    let m1 = SMatrix::<f64, 5, 5>::from_row_slice(&[
        0.0, 1.0, 1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0,
    ]);
    let third = 1.0 / 3.0;
    #[rustfmt::skip]
    let m2 = SMatrix::<f64, 5, 5>::from_row_slice(&[
        1.0,  0.0,   0.0,   0.0,    0.0,
        0.0,  0.25, -0.5,   0.0,    0.0,
        0.0, -0.5,   0.25,  0.0,    0.0,
        0.0,  0.0,   0.0,  -third,  0.0,
        0.0,  0.0,   0.0,   0.0,   -third,
    ]);
    m1 * delta - m2 * (delta * delta)
}

#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub energy: f64,
    pub member: bool,
    pub smallest_singular: f64,
    pub tol: f64,
    /// Singular vector of `H~_E` for the smallest singular value, on the parabola sites.
    pub witness: Vec<f64>,
}

/// Decide `E in sigma(H_box)` through `0 in sigma(H~_E)`. The default
/// tolerance is `1e-9 * ||H~_E||`.
pub fn spectral_membership(
    lattice_box: &LatticeBox,
    delta: f64,
    energy: f64,
    tol: Option<f64>,
) -> Result<Membership> {
    let eff = effective_operator(lattice_box, delta, energy)?;
    let eig = eff.matrix.clone().symmetric_eigen();
    let (imin, smin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("effective matrix is nonempty");
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = tol.unwrap_or(1e-9 * norm);
    Ok(Membership {
        energy,
        member: smin <= tol,
        smallest_singular: smin,
        tol,
        witness: eig.eigenvectors.column(imin).iter().copied().collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H1Report {
    pub delta: f64,
    pub l0: u32,
    pub lattice_box: LatticeBox,
    /// Distance from 0 to the nearest nonzero eigenvalue.
    pub distance: f64,
    /// True when no nonzero eigenvalue lies in `[-1/2, 1/2]`; `distance` is then 1/2.
    pub distance_is_lower_bound: bool,
    /// `exp(-L0)`.
    pub threshold: f64,
    pub exceeds_threshold: bool,
    /// `c` in the required margin `distance >= c delta^2`.
    pub margin: f64,
    pub pass: bool,
    /// Eigenvalues within `1e-12` of zero.
    pub zero_multiplicity: usize,
    pub window_eigenvalues: Vec<f64>,
}

/// Eigenvalues of `H` on `lattice_box` in `[-1/2, 1/2]`.
pub fn near_zero_spectrum(lattice_box: &LatticeBox, delta: f64) -> Result<Vec<f64>> {
    let op = FloquetOperator::full(*lattice_box, delta)?;
    if delta == 0.0 {
        let mut v: Vec<f64> = op
            .diagonal_entries()
            .iter()
            .copied()
            .filter(|d| d.abs() <= 0.5)
            .collect();
        v.sort_by(f64::total_cmp);
        return Ok(v);
    }
    Ok(window_eigenpairs(&op, -0.5, 0.5)?
        .into_iter()
        .map(|p| p.value)
        .collect())
}

/// Check the spectral gap hypothesis on `Lambda_0 = [-(L0^2 - 1), L0^2 - 1]^2`.
///
/// `pass` means the nearest nonzero eigenvalue is at least `H1_MARGIN * delta^2`
/// away from zero; whether it also beats `exp(-L0)` is reported separately.
pub fn verify_h1(delta: f64, l0: u32) -> Result<H1Report> {
    check_delta(delta)?;
    if l0 < 1 {
        return Err(Error::param("l0", "must be at least 1"));
    }
    let half = l0 * l0 - 1;
    let lattice_box = LatticeBox::centered(half);
    let values = near_zero_spectrum(&lattice_box, delta)?;
    let zero_multiplicity = values.iter().filter(|v| v.abs() <= 1e-12).count();
    let nonzero = values
        .iter()
        .map(|v| v.abs())
        .filter(|v| *v > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let (distance, lower) = if nonzero.is_finite() {
        (nonzero, false)
    } else {
        (0.5, true)
    };
    let threshold = (-(l0 as f64)).exp();
    Ok(H1Report {
        delta,
        l0,
        lattice_box,
        distance,
        distance_is_lower_bound: lower,
        threshold,
        exceeds_threshold: distance > threshold,
        margin: H1_MARGIN,
        pass: distance >= H1_MARGIN * delta * delta,
        zero_multiplicity,
        window_eigenvalues: values,
    })
}

/// Number of eigenvalues within `1e-12` of zero on `[-half, half]^2`.
pub fn zero_multiplicity(half: u32, delta: f64) -> Result<usize> {
    Ok(near_zero_spectrum(&LatticeBox::centered(half), delta)?
        .iter()
        .filter(|v| v.abs() <= 1e-12)
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::parabola_site;

    /// Second-order coefficient from the stencil: sum over common neighbours
    /// off the parabola of 1 / D_k.
    fn second_order_oracle(a: Site, b: Site, within: &LatticeBox) -> f64 {
        a.hopping_neighbors()
            .iter()
            .filter(|k| within.contains(**k) && !k.on_parabola() && k.is_hopping_neighbor(b))
            .map(|k| 1.0 / k.diagonal() as f64)
            .sum()
    }

    #[test]
    fn series_matches_stencil_second_order() {
        let b = LatticeBox::centered(8);
        let a = effective_5x5_series(1.0) - effective_5x5_series(0.0);
        // coefficient of delta^2 via a second evaluation
        let d = 1e-3;
        let s = effective_5x5_series(d);
        for (r, &sa) in SERIES_SITES.iter().enumerate() {
            for (c, &sb) in SERIES_SITES.iter().enumerate() {
                let m1 = if sa.is_hopping_neighbor(sb) { 1.0 } else { 0.0 };
                assert!((a[(r, c)] + second_order_oracle(sa, sb, &b) - m1).abs() < 1e-14);
                let m2 = (m1 * d - s[(r, c)]) / (d * d);
                assert!((m2 - second_order_oracle(sa, sb, &b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn series_examples() {
        assert_eq!(effective_5x5_series(0.0), SMatrix::<f64, 5, 5>::zeros());
        let a = effective_5x5_series(0.05);
        assert!((a[(0, 1)] - 0.05).abs() < 1e-15);
        assert!((a[(1, 2)] - 0.00125).abs() < 1e-15);
    }

    #[test]
    fn series_eigenvalue_magnitudes() {
        let d = 0.05;
        let mut ev: Vec<f64> = effective_5x5_series(d)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .collect();
        ev.sort_by(f64::total_cmp);
        for v in &ev[..3] {
            let r = v / (d * d);
            assert!((0.1..=1.5).contains(&r), "{r}");
        }
        for v in &ev[3..] {
            let r = v / d;
            assert!((1.2..=1.7).contains(&r), "{r}");
        }
    }

    #[test]
    fn neighbour_energies_follow_the_case_split() {
        // The parabola site (j, -j^2) only couples to energies +-2j + {2, 0}.
        for j in -12i64..=12 {
            let mut got: Vec<i64> = parabola_site(j)
                .hopping_neighbors()
                .iter()
                .map(|s| s.diagonal())
                .collect();
            got.sort();
            let mut want = vec![2 * j + 2, -2 * j + 2, 2 * j, -2 * j];
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn vanishing_delta_gives_zero_matrix() {
        let eff = effective_operator(&LatticeBox::centered(8), 1e-14, 0.0).unwrap();
        assert_eq!(eff.size(), 5);
        assert!(eff.matrix.amax() < 1e-13);
        let eff = effective_operator(&LatticeBox::centered(8), 0.0, 0.0).unwrap();
        assert_eq!(eff.matrix.amax(), 0.0);
    }

    #[test]
    fn small_box_reduces_to_three_sites() {
        let d = 0.05;
        let eff = effective_operator(&LatticeBox::centered(3), d, 0.0).unwrap();
        assert_eq!(
            eff.resonant_sites,
            vec![Site::new(0, 0), Site::new(1, -1), Site::new(-1, -1)]
        );
        // independent route: dense Schur complement
        let op = FloquetOperator::full(LatticeBox::centered(3), d).unwrap();
        let h = op.to_dense().unwrap();
        let p: Vec<usize> = eff
            .resonant_sites
            .iter()
            .map(|s| op.index_of(*s).unwrap())
            .collect();
        let c: Vec<usize> = (0..op.dim()).filter(|i| !p.contains(i)).collect();
        let hcc = h.select_rows(&c).select_columns(&c);
        let h0c = h.select_rows(&p).select_columns(&c);
        let h00 = h.select_rows(&p).select_columns(&p);
        let x = (-hcc).lu().solve(&h0c.transpose()).unwrap();
        let want = -h00 - &h0c * x;
        assert!((eff.matrix - want).amax() < 1e-14);
    }

    #[test]
    fn effective_matrix_tracks_series_to_third_order() {
        let d = 0.05;
        let eff = effective_operator(&LatticeBox::centered(8), d, 0.0).unwrap();
        assert_eq!(eff.resonant_sites, SERIES_SITES.to_vec());
        let a = effective_5x5_series(d);
        let diff = (eff.matrix.clone() + DMatrix::from_iterator(5, 5, a.iter().copied())).amax();
        assert!(diff < 2.0 * d * d * d, "{diff}");
    }

    #[test]
    fn neumann_series_cross_check() {
        let b = LatticeBox::centered(6);
        for e in [0.0, 0.013, -0.07] {
            let direct = effective_operator(&b, 0.05, e).unwrap().matrix;
            let series = neumann_effective_operator(&b, 0.05, e, 40).unwrap();
            assert!((direct - series).amax() < 1e-13);
        }
    }

    #[test]
    fn energy_outside_window_is_rejected() {
        assert!(effective_operator(&LatticeBox::centered(3), 0.1, 0.5).is_err());
    }

    #[test]
    fn box_without_parabola_is_rejected() {
        let b = LatticeBox::square(Site::new(0, 5), 1);
        assert!(effective_operator(&b, 0.1, 0.0).is_err());
    }

    #[test]
    fn membership_at_dense_eigenvalue_and_away_from_it() {
        let b = LatticeBox::centered(8);
        let d = 0.1;
        let op = FloquetOperator::full(b, d).unwrap();
        let (values, _) = crate::linalg::dense_spectrum(&op).unwrap();
        let window: Vec<f64> = values.into_iter().filter(|v| v.abs() <= 2.0 * d).collect();
        assert_eq!(window.len(), 5);
        for e in &window {
            assert!(
                spectral_membership(&b, d, *e, None).unwrap().member,
                "E = {e}"
            );
        }
        let at_zero = spectral_membership(&b, d, 0.0, None).unwrap();
        assert!(!at_zero.member);
        assert!(at_zero.smallest_singular > 0.1 * d * d);
        assert!(window.iter().all(|e| (e - 0.19).abs() > 1e-3));
        assert!(!spectral_membership(&b, d, 0.19, None).unwrap().member);
    }

    #[test]
    fn h1_on_the_eight_box() {
        let r = verify_h1(0.1, 3).unwrap();
        assert_eq!(r.lattice_box, LatticeBox::centered(8));
        assert!(r.pass);
        assert!(r.distance >= 0.1 * 0.01);
        assert_eq!(r.zero_multiplicity, 0);
        assert!(!r.distance_is_lower_bound);
    }

    #[test]
    fn h1_distance_scales_like_delta_squared() {
        let ds = [0.02, 0.04, 0.08];
        let dist: Vec<f64> = ds
            .iter()
            .map(|d| verify_h1(*d, 3).unwrap().distance)
            .collect();
        for w in 0..2 {
            let slope = (dist[w + 1] / dist[w]).ln() / (ds[w + 1] / ds[w]).ln();
            assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn zero_multiplicity_stable_across_boxes() {
        assert_eq!(zero_multiplicity(8, 0.1).unwrap(), 0);
        assert_eq!(zero_multiplicity(15, 0.1).unwrap(), 0);
    }

    #[test]
    fn effective_record_serializes() {
        let eff = effective_operator(&LatticeBox::centered(3), 0.05, 0.0).unwrap();
        let json = eff.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["entries"].as_array().unwrap().len(), 3);
        assert_eq!(v["sites"][1]["j"], 1);
    }
}
