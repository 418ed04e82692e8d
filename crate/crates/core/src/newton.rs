//! Newton scheme for the eigenpair attached to one parabola point.
//!
//! On a box `Lambda_j` around `R = (j, -j^2)` the eigenvector is normalized
//! by `u(R) = 1` and the eigenvalue is tied to it by `E = delta * sum u` over
//! the neighbours of `R`. Each step solves on the complement `R^c`
//!
//! ```text
//! du|R^c = -(H_{R^c} - E)^{-1} F,   dE = delta * sum_{t ~ R} du(t),
//! F_new  = -dE * u_new|R^c
//! ```
//!
//! starting from `u = 1_R`, `E = 0`, where `F = (H - E) u` restricted to
//! `R^c`. Every run produces a [`ConvergenceCert`] with the residual history
//! and the a priori contraction bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenpair::{EigenPair, Method};
use crate::error::{Error, Result};
use crate::lattice::{check_delta, parabola_site, FloquetOperator, LatticeBox, Site};
use crate::linalg::{
    relative_residual, smallest_singular_estimate, solve_refined, window_eigenpairs, BandedLu,
};

/// Inner solves must reach this relative residual.
pub const SOLVE_TOLERANCE: f64 = 1e-12;

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 50;

/// Smallest singular value of `H_{R^c} - E` accepted before declaring a
/// resonance collision.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

/// Default stopping tolerance `1e-12 * delta`.
pub fn default_tolerance(delta: f64) -> f64 {
    1e-12 * delta
}

/// Resolvent constant `C = 1 / (1 - 2 delta)`.
pub fn resolvent_constant(delta: f64) -> f64 {
    1.0 / (1.0 - 2.0 * delta)
}

/// How the side `L` of `Lambda_j` is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LRule {
    /// `L = |j|`.
    #[default]
    Minimal,
    /// `L = 2(|j| - 1)`.
    Maximal,
}

impl LRule {
    pub fn side(self, j: i64) -> u32 {
        let a = j.unsigned_abs() as u32;
        match self {
            LRule::Minimal => a,
            LRule::Maximal => 2 * (a - 1),
        }
    }
}

impl std::str::FromStr for LRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimal" => Ok(LRule::Minimal),
            "maximal" => Ok(LRule::Maximal),
            _ => Err(Error::param("L_rule", format!("unknown rule `{s}`"))),
        }
    }
}

/// The square of half-width `L` centered at `(j, -j^2)`, with
/// `|j| <= L <= 2(|j| - 1)`. It contains no other parabola point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaBox {
    j: i64,
    l: u32,
    lattice_box: LatticeBox,
}

impl LambdaBox {
    pub fn new(j: i64, l: u32) -> Result<Self> {
        if j.abs() <= 1 {
            return Err(Error::param("j", "need |j| > 1"));
        }
        let a = j.unsigned_abs() as u32;
        if l < a || l > 2 * (a - 1) {
            return Err(Error::param(
                "L",
                format!("need {a} <= L <= {} for j = {j}, got {l}", 2 * (a - 1)),
            ));
        }
        let lattice_box = LatticeBox::square(parabola_site(j), l);
        debug_assert_eq!(lattice_box.parabola_sites(), vec![parabola_site(j)]);
        Ok(LambdaBox { j, l, lattice_box })
    }

    pub fn with_rule(j: i64, rule: LRule) -> Result<Self> {
        if j.abs() <= 1 {
            return Err(Error::param("j", "need |j| > 1"));
        }
        LambdaBox::new(j, rule.side(j))
    }

    pub fn j(&self) -> i64 {
        self.j
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.lattice_box
    }

    pub fn resonant_site(&self) -> Site {
        parabola_site(self.j)
    }
}

/// One iterate `(u, E, F)`; vectors are in the box's row-major order.
#[derive(Debug, Clone)]
pub struct NewtonState {
    pub resonant_site: Site,
    pub lattice_box: LatticeBox,
    pub u: Vec<f64>,
    pub energy: f64,
    /// Residual on `R^c`; zero at `R`.
    pub residual: Vec<f64>,
    pub iteration: usize,
    /// `dE` of the last step (zero before the first).
    pub last_delta_e: f64,
    /// Smallest singular value estimate of `H_{R^c} - E` used in the last step.
    pub last_gap: f64,
}

impl NewtonState {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn residual_sup(&self) -> f64 {
        self.residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn resonant_index(&self) -> usize {
        self.lattice_box
            .index_of(self.resonant_site)
            .expect("resonant site in box")
    }
}

/// `u = 1_R`, `E = 0`, `F = delta` on the neighbours of `R`.
pub fn init_newton(lb: &LambdaBox, delta: f64) -> Result<NewtonState> {
    check_delta(delta)?;
    let b = *lb.lattice_box();
    let r = lb.resonant_site();
    let mut u = vec![0.0; b.len()];
    u[b.index_of(r).expect("center in box")] = 1.0;
    let mut f = vec![0.0; b.len()];
    for t in r.hopping_neighbors() {
        assert!(
            t.diagonal().abs() >= lb.j().abs(),
            "neighbour {t} of {r} has |n + j^2| < |j|"
        );
        if let Some(i) = b.index_of(t) {
            f[i] = delta;
        }
    }
    Ok(NewtonState {
        resonant_site: r,
        lattice_box: b,
        u,
        energy: 0.0,
        residual: f,
        iteration: 0,
        last_delta_e: 0.0,
        last_gap: f64::INFINITY,
    })
}

/// One Newton step. `op` is the full operator on the state's box.
pub fn newton_step(state: &NewtonState, op: &FloquetOperator) -> Result<NewtonState> {
    if op.lattice_box() != &state.lattice_box || !op.excluded().is_empty() {
        return Err(Error::param(
            "op",
            "must be the full operator on the state's box",
        ));
    }
    let mut next = state.clone();
    next.iteration += 1;
    if state.residual.iter().all(|v| *v == 0.0) {
        next.last_delta_e = 0.0;
        return Ok(next);
    }

    let delta = op.delta();
    let hcc = FloquetOperator::new(state.lattice_box, delta, [state.resonant_site])?;
    let lu =
        BandedLu::factor_shifted(&hcc, state.energy).map_err(|_| Error::ResonanceCollision {
            energy: state.energy,
            pivot: 0.0,
        })?;
    let gap = smallest_singular_estimate(&lu, 20);
    if gap < COLLISION_TOLERANCE {
        return Err(Error::ResonanceCollision {
            energy: state.energy,
            pivot: gap,
        });
    }
    let f_c = hcc.restrict(&state.residual)?;
    let x = solve_refined(&hcc, &lu, &f_c);
    let rel = relative_residual(&hcc, state.energy, &x, &f_c);
    if rel > SOLVE_TOLERANCE {
        return Err(Error::InaccurateSolve {
            residual: rel,
            tol: SOLVE_TOLERANCE,
        });
    }
    let du = hcc.embed(&x.iter().map(|v| -v).collect::<Vec<_>>())?;

    let b = &state.lattice_box;
    let delta_e: f64 = delta
        * state
            .resonant_site
            .hopping_neighbors()
            .iter()
            .filter_map(|t| b.index_of(*t))
            .map(|i| du[i])
            .sum::<f64>();

    next.u.iter_mut().zip(&du).for_each(|(u, d)| *u += d);
    next.energy += delta_e;
    let ri = state.resonant_index();
    next.residual = next.u.iter().map(|u| -delta_e * u).collect();
    next.residual[ri] = 0.0;
    debug_assert_eq!(next.u[ri], 1.0);
    next.last_delta_e = delta_e;
    next.last_gap = gap;
    Ok(next)
}

/// `(H - E) u` on `R^c`, recomputed from scratch.
pub fn residual_from_scratch(state: &NewtonState, op: &FloquetOperator) -> Vec<f64> {
    let mut hu = vec![0.0; state.u.len()];
    op.mul_into(&state.u, &mut hu);
    let mut f: Vec<f64> = hu
        .iter()
        .zip(&state.u)
        .map(|(h, u)| h - state.energy * u)
        .collect();
    f[state.resonant_index()] = 0.0;
    f
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceCert {
    pub j: i64,
    pub l: u32,
    pub delta: f64,
    /// `||F^(k)||_2` for `k = 0, 1, ...`.
    pub residual_norms: Vec<f64>,
    /// `||F^(k)||_inf` for `k = 0, 1, ...`.
    pub residual_norms_sup: Vec<f64>,
    /// `dE^(k)` for `k = 1, 2, ...`.
    pub delta_e: Vec<f64>,
    /// `2 C^2 ||F^(0)|| / |j|`.
    pub contraction_bound: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// `4 C^2 ||F^(0)||`.
    pub j0: f64,
    /// `|j| > j0`.
    pub convergent_regime: bool,
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
    /// `||(H - E) phi||` for the unit eigenvector on the full box.
    pub final_residual: f64,
    /// Accepted `final_residual`: `max(tol, 16 eps ||H||) (1 + ||u||)`.
    pub residual_allowance: f64,
    /// Largest gap between the incremental residual and `(H - E) u` recomputed.
    pub identity_defect: f64,
    /// Smallest singular value estimate of `H_{R^c} - E` over the run.
    pub min_resolvent_gap: f64,
}

impl ConvergenceCert {
    /// Successive ratios `||F^(k)|| / ||F^(k-1)||` (skipping zero denominators).
    pub fn ratios(&self) -> Vec<f64> {
        self.residual_norms
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    /// Every ratio is at most 1/2 and at most the a priori bound.
    pub fn contraction_holds(&self) -> bool {
        self.ratios()
            .iter()
            .all(|r| *r <= 0.5 && *r <= self.contraction_bound)
    }

    /// `|dE^(k)| <= C / |j| * ||F^(k-1)||` for every step.
    pub fn delta_e_bound_holds(&self) -> bool {
        self.delta_e
            .iter()
            .zip(&self.residual_norms)
            .all(|(de, f)| de.abs() <= self.c / self.j.abs() as f64 * f)
    }

    pub fn final_residual_ok(&self) -> bool {
        self.final_residual <= self.residual_allowance
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Iterate [`newton_step`] until `||F|| <= tol` or `max_iter` steps.
///
/// Exhausting `max_iter` is a soft failure: the best iterate is returned with
/// `converged = false`. In the convergent regime a step from the third on that
/// fails to halve the residual is a hard error.
pub fn solve_local_eigenpair(
    lb: &LambdaBox,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(EigenPair, ConvergenceCert)> {
    check_delta(delta)?;
    if delta >= 0.5 {
        return Err(Error::param(
            "delta",
            "the resolvent constant needs delta < 1/2",
        ));
    }
    let op = FloquetOperator::full(*lb.lattice_box(), delta)?;
    let c = resolvent_constant(delta);
    let mut state = init_newton(lb, delta)?;
    let f0 = state.residual_norm();
    let j0 = 4.0 * c * c * f0;
    let abs_j = lb.j().abs() as f64;
    let convergent_regime = abs_j > j0;
    if !convergent_regime {
        log::warn!(
            "j = {} is not above j0 = {j0:.3}; attempting anyway",
            lb.j()
        );
    }

    let mut norms = vec![f0];
    let mut sups = vec![state.residual_sup()];
    let mut delta_e = Vec::new();
    let mut identity_defect = 0.0_f64;
    let mut min_gap = f64::INFINITY;
    while state.residual_norm() > tol && state.iteration < max_iter {
        state = newton_step(&state, &op)?;
        let fresh = residual_from_scratch(&state, &op);
        let defect = fresh
            .iter()
            .zip(&state.residual)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        identity_defect = identity_defect.max(defect);
        min_gap = min_gap.min(state.last_gap);
        let prev = *norms.last().expect("nonempty");
        let now = state.residual_norm();
        norms.push(now);
        sups.push(state.residual_sup());
        delta_e.push(state.last_delta_e);
        if convergent_regime && state.iteration >= 3 && prev > 0.0 && now > 0.5 * prev {
            return Err(Error::NonContraction {
                iteration: state.iteration,
                ratio: now / prev,
            });
        }
    }
    let converged = state.residual_norm() <= tol;
    if !converged {
        log::warn!(
            "newton for j = {} stopped after {} iterations at ||F|| = {:e}",
            lb.j(),
            state.iteration,
            state.residual_norm()
        );
    }

    let raw_norm = state.u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pair = EigenPair::new(
        &op,
        state.energy,
        state.u.clone(),
        Method::Newton,
        Some(lb.resonant_site()),
    )?;
    let floor = 16.0 * f64::EPSILON * op.norm_bound();
    let cert = ConvergenceCert {
        j: lb.j(),
        l: lb.l(),
        delta,
        residual_norms: norms,
        residual_norms_sup: sups,
        delta_e,
        contraction_bound: 2.0 * c * c * f0 / abs_j,
        c,
        j0,
        convergent_regime,
        converged,
        iterations: state.iteration,
        tol,
        final_residual: pair.residual,
        residual_allowance: tol.max(floor) * (1.0 + raw_norm),
        identity_defect,
        min_resolvent_gap: min_gap,
    };
    Ok((pair, cert))
}

/// The eigenpair of `H` on `Lambda_j` in `[-2 delta, 2 delta]` from a
/// direct eigensolve, for comparison with the Newton result.
pub fn dense_local_eigenpair(lb: &LambdaBox, delta: f64) -> Result<EigenPair> {
    check_delta(delta)?;
    let op = FloquetOperator::full(*lb.lattice_box(), delta)?;
    let w = 2.0 * delta;
    let pairs = window_eigenpairs(&op, -w - 1e-14, w + 1e-14)?;
    let method = if op.dim() <= crate::linalg::DENSE_LIMIT {
        Method::Dense
    } else {
        Method::ShiftInvert
    };
    let best = pairs
        .into_iter()
        .max_by(|a, b| {
            let i = op.index_of(lb.resonant_site()).expect("center");
            a.vector[i].abs().total_cmp(&b.vector[i].abs())
        })
        .ok_or_else(|| {
            Error::Eigensolver(format!(
                "no eigenvalue in [-{w}, {w}] on {}",
                lb.lattice_box()
            ))
        })?;
    EigenPair::new(
        &op,
        best.value,
        best.vector,
        method,
        Some(lb.resonant_site()),
    )
}

/// `l2` distance between two unit vectors up to sign.
pub fn vector_distance_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum();
    plus.min(minus).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsFit {
    pub delta: f64,
    pub rule: LRule,
    /// `(j, E_j)` for the solves that succeeded.
    pub samples: Vec<(i64, f64)>,
    /// Coefficient of `1/j^2` in `E_j = c2/j^2 + c4/j^4`.
    pub leading_coeff: f64,
    pub leading_coeff_stderr: f64,
    /// `leading_coeff / delta^2`, the limit of `E_j j^2 / delta^2`.
    pub normalized_leading: f64,
    /// `c4 / delta^4`.
    pub a4_estimate: f64,
    pub a4_stderr: f64,
    pub residuals: Vec<f64>,
    /// `(j, error)` for solves that failed.
    pub failures: Vec<(i64, String)>,
}

impl AsymptoticsFit {
    pub fn flagged(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least squares of `E` on `(1/j^2, 1/j^4)`: coefficients and standard errors.
pub fn fit_inverse_powers(samples: &[(i64, f64)]) -> Result<([f64; 2], [f64; 2], Vec<f64>)> {
    let m = samples.len();
    if m < 3 {
        return Err(Error::param(
            "j_values",
            "need at least three samples to fit",
        ));
    }
    let x = nalgebra::DMatrix::from_fn(m, 2, |r, c| {
        let j = samples[r].0 as f64;
        j.powi(-2 * (c as i32 + 1))
    });
    let y = nalgebra::DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * &y;
    let r = qr.r();
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Eigensolver("degenerate fit design".into()))?;
    let resid: Vec<f64> = (&y - &x * &coef).iter().copied().collect();
    let rss: f64 = resid.iter().map(|v| v * v).sum();
    let sigma2 = rss / (m - 2) as f64;
    let rinv = r
        .try_inverse()
        .ok_or_else(|| Error::Eigensolver("degenerate fit design".into()))?;
    let cov = &rinv * rinv.transpose() * sigma2;
    Ok((
        [coef[0], coef[1]],
        [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()],
        resid,
    ))
}

/// Newton eigenvalues over `j_values` (solved in parallel) and their fit to
/// `c2/j^2 + c4/j^4`.
pub fn eigenvalue_asymptotics(delta: f64, j_values: &[i64], rule: LRule) -> Result<AsymptoticsFit> {
    check_delta(delta)?;
    if delta == 0.0 || delta >= 0.5 {
        return Err(Error::param("delta", "fit needs 0 < delta < 1/2"));
    }
    let c = resolvent_constant(delta);
    let j0 = 4.0 * c * c * 2.0 * delta;
    let floor = j0.max(4.0);
    if let Some(j) = j_values.iter().find(|j| (j.abs() as f64) <= floor) {
        return Err(Error::param(
            "j_values",
            format!("j = {j} is not above max(j0, 4) = {floor:.3}"),
        ));
    }
    let tol = default_tolerance(delta);
    let results: Vec<(i64, Result<f64>)> = j_values
        .par_iter()
        .map(|&j| {
            let r = LambdaBox::with_rule(j, rule).and_then(|lb| {
                solve_local_eigenpair(&lb, delta, tol, DEFAULT_MAX_ITER).map(|(p, _)| p.energy)
            });
            (j, r)
        })
        .collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (j, r) in results {
        match r {
            Ok(e) => samples.push((j, e)),
            Err(e) => failures.push((j, e.to_string())),
        }
    }
    let (coef, se, residuals) = fit_inverse_powers(&samples)?;
    let d2 = delta * delta;
    Ok(AsymptoticsFit {
        delta,
        rule,
        samples,
        leading_coeff: coef[0],
        leading_coeff_stderr: se[0],
        normalized_leading: coef[0] / d2,
        a4_estimate: coef[1] / (d2 * d2),
        a4_stderr: se[1] / (d2 * d2),
        residuals,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_box_bounds() {
        assert!(LambdaBox::new(1, 1).is_err());
        assert!(LambdaBox::new(5, 4).is_err());
        assert!(LambdaBox::new(5, 9).is_err());
        let lb = LambdaBox::new(-5, 8).unwrap();
        assert_eq!(lb.lattice_box().parabola_sites(), vec![Site::new(-5, -25)]);
        assert_eq!(LRule::Maximal.side(40), 78);
        assert_eq!(LRule::Minimal.side(-7), 7);
        assert_eq!("maximal".parse::<LRule>().unwrap(), LRule::Maximal);
    }

    #[test]
    fn init_example() {
        let lb = LambdaBox::new(10, 10).unwrap();
        let s = init_newton(&lb, 0.05).unwrap();
        let nz: Vec<f64> = s.residual.iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nz, vec![0.05; 4]);
        assert!((s.residual_norm() - 0.1).abs() < 1e-15);
        assert_eq!(s.u.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn first_step_energy() {
        // Second-order perturbation theory: the four neighbour energies
        // 2j+2, 2-2j, 2j, -2j give dE = -delta^2 * sum 1/D = delta^2/(j^2 - 1).
        let d = 0.05;
        let lb = LambdaBox::new(10, 10).unwrap();
        let op = FloquetOperator::full(*lb.lattice_box(), d).unwrap();
        let s = newton_step(&init_newton(&lb, d).unwrap(), &op).unwrap();
        let want = d * d / 99.0;
        assert!(
            (s.last_delta_e / want - 1.0).abs() < 1e-4,
            "{}",
            s.last_delta_e
        );
        assert!(s.last_delta_e > 0.0);
        let rel = (s.last_delta_e - 2.5e-5).abs() / 2.5e-5;
        assert!(rel <= 0.1);
        assert_eq!(
            s.u[lb.lattice_box().index_of(lb.resonant_site()).unwrap()],
            1.0
        );
    }

    #[test]
    fn trivial_delta() {
        let lb = LambdaBox::new(10, 10).unwrap();
        let (p, cert) = solve_local_eigenpair(&lb, 0.0, 0.0, 10).unwrap();
        assert_eq!(p.energy, 0.0);
        assert_eq!(cert.iterations, 0);
        assert!(cert.converged);
        assert_eq!(p.value_at(lb.resonant_site()), 1.0);
        let op = FloquetOperator::full(*lb.lattice_box(), 0.0).unwrap();
        let s = init_newton(&lb, 0.0).unwrap();
        let t = newton_step(&s, &op).unwrap();
        assert_eq!(t.last_delta_e, 0.0);
        assert!(t.residual.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn contraction_example_j20() {
        let d = 0.05;
        let lb = LambdaBox::new(20, 20).unwrap();
        let op = FloquetOperator::full(*lb.lattice_box(), d).unwrap();
        let s0 = init_newton(&lb, d).unwrap();
        let s1 = newton_step(&s0, &op).unwrap();
        let c = resolvent_constant(d);
        let bound = 2.0 * c * c * s0.residual_norm() / 20.0;
        assert!(s1.residual_norm() / s0.residual_norm() <= bound);
    }

    #[test]
    fn newton_matches_dense_j12() {
        let d = 0.05;
        let lb = LambdaBox::new(12, 12).unwrap();
        let (p, cert) = solve_local_eigenpair(&lb, d, default_tolerance(d), 50).unwrap();
        let q = dense_local_eigenpair(&lb, d).unwrap();
        assert!((p.energy - q.energy).abs() <= 1e-10);
        assert!(vector_distance_up_to_sign(&p.phi, &q.phi) <= 1e-8);
        assert!(cert.converged);
        assert!(cert.contraction_holds(), "{:?}", cert.ratios());
        assert!(cert.delta_e_bound_holds());
        assert!(
            cert.final_residual_ok(),
            "{} > {}",
            cert.final_residual,
            cert.residual_allowance
        );
        assert!(cert.identity_defect <= 1e-12);
        let json = cert.to_json().unwrap();
        assert!(json.contains("\"C\""));
    }

    #[test]
    fn fit_recovers_exact_coefficients() {
        let samples: Vec<(i64, f64)> = (5..20)
            .map(|j| (j, 3.0 / (j * j) as f64 - 7.0 / (j as f64).powi(4)))
            .collect();
        let (c, se, r) = fit_inverse_powers(&samples).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-10);
        assert!((c[1] + 7.0).abs() < 1e-8);
        assert!(se[0] < 1e-10);
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn asymptotics_rejects_small_j() {
        assert!(eigenvalue_asymptotics(0.05, &[3, 10, 12], LRule::Minimal).is_err());
    }

    #[test]
    fn asymptotics_delta_squared_scaling() {
        let js: Vec<i64> = (10..=20).collect();
        let a = eigenvalue_asymptotics(0.02, &js, LRule::Minimal).unwrap();
        let b = eigenvalue_asymptotics(0.05, &js, LRule::Minimal).unwrap();
        let ratio = a.leading_coeff / b.leading_coeff;
        assert!((ratio / 0.16 - 1.0).abs() < 0.02, "{ratio}");
        assert!(!a.flagged());
    }
}
