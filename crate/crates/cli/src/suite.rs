//! The ten acceptance criteria, each runnable at full or reduced scale.

use std::f64::consts::PI;
use std::time::Instant;

use floquet_core::evolution::{
    bloch_reconstruct, build_bloch_basis, evolve, evolve_with, EvolveOptions, FourierState,
};
use floquet_core::feshbach::{
    effective_5x5_series, effective_operator, spectral_membership, verify_h1, zero_multiplicity,
};
use floquet_core::lattice::{FloquetOperator, LatticeBox, Site};
use floquet_core::linalg::dense_spectrum;
use floquet_core::localization::{
    boundary_fit, check_parabola_separation, check_single_resonance, classify_spectrum,
    local_spectrum_scan, spacing_report, DEFAULT_K_HINT, DEFAULT_MASS_THRESHOLD,
};
use floquet_core::newton::{
    default_tolerance, dense_local_eigenpair, eigenvalue_asymptotics, solve_local_eigenpair, LRule,
    LambdaBox, DEFAULT_MAX_ITER,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Quick,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// One status line, e.g. `[PASS]  3 gap and multiplicity at zero: ...`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "Feshbach-oracle equivalence"),
    (2, "effective 5x5 reproduction"),
    (3, "gap and multiplicity at zero"),
    (4, "Newton convergence certificate"),
    (5, "eigenvalue asymptotics"),
    (6, "localization dichotomy"),
    (7, "spacing law"),
    (8, "evolution unitarity and boundedness"),
    (9, "Bloch cross-validation"),
    (10, "structural property suites"),
];

type Outcome = floquet_core::Result<(bool, String)>;

/// Run criterion `id`. Numerical errors count as failures.
pub fn run_criterion(id: u32, mode: Mode, seed: u64) -> CriterionResult {
    let title = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, t)| t.to_string())
        .unwrap_or_else(|| format!("unknown criterion {id}"));
    let start = Instant::now();
    let outcome = match id {
        1 => feshbach_oracle(mode, seed),
        2 => effective_5x5(),
        3 => h1_check(),
        4 => newton_certificate(mode),
        5 => asymptotics(mode),
        6 => localization(mode),
        7 => spacing(mode),
        8 => boundedness(mode),
        9 => bloch(mode),
        10 => structure(),
        _ => Ok((false, "no such criterion".into())),
    };
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Run every criterion in order, calling `report` after each.
pub fn run_suite(
    mode: Mode,
    seed: u64,
    mut report: impl FnMut(&CriterionResult),
) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|(id, _)| {
            let r = run_criterion(*id, mode, seed);
            report(&r);
            r
        })
        .collect()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn feshbach_oracle(mode: Mode, seed: u64) -> Outcome {
    let delta = 0.1;
    let max_l = if mode == Mode::Quick { 5 } else { 8 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut disagreements) = (0usize, 0usize);
    for l in 1..=max_l {
        let b = LatticeBox::centered(l);
        let eig = dense_spectrum(&FloquetOperator::full(b, delta)?)?.0;
        for &e in eig.iter().filter(|e| e.abs() <= 2.0 * delta) {
            checked += 1;
            if !spectral_membership(&b, delta, e, None)?.member {
                disagreements += 1;
            }
        }
        for _ in 0..50 {
            let e = rng.gen_range(-2.0 * delta..=2.0 * delta);
            let truth = eig.iter().any(|v| (v - e).abs() <= 1e-8);
            checked += 1;
            if spectral_membership(&b, delta, e, None)?.member != truth {
                disagreements += 1;
            }
        }
    }
    Ok((
        disagreements == 0,
        format!("{disagreements} disagreements in {checked} energies on boxes up to [-{max_l},{max_l}]^2"),
    ))
}

fn effective_5x5() -> Outcome {
    let deltas = [0.02, 0.04, 0.08];
    let mut diffs = Vec::new();
    let mut eigs: Vec<Vec<f64>> = Vec::new();
    for &d in &deltas {
        let eff = effective_operator(&LatticeBox::centered(8), d, 0.0)?;
        let a = effective_5x5_series(d);
        let a = DMatrix::from_iterator(5, 5, a.iter().copied());
        diffs.push((eff.matrix.clone() + a).amax());
        let mut ev: Vec<f64> = eff
            .matrix
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .collect();
        ev.sort_by(f64::total_cmp);
        eigs.push(ev);
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let diff_slope = slope(&lx, &diffs.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let ev_slopes: Vec<f64> = (0..5)
        .map(|k| slope(&lx, &eigs.iter().map(|e| e[k].ln()).collect::<Vec<_>>()))
        .collect();
    let pass = (diff_slope - 3.0).abs() <= 0.2
        && ev_slopes[..3].iter().all(|s| (s - 2.0).abs() <= 0.1)
        && ev_slopes[3..].iter().all(|s| (s - 1.0).abs() <= 0.1);
    Ok((
        pass,
        format!(
            "residual slope {diff_slope:.3}; eigenvalue slopes {}",
            ev_slopes
                .iter()
                .map(|s| format!("{s:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ))
}

fn h1_check() -> Outcome {
    let report = verify_h1(0.1, 3)?;
    let m15 = zero_multiplicity(15, 0.1)?;
    let pass = report.pass && report.zero_multiplicity == 0 && m15 == 0;
    Ok((
        pass,
        format!(
            "dist {:.4e} vs 0.1 delta^2 = {:.1e}; zero multiplicity {} on [-8,8]^2, {m15} on [-15,15]^2",
            report.distance,
            report.margin * report.delta.powi(2),
            report.zero_multiplicity
        ),
    ))
}

fn newton_certificate(mode: Mode) -> Outcome {
    let delta = 0.05;
    let js: &[i64] = if mode == Mode::Quick {
        &[8, 12]
    } else {
        &[8, 12, 16, 20]
    };
    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_diff: f64 = 0.0;
    for &j in js {
        let lb = LambdaBox::with_rule(j, LRule::Minimal)?;
        let (pair, cert) =
            solve_local_eigenpair(&lb, delta, default_tolerance(delta), DEFAULT_MAX_ITER)?;
        let dense = dense_local_eigenpair(&lb, delta)?;
        let diff = (pair.energy - dense.energy).abs();
        worst_ratio = worst_ratio.max(cert.max_ratio());
        worst_diff = worst_diff.max(diff);
        pass &= cert.converged
            && cert.contraction_holds()
            && cert.delta_e_bound_holds()
            && diff <= 1e-10;
    }
    Ok((
        pass,
        format!("j in {js:?}: max contraction ratio {worst_ratio:.2e}, max |E_newton - E_dense| {worst_diff:.2e}"),
    ))
}

fn asymptotics(mode: Mode) -> Outcome {
    let delta = 0.05;
    let hi = if mode == Mode::Quick { 24 } else { 40 };
    let js: Vec<i64> = (10..=hi).collect();
    let min = eigenvalue_asymptotics(delta, &js, LRule::Minimal)?;
    let max = eigenvalue_asymptotics(delta, &js, LRule::Maximal)?;
    let target = -delta * delta;
    let lead_ok = (min.leading_coeff - target).abs() <= 0.05 * target.abs();
    let a4_gap = (min.a4_estimate - max.a4_estimate).abs();
    let a4_err = min.a4_stderr.hypot(max.a4_stderr);
    let a4_ok = a4_gap <= a4_err;
    let pass = lead_ok && a4_ok && !min.flagged() && !max.flagged();
    Ok((
        pass,
        format!(
            "leading coeff {:.6e} vs -delta^2 = {target:.1e} ({}); a4 {:.2} vs {:.2}, gap {a4_gap:.3} within {a4_err:.3} ({})",
            min.leading_coeff,
            if lead_ok { "ok" } else { "off" },
            min.a4_estimate,
            max.a4_estimate,
            if a4_ok { "ok" } else { "off" },
        ),
    ))
}

fn localization(mode: Mode) -> Outcome {
    let delta = 0.1;
    let j_max: i64 = if mode == Mode::Quick { 12 } else { 20 };
    let b = LatticeBox::from_ranges(-j_max..=j_max, -(j_max * j_max + 10)..=10)?;
    let c = classify_spectrum(delta, &b, DEFAULT_K_HINT, DEFAULT_MASS_THRESHOLD)?;
    let scan = local_spectrum_scan(delta, j_max, LRule::Minimal)?;
    let fit = boundary_fit(&scan, 8)?;
    let pass = c.all_classified()
        && c.min_rate() >= 0.3
        && scan.failures.is_empty()
        && fit.alpha > 0.0
        && fit.envelope_respected();
    Ok((
        pass,
        format!(
            "{} pairs on {b}: {} origin, {} parabola, {} unclassified; min rate {:.3}; boundary alpha {:.3}",
            c.entries.len(),
            c.origin_count,
            c.parabola_count,
            c.unclassified,
            c.min_rate(),
            fit.alpha
        ),
    ))
}

fn spacing(mode: Mode) -> Outcome {
    let j_max = if mode == Mode::Quick { 15 } else { 30 };
    let scan = local_spectrum_scan(0.1, j_max, LRule::Minimal)?;
    let r = spacing_report(&scan)?;
    Ok((
        r.min_gap_scaled >= 1.0 && scan.failures.is_empty(),
        format!(
            "min gap min(j,j')^3/delta^2 = {:.4} for |j| <= {j_max}",
            r.min_gap_scaled
        ),
    ))
}

fn boundedness(mode: Mode) -> Outcome {
    let (radius, periods) = if mode == Mode::Quick {
        (32, 1000)
    } else {
        (64, 10_000)
    };
    let u0 = FourierState::power_law(radius, 2.0)?;
    let tr = evolve(&u0, 0.1, 2.0 * PI * periods as f64, 64, &[1.0, 2.0])?;
    let stab: Vec<_> = (0..2).map(|k| tr.stabilization(k)).collect();
    let pass = tr.l2_drift <= 1e-8
        && !tr.truncation_unsafe
        && stab.iter().all(|s| s.ratio <= 1.1 && s.envelope_respected);
    Ok((
        pass,
        format!(
            "J={radius}, {periods} periods: l2 drift {:.2e}; last/first decade max H^1 {:.4}, H^2 {:.4}; envelope {}",
            tr.l2_drift,
            stab[0].ratio,
            stab[1].ratio,
            if stab.iter().all(|s| s.envelope_respected) { "respected" } else { "violated" }
        ),
    ))
}

fn bloch(mode: Mode) -> Outcome {
    let (steps, periods) = if mode == Mode::Quick {
        (4096, 3)
    } else {
        (8192, 10)
    };
    let u0 = FourierState::power_law_truncated(16, 2.0, 8)?;
    let basis = build_bloch_basis(0.1, 16, 16, &u0)?;
    let opts = EvolveOptions {
        steps_per_period: steps,
        grid_size: None,
        s_values: vec![0.0],
        keep_states: true,
    };
    let tr = evolve_with(&u0, 0.1, 2.0 * PI * periods as f64, &opts)?;
    let norm = u0.l2_norm();
    let mut worst: f64 = 0.0;
    for st in &tr.states[1..] {
        let b = bloch_reconstruct(&basis, &u0, st.time)?;
        worst = worst.max(b.distance(st) / norm);
    }
    Ok((
        worst <= 1e-6,
        format!(
            "max relative l2 gap {worst:.2e} over {periods} stroboscopic times (basis completeness defect {:.1e})",
            basis.completeness_defect
        ),
    ))
}

/// Deterministic sweep of the lattice invariants.
fn lattice_invariants() -> floquet_core::Result<(usize, Vec<String>)> {
    let mut failures = Vec::new();
    let mut checked = 0;
    let boxes = [
        LatticeBox::centered(1),
        LatticeBox::centered(4),
        LatticeBox::new(Site::new(3, -9), 3, 2),
        LatticeBox::new(Site::new(-5, -20), 2, 4),
        LatticeBox::new(Site::new(0, 7), 4, 1),
    ];
    for b in boxes {
        for delta in [0.0, 0.05, 0.1, 0.2] {
            checked += 1;
            let op = FloquetOperator::full(b, delta)?;
            let m = op.to_dense()?;
            let mut ok = true;
            for x in 0..op.dim() {
                for y in 0..op.dim() {
                    let want = if x == y {
                        op.site(x).diagonal() as f64
                    } else if op.site(x).is_hopping_neighbor(op.site(y)) {
                        delta
                    } else {
                        0.0
                    };
                    ok &= m[(x, y)] == want && m[(x, y)] == m[(y, x)];
                }
            }
            if !ok {
                failures.push(format!("stencil/symmetry on {b} at delta {delta}"));
            }
            let v: Vec<f64> = (0..op.dim())
                .map(|i| ((i * 7919) % 13) as f64 - 6.0)
                .collect();
            let (a, c) = (op.apply(&v)?, op.apply_matrix_free(&v)?);
            if a.iter()
                .zip(&c)
                .any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
            {
                failures.push(format!("banded vs matrix-free product on {b}"));
            }
            let excluded: Vec<Site> = b.sites().step_by(3).collect();
            let sub = FloquetOperator::new(b, delta, excluded.iter().copied())?;
            let sm = sub.to_dense()?;
            let principal = (0..sub.dim()).all(|x| {
                (0..sub.dim()).all(|y| {
                    sm[(x, y)]
                        == m[(
                            b.index_of(sub.site(x)).unwrap(),
                            b.index_of(sub.site(y)).unwrap(),
                        )]
                })
            });
            if !principal {
                failures.push(format!("restriction on {b}"));
            }
            let mut s0 = dense_spectrum(&op)?.0;
            s0.sort_by(f64::total_cmp);
            for k in [-3i64, 5] {
                let mut sk = dense_spectrum(&FloquetOperator::full(b.translated(0, k), delta)?)?.0;
                sk.sort_by(f64::total_cmp);
                if s0
                    .iter()
                    .zip(&sk)
                    .any(|(x, y)| (x + k as f64 - y).abs() > 1e-10 * (1.0 + x.abs()))
                {
                    failures.push(format!("translation covariance on {b} by {k}"));
                }
            }
        }
    }
    Ok((checked, failures))
}

fn structure() -> Outcome {
    let separation = check_parabola_separation(50);
    let resonance = check_single_resonance(50);
    let (checked, failures) = lattice_invariants()?;
    let pass = separation.is_ok() && resonance.is_ok() && failures.is_empty();
    let mut detail = format!(
        "separation {}; single resonance {}; lattice invariants on {checked} operators",
        match separation {
            Ok(()) => "ok for 2 <= |j|,|j'| <= 50".to_string(),
            Err((a, b)) => format!("fails at ({a}, {b})"),
        },
        match resonance {
            Ok(n) => format!("ok on {n} boxes"),
            Err((j, l)) => format!("fails at j={j}, L={l}"),
        },
    );
    if !failures.is_empty() {
        detail += &format!(", failures: {}", failures.join("; "));
    }
    Ok((pass, detail))
}
