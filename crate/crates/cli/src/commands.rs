//! The four subcommands. Each validates its config, writes its outputs
//! through a [`Run`] and returns the finished manifest.

use std::f64::consts::PI;
use std::io::Write;

use floquet_core::evolution::{
    bloch_reconstruct, build_bloch_basis, evolve, evolve_with, EvolveOptions, FourierState,
};
use floquet_core::feshbach::verify_h1;
use floquet_core::lattice::DeltaRegime;
use floquet_core::localization::{local_spectrum_scan, spacing_report};
use floquet_core::newton::{
    dense_local_eigenpair, eigenvalue_asymptotics, solve_local_eigenpair, LambdaBox,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::manifest::{Run, RunManifest};
use crate::suite::{run_suite, Mode};
use crate::CliError;

fn begin(command: &str, config: &ExperimentConfig) -> Result<Run, CliError> {
    config.validate()?;
    let mut run = Run::start(command, config)?;
    if DeltaRegime::of(config.delta) == DeltaRegime::OutsideTheory {
        run.warn(format!(
            "delta = {} >= 1/4 is outside the range covered by the theory",
            config.delta
        ));
    }
    Ok(run)
}

/// Zero-gap report, local eigenvalue table and spacing report.
pub fn cmd_spectrum(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let mut run = begin("spectrum", config)?;
    let delta = config.delta;

    let h1 = verify_h1(delta, config.l0)?;
    run.write_json("h1.json", &h1)?;
    run.check(
        "h1",
        h1.pass,
        format!(
            "dist(0, spectrum \\ 0) = {:.4e} on {}",
            h1.distance, h1.lattice_box
        ),
    );
    if !h1.exceeds_threshold {
        run.warn(format!(
            "dist {:.3e} does not exceed exp(-L0) = {:.3e}",
            h1.distance, h1.threshold
        ));
    }

    if delta == 0.0 {
        // Every Lambda_j carries the single eigenvalue 0 at (j, -j^2).
        let j_max = config.j_max;
        run.write("local_spectrum.csv", |w| {
            writeln!(w, "j,lambda,scaled")?;
            for j in (-j_max..=j_max).filter(|j| j.abs() >= 3) {
                writeln!(w, "{j},0e0,")?;
            }
            Ok(())
        })?;
        run.check("local_solves", true, "trivial spectrum {n + j^2}");
        run.check("spacing", true, "vacuous at delta = 0");
    } else if DeltaRegime::of(delta) == DeltaRegime::OutsideTheory {
        run.warn("local eigenvalue scan and spacing report skipped for delta >= 1/4");
    } else {
        let scan = local_spectrum_scan(delta, config.j_max, config.l_rule)?;
        run.write("local_spectrum.csv", |w| scan.write_csv(w))?;
        run.check(
            "local_solves",
            scan.failures.is_empty(),
            format!(
                "{} local eigenvalues, {} failed boxes",
                scan.local.len(),
                scan.failures.len()
            ),
        );
        let report = spacing_report(&scan)?;
        run.write_json("spacing.json", &report)?;
        run.check(
            "spacing",
            report.min_gap_scaled >= 1.0,
            format!("min gap min(j,j')^3/delta^2 = {:.4}", report.min_gap_scaled),
        );
    }
    run.finish()
}

/// Newton certificates for every target `j`, the dense comparison and,
/// for ranges, the inverse-power fit.
pub fn cmd_newton(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let mut run = begin("newton", config)?;
    let delta = config.delta;
    let tol = config.newton_tolerance();
    let js = config.j.values();

    let solved: Vec<_> = js
        .par_iter()
        .map(|&j| -> Result<_, CliError> {
            let lb = LambdaBox::with_rule(j, config.l_rule)?;
            let (pair, cert) = solve_local_eigenpair(&lb, delta, tol, config.max_iter)?;
            let dense = if config.compare_dense {
                Some(dense_local_eigenpair(&lb, delta)?.energy)
            } else {
                None
            };
            Ok((j, pair, cert, dense))
        })
        .collect::<Result<_, _>>()?;

    let certs: Vec<_> = solved.iter().map(|(_, _, c, _)| c).collect();
    run.write_json("certificates.json", &certs)?;
    for (j, pair, cert, _) in &solved {
        run.check(
            &format!("newton_j{j}"),
            cert.converged && cert.contraction_holds() && cert.delta_e_bound_holds(),
            format!(
                "E = {:.15e} after {} iterations, max ratio {:.2e}",
                pair.energy,
                cert.iterations,
                cert.max_ratio()
            ),
        );
    }
    if config.j.is_single() {
        let (j, pair, _, _) = &solved[0];
        run.write(&format!("eigenvector_j{j}.csv"), |w| pair.write_csv(w))?;
    }

    if config.compare_dense {
        let mut worst: f64 = 0.0;
        run.write("compare_dense.csv", |w| {
            writeln!(w, "j,E_newton,E_dense,diff")?;
            for (j, pair, _, dense) in &solved {
                let d = dense.expect("dense energy requested");
                worst = worst.max((pair.energy - d).abs());
                writeln!(
                    w,
                    "{j},{:.17e},{d:.17e},{:.3e}",
                    pair.energy,
                    (pair.energy - d).abs()
                )?;
            }
            Ok(())
        })?;
        run.check(
            "compare_dense",
            worst <= 1e-10,
            format!("max |E_newton - E_dense| = {worst:.3e}"),
        );
    }

    if js.len() >= 3 && delta > 0.0 {
        let fit = eigenvalue_asymptotics(delta, &js, config.l_rule)?;
        run.write_json("asymptotics.json", &fit)?;
        let target = -delta * delta;
        run.check(
            "leading_coefficient",
            (fit.leading_coeff - target).abs() <= 0.05 * target.abs() && !fit.flagged(),
            format!(
                "fitted {:.6e} vs -delta^2 = {target:.3e} (E_j j^2 / delta^2 -> {:.5})",
                fit.leading_coeff, fit.normalized_leading
            ),
        );
    }
    run.finish()
}

/// Norm history of the power-law datum, and optionally the Bloch cross-check.
pub fn cmd_evolve(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let mut run = begin("evolve", config)?;
    let delta = config.delta;
    let u0 = FourierState::power_law(config.big_j, config.power)?;
    let tr = evolve(
        &u0,
        delta,
        2.0 * PI * config.periods as f64,
        config.steps_per_period,
        &config.s_values,
    )?;
    run.write("norms.csv", |w| tr.write_csv(w))?;
    let stab: Vec<_> = (0..tr.s_values.len())
        .map(|k| tr.stabilization(k))
        .collect();
    run.write_json(
        "evolution.json",
        &serde_json::json!({
            "delta": delta,
            "grid_size": tr.grid_size,
            "periods": config.periods,
            "l2_drift": tr.l2_drift,
            "truncation_mass": tr.truncation_mass,
            "truncation_unsafe": tr.truncation_unsafe,
            "stabilization": stab,
        }),
    )?;
    run.check(
        "unitarity",
        tr.l2_drift <= 1e-8,
        format!("l2 drift {:.3e}", tr.l2_drift),
    );
    run.check(
        "truncation",
        !tr.truncation_unsafe,
        format!("top-mode mass {:.3e}", tr.truncation_mass),
    );
    for s in &stab {
        run.check(
            &format!("stabilization_s{}", s.s),
            s.ratio <= 1.1 && s.envelope_respected,
            format!(
                "last/first decade max ratio {:.5}, envelope C_s = {:.4} {}",
                s.ratio,
                s.envelope_constant,
                if s.envelope_respected {
                    "respected"
                } else {
                    "violated"
                }
            ),
        );
    }

    if config.bloch_check {
        let radius = config.bloch_j;
        let ub = FourierState::power_law_truncated(radius, config.power, radius / 2)?;
        let basis = build_bloch_basis(delta, radius, config.n_max, &ub)?;
        let opts = EvolveOptions {
            steps_per_period: config.bloch_steps_per_period,
            grid_size: None,
            s_values: vec![0.0],
            keep_states: true,
        };
        let tb = evolve_with(&ub, delta, 2.0 * PI * config.bloch_periods as f64, &opts)?;
        let norm = ub.l2_norm();
        let mut rows = Vec::new();
        for st in &tb.states[1..] {
            let b = bloch_reconstruct(&basis, &ub, st.time)?;
            rows.push((st.time, b.distance(st) / norm));
        }
        let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        run.write("bloch.csv", |w| {
            writeln!(w, "t,relative_l2_gap")?;
            for (t, e) in &rows {
                writeln!(w, "{t:.10},{e:.6e}")?;
            }
            Ok(())
        })?;
        run.check(
            "bloch_cross_check",
            worst <= 1e-6,
            format!(
                "max relative gap {worst:.3e}; basis completeness defect {:.2e}",
                basis.completeness_defect
            ),
        );
    }
    run.finish()
}

/// The whole acceptance suite; status lines go to `out` as they finish.
pub fn cmd_verify_all<W: Write>(
    config: &ExperimentConfig,
    mut out: W,
) -> Result<RunManifest, CliError> {
    let mut run = begin("verify-all", config)?;
    let mode = if config.quick {
        Mode::Quick
    } else {
        Mode::Full
    };
    let results = run_suite(mode, config.seed, |r| {
        let _ = writeln!(out, "{}", r.line());
        let _ = out.flush();
    });
    run.write_json("acceptance.json", &results)?;
    for r in &results {
        run.check(
            &format!("criterion_{}", r.id),
            r.pass,
            format!("{}: {}", r.title, r.detail),
        );
    }
    run.finish()
}
