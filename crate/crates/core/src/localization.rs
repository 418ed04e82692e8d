//! Localization and spacing diagnostics for eigenpairs near `E = 0`.
//!
//! The near-zero spectrum comes from two sources: the core box
//! `Lambda_0 = [-8, 8]^2` around the origin, and the boxes `Lambda_{+-j}`
//! around the parabola points `(+-j, -j^2)`. Eigenvectors of a large box in
//! `[-2 delta, 2 delta]` should either concentrate near `(0, [E]) = (0, 0)`
//! or near a mirrored pair of parabola points; [`classify_spectrum`] checks
//! that dichotomy with exponential envelope fits. Distances are `l1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenpair::{EigenPair, Method};
use crate::error::{Error, Result};
use crate::lattice::{check_delta, parabola_site, FloquetOperator, LatticeBox, Site};
use crate::linalg::{window_eigenpairs, DENSE_LIMIT};
use crate::newton::{
    default_tolerance, dense_local_eigenpair, resolvent_constant, solve_local_eigenpair,
    ConvergenceCert, LRule, LambdaBox, DEFAULT_MAX_ITER,
};

/// `l1` radius around a center within which mass counts as concentrated.
pub const DEFAULT_K_HINT: f64 = 2.0;

/// Mass fraction required near the chosen centers.
pub const DEFAULT_MASS_THRESHOLD: f64 = 0.5;

/// Entries below this magnitude are left out of decay fits.
pub const DECAY_FLOOR: f64 = 1e-13;

/// Largest tolerated noise plateau in a decay fit.
pub const NOISE_LIMIT: f64 = 1e-9;

/// Half-width of the core box `Lambda_0`.
pub const CORE_HALF_WIDTH: u32 = 8;

/// Eigenvalues closer than this to zero count as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

pub fn core_box() -> LatticeBox {
    LatticeBox::centered(CORE_HALF_WIDTH)
}

/// `[E]`, taken as the nearest integer.
pub fn integer_part(energy: f64) -> i64 {
    energy.round() as i64
}

/// A `Lambda_j` eigenpair with the Newton certificate when Newton produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalEigen {
    pub j: i64,
    pub pair: EigenPair,
    pub cert: Option<ConvergenceCert>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalSpectrum {
    pub delta: f64,
    pub j_max: i64,
    pub rule: LRule,
    /// Eigenpairs of `Lambda_0` in `[-2 delta, 2 delta]`.
    pub core: Vec<EigenPair>,
    /// One entry per `j` with `3 <= |j| <= j_max`, ordered by `j`.
    pub local: Vec<LocalEigen>,
    /// Boxes whose solve failed.
    pub failures: Vec<(i64, String)>,
}

impl LocalSpectrum {
    pub fn pairs(&self) -> impl Iterator<Item = &EigenPair> {
        self.core.iter().chain(self.local.iter().map(|l| &l.pair))
    }

    pub fn lambda(&self, j: i64) -> Option<f64> {
        self.local.iter().find(|l| l.j == j).map(|l| l.pair.energy)
    }

    /// Nonzero core eigenvalues.
    pub fn mu(&self) -> Vec<f64> {
        self.core
            .iter()
            .map(|p| p.energy)
            .filter(|e| e.abs() > ZERO_TOLERANCE)
            .collect()
    }

    /// `j,lambda_j,lambda_j*j^2/delta^2` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "j,lambda,scaled")?;
        for l in &self.local {
            let scaled = l.pair.energy * (l.j * l.j) as f64 / (self.delta * self.delta);
            writeln!(w, "{},{:e},{:.12}", l.j, l.pair.energy, scaled)?;
        }
        Ok(())
    }
}

fn window_pairs(op: &FloquetOperator, delta: f64) -> Result<Vec<EigenPair>> {
    let w = 2.0 * delta + 1e-14;
    let method = if op.dim() <= DENSE_LIMIT {
        Method::Dense
    } else {
        Method::ShiftInvert
    };
    window_eigenpairs(op, -w, w)?
        .into_iter()
        .map(|p| EigenPair::new(op, p.value, p.vector, method, None))
        .collect()
}

/// Eigenpairs of `Lambda_0` and of every `Lambda_{+-j}`, `3 <= |j| <= j_max`,
/// in `[-2 delta, 2 delta]`. Newton is used above the convergence threshold
/// `j0`, a direct eigensolve below it.
pub fn local_spectrum_scan(delta: f64, j_max: i64, rule: LRule) -> Result<LocalSpectrum> {
    check_delta(delta)?;
    if delta == 0.0 || delta >= 0.25 {
        return Err(Error::param("delta", "scan needs 0 < delta < 1/4"));
    }
    if j_max < 5 {
        return Err(Error::param("j_max", "need j_max >= 5"));
    }
    let core = window_pairs(&FloquetOperator::full(core_box(), delta)?, delta)?;
    let c = resolvent_constant(delta);
    let j0 = 4.0 * c * c * 2.0 * delta;
    let js: Vec<i64> = (3..=j_max).flat_map(|j| [-j, j]).collect();
    let results: Vec<(i64, Result<LocalEigen>)> = js
        .par_iter()
        .map(|&j| {
            let r = LambdaBox::with_rule(j, rule).and_then(|lb| {
                if j.abs() as f64 > j0 {
                    let (pair, cert) = solve_local_eigenpair(
                        &lb,
                        delta,
                        default_tolerance(delta),
                        DEFAULT_MAX_ITER,
                    )?;
                    Ok(LocalEigen {
                        j,
                        pair,
                        cert: Some(cert),
                    })
                } else {
                    Ok(LocalEigen {
                        j,
                        pair: dense_local_eigenpair(&lb, delta)?,
                        cert: None,
                    })
                }
            });
            (j, r)
        })
        .collect();
    let mut local = Vec::new();
    let mut failures = Vec::new();
    for (j, r) in results {
        match r {
            Ok(l) => local.push(l),
            Err(e) => failures.push((j, e.to_string())),
        }
    }
    local.sort_by_key(|l| l.j);
    Ok(LocalSpectrum {
        delta,
        j_max,
        rule,
        core,
        local,
        failures,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingReport {
    pub delta: f64,
    /// Smallest nonzero `|mu|` over the core eigenvalues in the window.
    pub mu_min: f64,
    /// `delta / sqrt(mu_min)`.
    #[serde(rename = "K_prime")]
    pub k_prime: f64,
    /// `(j, j', |lambda_j - lambda_j'|)` for `3 <= j < j' <= j_max`.
    pub gaps: Vec<(i64, i64, f64)>,
    /// `min gap * min(j, j')^3 / delta^2`.
    pub min_gap_scaled: f64,
    /// Least-squares `c` in `lambda_j ~ c delta^2 / j^2`.
    pub fitted_c: f64,
    /// Pairs with `gap < |fitted_c| delta^2 / min(j, j')^3`.
    pub violations: Vec<(i64, i64, f64)>,
    /// Largest `|lambda_{+j} - lambda_{-j}|`.
    pub reflection_defect: f64,
    /// Smallest `|lambda_j - mu|` over `j > K'` and nonzero core `mu`.
    pub lambda_mu_gap: f64,
    /// `mu_min - max_{j > K'} |lambda_j|`.
    pub lambda_mu_bound: f64,
}

impl SpacingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Gap statistics of the scanned local spectrum.
pub fn spacing_report(scan: &LocalSpectrum) -> Result<SpacingReport> {
    let delta = scan.delta;
    let d2 = delta * delta;
    let mu = scan.mu();
    let mu_min = mu.iter().map(|m| m.abs()).fold(f64::INFINITY, f64::min);
    if !mu_min.is_finite() {
        return Err(Error::param(
            "scan",
            "no nonzero core eigenvalue in the window",
        ));
    }
    let k_prime = delta / mu_min.sqrt();

    let positive: Vec<(i64, f64)> = (3..=scan.j_max)
        .filter_map(|j| scan.lambda(j).map(|l| (j, l)))
        .collect();
    let reflection_defect = positive
        .iter()
        .filter_map(|(j, l)| scan.lambda(-j).map(|m| (l - m).abs()))
        .fold(0.0, f64::max);

    let fitted_c = {
        let (num, den) = positive.iter().fold((0.0, 0.0), |(a, b), (j, l)| {
            let x = d2 / (j * j) as f64;
            (a + x * l, b + x * x)
        });
        num / den
    };

    let mut gaps = Vec::new();
    let mut min_gap_scaled = f64::INFINITY;
    let mut violations = Vec::new();
    for (a, &(j, lj)) in positive.iter().enumerate() {
        for &(k, lk) in &positive[a + 1..] {
            let gap = (lj - lk).abs();
            let m = j.min(k) as f64;
            min_gap_scaled = min_gap_scaled.min(gap * m.powi(3) / d2);
            if gap < fitted_c.abs() * d2 / m.powi(3) {
                violations.push((j, k, gap));
            }
            gaps.push((j, k, gap));
        }
    }

    let far: Vec<f64> = positive
        .iter()
        .filter(|(j, _)| *j as f64 > k_prime)
        .map(|(_, l)| *l)
        .collect();
    let lambda_mu_gap = far
        .iter()
        .flat_map(|l| mu.iter().map(move |m| (l - m).abs()))
        .fold(f64::INFINITY, f64::min);
    let lambda_mu_bound = mu_min - far.iter().map(|l| l.abs()).fold(0.0, f64::max);

    Ok(SpacingReport {
        delta,
        mu_min,
        k_prime,
        gaps,
        min_gap_scaled,
        fitted_c,
        violations,
        reflection_defect,
        lambda_mu_gap,
        lambda_mu_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    /// Concentrated near `(0, [E])`.
    Origin,
    /// Concentrated near `(+-j, -j^2)` for one `j`.
    ParabolaPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub class: DecayClass,
    pub centers: Vec<Site>,
    /// Mass fraction within `K_hint` of the centers.
    pub mass_near_centers: f64,
    /// Exponential rate in `l1` distance; zero when degenerate.
    pub rate: f64,
    /// Smallest prefactor for which the envelope holds at the fitted rate.
    pub prefactor: f64,
    /// `max_x |phi(x)| - prefactor * sum_i exp(-rate |x - c_i|)` over sites
    /// above `noise_floor`, and at least zero.
    pub max_violation: f64,
    /// Largest `|phi|` beyond the resolved head; entries below it are not
    /// distinguishable from solver noise.
    pub noise_floor: f64,
    /// Fewer than two distinct distances above the floor.
    pub degenerate: bool,
}

impl DecayFit {
    pub fn passes(&self) -> bool {
        self.max_violation <= 1e-10
            && self.noise_floor <= NOISE_LIMIT
            && (self.degenerate || self.rate > 0.0)
    }
}

fn mass_within(pair: &EigenPair, centers: &[Site], radius: f64) -> f64 {
    pair.sites()
        .filter(|(s, _)| centers.iter().any(|c| s.l1_distance(*c) as f64 <= radius))
        .map(|(_, v)| v * v)
        .sum()
}

/// Choose centers for `pair`, then fit an exponential envelope around them.
///
/// The rate is the least-squares slope of `log max |phi|` per distance over
/// the resolved head, where entries still exceed [`DECAY_FLOOR`]. The
/// prefactor is the smallest one that makes the envelope hold there.
///
/// The origin `(0, [E])` is chosen when more than `mass_threshold` of the
/// mass lies within `k_hint` of it; otherwise the parabola site carrying the
/// largest `|phi|` and its mirror image (when inside the box) are tried.
pub fn decay_fit(pair: &EigenPair, k_hint: f64, mass_threshold: f64) -> Result<DecayFit> {
    let origin = Site::new(0, integer_part(pair.energy));
    let total: f64 = pair.phi.iter().map(|v| v * v).sum();
    let near_origin = mass_within(pair, &[origin], k_hint) / total;

    let (class, centers, mass) = if near_origin > mass_threshold {
        (DecayClass::Origin, vec![origin], near_origin)
    } else {
        let peak = pair
            .lattice_box
            .parabola_sites()
            .into_iter()
            .max_by(|a, b| pair.value_at(*a).abs().total_cmp(&pair.value_at(*b).abs()));
        let Some(peak) = peak else {
            return Err(Error::Unclassifiable(format!(
                "E = {:e}: mass {near_origin:.3} near {origin} and no parabola site in the box",
                pair.energy
            )));
        };
        let mut centers = vec![parabola_site(peak.j.abs())];
        let mirror = parabola_site(-peak.j.abs());
        if mirror != centers[0] && pair.lattice_box.contains(mirror) {
            centers.push(mirror);
        }
        centers.retain(|c| pair.lattice_box.contains(*c));
        let m = mass_within(pair, &centers, k_hint) / total;
        if m <= mass_threshold {
            return Err(Error::Unclassifiable(format!(
                "E = {:e}: mass {near_origin:.3} near {origin}, {m:.3} near {:?}",
                pair.energy, centers
            )));
        }
        (DecayClass::ParabolaPair, centers, m)
    };

    let dist = |s: Site| -> i64 { centers.iter().map(|c| s.l1_distance(*c)).min().unwrap_or(0) };
    let mut maxima: Vec<f64> = Vec::new();
    for (s, v) in pair.sites() {
        let d = dist(s) as usize;
        if maxima.len() <= d {
            maxima.resize(d + 1, 0.0);
        }
        maxima[d] = maxima[d].max(v.abs());
    }
    // The resolved head ends at the first two consecutive distances below the
    // floor (odd distances vanish on the other sublattice, so one is not enough).
    // A center itself can carry no weight (odd states vanish at j = 0), so
    // the search starts at the first resolved distance.
    let start = maxima.iter().position(|m| *m > DECAY_FLOOR).unwrap_or(0);
    let mut cutoff = maxima.len() - 1;
    for d in start + 1..maxima.len() {
        if maxima[d] <= DECAY_FLOOR && maxima[d - 1] <= DECAY_FLOOR {
            cutoff = d;
            break;
        }
    }
    let head: Vec<(f64, f64)> = maxima[..=cutoff]
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > DECAY_FLOOR)
        .map(|(d, m)| (d as f64, m.ln()))
        .collect();
    let noise_floor = pair
        .sites()
        .filter(|(s, _)| dist(*s) as usize > cutoff)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);

    let degenerate = head.len() < 2;
    let rate = if degenerate {
        0.0
    } else {
        let n = head.len() as f64;
        let (sx, sy, sxx, sxy) = head.iter().fold((0.0, 0.0, 0.0, 0.0), |acc, (x, y)| {
            (acc.0 + x, acc.1 + y, acc.2 + x * x, acc.3 + x * y)
        });
        -(n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let envelope = |s: Site| -> f64 {
        centers
            .iter()
            .map(|c| (-rate * s.l1_distance(*c) as f64).exp())
            .sum()
    };
    let prefactor = pair
        .sites()
        .filter(|(s, _)| dist(*s) as usize <= cutoff)
        .map(|(s, v)| v.abs() / envelope(s))
        .fold(0.0, f64::max);
    let max_violation = pair
        .sites()
        .filter(|(_, v)| v.abs() > noise_floor)
        .map(|(s, v)| v.abs() - prefactor * envelope(s))
        .fold(0.0, f64::max);

    Ok(DecayFit {
        class,
        centers,
        mass_near_centers: mass,
        rate,
        prefactor,
        max_violation,
        noise_floor,
        degenerate,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifiedPair {
    pub energy: f64,
    pub residual: f64,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub delta: f64,
    pub lattice_box: LatticeBox,
    pub k_hint: f64,
    pub entries: Vec<ClassifiedPair>,
    pub origin_count: usize,
    pub parabola_count: usize,
    pub unclassified: usize,
}

impl Classification {
    pub fn all_classified(&self) -> bool {
        self.unclassified == 0 && !self.entries.is_empty()
    }

    pub fn min_rate(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.fit.as_ref())
            .filter(|f| !f.degenerate)
            .map(|f| f.rate)
            .fold(f64::INFINITY, f64::min)
    }

    /// `E,class,centers,rate,max_violation` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "E,class,centers,rate,max_violation")?;
        for e in &self.entries {
            match &e.fit {
                Some(f) => {
                    let centers: Vec<String> = f
                        .centers
                        .iter()
                        .map(|c| format!("({} {})", c.j, c.n))
                        .collect();
                    let class = match f.class {
                        DecayClass::Origin => "origin",
                        DecayClass::ParabolaPair => "parabola-pair",
                    };
                    writeln!(
                        w,
                        "{:e},{class},{},{:.6},{:e}",
                        e.energy,
                        centers.join(" "),
                        f.rate,
                        f.max_violation
                    )?;
                }
                None => writeln!(w, "{:e},unclassified,,,", e.energy)?,
            }
        }
        Ok(())
    }
}

/// Classify every eigenpair of `H` on `lattice_box` with `|E| <= 2 delta`.
pub fn classify_spectrum(
    delta: f64,
    lattice_box: &LatticeBox,
    k_hint: f64,
    mass_threshold: f64,
) -> Result<Classification> {
    check_delta(delta)?;
    let op = FloquetOperator::full(*lattice_box, delta)?;
    let pairs = window_pairs(&op, delta)?;
    let entries: Vec<ClassifiedPair> = pairs
        .par_iter()
        .map(|p| match decay_fit(p, k_hint, mass_threshold) {
            Ok(f) => ClassifiedPair {
                energy: p.energy,
                residual: p.residual,
                fit: Some(f),
                error: None,
            },
            Err(e) => ClassifiedPair {
                energy: p.energy,
                residual: p.residual,
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let count = |c: DecayClass| {
        entries
            .iter()
            .filter(|e| e.fit.as_ref().map(|f| f.class) == Some(c))
            .count()
    };
    Ok(Classification {
        delta,
        lattice_box: *lattice_box,
        k_hint,
        origin_count: count(DecayClass::Origin),
        parabola_count: count(DecayClass::ParabolaPair),
        unclassified: entries.iter().filter(|e| e.fit.is_none()).count(),
        entries,
    })
}

/// `||phi||` over the boundary sites of its own box.
pub fn boundary_norm(pair: &EigenPair) -> f64 {
    pair.lattice_box
        .boundary_sites()
        .iter()
        .map(|s| pair.value_at(*s).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFit {
    /// `(|j|, ||phi_j||_boundary)`.
    pub samples: Vec<(i64, f64)>,
    /// Largest `alpha` with `||phi_j||_boundary <= exp(-alpha |j|)` for every sample.
    pub alpha: f64,
    /// Least-squares slope of `-log ||phi_j||_boundary` against `|j|` through the origin.
    pub alpha_least_squares: f64,
}

impl BoundaryFit {
    pub fn envelope_respected(&self) -> bool {
        self.alpha > 0.0
            && self
                .samples
                .iter()
                .all(|(j, b)| *b <= (-self.alpha * *j as f64).exp() * (1.0 + 1e-12))
    }
}

/// Fit `exp(-alpha |j|)` to the boundary norms of the local eigenvectors with `|j| >= j_min`.
pub fn boundary_fit(scan: &LocalSpectrum, j_min: i64) -> Result<BoundaryFit> {
    let samples: Vec<(i64, f64)> = scan
        .local
        .iter()
        .filter(|l| l.j.abs() >= j_min)
        .map(|l| (l.j.abs(), boundary_norm(&l.pair)))
        .collect();
    if samples.is_empty() {
        return Err(Error::param(
            "j_min",
            "no local eigenpairs at or above j_min",
        ));
    }
    let alpha = samples
        .iter()
        .map(|(j, b)| -b.ln() / *j as f64)
        .fold(f64::INFINITY, f64::min);
    let (num, den) = samples.iter().fold((0.0, 0.0), |(a, c), (j, b)| {
        let x = *j as f64;
        (a - x * b.ln(), c + x * x)
    });
    Ok(BoundaryFit {
        samples,
        alpha,
        alpha_least_squares: num / den,
    })
}

/// `||(H_outer - E) phi||` for `phi` extended by zero to `outer`.
pub fn embedding_residual(pair: &EigenPair, outer: &LatticeBox) -> Result<f64> {
    let v = pair.embedded_in(outer)?;
    let op = FloquetOperator::full(*outer, pair.delta)?;
    Ok(crate::linalg::residual_norm(&op, pair.energy, &v))
}

/// Largest difference between the sorted eigenvalues of a large box and the
/// sorted union of the core and local eigenvalues; `None` when the counts differ.
pub fn union_mismatch(big: &[f64], scan: &LocalSpectrum, j_limit: i64) -> Option<f64> {
    let mut union: Vec<f64> = scan
        .core
        .iter()
        .map(|p| p.energy)
        .chain(
            scan.local
                .iter()
                .filter(|l| l.j.abs() <= j_limit)
                .map(|l| l.pair.energy),
        )
        .collect();
    let mut big = big.to_vec();
    if union.len() != big.len() {
        return None;
    }
    union.sort_by(f64::total_cmp);
    big.sort_by(f64::total_cmp);
    Some(
        union
            .iter()
            .zip(&big)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    )
}

/// The separation bound `d` between distinct parabola points with
/// abscissae `j` and `j'`.
pub fn parabola_separation_bound(j: i64, jp: i64) -> i64 {
    if j.abs() == jp.abs() {
        2 * j.abs()
    } else {
        (jp.abs() - j.abs()).abs() * (jp.abs() + j.abs())
    }
}

/// Brute-force check of the separation formula for `2 <= |j|, |j'| <= limit`.
/// Returns the first offending pair.
pub fn check_parabola_separation(limit: i64) -> std::result::Result<(), (i64, i64)> {
    let js: Vec<i64> = (2..=limit).flat_map(|j| [-j, j]).collect();
    for &a in &js {
        for &b in &js {
            if a == b {
                continue;
            }
            if parabola_site(a).sup_distance(parabola_site(b)) != parabola_separation_bound(a, b) {
                return Err((a, b));
            }
        }
    }
    Ok(())
}

/// Brute-force check that every admissible `Lambda_j` with `2 <= |j| <= limit`
/// holds exactly one parabola point. Returns the first offending `(j, L)`.
pub fn check_single_resonance(limit: i64) -> std::result::Result<usize, (i64, u32)> {
    let mut checked = 0;
    for j in (2..=limit).flat_map(|j| [-j, j]) {
        let a = j.unsigned_abs() as u32;
        for l in a..=2 * (a - 1) {
            let b = LatticeBox::square(parabola_site(j), l);
            // a parabola point (k, -k^2) can only lie inside when |k - j| <= L
            let inside = (b.j_min()..=b.j_max())
                .filter(|k| b.contains(parabola_site(*k)))
                .count();
            if inside != 1 {
                return Err((j, l));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
