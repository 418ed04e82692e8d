//! The driven Schrödinger equation `i u_t = -u_xx + V(x, t) u` on the circle
//! with `V(x, t) = 2 delta (cos(x + t) + cos(x - t))`.
//!
//! Two independent integrators are provided. [`evolve`] is a Strang
//! split-step scheme on an FFT grid. [`bloch_reconstruct`] expands the data
//! in eigenvectors of the Floquet operator on a `(j, n)` box, each
//! eigenpair `(E, phi)` giving the solution
//! `e^{-iEt} sum_{j,n} phi(j, n) e^{i(jx + nt)}`. Time runs as
//! `u(t) = e^{-iHt} u(0)` in both.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_delta, FloquetOperator, LatticeBox, Site};
use crate::linalg::{dense_spectrum, window_eigenpairs, DENSE_LIMIT};

/// Smallest allowed truncation radius of a [`FourierState`].
pub const MIN_RADIUS: usize = 8;

/// Relative mass in the top tenth of the grid modes above which the run is
/// flagged as truncation-unsafe.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Largest completeness defect accepted by [`bloch_reconstruct`].
pub const COMPLETENESS_LIMIT: f64 = 1e-4;

/// Fourier coefficients `u_j`, `-J <= j <= J`, at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierState {
    coeffs: Vec<Complex64>,
    radius: usize,
    pub time: f64,
}

impl FourierState {
    /// `coeffs[k]` is the coefficient of `j = k - J`.
    pub fn new(radius: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if radius < MIN_RADIUS {
            return Err(Error::param(
                "J",
                format!("need J >= {MIN_RADIUS}, got {radius}"),
            ));
        }
        if coeffs.len() != 2 * radius + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * radius + 1,
                actual: coeffs.len(),
            });
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::param("coeffs", "non-finite coefficient"));
        }
        Ok(FourierState {
            coeffs,
            radius,
            time: 0.0,
        })
    }

    pub fn zeros(radius: usize) -> Result<Self> {
        Self::new(radius, vec![Complex64::new(0.0, 0.0); 2 * radius + 1])
    }

    /// `e^{ikx}`.
    pub fn single_mode(radius: usize, k: i64) -> Result<Self> {
        let mut s = Self::zeros(radius)?;
        *s.coeff_mut(k)
            .ok_or_else(|| Error::param("k", format!("mode {k} outside radius {radius}")))? =
            Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// `u_j = (1 + |j|)^(-p)` for every `|j| <= J`.
    pub fn power_law(radius: usize, p: f64) -> Result<Self> {
        Self::power_law_truncated(radius, p, radius)
    }

    /// `u_j = (1 + |j|)^(-p)` for `|j| <= support`, zero beyond.
    pub fn power_law_truncated(radius: usize, p: f64, support: usize) -> Result<Self> {
        if support > radius {
            return Err(Error::param("support", "exceeds the radius"));
        }
        let coeffs = (0..=2 * radius)
            .map(|k| {
                let j = k as i64 - radius as i64;
                if j.unsigned_abs() as usize <= support {
                    Complex64::new((1.0 + j.abs() as f64).powf(-p), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::new(radius, coeffs)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        self.index(j)
            .map(|k| self.coeffs[k])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coeff_mut(&mut self, j: i64) -> Option<&mut Complex64> {
        self.index(j).map(|k| &mut self.coeffs[k])
    }

    fn index(&self, j: i64) -> Option<usize> {
        (j.unsigned_abs() as usize <= self.radius).then(|| (j + self.radius as i64) as usize)
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let r = self.radius as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, c)| (k as i64 - r, *c))
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||a - b||_2` over the union of both mode ranges.
    pub fn distance(&self, other: &FourierState) -> f64 {
        let r = self.radius.max(other.radius) as i64;
        (-r..=r)
            .map(|j| (self.coeff(j) - other.coeff(j)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Weight `1 + |j|^(2s)` of the Sobolev norm, with `|0|^(2s)` read as zero
/// for every `s`, so the weight is 1 at `j = 0`. At `s = 0` it is 2 on every
/// other mode, hence `||u||_{H^0} <= sqrt(2) ||u||_2`.
pub fn sobolev_weight(j: i64, s: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        1.0 + (j.abs() as f64).powf(2.0 * s)
    }
}

/// `sqrt(sum_j (1 + |j|^(2s)) |u_j|^2)`.
///
/// # Panics
/// If `s < 0`.
pub fn sobolev_norm(state: &FourierState, s: f64) -> f64 {
    assert!(s >= 0.0, "Sobolev index must be nonnegative");
    state
        .modes()
        .map(|(j, c)| sobolev_weight(j, s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 4 || !grid_size.is_power_of_two() {
        return Err(Error::param(
            "grid_size",
            format!("need a power of two >= 4, got {grid_size}"),
        ));
    }
    Ok(())
}

/// Smallest power of two at least `4 J`.
pub fn default_grid_size(radius: usize) -> usize {
    (4 * radius).next_power_of_two()
}

/// `V(x_k, t)` at `x_k = 2 pi k / grid_size`.
pub fn potential_on_grid(delta: f64, t: f64, grid_size: usize) -> Result<Vec<f64>> {
    check_grid(grid_size)?;
    Ok((0..grid_size)
        .map(|k| {
            let x = 2.0 * PI * k as f64 / grid_size as f64;
            2.0 * delta * ((x + t).cos() + (x - t).cos())
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub steps_per_period: usize,
    /// FFT grid; defaults to [`default_grid_size`] of the initial radius.
    pub grid_size: Option<usize>,
    pub s_values: Vec<f64>,
    /// Keep a state snapshot at every period boundary.
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            steps_per_period: 64,
            grid_size: None,
            s_values: vec![1.0, 2.0],
            keep_states: false,
        }
    }
}

/// Norm history at period boundaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub delta: f64,
    pub s_values: Vec<f64>,
    pub grid_size: usize,
    pub steps_per_period: usize,
    /// `t = 2 pi k`, `k = 0, 1, ...`.
    pub times: Vec<f64>,
    /// `norms[i][k]` is `||u(times[i])||_{H^{s_k}}`.
    pub norms: Vec<Vec<f64>>,
    pub l2: Vec<f64>,
    /// `max_t | ||u(t)|| - ||u(0)|| | / ||u(0)||`.
    pub l2_drift: f64,
    /// Largest relative mass seen in the top tenth of grid modes.
    pub truncation_mass: f64,
    pub truncation_unsafe: bool,
    pub final_state: FourierState,
    #[serde(skip)]
    pub states: Vec<FourierState>,
}

/// Boundedness summary for one Sobolev index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stabilization {
    pub s: f64,
    pub first_max: f64,
    pub last_max: f64,
    /// `last_max / first_max`.
    pub ratio: f64,
    /// `C_s = max ||u(t)||_{H^s} / ((1 + t^s) ||u(0)||_{H^s})` over the first tenth.
    pub envelope_constant: f64,
    /// `||u(t)||_{H^s} <= C_s (1 + t^s) ||u(0)||_{H^s}` at every sample.
    pub envelope_respected: bool,
}

impl Trajectory {
    fn column(&self, k: usize) -> Vec<f64> {
        self.norms.iter().map(|row| row[k]).collect()
    }

    /// Compare the maximum over the final tenth of the samples with the
    /// maximum over the first tenth, for `s_values[k]`.
    pub fn stabilization(&self, k: usize) -> Stabilization {
        let col = self.column(k);
        let s = self.s_values[k];
        let tenth = (col.len() / 10).max(1);
        let first_max = col[..tenth].iter().copied().fold(0.0, f64::max);
        let last_max = col[col.len() - tenth..].iter().copied().fold(0.0, f64::max);
        let u0 = col[0];
        let growth = |i: usize| 1.0 + self.times[i].powf(s);
        let envelope_constant = (0..tenth)
            .map(|i| col[i] / (growth(i) * u0))
            .fold(0.0, f64::max);
        let envelope_respected =
            (0..col.len()).all(|i| col[i] <= envelope_constant * growth(i) * u0 * (1.0 + 1e-12));
        Stabilization {
            s,
            first_max,
            last_max,
            ratio: last_max / first_max,
            envelope_constant,
            envelope_respected,
        }
    }

    /// Rows `t,s,norm,l2_drift`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,s,norm,l2_drift")?;
        let l0 = self.l2[0];
        for (i, t) in self.times.iter().enumerate() {
            let drift = (self.l2[i] - l0).abs() / l0;
            for (k, s) in self.s_values.iter().enumerate() {
                writeln!(w, "{t:.10},{s},{:.15e},{drift:.3e}", self.norms[i][k])?;
            }
        }
        Ok(())
    }
}

/// Split-step state on a grid of `m` points; mode `j` sits at index
/// `j mod m`, covering `-m/2 <= j < m/2`.
struct Grid {
    m: usize,
    data: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Grid {
    fn new(m: usize, u0: &FourierState) -> Result<Self> {
        if u0.radius() >= m / 2 {
            return Err(Error::param(
                "grid_size",
                format!("grid of {m} points cannot hold radius {}", u0.radius()),
            ));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in u0.modes() {
            data[j.rem_euclid(m as i64) as usize] = c;
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Grid {
            m,
            data,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    fn mode(&self, k: usize) -> i64 {
        if k < self.m / 2 {
            k as i64
        } else {
            k as i64 - self.m as i64
        }
    }

    fn state(&self, time: f64) -> FourierState {
        let r = self.m / 2 - 1;
        let coeffs = (-(r as i64)..=r as i64)
            .map(|j| self.data[j.rem_euclid(self.m as i64) as usize])
            .collect();
        FourierState {
            coeffs,
            radius: r,
            time,
        }
    }

    fn sobolev(&self, s: f64) -> f64 {
        (0..self.m)
            .map(|k| sobolev_weight(self.mode(k), s) * self.data[k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn l2(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn top_mass(&self) -> f64 {
        let edge = 0.9 * (self.m / 2) as f64;
        let top: f64 = (0..self.m)
            .filter(|&k| self.mode(k).abs() as f64 > edge)
            .map(|k| self.data[k].norm_sqr())
            .sum();
        top / self.l2().powi(2)
    }
}

/// Strang splitting: exact kinetic half step, exact potential step with
/// `V` frozen at the step midpoint, exact kinetic half step.
pub fn evolve_with(
    u0: &FourierState,
    delta: f64,
    horizon: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_delta(delta)?;
    if opts.steps_per_period < 64 {
        return Err(Error::param("steps_per_period", "need at least 64"));
    }
    if opts.s_values.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::param(
            "s_values",
            "Sobolev indices must be nonnegative",
        ));
    }
    let periods = (horizon / (2.0 * PI)).round();
    if !horizon.is_finite()
        || horizon < 0.0
        || (horizon - 2.0 * PI * periods).abs() > 1e-9 * horizon.max(1.0)
    {
        return Err(Error::param("T", "must be a nonnegative multiple of 2 pi"));
    }
    let periods = periods as usize;
    let m = opts
        .grid_size
        .unwrap_or_else(|| default_grid_size(u0.radius()));
    check_grid(m)?;
    let mut grid = Grid::new(m, u0)?;
    if grid.l2() == 0.0 {
        return Err(Error::param("u0", "initial datum is zero"));
    }

    let steps = opts.steps_per_period;
    let dt = 2.0 * PI / steps as f64;
    let half_kinetic: Vec<Complex64> = (0..m)
        .map(|k| {
            let j = grid.mode(k) as f64;
            Complex64::from_polar(1.0, -j * j * dt / 2.0)
        })
        .collect();
    let cos_x: Vec<f64> = (0..m)
        .map(|k| (2.0 * PI * k as f64 / m as f64).cos())
        .collect();
    // V(x, t) = 4 delta cos t cos x; the phase only depends on the step
    // within the period.
    let potential_phase = |step: usize| -> Vec<Complex64> {
        let t_mid = (step as f64 + 0.5) * dt;
        let a = 4.0 * delta * t_mid.cos() * dt;
        cos_x
            .iter()
            .map(|c| Complex64::from_polar(1.0, -a * c))
            .collect()
    };
    let table: Option<Vec<Vec<Complex64>>> =
        (steps * m <= 1 << 22).then(|| (0..steps).map(potential_phase).collect());
    let scale = 1.0 / m as f64;

    let mut times = vec![0.0];
    let mut norms = vec![opts
        .s_values
        .iter()
        .map(|s| grid.sobolev(*s))
        .collect::<Vec<_>>()];
    let l2_0 = grid.l2();
    let mut l2 = vec![l2_0];
    let mut truncation_mass = grid.top_mass();
    let mut states = Vec::new();
    if opts.keep_states {
        states.push(grid.state(0.0));
    }

    for period in 0..periods {
        for step in 0..steps {
            let owned;
            let phase = match &table {
                Some(t) => &t[step],
                None => {
                    owned = potential_phase(step);
                    &owned
                }
            };
            let Grid {
                data,
                forward,
                inverse,
                scratch,
                ..
            } = &mut grid;
            if delta == 0.0 {
                // no potential: the two half steps compose exactly
                data.iter_mut()
                    .zip(&half_kinetic)
                    .for_each(|(u, p)| *u *= p * p);
                continue;
            }
            data.iter_mut()
                .zip(&half_kinetic)
                .for_each(|(u, p)| *u *= p);
            inverse.process_with_scratch(data, scratch);
            data.iter_mut().zip(phase).for_each(|(u, p)| *u *= p);
            forward.process_with_scratch(data, scratch);
            data.iter_mut()
                .zip(&half_kinetic)
                .for_each(|(u, p)| *u *= p * scale);
        }
        let t = 2.0 * PI * (period + 1) as f64;
        times.push(t);
        norms.push(opts.s_values.iter().map(|s| grid.sobolev(*s)).collect());
        l2.push(grid.l2());
        truncation_mass = truncation_mass.max(grid.top_mass());
        if opts.keep_states {
            states.push(grid.state(t));
        }
    }

    let l2_drift = l2
        .iter()
        .map(|v| (v - l2_0).abs() / l2_0)
        .fold(0.0, f64::max);
    let t_end = 2.0 * PI * periods as f64;
    Ok(Trajectory {
        delta,
        s_values: opts.s_values.clone(),
        grid_size: m,
        steps_per_period: steps,
        times,
        norms,
        l2,
        l2_drift,
        truncation_mass,
        truncation_unsafe: truncation_mass > TRUNCATION_LIMIT,
        final_state: grid.state(t_end),
        states,
    })
}

/// [`evolve_with`] on the default grid.
pub fn evolve(
    u0: &FourierState,
    delta: f64,
    horizon: f64,
    steps_per_period: usize,
    s_values: &[f64],
) -> Result<Trajectory> {
    evolve_with(
        u0,
        delta,
        horizon,
        &EvolveOptions {
            steps_per_period,
            s_values: s_values.to_vec(),
            ..Default::default()
        },
    )
}

/// Eigenpairs of the Floquet operator on `[-J, J] x [-N, N]`.
#[derive(Debug, Clone)]
pub struct BlochBasis {
    pub delta: f64,
    pub lattice_box: LatticeBox,
    pub energies: Vec<f64>,
    /// One column per eigenpair, rows in the box's site order.
    pub vectors: DMatrix<f64>,
    /// `||u0~ - sum_phi (u0~, phi) phi||` for the datum the basis was built
    /// for, including any mass of `u0` outside `|j| <= J`.
    pub completeness_defect: f64,
    /// `max |V^T V - I|`.
    pub orthogonality_defect: f64,
}

impl BlochBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.lattice_box.half_width_j as usize
    }

    /// `(u0~, phi)` for every basis vector.
    fn overlaps(&self, u0: &FourierState) -> Vec<Complex64> {
        let r = self.radius() as i64;
        let rows: Vec<(usize, Complex64)> = (-r..=r)
            .map(|j| {
                let i = self
                    .lattice_box
                    .index_of(Site::new(j, 0))
                    .expect("n = 0 row");
                (i, u0.coeff(j))
            })
            .collect();
        (0..self.len())
            .map(|c| rows.iter().map(|(i, u)| u * self.vectors[(*i, c)]).sum())
            .collect()
    }

    fn defect_for(&self, u0: &FourierState) -> f64 {
        let overlaps = self.overlaps(u0);
        let b = &self.lattice_box;
        let r = self.radius() as i64;
        let mut defect2 = 0.0;
        for i in 0..b.len() {
            let s = b.site_at(i);
            let target = if s.n == 0 {
                u0.coeff(s.j)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let approx: Complex64 = overlaps
                .iter()
                .enumerate()
                .map(|(c, o)| o * self.vectors[(i, c)])
                .sum();
            defect2 += (target - approx).norm_sqr();
        }
        let outside: f64 = u0
            .modes()
            .filter(|(j, _)| j.abs() > r)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        (defect2 + outside).sqrt()
    }
}

fn check_bloch_box(radius: usize, n_max: usize) -> Result<LatticeBox> {
    if radius < 1 {
        return Err(Error::param("J", "need J >= 1"));
    }
    Ok(LatticeBox::new(
        Site::new(0, 0),
        radius as u32,
        n_max as u32,
    ))
}

fn orthogonality_defect(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    (g - DMatrix::identity(v.ncols(), v.ncols())).amax()
}

/// Complete eigenbasis of the box `[-J, J] x [-N, N]` by a dense solve.
pub fn build_bloch_basis(
    delta: f64,
    radius: usize,
    n_max: usize,
    u0: &FourierState,
) -> Result<BlochBasis> {
    check_delta(delta)?;
    let lattice_box = check_bloch_box(radius, n_max)?;
    if lattice_box.len() > DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            sites: lattice_box.len(),
            limit: DENSE_LIMIT,
        });
    }
    let op = FloquetOperator::full(lattice_box, delta)?;
    let (energies, vectors) = dense_spectrum(&op)?;
    let mut basis = BlochBasis {
        delta,
        lattice_box,
        energies,
        orthogonality_defect: orthogonality_defect(&vectors),
        vectors,
        completeness_defect: 0.0,
    };
    basis.completeness_defect = basis.defect_for(u0);
    Ok(basis)
}

/// Eigenpairs of the box with energies in `[lo, hi]`, for boxes too large
/// for a dense solve. The completeness defect shows how much of `u0` the
/// window misses.
pub fn build_bloch_basis_in_window(
    delta: f64,
    radius: usize,
    n_max: usize,
    u0: &FourierState,
    lo: f64,
    hi: f64,
) -> Result<BlochBasis> {
    check_delta(delta)?;
    let lattice_box = check_bloch_box(radius, n_max)?;
    let op = FloquetOperator::full(lattice_box, delta)?;
    let pairs = window_eigenpairs(&op, lo, hi)?;
    let vectors = DMatrix::from_fn(op.dim(), pairs.len(), |r, c| pairs[c].vector[r]);
    let mut basis = BlochBasis {
        delta,
        lattice_box,
        energies: pairs.iter().map(|p| p.value).collect(),
        orthogonality_defect: if pairs.is_empty() {
            0.0
        } else {
            orthogonality_defect(&vectors)
        },
        vectors,
        completeness_defect: 0.0,
    };
    basis.completeness_defect = basis.defect_for(u0);
    Ok(basis)
}

/// `u_j(t) = sum_phi (u0~, phi) e^{-iEt} sum_n phi(j, n) e^{int}`, `|j| <= J`.
pub fn bloch_reconstruct(basis: &BlochBasis, u0: &FourierState, t: f64) -> Result<FourierState> {
    let defect = basis.defect_for(u0);
    if defect > COMPLETENESS_LIMIT * u0.l2_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::IncompleteBasis {
            defect,
            limit: COMPLETENESS_LIMIT,
        });
    }
    let b = &basis.lattice_box;
    let weights: Vec<Complex64> = basis
        .overlaps(u0)
        .iter()
        .zip(&basis.energies)
        .map(|(o, e)| o * Complex64::from_polar(1.0, -e * t))
        .collect();
    let radius = basis.radius().max(MIN_RADIUS);
    let mut out = FourierState::zeros(radius)?;
    for i in 0..b.len() {
        let s = b.site_at(i);
        let phase = Complex64::from_polar(1.0, s.n as f64 * t);
        let v: Complex64 = weights
            .iter()
            .enumerate()
            .map(|(c, w)| w * basis.vectors[(i, c)])
            .sum();
        *out.coeff_mut(s.j).expect("within radius") += v * phase;
    }
    out.time = t;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sobolev_examples() {
        let s0 = FourierState::single_mode(8, 0).unwrap();
        for s in [0.0, 0.5, 1.0, 3.0] {
            assert_eq!(sobolev_norm(&s0, s), 1.0);
        }
        let s2 = FourierState::single_mode(8, 2).unwrap();
        assert!((sobolev_norm(&s2, 1.0) - 5f64.sqrt()).abs() < 1e-15);
        let p = FourierState::power_law(8, 1.0).unwrap();
        assert!(sobolev_norm(&p, 0.0) <= 2f64.sqrt() * p.l2_norm());
    }

    #[test]
    fn state_validation() {
        assert!(FourierState::zeros(7).is_err());
        assert!(FourierState::new(8, vec![c(1.0); 3]).is_err());
        assert!(FourierState::single_mode(8, 9).is_err());
        let p = FourierState::power_law_truncated(10, 2.0, 3).unwrap();
        assert_eq!(p.coeff(3), c(1.0 / 16.0));
        assert_eq!(p.coeff(4), c(0.0));
        assert_eq!(p.coeff(-2), c(1.0 / 9.0));
    }

    #[test]
    fn potential_examples() {
        let v = potential_on_grid(0.1, 0.0, 64).unwrap();
        for (k, x) in v.iter().enumerate() {
            let want = 0.4 * (2.0 * PI * k as f64 / 64.0).cos();
            assert!((x - want).abs() < 1e-15);
        }
        // first Fourier coefficient of 0.4 cos x is 0.2
        let c1: f64 = v
            .iter()
            .enumerate()
            .map(|(k, x)| x * (2.0 * PI * k as f64 / 64.0).cos())
            .sum::<f64>()
            / 64.0;
        assert!((c1 - 0.2).abs() < 1e-14);
        assert!(potential_on_grid(0.0, 1.3, 64)
            .unwrap()
            .iter()
            .all(|x| *x == 0.0));
        assert!(potential_on_grid(0.1, PI / 2.0, 64)
            .unwrap()
            .iter()
            .all(|x| x.abs() < 1e-15));
        assert!(potential_on_grid(0.1, 0.0, 48).is_err());
    }

    #[test]
    fn free_evolution_is_a_phase() {
        let u0 = FourierState::power_law(16, 2.0).unwrap();
        let tr = evolve(&u0, 0.0, 2.0 * PI * 100.0, 64, &[0.0, 1.0, 2.0]).unwrap();
        for k in 0..3 {
            let col: Vec<f64> = tr.norms.iter().map(|r| r[k]).collect();
            assert!(col.iter().all(|v| (v - col[0]).abs() <= 1e-12 * col[0]));
        }
        // after whole periods e^{-i j^2 2 pi k} = 1
        assert!(tr.final_state.distance(&u0) < 1e-11);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let u0 = FourierState::single_mode(8, 1).unwrap();
        assert!(evolve(&u0, 0.1, 2.0 * PI, 32, &[1.0]).is_err());
        assert!(evolve(&u0, 0.1, 7.0, 64, &[1.0]).is_err());
        assert!(evolve(&u0, 0.1, 2.0 * PI, 64, &[-1.0]).is_err());
    }

    #[test]
    fn trajectory_csv_shape() {
        let u0 = FourierState::single_mode(8, 3).unwrap();
        let tr = evolve(&u0, 0.1, 2.0 * PI * 3.0, 64, &[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 4 * 2);
        assert!(!tr.truncation_unsafe);
    }

    #[test]
    fn trivial_bloch_basis() {
        let u0 = FourierState::single_mode(8, 3).unwrap();
        let b = build_bloch_basis(0.0, 8, 8, &u0).unwrap();
        assert_eq!(b.len(), 17 * 17);
        for (k, e) in b.energies.iter().enumerate() {
            let col = b.vectors.column(k);
            let i = col.iamax();
            assert!((col[i].abs() - 1.0).abs() < 1e-15);
            let s = b.lattice_box.site_at(i);
            assert_eq!(*e, s.diagonal() as f64);
        }
        assert!(b.completeness_defect < 1e-14);
        let t = 0.77;
        let u = bloch_reconstruct(&b, &u0, t).unwrap();
        let want = Complex64::from_polar(1.0, -9.0 * t);
        assert!((u.coeff(3) - want).norm() < 1e-14);
    }

    #[test]
    fn bloch_at_time_zero_returns_datum() {
        let u0 = FourierState::power_law_truncated(8, 2.0, 6).unwrap();
        let b = build_bloch_basis(0.1, 8, 10, &u0).unwrap();
        assert!(b.orthogonality_defect < 1e-12);
        let u = bloch_reconstruct(&b, &u0, 0.0).unwrap();
        assert!(u.distance(&u0) <= b.completeness_defect + 1e-12);
    }

    #[test]
    fn narrow_window_basis_is_incomplete() {
        let u0 = FourierState::power_law_truncated(8, 2.0, 4).unwrap();
        let b = build_bloch_basis_in_window(0.1, 8, 12, &u0, -0.5, 0.5).unwrap();
        assert!(b.completeness_defect > COMPLETENESS_LIMIT);
        assert!(matches!(
            bloch_reconstruct(&b, &u0, 1.0),
            Err(Error::IncompleteBasis { .. })
        ));
    }
}
