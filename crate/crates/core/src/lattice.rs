//! Finite restrictions of the Floquet Hamiltonian `diag(n + j^2) + delta * hop`
//! on rectangular boxes of `Z^2`.
//!
//! A site `(j, n)` carries the spatial Fourier index `j` and the temporal
//! Fourier index `n`. The hopping couples `(j, n)` to the four diagonal
//! neighbours `(j +- 1, n +- 1)` with amplitude `delta`.
//!
//! Every vector in this crate that lives on a box is indexed in row-major
//! order by `n` then `j`: index `(n - n_min) * width + (j - j_min)`. An
//! operator with excluded sites keeps that order and simply skips the
//! excluded positions.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest box that [`FloquetOperator::to_dense`] will assemble.
pub const DENSE_ASSEMBLY_LIMIT: usize = 10_000;

/// Upper end of the hopping range covered by the perturbative estimates.
pub const THEORY_DELTA_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub j: i64,
    pub n: i64,
}

impl Site {
    pub const fn new(j: i64, n: i64) -> Self {
        Site { j, n }
    }

    /// The unperturbed energy `n + j^2`.
    pub fn diagonal(self) -> i64 {
        self.n + self.j * self.j
    }

    pub fn l1_distance(self, other: Site) -> i64 {
        (self.j - other.j).abs() + (self.n - other.n).abs()
    }

    pub fn sup_distance(self, other: Site) -> i64 {
        (self.j - other.j).abs().max((self.n - other.n).abs())
    }

    pub fn is_hopping_neighbor(self, other: Site) -> bool {
        (self.j - other.j).abs() == 1 && (self.n - other.n).abs() == 1
    }

    /// The four diagonal neighbours, ordered `(j-1,n-1), (j+1,n-1), (j-1,n+1), (j+1,n+1)`.
    pub fn hopping_neighbors(self) -> [Site; 4] {
        [
            Site::new(self.j - 1, self.n - 1),
            Site::new(self.j + 1, self.n - 1),
            Site::new(self.j - 1, self.n + 1),
            Site::new(self.j + 1, self.n + 1),
        ]
    }

    pub fn translated(self, dj: i64, dn: i64) -> Site {
        Site::new(self.j + dj, self.n + dn)
    }

    /// Mirror image under `j -> -j`, a symmetry of the operator.
    pub fn reflected(self) -> Site {
        Site::new(-self.j, self.n)
    }

    pub fn on_parabola(self) -> bool {
        self.diagonal() == 0
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j, self.n)
    }
}

/// The point `(j, -j^2)` of the resonant parabola.
pub fn parabola_site(j: i64) -> Site {
    Site::new(j, -j * j)
}

/// Hopping amplitude between two sites.
pub fn hopping(a: Site, b: Site, delta: f64) -> f64 {
    if a.is_hopping_neighbor(b) {
        delta
    } else {
        0.0
    }
}

/// Diagonal entry `n + j^2`.
pub fn diagonal(a: Site) -> i64 {
    a.diagonal()
}

/// Ordering used for resonant-site lists: by `|j|`, positive `j` first, then by `n`.
pub fn resonance_order(a: &Site, b: &Site) -> std::cmp::Ordering {
    a.j.abs()
        .cmp(&b.j.abs())
        .then(b.j.cmp(&a.j))
        .then(a.n.cmp(&b.n))
}

/// Axis-aligned rectangle `[c.j - hj, c.j + hj] x [c.n - hn, c.n + hn]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub center: Site,
    pub half_width_j: u32,
    pub half_width_n: u32,
}

impl LatticeBox {
    pub fn new(center: Site, half_width_j: u32, half_width_n: u32) -> Self {
        LatticeBox {
            center,
            half_width_j,
            half_width_n,
        }
    }

    pub fn square(center: Site, half_width: u32) -> Self {
        Self::new(center, half_width, half_width)
    }

    /// `[-l, l]^2` around the origin.
    pub fn centered(l: u32) -> Self {
        Self::square(Site::new(0, 0), l)
    }

    /// Box from inclusive coordinate ranges. Both ranges must have an odd
    /// number of points so that the box has an integer center.
    pub fn from_ranges(j: RangeInclusive<i64>, n: RangeInclusive<i64>) -> Result<Self> {
        let (j0, j1) = (*j.start(), *j.end());
        let (n0, n1) = (*n.start(), *n.end());
        if j1 < j0 || n1 < n0 {
            return Err(Error::param("box", "empty coordinate range"));
        }
        if (j1 - j0) % 2 != 0 || (n1 - n0) % 2 != 0 {
            return Err(Error::param(
                "box",
                format!("ranges [{j0},{j1}] x [{n0},{n1}] have no integer center"),
            ));
        }
        let hj = u32::try_from((j1 - j0) / 2).map_err(|_| Error::param("box", "too wide"))?;
        let hn = u32::try_from((n1 - n0) / 2).map_err(|_| Error::param("box", "too tall"))?;
        Ok(Self::new(Site::new((j0 + j1) / 2, (n0 + n1) / 2), hj, hn))
    }

    pub fn j_min(&self) -> i64 {
        self.center.j - self.half_width_j as i64
    }
    pub fn j_max(&self) -> i64 {
        self.center.j + self.half_width_j as i64
    }
    pub fn n_min(&self) -> i64 {
        self.center.n - self.half_width_n as i64
    }
    pub fn n_max(&self) -> i64 {
        self.center.n + self.half_width_n as i64
    }

    /// Number of sites per row of fixed `n`.
    pub fn width(&self) -> usize {
        2 * self.half_width_j as usize + 1
    }

    pub fn height(&self) -> usize {
        2 * self.half_width_n as usize + 1
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: Site) -> bool {
        (s.j - self.center.j).abs() <= self.half_width_j as i64
            && (s.n - self.center.n).abs() <= self.half_width_n as i64
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.j_min() >= self.j_min()
            && other.j_max() <= self.j_max()
            && other.n_min() >= self.n_min()
            && other.n_max() <= self.n_max()
    }

    /// Row-major position of a member site.
    pub fn index_of(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let row = (s.n - self.n_min()) as usize;
        let col = (s.j - self.j_min()) as usize;
        Some(row * self.width() + col)
    }

    pub fn site_at(&self, index: usize) -> Site {
        let w = self.width();
        Site::new(
            self.j_min() + (index % w) as i64,
            self.n_min() + (index / w) as i64,
        )
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let (j0, j1) = (self.j_min(), self.j_max());
        (self.n_min()..=self.n_max()).flat_map(move |n| (j0..=j1).map(move |j| Site::new(j, n)))
    }

    pub fn translated(&self, dj: i64, dn: i64) -> LatticeBox {
        LatticeBox::new(
            self.center.translated(dj, dn),
            self.half_width_j,
            self.half_width_n,
        )
    }

    /// Member sites on the resonant parabola `n + j^2 = 0`, in resonance order.
    pub fn parabola_sites(&self) -> Vec<Site> {
        let mut out: Vec<Site> = (self.j_min()..=self.j_max())
            .map(parabola_site)
            .filter(|s| self.contains(*s))
            .collect();
        out.sort_by(resonance_order);
        out
    }

    /// Sites of the box with a hopping neighbour outside it.
    pub fn boundary_sites(&self) -> Vec<Site> {
        self.sites()
            .filter(|s| s.hopping_neighbors().iter().any(|t| !self.contains(*t)))
            .collect()
    }

    /// Sites of the box with a hopping neighbour in `outer` but not in `self`.
    pub fn boundary_relative_to(&self, outer: &LatticeBox) -> Vec<Site> {
        self.sites()
            .filter(|s| {
                s.hopping_neighbors()
                    .iter()
                    .any(|t| outer.contains(*t) && !self.contains(*t))
            })
            .collect()
    }
}

impl fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]x[{},{}]",
            self.j_min(),
            self.j_max(),
            self.n_min(),
            self.n_max()
        )
    }
}

/// Sites of `lattice_box` with `|n + j^2 - energy| <= 2 delta`, in resonance order.
pub fn resonant_sites(lattice_box: &LatticeBox, energy: f64, delta: f64) -> Vec<Site> {
    let window = 2.0 * delta.abs();
    let mut out = Vec::new();
    for j in lattice_box.j_min()..=lattice_box.j_max() {
        let base = energy - (j * j) as f64;
        let lo = ((base - window).ceil() as i64).max(lattice_box.n_min());
        let hi = ((base + window).floor() as i64).min(lattice_box.n_max());
        for n in lo..=hi {
            let s = Site::new(j, n);
            if ((s.diagonal() as f64) - energy).abs() <= window {
                out.push(s);
            }
        }
    }
    out.sort_by(resonance_order);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaRegime {
    /// `0 <= delta < 1/4`, where the perturbative estimates apply.
    Perturbative,
    /// `delta >= 1/4`: allowed, but outside the range of the theory.
    OutsideTheory,
}

impl DeltaRegime {
    pub fn of(delta: f64) -> Self {
        if delta < THEORY_DELTA_LIMIT {
            DeltaRegime::Perturbative
        } else {
            DeltaRegime::OutsideTheory
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::param(
            "delta",
            format!("hopping amplitude must be finite and nonnegative, got {delta}"),
        ));
    }
    Ok(())
}

const VACANT: u32 = u32::MAX;

/// Sparse symmetric restriction of the Floquet Hamiltonian to a box, with an
/// optional set of excluded sites whose rows and columns are removed.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct FloquetOperator {
    lattice_box: LatticeBox,
    delta: f64,
    excluded: BTreeSet<Site>,
    sites: Vec<Site>,
    lookup: Vec<u32>,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

/// Assemble the operator on `lattice_box` with hopping `delta`, dropping `excluded`.
pub fn build_operator(
    lattice_box: LatticeBox,
    delta: f64,
    excluded: impl IntoIterator<Item = Site>,
) -> Result<FloquetOperator> {
    FloquetOperator::new(lattice_box, delta, excluded)
}

impl FloquetOperator {
    pub fn new(
        lattice_box: LatticeBox,
        delta: f64,
        excluded: impl IntoIterator<Item = Site>,
    ) -> Result<Self> {
        check_delta(delta)?;
        let excluded: BTreeSet<Site> = excluded.into_iter().collect();
        if let Some(&site) = excluded.iter().find(|s| !lattice_box.contains(**s)) {
            return Err(Error::SiteOutsideBox { site });
        }
        if DeltaRegime::of(delta) == DeltaRegime::OutsideTheory {
            log::debug!("delta = {delta} >= 1/4 is outside the perturbative regime");
        }

        let mut lookup = vec![VACANT; lattice_box.len()];
        let mut sites = Vec::with_capacity(lattice_box.len() - excluded.len());
        for (pos, s) in lattice_box.sites().enumerate() {
            if !excluded.contains(&s) {
                lookup[pos] = sites.len() as u32;
                sites.push(s);
            }
        }

        let diag = sites.iter().map(|s| s.diagonal() as f64).collect();
        let mut row_ptr = Vec::with_capacity(sites.len() + 1);
        let mut cols = Vec::with_capacity(4 * sites.len());
        row_ptr.push(0);
        for s in &sites {
            if delta != 0.0 {
                let mut row: Vec<usize> = s
                    .hopping_neighbors()
                    .iter()
                    .filter_map(|t| lattice_box.index_of(*t))
                    .map(|pos| lookup[pos])
                    .filter(|&k| k != VACANT)
                    .map(|k| k as usize)
                    .collect();
                row.sort_unstable();
                cols.extend(row);
            }
            row_ptr.push(cols.len());
        }

        Ok(FloquetOperator {
            lattice_box,
            delta,
            excluded,
            sites,
            lookup,
            diag,
            row_ptr,
            cols,
        })
    }

    /// Operator on the full box, nothing excluded.
    pub fn full(lattice_box: LatticeBox, delta: f64) -> Result<Self> {
        Self::new(lattice_box, delta, std::iter::empty())
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.lattice_box
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn regime(&self) -> DeltaRegime {
        DeltaRegime::of(self.delta)
    }

    pub fn excluded(&self) -> &BTreeSet<Site> {
        &self.excluded
    }

    /// Number of active (member, non-excluded) sites.
    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        let pos = self.lattice_box.index_of(s)?;
        match self.lookup[pos] {
            VACANT => None,
            k => Some(k as usize),
        }
    }

    pub fn diagonal_entries(&self) -> &[f64] {
        &self.diag
    }

    /// Active indices coupled to `index` by the hopping.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.cols[self.row_ptr[index]..self.row_ptr[index + 1]]
    }

    /// Number of stored off-diagonal entries (both triangles).
    pub fn nnz_offdiag(&self) -> usize {
        self.cols.len()
    }

    /// Matrix entry between two sites; zero unless both are active.
    pub fn entry(&self, a: Site, b: Site) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(ia), Some(ib)) if ia == ib => self.diag[ia],
            (Some(ia), Some(ib)) => {
                if self.neighbors(ia).contains(&ib) {
                    self.delta
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Half-bandwidth in the active-site ordering.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim())
            .flat_map(|i| self.neighbors(i).iter().map(move |&k| i.abs_diff(k)))
            .max()
            .unwrap_or(0)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())) + 4.0 * self.delta
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Matrix-vector product using the assembled sparse form.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let mut out = vec![0.0; v.len()];
        self.mul_into(v, &mut out);
        Ok(out)
    }

    /// `out = H v`; lengths must equal [`Self::dim`].
    pub fn mul_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (i, o) in out.iter_mut().enumerate() {
            let hop: f64 = self.neighbors(i).iter().map(|&k| v[k]).sum();
            *o = self.diag[i] * v[i] + self.delta * hop;
        }
    }

    /// Matrix-vector product evaluated directly from the stencil, without the
    /// stored adjacency.
    pub fn apply_matrix_free(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let out = self
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let hop: f64 = s
                    .hopping_neighbors()
                    .iter()
                    .filter_map(|t| self.index_of(*t))
                    .map(|k| v[k])
                    .sum();
                diagonal(*s) as f64 * v[i] + self.delta * hop
            })
            .collect();
        Ok(out)
    }

    /// Dense copy, refused beyond [`DENSE_ASSEMBLY_LIMIT`] sites.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_ASSEMBLY_LIMIT {
            return Err(Error::TooLargeForDense {
                sites: n,
                limit: DENSE_ASSEMBLY_LIMIT,
            });
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &k in self.neighbors(i) {
                m[(i, k)] = self.delta;
            }
        }
        Ok(m)
    }

    /// Nonzero entries `(a, b, value)` with `a <= b`.
    pub fn upper_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            std::iter::once((i, i, self.diag[i])).chain(
                self.neighbors(i)
                    .iter()
                    .filter(move |&&k| k > i)
                    .map(move |&k| (i, k, self.delta)),
            )
        })
    }

    /// Extend an active-site vector to the whole box, zero on excluded sites.
    pub fn embed(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let mut out = vec![0.0; self.lattice_box.len()];
        for (pos, &k) in self.lookup.iter().enumerate() {
            if k != VACANT {
                out[pos] = v[k as usize];
            }
        }
        Ok(out)
    }

    /// Restrict a whole-box vector to the active sites.
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.lattice_box.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lattice_box.len(),
                actual: v.len(),
            });
        }
        Ok(self
            .lookup
            .iter()
            .zip(v)
            .filter(|(&k, _)| k != VACANT)
            .map(|(_, &x)| x)
            .collect())
    }

    /// Write the coordinate-triple export: a `#` header describing the
    /// geometry, then one `a b value` line per upper-triangle nonzero.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let b = &self.lattice_box;
        writeln!(w, "# floquet-operator coordinate v1")?;
        writeln!(
            w,
            "# box center {} {} half_width_j {} half_width_n {}",
            b.center.j, b.center.n, b.half_width_j, b.half_width_n
        )?;
        writeln!(
            w,
            "# j_range {} {} n_range {} {}",
            b.j_min(),
            b.j_max(),
            b.n_min(),
            b.n_max()
        )?;
        writeln!(w, "# delta {:?}", self.delta)?;
        write!(w, "# excluded {}", self.excluded.len())?;
        for s in &self.excluded {
            write!(w, " {},{}", s.j, s.n)?;
        }
        writeln!(w)?;
        writeln!(w, "# order row-major n then j, excluded sites skipped")?;
        let nnz = self.dim() + self.nnz_offdiag() / 2;
        writeln!(w, "# dim {} entries {}", self.dim(), nnz)?;
        for (a, c, v) in self.upper_triplets() {
            writeln!(w, "{a} {c} {v:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> Site {
        Site::new(0, 0)
    }

    #[test]
    fn hopping_examples() {
        assert_eq!(hopping(origin(), Site::new(1, 1), 0.1), 0.1);
        assert_eq!(hopping(origin(), Site::new(1, 0), 0.1), 0.0);
        assert_eq!(hopping(origin(), origin(), 0.1), 0.0);
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(diagonal(Site::new(2, -4)), 0);
        assert_eq!(diagonal(Site::new(3, 1)), 10);
        assert_eq!(diagonal(Site::new(0, 5)), 5);
    }

    #[test]
    fn box_indexing_is_row_major_by_n_then_j() {
        let b = LatticeBox::new(Site::new(1, -2), 2, 1);
        let sites: Vec<Site> = b.sites().collect();
        assert_eq!(sites.len(), b.len());
        assert_eq!(sites[0], Site::new(-1, -3));
        assert_eq!(sites[1], Site::new(0, -3));
        assert_eq!(sites[5], Site::new(-1, -2));
        for (i, s) in sites.iter().enumerate() {
            assert_eq!(b.index_of(*s), Some(i));
            assert_eq!(b.site_at(i), *s);
        }
        assert_eq!(b.index_of(Site::new(4, -2)), None);
    }

    #[test]
    fn from_ranges_needs_integer_center() {
        let b = LatticeBox::from_ranges(-20..=20, -410..=10).unwrap();
        assert_eq!(
            (b.j_min(), b.j_max(), b.n_min(), b.n_max()),
            (-20, 20, -410, 10)
        );
        assert!(LatticeBox::from_ranges(0..=3, 0..=2).is_err());
    }

    #[test]
    fn three_by_three_box_has_sixteen_offdiagonal_entries() {
        let op = build_operator(LatticeBox::centered(1), 0.1, []).unwrap();
        assert_eq!(op.dim(), 9);
        assert_eq!(op.nnz_offdiag(), 16);
    }

    #[test]
    fn single_site_operator() {
        let op = build_operator(LatticeBox::centered(0), 0.1, []).unwrap();
        assert_eq!(op.dim(), 1);
        assert_eq!(op.to_dense().unwrap()[(0, 0)], 0.0);
        assert_eq!(op.apply(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn apply_indicator_of_origin() {
        let op = build_operator(LatticeBox::centered(1), 0.1, []).unwrap();
        let mut v = vec![0.0; 9];
        v[op.index_of(origin()).unwrap()] = 1.0;
        let out = op.apply(&v).unwrap();
        for (i, s) in op.sites().iter().enumerate() {
            let expected = if s.is_hopping_neighbor(origin()) {
                0.1
            } else {
                0.0
            };
            assert_eq!(out[i], expected, "site {s}");
        }
        assert_eq!(op.apply(&[0.0; 9]).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let op = build_operator(LatticeBox::centered(1), 0.1, []).unwrap();
        assert!(matches!(
            op.apply(&[1.0; 4]),
            Err(Error::DimensionMismatch {
                expected: 9,
                actual: 4
            })
        ));
    }

    #[test]
    fn excluded_site_outside_box_is_rejected() {
        let err = build_operator(LatticeBox::centered(1), 0.1, [Site::new(5, 5)]).unwrap_err();
        assert!(matches!(err, Error::SiteOutsideBox { .. }));
    }

    #[test]
    fn negative_delta_is_rejected() {
        assert!(build_operator(LatticeBox::centered(1), -0.1, []).is_err());
        assert!(build_operator(LatticeBox::centered(1), f64::NAN, []).is_err());
    }

    #[test]
    fn delta_regime_flags_large_hopping() {
        let op = build_operator(LatticeBox::centered(1), 0.3, []).unwrap();
        assert_eq!(op.regime(), DeltaRegime::OutsideTheory);
        let op = build_operator(LatticeBox::centered(1), 0.1, []).unwrap();
        assert_eq!(op.regime(), DeltaRegime::Perturbative);
    }

    #[test]
    fn resonant_sites_near_zero() {
        let b = LatticeBox::centered(8);
        let got = resonant_sites(&b, 0.0, 0.1);
        let want = vec![
            Site::new(0, 0),
            Site::new(1, -1),
            Site::new(-1, -1),
            Site::new(2, -4),
            Site::new(-2, -4),
        ];
        assert_eq!(got, want);
        assert!(resonant_sites(&b, 0.5, 0.1).is_empty());
    }

    #[test]
    fn resonant_sites_cover_the_parabola_in_a_tall_box() {
        let b = LatticeBox::from_ranges(-40..=40, -1600..=10).unwrap();
        let got = resonant_sites(&b, 0.0, 0.1);
        let mut want: Vec<Site> = (-40..=40).map(parabola_site).collect();
        want.sort_by(resonance_order);
        assert_eq!(got, want);
    }

    #[test]
    fn coordinate_export_has_header_and_entries() {
        let op = build_operator(LatticeBox::centered(1), 0.1, [Site::new(1, 1)]).unwrap();
        let mut buf = Vec::new();
        op.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# delta 0.1"));
        assert!(text.contains("# excluded 1 1,1"));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        // (1, 1) only touches the origin inside the box, so one of the eight
        // undirected bonds disappears.
        assert_eq!(body.len(), 8 + 7);
        let header_dim = text
            .lines()
            .find(|l| l.starts_with("# dim"))
            .unwrap()
            .to_string();
        assert_eq!(header_dim, "# dim 8 entries 15");
    }
}
