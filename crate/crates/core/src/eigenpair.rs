//! Eigenpairs of box operators, with the box and the method that produced them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{FloquetOperator, LatticeBox, Site};
use crate::linalg::residual_norm;

/// Largest `||(H - E) phi||` accepted for a stored eigenpair.
pub const EIGENPAIR_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Newton,
    Dense,
    ShiftInvert,
}

/// `(E, phi)` with `phi` unit-normalized and indexed by the box's row-major
/// site order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub energy: f64,
    pub phi: Vec<f64>,
    pub lattice_box: LatticeBox,
    pub method: Method,
    pub delta: f64,
    /// `||(H - E) phi||` on the box.
    pub residual: f64,
}

impl EigenPair {
    /// Build from an unnormalized vector, fixing the sign so that the entry
    /// at `anchor` (or the largest entry) is positive.
    pub fn new(
        op: &FloquetOperator,
        energy: f64,
        mut phi: Vec<f64>,
        method: Method,
        anchor: Option<Site>,
    ) -> Result<Self> {
        if !op.excluded().is_empty() {
            return Err(Error::param(
                "op",
                "eigenpairs are stored on full boxes only",
            ));
        }
        if phi.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                actual: phi.len(),
            });
        }
        let anchor = anchor.and_then(|s| op.index_of(s));
        crate::linalg::normalize_sign(&mut phi, anchor);
        let residual = residual_norm(op, energy, &phi);
        Ok(EigenPair {
            energy,
            phi,
            lattice_box: *op.lattice_box(),
            method,
            delta: op.delta(),
            residual,
        })
    }

    pub fn value_at(&self, s: Site) -> f64 {
        self.lattice_box
            .index_of(s)
            .map(|i| self.phi[i])
            .unwrap_or(0.0)
    }

    pub fn sites(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.lattice_box.sites().zip(self.phi.iter().copied())
    }

    pub fn satisfies_residual_limit(&self) -> bool {
        self.residual <= EIGENPAIR_RESIDUAL_LIMIT
    }

    /// Site carrying the largest `|phi|`.
    pub fn peak(&self) -> Site {
        let i = self
            .phi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.lattice_box.site_at(i)
    }

    /// `phi` extended by zero to the row-major order of a containing box.
    pub fn embedded_in(&self, outer: &LatticeBox) -> Result<Vec<f64>> {
        if !outer.contains_box(&self.lattice_box) {
            return Err(Error::param(
                "outer",
                format!("{outer} does not contain {}", self.lattice_box),
            ));
        }
        let mut out = vec![0.0; outer.len()];
        for (s, v) in self.sites() {
            out[outer.index_of(s).expect("contained")] = v;
        }
        Ok(out)
    }

    /// `j,n,value` lines, one per site.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "j,n,value")?;
        for (s, v) in self.sites() {
            writeln!(w, "{},{},{:e}", s.j, s.n, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_lookup() {
        let op = FloquetOperator::full(LatticeBox::centered(1), 0.0).unwrap();
        let mut v = vec![0.0; 9];
        v[4] = -3.0;
        let p = EigenPair::new(&op, 0.0, v, Method::Dense, Some(Site::new(0, 0))).unwrap();
        assert_eq!(p.value_at(Site::new(0, 0)), 1.0);
        assert_eq!(p.value_at(Site::new(7, 7)), 0.0);
        assert_eq!(p.residual, 0.0);
        assert_eq!(p.peak(), Site::new(0, 0));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("0,0,1e0"));
        let big = p.embedded_in(&LatticeBox::centered(2)).unwrap();
        assert_eq!(big.iter().filter(|x| **x != 0.0).count(), 1);
        assert_eq!(big[12], 1.0);
    }
}
