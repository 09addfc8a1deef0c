use std::path::Path;

use super::{above, below};
use crate::error::{Error, Result};
use crate::quad::{integrate, split_segments, Abscissa, Segment, Tolerance};

/// One piece `[lo, hi]` of a tabulated density:
/// `φ(x) = (x − lo)^{exp_lo} (hi − x)^{exp_hi} r(x)` with `r` linearly
/// interpolated between nodes and held constant beyond the outermost ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Lobe {
    pub lo: f64,
    pub hi: f64,
    pub exp_lo: f64,
    pub exp_hi: f64,
    pub nodes: Vec<f64>,
    pub reduced: Vec<f64>,
}

impl Lobe {
    fn weight(&self, p: Abscissa) -> f64 {
        let mut w = 1.0;
        if self.exp_lo != 0.0 {
            w *= above(p, self.lo).powf(self.exp_lo);
        }
        if self.exp_hi != 0.0 {
            w *= below(p, self.hi).powf(self.exp_hi);
        }
        w
    }

    fn reduced_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.reduced[0];
        }
        if x >= self.nodes[n - 1] {
            return self.reduced[n - 1];
        }
        let i = self.nodes.partition_point(|&t| t <= x);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let (r0, r1) = (self.reduced[i - 1], self.reduced[i]);
        r0 + (r1 - r0) * (x - x0) / (x1 - x0)
    }

    fn eval(&self, p: Abscissa) -> f64 {
        let r = self.reduced_at(p.x);
        if r == 0.0 {
            0.0
        } else {
            self.weight(p) * r
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi && self.lo >= -1.0 && self.hi <= 1.0) {
            return Err(Error::Invalid(format!(
                "lobe [{}, {}] is not a subinterval of [-1, 1]",
                self.lo, self.hi
            )));
        }
        if self.nodes.len() < 2 || self.nodes.len() != self.reduced.len() {
            return Err(Error::Invalid("a lobe needs at least two nodes with values".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("table grid must be strictly increasing".into()));
        }
        if self.nodes[0] < self.lo || self.nodes[self.nodes.len() - 1] > self.hi {
            return Err(Error::Invalid("table nodes fall outside their lobe".into()));
        }
        if let Some(v) = self.reduced.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("table value {v} is negative or not finite")));
        }
        if !(self.exp_lo > -1.0 && self.exp_hi > -1.0) {
            return Err(Error::Invalid("lobe exponents must exceed -1".into()));
        }
        Ok(())
    }
}

/// A density given by values on a grid, normalized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    lobes: Vec<Lobe>,
}

impl Tabulated {
    /// Piecewise-linear density through `(x, phi)`, zero outside
    /// `[x[0], x[n−1]]`. The grid must be strictly increasing inside `(−1, 1)`.
    pub fn from_points(x: &[f64], phi: &[f64]) -> Result<Self> {
        if x.len() != phi.len() {
            return Err(Error::Invalid("grid and values differ in length".into()));
        }
        if x.len() < 2 {
            return Err(Error::Invalid("a table needs at least two points".into()));
        }
        if !(x[0] > -1.0 && x[x.len() - 1] < 1.0) {
            return Err(Error::Invalid("table grid must lie inside (-1, 1)".into()));
        }
        Self::from_lobes(vec![Lobe {
            lo: x[0],
            hi: x[x.len() - 1],
            exp_lo: 0.0,
            exp_hi: 0.0,
            nodes: x.to_vec(),
            reduced: phi.to_vec(),
        }])
    }

    /// Builds from lobes sorted left to right and rescales to unit mass.
    pub fn from_lobes(lobes: Vec<Lobe>) -> Result<Self> {
        if lobes.is_empty() {
            return Err(Error::Invalid("a table needs at least one lobe".into()));
        }
        for l in &lobes {
            l.validate()?;
        }
        if lobes.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::Invalid("lobes overlap or are out of order".into()));
        }
        let mut t = Tabulated { lobes };
        let mass = integrate(|p| t.eval(p), &t.segments(), Tolerance::relative(1e-12))?.value;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Invalid(format!("table has mass {mass}; cannot normalize")));
        }
        for l in &mut t.lobes {
            for r in &mut l.reduced {
                *r /= mass;
            }
        }
        Ok(t)
    }

    pub fn lobes(&self) -> &[Lobe] {
        &self.lobes
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lobes[0].lo, self.lobes[self.lobes.len() - 1].hi)
    }

    pub(crate) fn eval(&self, p: Abscissa) -> f64 {
        let x = p.x;
        for l in &self.lobes {
            if x >= l.lo && x <= l.hi {
                return l.eval(p);
            }
        }
        0.0
    }

    /// Lobes cut at every node, so each quadrature piece sees a linear `r`.
    pub(crate) fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        for l in &self.lobes {
            let whole = Segment::new(l.lo, l.hi, l.exp_lo, l.exp_hi);
            out.extend(split_segments(&[whole], &l.nodes));
        }
        out
    }

    /// `(x, φ(x))` at every node.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for l in &self.lobes {
            for &x in &l.nodes {
                out.push((x, l.eval(Abscissa::new(x))));
            }
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut phis = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Invalid(format!(
                    "row {}: expected two columns (x, phi), found {}",
                    line + 2,
                    record.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("row {}: cannot parse {s:?}", line + 2)))
            };
            xs.push(parse(&record[0])?);
            phis.push(parse(&record[1])?);
        }
        Self::from_points(&xs, &phis)
    }

    /// Writes `x,phi` at every node.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "phi"])?;
        for (x, v) in self.points() {
            w.write_record([format!("{x}"), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }
}
