//! Operator graphs `M ⊂ X × Y` on grid index pairs, their sections
//! `m(x)`, `m*(y)`, and the BB-graph test.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conjugate::{conjugate, fenchel_gap};
use crate::csvio;
use crate::error::{Error, Result};
use crate::extgrid::{Grid1D, SampledFn};

/// Threshold on the Fenchel-type gap `value - <x, y>` deciding graph
/// membership at a grid pair. `h` is the coarser of the two grid spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphTol {
    /// A fixed threshold.
    Absolute(f64),
    /// `factor * h * (1 + |x| + |y|)`.
    StepScaled(f64),
    /// `factor * h^2 * (1 + |x| + |y|)`.
    StepSquaredScaled(f64),
}

impl Default for GraphTol {
    fn default() -> Self {
        GraphTol::StepScaled(4.0)
    }
}

impl GraphTol {
    pub fn at(&self, h: f64, x: f64, y: f64) -> f64 {
        match *self {
            GraphTol::Absolute(t) => t,
            GraphTol::StepScaled(c) => c * h * (1.0 + x.abs() + y.abs()),
            GraphTol::StepSquaredScaled(c) => c * h * h * (1.0 + x.abs() + y.abs()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            GraphTol::Absolute(t) => t,
            GraphTol::StepScaled(c) | GraphTol::StepSquaredScaled(c) => c,
        };
        if v.is_nan() || v < 0.0 {
            return Err(Error::InvalidParams(format!("graph tolerance must be >= 0, got {v}")));
        }
        Ok(())
    }
}

pub(crate) fn coarse_step(xgrid: &Grid1D, ygrid: &Grid1D) -> f64 {
    xgrid.h().max(ygrid.h())
}

/// Set of grid index pairs `(i, j)` standing for `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorGraph {
    xgrid: Grid1D,
    ygrid: Grid1D,
    members: BTreeSet<(usize, usize)>,
}

impl OperatorGraph {
    pub fn new(
        xgrid: Grid1D,
        ygrid: Grid1D,
        members: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let members: BTreeSet<_> = members.into_iter().collect();
        if let Some(&(i, j)) = members
            .iter()
            .find(|&&(i, j)| i >= xgrid.len() || j >= ygrid.len())
        {
            return Err(Error::InvalidParams(format!(
                "graph member ({i}, {j}) outside a {}x{} grid",
                xgrid.len(),
                ygrid.len()
            )));
        }
        Ok(OperatorGraph {
            xgrid,
            ygrid,
            members,
        })
    }

    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn ygrid(&self) -> &Grid1D {
        &self.ygrid
    }

    pub fn members(&self) -> &BTreeSet<(usize, usize)> {
        &self.members
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.members.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset(&self, other: &OperatorGraph) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Writes `x,y` rows (grid values, round-trip formatting).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        csvio::write_rows(
            path,
            &["x", "y"],
            self.members.iter().map(|&(i, j)| {
                [
                    csvio::format_real(self.xgrid.point(i)),
                    csvio::format_real(self.ygrid.point(j)),
                ]
            }),
        )
    }

    /// Reads `x,y` rows back onto the given grids. Every value must sit on a
    /// grid point.
    pub fn read_csv(path: &Path, xgrid: &Grid1D, ygrid: &Grid1D) -> Result<Self> {
        let rows = csvio::read_records(path)?;
        let mut members = BTreeSet::new();
        for (k, row) in rows.iter().enumerate() {
            if k == 0 && row.first().is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            if row.len() != 2 {
                return Err(Error::malformed(path, format!("row {} needs 2 fields", k + 1)));
            }
            let x = csvio::parse_finite(path, &row[0], k)?;
            let y = csvio::parse_finite(path, &row[1], k)?;
            let i = xgrid
                .index_of(x)
                .ok_or_else(|| Error::malformed(path, format!("x = {x} is not a grid point")))?;
            let j = ygrid
                .index_of(y)
                .ok_or_else(|| Error::malformed(path, format!("y = {y} is not a grid point")))?;
            members.insert((i, j));
        }
        OperatorGraph::new(xgrid.clone(), ygrid.clone(), members)
    }
}

/// Graph of a potential from an explicit `(phi, phi*)` pair.
pub(crate) fn graph_of_pair(
    phi: &SampledFn,
    phi_star: &SampledFn,
    tol: GraphTol,
) -> Result<OperatorGraph> {
    let xgrid = phi.grid();
    let ygrid = phi_star.grid();
    let h = coarse_step(xgrid, ygrid);
    let mut members = BTreeSet::new();
    for i in 0..xgrid.len() {
        let Some(p) = phi.get(i).value() else { continue };
        let x = xgrid.point(i);
        for j in 0..ygrid.len() {
            let Some(q) = phi_star.get(j).value() else { continue };
            let y = ygrid.point(j);
            if fenchel_gap(p, q, x, y) <= tol.at(h, x, y) {
                members.insert((i, j));
            }
        }
    }
    OperatorGraph::new(xgrid.clone(), ygrid.clone(), members)
}

/// `M(phi) = {(x, y) : phi(x) + phi*(y) - <x, y> <= tol}`.
pub fn graph_of_potential(f: &SampledFn, ygrid: &Grid1D, tol: GraphTol) -> Result<OperatorGraph> {
    let fc = conjugate(f, ygrid)?;
    graph_of_pair(f, &fc, tol)
}

/// `m(x_i)`, `m*(y_j)`, `dom(M)` and `im(M)` as sorted index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sections {
    pub m: Vec<Vec<usize>>,
    pub m_star: Vec<Vec<usize>>,
    pub dom: Vec<usize>,
    pub im: Vec<usize>,
}

pub fn sections(g: &OperatorGraph) -> Sections {
    let mut m = vec![Vec::new(); g.xgrid.len()];
    let mut m_star = vec![Vec::new(); g.ygrid.len()];
    for &(i, j) in &g.members {
        m[i].push(j);
        m_star[j].push(i);
    }
    // BTreeSet order sorts m; m_star receives i in increasing order too.
    let dom = (0..m.len()).filter(|&i| !m[i].is_empty()).collect();
    let im = (0..m_star.len()).filter(|&j| !m_star[j].is_empty()).collect();
    Sections { m, m_star, dom, im }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Section `m(x_i)` (a set of y-indices).
    X,
    /// Section `m*(y_j)` (a set of x-indices).
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "m(x)",
            Axis::Y => "m*(y)",
        })
    }
}

/// A section that is not a contiguous index interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbViolation {
    pub axis: Axis,
    pub index: usize,
    /// Inclusive index ranges missing between the section's extremes.
    pub holes: Vec<(usize, usize)>,
}

impl fmt::Display for BbViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at index {}: missing", self.axis, self.index)?;
        for (a, b) in &self.holes {
            if a == b {
                write!(f, " {a}")?;
            } else {
                write!(f, " {a}..={b}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbReport {
    pub pass: bool,
    pub violations: Vec<BbViolation>,
}

fn holes(section: &[usize]) -> Vec<(usize, usize)> {
    section
        .windows(2)
        .filter(|w| w[1] > w[0] + 1)
        .map(|w| (w[0] + 1, w[1] - 1))
        .collect()
}

/// BB-graph test: every nonempty section is a contiguous index interval,
/// the grid counterpart of a closed convex subset of the line.
pub fn bb_check(g: &OperatorGraph) -> Result<BbReport> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let s = sections(g);
    let mut violations = Vec::new();
    for (axis, secs) in [(Axis::X, &s.m), (Axis::Y, &s.m_star)] {
        for (index, sec) in secs.iter().enumerate() {
            let h = holes(sec);
            if !h.is_empty() {
                violations.push(BbViolation { axis, index, holes: h });
            }
        }
    }
    Ok(BbReport {
        pass: violations.is_empty(),
        violations,
    })
}

fn covered_within(dense: &[bool], ny: usize, nx: usize, i: usize, j: usize, slack: usize) -> bool {
    let (i0, i1) = (i.saturating_sub(slack), (i + slack).min(nx - 1));
    let (j0, j1) = (j.saturating_sub(slack), (j + slack).min(ny - 1));
    (i0..=i1).any(|a| (j0..=j1).any(|b| dense[a * ny + b]))
}

/// Two-sided Chebyshev-neighbourhood comparison of graphs on the same grids.
pub fn graphs_equal(g1: &OperatorGraph, g2: &OperatorGraph, slack: usize) -> Result<bool> {
    if g1.xgrid != g2.xgrid || g1.ygrid != g2.ygrid {
        return Err(Error::GridMismatch("graphs live on different grids".into()));
    }
    let (nx, ny) = (g1.xgrid.len(), g1.ygrid.len());
    let dense = |g: &OperatorGraph| {
        let mut d = vec![false; nx * ny];
        for &(i, j) in &g.members {
            d[i * ny + j] = true;
        }
        d
    };
    let (d1, d2) = (dense(g1), dense(g2));
    let one_way = |a: &OperatorGraph, other: &[bool]| {
        a.members
            .iter()
            .all(|&(i, j)| covered_within(other, ny, nx, i, j, slack))
    };
    Ok(one_way(g1, &d2) && one_way(g2, &d1))
}
