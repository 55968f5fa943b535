//! The infimal recipe `b(x, y) = min_λ [φ_λ(x) + φ*_λ(y)]` on the product
//! grid, extraction of `M(b)` and discrete checks of the bipotential
//! axioms.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conjugate::{convexity_defect, default_convexity_tol, slope_interval, ConvexityDefect};
use crate::covers::{cover_union_graph, Cover};
use crate::csvio;
use crate::error::{Error, Result};
use crate::extgrid::{pairing, ExtValue, Grid1D};
use crate::graphs::{coarse_step, graphs_equal, GraphTol, OperatorGraph};

/// Absolute tolerance for ties in the argmin over the parameter set.
pub const ARGMIN_TIE_TOL: f64 = 1e-12;

/// `b(x_i, y_j)` on `xgrid × ygrid`, stored row-major (row = x-index).
#[derive(Debug, Clone, PartialEq)]
pub struct BipotentialTable {
    xgrid: Grid1D,
    ygrid: Grid1D,
    values: Vec<ExtValue>,
    argmin: Vec<Option<usize>>,
    resolution: (f64, f64),
}

impl BipotentialTable {
    /// Table built from raw values, with no argmin information.
    pub fn from_values(xgrid: Grid1D, ygrid: Grid1D, values: Vec<ExtValue>) -> Result<Self> {
        if values.len() != xgrid.len() * ygrid.len() {
            return Err(Error::InvalidParams(format!(
                "{} values for a {}x{} grid",
                values.len(),
                xgrid.len(),
                ygrid.len()
            )));
        }
        let argmin = vec![None; values.len()];
        Ok(BipotentialTable {
            xgrid,
            ygrid,
            values,
            argmin,
            resolution: (0.0, 0.0),
        })
    }

    pub fn from_fn(xgrid: &Grid1D, ygrid: &Grid1D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(xgrid.len() * ygrid.len());
        for x in xgrid.points() {
            for y in ygrid.points() {
                values.push(ExtValue::new(f(x, y))?);
            }
        }
        BipotentialTable::from_values(xgrid.clone(), ygrid.clone(), values)
    }

    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn ygrid(&self) -> &Grid1D {
        &self.ygrid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtValue {
        self.values[i * self.ygrid.len() + j]
    }

    /// Index of the minimizing parameter, `None` where every candidate is `+inf`
    /// or the table was not synthesized from a cover.
    pub fn argmin(&self, i: usize, j: usize) -> Option<usize> {
        self.argmin[i * self.ygrid.len() + j]
    }

    /// `b(x_i, ·)`.
    pub fn row(&self, i: usize) -> &[ExtValue] {
        let n = self.ygrid.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// `b(·, y_j)`.
    pub fn column(&self, j: usize) -> Vec<ExtValue> {
        (0..self.xgrid.len()).map(|i| self.get(i, j)).collect()
    }

    /// Allowances `(S_x, S_y)` for kinks that a min over finitely many
    /// parameters puts into `b` along x and along y.
    pub fn resolution(&self) -> (f64, f64) {
        self.resolution
    }

    pub fn is_finite_valued(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `b(x_i, y_j) - x_i y_j`, `+inf` where `b` is.
    #[inline]
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).to_f64() - pairing(self.xgrid.point(i), self.ygrid.point(j))
    }

    /// Header `x\y, y_0, …`, then `x_i, b(x_i, y_0), …`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_matrix(path, |i, j| csvio::format_ext(self.get(i, j)))
    }

    /// Same layout as [`write_csv`](Self::write_csv) with argmin indices;
    /// `-` where undefined.
    pub fn write_argmin_csv(&self, path: &Path) -> Result<()> {
        self.write_matrix(path, |i, j| match self.argmin(i, j) {
            Some(k) => k.to_string(),
            None => "-".to_string(),
        })
    }

    fn write_matrix(&self, path: &Path, cell: impl Fn(usize, usize) -> String) -> Result<()> {
        let mut header = vec!["x\\y".to_string()];
        header.extend(self.ygrid.points().into_iter().map(csvio::format_real));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csvio::write_rows(
            path,
            &header,
            (0..self.xgrid.len()).map(|i| {
                std::iter::once(csvio::format_real(self.xgrid.point(i)))
                    .chain((0..self.ygrid.len()).map(|j| cell(i, j)))
                    .collect::<Vec<_>>()
            }),
        )
    }
}

/// `min_k φ_k(x_i) + φ*_k(y_j)` and the smallest `k` within
/// [`ARGMIN_TIE_TOL`] of the minimum.
pub fn synth_value(cover: &Cover, i: usize, j: usize) -> (ExtValue, Option<usize>) {
    let mut best = ExtValue::INFINITY;
    for k in 0..cover.len() {
        best = best.min(cover.f_value(k, i, j));
    }
    let Some(b) = best.value() else {
        return (best, None);
    };
    let k = (0..cover.len()).find(|&k| cover.f_value(k, i, j).to_f64() <= b + ARGMIN_TIE_TOL);
    (best, k)
}

pub fn synth_table(cover: &Cover) -> BipotentialTable {
    let (nx, ny) = (cover.xgrid().len(), cover.ygrid().len());
    let cells: Vec<(ExtValue, Option<usize>)> = (0..nx * ny)
        .into_par_iter()
        .map(|c| synth_value(cover, c / ny, c % ny))
        .collect();
    let (values, argmin) = cells.into_iter().unzip();
    let (sx, sy) = cover.adjacent_slope_jumps();
    BipotentialTable {
        xgrid: cover.xgrid().clone(),
        ygrid: cover.ygrid().clone(),
        values,
        argmin,
        resolution: (sx, sy),
    }
}

/// `{(i, j) : b(x_i, y_j) - x_i y_j <= tol}`. A negative absolute
/// tolerance is allowed and gives the empty graph.
pub fn extract_graph(table: &BipotentialTable, tol: GraphTol) -> Result<OperatorGraph> {
    let (xg, yg) = (&table.xgrid, &table.ygrid);
    let h = coarse_step(xg, yg);
    let members: BTreeSet<(usize, usize)> = (0..xg.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = xg.point(i);
            (0..yg.len()).filter_map(move |j| {
                let y = yg.point(j);
                (table.gap(i, j) <= tol.at(h, x, y)).then_some((i, j))
            })
        })
        .collect();
    OperatorGraph::new(xg.clone(), yg.clone(), members)
}

/// Convexity tolerance for the rows and columns of a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexityTol {
    /// Default discrete tolerance of each line plus the table's resolution
    /// allowance for the variable of that line.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomTolerances {
    pub convexity: ConvexityTol,
    /// Lower bound accepted for `min b - <x, y>`.
    pub fenchel_floor: f64,
    /// Points within this gap must satisfy both subdifferential memberships.
    pub inner_graph: GraphTol,
    /// Points beyond this gap must fail at least one membership.
    pub outer_graph: GraphTol,
    /// Multiplier of the slope slack `h (1 + |y|)` (resp. `h (1 + |x|)`).
    pub slope_slack: f64,
    /// Off-graph points sampled for the converse direction.
    pub off_graph_samples: usize,
    pub seed: u64,
    /// Check every off-graph point instead of a sample.
    pub exhaustive: bool,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        AxiomTolerances {
            convexity: ConvexityTol::Auto,
            fenchel_floor: -1e-12,
            inner_graph: GraphTol::StepSquaredScaled(0.5),
            outer_graph: GraphTol::default(),
            slope_slack: 1.0,
            off_graph_samples: 1000,
            seed: 0,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    pub pass: bool,
    /// Most negative second difference over all lines.
    pub worst_second_difference: f64,
    /// Line (column index for x, row index for y) and position of the worst
    /// second difference, or of the first line failing the check.
    pub worst_at: Option<(usize, usize)>,
    pub lines_failed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FenchelCheck {
    pub pass: bool,
    pub min_gap: f64,
    pub at: (usize, usize),
}

/// Outcome of the coupled conditions at one grid pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalencePoint {
    pub i: usize,
    pub j: usize,
    /// `b = <x, y>` up to the graph tolerance in force for this point.
    pub on_graph: bool,
    /// `y_j ∈ ∂b(·, y_j)(x_i)` up to slope slack.
    pub y_in_dx: bool,
    /// `x_i ∈ ∂b(x_i, ·)(y_j)` up to slope slack.
    pub x_in_dy: bool,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub convex_in_x: ConvexityCheck,
    pub convex_in_y: ConvexityCheck,
    pub fenchel_like: FenchelCheck,
    /// Graph points, then the sampled off-graph points.
    pub equivalences: Vec<EquivalencePoint>,
    pub graph_points: usize,
    pub off_graph_checked: usize,
    pub equivalence_failures: usize,
    pub equivalences_pass: bool,
    /// False when the table has `+inf` entries, i.e. lies outside the
    /// real-valued setting. Informational; not part of `overall`.
    pub finite_valued: bool,
    pub overall: bool,
}

fn check_lines(
    lines: usize,
    line: impl Fn(usize) -> Vec<ExtValue> + Sync,
    tol: impl Fn(&[ExtValue]) -> f64 + Sync,
) -> ConvexityCheck {
    let defects: Vec<(ConvexityDefect, bool)> = (0..lines)
        .into_par_iter()
        .map(|l| {
            let v = line(l);
            let d = convexity_defect(&v);
            (d, d.passes(tol(&v)))
        })
        .collect();
    let mut out = ConvexityCheck {
        pass: true,
        worst_second_difference: f64::INFINITY,
        worst_at: None,
        lines_failed: 0,
    };
    let mut first_fail = None;
    for (l, (d, ok)) in defects.iter().enumerate() {
        if !ok {
            out.lines_failed += 1;
            first_fail.get_or_insert((l, d.worst_index.unwrap_or(0)));
        }
        if d.worst_second_difference < out.worst_second_difference {
            out.worst_second_difference = d.worst_second_difference;
            out.worst_at = d.worst_index.map(|p| (l, p));
        }
    }
    out.pass = out.lines_failed == 0;
    if first_fail.is_some() && out.worst_at.is_none() {
        out.worst_at = first_fail;
    }
    out
}

/// Both memberships at `(i, j)`: `y_j` against the x-slopes of column `j`,
/// `x_i` against the y-slopes of row `i`.
fn memberships(table: &BipotentialTable, i: usize, j: usize, slack: f64) -> (bool, bool) {
    let (xg, yg) = (&table.xgrid, &table.ygrid);
    let (x, y) = (xg.point(i), yg.point(j));
    if table.get(i, j).is_infinite() {
        return (false, false);
    }
    let column = table.column(j);
    let y_in_dx = slope_interval(&column, i, xg.h()).contains_with_slack(y, slack * xg.h() * (1.0 + y.abs()));
    let x_in_dy =
        slope_interval(table.row(i), j, yg.h()).contains_with_slack(x, slack * yg.h() * (1.0 + x.abs()));
    (y_in_dx, x_in_dy)
}

/// Discrete checks of the bipotential conditions:
/// (a) convexity of every row and column,
/// (b) `b >= <x, y>`,
/// (c) on the graph both subdifferential memberships hold, and sampled
/// points clearly off the graph fail at least one of them.
pub fn verify_axioms(table: &BipotentialTable, tol: &AxiomTolerances) -> AxiomReport {
    let (xg, yg) = (&table.xgrid, &table.ygrid);
    let (nx, ny) = (xg.len(), yg.len());
    let (sx, sy) = table.resolution;
    let line_tol = |allowance: f64| {
        let convexity = tol.convexity;
        move |v: &[ExtValue]| match convexity {
            ConvexityTol::Auto => default_convexity_tol(v) + allowance,
            ConvexityTol::Fixed(t) => t,
        }
    };
    let convex_in_x = check_lines(ny, |j| table.column(j), line_tol(sx));
    let convex_in_y = check_lines(nx, |i| table.row(i).to_vec(), line_tol(sy));

    let (min_gap, at) = (0..nx * ny)
        .into_par_iter()
        .map(|c| (table.gap(c / ny, c % ny), (c / ny, c % ny)))
        .reduce(|| (f64::INFINITY, (0, 0)), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let fenchel_like = FenchelCheck {
        pass: min_gap >= tol.fenchel_floor,
        min_gap,
        at,
    };

    let h = coarse_step(xg, yg);
    let inner: Vec<(usize, usize)> = (0..nx * ny)
        .map(|c| (c / ny, c % ny))
        .filter(|&(i, j)| table.gap(i, j) <= tol.inner_graph.at(h, xg.point(i), yg.point(j)))
        .collect();
    let outer_complement: Vec<(usize, usize)> = (0..nx * ny)
        .map(|c| (c / ny, c % ny))
        .filter(|&(i, j)| table.gap(i, j) > tol.outer_graph.at(h, xg.point(i), yg.point(j)))
        .collect();
    let off: Vec<(usize, usize)> = if tol.exhaustive || outer_complement.len() <= tol.off_graph_samples {
        outer_complement
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(tol.seed);
        let mut picks = index::sample(&mut rng, outer_complement.len(), tol.off_graph_samples).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|p| outer_complement[p]).collect()
    };

    let graph_points = inner.len();
    let off_graph_checked = off.len();
    let equivalences: Vec<EquivalencePoint> = inner
        .par_iter()
        .map(|&p| (p, true))
        .chain(off.par_iter().map(|&p| (p, false)))
        .map(|((i, j), on_graph)| {
            let (y_in_dx, x_in_dy) = memberships(table, i, j, tol.slope_slack);
            let consistent = if on_graph { y_in_dx && x_in_dy } else { !(y_in_dx && x_in_dy) };
            EquivalencePoint {
                i,
                j,
                on_graph,
                y_in_dx,
                x_in_dy,
                consistent,
            }
        })
        .collect();
    let equivalence_failures = equivalences.iter().filter(|e| !e.consistent).count();
    let equivalences_pass = equivalence_failures == 0 && graph_points > 0;

    let overall = convex_in_x.pass && convex_in_y.pass && fenchel_like.pass && equivalences_pass;
    AxiomReport {
        convex_in_x,
        convex_in_y,
        fenchel_like,
        equivalences,
        graph_points,
        off_graph_checked,
        equivalence_failures,
        equivalences_pass,
        finite_valued: table.is_finite_valued(),
        overall,
    }
}

impl AxiomReport {
    /// Header `x_index,y_index,on_graph,y_in_dx,x_in_dy,consistent`.
    pub fn write_equivalences_csv(&self, path: &Path) -> Result<()> {
        csvio::write_rows(
            path,
            &["x_index", "y_index", "on_graph", "y_in_dx", "x_in_dy", "consistent"],
            self.equivalences.iter().map(|e| {
                [
                    e.i.to_string(),
                    e.j.to_string(),
                    e.on_graph.to_string(),
                    e.y_in_dx.to_string(),
                    e.x_in_dy.to_string(),
                    e.consistent.to_string(),
                ]
            }),
        )
    }
}

/// Compares `M(b)` for the synthesized table with `⋃_λ M(φ_λ)`.
pub fn check_cover_graph_identity(cover: &Cover, tol: GraphTol, slack: usize) -> Result<bool> {
    let table = synth_table(cover);
    let mb = extract_graph(&table, tol)?;
    let union = cover_union_graph(cover, tol)?;
    graphs_equal(&mb, &union, slack)
}
