//! Sample grids, extended-real values and sampled functions.
//!
//! The spaces `X` and `Y` are modelled as compact intervals of the real line
//! sampled on uniform grids, paired by `<x, y> = x * y`. Functions take values
//! in `R u {+inf}`; `-inf` and NaN are never stored.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

/// The duality product of the one-dimensional model.
#[inline]
pub fn pairing(x: f64, y: f64) -> f64 {
    x * y
}

/// Uniform grid `lo = x_0 < x_1 < ... < x_{n-1} = hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "endpoints must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        Ok(Grid1D { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `(hi - lo) / (n - 1)`.
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// The i-th grid point. Computed as a convex combination of the end
    /// points, so both ends are exact and symmetric grids contain an exact 0.
    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        let last = (self.n - 1) as f64;
        (self.lo * (last - i as f64) + self.hi * i as f64) / last
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Largest `|x_i|`, attained at one of the end points.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Nearest grid index, ties toward the lower index, clamped to the grid.
    pub fn snap(&self, v: f64) -> usize {
        let t = (v - self.lo) / self.h();
        if t <= 0.0 {
            return 0;
        }
        let floor = t.floor();
        let idx = if t - floor > 0.5 { floor + 1.0 } else { floor };
        (idx as usize).min(self.n - 1)
    }

    /// Index of the grid point within `1e-9 * h` of `v`, if any.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        let i = self.snap(v);
        ((self.point(i) - v).abs() <= 1e-9 * self.h()).then_some(i)
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self == other
    }
}

/// An element of `R u {+inf}`.
///
/// Invariant: the wrapped float is never NaN and never `-inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtValue(f64);

impl ExtValue {
    pub const INFINITY: ExtValue = ExtValue(f64::INFINITY);
    pub const ZERO: ExtValue = ExtValue(0.0);

    /// Wraps a finite real. Panics on NaN or an infinite argument.
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "ExtValue::finite called with {v}");
        ExtValue(v)
    }

    /// Accepts finite reals and `+inf`; rejects NaN and `-inf`.
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v == f64::NEG_INFINITY {
            Err(Error::InvalidValue(v))
        } else {
            Ok(ExtValue(v))
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// The finite value, or `None` at `+inf`.
    #[inline]
    pub fn value(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// As a float, with `+inf` mapped to `f64::INFINITY`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.0
    }

    /// Sum that reports `None` instead of leaving the extended reals
    /// (only possible through overflow toward `-inf`).
    pub fn checked_add(self, other: ExtValue) -> Option<ExtValue> {
        let s = self.0 + other.0;
        (s != f64::NEG_INFINITY).then_some(ExtValue(s))
    }
}

impl Add for ExtValue {
    type Output = ExtValue;

    fn add(self, other: ExtValue) -> ExtValue {
        self.checked_add(other)
            .expect("extended-real addition overflowed to -inf")
    }
}

impl Eq for ExtValue {}

impl PartialOrd for ExtValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("+inf")
        }
    }
}

impl FromStr for ExtValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+inf" | "inf" | "+Inf" | "Inf" | "+infinity" | "infinity" => Ok(ExtValue::INFINITY),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("not a number: {t:?}")))?;
                if v.is_finite() {
                    Ok(ExtValue(v))
                } else {
                    Err(Error::InvalidValue(v))
                }
            }
        }
    }
}

impl From<ExtValue> for f64 {
    fn from(v: ExtValue) -> f64 {
        v.0
    }
}

/// Extended-real samples of a function on a grid.
///
/// Invariant: one value per grid point and at least one finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    grid: Grid1D,
    values: Vec<ExtValue>,
}

impl SampledFn {
    pub fn new(grid: Grid1D, values: Vec<ExtValue>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::EmptyDomain);
        }
        Ok(SampledFn { grid, values })
    }

    /// Samples a finite closure on every grid point.
    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| ExtValue::new(f(grid.point(i))))
            .collect::<Result<Vec<_>>>()?;
        SampledFn::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[ExtValue] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> ExtValue {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the effective domain (finite samples).
    pub fn domain(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_finite())
            .collect()
    }

    pub fn is_finite_everywhere(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest magnitude over the effective domain.
    pub fn max_abs_finite(&self) -> f64 {
        max_abs_finite(&self.values)
    }

    /// `f + c` for a finite constant `c`.
    pub fn shifted(&self, c: f64) -> Result<SampledFn> {
        let values = self
            .values
            .iter()
            .map(|v| ExtValue::new(v.to_f64() + c))
            .collect::<Result<Vec<_>>>()?;
        SampledFn::new(self.grid.clone(), values)
    }
}

pub(crate) fn max_abs_finite(values: &[ExtValue]) -> f64 {
    values
        .iter()
        .filter_map(|v| v.value())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Closed-form function descriptors accepted by [`sample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    /// `coeff * x^2 / 2`.
    Quadratic { coeff: f64 },
    /// `|x|`.
    Abs,
    /// 0 at the grid point nearest `at`, `+inf` elsewhere.
    IndicatorPoint { at: f64 },
    /// 0 on grid points inside `[lo, hi]`, `+inf` elsewhere.
    IndicatorInterval { lo: f64, hi: f64 },
    /// CSV of `(x, value)` rows, linearly interpolated; `+inf` allowed.
    Table { path: PathBuf },
}

/// Samples a descriptor on a grid.
pub fn sample(spec: &FnSpec, grid: &Grid1D) -> Result<SampledFn> {
    let values = match spec {
        FnSpec::Quadratic { coeff } => {
            if !coeff.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "quadratic coefficient must be finite, got {coeff}"
                )));
            }
            (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    ExtValue::finite(coeff * x * x / 2.0)
                })
                .collect()
        }
        FnSpec::Abs => (0..grid.len())
            .map(|i| ExtValue::finite(grid.point(i).abs()))
            .collect(),
        FnSpec::IndicatorPoint { at } => {
            let mut values = vec![ExtValue::INFINITY; grid.len()];
            let k = grid.snap(*at);
            if (grid.point(k) - at).abs() <= grid.h() / 2.0 {
                values[k] = ExtValue::ZERO;
            }
            values
        }
        FnSpec::IndicatorInterval { lo, hi } => {
            if lo > hi {
                return Err(Error::InvalidParams(format!(
                    "indicator interval needs lo <= hi, got [{lo}, {hi}]"
                )));
            }
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    if x >= lo - slack && x <= hi + slack {
                        ExtValue::ZERO
                    } else {
                        ExtValue::INFINITY
                    }
                })
                .collect()
        }
        FnSpec::Table { path } => {
            let nodes = csvio::read_xy_table(path)?;
            (0..grid.len())
                .map(|i| interpolate(&nodes, grid.point(i)))
                .collect()
        }
    };
    SampledFn::new(grid.clone(), values)
}

/// Piecewise-linear interpolation through `(x, value)` nodes with strictly
/// increasing `x`. Outside the node range, and strictly inside any segment
/// touching a `+inf` node, the result is `+inf`.
fn interpolate(nodes: &[(f64, ExtValue)], x: f64) -> ExtValue {
    let first = nodes[0].0;
    let last = nodes[nodes.len() - 1].0;
    let snap = 1e-9 * (1.0 + first.abs().max(last.abs()));
    if x < first - snap || x > last + snap {
        return ExtValue::INFINITY;
    }
    let k = nodes.partition_point(|(xn, _)| *xn < x);
    if k < nodes.len() && (nodes[k].0 - x).abs() <= snap {
        return nodes[k].1;
    }
    if k > 0 && (nodes[k - 1].0 - x).abs() <= snap {
        return nodes[k - 1].1;
    }
    if k == 0 || k == nodes.len() {
        return ExtValue::INFINITY;
    }
    let (x0, v0) = nodes[k - 1];
    let (x1, v1) = nodes[k];
    match (v0.value(), v1.value()) {
        (Some(a), Some(b)) => {
            let t = (x - x0) / (x1 - x0);
            ExtValue::finite(a + t * (b - a))
        }
        _ => ExtValue::INFINITY,
    }
}
