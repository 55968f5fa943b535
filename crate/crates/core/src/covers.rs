//! Convex lagrangian covers `λ ↦ φ_λ` over a sampled parameter set,
//! built-in families, tabulated covers and the union graph
//! `⋃_λ M(φ_λ)`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conjugate::{conjugate, default_convexity_tol, fenchel_gap, is_convex};
use crate::csvio;
use crate::error::{Error, Result};
use crate::extgrid::{sample, ExtValue, FnSpec, Grid1D, SampledFn};
use crate::graphs::{coarse_step, GraphTol, OperatorGraph};

/// What a finite list of parameters stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSet {
    /// Samples of the interval `[λ_0, λ_{K-1}]`; witnesses of the
    /// generalized-convexity checks may fall between samples.
    #[default]
    Interval,
    /// Exactly the listed points.
    Finite,
}

/// Strictly increasing parameter values `λ_0 < … < λ_{K-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
    kind: LambdaSet,
}

impl ParamSet {
    pub fn new(values: Vec<f64>, kind: LambdaSet) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("parameter set is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameter values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "parameter values must be strictly increasing".into(),
            ));
        }
        Ok(ParamSet {
            values,
            labels: None,
            kind,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::InvalidParams(format!(
                "{} labels for {} parameters",
                labels.len(),
                self.values.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// `k` points, geometric spacing, exact end points.
    pub fn geometric(lo: f64, hi: f64, k: usize, kind: LambdaSet) -> Result<Self> {
        check_range(lo, hi, k)?;
        let ratio = hi / lo;
        let last = (k - 1) as f64;
        let values = (0..k)
            .map(|m| match m {
                0 => lo,
                _ if m == k - 1 => hi,
                _ => lo * ratio.powf(m as f64 / last),
            })
            .collect();
        ParamSet::new(values, kind)
    }

    /// `k` points, arithmetic spacing, exact end points.
    pub fn arithmetic(lo: f64, hi: f64, k: usize, kind: LambdaSet) -> Result<Self> {
        check_range(lo, hi, k)?;
        let last = (k - 1) as f64;
        let values = (0..k)
            .map(|m| (lo * (last - m as f64) + hi * m as f64) / last)
            .collect();
        ParamSet::new(values, kind)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn kind(&self) -> LambdaSet {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest gap between consecutive samples with indices in `[a, b]`.
    /// Zero for a finite parameter set, where there is nothing between
    /// samples.
    pub fn local_spacing(&self, a: usize, b: usize) -> f64 {
        if self.kind == LambdaSet::Finite {
            return 0.0;
        }
        let (a, b) = (a.min(b), a.max(b));
        self.values[a..=b]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Every `stride`-th sample, always keeping the last one.
    pub fn thinned_indices(&self, stride: usize) -> Vec<usize> {
        let stride = stride.max(1);
        let last = self.values.len() - 1;
        let mut idx: Vec<usize> = (0..=last).step_by(stride).collect();
        if idx.last() != Some(&last) {
            idx.push(last);
        }
        idx
    }
}

fn check_range(lo: f64, hi: f64, k: usize) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "need 0 < lambda_min < lambda_max, got [{lo}, {hi}]"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 parameters, got {k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarMode {
    /// Conjugates supplied by a closed-form expression.
    #[default]
    ClosedForm,
    /// Conjugates computed on the y-grid from the sampled potentials.
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Arithmetic,
}

/// A convex lagrangian cover sampled on `xgrid × ygrid`.
#[derive(Debug, Clone)]
pub struct Cover {
    params: ParamSet,
    xgrid: Grid1D,
    ygrid: Grid1D,
    phi: Vec<SampledFn>,
    phi_star: Vec<SampledFn>,
    star_mode: StarMode,
}

fn check_potentials(params: &ParamSet, xgrid: &Grid1D, phi: &[SampledFn]) -> Result<()> {
    if phi.len() != params.len() {
        return Err(Error::InvalidParams(format!(
            "{} potentials for {} parameters",
            phi.len(),
            params.len()
        )));
    }
    for (p, &lambda) in phi.iter().zip(params.values()) {
        if p.grid() != xgrid {
            return Err(Error::GridMismatch(format!("potential for lambda = {lambda}")));
        }
        if !is_convex(p, default_convexity_tol(p.values())) {
            return Err(Error::NotConvex {
                lambda: Some(lambda),
            });
        }
    }
    Ok(())
}

impl Cover {
    /// Cover whose conjugates are computed from the potentials.
    pub fn from_potentials(params: ParamSet, phi: Vec<SampledFn>, ygrid: Grid1D) -> Result<Self> {
        let xgrid = phi
            .first()
            .map(|p| p.grid().clone())
            .ok_or_else(|| Error::InvalidParams("cover has no potentials".into()))?;
        check_potentials(&params, &xgrid, &phi)?;
        let phi_star = phi
            .iter()
            .map(|p| conjugate(p, &ygrid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cover {
            params,
            xgrid,
            ygrid,
            phi,
            phi_star,
            star_mode: StarMode::Computed,
        })
    }

    /// Cover with caller-supplied conjugates.
    pub fn with_closed_form_stars(
        params: ParamSet,
        phi: Vec<SampledFn>,
        phi_star: Vec<SampledFn>,
    ) -> Result<Self> {
        let xgrid = phi
            .first()
            .map(|p| p.grid().clone())
            .ok_or_else(|| Error::InvalidParams("cover has no potentials".into()))?;
        check_potentials(&params, &xgrid, &phi)?;
        if phi_star.len() != phi.len() {
            return Err(Error::InvalidParams("potential/conjugate count mismatch".into()));
        }
        let ygrid = phi_star[0].grid().clone();
        if phi_star.iter().any(|s| s.grid() != &ygrid) {
            return Err(Error::GridMismatch("conjugates on different grids".into()));
        }
        Ok(Cover {
            params,
            xgrid,
            ygrid,
            phi,
            phi_star,
            star_mode: StarMode::ClosedForm,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn ygrid(&self) -> &Grid1D {
        &self.ygrid
    }

    pub fn phi(&self, k: usize) -> &SampledFn {
        &self.phi[k]
    }

    pub fn phi_star(&self, k: usize) -> &SampledFn {
        &self.phi_star[k]
    }

    pub fn star_mode(&self) -> StarMode {
        self.star_mode
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// `f(λ_k, x_i, y_j) = φ_k(x_i) + φ*_k(y_j)`.
    #[inline]
    pub fn f_value(&self, k: usize, i: usize, j: usize) -> ExtValue {
        self.phi[k].get(i) + self.phi_star[k].get(j)
    }

    /// True when every φ_λ and φ*_λ is finite on its grid.
    pub fn is_finite_valued(&self) -> bool {
        self.phi.iter().chain(&self.phi_star).all(|f| f.is_finite_everywhere())
    }

    /// Same potentials, conjugates recomputed on the y-grid.
    pub fn to_computed(&self) -> Result<Cover> {
        Cover::from_potentials(self.params.clone(), self.phi.clone(), self.ygrid.clone())
    }

    /// Sub-cover keeping every `stride`-th parameter (and the last one).
    pub fn thinned(&self, stride: usize) -> Result<Cover> {
        let idx = self.params.thinned_indices(stride);
        let values = idx.iter().map(|&k| self.params.values[k]).collect();
        let mut params = ParamSet::new(values, self.params.kind)?;
        if let Some(labels) = &self.params.labels {
            params = params.with_labels(idx.iter().map(|&k| labels[k].clone()).collect())?;
        }
        Ok(Cover {
            params,
            xgrid: self.xgrid.clone(),
            ygrid: self.ygrid.clone(),
            phi: idx.iter().map(|&k| self.phi[k].clone()).collect(),
            phi_star: idx.iter().map(|&k| self.phi_star[k].clone()).collect(),
            star_mode: self.star_mode,
        })
    }

    /// Largest change of `λ ↦ φ_λ(x)` and `λ ↦ φ*_λ(y)` between consecutive
    /// parameters. A smoothness statistic, not a continuity proof.
    pub fn continuity_stats(&self) -> ContinuityStats {
        let jump = |fs: &[SampledFn]| -> f64 {
            fs.windows(2)
                .flat_map(|w| {
                    w[0].values()
                        .iter()
                        .zip(w[1].values())
                        .filter_map(|(a, b)| Some((b.value()? - a.value()?).abs()))
                })
                .fold(0.0, f64::max)
        };
        ContinuityStats {
            max_jump_phi: jump(&self.phi),
            max_jump_phi_star: jump(&self.phi_star),
        }
    }

    /// Max over adjacent parameters of the change in forward differences of
    /// `φ_λ` along x and of `φ*_λ` along y. Bounds the depth of the kinks
    /// an infimum over the sampled family can put into `b`.
    pub fn adjacent_slope_jumps(&self) -> (f64, f64) {
        fn jumps(fs: &[SampledFn]) -> f64 {
            let mut worst = 0.0_f64;
            for w in fs.windows(2) {
                let (a, b) = (w[0].values(), w[1].values());
                for i in 0..a.len().saturating_sub(1) {
                    let da = a[i + 1].value().zip(a[i].value()).map(|(p, q)| p - q);
                    let db = b[i + 1].value().zip(b[i].value()).map(|(p, q)| p - q);
                    if let (Some(da), Some(db)) = (da, db) {
                        worst = worst.max((db - da).abs());
                    }
                }
            }
            worst
        }
        (jumps(&self.phi), jumps(&self.phi_star))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityStats {
    pub max_jump_phi: f64,
    pub max_jump_phi_star: f64,
}

/// Built-in and tabulated cover descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoverSpec {
    /// `φ_λ(x) = λ x² / 2`, `φ*_λ(y) = y² / (2λ)`; its recipe gives the
    /// Cauchy bipotential `|x||y|` inside the cone `|y|/|x| ∈ [λ_min, λ_max]`.
    QuadraticFan {
        lambda_min: f64,
        lambda_max: f64,
        k: usize,
        #[serde(default)]
        spacing: Spacing,
        #[serde(default)]
        stars: StarMode,
        #[serde(default)]
        lambda_set: LambdaSet,
    },
    /// One potential; the recipe gives the separable bipotential.
    Singleton { function: FnSpec },
    /// Per-λ samples read from CSV.
    Tabulated {
        path: PathBuf,
        #[serde(default = "finite_lambda_set")]
        lambda_set: LambdaSet,
    },
}

fn finite_lambda_set() -> LambdaSet {
    LambdaSet::Finite
}

impl CoverSpec {
    pub fn build(&self, xgrid: &Grid1D, ygrid: &Grid1D) -> Result<Cover> {
        match self {
            CoverSpec::QuadraticFan {
                lambda_min,
                lambda_max,
                k,
                spacing,
                stars,
                lambda_set,
            } => {
                let params = match spacing {
                    Spacing::Geometric => ParamSet::geometric(*lambda_min, *lambda_max, *k, *lambda_set)?,
                    Spacing::Arithmetic => ParamSet::arithmetic(*lambda_min, *lambda_max, *k, *lambda_set)?,
                };
                quadratic_fan(params, xgrid, ygrid, *stars)
            }
            CoverSpec::Singleton { function } => singleton(function, xgrid, ygrid),
            CoverSpec::Tabulated { path, lambda_set } => {
                load_tabulated_cover(path, xgrid, ygrid, *lambda_set)
            }
        }
    }
}

/// Quadratic fan over the given parameters.
pub fn quadratic_fan(params: ParamSet, xgrid: &Grid1D, ygrid: &Grid1D, stars: StarMode) -> Result<Cover> {
    if params.values().iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidParams("quadratic fan needs lambda > 0".into()));
    }
    let phi = params
        .values()
        .iter()
        .map(|&l| SampledFn::from_fn(xgrid, |x| l * x * x / 2.0))
        .collect::<Result<Vec<_>>>()?;
    match stars {
        StarMode::ClosedForm => {
            let phi_star = params
                .values()
                .iter()
                .map(|&l| SampledFn::from_fn(ygrid, |y| y * y / (2.0 * l)))
                .collect::<Result<Vec<_>>>()?;
            Cover::with_closed_form_stars(params, phi, phi_star)
        }
        StarMode::Computed => Cover::from_potentials(params, phi, ygrid.clone()),
    }
}

/// Single-potential cover, conjugate computed on the y-grid.
pub fn singleton(function: &FnSpec, xgrid: &Grid1D, ygrid: &Grid1D) -> Result<Cover> {
    let phi = sample(function, xgrid)?;
    let params = ParamSet::new(vec![0.0], LambdaSet::Finite)?;
    Cover::from_potentials(params, vec![phi], ygrid.clone())
}

/// Reads a cover from CSV: header `lambda,x_0,…,x_{n-1}` (the x-grid
/// values), then one row `λ_k, φ_k(x_0), …` per parameter. Conjugates are
/// computed on `ygrid`.
pub fn load_tabulated_cover(
    path: &Path,
    xgrid: &Grid1D,
    ygrid: &Grid1D,
    lambda_set: LambdaSet,
) -> Result<Cover> {
    let rows = csvio::read_records(path)?;
    let (header, body) = rows
        .split_first()
        .ok_or_else(|| Error::malformed(path, "empty file"))?;
    if header.len() != xgrid.len() + 1 {
        return Err(Error::malformed(
            path,
            format!("header has {} columns, expected {}", header.len(), xgrid.len() + 1),
        ));
    }
    if !header[0].eq_ignore_ascii_case("lambda") {
        return Err(Error::malformed(path, "first header column must be 'lambda'"));
    }
    for (i, field) in header[1..].iter().enumerate() {
        let x = csvio::parse_finite(path, field, 0)?;
        if (x - xgrid.point(i)).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::malformed(
                path,
                format!("header column {} is x = {x}, grid has {}", i + 1, xgrid.point(i)),
            ));
        }
    }
    if body.is_empty() {
        return Err(Error::malformed(path, "no parameter rows"));
    }
    let mut lambdas = Vec::with_capacity(body.len());
    let mut phi = Vec::with_capacity(body.len());
    for (r, row) in body.iter().enumerate() {
        if row.len() != xgrid.len() + 1 {
            return Err(Error::malformed(
                path,
                format!("row {} has {} columns", r + 2, row.len()),
            ));
        }
        lambdas.push(csvio::parse_finite(path, &row[0], r + 1)?);
        let values = row[1..]
            .iter()
            .map(|s| {
                s.parse::<ExtValue>()
                    .map_err(|_| Error::malformed(path, format!("row {}: bad value {s:?}", r + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        phi.push(SampledFn::new(xgrid.clone(), values)?);
    }
    let params = ParamSet::new(lambdas, lambda_set)?;
    Cover::from_potentials(params, phi, ygrid.clone())
}

/// Writes a cover's potentials in the tabulated format.
pub fn write_tabulated_cover(cover: &Cover, path: &Path) -> Result<()> {
    let mut header = vec!["lambda".to_string()];
    header.extend(cover.xgrid.points().into_iter().map(csvio::format_real));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csvio::write_rows(
        path,
        &header_refs,
        cover.params.values().iter().zip(&cover.phi).map(|(&l, p)| {
            std::iter::once(csvio::format_real(l))
                .chain(p.values().iter().map(|v| csvio::format_ext(*v)))
                .collect::<Vec<_>>()
        }),
    )
}

/// `M(φ_k)` using the cover's own conjugate.
pub fn potential_graph(cover: &Cover, k: usize, tol: GraphTol) -> Result<OperatorGraph> {
    crate::graphs::graph_of_pair(&cover.phi[k], &cover.phi_star[k], tol)
}

/// `⋃_λ M(φ_λ)`. Membership uses the same floating-point expression as
/// the synthesized table, `fl(φ_k + φ*_k) - <x, y>`.
pub fn cover_union_graph(cover: &Cover, tol: GraphTol) -> Result<OperatorGraph> {
    let (xg, yg) = (&cover.xgrid, &cover.ygrid);
    let h = coarse_step(xg, yg);
    let mut members = BTreeSet::new();
    for i in 0..xg.len() {
        let x = xg.point(i);
        for j in 0..yg.len() {
            let y = yg.point(j);
            let t = tol.at(h, x, y);
            let hit = (0..cover.len()).any(|k| {
                match (cover.phi[k].get(i).value(), cover.phi_star[k].get(j).value()) {
                    (Some(p), Some(q)) => fenchel_gap(p, q, x, y) <= t,
                    _ => false,
                }
            });
            if hit {
                members.insert((i, j));
            }
        }
    }
    OperatorGraph::new(xg.clone(), yg.clone(), members)
}
