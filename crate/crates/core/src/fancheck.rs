//! Witness searches for generalized convexity (implicit, Fan, Fan
//! bi-implicit) and the minimax identities behind the recipe.
//!
//! A [`FanInstance`] is a finite table `F(w, v)` over a witness axis `W`
//! (parameter samples) and an opponent axis `V` (a grid). Fan convexity at
//! `(w1, w2, α)` asks for one `w` with
//! `max_v F(w, v) - α F(w1, v) - (1 - α) F(w2, v) <= delta`.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::covers::{Cover, LambdaSet, ParamSet};
use crate::csvio;
use crate::error::{Error, Result};
use crate::extgrid::{pairing, Grid1D};
use crate::synth::synth_value;

/// Relative floor added to every automatic delta to absorb rounding.
const DELTA_FLOOR_RTOL: f64 = 1e-12;

/// Which function a [`FanInstance`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FanKind {
    /// `g(x_i, λ, z) = φ_λ(x_i) - φ_λ(z)`.
    G { x_index: usize },
    /// `h(y_j, λ, u) = φ*_λ(y_j) - φ*_λ(u)`.
    H { y_index: usize },
    /// `x̄y(λ, z) = <z, y_j> + φ_λ(x_i) - φ_λ(z)`.
    Saddle { x_index: usize, y_index: usize },
    User,
}

/// Finite table over witnesses × opponents, row-major by witness.
#[derive(Debug, Clone, PartialEq)]
pub struct FanInstance {
    kind: FanKind,
    witnesses: ParamSet,
    opponents: Grid1D,
    values: Vec<f64>,
}

impl FanInstance {
    pub fn new(kind: FanKind, witnesses: ParamSet, opponents: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != witnesses.len() * opponents.len() {
            return Err(Error::InvalidParams(format!(
                "{} values for a {}x{} instance",
                values.len(),
                witnesses.len(),
                opponents.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("witness tables must be finite".into()));
        }
        Ok(FanInstance {
            kind,
            witnesses,
            opponents,
            values,
        })
    }

    pub fn user(witnesses: ParamSet, opponents: Grid1D, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..witnesses.len())
            .flat_map(|k| (0..opponents.len()).map(move |v| (k, v)))
            .map(|(k, v)| f(k, v))
            .collect();
        FanInstance::new(FanKind::User, witnesses, opponents, values)
    }

    fn from_cover(
        cover: &Cover,
        kind: FanKind,
        opponents: &Grid1D,
        f: impl Fn(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(cover.len() * opponents.len());
        for k in 0..cover.len() {
            for v in 0..opponents.len() {
                values.push(f(k, v).ok_or_else(|| {
                    Error::NonFinite(format!("cover takes +inf at lambda = {}", cover.params().values()[k]))
                })?);
            }
        }
        FanInstance::new(kind, cover.params().clone(), opponents.clone(), values)
    }

    /// `g(x_i, ·, ·)` with witnesses `Λ` and opponents `z` on the x-grid.
    pub fn for_g(cover: &Cover, i: usize) -> Result<Self> {
        FanInstance::from_cover(cover, FanKind::G { x_index: i }, cover.xgrid(), |k, v| {
            Some(cover.phi(k).get(i).value()? - cover.phi(k).get(v).value()?)
        })
    }

    /// `h(y_j, ·, ·)` with witnesses `Λ` and opponents `u` on the y-grid.
    pub fn for_h(cover: &Cover, j: usize) -> Result<Self> {
        FanInstance::from_cover(cover, FanKind::H { y_index: j }, cover.ygrid(), |k, v| {
            Some(cover.phi_star(k).get(j).value()? - cover.phi_star(k).get(v).value()?)
        })
    }

    /// `x̄y(λ, z)` at `(x_i, y_j)`, with `z` on the x-grid.
    pub fn saddle(cover: &Cover, i: usize, j: usize) -> Result<Self> {
        let y = cover.ygrid().point(j);
        let xg = cover.xgrid();
        FanInstance::from_cover(cover, FanKind::Saddle { x_index: i, y_index: j }, xg, |k, v| {
            let phi = cover.phi(k);
            Some(phi.get(i).value()? + (pairing(xg.point(v), y) - phi.get(v).value()?))
        })
    }

    pub fn kind(&self) -> FanKind {
        self.kind
    }

    pub fn witnesses(&self) -> &ParamSet {
        &self.witnesses
    }

    pub fn opponents(&self) -> &Grid1D {
        &self.opponents
    }

    #[inline]
    pub fn get(&self, w: usize, v: usize) -> f64 {
        self.values[w * self.opponents.len() + v]
    }

    fn row(&self, w: usize) -> &[f64] {
        let n = self.opponents.len();
        &self.values[w * n..(w + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Finite-difference estimate of the Lipschitz constant of `w ↦ F(w, v)`,
    /// maximized over `v`.
    pub fn lipschitz_witness(&self) -> f64 {
        let lam = self.witnesses.values();
        let mut worst = 0.0_f64;
        for k in 0..lam.len().saturating_sub(1) {
            let dw = lam[k + 1] - lam[k];
            for (a, b) in self.row(k).iter().zip(self.row(k + 1)) {
                worst = worst.max((b - a).abs() / dw);
            }
        }
        worst
    }

    /// Finite-difference estimate of the Lipschitz constant of `v ↦ F(w, v)`,
    /// maximized over `w`.
    pub fn lipschitz_opponent(&self) -> f64 {
        let h = self.opponents.h();
        if self.opponents.len() < 2 {
            return 0.0;
        }
        (0..self.witnesses.len())
            .flat_map(|k| self.row(k).windows(2).map(move |p| (p[1] - p[0]).abs() / h))
            .fold(0.0, f64::max)
    }

    fn rounding_floor(&self) -> f64 {
        DELTA_FLOOR_RTOL * (1.0 + self.max_abs())
    }
}

/// Slack accepted for a witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// Local parameter spacing times the estimated Lipschitz constant in
    /// the parameter (plus half a grid step times the Lipschitz constant in
    /// the grid variable for implicit convexity), plus a rounding floor.
    /// Zero spacing for a finite parameter set.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FanCheckConfig {
    pub pair_budget: usize,
    pub alphas: Vec<f64>,
    pub delta: DeltaMode,
    pub seed: u64,
    /// Test every pair, provided the axis has at most `exhaustive_limit`
    /// points.
    pub exhaustive: bool,
    pub exhaustive_limit: usize,
}

impl Default for FanCheckConfig {
    fn default() -> Self {
        FanCheckConfig {
            pair_budget: 2000,
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            delta: DeltaMode::Auto,
            seed: 0,
            exhaustive: false,
            exhaustive_limit: 128,
        }
    }
}

impl FanCheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParams("alphas must be a nonempty subset of [0, 1]".into()));
        }
        if let DeltaMode::Fixed(d) = self.delta {
            if d.is_nan() || d < 0.0 {
                return Err(Error::InvalidParams(format!("delta must be >= 0, got {d}")));
            }
        }
        Ok(())
    }
}

/// One point of a probe: a witness index and, for implicit convexity, an
/// opponent index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbePoint {
    pub w: usize,
    pub v: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessFailure {
    pub first: ProbePoint,
    pub second: ProbePoint,
    pub alpha: f64,
    /// Smallest residual over all witnesses.
    pub residual: f64,
    pub best_witness: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub pass: bool,
    pub tested_pairs: usize,
    pub probes: usize,
    pub exhaustive: bool,
    pub failures: Vec<WitnessFailure>,
    /// Largest delta applied to any probe.
    pub delta_used: f64,
    /// Largest residual over delta ratio seen (0 when delta is 0 and every
    /// residual is nonpositive).
    pub worst_ratio: f64,
}

struct Outcome {
    failure: Option<WitnessFailure>,
    delta: f64,
    ratio: f64,
}

fn ratio(residual: f64, delta: f64) -> f64 {
    if residual <= 0.0 {
        0.0
    } else if delta > 0.0 {
        residual / delta
    } else {
        f64::INFINITY
    }
}

/// Unordered pairs `a <= b` of `0..n`, all of them or a seeded sample.
fn select_pairs(n: usize, cfg: &FanCheckConfig) -> (Vec<(usize, usize)>, bool) {
    let total = n * (n + 1) / 2;
    let all = (cfg.exhaustive && n <= cfg.exhaustive_limit) || cfg.pair_budget >= total;
    let decode = |mut p: usize| {
        let mut a = 0;
        while p >= n - a {
            p -= n - a;
            a += 1;
        }
        (a, a + p)
    };
    if all {
        return ((0..total).map(decode).collect(), true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picks = index::sample(&mut rng, total, cfg.pair_budget).into_vec();
    picks.sort_unstable();
    (picks.into_iter().map(decode).collect(), false)
}

fn collect(outcomes: Vec<Outcome>, pairs: usize, exhaustive: bool) -> WitnessReport {
    let probes = outcomes.len();
    let delta_used = outcomes.iter().map(|o| o.delta).fold(0.0, f64::max);
    let worst_ratio = outcomes.iter().map(|o| o.ratio).fold(0.0, f64::max);
    let failures: Vec<WitnessFailure> = outcomes.into_iter().filter_map(|o| o.failure).collect();
    WitnessReport {
        pass: failures.is_empty(),
        tested_pairs: pairs,
        probes,
        exhaustive,
        failures,
        delta_used,
        worst_ratio,
    }
}

/// Fan convexity of `F` on its witness axis, uniformly over opponents.
pub fn check_fan_convex(f: &FanInstance, cfg: &FanCheckConfig) -> Result<WitnessReport> {
    cfg.validate()?;
    let nw = f.witnesses.len();
    let (pairs, exhaustive) = select_pairs(nw, cfg);
    let lip = f.lipschitz_witness();
    let floor = f.rounding_floor();
    let probes: Vec<(usize, usize, f64)> = pairs
        .iter()
        .flat_map(|&(a, b)| cfg.alphas.iter().map(move |&al| (a, b, al)))
        .collect();
    let outcomes: Vec<Outcome> = probes
        .par_iter()
        .map(|&(a, b, alpha)| {
            let delta = match cfg.delta {
                DeltaMode::Auto => f.witnesses.local_spacing(a, b) * lip + floor,
                DeltaMode::Fixed(d) => d,
            };
            let (ra, rb) = (f.row(a), f.row(b));
            let (best_witness, residual) = (0..nw)
                .map(|w| {
                    let r = f
                        .row(w)
                        .iter()
                        .zip(ra.iter().zip(rb))
                        .map(|(fw, (fa, fb))| fw - alpha * fa - (1.0 - alpha) * fb)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (w, r)
                })
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let failure = (residual > delta).then_some(WitnessFailure {
                first: ProbePoint { w: a, v: None },
                second: ProbePoint { w: b, v: None },
                alpha,
                residual,
                best_witness,
                delta,
            });
            Outcome {
                failure,
                delta,
                ratio: ratio(residual, delta),
            }
        })
        .collect();
    Ok(collect(outcomes, pairs.len(), exhaustive))
}

/// Implicit convexity: for points `(w1, z1)`, `(w2, z2)` and weight `α`,
/// some witness `w` has
/// `F(w, snap(α z1 + (1 - α) z2)) <= α F(w1, z1) + (1 - α) F(w2, z2) + delta`.
pub fn check_implicit_convex(f: &FanInstance, cfg: &FanCheckConfig) -> Result<WitnessReport> {
    cfg.validate()?;
    let (nw, nv) = (f.witnesses.len(), f.opponents.len());
    let (pairs, exhaustive) = select_pairs(nw * nv, cfg);
    let lip_w = f.lipschitz_witness();
    let lip_v = f.lipschitz_opponent();
    let floor = f.rounding_floor();
    let grid = &f.opponents;
    let probes: Vec<(usize, usize, f64)> = pairs
        .iter()
        .flat_map(|&(a, b)| cfg.alphas.iter().map(move |&al| (a, b, al)))
        .collect();
    let outcomes: Vec<Outcome> = probes
        .par_iter()
        .map(|&(a, b, alpha)| {
            let (w1, v1) = (a / nv, a % nv);
            let (w2, v2) = (b / nv, b % nv);
            let z = alpha * grid.point(v1) + (1.0 - alpha) * grid.point(v2);
            let vs = grid.snap(z);
            let delta = match cfg.delta {
                DeltaMode::Auto => {
                    f.witnesses.local_spacing(w1, w2) * lip_w + 0.5 * grid.h() * lip_v + floor
                }
                DeltaMode::Fixed(d) => d,
            };
            let target = alpha * f.get(w1, v1) + (1.0 - alpha) * f.get(w2, v2);
            let (best_witness, residual) = (0..nw)
                .map(|w| (w, f.get(w, vs) - target))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let failure = (residual > delta).then_some(WitnessFailure {
                first: ProbePoint { w: w1, v: Some(v1) },
                second: ProbePoint { w: w2, v: Some(v2) },
                alpha,
                residual,
                best_witness,
                delta,
            });
            Outcome {
                failure,
                delta,
                ratio: ratio(residual, delta),
            }
        })
        .collect();
    Ok(collect(outcomes, pairs.len(), exhaustive))
}

/// Which grid indices to probe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Probes {
    #[default]
    All,
    Indices(Vec<usize>),
}

impl Probes {
    fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            Probes::All => Ok((0..n).collect()),
            Probes::Indices(v) => {
                if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                    return Err(Error::InvalidParams(format!("probe index {bad} out of range 0..{n}")));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BicConfig {
    pub fan: FanCheckConfig,
    pub x_probes: Probes,
    pub y_probes: Probes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub index: usize,
    pub report: WitnessReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicReport {
    /// One report per probed x, for `g(x, ·, ·)`.
    pub g: Vec<ProbeReport>,
    /// One report per probed y, for `h(y, ·, ·)`.
    pub h: Vec<ProbeReport>,
    pub pass: bool,
}

impl BicReport {
    pub fn failure_count(&self) -> usize {
        self.g.iter().chain(&self.h).map(|p| p.report.failures.len()).sum()
    }

    pub fn worst_ratio(&self) -> f64 {
        self.g.iter().chain(&self.h).map(|p| p.report.worst_ratio).fold(0.0, f64::max)
    }

    /// Header `function,index,w1,w2,alpha,residual,best_witness,delta`.
    pub fn write_failures_csv(&self, path: &Path) -> Result<()> {
        let rows = [("g", &self.g), ("h", &self.h)].into_iter().flat_map(|(name, reports)| {
            reports.iter().flat_map(move |p| {
                p.report.failures.iter().map(move |f| {
                    vec![
                        name.to_string(),
                        p.index.to_string(),
                        f.first.w.to_string(),
                        f.second.w.to_string(),
                        csvio::format_real(f.alpha),
                        csvio::format_real(f.residual),
                        f.best_witness.to_string(),
                        csvio::format_real(f.delta),
                    ]
                })
            })
        });
        csvio::write_rows(
            path,
            &["function", "index", "w1", "w2", "alpha", "residual", "best_witness", "delta"],
            rows,
        )
    }
}

/// Fan convexity of `g(x, ·, ·)` for every probed x and of `h(y, ·, ·)` for
/// every probed y.
pub fn check_fan_bic(cover: &Cover, cfg: &BicConfig) -> Result<BicReport> {
    cfg.fan.validate()?;
    let xs = cfg.x_probes.resolve(cover.xgrid().len())?;
    let ys = cfg.y_probes.resolve(cover.ygrid().len())?;
    let run = |index: usize, inst: Result<FanInstance>| -> Result<ProbeReport> {
        Ok(ProbeReport {
            index,
            report: check_fan_convex(&inst?, &cfg.fan)?,
        })
    };
    let g = xs
        .par_iter()
        .map(|&i| run(i, FanInstance::for_g(cover, i)))
        .collect::<Result<Vec<_>>>()?;
    let h = ys
        .par_iter()
        .map(|&j| run(j, FanInstance::for_h(cover, j)))
        .collect::<Result<Vec<_>>>()?;
    let pass = g.iter().chain(&h).all(|p| p.report.pass);
    Ok(BicReport { g, h, pass })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxReport {
    pub i: usize,
    pub j: usize,
    /// `min_λ max_z x̄y(λ, z)`.
    pub lhs: f64,
    /// `max_z min_λ x̄y(λ, z)`.
    pub rhs: f64,
    pub b_value: f64,
    /// `x̄*(y_j)` with `x̄(z) = max_λ (φ_λ(z) - φ_λ(x_i))`.
    pub xbar_conj: f64,
    /// `lhs - rhs`; nonnegative on any finite table.
    pub gap: f64,
    pub lhs_matches_b: bool,
    pub rhs_matches_xbar: bool,
}

/// Evaluates both sides of the minimax equality for `x̄y` at `(x_i, y_j)`
/// and the identities `lhs = b(x, y)`, `rhs = x̄*(y)`.
pub fn minimax_verify(cover: &Cover, i: usize, j: usize, tol: f64) -> Result<MinimaxReport> {
    if i >= cover.xgrid().len() || j >= cover.ygrid().len() {
        return Err(Error::InvalidParams(format!("probe ({i}, {j}) outside the grid")));
    }
    let t = FanInstance::saddle(cover, i, j)?;
    let (nk, nz) = (cover.len(), cover.xgrid().len());
    let lhs = (0..nk)
        .map(|k| t.row(k).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    let rhs = (0..nz)
        .map(|z| (0..nk).map(|k| t.get(k, z)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let (b, _) = synth_value(cover, i, j);
    let b_value = b
        .value()
        .ok_or_else(|| Error::NonFinite(format!("b is +inf at ({i}, {j})")))?;

    let xg = cover.xgrid();
    let y = cover.ygrid().point(j);
    let xbar_conj = (0..nz)
        .map(|z| {
            let xbar = (0..nk)
                .map(|k| cover.phi(k).get(z).to_f64() - cover.phi(k).get(i).to_f64())
                .fold(f64::NEG_INFINITY, f64::max);
            pairing(xg.point(z), y) - xbar
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(MinimaxReport {
        i,
        j,
        lhs,
        rhs,
        b_value,
        xbar_conj,
        gap: lhs - rhs,
        lhs_matches_b: (lhs - b_value).abs() <= tol,
        rhs_matches_xbar: (rhs - xbar_conj).abs() <= tol,
    })
}

/// Two-point parameter set `{λ1, λ2}` with no continuum between them.
pub fn finite_pair(l1: f64, l2: f64) -> Result<ParamSet> {
    ParamSet::new(vec![l1, l2], LambdaSet::Finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{quadratic_fan, singleton, StarMode};
    use crate::extgrid::FnSpec;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid1D {
        Grid1D::new(-2.0, 2.0, 41).unwrap()
    }

    fn fan(k: usize, kind: LambdaSet, stars: StarMode) -> Cover {
        let g = grid();
        quadratic_fan(ParamSet::geometric(0.25, 4.0, k, kind).unwrap(), &g, &g, stars).unwrap()
    }

    fn exhaustive() -> FanCheckConfig {
        FanCheckConfig {
            exhaustive: true,
            ..FanCheckConfig::default()
        }
    }

    #[test]
    fn pair_decoding_covers_upper_triangle() {
        let cfg = exhaustive();
        let (pairs, all) = select_pairs(4, &cfg);
        assert!(all);
        assert_eq!(
            pairs,
            vec![(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
        );
        let sampled = FanCheckConfig {
            pair_budget: 5,
            seed: 3,
            ..FanCheckConfig::default()
        };
        let (a, all) = select_pairs(200, &sampled);
        assert!(!all);
        assert_eq!(a.len(), 5);
        assert_eq!(a, select_pairs(200, &sampled).0);
    }

    #[test]
    fn g_for_fan_passes_with_arithmetic_witness() {
        let c = fan(9, LambdaSet::Interval, StarMode::ClosedForm);
        for i in [0, 10, 20, 33] {
            let r = check_fan_convex(&FanInstance::for_g(&c, i).unwrap(), &exhaustive()).unwrap();
            assert!(r.pass, "x index {i}: {:?}", r.failures.first());
            assert_eq!(r.tested_pairs, 45);
            assert!(r.exhaustive);
        }
    }

    #[test]
    fn h_for_fan_passes_with_harmonic_witness() {
        let c = fan(9, LambdaSet::Interval, StarMode::ClosedForm);
        for j in [0, 15, 20, 40] {
            let r = check_fan_convex(&FanInstance::for_h(&c, j).unwrap(), &exhaustive()).unwrap();
            assert!(r.pass, "y index {j}");
        }
    }

    #[test]
    fn two_point_parameter_set_fails_interior_weights() {
        let g = grid();
        let c = quadratic_fan(finite_pair(0.25, 4.0).unwrap(), &g, &g, StarMode::ClosedForm).unwrap();
        let i = g.index_of(1.0).unwrap();
        let r = check_fan_convex(&FanInstance::for_g(&c, i).unwrap(), &exhaustive()).unwrap();
        assert!(!r.pass);
        let alphas: Vec<f64> = r.failures.iter().map(|f| f.alpha).collect();
        assert_eq!(alphas, vec![0.25, 0.5, 0.75]);
        assert!(r.failures.iter().all(|f| (f.first.w, f.second.w) == (0, 1)));
        assert_eq!(r.delta_used, FanInstance::for_g(&c, i).unwrap().rounding_floor());
    }

    #[test]
    fn delta_infinity_always_passes_and_zero_needs_exact_witness() {
        let g = grid();
        let c = quadratic_fan(finite_pair(0.25, 4.0).unwrap(), &g, &g, StarMode::ClosedForm).unwrap();
        let inst = FanInstance::for_g(&c, 30).unwrap();
        let loose = FanCheckConfig {
            delta: DeltaMode::Fixed(f64::INFINITY),
            ..exhaustive()
        };
        assert!(check_fan_convex(&inst, &loose).unwrap().pass);
        // End-point weights have the exact witnesses w2 and w1.
        let strict = FanCheckConfig {
            delta: DeltaMode::Fixed(0.0),
            alphas: vec![0.0, 1.0],
            ..exhaustive()
        };
        assert!(check_fan_convex(&inst, &strict).unwrap().pass);
        let mid = FanCheckConfig {
            alphas: vec![0.5],
            ..strict
        };
        assert!(!check_fan_convex(&inst, &mid).unwrap().pass);
    }

    #[test]
    fn bic_examples() {
        let c = fan(9, LambdaSet::Interval, StarMode::ClosedForm);
        let cfg = BicConfig {
            fan: exhaustive(),
            ..BicConfig::default()
        };
        let r = check_fan_bic(&c, &cfg).unwrap();
        assert!(r.pass);
        assert_eq!((r.g.len(), r.h.len()), (41, 41));

        let g = grid();
        let s = singleton(&FnSpec::Quadratic { coeff: 1.0 }, &g, &g).unwrap();
        assert!(check_fan_bic(&s, &cfg).unwrap().pass);

        let two = quadratic_fan(finite_pair(0.25, 4.0).unwrap(), &g, &g, StarMode::ClosedForm).unwrap();
        let r = check_fan_bic(&two, &cfg).unwrap();
        assert!(!r.pass);
        assert!(r.failure_count() > 0);
    }

    #[test]
    fn implicit_convexity_examples() {
        let g = grid();
        let y = 30;
        let s = singleton(&FnSpec::Quadratic { coeff: 1.0 }, &g, &g).unwrap();
        let f = |c: &Cover| {
            FanInstance::user(c.params().clone(), g.clone(), |k, v| {
                c.f_value(k, v, y).to_f64()
            })
            .unwrap()
        };
        let cfg = FanCheckConfig {
            pair_budget: 3000,
            seed: 11,
            ..FanCheckConfig::default()
        };
        assert!(check_implicit_convex(&f(&s), &cfg).unwrap().pass);
        let c = fan(9, LambdaSet::Interval, StarMode::ClosedForm);
        let r = check_implicit_convex(&f(&c), &cfg).unwrap();
        assert!(r.pass, "{:?}", r.failures.first());

        let ones = FanCheckConfig {
            alphas: vec![1.0],
            delta: DeltaMode::Fixed(0.0),
            ..cfg
        };
        assert!(check_implicit_convex(&f(&c), &ones).unwrap().pass);
    }

    #[test]
    fn minimax_identities() {
        let c = fan(65, LambdaSet::Interval, StarMode::ClosedForm).to_computed().unwrap();
        let g = c.xgrid().clone();
        let (i, j) = (g.index_of(1.0).unwrap(), g.index_of(2.0).unwrap());
        let r = minimax_verify(&c, i, j, 1e-12).unwrap();
        assert_eq!(r.lhs, r.b_value);
        assert!(r.lhs_matches_b && r.rhs_matches_xbar);
        assert!(r.gap >= 0.0);
        assert_abs_diff_eq!(r.lhs, 2.0, epsilon = 2e-3);
        assert_abs_diff_eq!(r.rhs, 2.0, epsilon = 2e-3);

        let s = singleton(&FnSpec::Quadratic { coeff: 1.0 }, &g, &g).unwrap();
        let r = minimax_verify(&s, 5, 33, 1e-12).unwrap();
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.lhs, s.f_value(0, 5, 33).to_f64());
    }

    #[test]
    fn minimax_rejects_infinite_covers() {
        let g = grid();
        let c = singleton(&FnSpec::IndicatorInterval { lo: -1.0, hi: 1.0 }, &g, &g).unwrap();
        assert!(matches!(minimax_verify(&c, 20, 20, 1e-12), Err(Error::NonFinite(_))));
    }

    #[test]
    fn config_validation() {
        let bad = FanCheckConfig {
            alphas: vec![1.5],
            ..FanCheckConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FanCheckConfig {
            delta: DeltaMode::Fixed(-1.0),
            ..FanCheckConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
