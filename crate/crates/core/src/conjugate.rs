//! Legendre–Fenchel conjugation on grids, discrete convexity and
//! subdifferentials.
//!
//! `conjugate` evaluates `f*(y_j) = max_i (<x_i, y_j> - f(x_i))` over the
//! finite samples of `f`. Ties in the argmax go to the smallest x-index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extgrid::{max_abs_finite, pairing, ExtValue, Grid1D, SampledFn};

/// Relative factor of the default discrete-convexity tolerance.
pub const CONVEXITY_RTOL: f64 = 1e-9;

/// Relative width of the near-maximum window scanned by the fast path.
const FAST_WINDOW_RTOL: f64 = 1e-6;

/// `1e-9 * (1 + max |f|)` over the finite samples.
pub fn default_convexity_tol(values: &[ExtValue]) -> f64 {
    CONVEXITY_RTOL * (1.0 + max_abs_finite(values))
}

/// Fenchel gap `phi(x) + phi*(y) - <x, y>` as evaluated everywhere in the crate.
#[inline]
pub fn fenchel_gap(phi: f64, phi_star: f64, x: f64, y: f64) -> f64 {
    (phi + phi_star) - pairing(x, y)
}

/// Worst second difference of a sampled function and whether its effective
/// domain is a contiguous run of indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityDefect {
    pub contiguous: bool,
    /// Minimum of `f[i-1] - 2 f[i] + f[i+1]` over consecutive finite
    /// triples; `+inf` when there is no such triple.
    pub worst_second_difference: f64,
    pub worst_index: Option<usize>,
}

impl ConvexityDefect {
    pub fn passes(&self, tol: f64) -> bool {
        self.contiguous && self.worst_second_difference >= -tol
    }
}

pub fn convexity_defect(values: &[ExtValue]) -> ConvexityDefect {
    let mut first = None;
    let mut last = None;
    let mut count = 0usize;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() {
            first.get_or_insert(i);
            last = Some(i);
            count += 1;
        }
    }
    let contiguous = match (first, last) {
        (Some(a), Some(b)) => b - a + 1 == count,
        _ => true,
    };
    let mut worst = f64::INFINITY;
    let mut worst_index = None;
    for i in 1..values.len().saturating_sub(1) {
        if let (Some(a), Some(b), Some(c)) =
            (values[i - 1].value(), values[i].value(), values[i + 1].value())
        {
            let d2 = a - 2.0 * b + c;
            if d2 < worst {
                worst = d2;
                worst_index = Some(i);
            }
        }
    }
    ConvexityDefect {
        contiguous,
        worst_second_difference: worst,
        worst_index,
    }
}

pub fn is_convex_slice(values: &[ExtValue], tol: f64) -> bool {
    convexity_defect(values).passes(tol)
}

/// Discrete convexity: contiguous effective domain and every second
/// difference at least `-tol`.
pub fn is_convex(f: &SampledFn, tol: f64) -> bool {
    is_convex_slice(f.values(), tol)
}

/// Closed interval of slopes `[lo, hi]`. Unbounded sides are `-inf`/`+inf`.
/// `lo > hi` marks an empty interval, which only arises where a tolerated
/// convexity violation sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SlopeInterval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }

    /// Membership in `[lo - slack, hi + slack]`.
    pub fn contains_with_slack(&self, u: f64, slack: f64) -> bool {
        self.lo - slack <= u && u <= self.hi + slack
    }
}

/// Difference-quotient slopes around a finite sample; one-sided (unbounded
/// outward) at the grid ends and next to `+inf` samples.
pub(crate) fn slope_interval(values: &[ExtValue], i: usize, h: f64) -> SlopeInterval {
    let here = values[i].to_f64();
    let lo = match i.checked_sub(1).and_then(|k| values[k].value()) {
        Some(left) => (here - left) / h,
        None => f64::NEG_INFINITY,
    };
    let hi = match values.get(i + 1).and_then(|v| v.value()) {
        Some(right) => (right - here) / h,
        None => f64::INFINITY,
    };
    SlopeInterval { lo, hi }
}

/// Discrete subdifferential of a convex sampled function at grid index `i`.
pub fn subdifferential(f: &SampledFn, i: usize) -> Result<SlopeInterval> {
    if f.get(i).is_infinite() {
        return Err(Error::InfiniteSample { index: i });
    }
    if !is_convex(f, default_convexity_tol(f.values())) {
        return Err(Error::NotConvex { lambda: None });
    }
    Ok(slope_interval(f.values(), i, f.grid().h()))
}

/// `y_j` in `∂f(x_i)`, tested through the Fenchel equality
/// `f(x_i) + f*(y_j) - x_i y_j <= tol`. The same test also decides
/// `x_i` in `∂f*(y_j)`.
pub fn in_subdifferential(f: &SampledFn, f_conj: &SampledFn, i: usize, j: usize, tol: f64) -> bool {
    match (f.get(i).value(), f_conj.get(j).value()) {
        (Some(phi), Some(phi_star)) => {
            let x = f.grid().point(i);
            let y = f_conj.grid().point(j);
            fenchel_gap(phi, phi_star, x, y) <= tol
        }
        _ => false,
    }
}

/// Which algorithm produced a conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugatePath {
    BruteForce,
    MonotoneScan,
}

#[derive(Debug, Clone)]
pub struct Conjugate {
    pub values: SampledFn,
    /// Smallest maximizing x-index for each y-index.
    pub argmax: Vec<usize>,
    pub path: ConjugatePath,
}

fn brute_force(f: &SampledFn, ygrid: &Grid1D) -> Result<(Vec<ExtValue>, Vec<usize>)> {
    let xs = f.grid().points();
    let dom: Vec<(usize, f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.value().map(|fv| (i, fv)))
        .collect();
    if dom.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let rows: Vec<(f64, usize)> = (0..ygrid.len())
        .into_par_iter()
        .map(|j| {
            let y = ygrid.point(j);
            let mut best = f64::NEG_INFINITY;
            let mut arg = dom[0].0;
            for &(i, fv) in &dom {
                let v = pairing(xs[i], y) - fv;
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            (best, arg)
        })
        .collect();
    let mut values = Vec::with_capacity(rows.len());
    let mut argmax = Vec::with_capacity(rows.len());
    for (v, a) in rows {
        values.push(ExtValue::new(v)?);
        argmax.push(a);
    }
    Ok((values, argmax))
}

/// Brute-force `O(n m)` conjugate of `f` evaluated on `ygrid`.
pub fn conjugate(f: &SampledFn, ygrid: &Grid1D) -> Result<SampledFn> {
    let (values, _) = brute_force(f, ygrid)?;
    SampledFn::new(ygrid.clone(), values)
}

pub fn conjugate_with_argmax(f: &SampledFn, ygrid: &Grid1D) -> Result<(SampledFn, Vec<usize>)> {
    let (values, argmax) = brute_force(f, ygrid)?;
    Ok((SampledFn::new(ygrid.clone(), values)?, argmax))
}

/// Conjugate via a monotone argmax scan for convex inputs.
///
/// For convex `f` the map `j -> argmax` is nondecreasing, so each row starts
/// at the previous maximizer and scans outward until the candidates drop a
/// fixed window below the running maximum. Concavity of `i -> x_i y - f_i`
/// guarantees nothing beyond that point can win, so the result equals the
/// brute-force one bit for bit, argmax included. Inputs that fail the
/// (tight) convexity precondition take the brute-force path.
pub fn conjugate_fast(f: &SampledFn, ygrid: &Grid1D) -> Result<Conjugate> {
    let xgrid = f.grid();
    let n = f.len() as f64;
    let scale = 1.0 + xgrid.max_abs() * ygrid.max_abs() + f.max_abs_finite();
    let window = FAST_WINDOW_RTOL * scale;
    // Accumulated concavity drift over n points stays below window / 2.
    let pre_tol = window / (n * n);
    if !is_convex(f, pre_tol) {
        let (values, argmax) = brute_force(f, ygrid)?;
        return Ok(Conjugate {
            values: SampledFn::new(ygrid.clone(), values)?,
            argmax,
            path: ConjugatePath::BruteForce,
        });
    }

    let xs = xgrid.points();
    let fv: Vec<f64> = f.values().iter().map(|v| v.to_f64()).collect();
    let dom = f.domain();
    let (start, end) = (dom[0], dom[dom.len() - 1]);

    let mut values = Vec::with_capacity(ygrid.len());
    let mut argmax = Vec::with_capacity(ygrid.len());
    let mut p = start;
    for j in 0..ygrid.len() {
        let y = ygrid.point(j);
        let at = |i: usize| pairing(xs[i], y) - fv[i];
        let mut best = at(p);
        let mut arg = p;
        let mut k = p + 1;
        while k <= end {
            let v = at(k);
            if v > best {
                best = v;
                arg = k;
            } else if v < best - window {
                break;
            }
            k += 1;
        }
        let mut k = p;
        while k > start {
            k -= 1;
            let v = at(k);
            if v >= best {
                best = v;
                arg = k;
            } else if v < best - window {
                break;
            }
        }
        values.push(ExtValue::new(best)?);
        argmax.push(arg);
        p = arg;
    }
    Ok(Conjugate {
        values: SampledFn::new(ygrid.clone(), values)?,
        argmax,
        path: ConjugatePath::MonotoneScan,
    })
}

/// `f**` on the grid of `f`, going through `ygrid`.
pub fn biconjugate(f: &SampledFn, ygrid: &Grid1D) -> Result<SampledFn> {
    let fc = conjugate(f, ygrid)?;
    conjugate(&fc, f.grid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::{sample, FnSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Grid1D {
        Grid1D::new(lo, hi, n).unwrap()
    }

    fn ext(vals: &[f64]) -> Vec<ExtValue> {
        vals.iter().map(|&v| ExtValue::new(v).unwrap()).collect()
    }

    #[test]
    fn conjugate_of_half_square() {
        let g = grid(-3.0, 3.0, 601);
        let f = sample(&FnSpec::Quadratic { coeff: 1.0 }, &g).unwrap();
        let yg = grid(-2.0, 2.0, 5);
        let fc = conjugate(&f, &yg).unwrap();
        // y = 1 sits at index 3; the analytic conjugate is y^2/2.
        assert_abs_diff_eq!(fc.get(3).to_f64(), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn conjugate_of_point_indicator_is_zero() {
        let g = grid(-1.0, 1.0, 21);
        let f = sample(&FnSpec::IndicatorPoint { at: 0.0 }, &g).unwrap();
        let fc = conjugate(&f, &grid(-5.0, 7.0, 33)).unwrap();
        assert!(fc.values().iter().all(|v| *v == ExtValue::ZERO));
    }

    #[test]
    fn conjugate_of_abs_is_truncated() {
        let g = grid(-3.0, 3.0, 601);
        let f = sample(&FnSpec::Abs, &g).unwrap();
        let yg = grid(-2.0, 2.0, 5);
        let fc = conjugate(&f, &yg).unwrap();
        // sup of 2x - |x| over [-3, 3] is attained at x = 3.
        assert_abs_diff_eq!(fc.get(4).to_f64(), 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fc.get(2).to_f64(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn argmax_ties_pick_smallest_index() {
        // Flat f: at y = 0 every x-index is a maximizer.
        let g = grid(-1.0, 1.0, 5);
        let f = SampledFn::new(g.clone(), ext(&[0.0; 5])).unwrap();
        let (_, arg) = conjugate_with_argmax(&f, &grid(0.0, 1.0, 2)).unwrap();
        assert_eq!(arg[0], 0);
        let fast = conjugate_fast(&f, &grid(0.0, 1.0, 2)).unwrap();
        assert_eq!(fast.argmax, arg);
    }

    #[test]
    fn convexity_examples() {
        let g = grid(-1.0, 1.0, 3);
        let q = sample(&FnSpec::Quadratic { coeff: 1.0 }, &grid(-4.0, 9.0, 50)).unwrap();
        assert!(is_convex(&q, 0.0));
        let bump = SampledFn::new(g.clone(), ext(&[0.0, 1.0, 0.0])).unwrap();
        assert!(!is_convex(&bump, 1e-9));
        let gap = SampledFn::new(g, ext(&[0.0, f64::INFINITY, 0.0])).unwrap();
        assert!(!is_convex(&gap, 1e-9));
    }

    #[test]
    fn convexity_defect_reports_location() {
        let g = grid(0.0, 4.0, 5);
        let f = SampledFn::new(g, ext(&[0.0, 0.0, 1.0, 1.0, 3.0])).unwrap();
        let d = convexity_defect(f.values());
        assert!(d.contiguous);
        assert_eq!(d.worst_second_difference, -1.0);
        assert_eq!(d.worst_index, Some(2));
    }

    #[test]
    fn subdifferential_examples() {
        let f = sample(&FnSpec::Abs, &grid(-1.0, 1.0, 5)).unwrap();
        assert_eq!(subdifferential(&f, 2).unwrap(), SlopeInterval { lo: -1.0, hi: 1.0 });

        let q = sample(&FnSpec::Quadratic { coeff: 1.0 }, &grid(-3.0, 3.0, 601)).unwrap();
        let s = subdifferential(&q, 400).unwrap();
        assert_abs_diff_eq!(s.lo, 0.995, epsilon = 1e-9);
        assert_abs_diff_eq!(s.hi, 1.005, epsilon = 1e-9);

        let c = SampledFn::new(grid(0.0, 1.0, 4), ext(&[0.0; 4])).unwrap();
        assert_eq!(subdifferential(&c, 1).unwrap(), SlopeInterval { lo: 0.0, hi: 0.0 });
    }

    #[test]
    fn subdifferential_boundaries_are_one_sided() {
        let f = sample(&FnSpec::Abs, &grid(-1.0, 1.0, 5)).unwrap();
        let s = subdifferential(&f, 0).unwrap();
        assert_eq!(s.lo, f64::NEG_INFINITY);
        assert_eq!(s.hi, -1.0);
        let ind = sample(&FnSpec::IndicatorInterval { lo: -0.5, hi: 0.5 }, &grid(-1.0, 1.0, 5)).unwrap();
        let s = subdifferential(&ind, 3).unwrap();
        assert_eq!(s, SlopeInterval { lo: 0.0, hi: f64::INFINITY });
    }

    #[test]
    fn subdifferential_errors() {
        let g = grid(-1.0, 1.0, 3);
        let ind = sample(&FnSpec::IndicatorPoint { at: 0.0 }, &g).unwrap();
        assert!(matches!(subdifferential(&ind, 0), Err(Error::InfiniteSample { index: 0 })));
        let bump = SampledFn::new(g, ext(&[0.0, 1.0, 0.0])).unwrap();
        assert!(matches!(subdifferential(&bump, 1), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn in_subdifferential_examples() {
        let g = grid(-2.0, 2.0, 5);
        let q = sample(&FnSpec::Quadratic { coeff: 1.0 }, &g).unwrap();
        let qc = conjugate(&q, &g).unwrap();
        assert!(in_subdifferential(&q, &qc, 3, 3, 1e-12));
        assert!(!in_subdifferential(&q, &qc, 3, 1, 1e-12));
        assert_abs_diff_eq!(
            fenchel_gap(q.get(3).to_f64(), qc.get(1).to_f64(), 1.0, -1.0),
            2.0
        );

        let g = grid(-2.0, 2.0, 9);
        let a = sample(&FnSpec::Abs, &g).unwrap();
        let ac = conjugate(&a, &g).unwrap();
        // x = 0 (index 4), y = 0.5 (index 5).
        assert!(in_subdifferential(&a, &ac, 4, 5, 1e-12));

        let ind = sample(&FnSpec::IndicatorPoint { at: 0.0 }, &g).unwrap();
        let indc = conjugate(&ind, &g).unwrap();
        assert!(!in_subdifferential(&ind, &indc, 0, 0, 1e9));
    }

    #[test]
    fn fast_path_falls_back_on_nonconvex_input() {
        let g = grid(-1.0, 1.0, 3);
        let bump = SampledFn::new(g.clone(), ext(&[0.0, 1.0, 0.0])).unwrap();
        let fast = conjugate_fast(&bump, &g).unwrap();
        assert_eq!(fast.path, ConjugatePath::BruteForce);
        assert_eq!(fast.values, conjugate(&bump, &g).unwrap());
    }

    /// Dyadic grid and values: every arithmetic step below is exact.
    fn dyadic_fn() -> impl Strategy<Value = SampledFn> {
        (prop::collection::vec(-64i32..64, 17)).prop_map(|v| {
            let g = grid(-2.0, 2.0, 17);
            SampledFn::new(g, v.into_iter().map(|k| ExtValue::finite(k as f64 / 8.0)).collect())
                .unwrap()
        })
    }

    /// Convex samples: cumulative sums of sorted integer slopes over a
    /// contiguous sub-range of the grid.
    fn convex_fn(n: usize) -> impl Strategy<Value = SampledFn> {
        (prop::collection::vec(-400i32..400, n - 1), 0..n / 3, 0..n / 3).prop_map(move |(mut s, a, b)| {
            s.sort_unstable();
            let g = grid(-2.0, 2.0, n);
            let mut acc = 0i64;
            let mut vals = Vec::with_capacity(n);
            for i in 0..n {
                if i > 0 {
                    acc += s[i - 1] as i64;
                }
                let inside = i >= a && i < n - b;
                vals.push(if inside {
                    ExtValue::finite(acc as f64 / 64.0)
                } else {
                    ExtValue::INFINITY
                });
            }
            SampledFn::new(g, vals).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn majorization_holds_exactly(f in dyadic_fn()) {
            let yg = grid(-3.0, 3.0, 25);
            let fc = conjugate(&f, &yg).unwrap();
            for j in 0..yg.len() {
                for i in 0..f.len() {
                    let lower = pairing(f.grid().point(i), yg.point(j)) - f.get(i).to_f64();
                    prop_assert!(fc.get(j).to_f64() >= lower);
                }
            }
        }

        #[test]
        fn order_reversal_is_exact(f in dyadic_fn(), bumps in prop::collection::vec(0i32..16, 17)) {
            let g = f.grid().clone();
            let bigger: Vec<ExtValue> = f.values().iter().zip(&bumps)
                .map(|(v, &b)| ExtValue::finite(v.to_f64() + b as f64 / 4.0)).collect();
            let fg = SampledFn::new(g.clone(), bigger).unwrap();
            let yg = grid(-3.0, 3.0, 13);
            let cf = conjugate(&f, &yg).unwrap();
            let cg = conjugate(&fg, &yg).unwrap();
            for j in 0..yg.len() {
                prop_assert!(cf.get(j) >= cg.get(j));
            }
        }

        #[test]
        fn shift_rule_is_exact(f in dyadic_fn(), c in -32i32..32) {
            let c = c as f64 / 4.0;
            let yg = grid(-2.0, 2.0, 9);
            let lhs = conjugate(&f.shifted(c).unwrap(), &yg).unwrap();
            let rhs = conjugate(&f, &yg).unwrap();
            for j in 0..yg.len() {
                prop_assert_eq!(lhs.get(j).to_f64(), rhs.get(j).to_f64() - c);
            }
        }

        #[test]
        fn biconjugate_is_a_minorant(f in dyadic_fn()) {
            let yg = grid(-8.0, 8.0, 65);
            let fcc = biconjugate(&f, &yg).unwrap();
            for i in 0..f.len() {
                prop_assert!(fcc.get(i).to_f64() <= f.get(i).to_f64() + 1e-12);
            }
        }

        #[test]
        fn conjugate_output_is_convex(f in convex_fn(41)) {
            let fc = conjugate(&f, &grid(-5.0, 5.0, 57)).unwrap();
            prop_assert!(is_convex(&fc, 1e-12));
        }

        #[test]
        fn fast_path_matches_brute_force(f in convex_fn(73)) {
            let yg = grid(-9.0, 11.0, 101);
            let (vals, arg) = conjugate_with_argmax(&f, &yg).unwrap();
            let fast = conjugate_fast(&f, &yg).unwrap();
            prop_assert_eq!(fast.path, ConjugatePath::MonotoneScan);
            for j in 0..yg.len() {
                prop_assert_eq!(fast.values.get(j).to_f64().to_bits(), vals.get(j).to_f64().to_bits());
            }
            prop_assert_eq!(fast.argmax, arg);
        }
    }
}
