//! Independent brute-force verifiers.
//!
//! Everything here evaluates splines from scratch: the value of an order-r
//! spline with prescribed sign pattern is a single weighted integral of
//! `±g` against the kernel `(s−t)^{r−1}/(r−1)!`, accumulated by composite
//! Simpson over cells that respect the knot jumps. No caches, panel tables
//! or Newton steps are shared with the main solvers; the only common code is
//! weight evaluation and generic scalar helpers.

use crate::error::{Error, Result};
use crate::util::factorial;
use crate::weights::WeightFunction;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct BruteForceConfig {
    /// Grid points per knot dimension (>= 16).
    pub knot_grid_resolution: usize,
    /// Sample cells per unit length for evaluation grids (>= 16).
    pub sample_grid_resolution: usize,
    /// Half-line truncation point; computed from the g-tail when absent.
    pub truncation: Option<f64>,
    /// Local grid refinement passes around the best tuple.
    pub refine_passes: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        BruteForceConfig {
            knot_grid_resolution: 24,
            sample_grid_resolution: 64,
            truncation: None,
            refine_passes: 9,
        }
    }
}

impl BruteForceConfig {
    fn validate(&self) -> Result<()> {
        if self.knot_grid_resolution < 16 || self.sample_grid_resolution < 16 {
            return Err(Error::PreconditionViolated(
                "brute-force resolutions must be at least 16".to_string(),
            ));
        }
        Ok(())
    }
}

/// Domain of a brute-force oscillation search.
#[derive(Debug, Clone, Copy)]
pub enum BruteDomain {
    Segment(f64),
    /// Half-line handled by truncation plus the limit-offset envelope shift.
    TruncatedHalfLine { alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct BruteResult {
    pub knots: Vec<f64>,
    pub level: f64,
    /// Relative spread of the per-interval levels at the optimum.
    pub residual: f64,
    /// Envelope shift used for the truncated half-line (`G + C·a` undoes it).
    pub halfline_shift: Option<f64>,
}

/// Composite Simpson over one cell.
#[inline]
fn simpson_cell<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

/// Simpson integral over `[a, b]` with `cells` uniform cells.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cells: usize) -> f64 {
    let w = (b - a) / cells as f64;
    (0..cells).map(|i| simpson_cell(f, a + w * i as f64, a + w * (i + 1) as f64)).sum()
}

/// Spline with the prescribed sign pattern, all boundary derivatives
/// anchored at `end` (segment) or at infinity (tail past `end` negligible).
///
/// `G^{(j)}(t) = [j=0]·limit + (−1)^{r−j}/(r−j−1)! ∫_t^end (s−t)^{r−j−1} h(s) ds`
/// with `h = ε(−1)^i g` on the i-th knot interval; the kernel is expanded in
/// powers of `s` so one right-cumulative Simpson pass serves every point.
struct BruteSpline<'a> {
    r: usize,
    knots: Vec<f64>,
    eps: f64,
    limit: f64,
    g: &'a WeightFunction,
    /// Cell boundaries (uniform grid merged with the knots).
    bounds: Vec<f64>,
    /// `moments[j][i] = ∫_{bounds[i]}^{end} s^j h(s) ds`.
    moments: Vec<Vec<f64>>,
}

impl<'a> BruteSpline<'a> {
    fn build(
        r: usize,
        knots: &[f64],
        eps: f64,
        end: f64,
        limit: f64,
        g: &'a WeightFunction,
        cells_per_unit: usize,
    ) -> Self {
        let total_cells = ((end * cells_per_unit as f64) as usize).clamp(512, 40_000);
        let mut bounds: Vec<f64> =
            (0..=total_cells).map(|i| end * i as f64 / total_cells as f64).collect();
        bounds.extend_from_slice(knots);
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * end);
        let m = bounds.len();
        let sign_at = |s: f64| {
            let i = knots.partition_point(|&k| k <= s);
            if i % 2 == 0 {
                eps
            } else {
                -eps
            }
        };
        let mut moments = vec![vec![0.0; m]; r];
        for (j, row) in moments.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in (0..m - 1).rev() {
                let (a, b) = (bounds[i], bounds[i + 1]);
                let sg = sign_at(0.5 * (a + b));
                let f = |s: f64| crate::util::powi(s, j) * sg * g.eval(s);
                acc += simpson_cell(&f, a, b);
                row[i] = acc;
            }
        }
        BruteSpline { r, knots: knots.to_vec(), eps, limit, g, bounds, moments }
    }

    /// `∫_t^end s^j h(s) ds` for arbitrary t: cumulative table plus a local
    /// correction inside the containing cell.
    fn tail_moment(&self, j: usize, t: f64) -> f64 {
        let m = self.bounds.len();
        let i = self.bounds.partition_point(|&b| b <= t).min(m - 1);
        let base = self.moments[j][i];
        let cell_hi = self.bounds[i];
        if t >= cell_hi {
            return base;
        }
        let sign_at = |s: f64| {
            let k = self.knots.partition_point(|&k| k <= s);
            if k % 2 == 0 {
                self.eps
            } else {
                -self.eps
            }
        };
        let f = |s: f64| crate::util::powi(s, j) * sign_at(s) * self.g.eval(s);
        base + simpson_cell(&f, t, cell_hi)
    }

    fn eval(&self, deriv: usize, t: f64) -> f64 {
        let r = self.r;
        debug_assert!(deriv < r);
        let p = r - deriv;
        let parity = if p % 2 == 0 { 1.0 } else { -1.0 };
        let inv_fact = 1.0 / factorial(p - 1);
        // (s−t)^{p−1} = Σ_j C(p−1, j) s^j (−t)^{p−1−j}
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..p {
            let coef = binom * crate::util::powi(-t, p - 1 - j);
            acc += coef * self.tail_moment(j, t);
            binom *= (p - 1 - j) as f64 / (j + 1) as f64;
        }
        let mut v = parity * inv_fact * acc;
        if deriv == 0 {
            v += self.limit;
        }
        v
    }
}

fn brute_leading_sign(r: usize) -> f64 {
    if r % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Truncation point with `∫_T^∞ g < 1e−8`, probed by Simpson on doubling
/// windows.
fn truncation_point(g: &WeightFunction) -> Result<f64> {
    let mut t = 8.0f64;
    for _ in 0..40 {
        let tail = simpson(&|s| g.eval(s), t, 4.0 * t, 2048)
            + simpson(&|s| g.eval(s), 4.0 * t, 16.0 * t, 2048);
        if tail < 1e-8 {
            return Ok(t);
        }
        t *= 2.0;
    }
    Err(Error::Divergent("no truncation point with tail below 1e-8".to_string()))
}

#[derive(Clone)]
struct TupleScore {
    residual: f64,
    level: f64,
}

/// Score one knot tuple: locate the sign changes of G, require exactly n of
/// them, and measure the spread of the alternating per-interval levels.
fn score_tuple(
    r: usize,
    n: usize,
    knots: &[f64],
    end: f64,
    fm: &dyn Fn(f64) -> f64,
    fp: &dyn Fn(f64) -> f64,
    g: &WeightFunction,
    cells_per_unit: usize,
) -> Option<TupleScore> {
    let spline = BruteSpline::build(r, knots, brute_leading_sign(r), end, 0.0, g, cells_per_unit);
    let bounds = &spline.bounds;
    let vals: Vec<f64> = bounds.iter().map(|&t| spline.eval(0, t)).collect();
    // Zeros by linear interpolation between samples.
    let mut zeros = Vec::new();
    for i in 0..vals.len() - 1 {
        if vals[i] * vals[i + 1] < 0.0 {
            let frac = vals[i] / (vals[i] - vals[i + 1]);
            zeros.push(bounds[i] + frac * (bounds[i + 1] - bounds[i]));
        }
    }
    if zeros.len() != n {
        return None;
    }
    // Alternating levels per zero interval, + side first.
    let mut deltas = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let lo = if k == 0 { 0.0 } else { zeros[k - 1] };
        let hi = if k == n { end } else { zeros[k] };
        let odd = k % 2 == 0;
        let weighted = |t: f64, v: f64| {
            if odd {
                (v / fp(t)).max(0.0)
            } else {
                (-v / fm(t)).max(0.0)
            }
        };
        let mut best = 0.0f64;
        let mut best_i = None;
        for (i, (&t, &v)) in bounds.iter().zip(&vals).enumerate() {
            if t < lo || t > hi {
                continue;
            }
            let w = weighted(t, v);
            if w > best {
                best = w;
                best_i = Some(i);
            }
        }
        // Parabolic polish on the sample triple around the best point.
        if let Some(i) = best_i {
            if i > 0 && i + 1 < bounds.len() && bounds[i - 1] >= lo && bounds[i + 1] <= hi {
                let y0 = weighted(bounds[i - 1], vals[i - 1]);
                let y1 = best;
                let y2 = weighted(bounds[i + 1], vals[i + 1]);
                let denom = y0 - 2.0 * y1 + y2;
                if denom < 0.0 {
                    let peak = y1 - 0.125 * (y0 - y2) * (y0 - y2) / denom;
                    best = best.max(peak);
                }
            }
        }
        if best <= 0.0 {
            return None;
        }
        deltas.push(best);
    }
    let max = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(TupleScore {
        residual: (max - min) / min,
        level: deltas.iter().sum::<f64>() / deltas.len() as f64,
    })
}

fn sorted_tuples(grid: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    if grid.len() < n {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.iter().map(|&i| grid[i]).collect());
        // Next strictly-increasing combination.
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] + (n - k) < grid.len() {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustive grid search for the maximally oscillating spline: over all
/// sorted knot tuples, minimize the spread of the alternating envelope
/// levels; refinement passes shrink the grid around the best tuple. The
/// truncated half-line variant searches against the shifted envelopes
/// `(f₋ + a, f₊ − a)`, mirroring the limit construction.
pub fn brute_oscillation(
    r: usize,
    n: usize,
    domain: BruteDomain,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    cfg: &BruteForceConfig,
) -> Result<BruteResult> {
    cfg.validate()?;
    if n > 3 {
        return Err(Error::PreconditionViolated(
            "brute-force oscillation is limited to n <= 3".to_string(),
        ));
    }
    let (end, shift, alpha) = match domain {
        BruteDomain::Segment(a) => (a, 0.0, None),
        BruteDomain::TruncatedHalfLine { alpha } => {
            let t = match cfg.truncation {
                Some(t) => t,
                None => truncation_point(g)?,
            };
            let fp_inf = f_plus.limit_at_infinity().ok_or(Error::MissingLimit)?;
            let fm_inf = f_minus.limit_at_infinity().ok_or(Error::MissingLimit)?;
            let a = (fp_inf - alpha * fm_inf) / (1.0 + alpha);
            (t, a, Some(alpha))
        }
    };
    let fm = |t: f64| f_minus.eval(t) + shift;
    let fp = |t: f64| f_plus.eval(t) - shift;
    let cells = cfg.sample_grid_resolution;

    if n == 0 {
        let spline = BruteSpline::build(r, &[], brute_leading_sign(r), end, 0.0, g, cells);
        let mut best = 0.0f64;
        for &t in spline.bounds.iter() {
            best = best.max(spline.eval(0, t) / fp(t));
        }
        return Ok(BruteResult {
            knots: Vec::new(),
            level: best,
            residual: 0.0,
            halfline_shift: alpha.map(|_| shift),
        });
    }

    let m = cfg.knot_grid_resolution;
    let grid: Vec<f64> = (1..=m).map(|i| end * i as f64 / (m + 1) as f64).collect();
    let mut spacing = end / (m + 1) as f64;
    let mut best: Option<(Vec<f64>, TupleScore)> = None;
    for tuple in sorted_tuples(&grid, n) {
        if let Some(score) = score_tuple(r, n, &tuple, end, &fm, &fp, g, cells) {
            if best.as_ref().map(|(_, s)| score.residual < s.residual).unwrap_or(true) {
                best = Some((tuple, score));
            }
        }
    }
    for _pass in 0..cfg.refine_passes {
        let Some((center, _)) = best.clone() else { break };
        spacing *= 0.5;
        // Cartesian product of ±3 local steps per knot, sorted tuples only.
        let mut stack: Vec<Vec<f64>> = vec![Vec::new()];
        for &c in &center {
            let mut next = Vec::new();
            for partial in &stack {
                for o in -3..=3i32 {
                    let p = (c + o as f64 * spacing).clamp(1e-9 * end, end * (1.0 - 1e-9));
                    if partial.last().map(|&l| p > l).unwrap_or(true) {
                        let mut t = partial.clone();
                        t.push(p);
                        next.push(t);
                    }
                }
            }
            stack = next;
        }
        for tuple in stack {
            if tuple.len() != n {
                continue;
            }
            if let Some(score) = score_tuple(r, n, &tuple, end, &fm, &fp, g, cells) {
                if best.as_ref().map(|(_, s)| score.residual < s.residual).unwrap_or(true) {
                    best = Some((tuple, score));
                }
            }
        }
    }
    let Some((knots, score)) = best else {
        return Err(Error::NoConvergence(alloc::boxed::Box::new(
            crate::error::ConvergenceFailure {
                context: "brute-force oscillation found no admissible tuple".to_string(),
                residual: f64::INFINITY,
                iterations: 0,
                best_knots: Vec::new(),
            },
        )));
    };
    Ok(BruteResult {
        knots,
        level: score.level,
        residual: score.residual,
        halfline_shift: alpha.map(|_| shift),
    })
}

/// Certified lower bound for the modulus of continuity: maximize
/// `|x^{(k)}(0)|` over scaled perfect splines with gridded knots and an
/// optimized limit constant; feasibility (`‖x‖ ≤ δ`, `|x^{(r)}| ≤ g`) holds
/// by construction, so every candidate bounds the supremum from below.
pub fn brute_omega_lower_bound(
    r: usize,
    k: usize,
    delta: f64,
    f: &WeightFunction,
    g: &WeightFunction,
    cfg: &BruteForceConfig,
) -> Result<f64> {
    cfg.validate()?;
    if r < 2 || k == 0 || k >= r {
        return Err(Error::PreconditionViolated("need r >= 2 and 1 <= k <= r-1".to_string()));
    }
    if !(delta > 0.0) {
        return Err(Error::PreconditionViolated("delta must be positive".to_string()));
    }
    let end = match cfg.truncation {
        Some(t) => t,
        None => truncation_point(g)?,
    };
    let f_inf = f.limit_at_infinity().ok_or(Error::MissingLimit)?;
    let cells = cfg.sample_grid_resolution;
    let mut bound = 0.0f64;

    let knot_span = 0.8 * end;
    let m = cfg.knot_grid_resolution.min(16);
    let grid: Vec<f64> = (1..=m).map(|i| knot_span * i as f64 / m as f64).collect();
    for n in 0..=2usize {
        for tuple in sorted_tuples(&grid, n) {
            for eps in [1.0f64, -1.0] {
                // Tail-anchored spline with zero limit; adding a constant c
                // changes no derivative, so the best c can be optimized per
                // sign pattern.
                let spline = BruteSpline::build(r, &tuple, eps, end, 0.0, g, cells);
                let dk0 = spline.eval(k, 0.0).abs();
                if dk0 <= bound * (1.0 + 1e-12) * 1e-3 {
                    continue;
                }
                let values: Vec<f64> = spline.bounds.iter().map(|&t| spline.eval(0, t)).collect();
                let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let norm_at = |c: f64| {
                    let mut sup: f64 = c.abs() / f_inf;
                    for (&t, &v) in spline.bounds.iter().zip(&values) {
                        sup = sup.max((v + c).abs() / f.eval(t));
                    }
                    sup
                };
                let (c_star, _) = crate::util::golden_min(
                    &|c| norm_at(c),
                    -2.0 * scale - 1.0,
                    2.0 * scale + 1.0,
                    1e-12 * (scale + 1.0),
                );
                // Refine the sup so the norm is never under-estimated: an
                // under-estimate would overstate the admissible scaling.
                let h = |t: f64| (spline.eval(0, t) + c_star).abs() / f.eval(t);
                let (_, polished) = crate::util::scan_max(h, 0.0, end, 4096);
                let norm = norm_at(c_star).max(polished).max(1e-300);
                let theta = (delta / norm).min(1.0);
                bound = bound.max(theta * dk0);
            }
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{exp, ln};
    use crate::weights::{Domain, WeightFamily};

    fn exp_g(domain: Domain) -> WeightFunction {
        WeightFunction::new(WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 }, domain)
            .unwrap()
    }

    fn one(domain: Domain) -> WeightFunction {
        WeightFunction::new(WeightFamily::Constant(1.0), domain).unwrap()
    }

    #[test]
    fn brute_segment_r1_matches_closed_form() {
        let end = ln(4.0);
        let f = one(Domain::Segment(end));
        let g = exp_g(Domain::Segment(end));
        let res = brute_oscillation(
            1,
            1,
            BruteDomain::Segment(end),
            &f,
            &f,
            &g,
            &BruteForceConfig::default(),
        )
        .unwrap();
        let c_exact = (1.0 - exp(-end)) / 3.0;
        assert!((res.level - c_exact).abs() < 1e-3, "{} vs {c_exact}", res.level);
        assert!((res.knots[0] - ln(2.0)).abs() < 2e-2);
    }

    #[test]
    fn brute_halfline_r1_matches_closed_form() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let res = brute_oscillation(
            1,
            1,
            BruteDomain::TruncatedHalfLine { alpha: 1.0 },
            &f,
            &f,
            &g,
            &BruteForceConfig::default(),
        )
        .unwrap();
        assert!((res.level - 1.0 / 3.0).abs() < 1e-3, "{}", res.level);
        assert!((res.knots[0] - ln(3.0)).abs() < 5e-2);
    }

    #[test]
    fn refinement_tightens_the_optimum() {
        let end = 4.0;
        let f = one(Domain::Segment(end));
        let g = exp_g(Domain::Segment(end));
        let coarse = BruteForceConfig { refine_passes: 0, ..Default::default() };
        let fine = BruteForceConfig { refine_passes: 9, ..Default::default() };
        let a = brute_oscillation(2, 1, BruteDomain::Segment(end), &f, &f, &g, &coarse).unwrap();
        let b = brute_oscillation(2, 1, BruteDomain::Segment(end), &f, &f, &g, &fine).unwrap();
        assert!(b.residual <= a.residual);
        let step = end / 25.0;
        assert!((a.knots[0] - b.knots[0]).abs() <= step);
    }

    #[test]
    fn omega_lower_bound_saturates_to_pk() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        // δ above C_0 = 1/2: the centred knotless family reaches |P_1(0)| = 1.
        let b = brute_omega_lower_bound(2, 1, 0.75, &f, &g, &BruteForceConfig::default()).unwrap();
        assert!((b - 1.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn omega_lower_bound_respects_the_sup() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let omega = crate::modulus::omega(2, 1, 0.3, &f, &g).unwrap().omega_value;
        let b = brute_omega_lower_bound(2, 1, 0.3, &f, &g, &BruteForceConfig::default()).unwrap();
        assert!(b <= omega + 1e-9, "bound {b} vs omega {omega}");
        assert!(b > 0.2 * omega);
    }
}
