//! The constant `C_0`, splines with a prescribed weighted norm, the least
//! deviating primitive, and the modulus of continuity of `D^k`.
//!
//! `C_0 = inf_a ‖P_r + a‖` is a convex one-dimensional minimization (golden
//! section). A norm level `C ∈ (0, C_0]` is realized by walking `n` upward:
//! odd-n curves `C_n(α)` increase and even-n curves decrease, the ranges
//! tile `(0, C_0]` contiguously, so the first `n` whose range contains `C`
//! wins and a bisection on `ln α` pins the level. The modulus `ω(δ)` then
//! saturates at `|P_{r−k}(0)|` past `C_0` and otherwise reads off the k-th
//! derivative of the witness at 0.

use crate::calculus::GCalculus;
use crate::error::{ConvergenceFailure, Error, Result};
use crate::oscillate::{
    oscillate_halfline_with_calc, Diagnostics, OscillationSolution, SolverOptions,
};
use crate::spline::PerfectGSpline;
use crate::util::{exp, golden_min, ln, powi, scan_max, solve_dense};
use crate::weights::{check_assumptions, weighted_norm, NormOptions, WeightFunction};
use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

/// Probe ends of the α-range used to estimate each `C_n` bracket.
const ALPHA_PROBE_LO: f64 = 1e-4;
const ALPHA_PROBE_HI: f64 = 1e4;
/// Hard walls for bracket extension.
const ALPHA_MIN: f64 = 1e-8;
const ALPHA_MAX: f64 = 1e8;
/// Knot-count cap of the norm inversion.
pub const N_MAX: usize = 24;

#[derive(Debug, Clone)]
pub struct C0Result {
    pub c0: f64,
    /// Minimizing shift: the witness is `P_r + a_star`.
    pub a_star: f64,
    /// The knotless witness packaged with its touch point.
    pub witness: OscillationSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `δ ≥ C_0`: the modulus is flat at `|P_{r−k}(0)|`.
    Saturated,
    /// `δ < C_0`: the modulus is read off the oscillating witness.
    SplineDetermined,
}

#[derive(Debug, Clone)]
pub struct ModulusResult {
    pub delta: f64,
    pub regime: Regime,
    pub omega_value: f64,
    pub witness: Option<OscillationSolution>,
    pub k: usize,
    /// Knot count of the witness (0 for the saturated plateau witness).
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    /// Weighted norm actually achieved by the witness.
    pub achieved_norm: Option<f64>,
    /// True when the `n ≤ N_MAX` cap stopped the search and the value is a
    /// bracketed estimate.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct NormSplineResult {
    pub solution: OscillationSolution,
    pub n: usize,
    pub alpha: Option<f64>,
    /// Norm achieved (equals the request within tolerance unless truncated).
    pub achieved: f64,
    pub truncated: bool,
}

/// Reusable state for norm inversions over a δ-grid: the calculus, `C_0`,
/// and warm-start caches per knot count.
pub struct ModulusContext {
    r: usize,
    f_minus: WeightFunction,
    f_plus: WeightFunction,
    calc: Arc<GCalculus>,
    opts: SolverOptions,
    c0: Option<C0Result>,
    /// Per-n cache of solved points (ln α, knots, limit, level).
    cache: Vec<Vec<(f64, Vec<f64>, f64, f64)>>,
}

impl ModulusContext {
    pub fn new(
        r: usize,
        f_minus: &WeightFunction,
        f_plus: &WeightFunction,
        g: &WeightFunction,
        opts: SolverOptions,
    ) -> Result<Self> {
        let report = check_assumptions(f_minus, f_plus, g, r)?;
        if !(report.positivity
            && report.monotonicity
            && report.f_limits_positive
            && report.a0_finite
            && report.ak_finite)
        {
            return Err(Error::AssumptionsNotVerified(format!("{report:?}")));
        }
        let calc = Arc::new(GCalculus::build(g, r, 1e-12)?);
        Ok(ModulusContext {
            r,
            f_minus: f_minus.clone(),
            f_plus: f_plus.clone(),
            calc,
            opts,
            c0: None,
            cache: Vec::new(),
        })
    }

    pub fn calc(&self) -> &Arc<GCalculus> {
        &self.calc
    }

    /// `C_0 = inf_a ‖P_r + a‖` with its minimizer and knotless witness.
    pub fn c0(&mut self) -> Result<C0Result> {
        if let Some(res) = &self.c0 {
            return Ok(res.clone());
        }
        let r = self.r;
        let calc = self.calc.clone();
        let truncation = calc.tail_cutoff(1e-13).max(16.0);
        let norm_opts = NormOptions { samples: 2048, truncation: Some(truncation) };
        let phi = |a: f64| {
            weighted_norm(|t| calc.pk(r, t) + a, Some(a), &self.f_minus, &self.f_plus, &norm_opts)
                .unwrap_or(f64::INFINITY)
        };
        let pr0 = calc.pk(r, 0.0).abs();
        let f_scale = self.f_minus.limit_at_infinity().unwrap_or(1.0)
            + self.f_plus.limit_at_infinity().unwrap_or(1.0);
        let bound = pr0 + f_scale * phi(0.0) + 1.0;
        let (a_star, c0) = golden_min(&phi, -bound, bound, 1e-11 * bound);
        // Package the witness spline (σ = +1, no knots, limit a_star).
        let witness_spline = PerfectGSpline::new_halfline(r, Vec::new(), 1, a_star, calc.clone())?;
        let side = |t: f64| {
            let v = witness_spline.value(t);
            if v >= 0.0 {
                v / self.f_plus.eval(t)
            } else {
                -v / self.f_minus.eval(t)
            }
        };
        let (touch, _) = scan_max(side, 0.0, truncation, 2048);
        let witness = OscillationSolution {
            spline: witness_spline,
            level: c0,
            oscillation_points: vec![touch],
            alpha: None,
            diagnostics: Diagnostics {
                iterations: 0,
                equilibration_residual: 0.0,
                interval_levels: vec![c0],
                alpha_residual: None,
                envelope_excess: 0.0,
            },
        };
        let res = C0Result { c0, a_star, witness };
        self.c0 = Some(res.clone());
        Ok(res)
    }

    /// Solve the half-line problem at `(n, α)`, warm-starting from the
    /// nearest cached solve and walking geometrically when far away.
    fn solve_at(&mut self, n: usize, alpha: f64) -> Result<OscillationSolution> {
        while self.cache.len() <= n {
            self.cache.push(Vec::new());
        }
        let la = ln(alpha);
        let nearest = self.cache[n]
            .iter()
            .min_by(|x, y| (x.0 - la).abs().partial_cmp(&(y.0 - la).abs()).unwrap())
            .cloned();
        let mut from = nearest.map(|(l0, knots, c, _)| (l0, knots, c));
        // Geometric walk toward α when the nearest anchor is far away in
        // ln α.
        while let Some((l0, knots, c)) = from.clone() {
            if (la - l0).abs() <= 1.25 {
                break;
            }
            let l_next = l0 + (la - l0).signum() * 1.0;
            let a_next = exp(l_next);
            let sol = oscillate_halfline_with_calc(
                self.r,
                n,
                a_next,
                &self.f_minus,
                &self.f_plus,
                &self.calc,
                Some((&knots, c)),
                &self.opts,
            )?;
            let entry = (
                l_next,
                sol.spline.knots().to_vec(),
                sol.spline.limit_value().unwrap_or(0.0),
                sol.level,
            );
            self.cache[n].push(entry.clone());
            from = Some((entry.0, entry.1, entry.2));
        }
        let warm_data = from;
        let warm = warm_data.as_ref().map(|(_, k, c)| (k.as_slice(), *c));
        let sol = oscillate_halfline_with_calc(
            self.r,
            n,
            alpha,
            &self.f_minus,
            &self.f_plus,
            &self.calc,
            warm,
            &self.opts,
        )?;
        self.cache[n].push((
            la,
            sol.spline.knots().to_vec(),
            sol.spline.limit_value().unwrap_or(0.0),
            sol.level,
        ));
        Ok(sol)
    }

    /// Range `[min C_n, max C_n]` estimated from the probe ends.
    fn bracket_for_n(&mut self, n: usize) -> Result<(f64, f64)> {
        let lo = self.solve_at(n, ALPHA_PROBE_LO)?.level;
        let hi = self.solve_at(n, ALPHA_PROBE_HI)?.level;
        Ok(if n % 2 == 1 { (lo, hi) } else { (hi, lo) })
    }

    /// Find `(n, α)` with `C_n(α) = target`; the first `n` whose bracket
    /// contains the target wins, ties resolving to the smaller `n`.
    pub fn spline_with_norm(&mut self, target: f64) -> Result<NormSplineResult> {
        let c0 = self.c0()?;
        if !(target > 0.0) {
            return Err(Error::OutOfRange("requested norm must be positive".to_string()));
        }
        if target > c0.c0 * (1.0 + 1e-9) {
            return Err(Error::OutOfRange(format!(
                "requested norm {target} exceeds C_0 = {}",
                c0.c0
            )));
        }
        if target >= c0.c0 * (1.0 - 1e-9) {
            return Ok(NormSplineResult {
                solution: c0.witness.clone(),
                n: 0,
                alpha: None,
                achieved: c0.c0,
                truncated: false,
            });
        }
        let micro = 1e-9 * c0.c0;
        let tol = (1e-9 * c0.c0).max(1e-14);
        let mut best_truncated: Option<NormSplineResult> = None;
        for n in 1..=N_MAX {
            let (c_min, c_max) = self.bracket_for_n(n)?;
            if target > c_max + micro {
                // Micro-gap between this bracket's top and the previous
                // range: extend toward the wall, else settle for the edge.
                let alpha_edge = if n % 2 == 1 { ALPHA_MAX } else { ALPHA_MIN };
                let edge = self.solve_at(n, alpha_edge)?;
                if target > edge.level + micro {
                    return Ok(NormSplineResult {
                        achieved: edge.level,
                        alpha: edge.alpha,
                        solution: edge,
                        n,
                        truncated: false,
                    });
                }
            }
            if target < c_min - micro {
                // Below this n's range: peek past the probe wall once, then
                // move on to n+1 knots.
                let alpha_edge = if n % 2 == 1 { ALPHA_MIN } else { ALPHA_MAX };
                let edge = self.solve_at(n, alpha_edge)?;
                if target < edge.level - micro {
                    if n == N_MAX {
                        best_truncated = Some(NormSplineResult {
                            achieved: edge.level,
                            alpha: edge.alpha,
                            solution: edge,
                            n,
                            truncated: true,
                        });
                    }
                    continue;
                }
            }
            // Bisection on ln α; C_n is monotone (odd n: increasing).
            let mut llo = ln(ALPHA_MIN);
            let mut lhi = ln(ALPHA_MAX);
            let mut best: Option<(f64, OscillationSolution)> = None;
            for _ in 0..80 {
                let lmid = 0.5 * (llo + lhi);
                let alpha = exp(lmid);
                let sol = self.solve_at(n, alpha)?;
                let c_mid = sol.level;
                let gap = (c_mid - target).abs();
                if best.as_ref().map(|(g, _)| gap < *g).unwrap_or(true) {
                    best = Some((gap, sol));
                }
                if gap <= tol {
                    break;
                }
                let go_up = if n % 2 == 1 { c_mid < target } else { c_mid > target };
                if go_up {
                    llo = lmid;
                } else {
                    lhi = lmid;
                }
            }
            let (gap, sol) = best.unwrap();
            if gap <= 1e-6 * c0.c0 {
                return Ok(NormSplineResult {
                    achieved: sol.level,
                    alpha: sol.alpha,
                    solution: sol,
                    n,
                    truncated: false,
                });
            }
        }
        best_truncated.ok_or_else(|| {
            Error::NoConvergence(Box::new(ConvergenceFailure {
                context: format!("norm inversion for C = {target}"),
                residual: f64::INFINITY,
                iterations: N_MAX,
                best_knots: Vec::new(),
            }))
        })
    }

    /// Modulus of continuity of `D^k` at `δ`.
    pub fn omega(&mut self, k: usize, delta: f64) -> Result<ModulusResult> {
        let r = self.r;
        if r < 2 {
            return Err(Error::PreconditionViolated(
                "the modulus formula needs r >= 2".to_string(),
            ));
        }
        if k == 0 || k >= r {
            return Err(Error::PreconditionViolated("need 1 <= k <= r-1".to_string()));
        }
        if !(delta > 0.0) {
            return Err(Error::PreconditionViolated("delta must be positive".to_string()));
        }
        // The theorem needs the liminf hypothesis on top of the standing
        // assumptions; refuse to run rather than answer silently wrong.
        let report = check_assumptions(&self.f_minus, &self.f_plus, self.calc.g(), r)?;
        if !report.all_pass() {
            return Err(Error::AssumptionsNotVerified(format!("{report:?}")));
        }
        let c0 = self.c0()?;
        if delta >= c0.c0 * (1.0 - 1e-12) {
            let omega_value = self.calc.pk(r - k, 0.0).abs();
            return Ok(ModulusResult {
                delta,
                regime: Regime::Saturated,
                omega_value,
                witness: Some(c0.witness.clone()),
                k,
                n: Some(0),
                alpha: None,
                achieved_norm: Some(c0.c0),
                truncated: false,
            });
        }
        let inv = self.spline_with_norm(delta)?;
        let omega_value = inv.solution.spline.eval(k, 0.0)?.abs();
        Ok(ModulusResult {
            delta,
            regime: Regime::SplineDetermined,
            omega_value,
            witness: Some(inv.solution),
            k,
            n: Some(inv.n),
            alpha: inv.alpha,
            achieved_norm: Some(inv.achieved),
            truncated: inv.truncated,
        })
    }
}

/// `C_0` for the given weights (one-shot convenience wrapper).
pub fn compute_c0(
    r: usize,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
) -> Result<C0Result> {
    let mut ctx = ModulusContext::new(r, f_minus, f_plus, g, SolverOptions::default())?;
    ctx.c0()
}

/// Perfect g-spline with prescribed weighted norm `C ∈ (0, C_0]`, `f₋=f₊=f`.
pub fn spline_with_norm(
    r: usize,
    c: f64,
    f: &WeightFunction,
    g: &WeightFunction,
) -> Result<NormSplineResult> {
    let mut ctx = ModulusContext::new(r, f, f, g, SolverOptions::default())?;
    ctx.spline_with_norm(c)
}

/// Modulus of continuity `ω(W^r_{f,g}, D^k, δ)` (one-shot wrapper).
pub fn omega(
    r: usize,
    k: usize,
    delta: f64,
    f: &WeightFunction,
    g: &WeightFunction,
) -> Result<ModulusResult> {
    let mut ctx = ModulusContext::new(r, f, f, g, SolverOptions::default())?;
    ctx.omega(k, delta)
}

#[derive(Debug, Clone)]
pub struct LeastDeviatingResult {
    /// The minimal weighted norm φ_{r,f}(a_end).
    pub phi: f64,
    /// Coefficients c_0..c_{r−1} of the optimal polynomial shift.
    pub coefficients: Vec<f64>,
    /// Final equioscillation references.
    pub references: Vec<f64>,
}

/// Least deviating r-th primitive of g on `[0, a_end]` with weight `f`:
/// minimize `‖P + q‖_{C[0,a_end],f}` over polynomials `q` of degree < r.
///
/// Polynomials against a positive continuous weight form a Chebyshev system,
/// so the optimum equioscillates at `r+1` points; solved by multi-point
/// exchange on the weighted residual.
pub fn least_deviating_primitive(
    r: usize,
    a_end: f64,
    f: &WeightFunction,
    g: &WeightFunction,
) -> Result<LeastDeviatingResult> {
    if r == 0 || !(a_end > 0.0) {
        return Err(Error::PreconditionViolated("need r >= 1 and a_end > 0".to_string()));
    }
    if !f.domain().contains(a_end) || !g.domain().contains(a_end) {
        return Err(Error::DomainMismatch);
    }
    // Fixed r-th primitive: the knotless boundary-anchored spline.
    let base = PerfectGSpline::new_segment(r, a_end, Vec::new(), 1, Arc::new(g.clone()))?;
    let p = |t: f64| base.value(t);

    let dim = r + 1;
    let mut refs: Vec<f64> = (0..dim)
        .map(|i| {
            let x = libm::cos(core::f64::consts::PI * i as f64 / r as f64);
            0.5 * a_end * (1.0 - x)
        })
        .collect();
    refs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut coeffs = vec![0.0; r];
    let residual = |coeffs: &[f64], t: f64| {
        let mut q = 0.0;
        for (j, c) in coeffs.iter().enumerate() {
            q += c * powi(t, j);
        }
        (p(t) + q) / f.eval(t)
    };
    let mut h_level = 0.0f64;
    for iter in 0..60 {
        // Solve for (c_0..c_{r−1}, h): (P+q)(x_i) = (−1)^i h f(x_i).
        let mut mat = vec![0.0; dim * dim];
        let mut rhs = vec![0.0; dim];
        for (i, &x) in refs.iter().enumerate() {
            for j in 0..r {
                mat[i * dim + j] = powi(x, j);
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            mat[i * dim + r] = -sign * f.eval(x);
            rhs[i] = -p(x);
        }
        let sol = solve_dense(&mut mat, &mut rhs).ok_or_else(|| {
            Error::NoConvergence(Box::new(ConvergenceFailure {
                context: "least-deviating-primitive exchange (singular references)".to_string(),
                residual: f64::INFINITY,
                iterations: iter,
                best_knots: refs.clone(),
            }))
        })?;
        coeffs = sol[..r].to_vec();
        h_level = sol[r].abs();

        // New references: alternating extrema of the weighted residual.
        let m = 4096;
        let step = a_end / m as f64;
        let mut vals = Vec::with_capacity(m + 1);
        for i in 0..=m {
            vals.push(residual(&coeffs, step * i as f64));
        }
        let mut cands: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in vals.iter().enumerate() {
            let is_max = (i == 0 || vals[i - 1] <= v) && (i == m || vals[i + 1] <= v);
            let is_min = (i == 0 || vals[i - 1] >= v) && (i == m || vals[i + 1] >= v);
            if is_max || is_min {
                let lo = if i == 0 { 0.0 } else { step * (i - 1) as f64 };
                let hi = if i == m { a_end } else { step * (i + 1) as f64 };
                let hdir = if is_max { 1.0 } else { -1.0 };
                let (t_star, v_star) =
                    crate::util::golden_max(&|t| hdir * residual(coeffs.as_slice(), t), lo, hi, step * 1e-6);
                cands.push((t_star, hdir * v_star));
            }
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Strongest representative per sign run, then the window of dim
        // alternating candidates containing the global extremum.
        let mut alt: Vec<(f64, f64)> = Vec::new();
        for (t, v) in cands {
            match alt.last_mut() {
                Some((_, lv)) if (lv.signum() - v.signum()).abs() < 0.5 => {
                    if v.abs() > lv.abs() {
                        *alt.last_mut().unwrap() = (t, v);
                    }
                }
                _ => alt.push((t, v)),
            }
        }
        if alt.len() < dim {
            break; // residual already flat at sampling resolution
        }
        let peak = alt
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.abs().partial_cmp(&b.1 .1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let start = peak.saturating_sub(dim - 1).min(alt.len() - dim);
        let window: Vec<(f64, f64)> = (start..start + dim).map(|i| alt[i]).collect();
        refs = window.iter().map(|(t, _)| *t).collect();
        let max_dev = window.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if max_dev - h_level <= 1e-12 * max_dev.max(1e-300) {
            return Ok(LeastDeviatingResult { phi: max_dev, coefficients: coeffs, references: refs });
        }
    }
    // Exchange ran out of iterations; accept if the measured norm certifies
    // near-equioscillation anyway.
    let (_, sup) = scan_max(|t| residual(&coeffs, t).abs(), 0.0, a_end, 8192);
    if sup - h_level <= 1e-7 * sup.max(1e-300) {
        Ok(LeastDeviatingResult { phi: sup, coefficients: coeffs, references: refs })
    } else {
        Err(Error::NoConvergence(Box::new(ConvergenceFailure {
            context: "least-deviating-primitive exchange".to_string(),
            residual: sup - h_level,
            iterations: 60,
            best_knots: refs,
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Domain, WeightFamily};

    fn exp_g() -> WeightFunction {
        WeightFunction::new(
            WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 },
            Domain::HalfLine,
        )
        .unwrap()
    }

    fn one() -> WeightFunction {
        WeightFunction::new(WeightFamily::Constant(1.0), Domain::HalfLine).unwrap()
    }

    #[test]
    fn c0_is_half_for_exponential_weight() {
        let f = one();
        let g = exp_g();
        for r in 1..=4usize {
            let res = compute_c0(r, &f, &f, &g).unwrap();
            assert!((res.c0 - 0.5).abs() < 1e-8, "r = {r}: {}", res.c0);
            let expected_a = if r % 2 == 0 { -0.5 } else { 0.5 };
            assert!((res.a_star - expected_a).abs() < 1e-7, "r = {r}: {}", res.a_star);
        }
    }

    #[test]
    fn c0_witness_touches_both_envelopes() {
        let f = one();
        let g = exp_g();
        let res = compute_c0(3, &f, &f, &g).unwrap();
        let w = &res.witness.spline;
        // One envelope touched at a finite point, the other in the limit.
        let up = scan_max(|t| w.value(t), 0.0, 40.0, 4096).1;
        let down = scan_max(|t| -w.value(t), 0.0, 40.0, 4096).1;
        let lim = w.limit_value().unwrap();
        let plus_touch = up.max(lim.max(0.0));
        let minus_touch = down.max((-lim).max(0.0));
        assert!((plus_touch - res.c0).abs() < 1e-7);
        assert!((minus_touch - res.c0).abs() < 1e-7);
    }

    #[test]
    fn relaxing_the_plus_envelope_cannot_raise_c0() {
        let f = one();
        let f2 = WeightFunction::new(WeightFamily::Constant(2.0), Domain::HalfLine).unwrap();
        let g = exp_g();
        let base = compute_c0(2, &f, &f, &g).unwrap().c0;
        let relaxed = compute_c0(2, &f, &f2, &g).unwrap().c0;
        assert!(relaxed <= base + 1e-10);
    }

    #[test]
    fn norm_inversion_recovers_the_r1_closed_form() {
        // C = 1/3 for r = 1 must come back as n = 1, α = 1, knot ln 3.
        let f = one();
        let g = exp_g();
        let res = spline_with_norm(1, 1.0 / 3.0, &f, &g).unwrap();
        assert_eq!(res.n, 1);
        let alpha = res.alpha.unwrap();
        assert!((alpha - 1.0).abs() < 1e-4, "alpha = {alpha}");
        assert!((res.solution.spline.knots()[0] - ln(3.0)).abs() < 1e-6);
        assert!((res.achieved - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn norm_at_c0_returns_the_knotless_witness() {
        let f = one();
        let g = exp_g();
        let c0 = compute_c0(2, &f, &f, &g).unwrap().c0;
        let res = spline_with_norm(2, c0, &f, &g).unwrap();
        assert_eq!(res.n, 0);
        assert!((res.achieved - c0).abs() < 1e-9);
    }

    #[test]
    fn requesting_more_than_c0_is_rejected() {
        let f = one();
        let g = exp_g();
        assert!(matches!(spline_with_norm(2, 0.7, &f, &g), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn omega_saturates_at_pk_zero() {
        let f = one();
        let g = exp_g();
        let res = omega(2, 1, 0.75, &f, &g).unwrap();
        assert_eq!(res.regime, Regime::Saturated);
        assert!((res.omega_value - 1.0).abs() < 1e-10);
        // Boundary inclusion: δ = C_0 still saturates.
        let c0 = compute_c0(2, &f, &f, &g).unwrap().c0;
        let res = omega(2, 1, c0, &f, &g).unwrap();
        assert_eq!(res.regime, Regime::Saturated);
        assert!((res.omega_value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn omega_below_c0_uses_the_witness_derivative() {
        let f = one();
        let g = exp_g();
        let res = omega(2, 1, 0.3, &f, &g).unwrap();
        assert_eq!(res.regime, Regime::SplineDetermined);
        let w = res.witness.as_ref().unwrap();
        assert!((res.achieved_norm.unwrap() - 0.3).abs() < 1e-6);
        // |G'(0)| sits below the saturation plateau |P_1(0)| = 1.
        assert!(res.omega_value < 1.0);
        assert!(res.omega_value > 0.0);
        assert!((w.spline.eval(1, 0.0).unwrap().abs() - res.omega_value).abs() < 1e-12);
    }

    #[test]
    fn omega_rejects_r1_and_bad_k() {
        let f = one();
        let g = exp_g();
        assert!(matches!(omega(1, 1, 0.3, &f, &g), Err(Error::PreconditionViolated(_))));
        assert!(matches!(omega(3, 3, 0.3, &f, &g), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn omega_refuses_failing_liminf() {
        // f decaying slower than g: (f − f∞)/P_r stays away from zero and
        // the modulus formula does not apply.
        let f = WeightFunction::new(
            WeightFamily::ExpDecay { base: 1.0, amplitude: 1.0, rate: 0.5 },
            Domain::HalfLine,
        )
        .unwrap();
        let g = exp_g();
        assert!(matches!(omega(2, 1, 0.3, &f, &g), Err(Error::AssumptionsNotVerified(_))));
    }

    #[test]
    fn least_deviating_primitive_r1_closed_form() {
        // φ(a) = (1 − e^{−a})/2 for f ≡ 1: the best constant centres the
        // primitive's range.
        let g = exp_g();
        let f = one();
        for a_end in [1.0, 3.0, 40.0] {
            let res = least_deviating_primitive(1, a_end, &f, &g).unwrap();
            let exact = 0.5 * (1.0 - exp(-a_end));
            assert!((res.phi - exact).abs() < 1e-9, "a_end {a_end}: {} vs {exact}", res.phi);
        }
    }

    #[test]
    fn least_deviating_primitive_scales_inversely_with_f() {
        let g = exp_g();
        let f1 = one();
        let f3 = WeightFunction::new(WeightFamily::Constant(3.0), Domain::HalfLine).unwrap();
        let a = least_deviating_primitive(2, 2.0, &f1, &g).unwrap();
        let b = least_deviating_primitive(2, 2.0, &f3, &g).unwrap();
        assert!((b.phi - a.phi / 3.0).abs() < 1e-9);
    }

    #[test]
    fn least_deviating_primitive_monotone_in_a_end() {
        let g = exp_g();
        let f = one();
        let mut prev = 0.0;
        for a_end in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let res = least_deviating_primitive(2, a_end, &f, &g).unwrap();
            assert!(res.phi >= prev - 1e-10, "a_end {a_end}");
            prev = res.phi;
        }
    }
}
