//! Maximally oscillating perfect g-splines.
//!
//! Segment problem: among boundary-anchored splines with `n` sign changes,
//! find the one whose per-interval weighted extrema against the alternating
//! envelopes `(+f₊, −f₋)` all equal a common level `C`. Driven by a damped
//! multiplicative reassignment of the zero-interval lengths, finished by
//! Newton on the zero vector.
//!
//! Half-line problem: the spline with `n` knots, `n+1` alternating envelope
//! touches and the boundary ratio `(Cf₊(∞) − G(∞))/(Cf₋(∞) + G(∞)) = α`.
//! Unknowns are the knots plus the limit value; the initial guess comes from
//! a truncated segment with the envelopes shifted by the limit offset
//! `a = (f₊(∞) − α·f₋(∞))/(1+α)`, mirroring the A → ∞ construction.

use crate::calculus::GCalculus;
use crate::error::{ConvergenceFailure, Error, Result};
use crate::spline::PerfectGSpline;
use crate::util::{golden_max, powf, solve_dense};
use crate::weights::{check_assumptions, Domain, WeightFamily, WeightFunction};
use crate::zerofit::{self, ZeroFitProblem};
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

/// Tolerances and budgets for the equioscillation solvers.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target relative spread of the interval levels.
    pub equil_tol: f64,
    /// Reassignment iterations before switching to Newton.
    pub max_outer: usize,
    /// Newton iterations.
    pub max_newton: usize,
    /// Residual spread below which the reassignment hands over to Newton.
    pub newton_handover: f64,
    /// Samples per region when extracting weighted extrema.
    pub region_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            equil_tol: 1e-8,
            max_outer: 60,
            max_newton: 80,
            newton_handover: 1e-3,
            region_samples: 96,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub iterations: usize,
    /// `max_k (δ_k − δ_min)/δ_min` at the accepted iterate.
    pub equilibration_residual: f64,
    /// The per-interval levels δ_1..δ_{n+1}.
    pub interval_levels: Vec<f64>,
    /// Relative residual of the α-condition (half-line only).
    pub alpha_residual: Option<f64>,
    /// Positive part of the worst envelope violation, relative to C.
    pub envelope_excess: f64,
}

/// A maximally oscillating spline together with its envelope level.
#[derive(Debug, Clone)]
pub struct OscillationSolution {
    pub spline: PerfectGSpline,
    /// Envelope level C.
    pub level: f64,
    /// Touch points s_1 < … < s_{n+1} (odd index touches +C·f₊).
    pub oscillation_points: Vec<f64>,
    /// Boundary ratio for half-line solutions.
    pub alpha: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Leading sign making the first touch land on `+C·f₊`.
pub(crate) fn leading_sign_for(r: usize) -> i8 {
    if r % 2 == 0 {
        1
    } else {
        -1
    }
}

fn spread(levels: &[f64]) -> f64 {
    let max = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max - min) / min
    }
}

fn mean(levels: &[f64]) -> f64 {
    levels.iter().sum::<f64>() / levels.len() as f64
}

/// Weighted candidate value for a touch of the given 1-based parity.
#[inline]
fn side_value(parity_odd: bool, g_val: f64, fm: f64, fp: f64) -> f64 {
    if parity_odd {
        g_val / fp
    } else {
        -g_val / fm
    }
}

// ---------------------------------------------------------------------------
// Segment problem
// ---------------------------------------------------------------------------

/// Per-interval levels of a zero-parametrized segment iterate: region `k`
/// spans `(z_{k−1}, z_k)` and is measured against `f₊` for odd `k`, `f₋`
/// otherwise. Returns (levels, argmax positions).
fn segment_levels(
    spline: &PerfectGSpline,
    zeros: &[f64],
    end: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    samples: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = zeros.len();
    let mut deltas = Vec::with_capacity(n + 1);
    let mut args = Vec::with_capacity(n + 1);
    for k in 1..=n + 1 {
        let lo = if k == 1 { 0.0 } else { zeros[k - 2] };
        let hi = if k == n + 1 { end } else { zeros[k - 1] };
        let odd = k % 2 == 1;
        let h = |t: f64| {
            let v = spline.value(t);
            side_value(odd, v, f_minus.eval(t), f_plus.eval(t)).max(0.0)
        };
        let (t_star, v) = crate::util::scan_max(h, lo, hi, samples);
        deltas.push(v);
        args.push(t_star);
    }
    (deltas, args)
}

fn segment_domain_end(w: &WeightFunction) -> Option<f64> {
    match w.domain() {
        Domain::Segment(a) => Some(a),
        Domain::HalfLine => None,
    }
}

/// Cumulative-mass quantiles of g: good initial zeros. The touch pattern
/// spends one unit of variation before the first zero and two per interior
/// interval, so the zeros sit at odd (2k−1)/(2n+1) mass fractions.
fn mass_quantile_zeros(g: &WeightFunction, end: f64, n: usize) -> Vec<f64> {
    let total = crate::quad::integrate(&|t| g.eval(t), 0.0, end, 1e-12);
    let mass = |t: f64| crate::quad::integrate(&|s| g.eval(s), 0.0, t, 1e-12);
    (1..=n)
        .map(|k| {
            let target = total * (2.0 * k as f64 - 1.0) / (2.0 * n as f64 + 1.0);
            let f = |t: f64| mass(t) - target;
            crate::util::bisect_root(&f, 0.0, end, -target, end * 1e-12)
        })
        .collect()
}

struct SegmentIterate {
    knots: Vec<f64>,
    deltas: Vec<f64>,
    args: Vec<f64>,
}

fn segment_iterate(
    r: usize,
    end: f64,
    zeros: &[f64],
    warm_knots: &[f64],
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &Arc<WeightFunction>,
    samples: usize,
) -> Result<SegmentIterate> {
    let problem = ZeroFitProblem::new(r, end, zeros.to_vec());
    let fit = zerofit::fit_knots_from(&problem, g, warm_knots.to_vec())?;
    let (deltas, args) = segment_levels(&fit.spline, zeros, end, f_minus, f_plus, samples);
    Ok(SegmentIterate { knots: fit.spline.knots().to_vec(), deltas, args })
}

/// Maximally oscillating spline on `[0, end]` with exactly `n` knots and
/// `n+1` alternating envelope touches.
pub fn oscillate_segment(
    r: usize,
    n: usize,
    end: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    opts: &SolverOptions,
) -> Result<OscillationSolution> {
    let (Some(a1), Some(a2), Some(a3)) =
        (segment_domain_end(f_minus), segment_domain_end(f_plus), segment_domain_end(g))
    else {
        return Err(Error::DomainMismatch);
    };
    let scale_end = end.max(1.0);
    if (a1 - end).abs() > 1e-9 * scale_end
        || (a2 - end).abs() > 1e-9 * scale_end
        || (a3 - end).abs() > 1e-9 * scale_end
    {
        return Err(Error::DomainMismatch);
    }
    if r == 0 {
        return Err(Error::PreconditionViolated("order r must be >= 1".to_string()));
    }
    let g = Arc::new(g.clone());

    if n == 0 {
        // No free parameters: the knotless anchored spline, its level being
        // its own weighted norm.
        let spline = PerfectGSpline::new_segment(r, end, Vec::new(), leading_sign_for(r), g)?;
        let h = |t: f64| side_value(true, spline.value(t), f_minus.eval(t), f_plus.eval(t)).max(0.0);
        let (t_star, level) = crate::util::scan_max(h, 0.0, end, 2048);
        return Ok(OscillationSolution {
            spline,
            level,
            oscillation_points: vec![t_star],
            alpha: None,
            diagnostics: Diagnostics {
                iterations: 0,
                equilibration_residual: 0.0,
                interval_levels: vec![level],
                alpha_residual: None,
                envelope_excess: 0.0,
            },
        });
    }

    let samples = opts.region_samples;
    let mut zeros = mass_quantile_zeros(&g, end, n);
    let mut knots = Vec::new();
    let mut it = segment_iterate(r, end, &zeros, &knots, f_minus, f_plus, &g, samples)?;
    knots = it.knots.clone();
    let mut iterations = 0usize;

    // Stage 1: damped multiplicative reassignment of the interval lengths.
    for _ in 0..opts.max_outer {
        iterations += 1;
        if spread(&it.deltas) < opts.newton_handover {
            break;
        }
        let target = mean(&it.deltas).max(1e-300);
        let mut lengths: Vec<f64> = Vec::with_capacity(n + 1);
        let mut prev = 0.0;
        for &z in zeros.iter() {
            lengths.push(z - prev);
            prev = z;
        }
        lengths.push(end - prev);
        for (len, d) in lengths.iter_mut().zip(&it.deltas) {
            *len *= powf(target / d.max(1e-300), 0.5);
        }
        let total: f64 = lengths.iter().sum();
        let min_gap = 1e-7 * end;
        let mut acc = 0.0;
        for k in 0..n {
            acc += lengths[k] * end / total;
            zeros[k] = acc.clamp(min_gap * (k + 1) as f64, end - min_gap * (n - k) as f64);
        }
        it = segment_iterate(r, end, &zeros, &knots, f_minus, f_plus, &g, samples)?;
        knots = it.knots.clone();
    }

    // Stage 2: Newton on the zero vector, residuals δ_k − δ_{n+1}.
    let mut best_spread = spread(&it.deltas);
    let mut best = (zeros, it);
    for _ in 0..opts.max_newton {
        if best_spread < opts.equil_tol {
            break;
        }
        iterations += 1;
        let (z0, base) = (&best.0, &best.1);
        let c_ref = mean(&base.deltas).max(1e-300);
        let f0: Vec<f64> = (0..n).map(|k| (base.deltas[k] - base.deltas[n]) / c_ref).collect();
        let mut jac = vec![0.0; n * n];
        let mut ok = true;
        for j in 0..n {
            let gap_r = if j + 1 < n { z0[j + 1] - z0[j] } else { end - z0[j] };
            let h = (1e-6 * end).min(0.3 * gap_r).max(1e-13);
            let mut zp = z0.clone();
            zp[j] += h;
            match segment_iterate(r, end, &zp, &base.knots, f_minus, f_plus, &g, samples) {
                Ok(itp) => {
                    for i in 0..n {
                        let fp = (itp.deltas[i] - itp.deltas[n]) / c_ref;
                        jac[i * n + j] = (fp - f0[i]) / h;
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let mut rhs: Vec<f64> = f0.iter().map(|x| -x).collect();
        let Some(dir) = solve_dense(&mut jac, &mut rhs) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = best.0.iter().zip(&dir).map(|(z, d)| z + lambda * d).collect();
            let sorted = trial.windows(2).all(|w| w[1] > w[0])
                && trial.first().copied().unwrap_or(1.0) > 0.0
                && trial.last().copied().unwrap_or(0.0) < end;
            if sorted {
                if let Ok(itt) =
                    segment_iterate(r, end, &trial, &best.1.knots, f_minus, f_plus, &g, samples)
                {
                    let s = spread(&itt.deltas);
                    if s < best_spread {
                        best = (trial, itt);
                        best_spread = s;
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let (zeros, it) = best;
    let level = mean(&it.deltas);
    let problem = ZeroFitProblem::new(r, end, zeros);
    let fit = zerofit::fit_knots_from(&problem, &g, it.knots.clone())?;
    let spline = fit.spline;
    let excess = envelope_excess(&spline, f_minus, f_plus, level, 0.0, end, None);
    let solution = OscillationSolution {
        spline,
        level,
        oscillation_points: it.args,
        alpha: None,
        diagnostics: Diagnostics {
            iterations,
            equilibration_residual: best_spread,
            interval_levels: it.deltas,
            alpha_residual: None,
            envelope_excess: excess,
        },
    };
    if best_spread < opts.equil_tol {
        Ok(solution)
    } else {
        Err(Error::NoConvergence(Box::new(ConvergenceFailure {
            context: format!("segment equioscillation (r={r}, n={n}, A={end})"),
            residual: best_spread,
            iterations,
            best_knots: solution.spline.knots().to_vec(),
        })))
    }
}

/// Worst positive violation of `−C·f₋ ≤ G ≤ C·f₊`, relative to `C`.
fn envelope_excess(
    spline: &PerfectGSpline,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    level: f64,
    lo: f64,
    hi: f64,
    limit: Option<f64>,
) -> f64 {
    let m = 2048;
    let mut worst = 0.0f64;
    for i in 0..=m {
        let t = lo + (hi - lo) * i as f64 / m as f64;
        let v = spline.value(t);
        let up = v / (level * f_plus.eval(t)) - 1.0;
        let dn = -v / (level * f_minus.eval(t)) - 1.0;
        worst = worst.max(up).max(dn);
    }
    if let Some(c) = limit {
        if let (Some(fm), Some(fp)) = (f_minus.limit_at_infinity(), f_plus.limit_at_infinity()) {
            worst = worst.max(c / (level * fp) - 1.0).max(-c / (level * fm) - 1.0);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Half-line problem
// ---------------------------------------------------------------------------

/// Shift a weight by a constant and move it onto a new domain; used for the
/// envelope offsets `f₊ − a` and `f₋ + a` of the truncated construction.
fn shift_weight(w: &WeightFunction, delta: f64, domain: Domain) -> Result<WeightFunction> {
    let family = match w.family() {
        WeightFamily::Constant(c) => WeightFamily::Constant(c + delta),
        WeightFamily::ExpDecay { base, amplitude, rate } => {
            WeightFamily::ExpDecay { base: base + delta, amplitude: *amplitude, rate: *rate }
        }
        WeightFamily::PowerDecay { base, amplitude, exponent } => {
            WeightFamily::PowerDecay { base: base + delta, amplitude: *amplitude, exponent: *exponent }
        }
        WeightFamily::Tabulated(_) => {
            return Err(Error::PreconditionViolated(
                "tabulated envelopes cannot be shift-truncated; use closed-form envelopes".to_string(),
            ))
        }
    };
    WeightFunction::new(family, domain)
}

fn on_domain(w: &WeightFunction, domain: Domain) -> Result<WeightFunction> {
    match w.family() {
        WeightFamily::Tabulated(_) => {
            // Rebuild from the family data on the new domain.
            Err(Error::PreconditionViolated(
                "tabulated g cannot be re-domained for the truncated construction".to_string(),
            ))
        }
        _ => shift_weight(w, 0.0, domain),
    }
}

/// Alternating touch levels of a half-line iterate.
///
/// Scans the weighted functions `G/f₊` and `−G/f₋` on `[0, t_hi]`, collects
/// their local maxima plus the boundary and limit candidates, and extracts
/// the alternating sequence starting on the `+` side, keeping the strongest
/// representative when one side produces consecutive candidates. Returns
/// `None` when the iterate does not carry `n+1` alternating touches.
fn halfline_levels(
    spline: &PerfectGSpline,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    t_hi: f64,
    c: f64,
    n: usize,
    samples_per_region: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    #[derive(Clone, Copy)]
    struct Cand {
        t: f64,
        odd: bool,
        v: f64,
    }
    let m = (samples_per_region * (n + 2)).max(512);
    let phi = |odd: bool, t: f64| side_value(odd, spline.value(t), f_minus.eval(t), f_plus.eval(t));
    let mut cands: Vec<Cand> = Vec::new();
    for odd in [true, false] {
        let h = |t: f64| phi(odd, t);
        let step = t_hi / m as f64;
        let mut vals = Vec::with_capacity(m + 1);
        for i in 0..=m {
            vals.push(h(step * i as f64));
        }
        for (i, &v) in vals.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            // The right boundary is a truncation artifact: the tail's
            // behaviour at infinity enters through the limit candidate.
            if i == m {
                continue;
            }
            let left_ok = i == 0 || vals[i - 1] <= v;
            let right_ok = vals[i + 1] <= v;
            if left_ok && right_ok {
                let lo = if i == 0 { 0.0 } else { step * (i - 1) as f64 };
                let hi = if i == m { t_hi } else { step * (i + 1) as f64 };
                let (t_star, v_star) = golden_max(&h, lo, hi, step * 1e-9);
                let (t_star, v_star) = if v_star >= v { (t_star, v_star) } else { (step * i as f64, v) };
                cands.push(Cand { t: t_star, odd, v: v_star });
            }
        }
    }
    cands.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    // Alternation starting on +: keep the stronger of consecutive same-side
    // candidates.
    let mut picked: Vec<Cand> = Vec::new();
    for cand in cands {
        match picked.last_mut() {
            Some(last) if last.odd == cand.odd => {
                if cand.v > last.v {
                    *last = cand;
                }
            }
            _ => {
                if picked.is_empty() && !cand.odd {
                    continue; // the sequence must start on the + side
                }
                picked.push(cand);
            }
        }
    }
    // The limit point can carry or reinforce the last touch; its side follows
    // from the sign of c.
    let lim_side_odd = c >= 0.0;
    let lim_v = side_value(
        lim_side_odd,
        c,
        f_minus.limit_at_infinity().unwrap_or(1.0),
        f_plus.limit_at_infinity().unwrap_or(1.0),
    );
    if picked.len() == n {
        let expected_odd = (n + 1) % 2 == 1;
        if lim_side_odd == expected_odd && lim_v > 0.0 {
            picked.push(Cand { t: t_hi, odd: expected_odd, v: lim_v });
        }
    } else if picked.len() == n + 1 {
        let last = picked.last_mut().unwrap();
        if last.odd == lim_side_odd && lim_v > last.v {
            last.v = lim_v;
        }
    }
    if picked.len() != n + 1 {
        return None;
    }
    Some((picked.iter().map(|c| c.v).collect(), picked.iter().map(|c| c.t).collect()))
}

struct HalfLineSystem<'a> {
    r: usize,
    n: usize,
    f_minus: &'a WeightFunction,
    f_plus: &'a WeightFunction,
    calc: Arc<GCalculus>,
    t_hi: f64,
    samples: usize,
    /// (f₊(∞) − α·f₋(∞))/(1+α): G(∞) = C·u_α at the solution.
    u_alpha: f64,
    f_bar: f64,
}

struct HalfLineEval {
    residuals: Vec<f64>,
    deltas: Vec<f64>,
    args: Vec<f64>,
    level: f64,
    spline: PerfectGSpline,
}

impl HalfLineSystem<'_> {
    /// x = (t_1..t_n, c) ↦ residuals (n touch-level gaps + the α-equation).
    fn eval(&self, x: &[f64]) -> Option<HalfLineEval> {
        let n = self.n;
        let knots = x[..n].to_vec();
        let c = x[n];
        if knots.windows(2).any(|w| w[1] <= w[0]) || knots.first().copied().unwrap_or(1.0) <= 0.0 {
            return None;
        }
        let spline =
            PerfectGSpline::new_halfline(self.r, knots, leading_sign_for(self.r), c, self.calc.clone())
                .ok()?;
        let (deltas, args) =
            halfline_levels(&spline, self.f_minus, self.f_plus, self.t_hi, c, n, self.samples)?;
        let level = mean(&deltas);
        if !(level > 0.0) {
            return None;
        }
        let mut residuals: Vec<f64> = (0..n).map(|k| (deltas[k] - deltas[n]) / level).collect();
        residuals.push((c - level * self.u_alpha) / (level * self.f_bar));
        Some(HalfLineEval { residuals, deltas, args, level, spline })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Half-line solve with explicit calculus and an optional warm start
/// `(knots, limit)`. [`oscillate_halfline`] wraps this with the defaults.
pub fn oscillate_halfline_with_calc(
    r: usize,
    n: usize,
    alpha: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    calc: &Arc<GCalculus>,
    warm: Option<(&[f64], f64)>,
    opts: &SolverOptions,
) -> Result<OscillationSolution> {
    if n == 0 {
        return Err(Error::PreconditionViolated("half-line oscillation needs n >= 1".to_string()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::PreconditionViolated("alpha must be positive".to_string()));
    }
    let report = check_assumptions(f_minus, f_plus, calc.g(), r)?;
    if !(report.positivity
        && report.monotonicity
        && report.f_limits_positive
        && report.a0_finite
        && report.ak_finite)
    {
        return Err(Error::AssumptionsNotVerified(format!("{report:?}")));
    }
    let fp_inf = f_plus.limit_at_infinity().unwrap();
    let fm_inf = f_minus.limit_at_infinity().unwrap();
    let u_alpha = (fp_inf - alpha * fm_inf) / (1.0 + alpha);
    let f_bar = 0.5 * (fp_inf + fm_inf);

    // Initial iterate: warm start or the truncated segment construction.
    let (mut x, mut t_hi) = match warm {
        Some((knots, c)) if knots.len() == n => {
            let mut x: Vec<f64> = knots.to_vec();
            x.push(c);
            let t_hi = calc.tail_cutoff(1e-12).max(knots[n - 1] * 1.5 + 4.0);
            (x, t_hi)
        }
        _ => truncated_guess(r, n, alpha, u_alpha, f_minus, f_plus, calc, opts)?,
    };

    let mut iterations = 0usize;
    let mut best: Option<(Vec<f64>, HalfLineEval, f64)> = None;
    for _attempt in 0..3 {
        let system = HalfLineSystem {
            r,
            n,
            f_minus,
            f_plus,
            calc: calc.clone(),
            t_hi,
            samples: opts.region_samples,
            u_alpha,
            f_bar,
        };
        match newton_halfline(&system, x.clone(), opts, &mut iterations) {
            Some((xs, eval, resid)) => {
                let crowded = xs[n - 1] > 0.7 * t_hi
                    || eval.args.iter().take(n).any(|&a| a > 0.8 * t_hi);
                let better = best.as_ref().map(|b| resid < b.2).unwrap_or(true);
                let stop = resid < opts.equil_tol && !crowded;
                if better {
                    best = Some((xs.clone(), eval, resid));
                }
                if stop {
                    break;
                }
                x = xs;
                t_hi *= 2.0;
            }
            None => {
                t_hi *= 2.0;
            }
        }
    }

    let Some((xs, eval, resid)) = best else {
        return Err(Error::NoConvergence(Box::new(ConvergenceFailure {
            context: format!("half-line equioscillation (r={r}, n={n}, alpha={alpha})"),
            residual: f64::INFINITY,
            iterations,
            best_knots: x[..n].to_vec(),
        })));
    };
    let c = xs[n];
    let excess = envelope_excess(&eval.spline, f_minus, f_plus, eval.level, 0.0, t_hi, Some(c));
    let alpha_residual = {
        let level = eval.level;
        ((level * fp_inf - c) - alpha * (level * fm_inf + c)).abs()
            / (level * (1.0 + alpha) * f_bar)
    };
    let solution = OscillationSolution {
        spline: eval.spline,
        level: eval.level,
        oscillation_points: eval.args,
        alpha: Some(alpha),
        diagnostics: Diagnostics {
            iterations,
            equilibration_residual: spread(&eval.deltas),
            interval_levels: eval.deltas,
            alpha_residual: Some(alpha_residual),
            envelope_excess: excess,
        },
    };
    if resid < opts.equil_tol {
        Ok(solution)
    } else {
        Err(Error::NoConvergence(Box::new(ConvergenceFailure {
            context: format!("half-line equioscillation (r={r}, n={n}, alpha={alpha})"),
            residual: resid,
            iterations,
            best_knots: solution.spline.knots().to_vec(),
        })))
    }
}

/// Damped Newton on (knots, limit). Returns the best iterate reached and its
/// residual norm; `None` when even the start is structurally invalid.
fn newton_halfline(
    system: &HalfLineSystem<'_>,
    mut x: Vec<f64>,
    opts: &SolverOptions,
    iterations: &mut usize,
) -> Option<(Vec<f64>, HalfLineEval, f64)> {
    let n = system.n;
    let dim = n + 1;
    let mut eval = system.eval(&x)?;
    let mut fnorm = max_abs(&eval.residuals);
    let mut stalls = 0usize;
    for _ in 0..opts.max_newton {
        if fnorm < 0.2 * opts.equil_tol {
            break;
        }
        *iterations += 1;
        let mut jac = vec![0.0; dim * dim];
        for j in 0..dim {
            let h = if j < n {
                let gap_r = if j + 1 < n { x[j + 1] - x[j] } else { system.t_hi - x[j] };
                (1e-6 * x[n - 1].max(1.0)).min(0.3 * gap_r).max(1e-12)
            } else {
                1e-6 * eval.level.max(1e-6)
            };
            let mut xp = x.clone();
            xp[j] += h;
            let Some(ep) = system.eval(&xp) else { return Some((x, eval, fnorm)) };
            for i in 0..dim {
                jac[i * dim + j] = (ep.residuals[i] - eval.residuals[i]) / h;
            }
        }
        let mut rhs: Vec<f64> = eval.residuals.iter().map(|v| -v).collect();
        let dir = solve_dense(&mut jac, &mut rhs)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..22 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + lambda * d).collect();
            if let Some(et) = system.eval(&trial) {
                let ft = max_abs(&et.residuals);
                if ft < (1.0 - 1e-4 * lambda) * fnorm {
                    x = trial;
                    eval = et;
                    fnorm = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Some((x, eval, fnorm))
}

/// Initial (knots, limit) from the segment problem on `[0, T]` with the
/// envelopes shifted by the limit offset.
fn truncated_guess(
    r: usize,
    n: usize,
    alpha: f64,
    u_alpha: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    calc: &Arc<GCalculus>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64)> {
    let t_cut = calc.tail_cutoff(1e-10).max(8.0);
    let mut t = t_cut * 1.25;
    let mut last_err: Option<Error> = None;
    for _ in 0..6 {
        match truncated_solution(r, n, alpha, u_alpha, f_minus, f_plus, calc, t, opts) {
            Ok(seg) => {
                let last_knot = seg.spline.knots().last().copied().unwrap_or(0.0);
                if last_knot < 0.6 * t {
                    let mut x = seg.spline.knots().to_vec();
                    x.push(seg.level * u_alpha);
                    let t_hi = calc.tail_cutoff(1e-12).max(last_knot * 1.5 + 4.0);
                    return Ok((x, t_hi));
                }
            }
            Err(e) => last_err = Some(e),
        }
        t *= 2.0;
    }
    Err(last_err.unwrap_or_else(|| {
        Error::NoConvergence(Box::new(ConvergenceFailure {
            context: format!("truncated initialization (r={r}, n={n}, alpha={alpha})"),
            residual: f64::INFINITY,
            iterations: 0,
            best_knots: Vec::new(),
        }))
    }))
}

/// Pure-truncation approximation of the half-line problem: the segment
/// problem on `[0, end]` against `(f₋ + a, f₊ − a)`. This is the independent
/// continuation path used for well-definedness checks; its level converges
/// to the half-line level as `end → ∞`.
pub fn truncated_solution(
    r: usize,
    n: usize,
    alpha: f64,
    u_alpha: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    calc: &Arc<GCalculus>,
    end: f64,
    opts: &SolverOptions,
) -> Result<OscillationSolution> {
    let dom = Domain::Segment(end);
    let fp_shift = shift_weight(f_plus, -u_alpha, dom)?;
    let fm_shift = shift_weight(f_minus, u_alpha, dom)?;
    let g_seg = on_domain(calc.g(), dom)?;
    let mut seg = oscillate_segment(r, n, end, &fm_shift, &fp_shift, &g_seg, opts)?;
    seg.alpha = Some(alpha);
    Ok(seg)
}

/// Maximally oscillating half-line spline for boundary ratio `alpha`.
pub fn oscillate_halfline(
    r: usize,
    n: usize,
    alpha: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    opts: &SolverOptions,
) -> Result<OscillationSolution> {
    let calc = Arc::new(GCalculus::build(g, r, 1e-12)?);
    oscillate_halfline_with_calc(r, n, alpha, f_minus, f_plus, &calc, None, opts)
}

/// `C_n(α)`: the weighted norm of the maximally oscillating half-line spline.
pub fn compute_cn(
    r: usize,
    n: usize,
    alpha: f64,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    opts: &SolverOptions,
) -> Result<f64> {
    Ok(oscillate_halfline(r, n, alpha, f_minus, f_plus, g, opts)?.level)
}

#[derive(Debug, Clone)]
pub struct CnPoint {
    pub alpha: f64,
    pub c: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CnCurve {
    pub points: Vec<CnPoint>,
    /// Monotonicity violations beyond tolerance (solver-quality warnings).
    pub warnings: Vec<String>,
}

/// Evaluate `α ↦ C_n(α)` along a grid, warm-starting consecutive solves.
///
/// Per-point failures are recorded in the table rather than aborting the
/// sweep. Odd `n` must give a non-decreasing curve and even `n` a
/// non-increasing one; violations beyond `1e−7` relative are flagged.
pub fn cn_curve(
    r: usize,
    n: usize,
    alpha_grid: &[f64],
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    opts: &SolverOptions,
    warm_start: bool,
) -> Result<CnCurve> {
    if alpha_grid.is_empty() || alpha_grid.windows(2).any(|w| w[1] <= w[0]) || alpha_grid[0] <= 0.0 {
        return Err(Error::PreconditionViolated(
            "alpha grid must be strictly increasing and positive".to_string(),
        ));
    }
    let calc = Arc::new(GCalculus::build(g, r, 1e-12)?);
    let mut points = Vec::with_capacity(alpha_grid.len());
    let mut warnings = Vec::new();
    let mut warm: Option<(Vec<f64>, f64)> = None;
    for &alpha in alpha_grid {
        let warm_ref =
            if warm_start { warm.as_ref().map(|(k, c)| (k.as_slice(), *c)) } else { None };
        match oscillate_halfline_with_calc(r, n, alpha, f_minus, f_plus, &calc, warm_ref, opts) {
            Ok(sol) => {
                warm = Some((sol.spline.knots().to_vec(), sol.spline.limit_value().unwrap_or(0.0)));
                points.push(CnPoint { alpha, c: Some(sol.level), message: None });
            }
            Err(e) => {
                points.push(CnPoint { alpha, c: None, message: Some(format!("{e}")) });
            }
        }
    }
    let values: Vec<(f64, f64)> = points.iter().filter_map(|p| p.c.map(|c| (p.alpha, c))).collect();
    for w in values.windows(2) {
        let ((a0, c0), (a1, c1)) = (w[0], w[1]);
        let tol = 1e-7 * c0.max(c1);
        let bad = if n % 2 == 1 { c1 < c0 - tol } else { c1 > c0 + tol };
        if bad {
            warnings.push(format!(
                "C_{n} not {} between alpha = {a0} and {a1}: {c0:.9e} -> {c1:.9e}",
                if n % 2 == 1 { "non-decreasing" } else { "non-increasing" }
            ));
        }
    }
    Ok(CnCurve { points, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{exp, ln};

    fn exp_g(domain: Domain) -> WeightFunction {
        WeightFunction::new(WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 }, domain)
            .unwrap()
    }

    fn one(domain: Domain) -> WeightFunction {
        WeightFunction::new(WeightFamily::Constant(1.0), domain).unwrap()
    }

    /// r = 1, exp weight, constant envelopes: the level splits the total
    /// g-mass into 2n+1 alternating legs, C = g_1(A)/(2n+1), knot k at
    /// cumulative mass 2kC.
    #[test]
    fn segment_r1_closed_form() {
        let end = ln(4.0);
        let f = one(Domain::Segment(end));
        let g = exp_g(Domain::Segment(end));
        let sol = oscillate_segment(1, 1, end, &f, &f, &g, &SolverOptions::default()).unwrap();
        let c_exact = (1.0 - exp(-end)) / 3.0;
        assert!((sol.level - c_exact).abs() < 1e-8, "{} vs {c_exact}", sol.level);
        let knot_exact = -ln(1.0 - 2.0 * c_exact);
        assert!((sol.spline.knots()[0] - knot_exact).abs() < 1e-7);
        // Touches: +C at 0, −C at the knot.
        assert!(sol.oscillation_points[0].abs() < 1e-7);
        assert!((sol.oscillation_points[1] - knot_exact).abs() < 1e-6);
        assert!((sol.spline.value(0.0) - c_exact).abs() < 1e-8);
        assert!((sol.spline.value(knot_exact) + c_exact).abs() < 1e-8);
    }

    #[test]
    fn segment_r1_two_knots_closed_form() {
        let end = 2.0;
        let f = one(Domain::Segment(end));
        let g = exp_g(Domain::Segment(end));
        let sol = oscillate_segment(1, 2, end, &f, &f, &g, &SolverOptions::default()).unwrap();
        let c_exact = (1.0 - exp(-end)) / 5.0;
        assert!((sol.level - c_exact).abs() < 1e-8);
        for (k, knot) in sol.spline.knots().iter().enumerate() {
            let exact = -ln(1.0 - 2.0 * (k + 1) as f64 * c_exact);
            assert!((knot - exact).abs() < 1e-6, "knot {k}");
        }
    }

    #[test]
    fn segment_n0_is_the_weighted_norm_of_the_anchored_spline() {
        let end = 1.0;
        let f = one(Domain::Segment(end));
        let g = exp_g(Domain::Segment(end));
        let sol = oscillate_segment(2, 0, end, &f, &f, &g, &SolverOptions::default()).unwrap();
        // G(t) = ∫_t^1 (s−t) e^{−s} ds peaks at t = 0.
        let expect = crate::quad::integrate(&|s| s * exp(-s), 0.0, 1.0, 1e-13);
        assert!((sol.level - expect).abs() < 1e-10);
        assert_eq!(sol.oscillation_points.len(), 1);
        assert!(sol.oscillation_points[0].abs() < 1e-6);
    }

    #[test]
    fn segment_envelope_scaling_homogeneity() {
        let end = 2.0;
        let g = exp_g(Domain::Segment(end));
        let f1 = one(Domain::Segment(end));
        let f3 = WeightFunction::new(WeightFamily::Constant(3.0), Domain::Segment(end)).unwrap();
        let a = oscillate_segment(2, 1, end, &f1, &f1, &g, &SolverOptions::default()).unwrap();
        let b = oscillate_segment(2, 1, end, &f3, &f3, &g, &SolverOptions::default()).unwrap();
        assert!((b.level - a.level / 3.0).abs() < 1e-8);
        for (x, y) in a.spline.knots().iter().zip(b.spline.knots()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    /// r = 1, n = 1: C_1(α) = (1+α)/(2(2+α)), knot ln(2+α), G(∞) = C·u_α.
    #[test]
    fn halfline_r1_closed_form() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            let sol =
                oscillate_halfline(1, 1, alpha, &f, &f, &g, &SolverOptions::default()).unwrap();
            let c_exact = (1.0 + alpha) / (2.0 * (2.0 + alpha));
            let knot_exact = ln(2.0 + alpha);
            assert!(
                (sol.level - c_exact).abs() < 1e-8,
                "alpha {alpha}: {} vs {c_exact}",
                sol.level
            );
            assert!((sol.spline.knots()[0] - knot_exact).abs() < 1e-7, "alpha {alpha}");
            assert!(sol.diagnostics.alpha_residual.unwrap() < 1e-8);
            // G(∞) = C(1−α)/(1+α) for f ≡ 1.
            let c_inf = sol.spline.limit_value().unwrap();
            assert!((c_inf - c_exact * (1.0 - alpha) / (1.0 + alpha)).abs() < 1e-8);
        }
    }

    #[test]
    fn halfline_r1_alpha1_touches() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let sol = oscillate_halfline(1, 1, 1.0, &f, &f, &g, &SolverOptions::default()).unwrap();
        assert!((sol.level - 1.0 / 3.0).abs() < 1e-8);
        assert!(sol.oscillation_points[0].abs() < 1e-7);
        assert!((sol.oscillation_points[1] - ln(3.0)).abs() < 1e-6);
        assert!(sol.spline.limit_value().unwrap().abs() < 1e-8);
    }

    /// Even n: C_2(α) = (1+α)/(2(2+3α)) for the exponential weight.
    #[test]
    fn halfline_r1_n2_closed_form() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        for alpha in [0.5, 1.0, 3.0] {
            let sol =
                oscillate_halfline(1, 2, alpha, &f, &f, &g, &SolverOptions::default()).unwrap();
            let c_exact = (1.0 + alpha) / (2.0 * (2.0 + 3.0 * alpha));
            assert!(
                (sol.level - c_exact).abs() < 1e-8,
                "alpha {alpha}: {} vs {c_exact}",
                sol.level
            );
            let t1 = ln((2.0 + 3.0 * alpha) / (1.0 + 2.0 * alpha));
            let t2 = ln((2.0 + 3.0 * alpha) / alpha);
            assert!((sol.spline.knots()[0] - t1).abs() < 1e-6);
            assert!((sol.spline.knots()[1] - t2).abs() < 1e-6);
        }
    }

    #[test]
    fn halfline_r2_converges_and_is_contained() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        for n in 1..=2usize {
            let sol = oscillate_halfline(2, n, 1.0, &f, &f, &g, &SolverOptions::default()).unwrap();
            assert_eq!(sol.spline.knots().len(), n);
            assert_eq!(sol.oscillation_points.len(), n + 1);
            assert!(sol.diagnostics.equilibration_residual < 1e-8);
            assert!(sol.diagnostics.envelope_excess < 1e-7);
        }
    }

    #[test]
    fn cn_curve_r1_matches_formula_and_monotone() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let grid = [0.5, 1.0, 2.0, 4.0];
        let curve = cn_curve(1, 1, &grid, &f, &f, &g, &SolverOptions::default(), true).unwrap();
        assert!(curve.warnings.is_empty());
        for p in &curve.points {
            let exact = (1.0 + p.alpha) / (2.0 * (2.0 + p.alpha));
            assert!((p.c.unwrap() - exact).abs() < 1e-6, "alpha = {}", p.alpha);
        }
    }

    #[test]
    fn truncation_and_direct_paths_agree() {
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let opts = SolverOptions::default();
        let calc = Arc::new(GCalculus::build(&g, 1, 1e-12).unwrap());
        let alpha = 1.0;
        let u = 0.0;
        let end = calc.tail_cutoff(1e-11);
        let trunc = truncated_solution(1, 1, alpha, u, &f, &f, &calc, end, &opts).unwrap();
        let direct = oscillate_halfline_with_calc(1, 1, alpha, &f, &f, &calc, None, &opts).unwrap();
        assert!((trunc.level - direct.level).abs() < 1e-7);
    }

    #[test]
    fn knots_dominate_derivative_zeros() {
        // Interlacing: t_k >= s_k for the zeros s_k of G'.
        let f = one(Domain::HalfLine);
        let g = exp_g(Domain::HalfLine);
        let sol = oscillate_halfline(2, 2, 1.0, &f, &f, &g, &SolverOptions::default()).unwrap();
        let zeros: Vec<f64> = sol
            .spline
            .sign_changes(1, 0.0, 30.0)
            .unwrap()
            .into_iter()
            .filter(|z| z.crossing)
            .map(|z| z.t)
            .collect();
        assert_eq!(zeros.len(), 2);
        for (tk, sk) in sol.spline.knots().iter().zip(&zeros) {
            assert!(tk >= &(sk - 1e-9));
        }
    }
}
