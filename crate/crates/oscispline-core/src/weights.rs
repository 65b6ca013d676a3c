//! Weight functions and the asymmetric weighted norm.
//!
//! Weights are positive continuous functions on `[0, A]` or `[0, ∞)`. The
//! closed-form families carry their monotonicity and limit analytically;
//! tabulated weights interpolate samples with a monotone piecewise cubic
//! (Fritsch–Carlson), which preserves positivity and monotonicity of the
//! data. All values are immutable after construction.

use crate::error::{Error, Result};
use crate::util::{exp, powf};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

/// Domain of definition: a segment `[0, A]` or the half-line `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Segment(f64),
    HalfLine,
}

impl Domain {
    pub fn is_half_line(&self) -> bool {
        matches!(self, Domain::HalfLine)
    }

    pub fn contains(&self, t: f64) -> bool {
        match *self {
            Domain::Segment(a) => (0.0..=a * (1.0 + 1e-14) + 1e-300).contains(&t),
            Domain::HalfLine => t >= 0.0,
        }
    }
}

/// Monotone piecewise-cubic interpolant of positive samples.
#[derive(Debug, Clone)]
pub struct Tabulated {
    ts: Vec<f64>,
    ws: Vec<f64>,
    slopes: Vec<f64>,
    declared_limit: Option<f64>,
}

impl Tabulated {
    fn eval(&self, t: f64) -> f64 {
        let ts = &self.ts;
        if t <= ts[0] {
            return self.ws[0];
        }
        if t >= *ts.last().unwrap() {
            // Constant extension by the declared limit strictly past the
            // grid; the grid end itself keeps its sample.
            if t > *ts.last().unwrap() {
                return self.declared_limit.unwrap_or(*self.ws.last().unwrap());
            }
            return *self.ws.last().unwrap();
        }
        let i = match ts.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let h = ts[i + 1] - ts[i];
        let s = (t - ts[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ws[i] + h10 * h * self.slopes[i] + h01 * self.ws[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn grid_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }
}

/// Fritsch–Carlson slopes: shape preserving, zero at local extrema.
fn pchip_slopes(ts: &[f64], ws: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut d = Vec::with_capacity(n);
    let h: Vec<f64> = (0..n - 1).map(|i| ts[i + 1] - ts[i]).collect();
    let sec: Vec<f64> = (0..n - 1).map(|i| (ws[i + 1] - ws[i]) / h[i]).collect();
    for i in 0..n {
        if i == 0 {
            d.push(endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), sec[0], sec.get(1).copied().unwrap_or(sec[0])));
        } else if i == n - 1 {
            let m = n - 2;
            d.push(endpoint_slope(
                h[m],
                if m > 0 { h[m - 1] } else { h[m] },
                sec[m],
                if m > 0 { sec[m - 1] } else { sec[m] },
            ));
        } else if sec[i - 1] * sec[i] <= 0.0 {
            d.push(0.0);
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d.push((w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]));
        }
    }
    d
}

fn endpoint_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

/// Closed-form weight families plus tabulated data.
#[derive(Debug, Clone)]
pub enum WeightFamily {
    /// w(t) = c
    Constant(f64),
    /// w(t) = base + amplitude · e^(−rate·t)
    ExpDecay { base: f64, amplitude: f64, rate: f64 },
    /// w(t) = base + amplitude · (1 + t)^(−exponent)
    PowerDecay { base: f64, amplitude: f64, exponent: f64 },
    Tabulated(Tabulated),
}

/// A positive weight on its domain, with analytic metadata.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    family: WeightFamily,
    domain: Domain,
    limit_at_infinity: Option<f64>,
    monotone_nonincreasing: bool,
}

impl WeightFunction {
    /// Build a weight from its family descriptor (`make_weight`).
    ///
    /// Limits and monotonicity come from the closed forms; a 1024-point grid
    /// additionally spot-checks positivity and the monotonicity claim.
    pub fn new(family: WeightFamily, domain: Domain) -> Result<Self> {
        if let Domain::Segment(a) = domain {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::PreconditionViolated("segment length must be positive".to_string()));
            }
        }
        let (limit, monotone) = match &family {
            WeightFamily::Constant(c) => {
                if !(*c > 0.0) {
                    return Err(Error::NonPositive(format!("constant weight {c}")));
                }
                (Some(*c), true)
            }
            WeightFamily::ExpDecay { base, amplitude, rate } => {
                if *base < 0.0 || *amplitude < 0.0 || !(*rate > 0.0) {
                    return Err(Error::NonPositive(format!(
                        "exp family needs base >= 0, amplitude >= 0, rate > 0 (got {base}, {amplitude}, {rate})"
                    )));
                }
                if *base + *amplitude <= 0.0 {
                    return Err(Error::NonPositive("exp family is identically zero".to_string()));
                }
                if *base == 0.0 && *amplitude == 0.0 {
                    return Err(Error::NonPositive("exp family is identically zero".to_string()));
                }
                (Some(*base), true)
            }
            WeightFamily::PowerDecay { base, amplitude, exponent } => {
                if *base < 0.0 || *amplitude < 0.0 || !(*exponent > 0.0) {
                    return Err(Error::NonPositive(format!(
                        "power family needs base >= 0, amplitude >= 0, exponent > 0 (got {base}, {amplitude}, {exponent})"
                    )));
                }
                if *base + *amplitude <= 0.0 {
                    return Err(Error::NonPositive("power family is identically zero".to_string()));
                }
                (Some(*base), true)
            }
            WeightFamily::Tabulated(tab) => {
                let n = tab.ts.len();
                if n < 2 || tab.ws.len() != n {
                    return Err(Error::PreconditionViolated("tabulated weight needs >= 2 samples".to_string()));
                }
                if tab.ts[0] != 0.0 {
                    return Err(Error::PreconditionViolated("tabulated grid must start at t = 0".to_string()));
                }
                if tab.ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::PreconditionViolated("tabulated grid must be strictly increasing".to_string()));
                }
                if tab.ws.iter().any(|&w| !(w > 0.0)) {
                    return Err(Error::NonPositive("tabulated sample".to_string()));
                }
                if let Domain::Segment(a) = domain {
                    if tab.grid_end() < a - 1e-12 {
                        return Err(Error::PreconditionViolated("tabulated grid does not cover the segment".to_string()));
                    }
                }
                let limit = if domain.is_half_line() {
                    match tab.declared_limit {
                        Some(l) if l >= 0.0 => Some(l),
                        Some(_) => return Err(Error::NonPositive("declared limit must be >= 0".to_string())),
                        None => return Err(Error::MissingLimit),
                    }
                } else {
                    tab.declared_limit
                };
                let monotone = tab.ws.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs());
                (limit, monotone)
            }
        };
        if domain.is_half_line() && limit.is_none() {
            return Err(Error::MissingLimit);
        }
        let wf = WeightFunction { family, domain, limit_at_infinity: limit, monotone_nonincreasing: monotone };
        wf.grid_check()?;
        Ok(wf)
    }

    /// Convenience constructor for tabulated samples.
    pub fn tabulated(ts: Vec<f64>, ws: Vec<f64>, declared_limit: Option<f64>, domain: Domain) -> Result<Self> {
        if ts.len() < 2 || ts.len() != ws.len() {
            return Err(Error::PreconditionViolated("tabulated weight needs >= 2 samples".to_string()));
        }
        let slopes = pchip_slopes(&ts, &ws);
        Self::new(WeightFamily::Tabulated(Tabulated { ts, ws, slopes, declared_limit }), domain)
    }

    fn grid_check(&self) -> Result<()> {
        let span = self.probe_span();
        let n = 1024;
        let mut prev = f64::INFINITY;
        for i in 0..=n {
            let t = span * i as f64 / n as f64;
            let w = self.eval(t);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositive(format!("w({t}) = {w}")));
            }
            if self.monotone_nonincreasing && w > prev * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::NonPositive(format!("declared non-increasing but w({t}) rises")));
            }
            prev = w;
        }
        if self.domain.is_half_line() {
            // The declared limit must match the tail within the tolerance.
            let tail = self.eval(span);
            let lim = self.limit_at_infinity.unwrap();
            let scale = self.eval(0.0).max(1.0);
            if (tail - lim).abs() > 0.11 * scale {
                return Err(Error::PreconditionViolated(format!(
                    "declared limit {lim} is far from the tail value {tail}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluate the weight at `t`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.family {
            WeightFamily::Constant(c) => *c,
            WeightFamily::ExpDecay { base, amplitude, rate } => base + amplitude * exp(-rate * t),
            WeightFamily::PowerDecay { base, amplitude, exponent } => base + amplitude * powf(1.0 + t, -exponent),
            WeightFamily::Tabulated(tab) => tab.eval(t),
        }
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Limit at +∞ (always present on the half-line).
    pub fn limit_at_infinity(&self) -> Option<f64> {
        self.limit_at_infinity
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.monotone_nonincreasing
    }

    /// Span after which the weight is indistinguishable from its limit; used
    /// for probe grids and norm truncation defaults.
    pub fn probe_span(&self) -> f64 {
        match (&self.family, self.domain) {
            (_, Domain::Segment(a)) => a,
            (WeightFamily::Constant(_), _) => 64.0,
            (WeightFamily::ExpDecay { rate, .. }, _) => (40.0 / rate).clamp(16.0, 1e6),
            (WeightFamily::PowerDecay { exponent, .. }, _) => powf(1e13, 1.0 / *exponent).clamp(64.0, 1e13),
            (WeightFamily::Tabulated(tab), _) => tab.grid_end(),
        }
    }
}

/// Options for the adaptive sup computation in [`weighted_norm`].
#[derive(Debug, Clone)]
pub struct NormOptions {
    /// Coarse scan resolution before local refinement.
    pub samples: usize,
    /// Override the half-line truncation point.
    pub truncation: Option<f64>,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { samples: 1024, truncation: None }
    }
}

const OVERFLOW_GUARD: f64 = 1e100;

/// Asymmetric weighted norm `sup_t [max(x,0)/f₊ + max(−x,0)/f₋]`.
///
/// On the half-line `x_limit` must give `lim x(t)`; the limit point enters
/// as an explicit candidate and the sup is truncated where the tail is flat.
pub fn weighted_norm<F: Fn(f64) -> f64>(
    x: F,
    x_limit: Option<f64>,
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    opts: &NormOptions,
) -> Result<f64> {
    if f_minus.domain() != f_plus.domain() {
        return Err(Error::DomainMismatch);
    }
    let phi = |t: f64| {
        let v = x(t);
        if v >= 0.0 {
            v / f_plus.eval(t)
        } else {
            -v / f_minus.eval(t)
        }
    };
    let (end, limit_candidate) = match f_plus.domain() {
        Domain::Segment(a) => (a, None),
        Domain::HalfLine => {
            let lim = x_limit.ok_or(Error::MissingLimit)?;
            let t_end = opts.truncation.unwrap_or_else(|| {
                // Expand until x sits on its limit; all in-scope functions
                // have one.
                let mut t = f_minus.probe_span().max(f_plus.probe_span()).min(1e4);
                for _ in 0..24 {
                    if (x(t) - lim).abs() <= 1e-12 * (1.0 + lim.abs())
                        && (x(0.5 * t) - lim).abs() <= 1e-10 * (1.0 + lim.abs())
                    {
                        break;
                    }
                    t *= 2.0;
                }
                t
            });
            let lim_phi = if lim >= 0.0 {
                lim / f_plus.limit_at_infinity().ok_or(Error::MissingLimit)?
            } else {
                -lim / f_minus.limit_at_infinity().ok_or(Error::MissingLimit)?
            };
            (t_end, Some(lim_phi))
        }
    };
    let (_, sup) = crate::util::scan_max(&phi, 0.0, end, opts.samples);
    let sup = match limit_candidate {
        Some(l) => sup.max(l),
        None => sup,
    };
    if !sup.is_finite() || sup > OVERFLOW_GUARD {
        return Err(Error::NotFinite);
    }
    Ok(sup)
}

/// Report of the standing assumptions for a triple `(f₋, f₊, g)` and order `r`.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// All three weights positive on the probe grid.
    pub positivity: bool,
    /// f₋, f₊ and g non-increasing (half-line requirement).
    pub monotonicity: bool,
    /// f₋(∞) > 0 and f₊(∞) > 0.
    pub f_limits_positive: bool,
    /// A₀ = ∫g finite.
    pub a0_finite: bool,
    /// A₁…A_{r−1} finite.
    pub ak_finite: bool,
    /// liminf (f±(t) − f±(∞))/P_r(t) = 0.
    pub liminf_condition: bool,
    /// sup |P_r|/f finite.
    pub sup_condition: bool,
    /// Some condition was decided numerically rather than analytically.
    pub heuristic: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.positivity
            && self.monotonicity
            && self.f_limits_positive
            && self.a0_finite
            && self.ak_finite
            && self.liminf_condition
            && self.sup_condition
    }
}

/// Does `∫ g` converge, analytically where the family allows it.
/// Returns (a0_finite, ak_finite_up_to_r_minus_1, heuristic).
fn integrability(g: &WeightFunction, r: usize) -> (bool, bool, bool) {
    match g.family() {
        WeightFamily::Constant(_) => (false, false, false),
        WeightFamily::ExpDecay { base, .. } => {
            let fin = *base == 0.0;
            (fin, fin, false)
        }
        WeightFamily::PowerDecay { base, exponent, .. } => {
            if *base != 0.0 {
                (false, false, false)
            } else {
                (*exponent > 1.0, *exponent > r as f64, false)
            }
        }
        WeightFamily::Tabulated(_) => {
            // Constant extension beyond the grid by the declared limit:
            // integrable exactly when the limit is zero.
            let fin = g.limit_at_infinity() == Some(0.0);
            (fin, fin, true)
        }
    }
}

/// Verify the paper's standing assumptions for `(f₋, f₊, g)` and order `r`.
///
/// Closed-form families are decided analytically; tabulated weights fall back
/// to expanding-grid probes and set the `heuristic` flag.
pub fn check_assumptions(
    f_minus: &WeightFunction,
    f_plus: &WeightFunction,
    g: &WeightFunction,
    r: usize,
) -> Result<AssumptionReport> {
    if f_minus.domain() != f_plus.domain() || f_minus.domain() != g.domain() {
        return Err(Error::DomainMismatch);
    }
    if r == 0 {
        return Err(Error::PreconditionViolated("order r must be >= 1".to_string()));
    }
    let positivity = true; // enforced by the constructors' grid check
    let monotonicity = f_minus.is_nonincreasing() && f_plus.is_nonincreasing() && g.is_nonincreasing();
    let f_limits_positive = match (f_minus.limit_at_infinity(), f_plus.limit_at_infinity()) {
        (Some(lm), Some(lp)) => lm > 0.0 && lp > 0.0,
        _ => !f_minus.domain().is_half_line(),
    };
    let (a0_finite, ak_finite, mut heuristic) = integrability(g, r);

    let mut liminf_condition = true;
    let mut sup_condition = f_limits_positive && a0_finite && ak_finite;
    if a0_finite && ak_finite {
        for f in [f_minus, f_plus] {
            match liminf_vanishes(f, g, r) {
                Some(ok) => liminf_condition &= ok,
                None => {
                    // Numeric probe of the ratio along a geometric grid.
                    heuristic = true;
                    liminf_condition &= liminf_probe(f, g, r)?;
                }
            }
        }
    } else {
        // P_r does not exist; the dependent conditions fail vacuously.
        liminf_condition = false;
        sup_condition = false;
    }

    Ok(AssumptionReport {
        positivity,
        monotonicity,
        f_limits_positive,
        a0_finite,
        ak_finite,
        liminf_condition,
        sup_condition,
        heuristic,
    })
}

/// Analytic fast paths for (assumption3); `None` means "decide numerically".
fn liminf_vanishes(f: &WeightFunction, g: &WeightFunction, _r: usize) -> Option<bool> {
    match (f.family(), g.family()) {
        (WeightFamily::Constant(_), _) => Some(true),
        (WeightFamily::ExpDecay { amplitude, .. }, _) if *amplitude == 0.0 => Some(true),
        (WeightFamily::ExpDecay { rate: rf, .. }, WeightFamily::ExpDecay { rate: rg, base, .. }) if *base == 0.0 => {
            // (f − f∞)/P_r ~ e^{−(rf − rg) t}: vanishes iff f decays faster.
            Some(*rf > *rg)
        }
        (WeightFamily::PowerDecay { amplitude, .. }, _) if *amplitude == 0.0 => Some(true),
        (WeightFamily::PowerDecay { .. }, WeightFamily::ExpDecay { base, .. }) if *base == 0.0 => {
            // Polynomial numerator against an exponentially small P_r.
            Some(false)
        }
        _ => None,
    }
}

fn liminf_probe(f: &WeightFunction, g: &WeightFunction, r: usize) -> Result<bool> {
    let calc = crate::calculus::GCalculus::build(g, r, 1e-12)?;
    let f_inf = f.limit_at_infinity().unwrap_or(0.0);
    let t_end = calc.tail_cutoff(1e-12).max(8.0);
    let mut ratios = Vec::new();
    let mut t = (t_end / 256.0).max(0.5);
    while t <= t_end {
        let pr = calc.pk(r, t);
        if pr.abs() > 1e-300 {
            ratios.push(((f.eval(t) - f_inf) / pr).abs());
        }
        t *= 1.5;
    }
    if ratios.is_empty() {
        return Ok(false);
    }
    let max = ratios.iter().cloned().fold(0.0f64, f64::max);
    let tail_min = ratios.iter().rev().take(6).cloned().fold(f64::INFINITY, f64::min);
    Ok(tail_min <= 1e-5 * max.max(1e-30) || tail_min < 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_weight() -> WeightFunction {
        WeightFunction::new(
            WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 },
            Domain::HalfLine,
        )
        .unwrap()
    }

    fn const_one() -> WeightFunction {
        WeightFunction::new(WeightFamily::Constant(1.0), Domain::HalfLine).unwrap()
    }

    #[test]
    fn make_weight_exp_decay() {
        let w = exp_weight();
        assert_eq!(w.limit_at_infinity(), Some(0.0));
        assert!(w.is_nonincreasing());
        assert!((w.eval(1.0) - exp(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn make_weight_constant_and_shifted_exp() {
        let w = const_one();
        assert_eq!(w.limit_at_infinity(), Some(1.0));
        let w2 = WeightFunction::new(
            WeightFamily::ExpDecay { base: 1.0, amplitude: 1.0, rate: 2.0 },
            Domain::HalfLine,
        )
        .unwrap();
        assert_eq!(w2.limit_at_infinity(), Some(1.0));
        assert!((w2.eval(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_weight_is_rejected() {
        let r = WeightFunction::new(WeightFamily::Constant(0.0), Domain::HalfLine);
        assert!(matches!(r, Err(Error::NonPositive(_))));
        let r = WeightFunction::new(
            WeightFamily::ExpDecay { base: -0.5, amplitude: 1.0, rate: 1.0 },
            Domain::HalfLine,
        );
        assert!(matches!(r, Err(Error::NonPositive(_))));
    }

    #[test]
    fn tabulated_weight_interpolates_monotonically() {
        let ts: Vec<f64> = (0..=32).map(|i| i as f64 / 4.0).collect();
        let ws: Vec<f64> = ts.iter().map(|&t| exp(-t)).collect();
        let w = WeightFunction::tabulated(ts, ws, Some(0.0), Domain::HalfLine).unwrap();
        assert!(w.is_nonincreasing());
        for i in 0..64 {
            let t = 8.0 * i as f64 / 64.0;
            assert!((w.eval(t) - exp(-t)).abs() < 3e-3);
        }
    }

    #[test]
    fn weighted_norm_envelope_touch() {
        let fm = const_one();
        let fp = const_one();
        // x = f₊ has norm one; x = −f₋ has norm one.
        let n = weighted_norm(|_| 1.0, Some(1.0), &fm, &fp, &NormOptions::default()).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        let n = weighted_norm(|_| -1.0, Some(-1.0), &fm, &fp, &NormOptions::default()).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_half_minus_exp() {
        // sup |1/2 − e^{−t}| = 1/2, attained at t = 0 and in the limit.
        let fm = const_one();
        let fp = const_one();
        let n = weighted_norm(|t| 0.5 - exp(-t), Some(0.5), &fm, &fp, &NormOptions::default()).unwrap();
        assert!((n - 0.5).abs() < 1e-10);
    }

    #[test]
    fn assumptions_exp_pass() {
        let f = const_one();
        let g = exp_weight();
        let rep = check_assumptions(&f, &f, &g, 2).unwrap();
        assert!(rep.all_pass());
        assert!(!rep.heuristic);
    }

    #[test]
    fn assumptions_divergent_g() {
        // g = 1/(1+t): ∫ diverges, (th0) fails.
        let f = const_one();
        let g = WeightFunction::new(
            WeightFamily::PowerDecay { base: 0.0, amplitude: 1.0, exponent: 1.0 },
            Domain::HalfLine,
        )
        .unwrap();
        let rep = check_assumptions(&f, &f, &g, 2).unwrap();
        assert!(!rep.a0_finite);
        assert!(!rep.all_pass());
    }

    #[test]
    fn assumptions_vanishing_f_limit() {
        let f = exp_weight();
        let g = exp_weight();
        let rep = check_assumptions(&f, &f, &g, 2).unwrap();
        assert!(!rep.f_limits_positive);
    }

    #[test]
    fn exp_g_passes_th1_for_all_small_r() {
        let f = const_one();
        let g = exp_weight();
        for r in 1..=6 {
            let rep = check_assumptions(&f, &f, &g, r).unwrap();
            assert!(rep.a0_finite && rep.ak_finite, "r = {r}");
        }
    }
}
