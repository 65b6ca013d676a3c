//! Perfect g-splines: data model and evaluation.
//!
//! A spline of order `r` with knots `t_1 < … < t_n` satisfies
//! `G^(r)(t)/g(t) = ε·(−1)^i` on each knot interval. On a segment the spline
//! is pinned by `G^(k)(A) = 0`, `k < r`; on the half-line the tail past the
//! last knot is `limit + σ·P_r(t)` with `σ = ε·(−1)^n`, which makes all
//! derivative limits vanish at infinity.
//!
//! The representation is the knot vector plus one derivative vector per knot,
//! produced once by backward integration; evaluation anywhere costs a Taylor
//! step from the nearest anchor plus one local moment integral of `g`.

use crate::calculus::GCalculus;
use crate::error::{Error, Result};
use crate::quad;
use crate::util::{factorial, powi};
use crate::weights::WeightFunction;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

/// Knots closer than this collapse pairwise (the sign flips cancel).
const KNOT_COLLAPSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplineDomain {
    /// `[0, end]` with vanishing boundary derivatives at `end`.
    Segment { end: f64 },
    /// `[0, ∞)` with `G(∞) = limit`.
    HalfLine { limit: f64 },
}

#[derive(Debug, Clone)]
enum EvalContext {
    Segment { g: Arc<WeightFunction> },
    HalfLine { calc: Arc<GCalculus> },
}

/// A zero located by [`PerfectGSpline::sign_changes`].
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub t: f64,
    /// True for an actual sign change; false for a grazing touch.
    pub crossing: bool,
}

#[derive(Debug, Clone)]
pub struct PerfectGSpline {
    r: usize,
    knots: Vec<f64>,
    leading_sign: i8,
    domain: SplineDomain,
    ctx: EvalContext,
    /// Derivative vector (G, G', …, G^(r−1)) at each knot, right-limit values.
    knot_vecs: Vec<Vec<f64>>,
}

/// `∫_t^b (s−t)^(p−1)/(p−1)! · g(s) ds` — the p-th order moment of g used by
/// the backward Taylor steps.
fn moment<G: Fn(f64) -> f64>(g: &G, p: usize, t: f64, b: f64) -> f64 {
    debug_assert!(p >= 1);
    if b <= t {
        return 0.0;
    }
    let inv_fact = 1.0 / factorial(p - 1);
    quad::integrate(&|s| powi(s - t, p - 1) * inv_fact * g(s), t, b, 1e-14)
}

fn validate_knots(knots: &mut Vec<f64>, open_end: Option<f64>) -> Result<()> {
    if knots.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::KnotsNotSorted);
    }
    // Coincident pairs annihilate: two sign flips at one point are none.
    let scale = knots.last().copied().unwrap_or(1.0).max(1.0);
    let mut i = 0;
    while i + 1 < knots.len() {
        if knots[i + 1] - knots[i] <= KNOT_COLLAPSE_TOL * scale {
            knots.drain(i..=i + 1);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::KnotsNotSorted);
    }
    if let Some(first) = knots.first() {
        if *first <= 0.0 {
            return Err(Error::KnotsOutOfRange);
        }
    }
    if let (Some(end), Some(last)) = (open_end, knots.last()) {
        if *last >= end {
            return Err(Error::KnotsOutOfRange);
        }
    }
    Ok(())
}

impl PerfectGSpline {
    /// The unique spline with the given sign pattern and `G^(k)(end) = 0`,
    /// `k = 0..r−1`, realized by backward integration from `end`.
    pub fn new_segment(
        r: usize,
        end: f64,
        knots: Vec<f64>,
        leading_sign: i8,
        g: Arc<WeightFunction>,
    ) -> Result<Self> {
        if r == 0 || !(end > 0.0) {
            return Err(Error::PreconditionViolated("need r >= 1 and end > 0".to_string()));
        }
        if leading_sign != 1 && leading_sign != -1 {
            return Err(Error::PreconditionViolated("leading sign must be ±1".to_string()));
        }
        let mut knots = knots;
        validate_knots(&mut knots, Some(end))?;
        let mut spline = PerfectGSpline {
            r,
            knots,
            leading_sign,
            domain: SplineDomain::Segment { end },
            ctx: EvalContext::Segment { g },
            knot_vecs: Vec::new(),
        };
        spline.rebuild();
        Ok(spline)
    }

    /// Half-line spline: tail `limit + σ·P_r` past the last knot, extended to
    /// the left by backward integration flipping the sign of `G^(r)` at each
    /// knot.
    pub fn new_halfline(
        r: usize,
        knots: Vec<f64>,
        leading_sign: i8,
        limit: f64,
        calc: Arc<GCalculus>,
    ) -> Result<Self> {
        if r == 0 || calc.r() < r {
            return Err(Error::PreconditionViolated(
                "need r >= 1 and a calculus built to at least the same order".to_string(),
            ));
        }
        if leading_sign != 1 && leading_sign != -1 {
            return Err(Error::PreconditionViolated("leading sign must be ±1".to_string()));
        }
        let mut knots = knots;
        validate_knots(&mut knots, None)?;
        let mut spline = PerfectGSpline {
            r,
            knots,
            leading_sign,
            domain: SplineDomain::HalfLine { limit },
            ctx: EvalContext::HalfLine { calc },
            knot_vecs: Vec::new(),
        };
        spline.rebuild();
        Ok(spline)
    }

    /// Sign of `G^(r)/g` on knot interval `i` (0-based, `i = 0..=n`).
    #[inline]
    pub fn interval_sign(&self, i: usize) -> f64 {
        let eps = self.leading_sign as f64;
        if i % 2 == 0 {
            eps
        } else {
            -eps
        }
    }

    fn g_eval(&self, t: f64) -> f64 {
        match &self.ctx {
            EvalContext::Segment { g } => g.eval(t),
            EvalContext::HalfLine { calc } => calc.g().eval(t),
        }
    }

    /// Derivative vector one knot to the left of anchor `b` carrying `vec_b`.
    fn step_left(&self, a: f64, b: f64, vec_b: &[f64], sigma: f64) -> Vec<f64> {
        let r = self.r;
        let g = |t: f64| self.g_eval(t);
        let mut out = vec![0.0; r];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (m, &v) in vec_b.iter().enumerate().skip(j) {
                acc += v * powi(a - b, m - j) / factorial(m - j);
            }
            let parity = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sigma * parity * moment(&g, r - j, a, b);
            *slot = acc;
        }
        out
    }

    fn rebuild(&mut self) {
        let n = self.knots.len();
        let r = self.r;
        let mut vecs = vec![Vec::new(); n];
        match (&self.domain, &self.ctx) {
            (SplineDomain::Segment { end }, _) => {
                let mut carry = vec![0.0; r];
                let mut b = *end;
                for i in (0..n).rev() {
                    let a = self.knots[i];
                    // Interval i+1 lies between knots[i] and the anchor.
                    let sigma = self.interval_sign(i + 1);
                    carry = self.step_left(a, b, &carry, sigma);
                    vecs[i] = carry.clone();
                    b = a;
                }
            }
            (SplineDomain::HalfLine { limit }, EvalContext::HalfLine { calc }) => {
                if n > 0 {
                    let a = self.knots[n - 1];
                    let sigma_tail = self.interval_sign(n);
                    let mut tail = vec![0.0; r];
                    for (j, slot) in tail.iter_mut().enumerate() {
                        let mut v = sigma_tail * calc.pk(r - j, a);
                        if j == 0 {
                            v += *limit;
                        }
                        *slot = v;
                    }
                    vecs[n - 1] = tail;
                    let mut b = a;
                    for i in (0..n.saturating_sub(1)).rev() {
                        let a = self.knots[i];
                        let sigma = self.interval_sign(i + 1);
                        let carry = self.step_left(a, b, &vecs[i + 1], sigma);
                        vecs[i] = carry;
                        b = a;
                    }
                }
            }
            _ => unreachable!(),
        }
        self.knot_vecs = vecs;
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn leading_sign(&self) -> i8 {
        self.leading_sign
    }

    pub fn domain(&self) -> SplineDomain {
        self.domain
    }

    /// `G(∞)` for half-line splines.
    pub fn limit_value(&self) -> Option<f64> {
        match self.domain {
            SplineDomain::HalfLine { limit } => Some(limit),
            SplineDomain::Segment { .. } => None,
        }
    }

    pub fn calc(&self) -> Option<&Arc<GCalculus>> {
        match &self.ctx {
            EvalContext::HalfLine { calc } => Some(calc),
            EvalContext::Segment { .. } => None,
        }
    }

    /// Magnitude of the knotless spline at 0 — the natural residual scale.
    pub fn magnitude_scale(&self) -> f64 {
        match (&self.domain, &self.ctx) {
            (SplineDomain::Segment { end }, EvalContext::Segment { g }) => {
                moment(&|t| g.eval(t), self.r, 0.0, *end).abs().max(1e-300)
            }
            (SplineDomain::HalfLine { limit }, EvalContext::HalfLine { calc }) => {
                (calc.pk(self.r, 0.0).abs() + limit.abs()).max(1e-300)
            }
            _ => unreachable!(),
        }
    }

    /// Knot interval containing `t`; right-limit convention at knots.
    #[inline]
    fn interval_index(&self, t: f64) -> usize {
        self.knots.partition_point(|&k| k <= t)
    }

    /// `G^(j)(t)` without domain checks (hot path).
    pub(crate) fn raw_eval(&self, j: usize, t: f64) -> f64 {
        let r = self.r;
        let n = self.knots.len();
        let i = self.interval_index(t);
        match (&self.domain, &self.ctx) {
            (SplineDomain::HalfLine { limit }, EvalContext::HalfLine { calc }) if i == n => {
                let sigma = self.interval_sign(n);
                let mut v = sigma * calc.pk(r - j, t);
                if j == 0 {
                    v += *limit;
                }
                v
            }
            (SplineDomain::Segment { end }, _) if i == n => {
                let sigma = self.interval_sign(n);
                let parity = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
                let g = |s: f64| self.g_eval(s);
                sigma * parity * moment(&g, r - j, t, *end)
            }
            _ => {
                let b = self.knots[i];
                let vec_b = &self.knot_vecs[i];
                let mut acc = 0.0;
                for (m, &v) in vec_b.iter().enumerate().skip(j) {
                    acc += v * powi(t - b, m - j) / factorial(m - j);
                }
                let sigma = self.interval_sign(i);
                let parity = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
                let g = |s: f64| self.g_eval(s);
                acc + sigma * parity * moment(&g, r - j, t, b)
            }
        }
    }

    /// Value of `G^(j)(t)`, `j = 0..r−1`. At a knot the right-limit is used.
    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        if j >= self.r {
            return Err(Error::PreconditionViolated("derivative order must be < r".to_string()));
        }
        let in_domain = match self.domain {
            SplineDomain::Segment { end } => (-1e-12..=end * (1.0 + 1e-14) + 1e-12).contains(&t),
            SplineDomain::HalfLine { .. } => t >= -1e-12,
        };
        if !in_domain {
            return Err(Error::OutOfDomain { t });
        }
        Ok(self.raw_eval(j, t.max(0.0)))
    }

    /// `G(t)`, unchecked domain (clamped below at 0).
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.raw_eval(0, t.max(0.0))
    }

    /// `G^(r)(t)` (right limit at knots): `±g(t)` by definition.
    pub fn rth_derivative(&self, t: f64) -> f64 {
        self.interval_sign(self.interval_index(t)) * self.g_eval(t)
    }

    /// Locate all zeros of `G^(j)` on `[lo, hi]`: sign changes found on an
    /// adaptive grid and bisected, grazing touches flagged separately.
    pub fn sign_changes(&self, j: usize, lo: f64, hi: f64) -> Result<Vec<Zero>> {
        if j >= self.r {
            return Err(Error::PreconditionViolated("derivative order must be < r".to_string()));
        }
        let samples = 256 * (self.knots.len() + 1);
        let f = |t: f64| self.raw_eval(j, t);
        let step = (hi - lo) / samples as f64;
        let mut zeros = Vec::new();
        let mut prev_t = lo;
        let mut prev_v = f(lo);
        let mut scale = 0.0f64;
        let mut vals = Vec::with_capacity(samples + 1);
        vals.push((prev_t, prev_v));
        for i in 1..=samples {
            let t = lo + step * i as f64;
            let v = f(t);
            scale = scale.max(v.abs());
            vals.push((t, v));
            if prev_v == 0.0 {
                // Sampled an exact zero; classify by neighbours.
                zeros.push(Zero { t: prev_t, crossing: v * vals[i.saturating_sub(2)].1 < 0.0 });
            } else if prev_v * v < 0.0 {
                let root = crate::util::bisect_root(&f, prev_t, t, prev_v, step * 1e-10);
                zeros.push(Zero { t: root, crossing: true });
            }
            prev_t = t;
            prev_v = v;
        }
        // Grazing touches: local minima of |G^(j)| that dip to numerical zero
        // without changing sign.
        let touch_tol = 1e-9 * scale.max(1e-300);
        for w in vals.windows(3) {
            let (_, vm) = w[1];
            if vm.abs() < touch_tol && vm.abs() <= w[0].1.abs() && vm.abs() <= w[2].1.abs() && w[0].1 * w[2].1 > 0.0 {
                let (t_ref, v_ref) = crate::util::golden_min(&|t| f(t).abs(), w[0].0, w[2].0, step * 1e-8);
                if v_ref.abs() < touch_tol && !zeros.iter().any(|z| (z.t - t_ref).abs() < 2.0 * step) {
                    zeros.push(Zero { t: t_ref, crossing: false });
                }
            }
        }
        zeros.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        Ok(zeros)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{exp, ln};
    use crate::weights::{Domain, WeightFamily};

    fn exp_weight(domain: Domain) -> Arc<WeightFunction> {
        Arc::new(
            WeightFunction::new(WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 }, domain)
                .unwrap(),
        )
    }

    fn exp_calc(r: usize) -> Arc<GCalculus> {
        Arc::new(GCalculus::build(&exp_weight(Domain::HalfLine), r, 1e-12).unwrap())
    }

    #[test]
    fn knotless_segment_r2_matches_double_integral() {
        // G(t) = ∫_t^1 (s−t) g(s) ds, with G(1) = G'(1) = 0 and G > 0 on [0,1).
        let g = exp_weight(Domain::Segment(1.0));
        let s = PerfectGSpline::new_segment(2, 1.0, vec![], 1, g.clone()).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let direct = quad::integrate(&|x| (x - t) * g.eval(x), t, 1.0, 1e-14);
            assert!((s.value(t) - direct).abs() < 1e-12);
            if t < 1.0 {
                assert!(s.value(t) >= 0.0);
            }
        }
        assert!(s.value(1.0).abs() < 1e-13);
        assert!(s.eval(1, 1.0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn negating_sign_negates_the_spline() {
        let g = exp_weight(Domain::Segment(2.0));
        let a = PerfectGSpline::new_segment(3, 2.0, vec![0.5, 1.2], 1, g.clone()).unwrap();
        let b = PerfectGSpline::new_segment(3, 2.0, vec![0.5, 1.2], -1, g).unwrap();
        for i in 0..=40 {
            let t = 2.0 * i as f64 / 40.0;
            assert!((a.value(t) + b.value(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn halfline_knotless_is_shifted_tail_primitive() {
        // r = 1, ε so that G' = +g, limit 1/2: G(t) = 1/2 − e^{−t}.
        let calc = exp_calc(1);
        let s = PerfectGSpline::new_halfline(1, vec![], 1, 0.5, calc).unwrap();
        for i in 0..=40 {
            let t = i as f64 * 0.25;
            assert!((s.value(t) - (0.5 - exp(-t))).abs() < 1e-13);
        }
    }

    #[test]
    fn halfline_one_knot_exponential_values() {
        // r = 1, knot ln 3, limit c: tail c − e^{−t}; G(ln 3) = c − 1/3,
        // G(0) = c + 1/3.
        let c = 0.2;
        let calc = exp_calc(1);
        let s = PerfectGSpline::new_halfline(1, vec![ln(3.0)], -1, c, calc).unwrap();
        assert!((s.value(ln(3.0)) - (c - 1.0 / 3.0)).abs() < 1e-12);
        assert!((s.value(0.0) - (c + 1.0 / 3.0)).abs() < 1e-12);
        assert!((s.value(30.0) - c).abs() < 1e-12);
    }

    #[test]
    fn one_sided_derivatives_agree_at_knots() {
        let g = exp_weight(Domain::Segment(3.0));
        let s = PerfectGSpline::new_segment(3, 3.0, vec![0.7, 1.9], 1, g).unwrap();
        for j in 0..3 {
            for &k in s.knots() {
                let left = s.eval(j, k - 1e-9).unwrap();
                let right = s.eval(j, k + 1e-9).unwrap();
                assert!((left - right).abs() < 1e-7, "j = {j}, knot {k}");
            }
        }
    }

    #[test]
    fn segment_boundary_conditions_hold() {
        let g = exp_weight(Domain::Segment(2.5));
        let s = PerfectGSpline::new_segment(4, 2.5, vec![0.4, 1.0, 2.0], 1, g).unwrap();
        for j in 0..4 {
            assert!(s.eval(j, 2.5).unwrap().abs() < 1e-12, "j = {j}");
        }
    }

    #[test]
    fn halfline_derivatives_decay_on_tail() {
        let calc = exp_calc(3);
        let s = PerfectGSpline::new_halfline(3, vec![0.5, 1.5], 1, 0.1, calc).unwrap();
        let d10 = s.eval(1, 10.0).unwrap().abs();
        let d20 = s.eval(1, 20.0).unwrap().abs();
        assert!(d20 < d10);
        assert!(d20 < 1e-8);
        assert!((s.value(40.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn coincident_knots_collapse() {
        let g = exp_weight(Domain::Segment(2.0));
        let s = PerfectGSpline::new_segment(2, 2.0, vec![0.5, 0.5 + 1e-14, 1.0], 1, g.clone()).unwrap();
        assert_eq!(s.knots(), &[1.0]);
        let plain = PerfectGSpline::new_segment(2, 2.0, vec![1.0], 1, g).unwrap();
        for i in 0..=20 {
            let t = 2.0 * i as f64 / 20.0;
            assert!((s.value(t) - plain.value(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn invalid_knots_are_rejected() {
        let g = exp_weight(Domain::Segment(1.0));
        assert!(matches!(
            PerfectGSpline::new_segment(2, 1.0, vec![0.8, 0.3], 1, g.clone()),
            Err(Error::KnotsNotSorted)
        ));
        assert!(matches!(
            PerfectGSpline::new_segment(2, 1.0, vec![1.5], 1, g),
            Err(Error::KnotsOutOfRange)
        ));
    }

    #[test]
    fn knotless_spline_has_no_sign_changes() {
        let g = exp_weight(Domain::Segment(2.0));
        let s = PerfectGSpline::new_segment(2, 2.0, vec![], 1, g).unwrap();
        let zeros = s.sign_changes(0, 0.0, 1.999).unwrap();
        assert!(zeros.iter().all(|z| !z.crossing));
    }

    #[test]
    fn segment_bounded_by_pr() {
        // |G_A(t)| <= |P_r(t)| for boundary-anchored segment splines.
        let g_seg = exp_weight(Domain::Segment(4.0));
        let calc = exp_calc(3);
        let s = PerfectGSpline::new_segment(3, 4.0, vec![0.8, 2.0], 1, g_seg).unwrap();
        for i in 0..=64 {
            let t = 4.0 * i as f64 / 64.0;
            assert!(s.value(t).abs() <= calc.pk(3, t).abs() + 1e-12);
        }
    }
}
