//! Iterated primitives of `g`, tail constants `A_k`, and the primitives
//! `P_k` that vanish with all their derivatives at `+∞`.
//!
//! `P_0 = g`, `P_k' = P_{k−1}`, `P_k(∞) = 0`; each `P_k` is single-signed
//! with sign `(−1)^k` and `A_k = (−1)^k ∫ P_k`. A pure exponential weight is
//! handled in closed form; every other family goes through panel Chebyshev
//! proxies anchored at a far cutoff where the iterated tails are negligible,
//! so repeated spline evaluations never re-integrate.

use crate::cheb::Panel;
use crate::error::{Error, Result};
use crate::quad;
use crate::util::{exp, factorial, ln, powi};
use crate::weights::{WeightFamily, WeightFunction};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

const PANEL_DEGREE: usize = 24;
const PROXY_TOL: f64 = 1e-13;
const ANCHOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Backend {
    /// g(t) = amplitude · e^(−rate·t): everything in closed form.
    Exponential { amplitude: f64, rate: f64 },
    Numeric(Table),
}

/// Panel tables for g and its derived functions on `[0, t_end]`.
#[derive(Debug, Clone)]
struct Table {
    breaks: Vec<f64>,
    /// `rows[0]` proxies g; `rows[k]` proxies P_k for k = 1..=r.
    p_rows: Vec<Vec<Panel>>,
    /// `g_rows[k-1]` proxies g_k (left-anchored primitives), k = 1..=r.
    g_rows: Vec<Vec<Panel>>,
    t_end: f64,
}

impl Table {
    fn panel_index(&self, t: f64) -> usize {
        match self.breaks.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.breaks.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.breaks.len() - 2),
        }
    }
}

/// Computed calculus of a half-line weight `g` for spline order `r`.
#[derive(Debug, Clone)]
pub struct GCalculus {
    g: WeightFunction,
    r: usize,
    a: Vec<f64>,
    backend: Backend,
}

impl GCalculus {
    /// Compute `A_0..A_{r−1}`, the primitives `g_k` and `P_k` for `k ≤ r`.
    ///
    /// Closed-form families bypass quadrature; the rest build adaptive panel
    /// tables with absolute tolerance `quad_tol`.
    pub fn build(g: &WeightFunction, r: usize, quad_tol: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::PreconditionViolated("order r must be >= 1".to_string()));
        }
        if !g.domain().is_half_line() {
            return Err(Error::DomainMismatch);
        }
        if let WeightFamily::ExpDecay { base, amplitude, rate } = *g.family() {
            if base == 0.0 {
                let a = (0..r).map(|k| amplitude / powi(rate, k + 1)).collect();
                return Ok(GCalculus {
                    g: g.clone(),
                    r,
                    a,
                    backend: Backend::Exponential { amplitude, rate },
                });
            }
        }
        Self::build_numeric(g, r, quad_tol)
    }

    /// Force the quadrature-backed path even for closed-form families.
    /// Used to cross-check the two routes against each other.
    pub fn build_numeric(g: &WeightFunction, r: usize, quad_tol: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::PreconditionViolated("order r must be >= 1".to_string()));
        }
        if !g.domain().is_half_line() {
            return Err(Error::DomainMismatch);
        }
        match g.family() {
            WeightFamily::Constant(_) => {
                return Err(Error::Divergent("constant g has no finite A_0".to_string()))
            }
            WeightFamily::ExpDecay { base, .. } if *base > 0.0 => {
                return Err(Error::Divergent("exp family with positive base has no finite A_0".to_string()))
            }
            WeightFamily::PowerDecay { base, exponent, .. } => {
                if *base > 0.0 || *exponent <= r as f64 {
                    return Err(Error::Divergent(format!(
                        "power family needs base = 0 and exponent > r = {r} for finite A_0..A_(r-1)"
                    )));
                }
            }
            WeightFamily::Tabulated(_) => {
                if g.limit_at_infinity() != Some(0.0) {
                    return Err(Error::Divergent("tabulated g must decay to zero".to_string()));
                }
            }
            _ => {}
        }

        let exact_end = matches!(g.family(), WeightFamily::Tabulated(_));
        let mut t_end = initial_cutoff(g, quad_tol)?;
        for round in 0..14 {
            let table = build_table(g, r, t_end)?;
            if exact_end || anchors_resolved(&table, r) {
                let a = tail_constants(&table, r);
                return Ok(GCalculus { g: g.clone(), r, a, backend: Backend::Numeric(table) });
            }
            if round == 13 {
                return Err(Error::Divergent(format!(
                    "iterated primitives still large at t = {t_end:.3e}; decay too slow"
                )));
            }
            t_end *= 8.0;
        }
        unreachable!()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn g(&self) -> &WeightFunction {
        &self.g
    }

    /// Tail constants `A_0..A_{r−1}`.
    pub fn a_consts(&self) -> &[f64] {
        &self.a
    }

    /// Iterated left primitive `g_k(t)`, `g_0 = g`.
    pub fn gk(&self, k: usize, t: f64) -> f64 {
        debug_assert!(k <= self.r);
        if k == 0 {
            return self.g.eval(t);
        }
        match &self.backend {
            Backend::Exponential { .. } => {
                // g_k = P_k + Σ_s (−1)^s A_s t^{k−1−s}/(k−1−s)!
                let mut acc = self.pk(k, t);
                for (s, a) in self.a.iter().enumerate().take(k) {
                    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * a * powi(t, k - 1 - s) / factorial(k - 1 - s);
                }
                acc
            }
            Backend::Numeric(tab) => {
                if t >= tab.t_end {
                    let mut acc = 0.0;
                    for (s, a) in self.a.iter().enumerate().take(k) {
                        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * a * powi(t, k - 1 - s) / factorial(k - 1 - s);
                    }
                    return acc;
                }
                tab.g_rows[k - 1][tab.panel_index(t)].eval(t)
            }
        }
    }

    /// `P_k(t)` for `k = 0..=r`; `P_0 = g`.
    pub fn pk(&self, k: usize, t: f64) -> f64 {
        debug_assert!(k <= self.r);
        if k == 0 {
            return self.g.eval(t);
        }
        match &self.backend {
            Backend::Exponential { amplitude, rate } => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * amplitude / powi(*rate, k) * exp(-rate * t)
            }
            Backend::Numeric(tab) => {
                if t >= tab.t_end {
                    return 0.0;
                }
                tab.p_rows[k][tab.panel_index(t)].eval(t)
            }
        }
    }

    /// Universal bound `|limit| + |P_r(t)|` on any x in the class with the
    /// given limit at infinity.
    pub fn envelope_bound(&self, limit_value: f64, t: f64) -> f64 {
        limit_value.abs() + self.pk(self.r, t).abs()
    }

    /// A point `T` with `∫_T^∞ g < tol`.
    pub fn tail_cutoff(&self, tol: f64) -> f64 {
        match &self.backend {
            Backend::Exponential { amplitude, rate } => {
                (ln(amplitude / (rate * tol)) / rate).max(1.0)
            }
            Backend::Numeric(tab) => {
                // |P_1(T)| is exactly the g-tail from T.
                let mut lo = 0.0;
                let mut hi = tab.t_end;
                if self.pk(1, 0.0).abs() <= tol {
                    return 1.0;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.pk(1, mid).abs() > tol {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi.max(1.0)
            }
        }
    }
}

/// First cutoff guess: where the plain g-tail drops below ~1e−15.
fn initial_cutoff(g: &WeightFunction, quad_tol: f64) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut width = 1.0f64;
    let mut total = 0.0f64;
    let mut quiet = 0;
    for _ in 0..200 {
        let hi = lo + width;
        let piece = quad::integrate(&|t| g.eval(t), lo, hi, quad_tol.max(1e-15));
        total += piece;
        if piece.abs() < 1e-15 * (1.0 + total.abs()) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(hi);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Divergent(format!(
        "g-tail still contributing at t = {lo:.3e} (partial integral {total:.6e})"
    )))
}

/// Fit g on [lo, hi], splitting panels until the coefficient tail dies out.
fn fit_adaptive(g: &WeightFunction, lo: f64, hi: f64, scale: f64, out: &mut Vec<Panel>) {
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let p = Panel::fit(a, b, PANEL_DEGREE, |t| g.eval(t));
        if p.tail_magnitude() > PROXY_TOL * scale && (b - a) > 1e-6 {
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
        } else {
            out.push(p);
        }
    }
    out.sort_by(|x, y| x.lo.partial_cmp(&y.lo).unwrap());
}

fn seed_breaks(g: &WeightFunction, t_end: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if let WeightFamily::Tabulated(tab) = g.family() {
        // Cells of the interpolant are cubics; panel edges on the samples
        // keep the proxies exact.
        let grid_end = tab.grid_end().min(t_end);
        let mut t = 0.0;
        let step = (grid_end / 512.0).max(1e-9);
        while t < grid_end - 1e-12 {
            t = (t + step).min(grid_end);
            breaks.push(t);
        }
    }
    // Geometric widths from ~t_end/2^12 up to the cutoff.
    let mut w = t_end / 4096.0;
    let mut t = *breaks.last().unwrap();
    while t < t_end {
        t = (t + w).min(t_end);
        breaks.push(t);
        w *= 1.6;
    }
    breaks
}

fn build_table(g: &WeightFunction, r: usize, t_end: f64) -> Result<Table> {
    let scale = g.eval(0.0).max(g.eval(t_end * 0.5)).max(1e-300);
    let seeds = seed_breaks(g, t_end);
    let mut g_panels: Vec<Panel> = Vec::new();
    for w in seeds.windows(2) {
        fit_adaptive(g, w[0], w[1], scale, &mut g_panels);
    }
    let breaks: Vec<f64> = g_panels.iter().map(|p| p.lo).chain(core::iter::once(t_end)).collect();

    // Left-anchored primitives g_k.
    let mut g_rows: Vec<Vec<Panel>> = Vec::with_capacity(r);
    let mut prev: &[Panel] = &g_panels;
    for _ in 1..=r {
        let mut acc = 0.0;
        let mut row = Vec::with_capacity(prev.len());
        for p in prev {
            let f = p.antiderivative(acc);
            acc = f.eval(f.hi);
            row.push(f);
        }
        g_rows.push(row);
        prev = g_rows.last().unwrap();
    }

    // Right-anchored primitives P_k: P_{k+1}(t) = F(t) − F(t_end) with F a
    // left-anchored primitive of P_k, and P_k treated as zero past t_end.
    let mut p_rows: Vec<Vec<Panel>> = Vec::with_capacity(r + 1);
    p_rows.push(g_panels);
    for k in 1..=r {
        let mut acc = 0.0;
        let mut row = Vec::with_capacity(p_rows[k - 1].len());
        for p in &p_rows[k - 1] {
            let f = p.antiderivative(acc);
            acc = f.eval(f.hi);
            row.push(f);
        }
        for f in row.iter_mut() {
            f.coef[0] -= acc;
        }
        p_rows.push(row);
    }

    Ok(Table { breaks, p_rows, g_rows, t_end })
}

/// The right-anchor neglects ∫ past t_end; accept the table only when every
/// P_k has genuinely died out before the cutoff.
fn anchors_resolved(tab: &Table, r: usize) -> bool {
    let probe = tab.t_end * 0.98;
    for k in 1..=r {
        let at_zero = tab.p_rows[k][0].eval(0.0).abs().max(1e-300);
        let idx = tab.panel_index(probe);
        let near_end = tab.p_rows[k][idx].eval(probe).abs();
        if near_end > ANCHOR_TOL * at_zero {
            return false;
        }
    }
    true
}

fn tail_constants(tab: &Table, r: usize) -> Vec<f64> {
    (0..r)
        .map(|k| {
            let int: f64 = tab.p_rows[k].iter().map(Panel::integral).sum();
            if k % 2 == 0 {
                int
            } else {
                -int
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Domain, WeightFamily, WeightFunction};

    fn exp_weight() -> WeightFunction {
        WeightFunction::new(
            WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 },
            Domain::HalfLine,
        )
        .unwrap()
    }

    #[test]
    fn exponential_tail_constants() {
        let calc = GCalculus::build(&exp_weight(), 3, 1e-12).unwrap();
        for &a in calc.a_consts() {
            assert!((a - 1.0).abs() < 1e-14);
        }
        // g_1(t) = 1 − e^{−t}
        for i in 0..=20 {
            let t = i as f64 * 0.5;
            assert!((calc.gk(1, t) - (1.0 - exp(-t))).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_pk_closed_form() {
        let calc = GCalculus::build(&exp_weight(), 4, 1e-12).unwrap();
        for k in 1..=4usize {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..=40 {
                let t = i as f64 * 0.25;
                assert!((calc.pk(k, t) - sign * exp(-t)).abs() < 1e-13, "k = {k}, t = {t}");
            }
        }
        // P_1(0) = −1, P_2(ln 2) = 1/2
        assert!((calc.pk(1, 0.0) + 1.0).abs() < 1e-14);
        assert!((calc.pk(2, ln(2.0)) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn numeric_route_agrees_with_closed_form() {
        let g = exp_weight();
        let exact = GCalculus::build(&g, 3, 1e-12).unwrap();
        let numeric = GCalculus::build_numeric(&g, 3, 1e-12).unwrap();
        for k in 0..3 {
            assert!((exact.a_consts()[k] - numeric.a_consts()[k]).abs() < 1e-11);
        }
        for k in 0..=3usize {
            for i in 0..=100 {
                let t = 10.0 * i as f64 / 100.0;
                assert!(
                    (exact.pk(k, t) - numeric.pk(k, t)).abs() < 1e-10,
                    "P_{k}({t}): {} vs {}",
                    exact.pk(k, t),
                    numeric.pk(k, t)
                );
                assert!((exact.gk(k, t) - numeric.gk(k, t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pk_zero_identity_links_tail_constants() {
        // P_k(0) = (−1)^k A_{k−1}
        let g = WeightFunction::new(
            WeightFamily::ExpDecay { base: 0.0, amplitude: 2.0, rate: 1.5 },
            Domain::HalfLine,
        )
        .unwrap();
        for calc in [GCalculus::build(&g, 4, 1e-12).unwrap(), GCalculus::build_numeric(&g, 4, 1e-12).unwrap()] {
            for k in 1..=4usize {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let lhs = calc.pk(k, 0.0);
                let rhs = sign
                    * if k - 1 < calc.a_consts().len() {
                        calc.a_consts()[k - 1]
                    } else {
                        // A_r is not stored; integrate |P_r| directly.
                        quad::integrate(&|t| calc.pk(k - 1, t).abs(), 0.0, calc.tail_cutoff(1e-15), 1e-13)
                    };
                assert!((lhs - rhs).abs() < 1e-10, "k = {k}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn finite_differences_recover_pk_chain() {
        let calc = GCalculus::build_numeric(&exp_weight(), 3, 1e-12).unwrap();
        let h = 1e-4;
        for k in 1..=3usize {
            for i in 1..=30 {
                let t = 8.0 * i as f64 / 30.0;
                let fd = (calc.pk(k, t + h) - calc.pk(k, t - h)) / (2.0 * h);
                assert!((fd - calc.pk(k - 1, t)).abs() < 10.0 * h * h, "k = {k}, t = {t}");
            }
        }
    }

    #[test]
    fn power_decay_calculus() {
        // g = (1+t)^{−4}, r = 2: A_0 = 1/3, A_1 = 1/6,
        // P_1 = −(1+t)^{−3}/3, P_2 = (1+t)^{−2}/6.
        let g = WeightFunction::new(
            WeightFamily::PowerDecay { base: 0.0, amplitude: 1.0, exponent: 4.0 },
            Domain::HalfLine,
        )
        .unwrap();
        let calc = GCalculus::build(&g, 2, 1e-12).unwrap();
        assert!((calc.a_consts()[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((calc.a_consts()[1] - 1.0 / 6.0).abs() < 1e-10);
        for i in 0..=20 {
            let t = i as f64;
            let p1 = -1.0 / (3.0 * (1.0 + t).powi(3));
            let p2 = 1.0 / (6.0 * (1.0 + t).powi(2));
            assert!((calc.pk(1, t) - p1).abs() < 2e-9, "t = {t}");
            assert!((calc.pk(2, t) - p2).abs() < 2e-9, "t = {t}");
        }
    }

    #[test]
    fn divergent_weights_are_rejected() {
        let c = WeightFunction::new(WeightFamily::Constant(1.0), Domain::HalfLine).unwrap();
        assert!(matches!(GCalculus::build(&c, 2, 1e-12), Err(Error::Divergent(_))));
        let slow = WeightFunction::new(
            WeightFamily::PowerDecay { base: 0.0, amplitude: 1.0, exponent: 1.0 },
            Domain::HalfLine,
        )
        .unwrap();
        assert!(matches!(GCalculus::build(&slow, 1, 1e-12), Err(Error::Divergent(_))));
    }

    #[test]
    fn tail_cutoff_bounds_the_tail() {
        let calc = GCalculus::build(&exp_weight(), 2, 1e-12).unwrap();
        let t = calc.tail_cutoff(1e-10);
        assert!((exp(-t) - 1e-10).abs() < 1e-11);
    }
}
