//! Chebyshev interpolants on panels.
//!
//! Each panel stores coefficients of a first-kind Chebyshev series fitted at
//! second-kind nodes. Series can be evaluated (Clenshaw), integrated over the
//! whole panel, and antidifferentiated in closed form, which is what the
//! iterated-primitive tables in [`crate::calculus`] are built from.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    /// Coefficients a_k of sum a_k T_k(x), x the affine map of [lo,hi] to [-1,1].
    pub coef: Vec<f64>,
}

impl Panel {
    /// Interpolate `f` at `n + 1` Chebyshev points of the second kind.
    pub fn fit<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Self {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let vals: Vec<f64> = (0..=n)
            .map(|j| {
                let x = libm::cos(core::f64::consts::PI * j as f64 / n as f64);
                f(mid + half * x)
            })
            .collect();
        let mut coef = vec![0.0; n + 1];
        for (k, c) in coef.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in vals.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * libm::cos(core::f64::consts::PI * (j * k) as f64 / n as f64);
            }
            let delta = if k == 0 || k == n { 0.5 } else { 1.0 };
            *c = 2.0 * delta * acc / n as f64;
        }
        Panel { lo, hi, coef }
    }

    #[inline]
    fn to_unit(&self, t: f64) -> f64 {
        (2.0 * t - (self.lo + self.hi)) / (self.hi - self.lo)
    }

    /// Clenshaw evaluation at `t` (t given in panel coordinates).
    pub fn eval(&self, t: f64) -> f64 {
        let x = self.to_unit(t);
        let a = &self.coef;
        if a.len() == 1 {
            return a[0];
        }
        let mut b2 = 0.0;
        let mut b1 = a[a.len() - 1];
        for &ak in a[1..a.len() - 1].iter().rev() {
            let tmp = 2.0 * x * b1 - b2 + ak;
            b2 = b1;
            b1 = tmp;
        }
        x * b1 - b2 + a[0]
    }

    /// Definite integral over the whole panel.
    pub fn integral(&self) -> f64 {
        let half = 0.5 * (self.hi - self.lo);
        let mut acc = 0.0;
        for (k, &a) in self.coef.iter().enumerate().step_by(2) {
            acc += a * 2.0 / (1.0 - (k * k) as f64);
        }
        acc * half
    }

    /// Antiderivative series on the same panel, anchored so that the result
    /// takes `value_at_lo` at the left endpoint.
    pub fn antiderivative(&self, value_at_lo: f64) -> Panel {
        let half = 0.5 * (self.hi - self.lo);
        let a = &self.coef;
        let n = a.len();
        let mut b = vec![0.0; n + 1];
        let get = |k: usize| if k < n { a[k] } else { 0.0 };
        for k in 1..=n {
            let prev = if k == 1 { 2.0 * get(0) } else { get(k - 1) };
            b[k] = half * (prev - get(k + 1)) / (2.0 * k as f64);
        }
        let mut p = Panel { lo: self.lo, hi: self.hi, coef: b };
        let at_lo = p.eval(self.lo);
        p.coef[0] += value_at_lo - at_lo;
        p
    }

    /// Magnitude of the trailing coefficient pair, an error proxy for the fit.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.coef.len();
        if n < 3 {
            return 0.0;
        }
        self.coef[n - 1].abs() + self.coef[n - 2].abs()
    }
}
