//! Small numeric helpers: libm shims, dense linear solve, 1-D refinement.

use alloc::vec;
use alloc::vec::Vec;

// Math via libm so the crate builds without std and produces identical
// results regardless of the feature set.
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn powi(x: f64, mut n: usize) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
/// n! as f64, n small.
#[inline]
pub fn factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    for i in 2..=n {
        acc *= i as f64;
    }
    acc
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major n×n. Returns None when the matrix is numerically singular.
pub fn solve_dense(a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in row + 1..n {
            s -= a[row * n + j] * x[j];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Maximize `h` over `[lo, hi]`: coarse scan with `samples` points, then a
/// golden-section polish of the best bracket. Returns (argmax, max).
pub fn scan_max<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    debug_assert!(hi >= lo);
    if hi <= lo {
        return (lo, h(lo));
    }
    let m = samples.max(4);
    let step = (hi - lo) / m as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    let mut vals = vec![0.0; m + 1];
    for (i, v) in vals.iter_mut().enumerate() {
        let t = lo + step * i as f64;
        *v = h(t);
        if *v > best_v {
            best_v = *v;
            best_i = i;
        }
    }
    let a = if best_i == 0 { lo } else { lo + step * (best_i - 1) as f64 };
    let b = if best_i == m { hi } else { lo + step * (best_i + 1) as f64 };
    let (t, v) = golden_max(&h, a, b, (hi - lo) * 1e-11);
    if v >= best_v {
        (t, v)
    } else {
        (lo + step * best_i as f64, best_v)
    }
}

/// Golden-section maximization on a bracket.
pub fn golden_max<F: Fn(f64) -> f64>(h: &F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = h(c);
    let mut fd = h(d);
    for _ in 0..80 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = h(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section minimization on a bracket; returns (argmin, min).
pub fn golden_min<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (t, v) = golden_max(&|x| -h(x), a, b, xtol);
    (t, -v)
}

/// Bisection root of a sign change bracketed by `(a, fa)` and `(b, fb)`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, xtol: f64) -> f64 {
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_3x3() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((x[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_max_finds_interior_peak() {
        let (t, v) = scan_max(|x| -(x - 0.37).powi(2), 0.0, 1.0, 64);
        assert!((t - 0.37).abs() < 1e-8);
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn bisect_finds_root() {
        let f = |x: f64| x * x - 2.0;
        let r = bisect_root(&f, 0.0, 2.0, f(0.0), 1e-14);
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
