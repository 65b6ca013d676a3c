//! Knots of the boundary-anchored segment spline with prescribed zeros.
//!
//! Given zeros `s_1 < … < s_n` in `[0, A)`, find knots so that the spline
//! with vanishing boundary derivatives at `A` also vanishes at every `s_k`.
//! Solved by damped Newton on the residual map `knots ↦ (G(s_1), …, G(s_n))`
//! with knots initialized interleaved with the zeros; a homotopy in the zero
//! vector backs the solver up when a cold Newton stalls.
//!
//! The sign is normalized so that `G > 0` left of the first zero (or just
//! right of it when `s_1 = 0`).

use crate::error::{ConvergenceFailure, Error, Result};
use crate::spline::PerfectGSpline;
use crate::util::solve_dense;
use crate::weights::WeightFunction;
use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct ZeroFitProblem {
    pub r: usize,
    pub end: f64,
    /// Strictly increasing, `0 <= s_1`, `s_n < end`.
    pub zeros: Vec<f64>,
    /// Residual tolerance relative to the knotless-spline magnitude.
    pub zero_tol: f64,
    pub max_iterations: usize,
}

impl ZeroFitProblem {
    pub fn new(r: usize, end: f64, zeros: Vec<f64>) -> Self {
        ZeroFitProblem { r, end, zeros, zero_tol: 1e-9, max_iterations: 60 }
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 || !(self.end > 0.0) || self.zeros.is_empty() {
            return Err(Error::PreconditionViolated(
                "zerofit needs r >= 1, end > 0 and at least one zero".to_string(),
            ));
        }
        if self.zeros[0] < 0.0 || *self.zeros.last().unwrap() >= self.end {
            return Err(Error::KnotsOutOfRange);
        }
        let min_gap = 1e-10 * self.end;
        let mut prev = self.zeros[0] - 2.0 * min_gap;
        for &s in &self.zeros {
            if s - prev < min_gap {
                return Err(Error::ZerosTooClose);
            }
            prev = s;
        }
        Ok(())
    }

    /// Sign convention: G positive on the interval right of `s_1 = 0`, or
    /// left of `s_1` when `s_1 > 0`.
    pub fn leading_sign(&self) -> i8 {
        let base = if self.r % 2 == 0 { 1i8 } else { -1i8 };
        if self.zeros[0] > 0.0 {
            base
        } else {
            -base
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZeroFitSolution {
    pub spline: PerfectGSpline,
    /// `max_k |G(s_k)|` relative to the knotless-spline magnitude.
    pub residual: f64,
    pub iterations: usize,
}

fn residuals(
    problem: &ZeroFitProblem,
    g: &Arc<WeightFunction>,
    knots: &[f64],
) -> Result<Vec<f64>> {
    let spline = PerfectGSpline::new_segment(
        problem.r,
        problem.end,
        knots.to_vec(),
        problem.leading_sign(),
        g.clone(),
    )?;
    Ok(problem.zeros.iter().map(|&s| spline.value(s)).collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn knots_valid(knots: &[f64], lo: f64, hi: f64) -> bool {
    let mut prev = lo;
    for &k in knots {
        if k <= prev || k >= hi {
            return false;
        }
        prev = k;
    }
    true
}

/// One damped-Newton descent from `knots`; returns (knots, residual, iters).
fn newton(
    problem: &ZeroFitProblem,
    g: &Arc<WeightFunction>,
    mut knots: Vec<f64>,
    scale: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = knots.len();
    let tol = problem.zero_tol * scale;
    let mut f = residuals(problem, g, &knots)?;
    let mut stalls = 0usize;
    for iter in 0..max_iter {
        let fnorm = max_abs(&f);
        if fnorm <= tol {
            return Ok((knots, fnorm / scale, iter));
        }
        // Forward-difference Jacobian; steps shrunk near neighbouring knots.
        let mut jac = alloc::vec![0.0; n * n];
        for j in 0..n {
            let gap_r = if j + 1 < n { knots[j + 1] - knots[j] } else { problem.end - knots[j] };
            let h = (1e-6 * problem.end).min(0.25 * gap_r).max(1e-12);
            let mut pert = knots.clone();
            pert[j] += h;
            let fp = residuals(problem, g, &pert)?;
            for i in 0..n {
                jac[i * n + j] = (fp[i] - f[i]) / h;
            }
        }
        let mut rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let Some(dir) = solve_dense(&mut jac, &mut rhs) else {
            break;
        };
        // Backtrack: keep knots sorted in (0, end) and the residual falling.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..24 {
            let trial: Vec<f64> = knots.iter().zip(&dir).map(|(k, d)| k + lambda * d).collect();
            if knots_valid(&trial, 0.0, problem.end) {
                let ft = residuals(problem, g, &trial)?;
                if max_abs(&ft) < (1.0 - 1e-4 * lambda) * fnorm {
                    knots = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Ok((knots, max_abs(&f) / scale, max_iter))
}

fn interleaved_guess(zeros: &[f64], end: f64) -> Vec<f64> {
    let n = zeros.len();
    (0..n)
        .map(|k| {
            let next = if k + 1 < n { zeros[k + 1] } else { end };
            0.5 * (zeros[k] + next)
        })
        .collect()
}

/// Solve the prescribed-zero problem. The returned spline has exactly `n`
/// knots, vanishes at every `s_k`, and is sign-normalized.
pub fn fit_knots(problem: &ZeroFitProblem, g: &Arc<WeightFunction>) -> Result<ZeroFitSolution> {
    problem.validate()?;
    fit_knots_from(problem, g, interleaved_guess(&problem.zeros, problem.end))
}

/// Same, starting Newton from a caller-supplied knot vector (warm starts).
pub fn fit_knots_from(
    problem: &ZeroFitProblem,
    g: &Arc<WeightFunction>,
    initial_knots: Vec<f64>,
) -> Result<ZeroFitSolution> {
    problem.validate()?;
    let n = problem.zeros.len();
    let scale = {
        let knotless =
            PerfectGSpline::new_segment(problem.r, problem.end, Vec::new(), 1, g.clone())?;
        knotless.magnitude_scale()
    };
    let start = if initial_knots.len() == n && knots_valid(&initial_knots, 0.0, problem.end) {
        initial_knots
    } else {
        interleaved_guess(&problem.zeros, problem.end)
    };
    let (knots, residual, iterations) = newton(problem, g, start, scale, problem.max_iterations)?;
    if residual <= problem.zero_tol {
        let spline = PerfectGSpline::new_segment(
            problem.r,
            problem.end,
            knots,
            problem.leading_sign(),
            g.clone(),
        )?;
        return Ok(ZeroFitSolution { spline, residual, iterations });
    }

    // Homotopy fallback: walk the zero vector from an equispaced
    // configuration to the requested one, warm-starting each step.
    let easy: Vec<f64> = (1..=n).map(|k| problem.end * k as f64 / (n + 2) as f64).collect();
    let steps = 12;
    let mut knots = interleaved_guess(&easy, problem.end);
    let mut last = (knots.clone(), f64::INFINITY, 0);
    for step in 0..=steps {
        let theta = step as f64 / steps as f64;
        let zeros: Vec<f64> = easy
            .iter()
            .zip(&problem.zeros)
            .map(|(e, s)| (1.0 - theta) * e + theta * s)
            .collect();
        let sub = ZeroFitProblem { zeros, ..problem.clone() };
        last = newton(&sub, g, knots.clone(), scale, problem.max_iterations)?;
        knots = last.0.clone();
    }
    let (knots, residual, iterations) = last;
    if residual <= problem.zero_tol {
        let spline = PerfectGSpline::new_segment(
            problem.r,
            problem.end,
            knots,
            problem.leading_sign(),
            g.clone(),
        )?;
        Ok(ZeroFitSolution { spline, residual, iterations })
    } else {
        Err(Error::NoConvergence(Box::new(ConvergenceFailure {
            context: "zerofit Newton + homotopy".to_string(),
            residual,
            iterations,
            best_knots: knots,
        })))
    }
}

/// Finite-difference sensitivity `∂t_i/∂s_j` of the knots with respect to
/// the prescribed zeros, via warm-started re-solves.
pub fn knot_sensitivity(
    problem: &ZeroFitProblem,
    solution: &ZeroFitSolution,
    g: &Arc<WeightFunction>,
) -> Result<Vec<Vec<f64>>> {
    problem.validate()?;
    let n = problem.zeros.len();
    let h = 1e-5 * problem.end;
    let base = solution.spline.knots().to_vec();
    let mut jac = alloc::vec![alloc::vec![0.0; n]; n];
    for j in 0..n {
        let mut step = h;
        // Keep the perturbed zeros ordered.
        if j + 1 < n {
            step = step.min(0.25 * (problem.zeros[j + 1] - problem.zeros[j]));
        }
        step = step.min(0.25 * (problem.end - problem.zeros[n - 1]).max(1e-12));
        let solve_at = |s_j: f64| -> Result<Vec<f64>> {
            let mut zeros = problem.zeros.clone();
            zeros[j] = s_j;
            let sub = ZeroFitProblem { zeros, ..problem.clone() };
            Ok(fit_knots_from(&sub, g, base.clone())?.spline.knots().to_vec())
        };
        let up = solve_at(problem.zeros[j] + step)?;
        let down = if problem.zeros[j] - step >= 0.0 && (j == 0 || problem.zeros[j] - step > problem.zeros[j - 1]) {
            solve_at(problem.zeros[j] - step)?
        } else {
            base.clone()
        };
        let denom = if down == base { step } else { 2.0 * step };
        for i in 0..n {
            jac[i][j] = (up[i] - down[i]) / denom;
        }
    }
    Ok(jac)
}
