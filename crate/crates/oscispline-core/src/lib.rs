//! Maximally oscillating perfect g-splines on segments and the half-line.
//!
//! A perfect g-spline of order `r` is a `C^{r-1}` function whose r-th
//! derivative equals `±g` for a positive weight `g`, with the sign flipping
//! at finitely many knots. This crate constructs the splines that oscillate
//! maximally between weighted envelopes `-C·f_-` and `C·f_+`, computes the
//! associated extremal constants `C_n(α)` and `C_0`, and evaluates the
//! modulus of continuity of the k-th differentiation operator on the
//! weighted class `W^r_{f,g}[0,∞)`.
//!
//! The crate is `no_std` compatible (requires `alloc`); the companion
//! `oscispline` crate adds the CLI and file formats.
//!
//! Module map:
//!
//! * [`weights`] — weight functions `f`, `f₋`, `f₊`, `g`, the asymmetric
//!   weighted norm and the standing-assumption checker.
//! * [`calculus`] — adaptive quadrature, iterated primitives `g_k`, the tail
//!   constants `A_k` and the right-anchored primitives `P_k`.
//! * [`spline`] — the perfect g-spline data model and evaluator.
//! * [`zerofit`] — knots from prescribed zeros on a segment.
//! * [`oscillate`] — equioscillation solvers on segments and the half-line,
//!   and the curves `α ↦ C_n(α)`.
//! * [`modulus`] — `C_0`, splines with a prescribed norm, the least
//!   deviating primitive and the modulus of continuity `ω`.
//! * [`oracle`] — independent brute-force verifiers (grid search plus
//!   Simpson quadrature, no shared caches with the main path).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calculus;
pub mod error;
pub mod modulus;
pub mod oracle;
pub mod oscillate;
pub mod quad;
pub mod spline;
pub mod weights;
pub mod zerofit;

mod cheb;
mod util;

pub use error::{Error, Result};
pub use weights::{Domain, WeightFamily, WeightFunction};
