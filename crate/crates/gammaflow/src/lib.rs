//! Finite-dimensional engine for stochastic integration of operator-valued
//! processes against cylindrical Brownian motion, with exact combinatorial
//! oracles for the identities that admit them.
//!
//! Everything is discretized on a uniform grid over [0, T]: step functions in
//! L2(0,T;H) become coefficient arrays, operators from L2(0,T;H) into a
//! finite-dimensional Banach space E become dense matrices, and the stochastic
//! integral becomes a sum of coefficient matrices times Brownian increments.
//! On top of that sit three layers:
//!
//! * [`gamma`]: gamma-norm evaluators (exact Frobenius for Hilbert targets,
//!   Gaussian Monte Carlo, square-function norms for Lq targets) plus the
//!   ideal property, time truncation, right translation and the
//!   Fubini-type comparison between mixed norms.
//! * [`stochastic`]: path bundles with decoupled copies, elementary adapted
//!   processes with structurally predictable coefficient rules, integrals,
//!   running maxima, stopping times and localization.
//! * [`oracle`]: exact enumeration over sign trees, the tangent-sequence
//!   decoupling transform, brute-force UMD ratios and the discrete
//!   martingale representation. Probabilities are dyadic rationals handled
//!   as integer counts, so the advertised identities hold with zero
//!   tolerance.
//!
//! [`harness`] wires these into named ratio experiments with declared
//! predicates, and [`cli`]/[`report`] expose them as a deterministic
//! command-line tool whose reports are byte-identical for a fixed seed
//! regardless of worker count.

// Index loops mirror the row/column layout of the dense kernels, and the
// negated comparisons (`!(x > 0.0)`) are deliberate NaN guards.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod gamma;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod space;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
