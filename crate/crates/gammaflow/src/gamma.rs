//! Operators from L2(0,T;H) into E and their gamma-norms.
//!
//! An operator is a dense d_E x (bins * d_H) matrix acting on step-function
//! coefficients; column i*d_H+k is the image of the basis element e_{i,k}.
//! Three norm evaluators cover the use cases:
//!
//! * exact Frobenius, valid when E is the Hilbert variant, where the
//!   gamma-norm and the Hilbert-Schmidt norm coincide;
//! * Gaussian Monte Carlo, valid everywhere: the root of the mean squared
//!   E-norm of images of standard Gaussian coefficient vectors;
//! * the square-function norm, valid for Lq targets, an exact computation
//!   of the pointwise-L2-in-time mixed norm.

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, pairwise_sum_by, Matrix};
use crate::rng::{stream, GaussianSampler, Purpose};
use crate::space::{BanachSpace, L2StepFunction, TimeGrid};
use rayon::prelude::*;

/// Which evaluator produced a [`GammaNormEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    ExactHilbert,
    GaussianMc,
    SquareFunction,
}

impl NormMethod {
    pub fn name(self) -> &'static str {
        match self {
            NormMethod::ExactHilbert => "exact_hilbert",
            NormMethod::GaussianMc => "gaussian_mc",
            NormMethod::SquareFunction => "square_function",
        }
    }
}

/// A gamma-norm value with its sampling error (zero for exact methods).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaNormEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub method: NormMethod,
}

/// A finite-rank operator from L2(0,T;H) into E.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaOperator {
    pub grid: TimeGrid,
    pub d_h: usize,
    pub space: BanachSpace,
    pub matrix: Matrix,
}

impl GammaOperator {
    pub fn new(grid: TimeGrid, d_h: usize, space: BanachSpace, matrix: Matrix) -> Result<Self> {
        if d_h == 0 {
            return Err(Error::invalid("H must have dimension at least 1"));
        }
        if matrix.rows != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "operator row count vs target dimension",
                expected: space.dim(),
                got: matrix.rows,
            });
        }
        if matrix.cols != grid.bins * d_h {
            return Err(Error::DimensionMismatch {
                context: "operator column count vs bins * d_H",
                expected: grid.bins * d_h,
                got: matrix.cols,
            });
        }
        Ok(GammaOperator {
            grid,
            d_h,
            space,
            matrix,
        })
    }

    pub fn zero(grid: TimeGrid, d_h: usize, space: BanachSpace) -> Self {
        let matrix = Matrix::zeros(space.dim(), grid.bins * d_h);
        GammaOperator {
            grid,
            d_h,
            space,
            matrix,
        }
    }

    /// Rank-one operator f (x) g : h |-> <f, h>_{L2} x.
    pub fn rank_one(f: &L2StepFunction, x: &[f64], space: BanachSpace) -> Result<Self> {
        if x.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "rank-one vector vs target dimension",
                expected: space.dim(),
                got: x.len(),
            });
        }
        let cols = f.coeffs.len();
        let mut matrix = Matrix::zeros(space.dim(), cols);
        for (s, xs) in x.iter().enumerate() {
            for c in 0..cols {
                matrix.data[s * cols + c] = xs * f.coeffs[c];
            }
        }
        GammaOperator::new(f.grid, f.d_h, space, matrix)
    }

    /// Apply to a step function: the E-vector A c_f.
    pub fn apply(&self, f: &L2StepFunction) -> Result<Vec<f64>> {
        if f.grid != self.grid || f.d_h != self.d_h {
            return Err(Error::invalid(
                "operator and step function live on different discretizations",
            ));
        }
        self.matrix.matvec(&f.coeffs)
    }

    /// Column (bin, coord) as an E-vector.
    pub fn column(&self, bin: usize, coord: usize) -> Vec<f64> {
        let c = bin * self.d_h + coord;
        (0..self.matrix.rows)
            .map(|r| self.matrix.get(r, c))
            .collect()
    }
}

/// Exact gamma-norm for Hilbert targets: the Frobenius norm.
///
/// Rejects non-Hilbert targets, where no exact finite formula applies.
pub fn gamma_norm_exact(r: &GammaOperator) -> Result<f64> {
    if !r.space.is_hilbert() {
        return Err(Error::UnsupportedMethod(
            "gamma_norm_exact needs a Hilbert target; use gamma_norm_mc or square_function_norm"
                .into(),
        ));
    }
    Ok(r.matrix.frobenius_norm())
}

/// Monte Carlo gamma-norm: sqrt of the mean of ||A g||_E^2 over standard
/// Gaussian coefficient vectors g.
///
/// Sample j draws from the (seed, GammaMc, j) stream, so the estimate is
/// bit-identical however samples are scheduled across workers. The standard
/// error of the root is the delta-method transform of the standard error of
/// the mean square; when the mean square is below 1e-12 the untransformed
/// error is reported to avoid dividing by a vanishing derivative.
pub fn gamma_norm_mc(
    r: &GammaOperator,
    n_samples: usize,
    seed: u64,
    sampler: GaussianSampler,
) -> Result<GammaNormEstimate> {
    gamma_norm_mc_series(r, n_samples, seed, sampler, 0)
}

/// As [`gamma_norm_mc`], with a series tag giving each caller in a batch
/// its own disjoint stream range.
pub fn gamma_norm_mc_series(
    r: &GammaOperator,
    n_samples: usize,
    seed: u64,
    sampler: GaussianSampler,
    series: u64,
) -> Result<GammaNormEstimate> {
    if n_samples < 2 {
        return Err(Error::invalid(format!(
            "gamma_norm_mc needs at least 2 samples, got {n_samples}"
        )));
    }
    assert!(series < (1 << 24) && n_samples < (1 << 24));
    let cols = r.matrix.cols;
    let squares: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, Purpose::GammaMc, (series << 24) | j as u64);
            let g: Vec<f64> = (0..cols).map(|_| sampler.sample(&mut rng)).collect();
            let y = r.matrix.matvec(&g).expect("validated shape");
            let n = r.space.norm(&y).expect("validated shape");
            n * n
        })
        .collect();
    Ok(estimate_from_squares(&squares, NormMethod::GaussianMc))
}

pub(crate) fn estimate_from_squares(squares: &[f64], method: NormMethod) -> GammaNormEstimate {
    let n = squares.len();
    let mean = pairwise_sum(squares) / n as f64;
    let var = pairwise_sum_by(squares, |x| (x - mean) * (x - mean)) / (n as f64 - 1.0);
    let se_mean = (var / n as f64).sqrt();
    let value = mean.max(0.0).sqrt();
    let standard_error = if mean < 1e-12 {
        se_mean
    } else {
        se_mean / (2.0 * value)
    };
    GammaNormEstimate {
        value,
        standard_error,
        samples: n,
        method,
    }
}

/// Exact square-function norm for Lq targets:
/// || s -> (sum_i dt sum_k phi(t_i, s)[k]^2)^{1/2} ||_{Lq},
/// where phi(t_i, s)[k] = dt^{-1/2} A[s][(i,k)]. The dt factors cancel, so
/// this is the weighted Lq norm of the row-wise Euclidean norms.
pub fn square_function_norm(r: &GammaOperator) -> Result<f64> {
    let BanachSpace::Lq { q, weights } = &r.space else {
        return Err(Error::UnsupportedMethod(
            "square_function_norm needs an Lq target; use gamma_norm_exact for Hilbert targets"
                .into(),
        ));
    };
    let mut acc = 0.0;
    for s in 0..r.matrix.rows {
        let row_sq = pairwise_sum_by(r.matrix.row(s), |v| v * v);
        acc += weights[s] * row_sq.powf(q / 2.0);
    }
    Ok(acc.powf(1.0 / q))
}

/// Evaluate the gamma-norm by the exact method the target space admits:
/// Frobenius for Hilbert, square-function for Lq.
pub fn gamma_norm_surrogate(r: &GammaOperator) -> f64 {
    if r.space.is_hilbert() {
        r.matrix.frobenius_norm()
    } else {
        square_function_norm(r).expect("Lq target")
    }
}

/// Composition B2 A B1 with the same target space (B2 square).
pub fn compose_ideal(b2: &Matrix, r: &GammaOperator, b1: &Matrix) -> Result<GammaOperator> {
    if b2.rows != r.space.dim() {
        return Err(Error::DimensionMismatch {
            context: "compose_ideal B2 rows (pass a target space explicitly to change dimension)",
            expected: r.space.dim(),
            got: b2.rows,
        });
    }
    compose_ideal_into(b2, r, b1, r.space.clone())
}

/// Composition B2 A B1 into an explicitly given target space.
///
/// B1 must be square: it reparametrizes the fixed discretized L2(0,T;H).
pub fn compose_ideal_into(
    b2: &Matrix,
    r: &GammaOperator,
    b1: &Matrix,
    target: BanachSpace,
) -> Result<GammaOperator> {
    if b2.cols != r.matrix.rows {
        return Err(Error::DimensionMismatch {
            context: "compose_ideal B2 columns",
            expected: r.matrix.rows,
            got: b2.cols,
        });
    }
    if b2.rows != target.dim() {
        return Err(Error::DimensionMismatch {
            context: "compose_ideal B2 rows vs target dimension",
            expected: target.dim(),
            got: b2.rows,
        });
    }
    if b1.rows != r.matrix.cols || b1.cols != r.matrix.cols {
        return Err(Error::DimensionMismatch {
            context: "compose_ideal B1 must be square on coefficient space",
            expected: r.matrix.cols,
            got: if b1.rows != r.matrix.cols {
                b1.rows
            } else {
                b1.cols
            },
        });
    }
    let composed = b2.matmul(&r.matrix)?.matmul(b1)?;
    GammaOperator::new(r.grid, r.d_h, target, composed)
}

/// Restrict to [0, t]: zero all columns of bins strictly after the snapped
/// index. Snapping rounds half up. Idempotent; two truncations compose to
/// the minimum time, exactly.
pub fn truncate_time(r: &GammaOperator, t: f64) -> Result<GammaOperator> {
    let keep_bins = r.grid.snap(t)?;
    let mut out = r.clone();
    zero_trailing_bins(&mut out, keep_bins);
    Ok(out)
}

pub(crate) fn zero_trailing_bins(r: &mut GammaOperator, keep_bins: usize) {
    let cols = r.matrix.cols;
    let first_zeroed = keep_bins * r.d_h;
    for row in 0..r.matrix.rows {
        for c in first_zeroed..cols {
            r.matrix.data[row * cols + c] = 0.0;
        }
    }
}

/// Right translate by delta >= 0, snapped to whole bins: column block i of
/// the result is block i - shift of the input, vacated blocks are zero.
/// Blocks pushed past the horizon are dropped, so the Frobenius norm never
/// increases; delta >= T yields the zero operator. On grid-aligned shifts
/// translation is an exact semigroup.
pub fn right_translate(r: &GammaOperator, delta: f64) -> Result<GammaOperator> {
    let shift = r.grid.snap_shift(delta)?;
    let bins = r.grid.bins;
    let mut out = GammaOperator::zero(r.grid, r.d_h, r.space.clone());
    if shift >= bins {
        return Ok(out);
    }
    let cols = r.matrix.cols;
    let block = r.d_h;
    for row in 0..r.matrix.rows {
        for i in shift..bins {
            let src = (i - shift) * block;
            let dst = i * block;
            for k in 0..block {
                out.matrix.data[row * cols + dst + k] = r.matrix.data[row * cols + src + k];
            }
        }
    }
    Ok(out)
}

/// The two sides of the mixed-norm comparison for a weighted family of
/// operators over a finite sample space S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FubiniComparison {
    /// (sum_s w_s ||X_s||_gamma^p)^{1/p}: the Lp(S; gamma) norm.
    pub lhs: f64,
    /// gamma-norm of the assembled operator into Lp(S; E).
    pub rhs: f64,
    /// True when both sides were computed in closed form (p = 2, Hilbert E).
    pub exact: bool,
}

/// Compare the Lp(S; gamma)-norm of a weighted operator family with the
/// gamma-norm of the assembled operator into Lp(S; E).
///
/// Weights must be strictly positive and sum to 1 within 1e-12. For p = 2
/// with a Hilbert target both sides are exact and equal; otherwise each
/// non-exact side is estimated by Gaussian Monte Carlo on its own stream
/// ranges.
pub fn gamma_fubini_compare(
    samples: &[(GammaOperator, f64)],
    p: f64,
    n_mc: usize,
    seed: u64,
    sampler: GaussianSampler,
) -> Result<FubiniComparison> {
    if samples.is_empty() {
        return Err(Error::invalid("fubini comparison needs at least one sample"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must lie in [1, inf), got {p}")));
    }
    let (first, _) = &samples[0];
    for (op, w) in samples {
        if op.grid != first.grid || op.d_h != first.d_h || op.space != first.space {
            return Err(Error::invalid(
                "fubini samples must share grid, H dimension and target space",
            ));
        }
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::invalid(format!(
                "fubini weights must be strictly positive, got {w}"
            )));
        }
    }
    let total: f64 = samples.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "fubini weights must sum to 1 within 1e-12, got {total}"
        )));
    }

    let hilbert = first.space.is_hilbert();
    let exact = hilbert && p == 2.0;

    // lhs: per-sample gamma-norms, exact when available.
    let lhs = if hilbert {
        let terms: Vec<f64> = samples
            .iter()
            .map(|(op, w)| w * op.matrix.frobenius_norm().powf(p))
            .collect();
        pairwise_sum(&terms).powf(1.0 / p)
    } else {
        let mut terms = Vec::with_capacity(samples.len());
        for (idx, (op, w)) in samples.iter().enumerate() {
            let est = gamma_norm_mc_series(op, n_mc, seed, sampler, idx as u64 + 1)?;
            terms.push(w * est.value.powf(p));
        }
        pairwise_sum(&terms).powf(1.0 / p)
    };

    // rhs: the assembled operator g |-> (X_s g)_s with norm
    // (sum_s w_s ||X_s g||_E^p)^{1/p}.
    let rhs = if exact {
        let terms: Vec<f64> = samples
            .iter()
            .map(|(op, w)| {
                let f = op.matrix.frobenius_norm();
                w * f * f
            })
            .collect();
        pairwise_sum(&terms).sqrt()
    } else {
        if n_mc < 2 {
            return Err(Error::invalid(format!(
                "fubini Monte Carlo needs at least 2 samples, got {n_mc}"
            )));
        }
        let cols = first.matrix.cols;
        let squares: Vec<f64> = (0..n_mc)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, Purpose::FubiniMc, j as u64);
                let g: Vec<f64> = (0..cols).map(|_| sampler.sample(&mut rng)).collect();
                let terms: Vec<f64> = samples
                    .iter()
                    .map(|(op, w)| {
                        let y = op.matrix.matvec(&g).expect("validated shape");
                        let n = op.space.norm(&y).expect("validated shape");
                        w * n.powf(p)
                    })
                    .collect();
                let norm = pairwise_sum(&terms).powf(1.0 / p);
                norm * norm
            })
            .collect();
        estimate_from_squares(&squares, NormMethod::GaussianMc).value
    };

    Ok(FubiniComparison { lhs, rhs, exact })
}
