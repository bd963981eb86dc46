//! Moment statistics for Monte Carlo runs.
//!
//! Everything here reduces sample vectors in the canonical pairwise order,
//! so estimates are bit-identical across worker counts. Confidence
//! intervals are mean +- 4 standard errors throughout.

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, pairwise_sum_by};

/// Half-width of every confidence interval, in standard errors.
pub const CI_WIDTH: f64 = 4.0;

/// (E ||.||^p)^{1/p} with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
}

#[inline]
fn pow_p(x: f64, p: f64) -> f64 {
    // Multiplication keeps dyadic inputs exact at the common exponents.
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.powf(p)
    }
}

#[inline]
fn root_p(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else if p == 4.0 {
        x.sqrt().sqrt()
    } else {
        x.powf(1.0 / p)
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let ss = pairwise_sum_by(xs, |x| {
        let d = *x - mean;
        d * d
    });
    let se = (ss / (n * (n - 1.0))).sqrt();
    Ok((mean, se))
}

/// Delta-method estimate of (E x^p)^{1/p} from per-sample values x >= 0.
///
/// The standard error of the root is se(mean) * mean^{1/p - 1} / p; when
/// the mean is numerically zero the raw se of the mean is reported instead
/// of dividing by it.
pub fn estimate_moment(values: &[f64], p: f64) -> Result<MomentEstimate> {
    if values.len() < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must lie in [1, inf), got {p}")));
    }
    let powered: Vec<f64> = values.iter().map(|x| pow_p(*x, p)).collect();
    let (mean, se_mean) = mean_and_se(&powered)?;
    let value = root_p(mean, p);
    let standard_error = if mean < 1e-12 {
        se_mean
    } else {
        se_mean * mean.powf(1.0 / p - 1.0) / p
    };
    Ok(MomentEstimate {
        p,
        value,
        standard_error,
        samples: values.len(),
    })
}

/// Ratio of two estimated quantities with a first-order propagated
/// standard error and a +-4 sigma interval. The denominator must be
/// positive.
pub fn ratio_ci(
    lhs: f64,
    lhs_se: f64,
    rhs: f64,
    rhs_se: f64,
) -> Result<(f64, f64, f64)> {
    if !(rhs > 0.0) {
        return Err(Error::invalid(format!(
            "ratio denominator must be positive, got {rhs}"
        )));
    }
    let ratio = lhs / rhs;
    let sigma = if lhs.abs() > 0.0 {
        ratio.abs() * ((lhs_se / lhs).powi(2) + (rhs_se / rhs).powi(2)).sqrt()
    } else {
        lhs_se / rhs
    };
    Ok((ratio, ratio - CI_WIDTH * sigma, ratio + CI_WIDTH * sigma))
}

/// Adjusted binomial proportion: point estimate k/n with the Agresti-Coull
/// standard error, which stays positive at the boundary counts.
pub fn binomial_estimate(successes: usize, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("binomial estimate needs n >= 1"));
    }
    let nf = n as f64;
    let p_hat = successes as f64 / nf;
    let p_adj = (successes as f64 + 2.0) / (nf + 4.0);
    let se = (p_adj * (1.0 - p_adj) / nf).sqrt();
    Ok((p_hat, se))
}

/// Median by sorting a copy; the even-size convention averages the two
/// central order statistics.
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        Ok(v[n / 2])
    } else {
        Ok(0.5 * (v[n / 2 - 1] + v[n / 2]))
    }
}

/// Empirical quantile at `frac` in [0, 1]: the order statistic at the
/// rounded fractional rank. Deterministic and exact on the sample.
pub fn quantile(xs: &[f64], frac: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::invalid(format!(
            "quantile level must lie in [0, 1], got {frac}"
        )));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * frac).round() as usize;
    Ok(v[idx])
}
