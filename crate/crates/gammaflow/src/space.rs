//! Discretized function spaces: the time grid, the source Hilbert space H,
//! the target Banach space E, and step functions in L2(0,T;H).
//!
//! The grid is uniform. Step functions are stored by their coefficients
//! against the orthonormal basis e_{i,k} = (1/sqrt(dt)) 1_{I_i} h_k, where
//! I_i is the i-th grid bin and h_k the canonical basis of H, so the L2
//! inner product is a plain coefficient dot product.

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum_by;
use serde::{Deserialize, Serialize};

/// Uniform partition of [0, T] into `bins` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub bins: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, bins: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be a positive finite real, got {horizon}"
            )));
        }
        if bins == 0 {
            return Err(Error::invalid("grid needs at least one bin"));
        }
        Ok(TimeGrid { horizon, bins })
    }

    /// Mesh width dt = T / bins.
    pub fn mesh(&self) -> f64 {
        self.horizon / self.bins as f64
    }

    /// Grid point t_i = i dt, valid for i in 0..=bins.
    pub fn time(&self, i: usize) -> f64 {
        // t_bins must be exactly the horizon.
        if i == self.bins {
            self.horizon
        } else {
            i as f64 * self.mesh()
        }
    }

    /// Snap a time in [0, T] to the nearest grid index, half rounds up.
    pub fn snap(&self, t: f64) -> Result<usize> {
        if !(t.is_finite() && t >= 0.0 && t <= self.horizon) {
            return Err(Error::invalid(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let idx = (t / self.mesh() + 0.5).floor() as usize;
        Ok(idx.min(self.bins))
    }

    /// Snap a nonnegative shift to a whole number of bins, half rounds up.
    pub fn snap_shift(&self, delta: f64) -> Result<usize> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::invalid(format!(
                "shift must be nonnegative and finite, got {delta}"
            )));
        }
        Ok((delta / self.mesh() + 0.5).floor() as usize)
    }
}

/// The separable source Hilbert space, identified with R^dim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    pub dim: usize,
}

impl HilbertSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("H must have dimension at least 1"));
        }
        Ok(HilbertSpec { dim })
    }
}

/// The target Banach space E.
///
/// Either a Euclidean space or a weighted Lq space over a finite point set
/// {1..dim} with strictly positive weights. The duality pairing in both
/// cases is sum_s w_s x_s y_s (unit weights for the Hilbert variant), so
/// the dual norm of the Lq variant is the weighted Lq' norm with the same
/// weights, q' the conjugate exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BanachSpace {
    Hilbert { dim: usize },
    Lq { q: f64, weights: Vec<f64> },
}

impl BanachSpace {
    pub fn hilbert(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("E must have dimension at least 1"));
        }
        Ok(BanachSpace::Hilbert { dim })
    }

    pub fn lq(q: f64, weights: Vec<f64>) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::invalid(format!("q must lie in (1, inf), got {q}")));
        }
        if weights.is_empty() {
            return Err(Error::invalid("Lq space needs at least one point"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!(
                "Lq weights must be strictly positive and finite, got {w}"
            )));
        }
        Ok(BanachSpace::Lq { q, weights })
    }

    /// Uniform unit-weight Lq space on dim points.
    pub fn lq_unit(q: f64, dim: usize) -> Result<Self> {
        Self::lq(q, vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            BanachSpace::Hilbert { dim } => *dim,
            BanachSpace::Lq { weights, .. } => weights.len(),
        }
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(self, BanachSpace::Hilbert { .. })
    }

    pub fn exponent(&self) -> f64 {
        match self {
            BanachSpace::Hilbert { .. } => 2.0,
            BanachSpace::Lq { q, .. } => *q,
        }
    }

    fn check_len(&self, x: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The norm of E.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x, "banach norm input")?;
        Ok(match self {
            BanachSpace::Hilbert { .. } => pairwise_sum_by(x, |v| v * v).sqrt(),
            BanachSpace::Lq { q, weights } => x
                .iter()
                .zip(weights)
                .map(|(v, w)| w * v.abs().powf(*q))
                .sum::<f64>()
                .powf(1.0 / q),
        })
    }

    /// The dual norm of E*, with respect to `duality_pair`.
    pub fn dual_norm(&self, xstar: &[f64]) -> Result<f64> {
        self.check_len(xstar, "dual norm input")?;
        Ok(match self {
            BanachSpace::Hilbert { .. } => pairwise_sum_by(xstar, |v| v * v).sqrt(),
            BanachSpace::Lq { q, weights } => {
                let qc = q / (q - 1.0);
                xstar
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * v.abs().powf(qc))
                    .sum::<f64>()
                    .powf(1.0 / qc)
            }
        })
    }

    /// Duality pairing <x, xstar> = sum_s w_s x_s xstar_s.
    pub fn duality_pair(&self, x: &[f64], xstar: &[f64]) -> Result<f64> {
        self.check_len(x, "duality pairing lhs")?;
        self.check_len(xstar, "duality pairing rhs")?;
        Ok(match self {
            BanachSpace::Hilbert { .. } => {
                let prods: Vec<f64> = x.iter().zip(xstar).map(|(a, b)| a * b).collect();
                pairwise_sum_by(&prods, |v| *v)
            }
            BanachSpace::Lq { weights, .. } => {
                let prods: Vec<f64> = x
                    .iter()
                    .zip(xstar)
                    .zip(weights)
                    .map(|((a, b), w)| w * a * b)
                    .collect();
                pairwise_sum_by(&prods, |v| *v)
            }
        })
    }
}

/// A step function in L2(0,T;H), stored by orthonormal-basis coefficients.
///
/// `coeffs[i * d_h + k]` multiplies e_{i,k} = (1/sqrt(dt)) 1_{I_i} h_k.
#[derive(Debug, Clone, PartialEq)]
pub struct L2StepFunction {
    pub grid: TimeGrid,
    pub d_h: usize,
    pub coeffs: Vec<f64>,
}

impl L2StepFunction {
    pub fn new(grid: TimeGrid, d_h: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.bins * d_h {
            return Err(Error::DimensionMismatch {
                context: "step function coefficient length",
                expected: grid.bins * d_h,
                got: coeffs.len(),
            });
        }
        Ok(L2StepFunction { grid, d_h, coeffs })
    }

    pub fn zero(grid: TimeGrid, d_h: usize) -> Self {
        L2StepFunction {
            grid,
            d_h,
            coeffs: vec![0.0; grid.bins * d_h],
        }
    }

    /// Basis element e_{i,k}.
    pub fn basis(grid: TimeGrid, d_h: usize, bin: usize, coord: usize) -> Result<Self> {
        if bin >= grid.bins || coord >= d_h {
            return Err(Error::invalid(format!(
                "basis index (bin {bin}, coord {coord}) out of range for {} bins x {} coords",
                grid.bins, d_h
            )));
        }
        let mut f = Self::zero(grid, d_h);
        f.coeffs[bin * d_h + coord] = 1.0;
        Ok(f)
    }

    /// The constant function f(t) = h_coord on the whole of [0, T].
    pub fn constant_direction(grid: TimeGrid, d_h: usize, coord: usize) -> Result<Self> {
        if coord >= d_h {
            return Err(Error::invalid(format!(
                "coordinate {coord} out of range for H of dimension {d_h}"
            )));
        }
        let mut f = Self::zero(grid, d_h);
        let c = grid.mesh().sqrt();
        for i in 0..grid.bins {
            f.coeffs[i * d_h + coord] = c;
        }
        Ok(f)
    }

    #[inline]
    pub fn coeff(&self, bin: usize, coord: usize) -> f64 {
        self.coeffs[bin * self.d_h + coord]
    }

    /// Pointwise value in H on bin i: sum_k c[i][k] dt^{-1/2} h_k.
    pub fn value_on_bin(&self, bin: usize) -> Vec<f64> {
        let scale = 1.0 / self.grid.mesh().sqrt();
        (0..self.d_h).map(|k| self.coeff(bin, k) * scale).collect()
    }

    /// L2(0,T;H) inner product; a coefficient dot product by orthonormality.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid || self.d_h != other.d_h {
            return Err(Error::invalid(
                "l2_inner requires matching grid and H dimension",
            ));
        }
        let prods: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .collect();
        Ok(pairwise_sum_by(&prods, |v| *v))
    }

    pub fn l2_norm(&self) -> f64 {
        pairwise_sum_by(&self.coeffs, |v| v * v).sqrt()
    }
}
