//! Sampled driving noise, elementary adapted processes and their integrals.
//!
//! A [`PathBundle`] holds Brownian (or Rademacher) increments for M paths
//! plus an independent decoupled copy, both derived from disjoint stream
//! ranges of one seed. Elementary processes carry per-interval coefficient
//! rules whose inputs are restricted, by construction, to increments
//! strictly before the interval start; predictability is structural, not a
//! runtime check.

use crate::error::{Error, Result};
use crate::gamma::{self, GammaOperator};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::rng::{rademacher, stream, GaussianSampler, Purpose};
use crate::space::{BanachSpace, TimeGrid};
use rayon::prelude::*;
use std::io::{Read, Write};

/// Distribution of the scaled increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Gaussian,
    Rademacher,
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Gaussian => "gaussian",
            NoiseMode::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(NoiseMode::Gaussian),
            "rademacher" => Some(NoiseMode::Rademacher),
            _ => None,
        }
    }

    fn byte(self) -> u8 {
        match self {
            NoiseMode::Gaussian => 0,
            NoiseMode::Rademacher => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(NoiseMode::Gaussian),
            1 => Ok(NoiseMode::Rademacher),
            other => Err(Error::BundleFormat(format!("unknown mode byte {other}"))),
        }
    }
}

/// Increments of M sampled noise paths and of an independent decoupled
/// copy, layout `[path][bin][coord]`, each increment scaled by sqrt(dt).
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub d_h: usize,
    pub paths: usize,
    pub seed: u64,
    pub mode: NoiseMode,
    dw: Vec<f64>,
    dw_tilde: Vec<f64>,
}

impl PathBundle {
    /// Sample M paths. Path m draws its primary increments from the
    /// (seed, Increments, m) stream and its decoupled increments from the
    /// (seed, DecoupledIncrements, m) stream, so results are bit-identical
    /// for any worker count and the copy is independent of the original.
    pub fn sample(
        grid: TimeGrid,
        d_h: usize,
        paths: usize,
        seed: u64,
        mode: NoiseMode,
        sampler: GaussianSampler,
    ) -> Result<Self> {
        if d_h == 0 {
            return Err(Error::invalid("H must have dimension at least 1"));
        }
        if paths == 0 {
            return Err(Error::invalid("need at least one path"));
        }
        let per_path = grid
            .bins
            .checked_mul(d_h)
            .ok_or_else(|| Error::invalid("bins * d_h overflows"))?;
        let total = per_path
            .checked_mul(paths)
            .ok_or_else(|| Error::invalid("paths * bins * d_h overflows"))?;
        let scale = grid.mesh().sqrt();

        let fill = |purpose: Purpose, buf: &mut Vec<f64>| {
            buf.resize(total, 0.0);
            buf.par_chunks_mut(per_path).enumerate().for_each(|(m, chunk)| {
                let mut rng = stream(seed, purpose, m as u64);
                for v in chunk.iter_mut() {
                    *v = scale
                        * match mode {
                            NoiseMode::Gaussian => sampler.sample(&mut rng),
                            NoiseMode::Rademacher => rademacher(&mut rng),
                        };
                }
            });
        };

        let mut dw = Vec::new();
        let mut dw_tilde = Vec::new();
        fill(Purpose::Increments, &mut dw);
        fill(Purpose::DecoupledIncrements, &mut dw_tilde);

        Ok(PathBundle {
            grid,
            d_h,
            paths,
            seed,
            mode,
            dw,
            dw_tilde,
        })
    }

    #[inline]
    fn per_path(&self) -> usize {
        self.grid.bins * self.d_h
    }

    /// Primary increments of one path, layout `[bin][coord]`.
    #[inline]
    pub fn path(&self, m: usize) -> &[f64] {
        &self.dw[m * self.per_path()..(m + 1) * self.per_path()]
    }

    /// Decoupled-copy increments of one path.
    #[inline]
    pub fn decoupled_path(&self, m: usize) -> &[f64] {
        &self.dw_tilde[m * self.per_path()..(m + 1) * self.per_path()]
    }

    #[inline]
    pub fn increment(&self, m: usize, bin: usize, coord: usize) -> f64 {
        self.dw[m * self.per_path() + bin * self.d_h + coord]
    }

    /// The cylindrical evaluation W_H(t_j) h for direction h in H.
    pub fn cylindrical_value(&self, m: usize, grid_index: usize, h: &[f64]) -> Result<f64> {
        if h.len() != self.d_h {
            return Err(Error::DimensionMismatch {
                context: "cylindrical direction length",
                expected: self.d_h,
                got: h.len(),
            });
        }
        if grid_index > self.grid.bins {
            return Err(Error::invalid(format!(
                "grid index {grid_index} beyond horizon index {}",
                self.grid.bins
            )));
        }
        let p = self.path(m);
        let mut acc = 0.0;
        for i in 0..grid_index {
            for (k, hk) in h.iter().enumerate() {
                acc += hk * p[i * self.d_h + k];
            }
        }
        Ok(acc)
    }

    /// Clone with a single primary increment replaced; used to probe that
    /// coefficient rules never read increments at or after their interval.
    pub fn with_modified_increment(&self, m: usize, bin: usize, coord: usize, value: f64) -> Self {
        let mut out = self.clone();
        let idx = m * self.per_path() + bin * self.d_h + coord;
        out.dw[idx] = value;
        out
    }

    /// Serialize to the flat binary interchange format (GFPB v1):
    /// magic "GFPB", version u32, paths u32, bins u32, d_h u32, mode u8,
    /// seed u64, all little-endian, then the primary increments and the
    /// decoupled increments as row-major f64.
    pub fn dump(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"GFPB")?;
        w.write_all(&1u32.to_le_bytes())?;
        for v in [self.paths as u32, self.grid.bins as u32, self.d_h as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[self.mode.byte()])?;
        w.write_all(&self.seed.to_le_bytes())?;
        for buf in [&self.dw, &self.dw_tilde] {
            for v in buf {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Deserialize the GFPB v1 format. The horizon is not part of the
    /// format, so the caller supplies it; bins come from the header.
    pub fn load(r: &mut impl Read, horizon: f64) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::BundleFormat("file shorter than header".into()))?;
        if &magic != b"GFPB" {
            return Err(Error::BundleFormat(format!(
                "bad magic {:?}, expected GFPB",
                magic
            )));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut u32buf)
                .map_err(|_| Error::BundleFormat("truncated header".into()))?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let version = read_u32(r)?;
        if version != 1 {
            return Err(Error::BundleFormat(format!(
                "unsupported version {version}, expected 1"
            )));
        }
        let paths = read_u32(r)? as usize;
        let bins = read_u32(r)? as usize;
        let d_h = read_u32(r)? as usize;
        let mut mode_byte = [0u8; 1];
        r.read_exact(&mut mode_byte)
            .map_err(|_| Error::BundleFormat("truncated header".into()))?;
        let mode = NoiseMode::from_byte(mode_byte[0])?;
        let mut seed_buf = [0u8; 8];
        r.read_exact(&mut seed_buf)
            .map_err(|_| Error::BundleFormat("truncated header".into()))?;
        let seed = u64::from_le_bytes(seed_buf);

        let grid = TimeGrid::new(horizon, bins)?;
        if paths == 0 || d_h == 0 {
            return Err(Error::BundleFormat(
                "header declares zero paths or zero H dimension".into(),
            ));
        }
        let total = paths
            .checked_mul(bins)
            .and_then(|v| v.checked_mul(d_h))
            .ok_or_else(|| Error::BundleFormat("header sizes overflow".into()))?;

        let read_block = |r: &mut dyn Read| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; total * 8];
            r.read_exact(&mut buf)
                .map_err(|_| Error::BundleFormat("truncated increment block".into()))?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let dw = read_block(r)?;
        let dw_tilde = read_block(r)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::BundleFormat("trailing bytes after data".into()));
        }
        Ok(PathBundle {
            grid,
            d_h,
            paths,
            seed,
            mode,
            dw,
            dw_tilde,
        })
    }
}

/// Per-interval coefficient rule. Every variant reads only increments with
/// bin index strictly below the interval start.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Deterministic coefficient.
    Constant(Matrix),
    /// Threshold cells of the running sum of one H-coordinate up to the
    /// interval start: cell j covers (thresholds[j-1], thresholds[j]], the
    /// outer cells are unbounded. One matrix per cell; the cells being
    /// disjoint makes the event family a partition.
    IndicatorEvent {
        coord: usize,
        thresholds: Vec<f64>,
        matrices: Vec<Matrix>,
    },
    /// base + slope * (increment of one coordinate in the bin immediately
    /// before the interval); just base for the interval starting at 0.
    LinearPast {
        coord: usize,
        base: Matrix,
        slope: Matrix,
    },
}

impl Rule {
    fn check(&self, d_e: usize, d_h: usize) -> Result<()> {
        let check_mat = |m: &Matrix, what: &'static str| -> Result<()> {
            if m.rows != d_e {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: d_e,
                    got: m.rows,
                });
            }
            if m.cols != d_h {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: d_h,
                    got: m.cols,
                });
            }
            Ok(())
        };
        match self {
            Rule::Constant(m) => check_mat(m, "constant rule matrix"),
            Rule::IndicatorEvent {
                coord,
                thresholds,
                matrices,
            } => {
                if *coord >= d_h {
                    return Err(Error::invalid(format!(
                        "indicator coordinate {coord} out of range for d_H = {d_h}"
                    )));
                }
                if matrices.len() != thresholds.len() + 1 {
                    return Err(Error::invalid(format!(
                        "indicator rule needs {} matrices for {} thresholds, got {}",
                        thresholds.len() + 1,
                        thresholds.len(),
                        matrices.len()
                    )));
                }
                if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::invalid(
                        "indicator thresholds must be strictly increasing",
                    ));
                }
                for m in matrices {
                    check_mat(m, "indicator rule matrix")?;
                }
                Ok(())
            }
            Rule::LinearPast { coord, base, slope } => {
                if *coord >= d_h {
                    return Err(Error::invalid(format!(
                        "linear-past coordinate {coord} out of range for d_H = {d_h}"
                    )));
                }
                check_mat(base, "linear-past base matrix")?;
                check_mat(slope, "linear-past slope matrix")
            }
        }
    }
}

/// An elementary adapted process: a partition of the grid into consecutive
/// intervals and one coefficient rule per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryProcess {
    pub grid: TimeGrid,
    pub d_h: usize,
    pub space: BanachSpace,
    /// Interval boundaries as grid-bin indices, 0 = b_0 < ... < b_P = bins.
    pub boundaries: Vec<usize>,
    pub rules: Vec<Rule>,
}

impl ElementaryProcess {
    pub fn new(
        grid: TimeGrid,
        d_h: usize,
        space: BanachSpace,
        boundaries: Vec<usize>,
        rules: Vec<Rule>,
    ) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != 0 || *boundaries.last().unwrap() != grid.bins {
            return Err(Error::invalid(format!(
                "partition boundaries must run from 0 to {} inclusive",
                grid.bins
            )));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "partition boundaries must be strictly increasing",
            ));
        }
        if rules.len() != boundaries.len() - 1 {
            return Err(Error::DimensionMismatch {
                context: "one rule per partition interval",
                expected: boundaries.len() - 1,
                got: rules.len(),
            });
        }
        for rule in &rules {
            rule.check(space.dim(), d_h)?;
        }
        Ok(ElementaryProcess {
            grid,
            d_h,
            space,
            boundaries,
            rules,
        })
    }

    pub fn intervals(&self) -> usize {
        self.rules.len()
    }

    /// The coefficient matrix on interval n for the path whose primary
    /// increments are `path` (layout `[bin][coord]`).
    pub fn coefficient(&self, n: usize, path: &[f64]) -> Matrix {
        let start = self.boundaries[n];
        match &self.rules[n] {
            Rule::Constant(m) => m.clone(),
            Rule::IndicatorEvent {
                coord,
                thresholds,
                matrices,
            } => {
                let mut sum = 0.0;
                for i in 0..start {
                    sum += path[i * self.d_h + coord];
                }
                let cell = thresholds.partition_point(|t| *t < sum);
                matrices[cell].clone()
            }
            Rule::LinearPast { coord, base, slope } => {
                if start == 0 {
                    base.clone()
                } else {
                    let dw = path[(start - 1) * self.d_h + coord];
                    let mut m = base.clone();
                    for (v, s) in m.data.iter_mut().zip(&slope.data) {
                        *v += s * dw;
                    }
                    m
                }
            }
        }
    }

    /// The coefficient on a single bin (the rule of the covering interval).
    pub fn coefficient_on_bin(&self, bin: usize, path: &[f64]) -> Matrix {
        let n = self.boundaries.partition_point(|b| *b <= bin) - 1;
        self.coefficient(n, path)
    }
}

/// The operator representation of one path of an elementary process:
/// column (i, k) is sqrt(dt) times the coefficient on bin i applied to h_k.
pub fn represent(phi: &ElementaryProcess, bundle: &PathBundle, m: usize) -> Result<GammaOperator> {
    check_compatible(phi, bundle)?;
    let d_e = phi.space.dim();
    let d_h = phi.d_h;
    let bins = phi.grid.bins;
    let scale = phi.grid.mesh().sqrt();
    let mut matrix = Matrix::zeros(d_e, bins * d_h);
    let path = bundle.path(m);
    for n in 0..phi.intervals() {
        let coeff = phi.coefficient(n, path);
        for bin in phi.boundaries[n]..phi.boundaries[n + 1] {
            for r in 0..d_e {
                for k in 0..d_h {
                    matrix.data[r * bins * d_h + bin * d_h + k] = scale * coeff.get(r, k);
                }
            }
        }
    }
    GammaOperator::new(phi.grid, d_h, phi.space.clone(), matrix)
}

fn check_compatible(phi: &ElementaryProcess, bundle: &PathBundle) -> Result<()> {
    if phi.grid != bundle.grid {
        return Err(Error::invalid("process and bundle grids differ"));
    }
    if phi.d_h != bundle.d_h {
        return Err(Error::DimensionMismatch {
            context: "process vs bundle d_H",
            expected: bundle.d_h,
            got: phi.d_h,
        });
    }
    Ok(())
}

fn integrate_with(
    phi: &ElementaryProcess,
    bundle: &PathBundle,
    decoupled: bool,
    max_coord: usize,
) -> Result<Vec<Vec<f64>>> {
    check_compatible(phi, bundle)?;
    let d_e = phi.space.dim();
    let d_h = phi.d_h;
    Ok((0..bundle.paths)
        .into_par_iter()
        .map(|m| {
            let coeff_path = bundle.path(m);
            let incr_path = if decoupled {
                bundle.decoupled_path(m)
            } else {
                bundle.path(m)
            };
            let mut acc = vec![0.0; d_e];
            for n in 0..phi.intervals() {
                let coeff = phi.coefficient(n, coeff_path);
                for bin in phi.boundaries[n]..phi.boundaries[n + 1] {
                    for k in 0..max_coord {
                        let dw = incr_path[bin * d_h + k];
                        for (r, a) in acc.iter_mut().enumerate() {
                            *a += coeff.get(r, k) * dw;
                        }
                    }
                }
            }
            acc
        })
        .collect())
}

/// The elementary stochastic integral: per path, sum over bins of the
/// coefficient matrix applied to that bin's increment vector.
pub fn integrate(phi: &ElementaryProcess, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    integrate_with(phi, bundle, false, phi.d_h)
}

/// The decoupled integral: coefficients read the primary increments,
/// integration runs against the independent copy.
pub fn integrate_decoupled(phi: &ElementaryProcess, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    integrate_with(phi, bundle, true, phi.d_h)
}

/// Partial-coordinate expansion: only directions h_k with k < terms
/// contribute. With terms = d_H this is exactly [`integrate`].
pub fn series_expansion(
    phi: &ElementaryProcess,
    bundle: &PathBundle,
    terms: usize,
) -> Result<Vec<Vec<f64>>> {
    if terms > phi.d_h {
        return Err(Error::invalid(format!(
            "series terms {terms} exceed d_H = {}",
            phi.d_h
        )));
    }
    integrate_with(phi, bundle, false, terms)
}

/// Running integral trajectories and their pathwise supremum norms.
#[derive(Debug, Clone)]
pub struct IntegralProcess {
    pub d_e: usize,
    pub bins: usize,
    /// Trajectory values, layout `[path][grid index 0..=bins][coord]`.
    pub values: Vec<f64>,
    /// Pathwise sup over grid indices of the E-norm.
    pub sup_norms: Vec<f64>,
}

impl IntegralProcess {
    pub fn value(&self, m: usize, grid_index: usize) -> &[f64] {
        let stride = (self.bins + 1) * self.d_e;
        let start = m * stride + grid_index * self.d_e;
        &self.values[start..start + self.d_e]
    }

    pub fn final_value(&self, m: usize) -> &[f64] {
        self.value(m, self.bins)
    }
}

/// Running partial sums of the elementary integral on every grid index,
/// plus the pathwise supremum statistic.
pub fn integral_process(phi: &ElementaryProcess, bundle: &PathBundle) -> Result<IntegralProcess> {
    check_compatible(phi, bundle)?;
    let d_e = phi.space.dim();
    let d_h = phi.d_h;
    let bins = phi.grid.bins;
    let stride = (bins + 1) * d_e;
    let mut values = vec![0.0; bundle.paths * stride];
    let mut sup_norms = vec![0.0; bundle.paths];
    values
        .par_chunks_mut(stride)
        .zip(sup_norms.par_iter_mut())
        .enumerate()
        .for_each(|(m, (traj, sup))| {
            let path = bundle.path(m);
            let mut acc = vec![0.0; d_e];
            let mut best = 0.0f64;
            for n in 0..phi.intervals() {
                let coeff = phi.coefficient(n, path);
                for bin in phi.boundaries[n]..phi.boundaries[n + 1] {
                    for k in 0..d_h {
                        let dw = path[bin * d_h + k];
                        for (r, a) in acc.iter_mut().enumerate() {
                            *a += coeff.get(r, k) * dw;
                        }
                    }
                    traj[(bin + 1) * d_e..(bin + 2) * d_e].copy_from_slice(&acc);
                    let norm = phi.space.norm(&acc).expect("validated shape");
                    if norm > best {
                        best = norm;
                    }
                }
            }
            *sup = best;
        });
    Ok(IntegralProcess {
        d_e,
        bins,
        values,
        sup_norms,
    })
}

/// A grid-valued stopping time: one index in 0..=bins per path.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingTime {
    pub indices: Vec<usize>,
}

impl StoppingTime {
    pub fn from_indices(indices: Vec<usize>, grid: &TimeGrid, paths: usize) -> Result<Self> {
        if indices.len() != paths {
            return Err(Error::DimensionMismatch {
                context: "stopping time entries vs paths",
                expected: paths,
                got: indices.len(),
            });
        }
        if let Some(bad) = indices.iter().find(|i| **i > grid.bins) {
            return Err(Error::invalid(format!(
                "stopping index {bad} beyond horizon index {}",
                grid.bins
            )));
        }
        Ok(StoppingTime { indices })
    }

    pub fn constant(index: usize, grid: &TimeGrid, paths: usize) -> Result<Self> {
        Self::from_indices(vec![index; paths], grid, paths)
    }

    /// First grid index at which |W_H(t) applied to h_coord| reaches the
    /// level; the horizon index if it never does. Reads only increments
    /// before the index it returns, so it is a stopping time by
    /// construction.
    pub fn first_passage(bundle: &PathBundle, coord: usize, level: f64) -> Result<Self> {
        if coord >= bundle.d_h {
            return Err(Error::invalid(format!(
                "coordinate {coord} out of range for d_H = {}",
                bundle.d_h
            )));
        }
        if !(level > 0.0) {
            return Err(Error::invalid("passage level must be positive"));
        }
        let bins = bundle.grid.bins;
        let indices = (0..bundle.paths)
            .map(|m| {
                let path = bundle.path(m);
                let mut sum = 0.0;
                for i in 0..bins {
                    sum += path[i * bundle.d_h + coord];
                    if sum.abs() >= level {
                        return i + 1;
                    }
                }
                bins
            })
            .collect();
        Ok(StoppingTime { indices })
    }
}

/// The two faces of a stopped elementary integral.
#[derive(Debug, Clone)]
pub struct StoppedIntegral {
    /// Trajectory value at the stopping index, per path.
    pub stopped_values: Vec<Vec<f64>>,
    /// The stopped integral recomputed through the truncated operator
    /// representation, per path.
    pub operator_values: Vec<Vec<f64>>,
}

impl StoppedIntegral {
    /// Largest coordinatewise discrepancy between the two computations.
    pub fn max_discrepancy(&self) -> f64 {
        self.stopped_values
            .iter()
            .zip(&self.operator_values)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Integrate the columns of an operator representation against a path's
/// primary increments: sum over (bin, coord) of column / sqrt(dt) times the
/// increment. For a represented process this is the elementary integral.
pub fn integrate_operator(op: &GammaOperator, bundle: &PathBundle, m: usize) -> Result<Vec<f64>> {
    if op.grid != bundle.grid || op.d_h != bundle.d_h {
        return Err(Error::invalid(
            "operator and bundle live on different discretizations",
        ));
    }
    let inv_scale = 1.0 / op.grid.mesh().sqrt();
    let path = bundle.path(m);
    let d_e = op.matrix.rows;
    let cols = op.matrix.cols;
    let mut acc = vec![0.0; d_e];
    for c in 0..cols {
        let dw = path[c] * inv_scale;
        if dw == 0.0 {
            continue;
        }
        for (r, a) in acc.iter_mut().enumerate() {
            *a += op.matrix.data[r * cols + c] * dw;
        }
    }
    Ok(acc)
}

/// Stop the running integral at tau and, independently, integrate the
/// time-truncated operator representation. The two agree pathwise up to
/// floating-point reassociation (the identity the stopped-integral theory
/// asserts), which callers check via [`StoppedIntegral::max_discrepancy`].
pub fn stop_and_truncate(
    phi: &ElementaryProcess,
    bundle: &PathBundle,
    tau: &StoppingTime,
) -> Result<StoppedIntegral> {
    check_compatible(phi, bundle)?;
    if tau.indices.len() != bundle.paths {
        return Err(Error::DimensionMismatch {
            context: "stopping time entries vs paths",
            expected: bundle.paths,
            got: tau.indices.len(),
        });
    }
    let process = integral_process(phi, bundle)?;
    let mut stopped_values = Vec::with_capacity(bundle.paths);
    let mut operator_values = Vec::with_capacity(bundle.paths);
    for m in 0..bundle.paths {
        let j = tau.indices[m];
        stopped_values.push(process.value(m, j).to_vec());
        let rep = represent(phi, bundle, m)?;
        let truncated = gamma::truncate_time(&rep, phi.grid.time(j))?;
        operator_values.push(integrate_operator(&truncated, bundle, m)?);
    }
    Ok(StoppedIntegral {
        stopped_values,
        operator_values,
    })
}

/// First grid index at which the gamma-norm of the truncated operator
/// representation reaches the level, per path; the horizon index if never.
/// The norm is the exact evaluator of the target space (Frobenius for
/// Hilbert, square-function for Lq); both grow monotonically under time
/// truncation, so this is a genuine first-passage time of an adapted,
/// nondecreasing statistic.
pub fn localizing_times(
    phi: &ElementaryProcess,
    bundle: &PathBundle,
    level: f64,
) -> Result<StoppingTime> {
    check_compatible(phi, bundle)?;
    if !(level >= 0.0) {
        return Err(Error::invalid("localization level must be nonnegative"));
    }
    if level == 0.0 {
        // The empty truncation already has norm 0 >= 0.
        return Ok(StoppingTime {
            indices: vec![0; bundle.paths],
        });
    }
    let d_e = phi.space.dim();
    let d_h = phi.d_h;
    let dt = phi.grid.mesh();
    let indices = (0..bundle.paths)
        .into_par_iter()
        .map(|m| {
            let path = bundle.path(m);
            // Cumulative squared column mass per target row.
            let mut row_sq = vec![0.0; d_e];
            for n in 0..phi.intervals() {
                let coeff = phi.coefficient(n, path);
                for bin in phi.boundaries[n]..phi.boundaries[n + 1] {
                    for r in 0..d_e {
                        let mut add = 0.0;
                        for k in 0..d_h {
                            let v = coeff.get(r, k);
                            add += v * v;
                        }
                        row_sq[r] += dt * add;
                    }
                    let norm = match &phi.space {
                        BanachSpace::Hilbert { .. } => row_sq.iter().sum::<f64>().sqrt(),
                        BanachSpace::Lq { q, weights } => row_sq
                            .iter()
                            .zip(weights)
                            .map(|(v, w)| w * v.powf(q / 2.0))
                            .sum::<f64>()
                            .powf(1.0 / q),
                    };
                    if norm >= level {
                        return bin + 1;
                    }
                }
            }
            phi.grid.bins
        })
        .collect();
    Ok(StoppingTime { indices })
}

/// One run of the dyadic divergence construction.
///
/// Level n lives on the dyadic interval [2^{-n}, 2^{-n+1}) with amplitude
/// sqrt(n) 2^{n/2} along the n-th coordinate of E, switched on with
/// probability 1/n, independently across levels and paths.
#[derive(Debug, Clone)]
pub struct DyadicDivergenceRun {
    pub levels: usize,
    pub paths: usize,
    /// Indicator samples, layout `[path][level 1..=levels]`.
    pub active: Vec<bool>,
    /// Per path: sum over its active levels n_1 < n_2 < ... of n_j / j^2.
    pub statistics: Vec<f64>,
}

impl DyadicDivergenceRun {
    pub fn is_active(&self, m: usize, level: usize) -> bool {
        self.active[m * self.levels + (level - 1)]
    }

    /// Amplitude of level n: sqrt(n) 2^{n/2}.
    pub fn amplitude(level: usize) -> f64 {
        (level as f64).sqrt() * (2.0f64).powf(level as f64 / 2.0)
    }

    /// The dyadic support interval [2^{-n}, 2^{-n+1}) of level n.
    pub fn support(level: usize) -> (f64, f64) {
        ((2.0f64).powi(-(level as i32)), (2.0f64).powi(1 - level as i32))
    }

    /// The process value at time t for one path: amplitude times the
    /// coordinate vector of the unique level whose support contains t,
    /// zero when no level covers t (t >= 1 or below the resolved scales).
    pub fn value_at(&self, m: usize, t: f64, d_e: usize) -> Vec<f64> {
        let mut v = vec![0.0; d_e];
        if !(0.0..1.0).contains(&t) {
            return v;
        }
        for n in 1..=self.levels {
            let (lo, hi) = Self::support(n);
            if t >= lo && t < hi {
                if self.is_active(m, n) {
                    v[n - 1] = Self::amplitude(n);
                }
                return v;
            }
        }
        v
    }

    /// Empirical activation frequency of one level across paths.
    pub fn frequency(&self, level: usize) -> f64 {
        let hits = (0..self.paths).filter(|m| self.is_active(*m, level)).count();
        hits as f64 / self.paths as f64
    }
}

/// Sample the dyadic divergence construction on [0, 1].
///
/// Requires a unit horizon and a target space with at least `levels`
/// coordinates. The per-path statistic grows without bound in the level
/// count because the j-th smallest active level is at least j, so its
/// contribution n_j / j^2 is at least 1/j.
pub fn dyadic_divergence(
    levels: usize,
    space: &BanachSpace,
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<DyadicDivergenceRun> {
    if grid.horizon != 1.0 {
        return Err(Error::invalid(format!(
            "the dyadic construction needs horizon exactly 1, got {}",
            grid.horizon
        )));
    }
    if levels == 0 {
        return Err(Error::invalid("need at least one level"));
    }
    if space.dim() < levels {
        return Err(Error::DimensionMismatch {
            context: "target dimension vs dyadic levels",
            expected: levels,
            got: space.dim(),
        });
    }
    if paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let mut active = vec![false; paths * levels];
    active.par_chunks_mut(levels).enumerate().for_each(|(m, row)| {
        let mut rng = stream(seed, Purpose::PathologicalLevels, m as u64);
        for (idx, slot) in row.iter_mut().enumerate() {
            let n = idx + 1;
            *slot = crate::rng::uniform_open01(&mut rng) < 1.0 / n as f64;
        }
    });
    let statistics = active
        .chunks(levels)
        .map(|row| {
            let mut stat = 0.0;
            let mut j = 0usize;
            for (idx, on) in row.iter().enumerate() {
                if *on {
                    j += 1;
                    stat += (idx + 1) as f64 / (j * j) as f64;
                }
            }
            stat
        })
        .collect();
    Ok(DyadicDivergenceRun {
        levels,
        paths,
        active,
        statistics,
    })
}

/// A Brownian motion in E with prescribed covariance, realized through the
/// symmetric PSD square root of the covariance matrix.
#[derive(Debug, Clone)]
pub struct CovarianceDriver {
    pub covariance: Matrix,
    /// Symmetric PSD square root U with U U^T = covariance.
    pub factor: Matrix,
    pub d_e: usize,
    pub bins: usize,
    pub paths: usize,
    /// Trajectories, layout `[path][grid index 0..=bins][coord]`.
    pub values: Vec<f64>,
}

impl CovarianceDriver {
    pub fn value(&self, m: usize, grid_index: usize) -> &[f64] {
        let stride = (self.bins + 1) * self.d_e;
        let start = m * stride + grid_index * self.d_e;
        &self.values[start..start + self.d_e]
    }

    /// The cylindrical reinterpretation: <W(t_j), xstar>.
    pub fn cylindrical_eval(&self, m: usize, grid_index: usize, xstar: &[f64]) -> Result<f64> {
        if xstar.len() != self.d_e {
            return Err(Error::DimensionMismatch {
                context: "cylindrical functional length",
                expected: self.d_e,
                got: xstar.len(),
            });
        }
        Ok(self
            .value(m, grid_index)
            .iter()
            .zip(xstar)
            .map(|(a, b)| a * b)
            .sum())
    }
}

/// Validate a covariance matrix: square, symmetric to 1e-12, eigenvalues
/// at least -1e-12 (tiny negatives are treated as zero).
pub fn validate_covariance(c: &Matrix) -> Result<Vec<f64>> {
    if c.rows != c.cols {
        return Err(Error::DimensionMismatch {
            context: "covariance must be square",
            expected: c.rows,
            got: c.cols,
        });
    }
    if !c.is_symmetric(1e-12) {
        return Err(Error::invalid(
            "covariance must be symmetric to 1e-12".to_string(),
        ));
    }
    let (eigs, _) = symmetric_eigen(c)?;
    if let Some(bad) = eigs.iter().find(|l| **l < -1e-12) {
        return Err(Error::invalid(format!(
            "covariance must be positive semidefinite, found eigenvalue {bad}"
        )));
    }
    Ok(eigs)
}

/// Drive an E-valued Brownian motion with covariance C from a sampled
/// bundle whose d_H equals dim E: W(t) = U B(t) with U the symmetric PSD
/// square root of C and B the standard path of the bundle. Then
/// E <W(t), x*>^2 = t <C x*, x*> for every functional x*.
pub fn rkhs_from_covariance(c: &Matrix, bundle: &PathBundle) -> Result<CovarianceDriver> {
    validate_covariance(c)?;
    if c.rows != bundle.d_h {
        return Err(Error::DimensionMismatch {
            context: "covariance dimension vs bundle d_H",
            expected: bundle.d_h,
            got: c.rows,
        });
    }
    let (eigs, v) = symmetric_eigen(c)?;
    let n = c.rows;
    // U = V diag(sqrt(max(lambda, 0))) V^T.
    let mut scaled = v.clone();
    for j in 0..n {
        let s = eigs[j].max(0.0).sqrt();
        for i in 0..n {
            scaled.data[i * n + j] *= s;
        }
    }
    let factor = scaled.matmul(&v.transpose())?;

    let bins = bundle.grid.bins;
    let stride = (bins + 1) * n;
    let mut values = vec![0.0; bundle.paths * stride];
    values.par_chunks_mut(stride).enumerate().for_each(|(m, traj)| {
        let path = bundle.path(m);
        let mut running = vec![0.0; n];
        for bin in 0..bins {
            for (k, r) in running.iter_mut().enumerate() {
                *r += path[bin * n + k];
            }
            let w = factor.matvec(&running).expect("square factor");
            traj[(bin + 1) * n..(bin + 2) * n].copy_from_slice(&w);
        }
    });
    Ok(CovarianceDriver {
        covariance: c.clone(),
        factor,
        d_e: n,
        bins,
        paths: bundle.paths,
        values,
    })
}

/// Pathwise predictable quadratic variation of a scalar-target process:
/// QV(t_j) = sum_{i<j} ||phi_i||_H^2 dt, layout `[path][grid index]`.
pub fn quadratic_variation(phi: &ElementaryProcess, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    check_compatible(phi, bundle)?;
    if phi.space.dim() != 1 {
        return Err(Error::invalid(
            "quadratic variation is defined here for scalar targets only",
        ));
    }
    let dt = phi.grid.mesh();
    Ok((0..bundle.paths)
        .map(|m| {
            let path = bundle.path(m);
            let mut out = Vec::with_capacity(phi.grid.bins + 1);
            out.push(0.0);
            let mut acc = 0.0;
            for n in 0..phi.intervals() {
                let coeff = phi.coefficient(n, path);
                let sq: f64 = coeff.data.iter().map(|v| v * v).sum();
                for _bin in phi.boundaries[n]..phi.boundaries[n + 1] {
                    acc += sq * dt;
                    out.push(acc);
                }
            }
            out
        })
        .collect())
}
