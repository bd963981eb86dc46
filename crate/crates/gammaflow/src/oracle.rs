//! Exact brute-force oracles on binary sign trees.
//!
//! A sign tree of depth n over d_H coordinates has 2^(n*d_H) leaves, each
//! carrying probability 2^-(n*d_H). Probabilities are dyadic rationals and
//! are handled as integer counts, with one exact division by a power of two
//! at the end; leaf sums are accumulated in a fixed canonical pairwise
//! order, so enumeration results are bit-identical regardless of
//! parallelism. Test inputs are drawn from a dyadic coefficient grid, which
//! keeps every advertised per-leaf identity exact in f64, not merely small.
//!
//! Bit layout: step n (0-based) owns the bit block starting at n*d_H
//! (plain trees) or 2*n*d_H (tangent trees, real block then shadow block);
//! bit 0 is the first step, and a 0 bit means sign +1.

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use crate::rng::{dyadic_coefficient, stream, Purpose};
use crate::space::BanachSpace;
use rayon::prelude::*;
use std::collections::HashMap;

/// Hard cap on enumeration size: at most 2^24 leaves.
pub const ENUMERATION_BUDGET_BITS: u32 = 24;
/// Cap on materialized per-leaf transcripts: at most 2^16 leaves.
pub const TRANSCRIPT_BUDGET_BITS: u32 = 16;
/// Cap on the sign-choice enumeration of [`umd_ratio`].
pub const UMD_DEPTH_BUDGET: usize = 12;

/// A binary sign tree: depth steps, d_H coordinates per step, increments
/// of magnitude `step_scale` (sqrt of the mesh in physical units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTree {
    pub depth: usize,
    pub d_h: usize,
    pub step_scale: f64,
}

impl SignTree {
    pub fn new(depth: usize, d_h: usize, step_scale: f64) -> Result<Self> {
        if depth == 0 || d_h == 0 {
            return Err(Error::invalid("sign tree needs depth >= 1 and d_H >= 1"));
        }
        if !(step_scale > 0.0 && step_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "step scale must be positive and finite, got {step_scale}"
            )));
        }
        let bits = depth * d_h;
        if bits as u32 > ENUMERATION_BUDGET_BITS {
            return Err(Error::BudgetExceeded {
                context: "sign tree enumeration",
                bits: bits as u32,
                budget: ENUMERATION_BUDGET_BITS,
            });
        }
        Ok(SignTree {
            depth,
            d_h,
            step_scale,
        })
    }

    pub fn bits(&self) -> u32 {
        (self.depth * self.d_h) as u32
    }

    pub fn leaves(&self) -> u64 {
        1u64 << self.bits()
    }

    /// Sign of coordinate k at step n on a leaf: +1.0 or -1.0.
    #[inline]
    pub fn sign(&self, leaf: u64, step: usize, coord: usize) -> f64 {
        if (leaf >> (step * self.d_h + coord)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The scaled increment of coordinate k at step n.
    #[inline]
    pub fn increment(&self, leaf: u64, step: usize, coord: usize) -> f64 {
        self.sign(leaf, step, coord) * self.step_scale
    }

    /// Node id at a level: the first `level` steps' sign bits.
    #[inline]
    pub fn node(&self, leaf: u64, level: usize) -> u64 {
        leaf & ((1u64 << (level * self.d_h)) - 1)
    }
}

/// Exact expectation of a leaf functional: the canonically ordered sum over
/// all leaves divided by their count (a power of two, so the division is
/// exact). Deterministic under any parallel schedule.
pub fn exact_expectation<F>(tree: &SignTree, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let total = parallel_pairwise(0, tree.leaves(), &f);
    total * (0.5f64).powi(tree.bits() as i32)
}

/// Exact p-th moment root of an E-valued leaf functional:
/// (E ||v||_E^p)^{1/p}.
pub fn exact_moment<F>(tree: &SignTree, space: &BanachSpace, p: f64, v: F) -> Result<f64>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must lie in [1, inf), got {p}")));
    }
    let mean = exact_expectation(tree, |leaf| {
        let x = v(leaf);
        space.norm(&x).expect("functional length matches space").powf(p)
    });
    Ok(mean.powf(1.0 / p))
}

/// Fixed-association pairwise sum over a leaf range, split at the midpoint,
/// parallelized only on ranges large enough to matter. The association is a
/// function of the range alone, so the result is schedule-independent.
fn parallel_pairwise<F>(lo: u64, hi: u64, f: &F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let len = hi - lo;
    if len <= 4096 {
        return sequential_pairwise(lo, hi, f);
    }
    let mid = lo + len / 2;
    let (a, b) = rayon::join(|| parallel_pairwise(lo, mid, f), || parallel_pairwise(mid, hi, f));
    a + b
}

fn sequential_pairwise<F>(lo: u64, hi: u64, f: &F) -> f64
where
    F: Fn(u64) -> f64,
{
    let len = hi - lo;
    if len <= 32 {
        let mut acc = 0.0;
        for leaf in lo..hi {
            acc += f(leaf);
        }
        return acc;
    }
    let mid = lo + len / 2;
    sequential_pairwise(lo, mid, f) + sequential_pairwise(mid, hi, f)
}

/// A tangent-copy sign tree: each step has a real block and a shadow block
/// of d_H sign bits each. Coefficients may read only real blocks of earlier
/// steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentTree {
    pub depth: usize,
    pub d_h: usize,
    pub step_scale: f64,
}

impl TangentTree {
    pub fn new(depth: usize, d_h: usize, step_scale: f64) -> Result<Self> {
        if depth == 0 || d_h == 0 {
            return Err(Error::invalid("tangent tree needs depth >= 1 and d_H >= 1"));
        }
        if !(step_scale > 0.0 && step_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "step scale must be positive and finite, got {step_scale}"
            )));
        }
        let bits = 2 * depth * d_h;
        if bits as u32 > ENUMERATION_BUDGET_BITS {
            return Err(Error::BudgetExceeded {
                context: "tangent tree enumeration",
                bits: bits as u32,
                budget: ENUMERATION_BUDGET_BITS,
            });
        }
        Ok(TangentTree {
            depth,
            d_h,
            step_scale,
        })
    }

    pub fn bits(&self) -> u32 {
        (2 * self.depth * self.d_h) as u32
    }

    pub fn leaves(&self) -> u64 {
        1u64 << self.bits()
    }

    #[inline]
    fn bit_sign(leaf: u64, bit: usize) -> f64 {
        if (leaf >> bit) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Real-block scaled increment at a step.
    #[inline]
    pub fn real_increment(&self, leaf: u64, step: usize, coord: usize) -> f64 {
        Self::bit_sign(leaf, 2 * step * self.d_h + coord) * self.step_scale
    }

    /// Shadow-block scaled increment at a step.
    #[inline]
    pub fn shadow_increment(&self, leaf: u64, step: usize, coord: usize) -> f64 {
        Self::bit_sign(leaf, (2 * step + 1) * self.d_h + coord) * self.step_scale
    }

    /// The real sign bits of all steps before `step`, packed in leaf
    /// order; the only information a predictable coefficient may consume.
    pub fn real_prefix(&self, leaf: u64, step: usize) -> u64 {
        let mut prefix = 0u64;
        for s in 0..step {
            let block = (leaf >> (2 * s * self.d_h)) & ((1 << self.d_h) - 1);
            prefix |= block << (s * self.d_h);
        }
        prefix
    }
}

/// A predictable coefficient family on a tangent tree: one d_E x d_H matrix
/// per step, reading at most the previous step's real sign block.
#[derive(Debug, Clone)]
pub struct OracleIntegrand {
    pub d_e: usize,
    pub d_h: usize,
    /// `tables[n]` maps the previous real block's bit pattern to the
    /// coefficient entries of step n, flattened row-major. Step 0 has a
    /// single entry.
    pub tables: Vec<Vec<Vec<f64>>>,
}

impl OracleIntegrand {
    /// Random integrand with dyadic-grid entries, drawn from the
    /// (seed, OracleCoeff, index) stream.
    pub fn random(tree: &TangentTree, d_e: usize, seed: u64, index: u64) -> Self {
        let mut rng = stream(seed, Purpose::OracleCoeff, index);
        let patterns = 1usize << tree.d_h;
        let tables = (0..tree.depth)
            .map(|n| {
                let cells = if n == 0 { 1 } else { patterns };
                (0..cells)
                    .map(|_| {
                        (0..d_e * tree.d_h)
                            .map(|_| dyadic_coefficient(&mut rng))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        OracleIntegrand {
            d_e,
            d_h: tree.d_h,
            tables,
        }
    }

    /// Coefficient entries for a step given the full leaf; reads only the
    /// real block of the preceding step.
    fn coefficient<'a>(&'a self, tree: &TangentTree, leaf: u64, step: usize) -> &'a [f64] {
        if step == 0 {
            return &self.tables[0][0];
        }
        let prev_block =
            ((leaf >> (2 * (step - 1) * tree.d_h)) & ((1 << tree.d_h) - 1)) as usize;
        &self.tables[step][prev_block % self.tables[step].len()]
    }
}

/// Per-leaf, per-step E-valued sequences stored flat.
#[derive(Debug, Clone)]
pub struct LeafSeries {
    pub leaves: usize,
    pub steps: usize,
    pub d_e: usize,
    data: Vec<f64>,
}

impl LeafSeries {
    fn zeros(leaves: usize, steps: usize, d_e: usize) -> Self {
        LeafSeries {
            leaves,
            steps,
            d_e,
            data: vec![0.0; leaves * steps * d_e],
        }
    }

    #[inline]
    pub fn get(&self, leaf: usize, step: usize) -> &[f64] {
        let start = (leaf * self.steps + step) * self.d_e;
        &self.data[start..start + self.d_e]
    }

    #[inline]
    fn get_mut(&mut self, leaf: usize, step: usize) -> &mut [f64] {
        let start = (leaf * self.steps + step) * self.d_e;
        &mut self.data[start..start + self.d_e]
    }
}

/// Evaluate the aligned pair (d, e) of an integrand on a tangent tree:
/// d_n reads the real increments, e_n the shadow increments, both through
/// the same predictable coefficient.
pub fn tangent_pair(tree: &TangentTree, phi: &OracleIntegrand) -> Result<(LeafSeries, LeafSeries)> {
    if tree.bits() > TRANSCRIPT_BUDGET_BITS {
        return Err(Error::BudgetExceeded {
            context: "tangent pair materialization",
            bits: tree.bits(),
            budget: TRANSCRIPT_BUDGET_BITS,
        });
    }
    if phi.d_h != tree.d_h || phi.tables.len() != tree.depth {
        return Err(Error::invalid(
            "integrand shape does not match the tangent tree",
        ));
    }
    let leaves = tree.leaves() as usize;
    let mut d = LeafSeries::zeros(leaves, tree.depth, phi.d_e);
    let mut e = LeafSeries::zeros(leaves, tree.depth, phi.d_e);
    for leaf in 0..leaves as u64 {
        for n in 0..tree.depth {
            let coeff = phi.coefficient(tree, leaf, n);
            let dv = d.get_mut(leaf as usize, n);
            for k in 0..tree.d_h {
                let inc = tree.real_increment(leaf, n, k);
                for r in 0..phi.d_e {
                    dv[r] += coeff[r * tree.d_h + k] * inc;
                }
            }
            let ev = e.get_mut(leaf as usize, n);
            for k in 0..tree.d_h {
                let inc = tree.shadow_increment(leaf, n, k);
                for r in 0..phi.d_e {
                    ev[r] += coeff[r * tree.d_h + k] * inc;
                }
            }
        }
    }
    Ok((d, e))
}

/// The tangent-sequence transform: r_{2n-1} = (d_n + e_n)/2 and
/// r_{2n} = (d_n - e_n)/2, interleaved as one martingale difference
/// sequence of twice the length.
#[derive(Debug, Clone)]
pub struct DecouplingTranscript {
    pub tree: TangentTree,
    pub d_e: usize,
    pub d: LeafSeries,
    pub e: LeafSeries,
    /// r, with 2*depth steps; index 2n holds r_{2n+1}, index 2n+1 holds
    /// r_{2n+2} in 1-based numbering.
    pub r: LeafSeries,
}

/// Build the transcript for aligned sequences d, e on a tangent tree.
pub fn decoupling_transform(
    tree: &TangentTree,
    d: LeafSeries,
    e: LeafSeries,
) -> Result<DecouplingTranscript> {
    let leaves = tree.leaves() as usize;
    for (series, name) in [(&d, "d"), (&e, "e")] {
        if series.leaves != leaves || series.steps != tree.depth {
            return Err(Error::invalid(format!(
                "sequence {name} does not match the tree shape"
            )));
        }
    }
    if d.d_e != e.d_e {
        return Err(Error::DimensionMismatch {
            context: "d and e target dimensions",
            expected: d.d_e,
            got: e.d_e,
        });
    }
    let d_e = d.d_e;
    let mut r = LeafSeries::zeros(leaves, 2 * tree.depth, d_e);
    for leaf in 0..leaves {
        for n in 0..tree.depth {
            let dv = d.get(leaf, n).to_vec();
            let ev = e.get(leaf, n).to_vec();
            {
                let r1 = r.get_mut(leaf, 2 * n);
                for i in 0..d_e {
                    r1[i] = 0.5 * (dv[i] + ev[i]);
                }
            }
            let r2 = r.get_mut(leaf, 2 * n + 1);
            for i in 0..d_e {
                r2[i] = 0.5 * (dv[i] - ev[i]);
            }
        }
    }
    Ok(DecouplingTranscript {
        tree: *tree,
        d_e,
        d,
        e,
        r,
    })
}

impl DecouplingTranscript {
    /// Largest violation of r_{2n-1} + r_{2n} = d_n and
    /// r_{2n-1} - r_{2n} = e_n over all leaves, steps and coordinates.
    pub fn max_pair_identity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for leaf in 0..self.d.leaves {
            for n in 0..self.tree.depth {
                let dv = self.d.get(leaf, n);
                let ev = self.e.get(leaf, n);
                let r1 = self.r.get(leaf, 2 * n);
                let r2 = self.r.get(leaf, 2 * n + 1);
                for i in 0..self.d_e {
                    worst = worst.max(((r1[i] + r2[i]) - dv[i]).abs());
                    worst = worst.max(((r1[i] - r2[i]) - ev[i]).abs());
                }
            }
        }
        worst
    }

    /// Largest violation of sum_n d_n = sum_j r_j and
    /// sum_n e_n = sum_j (-1)^{j+1} r_j over all leaves and coordinates.
    pub fn max_sum_identity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for leaf in 0..self.d.leaves {
            for i in 0..self.d_e {
                let mut sum_d = 0.0;
                let mut sum_e = 0.0;
                for n in 0..self.tree.depth {
                    sum_d += self.d.get(leaf, n)[i];
                    sum_e += self.e.get(leaf, n)[i];
                }
                let mut sum_r = 0.0;
                let mut alt_r = 0.0;
                for j in 0..2 * self.tree.depth {
                    let v = self.r.get(leaf, j)[i];
                    sum_r += v;
                    // 1-based sign (-1)^{j+1}: + for odd positions.
                    if j % 2 == 0 {
                        alt_r += v;
                    } else {
                        alt_r -= v;
                    }
                }
                worst = worst.max((sum_d - sum_r).abs());
                worst = worst.max((sum_e - alt_r).abs());
            }
        }
        worst
    }

    /// Largest |E[r_j | G_{j-1}]| over all j and all conditioning cells,
    /// computed by exact enumeration. The filtration doubles the step
    /// index: G_{2n} knows both blocks of the first n steps, while
    /// G_{2n-1} additionally knows the blockwise sums of step n.
    pub fn max_conditional_expectation(&self) -> f64 {
        let depth = self.tree.depth;
        let d_h = self.tree.d_h;
        let leaves = self.d.leaves;
        let mut worst = 0.0f64;
        for j in 0..2 * depth {
            let n = j / 2; // 0-based step of the pair
            let mut cells: HashMap<u64, (Vec<f64>, u64)> = HashMap::new();
            for leaf in 0..leaves {
                let low_mask = (1u64 << (2 * n * d_h)) - 1;
                let mut key = (leaf as u64) & low_mask;
                if j % 2 == 1 {
                    // Condition additionally on w_nk = real + shadow signs.
                    for k in 0..d_h {
                        let s = self.tree.real_increment(leaf as u64, n, k)
                            + self.tree.shadow_increment(leaf as u64, n, k);
                        // s is in {-2, 0, +2} times the scale; pack base 3.
                        let code = if s > 0.0 {
                            2u64
                        } else if s < 0.0 {
                            0u64
                        } else {
                            1u64
                        };
                        key = key * 3 + code;
                    }
                }
                let entry = cells
                    .entry(key)
                    .or_insert_with(|| (vec![0.0; self.d_e], 0));
                let rv = self.r.get(leaf, j);
                for i in 0..self.d_e {
                    entry.0[i] += rv[i];
                }
                entry.1 += 1;
            }
            for (sum, count) in cells.values() {
                for v in sum {
                    worst = worst.max((v / *count as f64).abs());
                }
            }
        }
        worst
    }
}

/// Result of the brute-force unconditionality scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmdRatioEstimate {
    pub p: f64,
    pub depth: usize,
    pub trials: usize,
    /// max over trials and sign patterns of
    /// (E ||sum eps_j d_j||^p / E ||sum d_j||^p)^{1/p}; at least 1 because
    /// the identity pattern is included.
    pub max_ratio: f64,
    pub worst_pattern: u64,
    pub worst_trial: usize,
}

/// Scan all 2^depth sign patterns against random martingale difference
/// sequences on a scalar-increment sign tree (unit step scale, one
/// coordinate per step; node coefficients on the dyadic grid).
///
/// For the scalar space at p = 2 the two moments are equal pattern by
/// pattern by orthogonality, and the dyadic grid makes the enumeration
/// sums exact, so the returned ratio is exactly 1.
pub fn umd_ratio(
    space: &BanachSpace,
    p: f64,
    depth: usize,
    trials: usize,
    seed: u64,
) -> Result<UmdRatioEstimate> {
    if depth == 0 || depth > UMD_DEPTH_BUDGET {
        return Err(Error::BudgetExceeded {
            context: "sign-pattern enumeration",
            bits: depth as u32,
            budget: UMD_DEPTH_BUDGET as u32,
        });
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must lie in [1, inf), got {p}")));
    }
    let tree = SignTree::new(depth, 1, 1.0)?;
    let d_e = space.dim();
    let leaves = tree.leaves() as usize;
    let patterns = 1u64 << depth;

    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst_pattern = 0u64;
    let mut worst_trial = 0usize;

    for trial in 0..trials {
        // c[level][node][coord], nodes indexed by the level's bit prefix.
        let mut rng = stream(seed, Purpose::OracleCoeff, trial as u64);
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(depth);
        for level in 0..depth {
            let nodes = 1usize << level;
            coeffs.push((0..nodes * d_e).map(|_| dyadic_coefficient(&mut rng)).collect());
        }
        // Ensure a nonzero sequence so the denominator is positive.
        if coeffs.iter().all(|c| c.iter().all(|v| *v == 0.0)) {
            coeffs[0][0] = 1.0;
        }

        // d_j per leaf: sign_j * c_j(prefix).
        let mut diffs = LeafSeries::zeros(leaves, depth, d_e);
        for leaf in 0..leaves {
            for j in 0..depth {
                let node = tree.node(leaf as u64, j) as usize;
                let sign = tree.sign(leaf as u64, j, 0);
                let dv = diffs.get_mut(leaf, j);
                for i in 0..d_e {
                    dv[i] = sign * coeffs[j][node * d_e + i];
                }
            }
        }

        let moment_sum = |pattern: u64| -> f64 {
            let terms: Vec<f64> = (0..leaves)
                .map(|leaf| {
                    let mut x = vec![0.0; d_e];
                    for j in 0..depth {
                        let eps = if (pattern >> j) & 1 == 0 { 1.0 } else { -1.0 };
                        let dv = diffs.get(leaf, j);
                        for i in 0..d_e {
                            x[i] += eps * dv[i];
                        }
                    }
                    let n = space.norm(&x).expect("length matches");
                    // Squaring by multiplication keeps dyadic inputs exact.
                    if p == 2.0 {
                        n * n
                    } else {
                        n.powf(p)
                    }
                })
                .collect();
            pairwise_sum(&terms)
        };

        let base = moment_sum(0);
        let trial_results: Vec<(u64, f64)> = (0..patterns)
            .into_par_iter()
            .map(|pattern| (pattern, moment_sum(pattern)))
            .collect();
        for (pattern, s) in trial_results {
            let ratio = (s / base).powf(1.0 / p);
            if ratio > max_ratio {
                max_ratio = ratio;
                worst_pattern = pattern;
                worst_trial = trial;
            }
        }
    }
    Ok(UmdRatioEstimate {
        p,
        depth,
        trials,
        max_ratio,
        worst_pattern,
        worst_trial,
    })
}

/// The discrete martingale representation of a mean-zero leaf functional
/// on a scalar sign tree: conditional expectations level by level, and the
/// predictable integrand that reproduces the functional leaf by leaf.
#[derive(Debug, Clone)]
pub struct DiscreteRepresentation {
    pub tree: SignTree,
    pub d_e: usize,
    /// eta[level][node][coord]: conditional expectation of the target after
    /// `level` steps; eta[0][0] is the (zero) mean.
    pub eta: Vec<Vec<Vec<f64>>>,
    /// phi[step][node][coord]: the predictable integrand,
    /// (eta_up - eta_down) / (2 * scale) at each node.
    pub phi: Vec<Vec<Vec<f64>>>,
}

/// Build the representation of a mean-zero target on a d_H = 1 tree.
///
/// The mean must vanish exactly; with dyadic-grid targets and power-of-two
/// step scales the reproduction identity is exact leaf by leaf.
pub fn discrete_representation<F>(
    tree: &SignTree,
    d_e: usize,
    target: F,
) -> Result<DiscreteRepresentation>
where
    F: Fn(u64) -> Vec<f64>,
{
    if tree.d_h != 1 {
        return Err(Error::invalid(
            "the discrete representation oracle runs on scalar-increment trees (d_H = 1)",
        ));
    }
    let depth = tree.depth;
    let leaves = tree.leaves() as usize;

    let mut eta: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth + 1);
    // Leaf level: node id at level `depth` is the whole leaf.
    let mut level: Vec<Vec<f64>> = (0..leaves)
        .map(|leaf| {
            let v = target(leaf as u64);
            assert_eq!(v.len(), d_e, "target dimension");
            v
        })
        .collect();
    eta.push(level.clone());
    for l in (0..depth).rev() {
        let nodes = 1usize << l;
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let up = &level[node]; // bit l = 0 means sign +1
            let down = &level[node | (1 << l)];
            next.push(
                up.iter()
                    .zip(down)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            );
        }
        eta.push(next.clone());
        level = next;
    }
    eta.reverse(); // eta[l] now has 2^l nodes

    let mean = &eta[0][0];
    if mean.iter().any(|v| *v != 0.0) {
        return Err(Error::invalid(format!(
            "representation target must have exactly zero mean, got {mean:?}"
        )));
    }

    let inv = 1.0 / (2.0 * tree.step_scale);
    let mut phi: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth);
    for step in 0..depth {
        let nodes = 1usize << step;
        let mut table = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let up = &eta[step + 1][node];
            let down = &eta[step + 1][node | (1 << step)];
            table.push(
                up.iter()
                    .zip(down)
                    .map(|(a, b)| (a - b) * inv)
                    .collect::<Vec<f64>>(),
            );
        }
        phi.push(table);
    }
    Ok(DiscreteRepresentation {
        tree: *tree,
        d_e,
        eta,
        phi,
    })
}

impl DiscreteRepresentation {
    /// The discrete integral of the representation's integrand on a leaf.
    pub fn reproduce(&self, leaf: u64) -> Vec<f64> {
        integrate_tree_predictable(&self.tree, &self.phi, leaf)
    }

    /// Largest coordinatewise gap between the reproduction and the target.
    pub fn max_reproduction_error<F>(&self, target: F) -> f64
    where
        F: Fn(u64) -> Vec<f64>,
    {
        let mut worst = 0.0f64;
        for leaf in 0..self.tree.leaves() {
            let got = self.reproduce(leaf);
            let want = target(leaf);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
        worst
    }
}

/// Integrate a predictable integrand table phi[step][node] against the
/// scaled tree increments on one leaf.
pub fn integrate_tree_predictable(
    tree: &SignTree,
    phi: &[Vec<Vec<f64>>],
    leaf: u64,
) -> Vec<f64> {
    let d_e = phi.first().map_or(0, |t| t[0].len());
    let mut acc = vec![0.0; d_e];
    for (step, table) in phi.iter().enumerate() {
        let node = tree.node(leaf, step) as usize;
        let inc = tree.increment(leaf, step, 0);
        for (a, c) in acc.iter_mut().zip(&table[node]) {
            *a += c * inc;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_is_enforced() {
        assert!(SignTree::new(25, 1, 1.0).is_err());
        assert!(SignTree::new(5, 5, 1.0).is_err());
        assert!(SignTree::new(24, 1, 1.0).is_ok());
        assert!(TangentTree::new(13, 1, 1.0).is_err());
        assert!(matches!(
            SignTree::new(13, 2, 1.0),
            Err(Error::BudgetExceeded { bits: 26, .. })
        ));
    }

    #[test]
    fn expectation_of_constants_and_single_signs() {
        let tree = SignTree::new(4, 2, 0.5).unwrap();
        assert_eq!(exact_expectation(&tree, |_| 2.75), 2.75);
        assert_eq!(exact_expectation(&tree, |leaf| tree.sign(leaf, 2, 1)), 0.0);
    }

    #[test]
    fn expectation_of_squared_walk_is_n_times_mesh() {
        // E (sum of signed steps)^2 = n * scale^2, exactly, for a
        // power-of-two scale.
        let scale = 0.5;
        for depth in [1, 3, 6] {
            let tree = SignTree::new(depth, 1, scale).unwrap();
            let got = exact_expectation(&tree, |leaf| {
                let mut w = 0.0;
                for n in 0..depth {
                    w += tree.increment(leaf, n, 0);
                }
                w * w
            });
            assert_eq!(got, depth as f64 * scale * scale);
        }
    }

    #[test]
    fn exact_moment_matches_norm_power_mean() {
        let tree = SignTree::new(3, 1, 1.0).unwrap();
        let space = BanachSpace::hilbert(1).unwrap();
        // |sum of 3 unit signs| is 1 or 3 with probabilities 6/8 and 2/8.
        let m = exact_moment(&tree, &space, 4.0, |leaf| {
            let mut w = 0.0;
            for n in 0..3 {
                w += tree.increment(leaf, n, 0);
            }
            vec![w]
        })
        .unwrap();
        let want = ((6.0 / 8.0) + (2.0 / 8.0) * 81.0f64).powf(0.25);
        assert!((m - want).abs() < 1e-14);
    }

    fn transcript_for(seed: u64, depth: usize, d_h: usize, d_e: usize) -> DecouplingTranscript {
        let tree = TangentTree::new(depth, d_h, 1.0).unwrap();
        let phi = OracleIntegrand::random(&tree, d_e, seed, 0);
        let (d, e) = tangent_pair(&tree, &phi).unwrap();
        decoupling_transform(&tree, d, e).unwrap()
    }

    #[test]
    fn decoupling_identities_are_exact() {
        for seed in 0..5 {
            let t = transcript_for(seed, 4, 2, 3);
            assert_eq!(t.max_pair_identity_error(), 0.0);
            assert_eq!(t.max_sum_identity_error(), 0.0);
            assert_eq!(t.max_conditional_expectation(), 0.0);
        }
    }

    #[test]
    fn decoupling_transform_validates_shapes() {
        let tree = TangentTree::new(3, 1, 1.0).unwrap();
        let phi = OracleIntegrand::random(&tree, 2, 1, 0);
        let (d, _) = tangent_pair(&tree, &phi).unwrap();
        let other = TangentTree::new(2, 1, 1.0).unwrap();
        let phi2 = OracleIntegrand::random(&other, 2, 1, 0);
        let (_, e2) = tangent_pair(&other, &phi2).unwrap();
        assert!(decoupling_transform(&tree, d, e2).is_err());
    }

    #[test]
    fn umd_ratio_is_exactly_one_for_scalar_p2() {
        let space = BanachSpace::hilbert(1).unwrap();
        let est = umd_ratio(&space, 2.0, 6, 5, 11).unwrap();
        assert_eq!(est.max_ratio, 1.0);
    }

    #[test]
    fn umd_ratio_includes_identity_pattern() {
        let space = BanachSpace::lq_unit(4.0, 3).unwrap();
        let est = umd_ratio(&space, 4.0, 5, 3, 13).unwrap();
        assert!(est.max_ratio >= 1.0);
        assert!(est.max_ratio.is_finite());
    }

    #[test]
    fn umd_ratio_depth_budget() {
        let space = BanachSpace::hilbert(1).unwrap();
        assert!(umd_ratio(&space, 2.0, 13, 1, 0).is_err());
        assert!(umd_ratio(&space, 2.0, 0, 1, 0).is_err());
    }

    #[test]
    fn representation_reproduces_first_increment() {
        let tree = SignTree::new(5, 1, 0.25).unwrap();
        let target = |leaf: u64| vec![tree.increment(leaf, 0, 0)];
        let rep = discrete_representation(&tree, 1, target).unwrap();
        assert_eq!(rep.max_reproduction_error(target), 0.0);
        // phi_0 must be the constant 1, later steps 0.
        assert_eq!(rep.phi[0][0][0], 1.0);
        for step in 1..5 {
            for node in 0..(1usize << step) {
                assert_eq!(rep.phi[step][node][0], 0.0);
            }
        }
    }

    #[test]
    fn representation_of_squared_walk_minus_time() {
        // Target W(T)^2 - T; the integrand must be 2 W(t_{n-1}).
        let scale = 0.5; // power of two keeps everything exact
        let depth = 6;
        let tree = SignTree::new(depth, 1, scale).unwrap();
        let t_total = depth as f64 * scale * scale;
        let walk = |leaf: u64, upto: usize| -> f64 {
            let mut w = 0.0;
            for n in 0..upto {
                w += tree.increment(leaf, n, 0);
            }
            w
        };
        let target = |leaf: u64| vec![walk(leaf, depth) * walk(leaf, depth) - t_total];
        let rep = discrete_representation(&tree, 1, target).unwrap();
        assert_eq!(rep.max_reproduction_error(target), 0.0);
        for step in 0..depth {
            for node in 0..(1u64 << step) {
                // Any leaf extending the node works; use the node itself.
                let want = 2.0 * walk(node, step);
                assert_eq!(rep.phi[step][node as usize][0], want);
            }
        }
    }

    #[test]
    fn representation_roundtrip_recovers_the_integrand() {
        let tree = SignTree::new(6, 1, 0.5).unwrap();
        let mut rng = stream(17, Purpose::OracleCoeff, 9);
        let mut phi: Vec<Vec<Vec<f64>>> = Vec::new();
        for step in 0..6 {
            let nodes = 1usize << step;
            phi.push(
                (0..nodes)
                    .map(|_| vec![dyadic_coefficient(&mut rng), dyadic_coefficient(&mut rng)])
                    .collect(),
            );
        }
        let target = |leaf: u64| integrate_tree_predictable(&tree, &phi, leaf);
        let rep = discrete_representation(&tree, 2, target).unwrap();
        assert_eq!(rep.max_reproduction_error(target), 0.0);
        for step in 0..6 {
            for node in 0..(1usize << step) {
                for i in 0..2 {
                    assert_eq!(rep.phi[step][node][i], phi[step][node][i]);
                }
            }
        }
    }

    #[test]
    fn representation_rejects_nonzero_mean() {
        let tree = SignTree::new(3, 1, 1.0).unwrap();
        assert!(discrete_representation(&tree, 1, |_| vec![1.0]).is_err());
    }

    #[test]
    fn representation_rejects_multi_coordinate_trees() {
        let tree = SignTree::new(3, 2, 1.0).unwrap();
        assert!(discrete_representation(&tree, 1, |_| vec![0.0]).is_err());
    }
}
