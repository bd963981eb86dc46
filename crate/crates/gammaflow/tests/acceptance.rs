//! End-to-end acceptance suite. Each numbered criterion prints exactly one
//! pass/fail line; the test fails if any criterion fails. Criteria with a
//! runtime budget are timed individually.

// Negated comparisons (`!(x > 0.0)`) are deliberate NaN guards; index loops
// mirror the tree/matrix layout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::time::Instant;

use gammaflow::config::ExperimentConfig;
use gammaflow::gamma::{gamma_norm_mc_series, square_function_norm, GammaOperator};
use gammaflow::harness::{random_adapted_process, run_experiment};
use gammaflow::linalg::Matrix;
use gammaflow::oracle::{
    decoupling_transform, discrete_representation, integrate_tree_predictable, tangent_pair,
    OracleIntegrand, SignTree, TangentTree,
};
use gammaflow::rng::{dyadic_coefficient, stream, GaussianSampler, Purpose};
use gammaflow::space::BanachSpace;
use gammaflow::stats::median;
use gammaflow::stochastic::{dyadic_divergence, stop_and_truncate, PathBundle, StoppingTime};

struct Criterion {
    number: usize,
    label: &'static str,
    budget_s: Option<f64>,
}

fn check(
    failures: &mut Vec<String>,
    c: Criterion,
    body: impl FnOnce() -> Result<String, String>,
) {
    let started = Instant::now();
    let outcome = body();
    let elapsed = started.elapsed().as_secs_f64();
    let over_budget = c.budget_s.is_some_and(|b| elapsed > b);
    match outcome {
        Ok(detail) if !over_budget => {
            println!(
                "criterion {:02} pass  ({elapsed:6.2}s)  {}  [{detail}]",
                c.number, c.label
            );
        }
        Ok(detail) => {
            println!(
                "criterion {:02} FAIL  ({elapsed:6.2}s)  {}  [over budget {}s; {detail}]",
                c.number,
                c.label,
                c.budget_s.unwrap()
            );
            failures.push(format!("criterion {:02}: runtime budget", c.number));
        }
        Err(why) => {
            println!(
                "criterion {:02} FAIL  ({elapsed:6.2}s)  {}  [{why}]",
                c.number, c.label
            );
            failures.push(format!("criterion {:02}: {why}", c.number));
        }
    }
}

fn all_rows_pass(rows: &[gammaflow::report::RatioReport]) -> Result<(), String> {
    for (i, r) in rows.iter().enumerate() {
        if !r.pass {
            return Err(format!(
                "row {i} failed: lhs {} rhs {} ratio {} predicate {}",
                r.lhs, r.rhs, r.ratio, r.predicate
            ));
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let mut failures = Vec::new();

    check(
        &mut failures,
        Criterion {
            number: 1,
            label: "Ito isometry per deterministic integrand at 4 standard errors",
            budget_s: Some(30.0),
        },
        || {
            let mut cfg = ExperimentConfig::defaults("ito_isometry");
            cfg.paths = 100_000;
            cfg.trials = 20;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;
            Ok(format!("{} integrands, M = {}", rows.len(), cfg.paths))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 2,
            label: "mixed-norm comparison computed exactly at p = 2",
            budget_s: Some(5.0),
        },
        || {
            let mut cfg = ExperimentConfig::defaults("gamma_fubini");
            cfg.trials = 10;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;
            let worst = rows
                .iter()
                .map(|r| (r.lhs - r.rhs).abs() / r.rhs.max(1.0))
                .fold(0.0f64, f64::max);
            if worst > 1e-10 {
                return Err(format!("worst relative gap {worst:e} above 1e-10"));
            }
            Ok(format!("10 sample sets, worst relative gap {worst:.2e}"))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 3,
            label: "tangent-transform identities exact over a depth-6 tree",
            budget_s: Some(60.0),
        },
        || {
            let tree = TangentTree::new(6, 1, 1.0).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for f in 0..50 {
                let ig = OracleIntegrand::random(&tree, 3, 7, f);
                let (d, e) = tangent_pair(&tree, &ig).map_err(|e| e.to_string())?;
                let t = decoupling_transform(&tree, d, e).map_err(|e| e.to_string())?;
                worst = worst
                    .max(t.max_pair_identity_error())
                    .max(t.max_sum_identity_error())
                    .max(t.max_conditional_expectation());
            }
            if worst != 0.0 {
                return Err(format!("worst identity error {worst:e}, expected exactly 0"));
            }
            Ok("50 integrands, all identities exactly zero".into())
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 4,
            label: "decoupled comparison centered at 1 for all rule classes",
            budget_s: Some(60.0),
        },
        || {
            let mut cfg = ExperimentConfig::defaults("decoupling");
            cfg.paths = 100_000;
            cfg.trials = 20;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;
            Ok(format!("{} adapted integrands, M = {}", rows.len(), cfg.paths))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 5,
            label: "Doob maximal inequality with constant (p/(p-1))^p at p = 2",
            budget_s: None,
        },
        || {
            let mut cfg = ExperimentConfig::defaults("doob");
            cfg.paths = 20_000;
            cfg.trials = 20;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;
            Ok(format!("{} adapted integrands", rows.len()))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 6,
            label: "square-function norm: exact at q = 2, seed-stable band at q in {1.5, 4}",
            budget_s: None,
        },
        || {
            let mut cfg = ExperimentConfig::defaults("square_function");
            cfg.space = BanachSpace::lq_unit(2.0, 8).map_err(|e| e.to_string())?;
            cfg.trials = 20;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;

            let grid = cfg.grid;
            let d_h = cfg.d_h;
            let mut spreads = Vec::new();
            for (tag, q) in [(0u64, 1.5), (1u64, 4.0)] {
                let space = BanachSpace::lq_unit(q, 8).map_err(|e| e.to_string())?;
                let mut rng = stream(99, Purpose::MatrixGen, tag);
                let mut m = Matrix::zeros(8, grid.bins * d_h);
                for i in 0..8 {
                    for j in 0..grid.bins * d_h {
                        m.set(i, j, dyadic_coefficient(&mut rng));
                    }
                }
                let x = GammaOperator::new(grid, d_h, space, m).map_err(|e| e.to_string())?;
                let sf = square_function_norm(&x).map_err(|e| e.to_string())?;
                let mut ratios = Vec::new();
                for seed in 1..=5u64 {
                    let est = gamma_norm_mc_series(&x, 100_000, seed, GaussianSampler::Polar, 0)
                        .map_err(|e| e.to_string())?;
                    ratios.push(est.value / sf);
                }
                let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let spread = (hi - lo) / (0.5 * (hi + lo));
                if !(spread < 0.25) {
                    return Err(format!("q = {q}: relative spread {spread:.4} not < 0.25"));
                }
                spreads.push(format!("q = {q}: spread {spread:.4}"));
            }
            Ok(format!("q = 2 exact; {}", spreads.join(", ")))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 7,
            label: "type-2 and cotype-2 directions with a single constant each",
            budget_s: None,
        },
        || {
            let mut details = Vec::new();
            for q in [4.0, 1.5] {
                let mut cfg = ExperimentConfig::defaults("type_cotype");
                cfg.space = BanachSpace::lq_unit(q, 8).map_err(|e| e.to_string())?;
                cfg.trials = 50;
                cfg.seed = 7;
                let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
                all_rows_pass(&rows)?;
                details.push(format!("q = {q}: K = {:.6}", rows[0].lhs));
            }
            Ok(details.join(", "))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 8,
            label: "stopped integral equals the integral of the truncated representation",
            budget_s: None,
        },
        || {
            let cfg = ExperimentConfig::defaults("localization");
            let bundle = PathBundle::sample(cfg.grid, cfg.d_h, 2000, 7, cfg.mode, cfg.sampler)
                .map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for f in 0..20u64 {
                let mut cfg_f = ExperimentConfig::defaults("localization");
                cfg_f.seed = 7;
                let phi = random_adapted_process(&cfg_f, f).map_err(|e| e.to_string())?;
                let coord = (f as usize) % cfg.d_h;
                let level = 0.2 + 0.03 * f as f64;
                let tau = StoppingTime::first_passage(&bundle, coord, level)
                    .map_err(|e| e.to_string())?;
                let stopped =
                    stop_and_truncate(&phi, &bundle, &tau).map_err(|e| e.to_string())?;
                worst = worst.max(stopped.max_discrepancy());
            }
            if worst > 1e-12 {
                return Err(format!("worst per-path discrepancy {worst:e} above 1e-12"));
            }
            Ok(format!(
                "20 integrands and threshold rules, worst discrepancy {worst:.2e}"
            ))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 9,
            label: "discrete representation exact at depth 10, including W(T)^2 - T",
            budget_s: None,
        },
        || {
            let depth = 10usize;
            let scale = 0.25;
            let tree = SignTree::new(depth, 1, scale).map_err(|e| e.to_string())?;
            let walk = |leaf: u64, upto: usize| -> f64 {
                (0..upto).map(|n| tree.increment(leaf, n, 0)).sum()
            };
            let t_total = depth as f64 * scale * scale;
            let target = |leaf: u64| vec![walk(leaf, depth) * walk(leaf, depth) - t_total];
            let rep = discrete_representation(&tree, 1, target).map_err(|e| e.to_string())?;
            let mut err = rep.max_reproduction_error(target);
            for step in 0..depth {
                for node in 0..(1u64 << step) {
                    err = err
                        .max((rep.phi[step][node as usize][0] - 2.0 * walk(node, step)).abs());
                }
            }
            for f in 0..10u64 {
                let mut rng = stream(7, Purpose::OracleCoeff, 3_000_000 + f);
                let d_e = 2usize;
                let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth);
                for step in 0..depth {
                    table.push(
                        (0..(1usize << step))
                            .map(|_| (0..d_e).map(|_| dyadic_coefficient(&mut rng)).collect())
                            .collect(),
                    );
                }
                let rt_target = |leaf: u64| integrate_tree_predictable(&tree, &table, leaf);
                let rt = discrete_representation(&tree, d_e, rt_target)
                    .map_err(|e| e.to_string())?;
                err = err.max(rt.max_reproduction_error(rt_target));
                for step in 0..depth {
                    for node in 0..(1usize << step) {
                        for i in 0..d_e {
                            err = err.max((rt.phi[step][node][i] - table[step][node][i]).abs());
                        }
                    }
                }
            }
            if err != 0.0 {
                return Err(format!("worst representation error {err:e}, expected exactly 0"));
            }
            Ok("reproduction and roundtrip exact on 2^10 leaves".into())
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 10,
            label: "tail bound with calibrated constant over a 5 x 5 quantile lattice",
            budget_s: None,
        },
        || {
            let mut cfg = ExperimentConfig::defaults("tail_bound");
            cfg.paths = 100_000;
            cfg.trials = 20;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            if rows.len() != 25 {
                return Err(format!("expected 25 lattice rows, got {}", rows.len()));
            }
            all_rows_pass(&rows)?;
            Ok(format!("25 lattice points at M = {}", cfg.paths))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 11,
            label: "dyadic blow-up: frequencies 1/n and strictly increasing medians",
            budget_s: None,
        },
        || {
            let mut cfg = ExperimentConfig::defaults("example29");
            cfg.space = BanachSpace::hilbert(16).map_err(|e| e.to_string())?;
            cfg.depth = 16;
            cfg.paths = 20_000;
            cfg.seed = 7;
            let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
            all_rows_pass(&rows)?;

            let mut medians = Vec::new();
            for levels in [8usize, 12, 16] {
                let run = dyadic_divergence(levels, &cfg.space, &cfg.grid, cfg.paths, cfg.seed)
                    .map_err(|e| e.to_string())?;
                medians.push(median(&run.statistics).map_err(|e| e.to_string())?);
            }
            if !(medians[0] < medians[1] && medians[1] < medians[2]) {
                return Err(format!("medians not strictly increasing: {medians:?}"));
            }
            Ok(format!(
                "frequencies pass for n <= 16; medians {:.4} < {:.4} < {:.4}",
                medians[0], medians[1], medians[2]
            ))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 12,
            label: "martingale integrand bound with one constant across horizons",
            budget_s: None,
        },
        || {
            let mut k = f64::NEG_INFINITY;
            for horizon in [0.5, 1.0, 2.0] {
                let mut cfg = ExperimentConfig::defaults("martingale_integrand");
                cfg.grid.horizon = horizon;
                cfg.trials = 20;
                cfg.paths = 20_000;
                cfg.seed = 7;
                let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
                all_rows_pass(&rows)?;
                for r in &rows {
                    if !r.ratio.is_finite() {
                        return Err(format!("non-finite ratio at T = {horizon}"));
                    }
                    k = k.max(r.ratio);
                }
            }
            Ok(format!("single K = {k:.6} over 20 specs and T in {{0.5, 1, 2}}"))
        },
    );

    check(
        &mut failures,
        Criterion {
            number: 13,
            label: "suite reports are byte-identical across worker counts",
            budget_s: None,
        },
        || {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let exe = env!("CARGO_BIN_EXE_gammaflow");
            let mut outputs = Vec::new();
            for workers in ["1", "8"] {
                let path = dir.path().join(format!("suite_w{workers}.csv"));
                let status = std::process::Command::new(exe)
                    .args([
                        "suite",
                        "--seed",
                        "7",
                        "--workers",
                        workers,
                        "--out",
                        path.to_str().unwrap(),
                    ])
                    .status()
                    .map_err(|e| e.to_string())?;
                if !status.success() {
                    return Err(format!(
                        "suite with {workers} workers exited with {status}"
                    ));
                }
                outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
            }
            if outputs[0] != outputs[1] {
                return Err("reports differ between 1 and 8 workers".into());
            }
            Ok(format!("{} identical bytes", outputs[0].len()))
        },
    );

    assert!(
        failures.is_empty(),
        "{} acceptance criteria failed:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
