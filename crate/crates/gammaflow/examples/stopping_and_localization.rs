//! Stopping an integral is the same as integrating the time-truncated
//! representation, path by path; localizing times built from the gamma
//! norm of the truncation are monotone in the level.

use gammaflow::config::ExperimentConfig;
use gammaflow::gamma::{gamma_norm_surrogate, truncate_time};
use gammaflow::harness::random_adapted_process;
use gammaflow::stochastic::{localizing_times, represent, stop_and_truncate, PathBundle, StoppingTime};

fn main() -> gammaflow::Result<()> {
    let mut cfg = ExperimentConfig::defaults("localization");
    cfg.paths = 5000;
    cfg.seed = 17;
    let bundle = PathBundle::sample(cfg.grid, cfg.d_h, cfg.paths, cfg.seed, cfg.mode, cfg.sampler)?;
    let phi = random_adapted_process(&cfg, 0)?;

    let tau = StoppingTime::first_passage(&bundle, 0, 0.4)?;
    let stopped = stop_and_truncate(&phi, &bundle, &tau)?;
    println!("stopped-integral discrepancy  {:e}", stopped.max_discrepancy());

    let hit = tau.indices.iter().filter(|i| **i < cfg.grid.bins).count();
    println!(
        "first-passage at level 0.4    hit before T on {hit}/{} paths",
        cfg.paths
    );

    // tau_level = first time the truncated gamma norm reaches the level;
    // higher levels can only stop later.
    for level in [0.25, 0.5, 1.0, 2.0] {
        let t = localizing_times(&phi, &bundle, level)?;
        let mean_bin = t.indices.iter().sum::<usize>() as f64 / cfg.paths as f64;
        println!("localizing level {level:>5}       mean stopping bin {mean_bin:.2}");
    }

    // The truncated representation at the stopping bin is exactly what the
    // stopped integral integrates.
    let m = 0;
    let x = represent(&phi, &bundle, m)?;
    let cut = truncate_time(&x, cfg.grid.time(tau.indices[m]))?;
    println!(
        "path 0: stop bin {}  truncated gamma norm {:.6}",
        tau.indices[m],
        gamma_norm_surrogate(&cut)
    );
    Ok(())
}
