//! The isometry at p = 2: the second moment of the integral of a
//! deterministic step process equals the squared gamma norm of its
//! representation, here checked by Monte Carlo against the exact value.

use gammaflow::config::ExperimentConfig;
use gammaflow::gamma::gamma_norm_exact;
use gammaflow::harness::random_deterministic_process;
use gammaflow::stats::{mean_and_se, ratio_ci};
use gammaflow::stochastic::{integrate, represent, PathBundle};

fn main() -> gammaflow::Result<()> {
    let mut cfg = ExperimentConfig::defaults("ito_isometry");
    cfg.paths = 50_000;
    cfg.seed = 11;
    let bundle = PathBundle::sample(cfg.grid, cfg.d_h, cfg.paths, cfg.seed, cfg.mode, cfg.sampler)?;

    println!("{:>4}  {:>14}  {:>14}  {:>8}  ci", "phi", "E||I(phi)||^2", "||X||_F^2", "ratio");
    for f in 0..8 {
        let phi = random_deterministic_process(&cfg, f)?;
        // Deterministic coefficients: one representation serves all paths.
        let x = represent(&phi, &bundle, 0)?;
        let g = gamma_norm_exact(&x)?;
        let squares: Vec<f64> = integrate(&phi, &bundle)?
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>())
            .collect();
        let (mean, se) = mean_and_se(&squares)?;
        let (ratio, lo, hi) = ratio_ci(mean, se, g * g, 0.0)?;
        println!(
            "{f:>4}  {mean:>14.6}  {:>14.6}  {ratio:>8.4}  [{lo:.4}, {hi:.4}]",
            g * g
        );
    }
    Ok(())
}
