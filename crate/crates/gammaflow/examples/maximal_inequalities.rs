//! Running-maximum comparisons for adapted integrals: Doob's inequality
//! with its sharp constant at p = 2, and the sup moment against the
//! pathwise gamma norm of the representation.

use gammaflow::config::ExperimentConfig;
use gammaflow::harness::random_adapted_process;
use gammaflow::stats::estimate_moment;
use gammaflow::stochastic::{integral_process, represent, PathBundle};
use gammaflow::gamma::gamma_norm_surrogate;

fn main() -> gammaflow::Result<()> {
    let mut cfg = ExperimentConfig::defaults("doob");
    cfg.paths = 40_000;
    cfg.seed = 13;
    let bundle = PathBundle::sample(cfg.grid, cfg.d_h, cfg.paths, cfg.seed, cfg.mode, cfg.sampler)?;

    for f in 0..5 {
        let phi = random_adapted_process(&cfg, f)?;
        let proc = integral_process(&phi, &bundle)?;

        let sup2: f64 = proc.sup_norms.iter().map(|s| s * s).sum::<f64>() / cfg.paths as f64;
        let fin2: f64 = (0..cfg.paths)
            .map(|m| {
                let v = proc.final_value(m);
                v.iter().map(|c| c * c).sum::<f64>()
            })
            .sum::<f64>()
            / cfg.paths as f64;

        // Doob at p = 2: E sup^2 <= 4 E ||final||^2.
        println!(
            "phi {f}: E sup^2 = {sup2:>9.4}   4 E final^2 = {:>9.4}   slack {:>6.3}",
            4.0 * fin2,
            4.0 * fin2 - sup2
        );

        let gam: gammaflow::Result<Vec<f64>> = (0..cfg.paths)
            .map(|m| represent(&phi, &bundle, m).map(|x| gamma_norm_surrogate(&x)))
            .collect();
        let sup_moment = estimate_moment(&proc.sup_norms, 2.0)?;
        let gam_moment = estimate_moment(&gam?, 2.0)?;
        println!(
            "        sup moment root {:.4}  gamma moment root {:.4}  ratio {:.4}",
            sup_moment.value,
            gam_moment.value,
            sup_moment.value / gam_moment.value
        );
    }
    Ok(())
}
