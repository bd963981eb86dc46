//! A step process on dyadic intervals whose level n switches on with
//! probability 1/n: every truncation is integrable, but the natural
//! divergence statistic grows without bound in the level count.

use gammaflow::space::{BanachSpace, TimeGrid};
use gammaflow::stats::{median, quantile};
use gammaflow::stochastic::{dyadic_divergence, DyadicDivergenceRun};

fn main() -> gammaflow::Result<()> {
    let grid = TimeGrid::new(1.0, 16)?;
    let space = BanachSpace::hilbert(16)?;
    let paths = 50_000;

    let run = dyadic_divergence(16, &space, &grid, paths, 23)?;
    println!("{:>5}  {:>9}  {:>9}  {:>12}", "n", "freq", "1/n", "amplitude");
    for n in [1usize, 2, 3, 4, 8, 12, 16] {
        println!(
            "{n:>5}  {:>9.5}  {:>9.5}  {:>12.3}",
            run.frequency(n),
            1.0 / n as f64,
            DyadicDivergenceRun::amplitude(n)
        );
    }

    // The per-path statistic sums n_j / j^2 over active levels; each term
    // is at least 1/j, so more levels push the whole distribution up.
    println!("\n{:>7}  {:>9}  {:>9}  {:>9}", "levels", "median", "q90", "max");
    for levels in [4usize, 8, 12, 16] {
        let r = dyadic_divergence(levels, &space, &grid, paths, 23)?;
        println!(
            "{levels:>7}  {:>9.4}  {:>9.4}  {:>9.4}",
            median(&r.statistics)?,
            quantile(&r.statistics, 0.9)?,
            r.statistics.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        );
    }
    Ok(())
}
