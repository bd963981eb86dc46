//! The exact layer: expectations over sign trees are finite averages over
//! 2^bits equiprobable leaves, so the identities below hold with zero
//! tolerance, not within a Monte Carlo band.

use gammaflow::oracle::{
    discrete_representation, exact_expectation, umd_ratio, SignTree,
};
use gammaflow::space::BanachSpace;

fn main() -> gammaflow::Result<()> {
    // E[W_n^2] = n s^2 for the scaled random walk, summed exactly.
    let tree = SignTree::new(10, 1, 0.5)?;
    let walk = |leaf: u64| (0..10).map(|n| tree.increment(leaf, n, 0)).sum::<f64>();
    let ew2 = exact_expectation(&tree, |leaf| {
        let w = walk(leaf);
        w * w
    });
    println!("E W^2 over 2^10 leaves   {ew2}  (closed form {})", 10.0 * 0.25);

    // Scalar target at p = 2: every sign transform preserves the moment,
    // so the worst ratio over all 2^depth patterns is exactly 1.
    let est = umd_ratio(&BanachSpace::hilbert(1)?, 2.0, 10, 8, 3)?;
    println!(
        "worst sign-pattern ratio {}  (pattern {:#x}, trial {})",
        est.max_ratio, est.worst_pattern, est.worst_trial
    );

    // Martingale representation: W^2 - T is an integral of the predictable
    // integrand 2 W, recovered node by node.
    let t_total = 10.0 * 0.25;
    let rep = discrete_representation(&tree, 1, |leaf| {
        let w = walk(leaf);
        vec![w * w - t_total]
    })?;
    let err = rep.max_reproduction_error(|leaf| {
        let w = walk(leaf);
        vec![w * w - t_total]
    });
    println!("reproduction error       {err:e}");
    let prefix = |leaf: u64, upto: usize| (0..upto).map(|n| tree.increment(leaf, n, 0)).sum::<f64>();
    let mut worst = 0.0f64;
    for step in 0..10 {
        for node in 0..(1u64 << step) {
            worst = worst.max((rep.phi[step][node as usize][0] - 2.0 * prefix(node, step)).abs());
        }
    }
    println!("integrand vs 2 W         {worst:e}");
    Ok(())
}
