//! Three ways to measure the same operator: exact Frobenius norm for a
//! Hilbert target, Gaussian series Monte Carlo, and the square-function
//! norm for an Lq target built from the same matrix.

use gammaflow::gamma::{
    gamma_norm_exact, gamma_norm_mc, square_function_norm, GammaOperator,
};
use gammaflow::linalg::Matrix;
use gammaflow::rng::{dyadic_coefficient, stream, GaussianSampler, Purpose};
use gammaflow::space::{BanachSpace, TimeGrid};

fn main() -> gammaflow::Result<()> {
    let grid = TimeGrid::new(1.0, 8)?;
    let d_h = 2;
    let d_e = 4;

    let mut rng = stream(42, Purpose::MatrixGen, 0);
    let mut m = Matrix::zeros(d_e, grid.bins * d_h);
    for i in 0..d_e {
        for j in 0..grid.bins * d_h {
            m.set(i, j, dyadic_coefficient(&mut rng));
        }
    }

    let hilbert = GammaOperator::new(grid, d_h, BanachSpace::hilbert(d_e)?, m.clone())?;
    let exact = gamma_norm_exact(&hilbert)?;
    println!("exact gamma norm (Frobenius):   {exact:.10}");

    for sampler in [GaussianSampler::Polar, GaussianSampler::InverseCdf] {
        let est = gamma_norm_mc(&hilbert, 200_000, 42, sampler)?;
        println!(
            "mc estimate ({:>11}):      {:.10} +- {:.2e}",
            sampler.name(),
            est.value,
            est.standard_error
        );
    }

    // Same matrix viewed into L4: the square-function norm is exact there.
    let lq = GammaOperator::new(grid, d_h, BanachSpace::lq_unit(4.0, d_e)?, m)?;
    let sf = square_function_norm(&lq)?;
    println!("square-function norm (q = 4):   {sf:.10}");
    let est = gamma_norm_mc(&lq, 200_000, 42, GaussianSampler::Polar)?;
    println!(
        "mc estimate into L4:            {:.10} +- {:.2e}  (ratio {:.4})",
        est.value,
        est.standard_error,
        est.value / sf
    );
    Ok(())
}
