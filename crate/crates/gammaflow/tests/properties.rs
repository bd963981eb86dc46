//! Property tests over the public API: serialization round trips, norm
//! axioms, statistics bounds, and stream determinism.

use proptest::prelude::*;

use gammaflow::linalg::Matrix;
use gammaflow::report::{to_csv, RatioReport};
use gammaflow::rng::{stream, uniform_int, GaussianSampler, Purpose};
use gammaflow::space::{BanachSpace, TimeGrid};
use gammaflow::stats::{mean_and_se, median, quantile};
use gammaflow::stochastic::{NoiseMode, PathBundle};
use rand::RngCore;

fn sample_row(anchor: String, predicate: String, lhs: f64) -> RatioReport {
    RatioReport {
        experiment: "two_sided".into(),
        anchor,
        p: 2.0,
        space_variant: "hilbert".into(),
        d_e: 4,
        q: 2.0,
        d_h: 2,
        horizon: 1.0,
        bins: 16,
        paths: 1000,
        seed: 7,
        mode: "gaussian".into(),
        lhs,
        lhs_stderr: 0.0,
        rhs: 1.0,
        rhs_stderr: 0.0,
        ratio: lhs,
        ci_low: lhs,
        ci_high: lhs,
        predicate,
        pass: true,
        generator_version: "g1-polar".into(),
        wallclock_ms: 0,
    }
}

/// Split one CSV record into fields, honoring RFC-style double quoting.
fn parse_csv_record(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if cur.is_empty() && !quoted => quoted = true,
            ',' if !quoted => {
                fields.push(std::mem::take(&mut cur));
            }
            c => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

proptest! {
    // Any finite float survives the CSV float format bit for bit.
    #[test]
    fn csv_floats_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let row = sample_row("a".into(), "p".into(), x);
        let text = to_csv(&[row]);
        let line = text.lines().nth(1).unwrap();
        let fields = parse_csv_record(line);
        let back: f64 = fields[12].parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    // Arbitrary text in anchor and predicate, including quotes and commas,
    // comes back unchanged from a quoted CSV record. Newlines are excluded:
    // one record per line is part of the report contract.
    #[test]
    fn csv_text_fields_round_trip(
        anchor in "[ -~]{0,40}",
        predicate in "[ -~]{0,40}",
    ) {
        let row = sample_row(anchor.clone(), predicate.clone(), 1.0);
        let text = to_csv(&[row]);
        let line = text.lines().nth(1).unwrap();
        let fields = parse_csv_record(line);
        prop_assert_eq!(fields.len(), 23);
        prop_assert_eq!(&fields[1], &anchor);
        prop_assert_eq!(&fields[19], &predicate);
    }

    // The path-bundle binary format reproduces every increment bit for bit
    // together with the header fields.
    #[test]
    fn bundle_dump_load_round_trips(
        paths in 1usize..5,
        bins in 1usize..9,
        d_h in 1usize..4,
        seed in any::<u64>(),
        gaussian in any::<bool>(),
    ) {
        let grid = TimeGrid::new(1.0, bins).unwrap();
        let mode = if gaussian { NoiseMode::Gaussian } else { NoiseMode::Rademacher };
        let bundle = PathBundle::sample(grid, d_h, paths, seed, mode, GaussianSampler::Polar).unwrap();
        let mut bytes = Vec::new();
        bundle.dump(&mut bytes).unwrap();
        let back = PathBundle::load(&mut bytes.as_slice(), grid.horizon).unwrap();
        prop_assert_eq!(back.paths, paths);
        prop_assert_eq!(back.d_h, d_h);
        prop_assert_eq!(back.seed, seed);
        for m in 0..paths {
            prop_assert_eq!(bundle.path(m), back.path(m));
            prop_assert_eq!(bundle.decoupled_path(m), back.decoupled_path(m));
        }
    }

    // Matrix construction from rows is faithful.
    #[test]
    fn matrix_from_rows_is_faithful(
        rows in prop::collection::vec(
            prop::collection::vec(-1.0e6f64..1.0e6, 3),
            1..5,
        ),
    ) {
        let m = Matrix::from_rows(&rows).unwrap();
        prop_assert_eq!(m.rows, rows.len());
        prop_assert_eq!(m.cols, 3);
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(m.row(i), r.as_slice());
        }
    }

    // Norm axioms (up to rounding): absolute homogeneity and the triangle
    // inequality, for both target variants.
    #[test]
    fn norms_satisfy_the_axioms(
        x in prop::collection::vec(-100.0f64..100.0, 4),
        y in prop::collection::vec(-100.0f64..100.0, 4),
        alpha in -16.0f64..16.0,
        q in 1.25f64..6.0,
        hilbert in any::<bool>(),
    ) {
        let space = if hilbert {
            BanachSpace::hilbert(4).unwrap()
        } else {
            BanachSpace::lq_unit(q, 4).unwrap()
        };
        let nx = space.norm(&x).unwrap();
        let ny = space.norm(&y).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let ns = space.norm(&scaled).unwrap();
        prop_assert!((ns - alpha.abs() * nx).abs() <= 1e-9 * (1.0 + ns.max(nx)));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let nsum = space.norm(&sum).unwrap();
        prop_assert!(nsum <= nx + ny + 1e-9 * (1.0 + nx + ny));
    }

    // Quantiles stay inside the sample range and the median between them.
    #[test]
    fn quantiles_are_bounded_by_the_range(
        xs in prop::collection::vec(-1.0e9f64..1.0e9, 1..50),
        frac in 0.0f64..=1.0,
    ) {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = quantile(&xs, frac).unwrap();
        prop_assert!(lo <= v && v <= hi);
        let med = median(&xs).unwrap();
        prop_assert!(lo <= med && med <= hi);
        prop_assert_eq!(quantile(&xs, 0.0).unwrap(), lo);
        prop_assert_eq!(quantile(&xs, 1.0).unwrap(), hi);
    }

    // Constant data has its value as mean and a vanishing standard error,
    // up to one rounding ulp picked up by the shared sum.
    #[test]
    fn mean_and_se_of_constants(c in -1.0e6f64..1.0e6, n in 2usize..40) {
        let xs = vec![c; n];
        let (mean, se) = mean_and_se(&xs).unwrap();
        prop_assert!((mean - c).abs() <= 1e-14 * (1.0 + c.abs()));
        prop_assert!(se >= 0.0);
        prop_assert!(se <= 1e-14 * (1.0 + c.abs()));
    }

    // uniform_int respects inclusive bounds for arbitrary ranges.
    #[test]
    fn uniform_int_is_inclusive(
        seed in any::<u64>(),
        a in -1000i64..1000,
        width in 0i64..100,
    ) {
        let mut rng = stream(seed, Purpose::ProcessGen, 0);
        for _ in 0..32 {
            let v = uniform_int(&mut rng, a, a + width);
            prop_assert!(a <= v && v <= a + width);
        }
    }

    // Streams are pure functions of (seed, purpose, index).
    #[test]
    fn streams_are_deterministic(seed in any::<u64>(), index in 0u64..1 << 40) {
        let mut a = stream(seed, Purpose::GammaMc, index);
        let mut b = stream(seed, Purpose::GammaMc, index);
        for _ in 0..8 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        // A different purpose with the same index diverges immediately.
        let mut c = stream(seed, Purpose::Increments, index);
        let mut d = stream(seed, Purpose::GammaMc, index);
        prop_assert_ne!(c.next_u64(), d.next_u64());
    }
}
