//! Property-based invariants: scale invariance of the Hurst estimators,
//! symmetry of the increment correlation, formatting round-trips, and
//! inversion identities.

use proptest::prelude::*;

use fracsde::csvio::fmt_f64;
use fracsde::estimators::{estimate_h1, estimate_h2, phi, phi_inverse, rho};
use fracsde::sde::SamplePath;
use fracsde::stats::quartiles;
use fracsde::{generate_path, GridSpec, Method};

/// A plausible positive path for estimator inputs: exponential of a rough
/// walk so that ratios are well conditioned.
fn synthetic_path(seed: u64, len: usize) -> SamplePath {
    let n = len - 1;
    let grid = GridSpec::new(n, 1.0).unwrap();
    let driver = generate_path(grid, 0.7, seed, Method::SpectralCirculant).unwrap();
    let values: Vec<f64> = driver.values().iter().map(|b| (0.5 * b).exp()).collect();
    SamplePath::from_observed(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Multiplying a path by a power of two leaves both Hurst estimators
    /// bit-identical: the statistics are ratios, and dyadic scaling is
    /// exact in binary floating point.
    #[test]
    fn hurst_estimators_are_dyadic_scale_invariant(
        seed in 0u64..1_000,
        exp in -8i32..9,
    ) {
        let path = synthetic_path(seed, 129);
        let alpha = 2f64.powi(exp);
        let scaled = SamplePath::from_observed(
            path.grid(),
            path.values().iter().map(|v| alpha * v).collect(),
        ).unwrap();
        let a1 = estimate_h1(&path, 0.7, 0.95).unwrap();
        let b1 = estimate_h1(&scaled, 0.7, 0.95).unwrap();
        prop_assert_eq!(a1.value.to_bits(), b1.value.to_bits());
        let a2 = estimate_h2(&path, 0.95).unwrap();
        let b2 = estimate_h2(&scaled, 0.95).unwrap();
        prop_assert_eq!(a2.value.to_bits(), b2.value.to_bits());
    }

    /// For general positive scale factors the invariance holds to rounding.
    #[test]
    fn hurst_estimators_are_scale_invariant_up_to_rounding(
        seed in 0u64..1_000,
        alpha in 1e-6f64..1e6,
    ) {
        let path = synthetic_path(seed, 129);
        let scaled = SamplePath::from_observed(
            path.grid(),
            path.values().iter().map(|v| alpha * v).collect(),
        ).unwrap();
        let a = estimate_h1(&path, 0.7, 0.95).unwrap().value;
        let b = estimate_h1(&scaled, 0.7, 0.95).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        let a = estimate_h2(&path, 0.95).unwrap().value;
        let b = estimate_h2(&scaled, 0.95).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    /// The increment correlation is even in the lag, bitwise.
    #[test]
    fn rho_is_even(hurst in 0.511f64..0.989, lag in 1i64..256) {
        prop_assert_eq!(
            rho(lag, hurst).unwrap().to_bits(),
            rho(-lag, hurst).unwrap().to_bits()
        );
    }

    /// 17-significant-digit decimal output recovers any finite double.
    #[test]
    fn fmt_f64_round_trips(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let back: f64 = fmt_f64(v).parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    /// `φ(n, T, ·)` followed by its inverse is the identity on the open
    /// unit interval (away from the saturating boundaries).
    #[test]
    fn phi_then_inverse_is_identity(
        n in 8usize..5000,
        horizon in 0.1f64..4.0,
        x in 0.01f64..0.99,
    ) {
        prop_assume!(n as f64 > horizon);
        let y = phi(n, horizon, x);
        let inv = phi_inverse(y, n, horizon).unwrap();
        prop_assert!(!inv.boundary);
        prop_assert!((inv.value - x).abs() <= 1e-9);
    }

    /// Quartiles are ordered and bracketed by the sample range.
    #[test]
    fn quartiles_are_ordered(values in prop::collection::vec(-1e3f64..1e3, 4..200)) {
        let (q1, q2, q3) = quartiles(&values).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= q1 && q1 <= q2 && q2 <= q3 && q3 <= hi);
    }

    /// Grid times are anchored, uniform and increasing.
    #[test]
    fn grid_times_are_monotone(n in 2usize..4096, horizon in 0.05f64..50.0) {
        let grid = GridSpec::new(n, horizon).unwrap();
        prop_assert_eq!(grid.t(0), 0.0);
        prop_assert!((grid.t(n) - horizon).abs() <= 1e-12 * horizon);
        let mut prev = -1.0;
        for k in 0..=n {
            let t = grid.t(k);
            prop_assert!(t > prev);
            prev = t;
        }
    }
}
