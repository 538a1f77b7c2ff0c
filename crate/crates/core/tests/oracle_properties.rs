use proptest::prelude::*;
use tevp_core::oracle::radial_eigenvalues;
use tevp_core::spectral::HarmonicBlocks;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roots_scale_inversely_with_radius(
        dim in 2usize..=3,
        a in 0.3f64..3.0,
        q in prop_oneof![1.2f64..4.0, 0.3f64..0.8],
        lo in 1.0f64..8.0,
    ) {
        let range = (lo, lo + 2.0);
        let unit = radial_eigenvalues(dim, 1.0, q, range, 0..=20, None).unwrap();
        let scaled = radial_eigenvalues(dim, a, q, (range.0 / a, range.1 / a), 0..=20, None).unwrap();
        // a root sitting on the range edge may fall either side after scaling
        let inner = |k: f64| k > range.0 + 1e-6 && k < range.1 - 1e-6;
        let unit: Vec<_> = unit.into_iter().filter(|r| inner(r.kappa)).collect();
        let scaled: Vec<_> = scaled.into_iter().filter(|r| inner(r.kappa * a)).collect();
        prop_assert_eq!(unit.len(), scaled.len());
        for (u, s) in unit.iter().zip(&scaled) {
            prop_assert_eq!(u.order, s.order);
            prop_assert!((s.kappa - u.kappa / a).abs() <= 1e-10 * u.kappa / a, "{} vs {}", s.kappa, u.kappa / a);
        }
    }

    /// The transmission block of the order that owns a root vanishes there.
    #[test]
    fn blocks_vanish_at_oracle_roots(dim in 2usize..=3, q in 1.5f64..6.0, lo in 1.0f64..6.0) {
        let roots = radial_eigenvalues(dim, 1.0, q, (lo, lo + 1.0), 0..=25, None).unwrap();
        for r in &roots {
            let b = HarmonicBlocks::new(dim, 1.0, r.kappa, q, r.order).unwrap();
            let rel = b.t[r.order].norm() / b.scale[r.order];
            prop_assert!(rel <= 1e-8, "order {} at {}: {rel:e}", r.order, r.kappa);
        }
    }
}
