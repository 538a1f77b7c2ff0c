use num_complex::Complex64;
use proptest::prelude::*;
use tevp_core::geometry::harmonics::HarmonicIndex;
use tevp_core::geometry::{build_surface, Shape};
use tevp_core::layerpot::{assemble, eval_potential, harmonic_to_nodal, EvalMode, OperatorKind, PotentialValues};
use tevp_core::par::Execution;

fn curve() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|radius| Shape::Circle { radius }),
        (0.6f64..1.6, 0.6f64..1.6).prop_map(|(a, b)| Shape::Ellipse { a, b }),
        Just(Shape::Kite),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `S_ij/w_j` is complex symmetric.
    #[test]
    fn single_layer_is_symmetric_once_weights_are_unfolded(shape in curve(), k in 0.5f64..12.0, half in 24usize..64) {
        let s = build_surface(&shape, 2 * half).unwrap();
        let op = assemble(&s, k, OperatorKind::Single, Execution::Sequential).unwrap();
        let m = op.dense().unwrap();
        let n = s.len();
        let (mut skew, mut total) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let a = m[(i, j)] / s.weights[j];
                let b = m[(j, i)] / s.weights[i];
                skew += (a - b).norm_sqr();
                total += a.norm_sqr();
            }
        }
        let rel = (skew / total).sqrt();
        prop_assert!(rel <= 1e-12, "{rel:e}");
    }

    #[test]
    fn circle_operators_commute_with_rotation(
        radius in 0.5f64..2.0,
        k in 0.5f64..12.0,
        half in 24usize..64,
        shift in 1usize..40,
        kstar in any::<bool>(),
    ) {
        let n = 2 * half;
        let s = build_surface(&Shape::Circle { radius }, n).unwrap();
        let kind = if kstar { OperatorKind::KStar } else { OperatorKind::Single };
        let op = assemble(&s, k, kind, Execution::Sequential).unwrap();
        let m = op.dense().unwrap();
        let (mut comm, mut total) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let a = m[(i, j)];
                let b = m[((i + shift) % n, (j + shift) % n)];
                comm += (a - b).norm_sqr();
                total += a.norm_sqr();
            }
        }
        let rel = (comm / total).sqrt();
        prop_assert!(rel <= 1e-9, "{rel:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Potentials of sphere harmonics of degree `l`, sampled on the sphere at
    /// depth `R`, decay monotonically in `l` once `l` passes `κ`. Degrees stay
    /// low enough for the values to sit above the quadrature error.
    #[test]
    fn sphere_mode_contributions_decay(k in 1.0f64..5.0, depth in 0.4f64..0.6) {
        let s = build_surface(&Shape::Sphere { radius: 1.0 }, 32).unwrap();
        let probe = build_surface(&Shape::Sphere { radius: 1.0 - depth }, 24).unwrap();
        let start = k.ceil() as usize + 1;
        let mut prev = f64::INFINITY;
        for l in start..=start + 5 {
            let phi = harmonic_to_nodal(&s, &[(HarmonicIndex { order: l, component: 0 }, Complex64::new(1.0, 0.0))]).unwrap();
            let PotentialValues::Values(v) = eval_potential(&s, k, &phi, &probe.nodes, EvalMode::Value, 0.1).unwrap() else {
                unreachable!()
            };
            let size = v.iter().zip(&probe.weights).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(size < prev, "l = {l}: {size:e} after {prev:e}");
            prev = size;
        }
    }
}
