use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use tevp_core::geometry::{build_surface, Shape};
use tevp_core::oracle::disk_scattering;
use tevp_core::scatter::{
    direction_grid, optical_theorem_defect, solve_forward, HerglotzDensity, Incident, ScatterOptions,
};

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        Just(Shape::Circle { radius: 1.0 }),
        (0.7f64..1.3, 0.7f64..1.3).prop_map(|(a, b)| Shape::Ellipse { a, b }),
        Just(Shape::Kite),
    ]
}

fn density(values: &[(f64, f64)]) -> Vec<Complex64> {
    values.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn far_field_is_linear_in_the_incident_field(
        shape in shape(),
        k in 1.0f64..5.0,
        q in 1.5f64..3.0,
        g1 in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        g2 in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        c in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let s = build_surface(&shape, 96).unwrap();
        let o = ScatterOptions::default();
        let c = Complex64::new(c.0, c.1);
        let (g1, g2) = (density(&g1), density(&g2));
        let sum: Vec<Complex64> = g1.iter().zip(&g2).map(|(a, b)| a + c * b).collect();
        let d = direction_grid(16);
        let solve = |g: Vec<Complex64>| {
            let h = HerglotzDensity::new(k, g).unwrap();
            solve_forward(&s, q, k, &Incident::Herglotz(h), &o).map(|sol| (sol.kappa, sol.far_field(&d)))
        };
        let (a, b, ab) = (solve(g1), solve(g2), solve(sum));
        prop_assume!(a.is_ok() && b.is_ok() && ab.is_ok());
        let ((ka, a), (kb, b), (kab, ab)) = (a.unwrap(), b.unwrap(), ab.unwrap());
        // a perturbed wavenumber would make the three solves incomparable
        prop_assume!(ka == k && kb == k && kab == k);
        let size = a.iter().chain(&b).map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..d.len() {
            let err = (ab[i] - a[i] - c * b[i]).norm();
            prop_assert!(err <= 1e-10 * size * (1.0 + c.norm()), "{i}: {err:e}");
        }
    }

    #[test]
    fn far_field_is_reciprocal(shape in shape(), k in 1.0f64..5.0, q in 1.5f64..3.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let s = build_surface(&shape, 128).unwrap();
        let o = ScatterOptions::default();
        let fa = solve_forward(&s, q, k, &Incident::plane_wave(a), &o).unwrap();
        let fb = solve_forward(&s, q, k, &Incident::plane_wave(b + PI), &o).unwrap();
        prop_assume!(fa.kappa == k && fb.kappa == k);
        let x = fa.far_field(&[[b.cos(), b.sin(), 0.0]])[0];
        let y = fb.far_field(&[[-a.cos(), -a.sin(), 0.0]])[0];
        prop_assert!((x - y).norm() <= 1e-8 * x.norm().max(1e-6), "{x} vs {y}");
    }

    #[test]
    fn optical_theorem_holds(shape in shape(), k in 1.0f64..5.0, q in 1.5f64..3.0, a in 0.0f64..6.3) {
        let s = build_surface(&shape, 128).unwrap();
        let sol = solve_forward(&s, q, k, &Incident::plane_wave(a), &ScatterOptions::default()).unwrap();
        let d = direction_grid(256);
        let norm2 = sol.far_field(&d).iter().map(|z| z.norm_sqr()).sum::<f64>() * 2.0 * PI / 256.0;
        let defect = optical_theorem_defect(&sol, [a.cos(), a.sin(), 0.0], 256);
        prop_assert!(defect <= 1e-8 * norm2.max(1e-6), "{defect:e} against {norm2:e}");
    }

    #[test]
    fn disk_solver_matches_partial_waves(k in 1.0f64..6.0, q in 1.5f64..3.0, a in 0.0f64..6.3) {
        let s = build_surface(&Shape::Circle { radius: 1.0 }, 128).unwrap();
        let sol = solve_forward(&s, q, k, &Incident::plane_wave(a), &ScatterOptions::default()).unwrap();
        prop_assume!(sol.kappa == k);
        let oracle = disk_scattering(1.0, k, q, 60).unwrap();
        for th in direction_grid(12).iter().map(|d| d[1].atan2(d[0])) {
            let x = sol.far_field(&[[th.cos(), th.sin(), 0.0]])[0];
            let y = oracle.far_field(a, th);
            prop_assert!((x - y).norm() <= 1e-8 * y.norm().max(1e-3), "θ = {th}: {x} vs {y}");
        }
    }
}
