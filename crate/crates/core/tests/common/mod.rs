//! Invariant checks shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use tevp_core::diagnostics::weyl_count_sweep;
use tevp_core::geometry::harmonics::{circle_components, fourier, sphere, sphere_components, HarmonicIndex};
use tevp_core::geometry::{build_surface, BoundarySurface, Shape};
use tevp_core::linalg::gauss_legendre;
use tevp_core::par::Execution;
use tevp_core::spectral::{build_a, eig_window, EigenBasis, Path, SystemOptions, TransmissionSystem};

pub type CMatrix = DMatrix<Complex64>;

pub fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n)
        .prop_map(move |v| CMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

/// `build_a(B) = I − (I − B)*(I − B)` to `1e−10`, relative to `1 + ‖B‖²`.
pub fn a_identity(b: &CMatrix) -> Result<(), TestCaseError> {
    let n = b.nrows();
    let id = CMatrix::identity(n, n);
    let c = &id - b;
    let expect = &id - c.adjoint() * &c;
    let (a, _) = build_a(b);
    let err = (&a - &expect).norm() / (1.0 + b.norm_squared());
    prop_assert!(err <= 1e-10, "relative defect {err:e}");
    let skew = (&a - a.adjoint()).norm();
    prop_assert!(skew == 0.0, "A is not exactly Hermitian: {skew:e}");
    Ok(())
}

fn angles(p: &[f64; 3]) -> (f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    ((p[2] / r).clamp(-1.0, 1.0).acos(), p[1].atan2(p[0]))
}

fn gram_defect(surface: &BoundarySurface, indices: &[HarmonicIndex], eval: impl Fn(HarmonicIndex, &[f64; 3]) -> f64) -> f64 {
    let table: Vec<Vec<f64>> = indices
        .iter()
        .map(|&ix| surface.nodes.iter().map(|p| eval(ix, p)).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..indices.len() {
        for b in a..indices.len() {
            let g: f64 = (0..surface.len()).map(|i| surface.weights[i] * table[a][i] * table[b][i]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// Real harmonics up to the exactness limit of the grid are orthonormal
/// under the surface quadrature on the unit circle (`N` nodes, orders below
/// `N/2`) and the unit sphere (degree-`L` grid, degrees up to `L`).
pub fn harmonic_orthonormality(dim: usize, resolution: usize) -> Result<(), TestCaseError> {
    let (surface, indices): (BoundarySurface, Vec<HarmonicIndex>) = if dim == 2 {
        let s = build_surface(&Shape::Circle { radius: 1.0 }, resolution).unwrap();
        (s, (0..resolution / 2).flat_map(circle_components).collect())
    } else {
        let s = build_surface(&Shape::Sphere { radius: 1.0 }, resolution).unwrap();
        (s, (0..=resolution).flat_map(sphere_components).collect())
    };
    let defect = if dim == 2 {
        gram_defect(&surface, &indices, |ix, p| fourier(ix, p[1].atan2(p[0])))
    } else {
        gram_defect(&surface, &indices, |ix, p| {
            let (t, f) = angles(p);
            sphere(ix, t, f)
        })
    };
    prop_assert!(defect <= 1e-12, "Gram defect {defect:e} (dim {dim}, resolution {resolution})");
    Ok(())
}

/// The dense eigenbasis of `A` is orthonormal in the weighted inner product
/// `Σ w_i φ̄_i ψ_i`.
pub fn eigenbasis_orthonormality(a: f64, b: f64, kappa: f64) -> Result<(), TestCaseError> {
    let s = build_surface(&Shape::Ellipse { a, b }, 64).unwrap();
    let opts = SystemOptions {
        path: Path::Dense,
        ..Default::default()
    };
    let sys = TransmissionSystem::build(&s, kappa, 2.0, &opts).map_err(|e| TestCaseError::reject(e.to_string()))?;
    let set = eig_window(&sys, 0.1).unwrap();
    let EigenBasis::Nodal(v) = &set.basis else {
        return Err(TestCaseError::fail("dense system returned a harmonic basis"));
    };
    let n = v.ncols();
    if n == 0 {
        return Err(TestCaseError::reject("empty window"));
    }
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in p..n {
            let g: Complex64 = (0..v.nrows()).map(|i| v[(i, p)].conj() * v[(i, q)] * s.weights[i]).sum();
            let target = if p == q { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    prop_assert!(worst <= 1e-10, "weighted Gram defect {worst:e}");
    Ok(())
}

/// Gauss–Legendre with `n` points integrates `x^k` exactly for `k < 2n`.
pub fn gauss_legendre_exactness(n: usize, k: usize) -> Result<(), TestCaseError> {
    let (x, w) = gauss_legendre(n);
    let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
    let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
    prop_assert!((got - exact).abs() <= 1e-13, "n = {n}, k = {k}: {got} vs {exact}");
    Ok(())
}

/// The curve rule on a circle of radius `r` integrates `cos(mθ + s)` exactly
/// for `|m| < N`, and the sphere rule integrates degree-`l` harmonics
/// exactly for `l ≤ 2L + 1`.
pub fn surface_rule_exactness(radius: f64, resolution: usize, order: usize, shift: f64) -> Result<(), TestCaseError> {
    let s = build_surface(&Shape::Circle { radius }, resolution).unwrap();
    let m = order % resolution;
    let vals: Vec<f64> = s.nodes.iter().map(|p| (m as f64 * p[1].atan2(p[0]) + shift).cos()).collect();
    let got = s.integrate(&vals);
    let exact = if m == 0 { 2.0 * PI * radius * shift.cos() } else { 0.0 };
    prop_assert!((got - exact).abs() <= 1e-12 * radius, "circle m = {m}: {got} vs {exact}");

    let degree = resolution.clamp(8, 20);
    let sph = build_surface(&Shape::Sphere { radius }, degree).unwrap();
    let l = order % (2 * degree + 2);
    let comp = (shift * 1e3) as i64 % (l as i64 + 1);
    let ix = HarmonicIndex { order: l, component: comp };
    let vals: Vec<f64> = sph
        .nodes
        .iter()
        .map(|p| {
            let (t, f) = angles(p);
            sphere(ix, t, f)
        })
        .collect();
    let got = sph.integrate(&vals);
    let exact = if l == 0 { (4.0 * PI).sqrt() * radius * radius } else { 0.0 };
    prop_assert!(
        (got - exact).abs() <= 1e-12 * radius * radius,
        "sphere l = {l}, m = {comp}: {got} vs {exact}"
    );
    Ok(())
}

/// Parallel and sequential sweeps produce bitwise identical results.
pub fn sweep_determinism(q: f64, kappas: &[f64]) -> Result<(), TestCaseError> {
    let s = build_surface(&Shape::Circle { radius: 1.0 }, 64).unwrap();
    let run = |exec| {
        let opts = SystemOptions {
            exec,
            ..Default::default()
        };
        weyl_count_sweep(&s, q, 0.1, kappas, &opts).map_err(|e| TestCaseError::reject(e.to_string()))
    };
    let par = run(Execution::Parallel)?;
    let seq = run(Execution::Sequential)?;
    let again = run(Execution::Parallel)?;
    prop_assert_eq!(&par, &seq);
    prop_assert_eq!(&par, &again);
    Ok(())
}
