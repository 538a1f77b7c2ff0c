//! Small numerical utilities shared across modules: Gauss–Legendre rules,
//! one-dimensional minimization and root bracketing, least squares, and
//! dense complex factorizations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`;
/// returns `(argmin, min)` once the bracket is narrower than `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection on a sign change of `f` in `[a, b]` down to width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while (b - a) > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Least-squares solution of `M c ≈ y` for a real design matrix given by
/// rows; returns the coefficients and the residual vector.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if m < n || n == 0 {
        return Err(Error::Fit(format!("{m} equations for {n} unknowns")));
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let r = &a * &c - &b;
    Ok((c.iter().copied().collect(), r.iter().copied().collect()))
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
pub fn hermitian_eigen_desc(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Smallest singular value of a square complex matrix.
pub fn sigma_min(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with a Hager–Higham estimate of the 1-norm condition
/// number.
pub struct Factored {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    pub cond_estimate: f64,
}

impl Factored {
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        let lu = a.clone().lu();
        let anorm = one_norm(a);
        // adjoint solves go through the factorization of Aᴴ
        let lu_h = a.adjoint().lu();
        let mut x = CVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut cond = f64::INFINITY;
        for _ in 0..5 {
            let y = match lu.solve(&x) {
                Some(y) => y,
                None => break,
            };
            let ynorm: f64 = y.iter().map(|z| z.norm()).sum();
            if ynorm <= est {
                cond = anorm * est;
                break;
            }
            est = ynorm;
            cond = anorm * est;
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) });
            let z = match lu_h.solve(&xi) {
                Some(z) => z,
                None => break,
            };
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx {
                break;
            }
            x = CVector::zeros(n);
            x[jmax] = Complex64::new(1.0, 0.0);
        }
        if !lu.is_invertible() {
            cond = f64::INFINITY;
        }
        Factored {
            lu,
            cond_estimate: cond,
        }
    }

    pub fn solve(&self, b: &CVector) -> Option<CVector> {
        self.lu.solve(b)
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> Option<CMatrix> {
        self.lu.solve(b)
    }
}

/// Dense spectral differentiation matrix for `N` equispaced samples of a
/// `2π`-periodic function (`N` even).
pub fn periodic_diff_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let k = i as i64 - j as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (k as f64 * h / 2.0).tan()
        }
    })
}

/// Periodic spectral second-derivative matrix on `n` (even) equispaced
/// nodes; unlike `D²` it keeps the Nyquist mode at `−(n/2)²`.
pub fn periodic_second_diff_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -std::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let k = i as i64 - j as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -0.5 * sign / (k as f64 * h / 2.0).sin().powi(2)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert_eq!(w, vec![2.0]);
    }

    #[test]
    fn golden_and_bisect() {
        let (x, _) = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn differentiation_matrix_is_exact_on_trig() {
        let n = 32;
        let d = periodic_diff_matrix(n);
        let t: Vec<f64> = (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
        let f = DVector::from_iterator(n, t.iter().map(|t| (3.0 * t).sin()));
        let df = &d * f;
        for (i, t) in t.iter().enumerate() {
            assert!((df[i] - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn condition_estimate_tracks_exact_value() {
        let a = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([1.0, 1e-3, 2.0][i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let f = Factored::new(&a);
        assert!((f.cond_estimate - 2e3).abs() < 1e-6);
    }

    #[test]
    fn second_derivative_keeps_nyquist() {
        let n = 16;
        let d2 = periodic_second_diff_matrix(n);
        let t: Vec<f64> = (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
        for m in [0usize, 3, 8] {
            let f = DVector::from_iterator(n, t.iter().map(|t| (m as f64 * t).cos()));
            let g = &d2 * &f;
            for i in 0..n {
                assert!((g[i] + (m * m) as f64 * f[i]).abs() < 1e-10, "m={m}");
            }
        }
    }
}
