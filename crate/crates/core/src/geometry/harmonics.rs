//! Real orthonormal angular harmonics on the unit circle and unit sphere.

use std::f64::consts::PI;

/// Index of a real angular harmonic. On the circle `order` is the Fourier
/// frequency and `component` selects `cos` (≥ 0) or `sin` (< 0); on the
/// sphere `order` is the degree `l` and `component` the signed order `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct HarmonicIndex {
    pub order: usize,
    pub component: i64,
}

/// Orthonormal real Fourier mode on the unit circle.
pub fn fourier(index: HarmonicIndex, theta: f64) -> f64 {
    let n = index.order as f64;
    if index.order == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else if index.component >= 0 {
        (n * theta).cos() / PI.sqrt()
    } else {
        (n * theta).sin() / PI.sqrt()
    }
}

/// Real-valued harmonics belonging to Fourier frequency `n` (one for `n = 0`,
/// two otherwise).
pub fn circle_components(n: usize) -> Vec<HarmonicIndex> {
    if n == 0 {
        vec![HarmonicIndex { order: 0, component: 0 }]
    } else {
        vec![
            HarmonicIndex { order: n, component: 1 },
            HarmonicIndex { order: n, component: -1 },
        ]
    }
}

pub fn sphere_components(l: usize) -> Vec<HarmonicIndex> {
    (-(l as i64)..=(l as i64))
        .map(|m| HarmonicIndex { order: l, component: m })
        .collect()
}

/// Orthonormal associated Legendre table `p̄_l^m(cos θ)` for `0 ≤ m ≤ l ≤ lmax`,
/// normalized so that `p̄_l^m(cos θ)·{1, √2 cos mφ, √2 sin mφ}` has unit
/// norm on the sphere. Stored row-major by `l`, entry `l(l+1)/2 + m`.
pub fn legendre_table(lmax: usize, theta: f64) -> Vec<f64> {
    let (s, x) = theta.sin_cos();
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; idx(lmax, lmax) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..lmax {
        let mf = m as f64;
        p[idx(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[idx(m, m)];
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Real orthonormal spherical harmonic from a precomputed Legendre table.
pub fn sphere_from_table(table: &[f64], index: HarmonicIndex, phi: f64) -> f64 {
    let l = index.order;
    let m = index.component.unsigned_abs() as usize;
    let p = table[l * (l + 1) / 2 + m];
    if index.component == 0 {
        p
    } else if index.component > 0 {
        std::f64::consts::SQRT_2 * p * (m as f64 * phi).cos()
    } else {
        std::f64::consts::SQRT_2 * p * (m as f64 * phi).sin()
    }
}

pub fn sphere(index: HarmonicIndex, theta: f64, phi: f64) -> f64 {
    sphere_from_table(&legendre_table(index.order, theta), index, phi)
}

/// `(Y, ∂_θY, (1/sin θ)∂_φY)` for a real orthonormal spherical harmonic, the
/// last two being the components of the surface gradient on the unit sphere.
/// Colatitudes within `1e−12` of a pole are nudged off it.
pub fn sphere_with_gradient(index: HarmonicIndex, theta: f64, phi: f64) -> (f64, f64, f64) {
    let theta = theta.clamp(1e-12, PI - 1e-12);
    let l = index.order;
    let m = index.component.unsigned_abs() as usize;
    let table = legendre_table(l, theta);
    let at = |mm: usize| if mm > l { 0.0 } else { table[l * (l + 1) / 2 + mm] };
    let (lf, mf) = (l as f64, m as f64);
    let p = at(m);
    let dp = if m == 0 {
        -(lf * (lf + 1.0)).sqrt() * at(1)
    } else {
        0.5 * (((lf + mf) * (lf - mf + 1.0)).sqrt() * at(m - 1) - ((lf - mf) * (lf + mf + 1.0)).sqrt() * at(m + 1))
    };
    let s = theta.sin();
    let r2 = std::f64::consts::SQRT_2;
    if index.component == 0 {
        (p, dp, 0.0)
    } else if index.component > 0 {
        let (sn, cs) = (mf * phi).sin_cos();
        (r2 * p * cs, r2 * dp * cs, -r2 * mf * p * sn / s)
    } else {
        let (sn, cs) = (mf * phi).sin_cos();
        (r2 * p * sn, r2 * dp * sn, r2 * mf * p * cs / s)
    }
}
