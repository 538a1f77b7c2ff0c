//! Separation-of-variables ground truth on the disk and the ball.
//!
//! With `u = αJ_n(κQr)e^{inθ}` and `v = βJ_n(κr)e^{inθ}` (spherical Bessel
//! functions and real `Y_l^m` in 3D), the transmission conditions at `r = a`
//! have a nontrivial solution exactly when the 2×2 Wronskian-type determinant
//! vanishes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::harmonics::{self, HarmonicIndex};
use crate::geometry::{BoundarySurface, Point};
use crate::linalg::bisect;
use crate::specfun::{Scaled, WaveTable};

fn table(dim: usize, nmax: usize, x: f64) -> WaveTable {
    if dim == 2 {
        WaveTable::cylinder(nmax, x)
    } else {
        WaveTable::spherical(nmax, x)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Capability(format!("radial oracle is for d = 2, 3, got {dim}")))
    }
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive, got {v}")))
    }
}

fn scaled_determinant(t: &WaveTable, tq: &WaveTable, order: usize, k: f64, q: f64) -> Scaled {
    (t.jp[order] * tq.j[order]).scale(k) - (tq.jp[order] * t.j[order]).scale(k * q)
}

/// `κJ_n'(κa)J_n(κQa) − κQJ_n'(κQa)J_n(κa)`, or the spherical analogue.
/// May underflow to zero for orders far above `κQa`; use
/// [`radial_eigenvalues`] for root finding, which keeps the sign exactly.
pub fn radial_determinant(dim: usize, a: f64, order: usize, k: f64, q: f64) -> Result<f64> {
    check_dim(dim)?;
    check_positive(a, "radius")?;
    check_positive(k, "wavenumber")?;
    check_positive(q, "refractive index")?;
    let t = table(dim, order, k * a);
    let tq = table(dim, order, k * q * a);
    Ok(scaled_determinant(&t, &tq, order, k, q).to_f64())
}

fn determinant_sign(dim: usize, a: f64, order: usize, k: f64, q: f64) -> f64 {
    let t = table(dim, order, k * a);
    let tq = table(dim, order, k * q * a);
    scaled_determinant(&t, &tq, order, k, q).signum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialRoot {
    pub order: usize,
    pub kappa: f64,
}

/// Every sign change of the determinant for orders in `orders` and
/// `κ ∈ [k_min, k_max]`, bisected to `1e−10`. `scan_step` defaults to
/// `(k_max − k_min)/2000`.
pub fn radial_eigenvalues(
    dim: usize,
    a: f64,
    q: f64,
    k_range: (f64, f64),
    orders: std::ops::RangeInclusive<usize>,
    scan_step: Option<f64>,
) -> Result<Vec<RadialRoot>> {
    check_dim(dim)?;
    check_positive(a, "radius")?;
    check_positive(q, "refractive index")?;
    let (k0, k1) = k_range;
    check_positive(k0, "wavenumber")?;
    if !(k1 > k0) || !k1.is_finite() {
        return Err(Error::Domain(format!("empty wavenumber range [{k0}, {k1}]")));
    }
    if (q - 1.0).abs() < 1e-12 {
        return Err(Error::Domain("refractive index Q = 1 makes every κ degenerate".into()));
    }
    let step = scan_step.unwrap_or((k1 - k0) / 2000.0);
    check_positive(step, "scan step")?;
    let count = ((k1 - k0) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=count).map(|i| (k0 + i as f64 * step).min(k1)).collect();
    let nmax = *orders.end();
    let nmin = *orders.start();
    // signs on the scan grid, all orders at once
    let signs: Vec<Vec<f64>> = grid
        .iter()
        .map(|&k| {
            let t = table(dim, nmax, k * a);
            let tq = table(dim, nmax, k * q * a);
            (nmin..=nmax)
                .map(|n| scaled_determinant(&t, &tq, n, k, q).signum())
                .collect()
        })
        .collect();
    let mut roots = Vec::new();
    for (oi, n) in (nmin..=nmax).enumerate() {
        for i in 0..grid.len() - 1 {
            let (s0, s1) = (signs[i][oi], signs[i + 1][oi]);
            if s0 == 0.0 {
                roots.push(RadialRoot { order: n, kappa: grid[i] });
            } else if s0 * s1 < 0.0 {
                let k = bisect(|k| determinant_sign(dim, a, n, k, q), grid[i], grid[i + 1], 1e-12);
                roots.push(RadialRoot { order: n, kappa: k });
            }
        }
    }
    roots.sort_by(|x, y| x.kappa.total_cmp(&y.kappa).then(x.order.cmp(&y.order)));
    Ok(roots)
}

/// Closest oracle root to `target` among orders `orders`, as
/// `(root, |root − target|)`.
pub fn nearest_root(roots: &[RadialRoot], target: f64) -> Option<(RadialRoot, f64)> {
    roots
        .iter()
        .map(|r| (*r, (r.kappa - target).abs()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

/// An exact separated transmission eigenpair (or, at non-eigen `κ`, the pair
/// that matches traces but not normal derivatives).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMode {
    pub dim: usize,
    pub radius: f64,
    pub index: HarmonicIndex,
    pub kappa: f64,
    pub q: f64,
    /// Amplitude of `u`; `α·J_n(κQa) = β·J_n(κa) = 1`.
    pub alpha: f64,
    pub beta: f64,
}

impl RadialMode {
    pub fn new(dim: usize, radius: f64, index: HarmonicIndex, kappa: f64, q: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive(radius, "radius")?;
        check_positive(kappa, "wavenumber")?;
        check_positive(q, "refractive index")?;
        let n = index.order;
        let t = table(dim, n, kappa * radius);
        let tq = table(dim, n, kappa * q * radius);
        let (jq, j) = (tq.j[n].to_f64(), t.j[n].to_f64());
        if jq == 0.0 || j == 0.0 || !jq.is_finite() || !j.is_finite() {
            return Err(Error::Range(format!("boundary value of order {n} is not representable")));
        }
        Ok(RadialMode {
            dim,
            radius,
            index,
            kappa,
            q,
            alpha: 1.0 / jq,
            beta: 1.0 / j,
        })
    }

    /// `∂_r u − ∂_r v` at `r = a` for the unit boundary trace; zero exactly at
    /// transmission eigenvalues.
    pub fn normal_mismatch(&self) -> f64 {
        let n = self.index.order;
        let t = table(self.dim, n, self.kappa * self.radius);
        let tq = table(self.dim, n, self.kappa * self.q * self.radius);
        (tq.jp[n] / tq.j[n]).to_f64() * self.kappa * self.q - (t.jp[n] / t.j[n]).to_f64() * self.kappa
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialFields {
    pub u: Complex64,
    pub v: Complex64,
    pub grad_u: [Complex64; 3],
    pub grad_v: [Complex64; 3],
}

fn radial_profile(dim: usize, n: usize, x: f64) -> (f64, f64) {
    if x == 0.0 {
        let value = if n == 0 { 1.0 } else { 0.0 };
        let slope = match (dim, n) {
            (2, 1) => 0.5,
            _ => 0.0,
        };
        return (value, slope);
    }
    let t = table(dim, n, x);
    (t.j[n].to_f64(), t.jp[n].to_f64())
}

fn angular(dim: usize, index: HarmonicIndex, p: &Point) -> Complex64 {
    if dim == 2 {
        Complex64::from_polar(1.0, index.order as f64 * p[1].atan2(p[0]))
    } else {
        let r = crate::geometry::norm(p);
        if r == 0.0 {
            return Complex64::new(harmonics::sphere(index, 0.0, 0.0), 0.0);
        }
        let th = (p[2] / r).clamp(-1.0, 1.0).acos();
        let ph = p[1].atan2(p[0]);
        Complex64::new(harmonics::sphere(index, th, ph), 0.0)
    }
}

fn field(mode: &RadialMode, wavenumber: f64, amp: f64, p: &Point) -> Complex64 {
    let r = crate::geometry::norm(p);
    let (f, _) = radial_profile(mode.dim, mode.index.order, wavenumber * r);
    angular(mode.dim, mode.index, p) * (amp * f)
}

fn gradient(mode: &RadialMode, wavenumber: f64, amp: f64, p: &Point) -> [Complex64; 3] {
    let n = mode.index.order;
    let r = crate::geometry::norm(p);
    if mode.dim == 2 {
        // polar form: f'(r) r̂ e^{inθ} + (in/r) f(r) θ̂ e^{inθ}
        let (f, fp) = radial_profile(2, n, wavenumber * r);
        let th = p[1].atan2(p[0]);
        let e = Complex64::from_polar(amp, n as f64 * th);
        if r == 0.0 {
            // only n = 1 has a nonzero gradient at the origin: ∇(J₁(κr)e^{iθ}) = (κ/2)(1, i)
            return if n == 1 {
                [Complex64::new(amp * wavenumber * 0.5, 0.0), Complex64::new(0.0, amp * wavenumber * 0.5), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0); 3]
            };
        }
        let dr = e * (wavenumber * fp);
        let dth = e * Complex64::new(0.0, n as f64 * f / r);
        let (s, c) = th.sin_cos();
        [dr * c - dth * s, dr * s + dth * c, Complex64::new(0.0, 0.0)]
    } else {
        // fourth-order central differences of the analytic field
        let h = 1e-3 / wavenumber.max(1.0);
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (axis, gi) in g.iter_mut().enumerate() {
            let at = |s: f64| {
                let mut q = *p;
                q[axis] += s;
                field(mode, wavenumber, amp, &q)
            };
            *gi = (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h);
        }
        g
    }
}

/// `u`, `v` and their gradients at an interior point.
pub fn radial_mode_eval(mode: &RadialMode, p: &Point) -> Result<RadialFields> {
    let r = crate::geometry::norm(p);
    if r > mode.radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("point at radius {r} lies outside the ball of radius {}", mode.radius)));
    }
    let kq = mode.kappa * mode.q;
    Ok(RadialFields {
        u: field(mode, kq, mode.alpha, p),
        v: field(mode, mode.kappa, mode.beta, p),
        grad_u: gradient(mode, kq, mode.alpha, p),
        grad_v: gradient(mode, mode.kappa, mode.beta, p),
    })
}

/// `∫_0^r |Z_n(ks)|² s^{d−1} ds` in closed form (Lommel's integral for
/// `J_n`, its spherical analogue for `j_l`).
pub fn radial_energy(dim: usize, order: usize, k: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let x = k * r;
    let n = order as f64;
    let t = table(dim, order + 1, x);
    let j = t.j[order].to_f64();
    if dim == 2 {
        let jp = t.jp[order].to_f64();
        0.5 * r * r * (jp * jp + (1.0 - n * n / (x * x)) * j * j)
    } else {
        let jm = if order == 0 { x.cos() / x } else { t.j[order - 1].to_f64() };
        let jn1 = t.j[order + 1].to_f64();
        0.5 * r.powi(3) * (j * j - jm * jn1)
    }
}

/// Fraction of `∫_D |u|²` carried by the collar `a − w < r < a` for the
/// `u`-field of a radial mode.
pub fn collar_fraction(mode: &RadialMode, width: f64) -> f64 {
    let a = mode.radius;
    let w = width.clamp(0.0, a);
    let kq = mode.kappa * mode.q;
    let total = radial_energy(mode.dim, mode.index.order, kq, a);
    let inner = radial_energy(mode.dim, mode.index.order, kq, a - w);
    ((total - inner) / total).clamp(0.0, 1.0)
}

/// Eigenvalues of `S^κ`, `K*^κ` and both Neumann traces on a circle or sphere,
/// orders `0..=max_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpectrum {
    pub single: Vec<Complex64>,
    pub kstar: Vec<Complex64>,
    /// `∂_ν S[Y]` from inside.
    pub interior_trace: Vec<Complex64>,
    /// `∂_ν S[Y]` from outside.
    pub exterior_trace: Vec<Complex64>,
}

/// Addition-theorem spectra: `S[Y](x) = c·J(κ|x|)H(κa)Y` inside and
/// `c·J(κa)H(κ|x|)Y` outside, so the one-sided radial derivatives give the
/// traces and `K*` is their average.
pub fn exact_operator_spectrum(surface: &BoundarySurface, k: f64, max_order: usize) -> Result<OperatorSpectrum> {
    check_positive(k, "wavenumber")?;
    let a = surface
        .radius()
        .ok_or_else(|| Error::Capability("exact spectra exist for circles and spheres".into()))?;
    exact_spectrum(surface.dim(), a, k, max_order)
}

pub fn exact_spectrum(dim: usize, a: f64, k: f64, max_order: usize) -> Result<OperatorSpectrum> {
    check_dim(dim)?;
    check_positive(a, "radius")?;
    check_positive(k, "wavenumber")?;
    let t = table(dim, max_order, k * a);
    let c = if dim == 2 {
        Complex64::new(0.0, PI * a / 2.0)
    } else {
        Complex64::new(0.0, k * a * a)
    };
    let mut single = Vec::with_capacity(max_order + 1);
    let mut inner = Vec::with_capacity(max_order + 1);
    let mut outer = Vec::with_capacity(max_order + 1);
    for n in 0..=max_order {
        single.push(c * t.j_times_h(n));
        inner.push(c * k * t.jp_times_h(n));
        outer.push(c * k * t.j_times_hp(n));
    }
    let kstar = inner.iter().zip(&outer).map(|(i, o)| 0.5 * (i + o)).collect();
    Ok(OperatorSpectrum {
        single,
        kstar,
        interior_trace: inner,
        exterior_trace: outer,
    })
}

/// Plane-wave scattering by a homogeneous disk of radius `a` and index `Q`:
/// the scattered field is `Σ_n i^n e^{−inθ_d} t_{|n|} H_n(κr) e^{inθ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskScattering {
    pub radius: f64,
    pub kappa: f64,
    pub q: f64,
    /// `t_n` for `n = 0..=nmax`; `t_{−n} = t_n`.
    pub t: Vec<Complex64>,
}

pub fn disk_scattering(radius: f64, kappa: f64, q: f64, nmax: usize) -> Result<DiskScattering> {
    check_positive(radius, "radius")?;
    check_positive(kappa, "wavenumber")?;
    check_positive(q, "refractive index")?;
    let tk = WaveTable::cylinder(nmax, kappa * radius);
    let tq = WaveTable::cylinder(nmax, kappa * q * radius);
    let t = (0..=nmax)
        .map(|n| {
            // continuity of value and normal derivative, written with
            // logarithmic derivatives so that no Hankel function overflows
            let rj = tk.log_derivative(n) / radius;
            let rq = tq.log_derivative(n) / radius;
            let jh = tk.j_times_h(n);
            let rh = tk.j_times_hp(n) / jh * kappa;
            let jj = (tk.j[n] * tk.j[n]).to_f64();
            if !rq.is_finite() {
                return -jj / jh;
            }
            -(jj * (rj - rq)) / (jh * (rh - rq))
        })
        .collect();
    Ok(DiskScattering {
        radius,
        kappa,
        q,
        t,
    })
}

impl DiskScattering {
    /// Far-field pattern at angle `theta` for incidence angle `incidence`,
    /// normalized so that `u^s ≈ e^{iκr}/√r·ψ_∞`.
    pub fn far_field(&self, incidence: f64, theta: f64) -> Complex64 {
        let c = Complex64::from_polar((2.0 / (PI * self.kappa)).sqrt(), -PI / 4.0);
        let mut s = self.t[0];
        for (n, t) in self.t.iter().enumerate().skip(1) {
            s += t * (2.0 * (n as f64 * (theta - incidence)).cos());
        }
        c * s
    }
}
