//! Single-layer and adjoint double-layer (Neumann–Poincaré) operators.
//!
//! Curves use Kress's splitting: each kernel is written as
//! `K₁(t,s)·ln(4 sin²((t−s)/2)) + K₂(t,s)` with analytic `K₁`, `K₂`, and the
//! logarithmic part is integrated with the exact trigonometric weights
//! `R_j`. Circles and spheres additionally have closed-form harmonic
//! eigenvalues from the addition theorem. Densities on nodes are plain samples;
//! quadrature weights live inside the matrices.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::harmonics::{self, HarmonicIndex};
use crate::geometry::{BoundarySurface, Grid, Point};
use crate::linalg::{CMatrix, CVector, Factored};
use crate::par::{map_range, Execution};
use crate::specfun::{green, j01_y01, WaveTable, EULER_GAMMA};

/// Default bound on the condition estimate of `S^κ` before a solve is refused.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Single,
    KStar,
    /// `−Δ_Γ + 1`.
    LaplaceBeltrami,
    /// The reduced transmission operator `T(κ)`.
    Transmission,
}

#[derive(Clone, Debug)]
pub enum Representation {
    /// `N×N` matrix acting on node samples.
    Dense(CMatrix),
    /// One eigenvalue per Fourier frequency `n ≥ 0` (circle) or degree `l`
    /// (sphere); every real harmonic of that order shares it.
    Harmonic(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    pub kind: OperatorKind,
    pub wavenumber: f64,
    pub repr: Representation,
}

/// A density on `∂D`: node samples, or coefficients in the real orthonormal
/// harmonics of a circle or sphere.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Nodal(CVector),
    Harmonic(Vec<(HarmonicIndex, Complex64)>),
}

impl Density {
    pub fn l2_norm(&self, surface: &BoundarySurface) -> f64 {
        match self {
            Density::Nodal(v) => v
                .iter()
                .zip(&surface.weights)
                .map(|(z, w)| w * z.norm_sqr())
                .sum::<f64>()
                .sqrt(),
            Density::Harmonic(c) => c.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }
}

impl BoundaryOperator {
    pub fn dense(&self) -> Option<&CMatrix> {
        match &self.repr {
            Representation::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn harmonic(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Representation::Harmonic(v) => Some(v),
            _ => None,
        }
    }

    /// `max|λ|/min|λ|` for harmonic operators, Hager–Higham 1-norm estimate
    /// for dense ones.
    pub fn condition_estimate(&self) -> f64 {
        match &self.repr {
            Representation::Dense(m) => Factored::new(m).cond_estimate,
            Representation::Harmonic(v) => {
                let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let min = v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
                max / min
            }
        }
    }

    pub fn apply(&self, density: &Density) -> Result<Density> {
        match (&self.repr, density) {
            (Representation::Dense(m), Density::Nodal(v)) => Ok(Density::Nodal(m * v)),
            (Representation::Harmonic(vals), Density::Harmonic(c)) => c
                .iter()
                .map(|&(idx, z)| {
                    vals.get(idx.order)
                        .map(|s| (idx, s * z))
                        .ok_or_else(|| Error::Capability(format!("order {} beyond the operator cutoff", idx.order)))
                })
                .collect::<Result<Vec<_>>>()
                .map(Density::Harmonic),
            _ => Err(Error::Capability("density and operator representations differ".into())),
        }
    }

    /// `±½I + K*`: the interior (`+`) or exterior (`−`) Neumann trace of the
    /// single-layer potential with the same wavenumber.
    pub fn neumann_trace(&self, interior: bool) -> BoundaryOperator {
        assert_eq!(self.kind, OperatorKind::KStar, "traces are built from K*");
        let shift = if interior { 0.5 } else { -0.5 };
        let repr = match &self.repr {
            Representation::Dense(m) => {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += shift;
                }
                Representation::Dense(m)
            }
            Representation::Harmonic(v) => Representation::Harmonic(v.iter().map(|z| z + shift).collect()),
        };
        BoundaryOperator {
            kind: OperatorKind::KStar,
            wavenumber: self.wavenumber,
            repr,
        }
    }
}

/// Periodic logarithmic quadrature weights `R_j`, `j = 0..N−1`, for
/// `∫₀^{2π} ln(4 sin²((t−s)/2)) f(s) ds ≈ Σ_j R_{|i−j|} f(t_j)`.
/// Computed once per node count with an FFT and cached.
pub fn kress_log_weights(n_nodes: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().expect("weight cache").get(&n_nodes) {
        return w.clone();
    }
    let n = n_nodes / 2;
    let nf = n as f64;
    // Σ_{m=1}^{n−1} cos(2πmj/N)/m as the real part of a DFT
    let mut buf: Vec<Complex64> = (0..n_nodes)
        .map(|m| {
            if m >= 1 && m < n {
                Complex64::new(1.0 / m as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    rustfft::FftPlanner::new().plan_fft_forward(n_nodes).process(&mut buf);
    let w: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * z.re - PI / (nf * nf) * sign
        })
        .collect();
    let w = Arc::new(w);
    cache.lock().expect("weight cache").insert(n_nodes, w.clone());
    w
}

fn check_wavenumber(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("wavenumber must be positive, got {k}")))
    }
}

fn check_layer_kind(kind: OperatorKind) -> Result<()> {
    match kind {
        OperatorKind::Single | OperatorKind::KStar => Ok(()),
        other => Err(Error::Capability(format!("{other:?} is not a layer operator"))),
    }
}

pub fn assemble_single(surface: &BoundarySurface, wavenumber: f64) -> Result<BoundaryOperator> {
    assemble(surface, wavenumber, OperatorKind::Single, Execution::default())
}

pub fn assemble_kstar(surface: &BoundarySurface, wavenumber: f64) -> Result<BoundaryOperator> {
    assemble(surface, wavenumber, OperatorKind::KStar, Execution::default())
}

/// Dense Nyström matrices on curves; harmonic eigenvalues up to the grid
/// degree on spheres.
pub fn assemble(
    surface: &BoundarySurface,
    wavenumber: f64,
    kind: OperatorKind,
    exec: Execution,
) -> Result<BoundaryOperator> {
    check_wavenumber(wavenumber)?;
    check_layer_kind(kind)?;
    match &surface.grid {
        Grid::Curve { .. } => {
            let m = assemble_curve_matrix(surface, wavenumber, kind, exec);
            Ok(BoundaryOperator {
                kind,
                wavenumber,
                repr: Representation::Dense(m),
            })
        }
        Grid::Spherical { degree, .. } => {
            if !surface.is_sphere() {
                return Err(Error::Capability(
                    "layer operators on ellipsoids need the experimental singular quadrature, which is not enabled".into(),
                ));
            }
            assemble_harmonic(surface, wavenumber, kind, *degree)
        }
    }
}

/// Closed-form eigenvalues on a circle (`(iπa/2)J_n(κa)H_n(κa)` and its
/// trace analogue) or a sphere (`iκa²j_l(κa)h_l(κa)`), orders `0..=max_order`.
pub fn assemble_harmonic(
    surface: &BoundarySurface,
    wavenumber: f64,
    kind: OperatorKind,
    max_order: usize,
) -> Result<BoundaryOperator> {
    check_wavenumber(wavenumber)?;
    check_layer_kind(kind)?;
    let a = surface.radius().ok_or_else(|| {
        Error::Capability("harmonic representation needs a circle or a sphere".into())
    })?;
    let values = harmonic_values(surface.dim(), a, wavenumber, kind, max_order);
    Ok(BoundaryOperator {
        kind,
        wavenumber,
        repr: Representation::Harmonic(values),
    })
}

pub(crate) fn harmonic_values(
    dim: usize,
    a: f64,
    k: f64,
    kind: OperatorKind,
    max_order: usize,
) -> Vec<Complex64> {
    let x = k * a;
    if dim == 2 {
        let t = WaveTable::cylinder(max_order, x);
        (0..=max_order)
            .map(|n| match kind {
                OperatorKind::Single => I * (PI * a / 2.0) * t.j_times_h(n),
                _ => I * (PI * x / 2.0) * t.jp_times_h(n) - 0.5,
            })
            .collect()
    } else {
        let t = WaveTable::spherical(max_order, x);
        (0..=max_order)
            .map(|l| match kind {
                OperatorKind::Single => I * (k * a * a) * t.j_times_h(l),
                _ => I * (x * x) * t.jp_times_h(l) - 0.5,
            })
            .collect()
    }
}

/// One row of the Kress matrix for `S` and/or `K*`.
fn curve_row(
    surface: &BoundarySurface,
    k: f64,
    i: usize,
    log_w: &[f64],
    want_s: bool,
    want_k: bool,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (t, _, _, speed) = surface.curve_data().expect("curve grid");
    let n_nodes = t.len();
    let h = 2.0 * PI / n_nodes as f64;
    let xi = surface.nodes[i];
    let nu = surface.normals[i];
    let mut srow = if want_s { vec![Complex64::new(0.0, 0.0); n_nodes] } else { Vec::new() };
    let mut krow = if want_k { vec![Complex64::new(0.0, 0.0); n_nodes] } else { Vec::new() };
    for j in 0..n_nodes {
        let rw = log_w[i.abs_diff(j)];
        if i == j {
            let sp = speed[i];
            if want_s {
                let m1 = -sp / (4.0 * PI);
                let m2 = Complex64::new(-EULER_GAMMA / (2.0 * PI) - (k * sp / 2.0).ln() / (2.0 * PI), 0.25) * sp;
                srow[j] = rw * m1 + h * m2;
            }
            if want_k {
                krow[j] = Complex64::new(-h * surface.curvature[i] * sp / (4.0 * PI), 0.0);
            }
            continue;
        }
        let yj = surface.nodes[j];
        let dx = [xi[0] - yj[0], xi[1] - yj[1]];
        let r = dx[0].hypot(dx[1]);
        let [j0, j1, y0, y1] = j01_y01(k * r);
        let half = 0.5 * (t[i] - t[j]);
        let lg = (4.0 * half.sin().powi(2)).ln();
        let sp = speed[j];
        if want_s {
            let m = I * 0.25 * Complex64::new(j0, y0) * sp;
            let m1 = -j0 * sp / (4.0 * PI);
            let m2 = m - m1 * lg;
            srow[j] = rw * m1 + h * m2;
        }
        if want_k {
            let q = (dx[0] * nu[0] + dx[1] * nu[1]) / r * sp;
            let l = -I * (0.25 * k) * Complex64::new(j1, y1) * q;
            let l1 = k / (4.0 * PI) * j1 * q;
            let l2 = l - l1 * lg;
            krow[j] = rw * l1 + h * l2;
        }
    }
    (srow, krow)
}

fn assemble_curve_matrix(surface: &BoundarySurface, k: f64, kind: OperatorKind, exec: Execution) -> CMatrix {
    let n = surface.len();
    let log_w = kress_log_weights(n);
    let want_s = kind == OperatorKind::Single;
    let rows = map_range(exec, n, |i| {
        let (s, kr) = curve_row(surface, k, i, &log_w, want_s, !want_s);
        if want_s {
            s
        } else {
            kr
        }
    });
    CMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Both `S^κ` and `K*^κ` on a curve in one pass over the kernel.
pub fn assemble_curve_pair(
    surface: &BoundarySurface,
    k: f64,
    exec: Execution,
) -> Result<(BoundaryOperator, BoundaryOperator)> {
    check_wavenumber(k)?;
    if surface.curve_data().is_none() {
        return Err(Error::Capability("paired assembly is for curves".into()));
    }
    let n = surface.len();
    let log_w = kress_log_weights(n);
    let rows = map_range(exec, n, |i| curve_row(surface, k, i, &log_w, true, true));
    let s = CMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
    let kk = CMatrix::from_fn(n, n, |i, j| rows[i].1[j]);
    Ok((
        BoundaryOperator {
            kind: OperatorKind::Single,
            wavenumber: k,
            repr: Representation::Dense(s),
        },
        BoundaryOperator {
            kind: OperatorKind::KStar,
            wavenumber: k,
            repr: Representation::Dense(kk),
        },
    ))
}

/// Eigenvalues of the Kress matrices of `S` and `K*` on a circle discretized
/// with equispaced nodes. Both matrices are circulant there, so their
/// eigenvalue on `e^{inθ}` is the discrete Fourier transform of the first
/// row; `n = 0..=N/2`.
pub fn circle_block_values(surface: &BoundarySurface, k: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_wavenumber(k)?;
    if !surface.is_circle() {
        return Err(Error::Capability("block values need a circle".into()));
    }
    let n = surface.len();
    let log_w = kress_log_weights(n);
    let (s, kk) = curve_row(surface, k, 0, &log_w, true, true);
    let spectrum = |row: &[Complex64]| -> Vec<Complex64> {
        let mut buf = row.to_vec();
        let mut planner = rustfft::FftPlanner::new();
        // inverse transform computes Σ_j c_j e^{+2πi jm/N}
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.truncate(n / 2 + 1);
        buf
    };
    Ok((spectrum(&s), spectrum(&kk)))
}

/// Eigenvalue of a circulant Kress row on a single frequency.
pub fn circle_block_value(surface: &BoundarySurface, k: f64, order: usize) -> (Complex64, Complex64) {
    let n = surface.len();
    let log_w = kress_log_weights(n);
    let (s, kk) = curve_row(surface, k, 0, &log_w, true, true);
    let (t, ..) = surface.curve_data().expect("curve grid");
    let mut sv = Complex64::new(0.0, 0.0);
    let mut kv = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let e = Complex64::from_polar(1.0, order as f64 * t[j]);
        sv += s[j] * e;
        kv += kk[j] * e;
    }
    (sv, kv)
}

/// Conservative default for the distance below which plain quadrature of
/// the layer potential is refused.
pub fn default_r_min(surface: &BoundarySurface) -> f64 {
    5.0 * surface.max_spacing()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Value,
    Gradient,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialValues {
    Values(Vec<Complex64>),
    Gradients(Vec<[Complex64; 3]>),
}

fn check_proximity(surface: &BoundarySurface, points: &[Point], r_min: f64) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        let distance = surface.distance_to(p);
        if distance < r_min {
            return Err(Error::Proximity {
                index,
                distance,
                r_min,
            });
        }
    }
    Ok(())
}

/// `S^κ[φ](x)` or `∇S^κ[φ](x)` at points away from the surface.
pub fn eval_potential(
    surface: &BoundarySurface,
    wavenumber: f64,
    density: &CVector,
    points: &[Point],
    mode: EvalMode,
    r_min: f64,
) -> Result<PotentialValues> {
    eval_potential_with(surface, wavenumber, density, points, mode, r_min, Execution::default())
}

pub fn eval_potential_with(
    surface: &BoundarySurface,
    wavenumber: f64,
    density: &CVector,
    points: &[Point],
    mode: EvalMode,
    r_min: f64,
    exec: Execution,
) -> Result<PotentialValues> {
    check_wavenumber(wavenumber)?;
    if density.len() != surface.len() {
        return Err(Error::Domain(format!(
            "density has {} samples for {} nodes",
            density.len(),
            surface.len()
        )));
    }
    check_proximity(surface, points, r_min)?;
    let d = surface.dim();
    let wphi: Vec<Complex64> = density.iter().zip(&surface.weights).map(|(z, w)| z * w).collect();
    let k = wavenumber;
    match mode {
        EvalMode::Value => {
            let v = map_range(exec, points.len(), |pi| {
                let p = points[pi];
                let mut acc = Complex64::new(0.0, 0.0);
                for (y, c) in surface.nodes.iter().zip(&wphi) {
                    let r = crate::geometry::dist(&p, y);
                    let g = if d == 2 {
                        let [j0, _, y0, _] = j01_y01(k * r);
                        I * 0.25 * Complex64::new(j0, y0)
                    } else {
                        Complex64::from_polar(1.0 / (4.0 * PI * r), k * r)
                    };
                    acc += g * c;
                }
                acc
            });
            Ok(PotentialValues::Values(v))
        }
        EvalMode::Gradient => {
            let v = map_range(exec, points.len(), |pi| {
                let p = points[pi];
                let mut acc = [Complex64::new(0.0, 0.0); 3];
                for (y, c) in surface.nodes.iter().zip(&wphi) {
                    let dx = [p[0] - y[0], p[1] - y[1], p[2] - y[2]];
                    let r = crate::geometry::dist(&p, y);
                    let radial = if d == 2 {
                        let [_, j1, _, y1] = j01_y01(k * r);
                        -I * (0.25 * k) * Complex64::new(j1, y1)
                    } else {
                        Complex64::from_polar(1.0 / (4.0 * PI * r * r), k * r) * Complex64::new(-1.0, k * r)
                    };
                    let f = radial * c / r;
                    for a in 0..3 {
                        acc[a] += f * dx[a];
                    }
                }
                acc
            });
            Ok(PotentialValues::Gradients(v))
        }
    }
}

/// Residual of the jump relation `∂_ν S^±[φ] = (±½ + K*)[φ]` against a point
/// source `w = G(· − z)`: solve `S[φ] = w` on `∂D`, so `S[φ] = w` on the side
/// of `∂D` away from `z`, and compare `(±½ + K*)φ` with `∂_ν w`. `interior`
/// needs `z` outside `D̄`, the exterior check needs it inside. Returns the
/// relative discrete `L²` error.
pub fn jump_residual(surface: &BoundarySurface, k: f64, source: Point, interior: bool) -> Result<f64> {
    if !matches!(surface.grid, Grid::Curve { .. }) {
        return Err(Error::Capability("the jump check runs on curve discretizations".into()));
    }
    let d = surface.dim();
    if surface.distance_to(&source) < 1e-3 * surface.diameter() {
        return Err(Error::Domain("point source too close to the surface".into()));
    }
    let s = assemble(surface, k, OperatorKind::Single, Execution::default())?;
    let kstar = assemble(surface, k, OperatorKind::KStar, Execution::default())?;
    let n = surface.len();
    let mut w = CVector::zeros(n);
    let mut dw = CVector::zeros(n);
    for i in 0..n {
        let x = surface.nodes[i];
        let dx = [x[0] - source[0], x[1] - source[1], x[2] - source[2]];
        w[i] = green(d, k, crate::geometry::dist(&x, &source))?;
        let g = crate::specfun::green_grad(d, k, &dx[..d])?;
        dw[i] = (0..d).map(|a| g[a] * surface.normals[i][a]).sum();
    }
    let w = Density::Nodal(w);
    let dw = Density::Nodal(dw);
    let phi = solve_single(&s, &w, f64::INFINITY)?;
    let trace = kstar.neumann_trace(interior).apply(&phi)?;
    let (Density::Nodal(t), Density::Nodal(e)) = (&trace, &dw) else {
        unreachable!("curve operators are dense")
    };
    Ok(Density::Nodal(t - e).l2_norm(surface) / dw.l2_norm(surface))
}

/// `S^{-1}[rhs]`, refused when the condition estimate exceeds `cond_limit`.
pub fn solve_single(op: &BoundaryOperator, rhs: &Density, cond_limit: f64) -> Result<Density> {
    if op.kind != OperatorKind::Single {
        return Err(Error::Capability("solve_single expects a single-layer operator".into()));
    }
    match (&op.repr, rhs) {
        (Representation::Dense(m), Density::Nodal(b)) => {
            let f = Factored::new(m);
            if !(f.cond_estimate <= cond_limit) {
                return Err(Error::NearSingular {
                    kappa: op.wavenumber,
                    cond: f.cond_estimate,
                });
            }
            let x = f.solve(b).ok_or(Error::NearSingular {
                kappa: op.wavenumber,
                cond: f64::INFINITY,
            })?;
            let bn = b.norm();
            let res = (m * &x - b).norm();
            if bn > 0.0 && res > 1e-10 * bn {
                return Err(Error::Numerical(format!("single-layer solve residual {:.3e}", res / bn)));
            }
            Ok(Density::Nodal(x))
        }
        (Representation::Harmonic(vals), Density::Harmonic(c)) => {
            let cond = op.condition_estimate();
            if !(cond <= cond_limit) {
                return Err(Error::NearSingular {
                    kappa: op.wavenumber,
                    cond,
                });
            }
            c.iter()
                .map(|&(idx, z)| {
                    vals.get(idx.order)
                        .map(|s| (idx, z / s))
                        .ok_or_else(|| Error::Capability(format!("order {} beyond the operator cutoff", idx.order)))
                })
                .collect::<Result<Vec<_>>>()
                .map(Density::Harmonic)
        }
        _ => Err(Error::Capability("density and operator representations differ".into())),
    }
}

/// Node samples of a harmonic density on a circle or sphere. Basis functions
/// are normalized on the actual radius.
pub fn harmonic_to_nodal(surface: &BoundarySurface, coeffs: &[(HarmonicIndex, Complex64)]) -> Result<CVector> {
    let a = surface
        .radius()
        .ok_or_else(|| Error::Capability("harmonic densities live on circles and spheres".into()))?;
    let mut out = CVector::zeros(surface.len());
    match &surface.grid {
        Grid::Curve { t, .. } => {
            let norm = 1.0 / a.sqrt();
            for (i, ti) in t.iter().enumerate() {
                for &(idx, c) in coeffs {
                    out[i] += c * harmonics::fourier(idx, *ti) * norm;
                }
            }
        }
        Grid::Spherical { theta, n_phi, .. } => {
            let lmax = coeffs.iter().map(|(i, _)| i.order).max().unwrap_or(0);
            for (it, th) in theta.iter().enumerate() {
                let table = harmonics::legendre_table(lmax, *th);
                for j in 0..*n_phi {
                    let ph = 2.0 * PI * j as f64 / *n_phi as f64;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(idx, c) in coeffs {
                        acc += c * harmonics::sphere_from_table(&table, idx, ph);
                    }
                    out[it * n_phi + j] = acc / a;
                }
            }
        }
    }
    Ok(out)
}

/// Weighted projection of node samples onto the given real harmonics.
pub fn nodal_to_harmonic(
    surface: &BoundarySurface,
    values: &CVector,
    indices: &[HarmonicIndex],
) -> Result<Vec<(HarmonicIndex, Complex64)>> {
    indices
        .iter()
        .map(|&idx| {
            let basis = harmonic_to_nodal(surface, &[(idx, Complex64::new(1.0, 0.0))])?;
            let c: Complex64 = values
                .iter()
                .zip(basis.iter())
                .zip(&surface.weights)
                .map(|((v, b), w)| v * b.conj() * *w)
                .sum();
            Ok((idx, c))
        })
        .collect()
}

/// Value of `G_κ` for use by callers that only need the kernel.
pub fn kernel(dim: usize, k: f64, r: f64) -> Result<Complex64> {
    green(dim, k, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_surface, Shape};

    fn circle(n: usize) -> BoundarySurface {
        build_surface(&Shape::Circle { radius: 1.0 }, n).unwrap()
    }

    #[test]
    fn log_weights_integrate_log_kernel() {
        // ∫ ln(4 sin²(s/2)) e^{ims} ds = −2π/|m| for m ≠ 0, and 0 for m = 0
        let n = 32;
        let w = kress_log_weights(n);
        for m in 0..10 {
            let q: f64 = (0..n).map(|j| w[j] * (m as f64 * 2.0 * PI * j as f64 / n as f64).cos()).sum();
            let want = if m == 0 { 0.0 } else { -2.0 * PI / m as f64 };
            assert!((q - want).abs() < 1e-12, "m={m} q={q}");
        }
    }

    #[test]
    fn circle_single_layer_eigenvalue() {
        let s = circle(256);
        let (sv, _) = circle_block_values(&s, 2.0).unwrap();
        let exact = harmonic_values(2, 1.0, 2.0, OperatorKind::Single, 3)[3];
        assert!((sv[3] - exact).norm() < 1e-8 * exact.norm(), "{} {}", sv[3], exact);
        let (one, _) = circle_block_value(&s, 2.0, 3);
        assert!((one - sv[3]).norm() < 1e-12);
    }

    #[test]
    fn circle_kstar_laplace_limit() {
        let s = circle(64);
        let (_, kv) = circle_block_values(&s, 1e-6).unwrap();
        assert!((kv[0] + 0.5).norm() < 1e-6, "{}", kv[0]);
        for v in &kv[1..20] {
            assert!(v.norm() < 1e-6);
        }
    }

    #[test]
    fn dense_matches_harmonic_on_fourier_mode() {
        let s = circle(128);
        let op = assemble_single(&s, 3.0).unwrap();
        let exact = harmonic_values(2, 1.0, 3.0, OperatorKind::Single, 5);
        let idx = HarmonicIndex { order: 5, component: 1 };
        let phi = harmonic_to_nodal(&s, &[(idx, Complex64::new(1.0, 0.0))]).unwrap();
        let out = op.dense().unwrap() * &phi;
        let want = &phi * exact[5];
        assert!((out - &want).norm() < 1e-8 * want.norm());
    }
}
