//! Transmission operators `T(κ)`, the calibrated `B`, the self-adjoint `A`,
//! eigen-windows and exact transmission eigenvalues.
//!
//! `T = N_{κQ} − N_κ (S^κ)⁻¹ S^{κQ}` with interior Neumann traces
//! `N = ½I + K*`. A density in the kernel of `T` gives `u = S^{κQ}[φ]`,
//! `v = S^κ[(S^κ)⁻¹S^{κQ}φ]` with equal Cauchy data on `∂D`.
//!
//! `P = c·(−Δ_Γ + 1)·T` is a zeroth-order operator whose symbol tends to 1;
//! `c` is fitted on a band of scaled frequencies. With `B = I − P`,
//! `A = B + B* − B*B = I − P*P`, so `A ≤ 1` and `Aφ = φ` exactly on the
//! kernel of `T`.

use std::f64::consts::PI;
use std::sync::Arc;

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::harmonics::{self, HarmonicIndex};
use crate::geometry::{build_surface, BoundarySurface, Grid, Point, Shape};
use crate::layerpot::{
    self, assemble_curve_pair, circle_block_value, circle_block_values, default_r_min, eval_potential_with,
    BoundaryOperator, EvalMode, OperatorKind, PotentialValues, Representation, DEFAULT_COND_LIMIT,
};
use crate::linalg::{bisect, golden_section_min, hermitian_eigen_desc, lstsq, periodic_diff_matrix, periodic_second_diff_matrix, CMatrix, CVector, Factored};
use crate::par::{map_range, map_slice, Execution};
use crate::specfun::WaveTable;

pub const DEFAULT_EPSILON: f64 = 0.1;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Band of scaled frequencies `ξ = |ξ|h` used to fit `c_norm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for CalibrationWindow {
    fn default() -> Self {
        CalibrationWindow { lo: 4.0, hi: 8.0 }
    }
}

/// Outcome of fitting `LT ≈ c⁻¹(1 + c₂ξ⁻² + c₄ξ⁻⁴)` on the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub c_norm: Complex64,
    pub c2: f64,
    pub c4: f64,
    /// RMS of `|p − (1 + c₂ξ⁻² + c₄ξ⁻⁴)|` over the window.
    pub residual: f64,
    /// Mean of `p − c₂ξ⁻² − c₄ξ⁻⁴` over the window: the fitted plateau.
    pub plateau: f64,
    /// Largest `|p − c₂ξ⁻² − c₄ξ⁻⁴ − 1|` over the window.
    pub plateau_deviation: f64,
    pub points: usize,
    pub window: CalibrationWindow,
}

/// Residual bound above which a calibration is rejected.
pub const CALIBRATION_LIMIT: f64 = 0.05;

/// Fit `c_norm` from samples `(ξ, (LT)(ξ))`.
pub fn calibrate(samples: &[(f64, Complex64)], window: CalibrationWindow) -> Result<CalibrationReport> {
    let inside: Vec<&(f64, Complex64)> = samples
        .iter()
        .filter(|(xi, _)| *xi >= window.lo - 1e-9 && *xi <= window.hi + 1e-9)
        .collect();
    if inside.len() < 4 {
        return Err(Error::Resolution(format!(
            "{} test frequencies in the calibration window [{}, {}]; refine the discretization",
            inside.len(),
            window.lo,
            window.hi
        )));
    }
    let rows: Vec<Vec<f64>> = inside
        .iter()
        .map(|(xi, _)| vec![1.0, xi.powi(-2), xi.powi(-4)])
        .collect();
    let re: Vec<f64> = inside.iter().map(|(_, p)| p.re).collect();
    let im: Vec<f64> = inside.iter().map(|(_, p)| p.im).collect();
    let (cr, _) = lstsq(&rows, &re)?;
    let (ci, _) = lstsq(&rows, &im)?;
    let alpha = Complex64::new(cr[0], ci[0]);
    if alpha.norm() == 0.0 || !alpha.norm().is_finite() {
        return Err(Error::Calibration {
            residual: f64::INFINITY,
            limit: CALIBRATION_LIMIT,
        });
    }
    let beta = Complex64::new(cr[1], ci[1]) / alpha;
    let gamma = Complex64::new(cr[2], ci[2]) / alpha;
    let c_norm = 1.0 / alpha;
    let (c2, c4) = (beta.re, gamma.re);
    let mut sq = 0.0;
    let mut plateau = 0.0;
    let mut dev: f64 = 0.0;
    for (xi, raw) in &inside {
        let p = c_norm * raw;
        let corr = c2 * xi.powi(-2) + c4 * xi.powi(-4);
        sq += (p - (1.0 + corr)).norm_sqr();
        plateau += (p.re - corr) / inside.len() as f64;
        dev = dev.max((p - corr - 1.0).norm());
    }
    let residual = (sq / inside.len() as f64).sqrt();
    let report = CalibrationReport {
        c_norm,
        c2,
        c4,
        residual,
        plateau,
        plateau_deviation: dev,
        points: inside.len(),
        window,
    };
    if !(residual <= CALIBRATION_LIMIT) {
        return Err(Error::Calibration {
            residual,
            limit: CALIBRATION_LIMIT,
        });
    }
    Ok(report)
}

/// `−Δ_Γ + 1`: periodic spectral differentiation with the arclength metric
/// on curves, `l(l+1)/a² + 1` on spheres.
pub fn laplace_beltrami_plus_one(surface: &BoundarySurface) -> Result<BoundaryOperator> {
    match &surface.grid {
        Grid::Curve { speed, tangent, second, .. } => {
            let n = surface.len();
            let d = periodic_diff_matrix(n);
            let d2 = periodic_second_diff_matrix(n);
            // (1/|x'|) d/dt (1/|x'|) d/dt = |x'|⁻² d² − |x'|'|x'|⁻³ d
            let dspeed: Vec<f64> = (0..n)
                .map(|i| (tangent[i][0] * second[i][0] + tangent[i][1] * second[i][1]) / speed[i])
                .collect();
            let m = CMatrix::from_fn(n, n, |i, j| {
                let lap = d2[(i, j)] / speed[i].powi(2) - dspeed[i] / speed[i].powi(3) * d[(i, j)];
                Complex64::new(if i == j { 1.0 - lap } else { -lap }, 0.0)
            });
            Ok(BoundaryOperator {
                kind: OperatorKind::LaplaceBeltrami,
                wavenumber: 0.0,
                repr: Representation::Dense(m),
            })
        }
        Grid::Spherical { degree, .. } => {
            let a = surface
                .radius()
                .ok_or_else(|| Error::Capability("surface Laplacian on ellipsoids is not implemented".into()))?;
            let values = (0..=*degree)
                .map(|l| Complex64::new((l * (l + 1)) as f64 / (a * a) + 1.0, 0.0))
                .collect();
            Ok(BoundaryOperator {
                kind: OperatorKind::LaplaceBeltrami,
                wavenumber: 0.0,
                repr: Representation::Harmonic(values),
            })
        }
    }
}

fn check_inputs(k: f64, q: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain(format!("refractive index must be positive, got {q}")));
    }
    if (q - 1.0).abs() < 1e-12 {
        return Err(Error::Domain("Q = 1 has no contrast; the transmission problem is degenerate".into()));
    }
    Ok(())
}

/// Per-order closed-form data on a circle or sphere of radius `a`.
#[derive(Clone, Debug)]
pub struct HarmonicBlocks {
    pub dim: usize,
    pub radius: f64,
    pub kappa: f64,
    pub q: f64,
    pub s_k: Vec<Complex64>,
    pub s_q: Vec<Complex64>,
    /// Interior traces `N = ½ + K*` at `κ` and `κQ`.
    pub n_k: Vec<Complex64>,
    pub n_q: Vec<Complex64>,
    pub t: Vec<Complex64>,
    /// `|N_{κQ}| + |N_κ S⁻¹S_{κQ}|`, the natural size of `T` per order.
    pub scale: Vec<f64>,
}

impl HarmonicBlocks {
    pub fn new(dim: usize, radius: f64, kappa: f64, q: f64, max_order: usize) -> Result<Self> {
        check_inputs(kappa, q)?;
        if dim != 2 && dim != 3 {
            return Err(Error::Capability(format!("harmonic blocks exist for d = 2, 3, got {dim}")));
        }
        let a = radius;
        let s_k = layerpot::harmonic_values(dim, a, kappa, OperatorKind::Single, max_order);
        let s_q = layerpot::harmonic_values(dim, a, kappa * q, OperatorKind::Single, max_order);
        let (tk, tq) = if dim == 2 {
            (WaveTable::cylinder(max_order, kappa * a), WaveTable::cylinder(max_order, kappa * q * a))
        } else {
            (WaveTable::spherical(max_order, kappa * a), WaveTable::spherical(max_order, kappa * q * a))
        };
        let mut n_k = Vec::with_capacity(max_order + 1);
        let mut n_q = Vec::with_capacity(max_order + 1);
        let mut t = Vec::with_capacity(max_order + 1);
        let mut scale = Vec::with_capacity(max_order + 1);
        for n in 0..=max_order {
            let rk = tk.log_derivative(n);
            let rq = tq.log_derivative(n);
            n_k.push(s_k[n] * rk / a);
            n_q.push(s_q[n] * rq / a);
            // s_Q (R(κQa) − R(κa))/a, formed without dividing by s_κ
            t.push(s_q[n] * (rq - rk) / a);
            scale.push((s_q[n] * rq / a).norm() + (s_q[n] * rk / a).norm());
        }
        Ok(HarmonicBlocks {
            dim,
            radius,
            kappa,
            q,
            s_k,
            s_q,
            n_k,
            n_q,
            t,
            scale,
        })
    }

    pub fn max_order(&self) -> usize {
        self.t.len() - 1
    }

    /// Number of real harmonics sharing order `n`.
    pub fn multiplicity(&self, n: usize) -> usize {
        order_multiplicity(self.dim, n)
    }

    /// `ξ_n = sqrt(eigenvalue of −Δ_Γ)·h`.
    pub fn xi(&self, n: usize) -> f64 {
        scaled_frequency(self.dim, self.radius, self.kappa, n)
    }

    /// Eigenvalue of `−Δ_Γ + 1` on order `n`.
    pub fn laplace(&self, n: usize) -> f64 {
        let a2 = self.radius * self.radius;
        if self.dim == 2 {
            (n * n) as f64 / a2 + 1.0
        } else {
            (n * (n + 1)) as f64 / a2 + 1.0
        }
    }
}

pub fn order_multiplicity(dim: usize, n: usize) -> usize {
    if dim == 2 {
        if n == 0 {
            1
        } else {
            2
        }
    } else {
        2 * n + 1
    }
}

pub fn scaled_frequency(dim: usize, radius: f64, kappa: f64, n: usize) -> f64 {
    let nf = n as f64;
    if dim == 2 {
        nf / (kappa * radius)
    } else {
        (nf * (nf + 1.0)).sqrt() / (kappa * radius)
    }
}

/// Default harmonic cutoff: a few units of `ξ` past the calibration band.
pub fn default_max_order(radius: f64, kappa: f64, window: CalibrationWindow) -> usize {
    ((window.hi + 2.0) * kappa * radius).ceil() as usize + 10
}

/// `T(κ)` on its natural representation: closed-form diagonal on spheres,
/// Kress–Nyström matrix on curves.
pub fn build_t(surface: &BoundarySurface, kappa: f64, q: f64) -> Result<BoundaryOperator> {
    check_inputs(kappa, q)?;
    match &surface.grid {
        Grid::Spherical { degree, .. } => {
            let a = surface
                .radius()
                .ok_or_else(|| Error::Capability("transmission operator on ellipsoids is not implemented".into()))?;
            let blocks = HarmonicBlocks::new(3, a, kappa, q, *degree)?;
            Ok(BoundaryOperator {
                kind: OperatorKind::Transmission,
                wavenumber: kappa,
                repr: Representation::Harmonic(blocks.t),
            })
        }
        Grid::Curve { .. } => {
            let parts = dense_parts(surface, kappa, q, Execution::default(), DEFAULT_COND_LIMIT)?;
            Ok(BoundaryOperator {
                kind: OperatorKind::Transmission,
                wavenumber: kappa,
                repr: Representation::Dense(parts.t),
            })
        }
    }
}

struct DenseParts {
    s_k: CMatrix,
    s_q: CMatrix,
    n_k: CMatrix,
    n_q: CMatrix,
    /// `(S^κ)⁻¹ S^{κQ}`.
    x: CMatrix,
    t: CMatrix,
}

fn dense_parts(surface: &BoundarySurface, kappa: f64, q: f64, exec: Execution, cond_limit: f64) -> Result<DenseParts> {
    let (sk, kk) = assemble_curve_pair(surface, kappa, exec)?;
    let (sq, kq) = assemble_curve_pair(surface, kappa * q, exec)?;
    let s_k = sk.dense().expect("dense").clone();
    let s_q = sq.dense().expect("dense").clone();
    let n_k = kk.neumann_trace(true).dense().expect("dense").clone();
    let n_q = kq.neumann_trace(true).dense().expect("dense").clone();
    let f = Factored::new(&s_k);
    if !(f.cond_estimate <= cond_limit) {
        return Err(Error::NearSingular {
            kappa,
            cond: f.cond_estimate,
        });
    }
    let x = f.solve_matrix(&s_q).ok_or(Error::NearSingular {
        kappa,
        cond: f64::INFINITY,
    })?;
    let t = &n_q - &n_k * &x;
    Ok(DenseParts {
        s_k,
        s_q,
        n_k,
        n_q,
        x,
        t,
    })
}

/// `A = B + B* − B*B`, Hermitian-symmetrized; returns the relative
/// pre-symmetrization defect `‖A − A*‖/‖A‖` as well.
pub fn build_a(b: &CMatrix) -> (CMatrix, f64) {
    let bh = b.adjoint();
    let a = b + &bh - &bh * b;
    let skew = (&a - a.adjoint()).norm();
    let norm = a.norm();
    let defect = if norm > 0.0 { skew / norm } else { 0.0 };
    let sym = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    (sym, defect)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// Harmonic on circles and spheres, dense elsewhere.
    #[default]
    Auto,
    Harmonic,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemOptions {
    pub window: CalibrationWindow,
    pub path: Path,
    pub cond_limit: f64,
    pub max_order: Option<usize>,
    pub exec: Execution,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            window: CalibrationWindow::default(),
            path: Path::Auto,
            cond_limit: DEFAULT_COND_LIMIT,
            max_order: None,
            exec: Execution::default(),
        }
    }
}

pub struct HarmonicSystem {
    pub blocks: HarmonicBlocks,
    /// Calibrated symbol `p_n` and eigenvalue `λ_n = 1 − |p_n|²` of `A`.
    pub p: Vec<Complex64>,
    pub lambda: Vec<f64>,
}

pub struct DenseSystem {
    pub surface: Arc<BoundarySurface>,
    pub s_k: CMatrix,
    pub s_q: CMatrix,
    pub n_k: CMatrix,
    pub n_q: CMatrix,
    pub x: CMatrix,
    pub t: CMatrix,
    pub l: CMatrix,
    pub b: CMatrix,
    /// `W^{1/2} A W^{−1/2}`, Hermitian in the plain inner product.
    pub a_hat: CMatrix,
}

pub enum SystemParts {
    Harmonic(HarmonicSystem),
    Dense(Box<DenseSystem>),
}

pub struct TransmissionSystem {
    pub kappa: f64,
    pub q: f64,
    pub h: f64,
    pub calibration: CalibrationReport,
    pub symmetrization_defect: f64,
    pub parts: SystemParts,
}

impl TransmissionSystem {
    pub fn build(surface: &BoundarySurface, kappa: f64, q: f64, opts: &SystemOptions) -> Result<Self> {
        check_inputs(kappa, q)?;
        let harmonic = match opts.path {
            Path::Auto => surface.is_rotation_invariant(),
            Path::Harmonic => true,
            Path::Dense => false,
        };
        if harmonic {
            let a = surface
                .radius()
                .ok_or_else(|| Error::Capability("harmonic path needs a circle or a sphere".into()))?;
            let max_order = opts.max_order.unwrap_or_else(|| default_max_order(a, kappa, opts.window));
            Self::harmonic(surface.dim(), a, kappa, q, max_order, opts.window)
        } else {
            if surface.curve_data().is_none() {
                return Err(Error::Capability(
                    "dense transmission systems are available on curves only".into(),
                ));
            }
            Self::dense(surface, kappa, q, opts)
        }
    }

    pub fn harmonic(
        dim: usize,
        radius: f64,
        kappa: f64,
        q: f64,
        max_order: usize,
        window: CalibrationWindow,
    ) -> Result<Self> {
        let blocks = HarmonicBlocks::new(dim, radius, kappa, q, max_order)?;
        let samples: Vec<(f64, Complex64)> = (0..=max_order)
            .map(|n| (blocks.xi(n), blocks.laplace(n) * blocks.t[n]))
            .collect();
        let calibration = calibrate(&samples, window)?;
        let p: Vec<Complex64> = samples.iter().map(|(_, v)| calibration.c_norm * v).collect();
        let lambda = p.iter().map(|z| 1.0 - z.norm_sqr()).collect();
        Ok(TransmissionSystem {
            kappa,
            q,
            h: 1.0 / kappa,
            calibration,
            symmetrization_defect: 0.0,
            parts: SystemParts::Harmonic(HarmonicSystem { blocks, p, lambda }),
        })
    }

    fn dense(surface: &BoundarySurface, kappa: f64, q: f64, opts: &SystemOptions) -> Result<Self> {
        let parts = dense_parts(surface, kappa, q, opts.exec, opts.cond_limit)?;
        let l = laplace_beltrami_plus_one(surface)?.dense().expect("dense").clone();
        let lt = &l * &parts.t;
        let calibration = calibrate(&dense_samples(surface, kappa, &lt)?, opts.window)?;
        let p = &lt * calibration.c_norm;
        let n = surface.len();
        let b = CMatrix::identity(n, n) - &p;
        let sw: Vec<f64> = surface.weights.iter().map(|w| w.sqrt()).collect();
        let b_hat = CMatrix::from_fn(n, n, |i, j| b[(i, j)] * (sw[i] / sw[j]));
        let (a_hat, defect) = build_a(&b_hat);
        Ok(TransmissionSystem {
            kappa,
            q,
            h: 1.0 / kappa,
            calibration,
            symmetrization_defect: defect,
            parts: SystemParts::Dense(Box::new(DenseSystem {
                surface: Arc::new(surface.clone()),
                s_k: parts.s_k,
                s_q: parts.s_q,
                n_k: parts.n_k,
                n_q: parts.n_q,
                x: parts.x,
                t: parts.t,
                l,
                b,
                a_hat,
            })),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.parts {
            SystemParts::Harmonic(h) => h.blocks.dim,
            SystemParts::Dense(d) => d.surface.dim(),
        }
    }

    /// Largest eigenvalue of `A`.
    pub fn a_max(&self) -> f64 {
        match &self.parts {
            SystemParts::Harmonic(h) => h.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            SystemParts::Dense(d) => hermitian_eigen_desc(&d.a_hat).0[0],
        }
    }
}

/// Rayleigh quotients of `LT` on parametric Fourier modes, tagged with the
/// arclength-scaled frequency `ξ = 2πn/(κ|∂D|)`. Only frequencies below a
/// third of the node count are trusted.
fn dense_samples(surface: &BoundarySurface, kappa: f64, lt: &CMatrix) -> Result<Vec<(f64, Complex64)>> {
    let (t, ..) = surface.curve_data().expect("curve");
    let n = surface.len();
    let length = surface.measure();
    let w = &surface.weights;
    let mut out = Vec::new();
    for freq in 1..=(n / 3) {
        let xi = 2.0 * PI * freq as f64 / (kappa * length);
        for sine in [false, true] {
            let phi = CVector::from_iterator(
                n,
                t.iter().map(|&s| {
                    let a = freq as f64 * s;
                    Complex64::new(if sine { a.sin() } else { a.cos() }, 0.0)
                }),
            );
            let img = lt * &phi;
            let num: Complex64 = (0..n).map(|i| w[i] * phi[i].conj() * img[i]).sum();
            let den: f64 = (0..n).map(|i| w[i] * phi[i].norm_sqr()).sum();
            out.push((xi, num / den));
        }
    }
    Ok(out)
}

/// Basis of an eigen-decomposition: real harmonics, or `W`-orthonormal node
/// vectors stored as columns.
#[derive(Clone, Debug)]
pub enum EigenBasis {
    Harmonic(Vec<HarmonicIndex>),
    Nodal(CMatrix),
}

#[derive(Clone, Debug)]
pub struct EigenPairSet {
    pub kappa: f64,
    pub epsilon: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub basis: EigenBasis,
    /// Indices with `1 − ε ≤ λ ≤ 1` (plus a `1e−12` guard above 1).
    pub selected: Vec<usize>,
}

impl EigenPairSet {
    pub fn multiplicity(&self) -> usize {
        self.selected.len()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> EigenPairSet {
        let mut out = self.clone();
        out.epsilon = epsilon;
        out.selected = select(&self.eigenvalues, epsilon);
        out
    }
}

fn select(eigs: &[f64], epsilon: f64) -> Vec<usize> {
    eigs.iter()
        .enumerate()
        .filter(|(_, &l)| l >= 1.0 - epsilon && l <= 1.0 + 1e-12)
        .map(|(i, _)| i)
        .collect()
}

/// Full eigen-decomposition of `A` and the `ε`-window.
pub fn eig_window(system: &TransmissionSystem, epsilon: f64) -> Result<EigenPairSet> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("window parameter must lie in [0, 1), got {epsilon}")));
    }
    match &system.parts {
        SystemParts::Harmonic(h) => {
            let mut pairs: Vec<(f64, HarmonicIndex)> = Vec::new();
            for (n, &lam) in h.lambda.iter().enumerate() {
                let comps = if h.blocks.dim == 2 {
                    harmonics::circle_components(n)
                } else {
                    harmonics::sphere_components(n)
                };
                pairs.extend(comps.into_iter().map(|c| (lam, c)));
            }
            // stable sort keeps components of one order together
            pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
            let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let selected = select(&eigenvalues, epsilon);
            Ok(EigenPairSet {
                kappa: system.kappa,
                epsilon,
                eigenvalues,
                basis: EigenBasis::Harmonic(pairs.into_iter().map(|p| p.1).collect()),
                selected,
            })
        }
        SystemParts::Dense(d) => {
            let (vals, vecs) = hermitian_eigen_desc(&d.a_hat);
            let n = vals.len();
            let isw: Vec<f64> = d.surface.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
            let phis = CMatrix::from_fn(n, n, |i, j| vecs[(i, j)] * isw[i]);
            let selected = select(&vals, epsilon);
            Ok(EigenPairSet {
                kappa: system.kappa,
                epsilon,
                eigenvalues: vals,
                basis: EigenBasis::Nodal(phis),
                selected,
            })
        }
    }
}

/// Apply the discrete `A` (not the transformed `Â`) to a node vector.
pub fn apply_a(system: &TransmissionSystem, phi: &CVector) -> Result<CVector> {
    match &system.parts {
        SystemParts::Dense(d) => {
            let sw: Vec<f64> = d.surface.weights.iter().map(|w| w.sqrt()).collect();
            let y = CVector::from_iterator(phi.len(), phi.iter().zip(&sw).map(|(z, s)| z * *s));
            let ay = &d.a_hat * y;
            Ok(CVector::from_iterator(phi.len(), ay.iter().zip(&sw).map(|(z, s)| z / *s)))
        }
        SystemParts::Harmonic(_) => Err(Error::Capability("node vectors need the dense path".into())),
    }
}

/// Notable events of a sweep, kept for run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SweepEvent {
    /// `S^κ` too ill-conditioned; the point was skipped.
    Breakdown { kappa: f64, cond: f64 },
    /// The system was rebuilt at a shifted wavenumber.
    Perturbed { from: f64, to: f64, cond: f64 },
    Calibration { kappa: f64, residual: f64 },
}

/// Relative shift applied when `S^κ` is near-singular.
pub const DEFAULT_PERTURBATION: f64 = 1e-4;

/// Build a system, stepping `κ` by `step·κ` (up to three times) past
/// interior Dirichlet eigenvalues.
pub fn build_with_perturbation(
    surface: &BoundarySurface,
    kappa: f64,
    q: f64,
    opts: &SystemOptions,
    step: f64,
    events: &mut Vec<SweepEvent>,
) -> Result<TransmissionSystem> {
    let mut k = kappa;
    for _ in 0..3 {
        match TransmissionSystem::build(surface, k, q, opts) {
            Err(Error::NearSingular { cond, .. }) => {
                let next = k * (1.0 + step);
                warn!("S^κ near-singular at κ = {k} (cond {cond:.2e}); retrying at {next}");
                events.push(SweepEvent::Perturbed { from: k, to: next, cond });
                k = next;
            }
            other => return other,
        }
    }
    TransmissionSystem::build(surface, k, q, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactEigenvalue {
    pub kappa: f64,
    /// Angular order on circles and spheres.
    pub order: Option<usize>,
    /// `σ_min(T)` (or `|t_n|`) at the refined point.
    pub sigma: f64,
    pub scale: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub scan_step: Option<f64>,
    /// Node count for curves; chosen from `κ_max·Q·a` when absent.
    pub resolution: Option<usize>,
    pub refine_tol: f64,
    pub accept: f64,
    pub cond_limit: f64,
    pub exec: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            scan_step: None,
            resolution: None,
            refine_tol: 1e-10,
            accept: 1e-6,
            cond_limit: DEFAULT_COND_LIMIT,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSearch {
    pub eigenvalues: Vec<ExactEigenvalue>,
    pub events: Vec<SweepEvent>,
    pub resolution: usize,
}

/// Node count that resolves every order up to `κQa` with margin.
pub fn recommended_circle_nodes(radius: f64, k_max: f64, q: f64) -> usize {
    2 * (2.0 * k_max * q.max(1.0) * radius + 40.0).ceil() as usize
}

/// Highest angular order that can carry a transmission eigenvalue below
/// `k_max`, with margin.
pub fn relevant_orders(radius: f64, k_max: f64, q: f64) -> usize {
    (k_max * q.max(1.0) * radius).ceil() as usize + 10
}

fn scan_grid(k_range: (f64, f64), step: Option<f64>) -> Result<Vec<f64>> {
    let (k0, k1) = k_range;
    if !(k0 > 0.0 && k1 > k0 && k1.is_finite()) {
        return Err(Error::Domain(format!("invalid wavenumber range [{k0}, {k1}]")));
    }
    let step = step.unwrap_or((k1 - k0) / 2000.0);
    if !(step > 0.0) {
        return Err(Error::Domain(format!("scan step must be positive, got {step}")));
    }
    let count = ((k1 - k0) / step).ceil() as usize;
    Ok((0..=count).map(|i| (k0 + i as f64 * step).min(k1)).collect())
}

/// Local minima of the relative residual on the grid, as brackets
/// `(left, right)`. Values saturate at 1 where one term dominates, and
/// rounding noise there would produce spurious minima, so only minima below
/// one half are kept.
fn minima_brackets(grid: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        let v = values[i];
        if !v.is_finite() || v > 0.5 {
            continue;
        }
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = if i + 1 == values.len() { f64::INFINITY } else { values[i + 1] };
        let left = if left.is_nan() { f64::INFINITY } else { left };
        let right = if right.is_nan() { f64::INFINITY } else { right };
        if v < left && v <= right {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(grid.len() - 1)];
            out.push((a, b));
        }
    }
    out
}

/// `Re(N_Q/S_Q − N_κ/S_κ)` of one harmonic block. Real up to discretization
/// error for real `κ`; it changes sign at every transmission eigenvalue of
/// the order, also where two nearly vanishing terms make the relative
/// residual dip too narrowly for the scan grid, and at poles, which the
/// residual test rejects.
fn dtn_gap(sk: Complex64, nk: Complex64, sq: Complex64, nq: Complex64) -> f64 {
    (nq / sq - nk / sk).re
}

/// Grid intervals with a sign change between finite values.
fn sign_brackets(grid: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    (0..values.len().saturating_sub(1))
        .filter(|&i| {
            let (a, b) = (values[i], values[i + 1]);
            a.is_finite() && b.is_finite() && (a < 0.0) != (b < 0.0)
        })
        .map(|i| (grid[i], grid[i + 1]))
        .collect()
}

fn circle_gap(surface: &BoundarySurface, k: f64, q: f64, n: usize) -> f64 {
    let (sk, kk) = circle_block_value(surface, k, n);
    let (sq, kq) = circle_block_value(surface, k * q, n);
    dtn_gap(sk, kk + 0.5, sq, kq + 0.5)
}

fn circle_ratio(surface: &BoundarySurface, k: f64, q: f64, n: usize) -> (f64, Complex64, f64) {
    let (sk, kk) = circle_block_value(surface, k, n);
    let (sq, kq) = circle_block_value(surface, k * q, n);
    let nq = kq + 0.5;
    let rhs = (kk + 0.5) * sq / sk;
    let t = nq - rhs;
    let scale = nq.norm() + rhs.norm();
    (t.norm() / scale, t, scale)
}

/// Transmission eigenvalues in `k_range`, located as zeros of `T(κ)`.
///
/// Circles: each Fourier block of the (circulant) Nyström matrices is
/// scanned separately. Spheres: each degree of the closed-form diagonal.
/// Other curves: `σ_min(T(κ))` of the dense matrix. Local minima are refined
/// by golden section and accepted when the minimum is below
/// `accept·scale`.
pub fn find_exact_eigenvalues(
    surface: &BoundarySurface,
    q: f64,
    k_range: (f64, f64),
    opts: &SearchOptions,
) -> Result<EigenSearch> {
    check_inputs(k_range.0.max(f64::MIN_POSITIVE), q)?;
    let grid = scan_grid(k_range, opts.scan_step)?;
    if surface.is_circle() {
        circle_search(surface, q, &grid, opts)
    } else if surface.is_sphere() {
        sphere_search(surface, q, &grid, opts)
    } else if surface.curve_data().is_some() {
        dense_search(surface, q, &grid, opts)
    } else {
        Err(Error::Capability("eigenvalue search on ellipsoids is not implemented".into()))
    }
}

fn circle_search(surface: &BoundarySurface, q: f64, grid: &[f64], opts: &SearchOptions) -> Result<EigenSearch> {
    let a = surface.radius().expect("circle");
    let k_max = *grid.last().expect("grid");
    let n_nodes = opts
        .resolution
        .unwrap_or_else(|| recommended_circle_nodes(a, k_max, q).max(surface.len()));
    let surf = if n_nodes == surface.len() {
        surface.clone()
    } else {
        build_surface(surface.shape(), n_nodes)?.scaled(surface.scale())
    };
    let orders = relevant_orders(a, k_max, q).min(n_nodes / 2 - 1);
    debug!("circle search with N = {n_nodes}, orders 0..={orders}");
    let rows: Vec<Option<Vec<(f64, f64)>>> = map_slice(opts.exec, grid, |&k| {
        let (sk, kk) = circle_block_values(&surf, k).ok()?;
        let (sq, kq) = circle_block_values(&surf, k * q).ok()?;
        let smax = sk.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let smin = sk.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(smax / smin <= opts.cond_limit) {
            return None;
        }
        Some(
            (0..=orders)
                .map(|n| {
                    let nq = kq[n] + 0.5;
                    let rhs = (kk[n] + 0.5) * sq[n] / sk[n];
                    let ratio = (nq - rhs).norm() / (nq.norm() + rhs.norm());
                    (ratio, dtn_gap(sk[n], kk[n] + 0.5, sq[n], nq))
                })
                .collect::<Vec<(f64, f64)>>(),
        )
    });
    let mut events = Vec::new();
    for (k, r) in grid.iter().zip(&rows) {
        if r.is_none() {
            events.push(SweepEvent::Breakdown {
                kappa: *k,
                cond: f64::INFINITY,
            });
        }
    }
    let per_order: Vec<Vec<ExactEigenvalue>> = map_range(opts.exec, orders + 1, |n| {
        let values: Vec<f64> = rows
            .iter()
            .map(|r| r.as_ref().map_or(f64::NAN, |v| v[n].0))
            .collect();
        let gaps: Vec<f64> = rows
            .iter()
            .map(|r| r.as_ref().map_or(f64::NAN, |v| v[n].1))
            .collect();
        let mut candidates: Vec<(f64, f64)> = minima_brackets(grid, &values)
            .into_iter()
            .map(|(lo, hi)| golden_section_min(|k| circle_ratio(&surf, k, q, n).0, lo, hi, opts.refine_tol))
            .collect();
        candidates.extend(sign_brackets(grid, &gaps).into_iter().map(|(lo, hi)| {
            let k = bisect(|k| circle_gap(&surf, k, q, n), lo, hi, opts.refine_tol);
            (k, circle_ratio(&surf, k, q, n).0)
        }));
        let mut found: Vec<ExactEigenvalue> = Vec::new();
        for (k, ratio) in candidates {
            if ratio <= opts.accept && !found.iter().any(|e| (e.kappa - k).abs() < 1e-7) {
                let (_, t, scale) = circle_ratio(&surf, k, q, n);
                found.push(ExactEigenvalue {
                    kappa: k,
                    order: Some(n),
                    sigma: t.norm(),
                    scale,
                    multiplicity: order_multiplicity(2, n),
                });
            }
        }
        found
    });
    let mut eigenvalues: Vec<ExactEigenvalue> = per_order.into_iter().flatten().collect();
    eigenvalues.sort_by(|x, y| x.kappa.total_cmp(&y.kappa));
    Ok(EigenSearch {
        eigenvalues,
        events,
        resolution: n_nodes,
    })
}

fn sphere_search(surface: &BoundarySurface, q: f64, grid: &[f64], opts: &SearchOptions) -> Result<EigenSearch> {
    let a = surface.radius().expect("sphere");
    let k_max = *grid.last().expect("grid");
    let orders = relevant_orders(a, k_max, q);
    let ratio_at = |k: f64, n: usize| -> (f64, Complex64, f64) {
        match HarmonicBlocks::new(3, a, k, q, n) {
            Ok(b) => (b.t[n].norm() / b.scale[n], b.t[n], b.scale[n]),
            Err(_) => (f64::NAN, ZERO, f64::NAN),
        }
    };
    let gap_at = |k: f64, n: usize| -> f64 {
        match HarmonicBlocks::new(3, a, k, q, n) {
            Ok(b) => dtn_gap(b.s_k[n], b.n_k[n], b.s_q[n], b.n_q[n]),
            Err(_) => f64::NAN,
        }
    };
    let rows: Vec<Vec<(f64, f64)>> = map_slice(opts.exec, grid, |&k| match HarmonicBlocks::new(3, a, k, q, orders) {
        Ok(b) => (0..=orders)
            .map(|n| (b.t[n].norm() / b.scale[n], dtn_gap(b.s_k[n], b.n_k[n], b.s_q[n], b.n_q[n])))
            .collect(),
        Err(_) => vec![(f64::NAN, f64::NAN); orders + 1],
    });
    let per_order: Vec<Vec<ExactEigenvalue>> = map_range(opts.exec, orders + 1, |n| {
        let values: Vec<f64> = rows.iter().map(|r| r[n].0).collect();
        let gaps: Vec<f64> = rows.iter().map(|r| r[n].1).collect();
        let mut candidates: Vec<(f64, f64)> = minima_brackets(grid, &values)
            .into_iter()
            .map(|(lo, hi)| golden_section_min(|k| ratio_at(k, n).0, lo, hi, opts.refine_tol))
            .collect();
        candidates.extend(sign_brackets(grid, &gaps).into_iter().map(|(lo, hi)| {
            let k = bisect(|k| gap_at(k, n), lo, hi, opts.refine_tol);
            (k, ratio_at(k, n).0)
        }));
        let mut found: Vec<ExactEigenvalue> = Vec::new();
        for (k, ratio) in candidates {
            if ratio <= opts.accept && !found.iter().any(|e| (e.kappa - k).abs() < 1e-7) {
                let (_, t, scale) = ratio_at(k, n);
                found.push(ExactEigenvalue {
                    kappa: k,
                    order: Some(n),
                    sigma: t.norm(),
                    scale,
                    multiplicity: order_multiplicity(3, n),
                });
            }
        }
        found
    });
    let mut eigenvalues: Vec<ExactEigenvalue> = per_order.into_iter().flatten().collect();
    eigenvalues.sort_by(|x, y| x.kappa.total_cmp(&y.kappa));
    Ok(EigenSearch {
        eigenvalues,
        events: Vec::new(),
        resolution: surface.len(),
    })
}

/// `σ_min(T)/scale` with `scale` the RMS singular size of the two terms.
fn dense_ratio(surface: &BoundarySurface, k: f64, q: f64, opts: &SearchOptions) -> Result<(f64, f64, f64)> {
    let parts = dense_parts(surface, k, q, opts.exec, opts.cond_limit)?;
    let n = surface.len() as f64;
    let scale = (parts.n_q.norm() + (&parts.n_k * &parts.x).norm()) / n.sqrt();
    let sigma = crate::linalg::sigma_min(&parts.t);
    Ok((sigma / scale, sigma, scale))
}

fn dense_search(surface: &BoundarySurface, q: f64, grid: &[f64], opts: &SearchOptions) -> Result<EigenSearch> {
    let surf = match opts.resolution {
        Some(n) if n != surface.len() => build_surface(surface.shape(), n)?.scaled(surface.scale()),
        _ => surface.clone(),
    };
    let serial = SearchOptions {
        exec: Execution::Sequential,
        ..*opts
    };
    let values: Vec<std::result::Result<f64, f64>> = map_slice(opts.exec, grid, |&k| match dense_ratio(&surf, k, q, &serial) {
        Ok((r, ..)) => Ok(r),
        Err(Error::NearSingular { cond, .. }) => Err(cond),
        Err(_) => Err(f64::NAN),
    });
    let mut events = Vec::new();
    let scan: Vec<f64> = grid
        .iter()
        .zip(&values)
        .map(|(k, v)| match v {
            Ok(r) => *r,
            Err(cond) => {
                events.push(SweepEvent::Breakdown { kappa: *k, cond: *cond });
                f64::NAN
            }
        })
        .collect();
    let mut eigenvalues = Vec::new();
    for (lo, hi) in minima_brackets(grid, &scan) {
        let f = |k: f64| dense_ratio(&surf, k, q, opts).map(|r| r.0).unwrap_or(f64::INFINITY);
        let (k, ratio) = golden_section_min(f, lo, hi, opts.refine_tol.max(1e-9));
        if ratio <= opts.accept {
            let (_, sigma, scale) = dense_ratio(&surf, k, q, opts)?;
            eigenvalues.push(ExactEigenvalue {
                kappa: k,
                order: None,
                sigma,
                scale,
                multiplicity: 1,
            });
        }
    }
    Ok(EigenSearch {
        eigenvalues,
        events,
        resolution: surf.len(),
    })
}

/// Field values of a transmission mode at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub u: Complex64,
    pub v: Complex64,
    pub grad_u: [Complex64; 3],
    pub grad_v: [Complex64; 3],
}

/// Closed-form description of a harmonic mode: `φ = Ŷ` (unit norm on the
/// radius-`a` surface), `u = s_Q·Z(κQr)/Z(κQa)·Ŷ(x̂)`,
/// `v = s_Q·Z(κr)/Z(κa)·Ŷ(x̂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMode {
    pub dim: usize,
    pub radius: f64,
    pub index: HarmonicIndex,
    pub s_q: Complex64,
    pub s_k: Complex64,
    /// Interior normal derivatives of `u` and `v` on `∂D` per unit `φ`.
    pub dn_u: Complex64,
    pub dn_v: Complex64,
}

#[derive(Clone, Debug)]
pub enum ModeModel {
    Harmonic(HarmonicMode),
    Dense {
        surface: Arc<BoundarySurface>,
        phi: CVector,
        varphi: CVector,
        trace_u: CVector,
        trace_v: CVector,
        dn_u: CVector,
        dn_v: CVector,
    },
}

#[derive(Clone, Debug)]
pub struct TransmissionMode {
    pub kappa: f64,
    pub q: f64,
    pub lambda: f64,
    pub delta: f64,
    /// `‖∂_ν u − ∂_ν v‖` on `∂D`.
    pub residual: f64,
    /// `‖u − v‖/‖u‖` on `∂D`.
    pub trace_mismatch: f64,
    pub model: ModeModel,
}

/// Which density to turn into a mode.
#[derive(Clone, Debug)]
pub enum ModeSelector {
    Harmonic(HarmonicIndex),
    Nodal(CVector),
}

pub(crate) fn radial_ratio(dim: usize, n: usize, x_r: f64, x_a: f64) -> (f64, f64) {
    // Z(x_r)/Z(x_a) and Z'(x_r)/Z(x_a)
    if x_r == 0.0 {
        return (if n == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let (tr, ta) = if dim == 2 {
        (WaveTable::cylinder(n, x_r), WaveTable::cylinder(n, x_a))
    } else {
        (WaveTable::spherical(n, x_r), WaveTable::spherical(n, x_a))
    };
    ((tr.j[n] / ta.j[n]).to_f64(), (tr.jp[n] / ta.j[n]).to_f64())
}

impl HarmonicMode {
    fn basis_norm(&self) -> f64 {
        if self.dim == 2 {
            1.0 / self.radius.sqrt()
        } else {
            1.0 / self.radius
        }
    }

    /// Angular factor and its surface gradient (in `x̂`-tangent Cartesian
    /// components, per unit radius).
    fn angular(&self, p: &Point) -> (f64, [f64; 3]) {
        let c = self.basis_norm();
        if self.dim == 2 {
            let th = p[1].atan2(p[0]);
            let n = self.index.order as f64;
            let y = harmonics::fourier(self.index, th);
            let dy = if self.index.order == 0 {
                0.0
            } else if self.index.component >= 0 {
                -n * (n * th).sin() / PI.sqrt()
            } else {
                n * (n * th).cos() / PI.sqrt()
            };
            let (s, co) = th.sin_cos();
            (c * y, [-c * dy * s, c * dy * co, 0.0])
        } else {
            let r = crate::geometry::norm(p).max(1e-300);
            let th = (p[2] / r).clamp(-1.0, 1.0).acos();
            let ph = p[1].atan2(p[0]);
            let (y, dth, dph) = harmonics::sphere_with_gradient(self.index, th, ph);
            let (st, ct) = th.sin_cos();
            let (sp, cp) = ph.sin_cos();
            let e_th = [ct * cp, ct * sp, -st];
            let e_ph = [-sp, cp, 0.0];
            let g = [0, 1, 2].map(|i| c * (dth * e_th[i] + dph * e_ph[i]));
            (c * y, g)
        }
    }

    fn eval(&self, kappa: f64, q: f64, p: &Point) -> FieldSample {
        let mut p = *p;
        let mut r = crate::geometry::norm(&p);
        if r < 1e-12 * self.radius {
            p = [1e-12 * self.radius, 0.0, 0.0];
            r = 1e-12 * self.radius;
        }
        let n = self.index.order;
        let (y, gy) = self.angular(&p);
        let rhat = [p[0] / r, p[1] / r, p[2] / r];
        let one = |wavenumber: f64| {
            let (f, fp) = radial_ratio(self.dim, n, wavenumber * r, wavenumber * self.radius);
            let val = self.s_q * (f * y);
            let grad = [0, 1, 2].map(|i| self.s_q * (wavenumber * fp * y * rhat[i] + f / r * gy[i]));
            (val, grad)
        };
        let (u, grad_u) = one(kappa * q);
        let (v, grad_v) = one(kappa);
        FieldSample { u, v, grad_u, grad_v }
    }
}

impl TransmissionMode {
    pub fn eval(&self, points: &[Point]) -> Result<Vec<FieldSample>> {
        match &self.model {
            ModeModel::Harmonic(h) => {
                for (index, p) in points.iter().enumerate() {
                    let r = crate::geometry::norm(p);
                    if r > h.radius * (1.0 + 1e-12) {
                        return Err(Error::Domain(format!("point {index} lies outside D")));
                    }
                }
                Ok(points.iter().map(|p| h.eval(self.kappa, self.q, p)).collect())
            }
            ModeModel::Dense { surface, phi, varphi, .. } => {
                let r_min = default_r_min(surface);
                let exec = Execution::default();
                let vals = |k: f64, d: &CVector, mode| eval_potential_with(surface, k, d, points, mode, r_min, exec);
                let (PotentialValues::Values(u), PotentialValues::Values(v)) =
                    (vals(self.kappa * self.q, phi, EvalMode::Value)?, vals(self.kappa, varphi, EvalMode::Value)?)
                else {
                    unreachable!()
                };
                let (PotentialValues::Gradients(gu), PotentialValues::Gradients(gv)) = (
                    vals(self.kappa * self.q, phi, EvalMode::Gradient)?,
                    vals(self.kappa, varphi, EvalMode::Gradient)?,
                ) else {
                    unreachable!()
                };
                Ok((0..points.len())
                    .map(|i| FieldSample {
                        u: u[i],
                        v: v[i],
                        grad_u: gu[i],
                        grad_v: gv[i],
                    })
                    .collect())
            }
        }
    }

    pub fn harmonic(&self) -> Option<&HarmonicMode> {
        match &self.model {
            ModeModel::Harmonic(h) => Some(h),
            _ => None,
        }
    }
}

/// Build `ϕ`, the fields, traces and the residual `ρ` for one density.
pub fn mode_fields(system: &TransmissionSystem, which: &ModeSelector, lambda: Option<f64>) -> Result<TransmissionMode> {
    match (&system.parts, which) {
        (SystemParts::Harmonic(h), ModeSelector::Harmonic(index)) => {
            let n = index.order;
            if n > h.blocks.max_order() {
                return Err(Error::Capability(format!("order {n} beyond the harmonic cutoff")));
            }
            Ok(harmonic_mode(system, h, *index, lambda.unwrap_or(h.lambda[n])))
        }
        (SystemParts::Dense(d), ModeSelector::Nodal(phi)) => {
            let w = &d.surface.weights;
            let norm = phi.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Domain("zero density".into()));
            }
            let phi = phi / Complex64::new(norm, 0.0);
            let varphi = &d.x * &phi;
            let trace_u = &d.s_q * &phi;
            let trace_v = &d.s_k * &varphi;
            let dn_u = &d.n_q * &phi;
            let dn_v = &d.n_k * &varphi;
            let wnorm = |v: &CVector| v.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt();
            let residual = wnorm(&(&dn_u - &dn_v));
            let trace_mismatch = wnorm(&(&trace_u - &trace_v)) / wnorm(&trace_u).max(f64::MIN_POSITIVE);
            let lambda = match lambda {
                Some(l) => l,
                None => {
                    let a_phi = apply_a(system, &phi)?;
                    (0..phi.len()).map(|i| w[i] * (phi[i].conj() * a_phi[i]).re).sum()
                }
            };
            Ok(TransmissionMode {
                kappa: system.kappa,
                q: system.q,
                lambda,
                delta: 1.0 - lambda,
                residual,
                trace_mismatch,
                model: ModeModel::Dense {
                    surface: d.surface.clone(),
                    phi,
                    varphi,
                    trace_u,
                    trace_v,
                    dn_u,
                    dn_v,
                },
            })
        }
        _ => Err(Error::Capability("mode selector does not match the system representation".into())),
    }
}

fn harmonic_mode(system: &TransmissionSystem, h: &HarmonicSystem, index: HarmonicIndex, lambda: f64) -> TransmissionMode {
    let n = index.order;
    let b = &h.blocks;
    let dn_u = b.n_q[n];
    let dn_v = b.n_k[n] * b.s_q[n] / b.s_k[n];
    TransmissionMode {
        kappa: system.kappa,
        q: system.q,
        lambda,
        delta: 1.0 - lambda,
        residual: b.t[n].norm(),
        trace_mismatch: 0.0,
        model: ModeModel::Harmonic(HarmonicMode {
            dim: b.dim,
            radius: b.radius,
            index,
            s_q: b.s_q[n],
            s_k: b.s_k[n],
            dn_u,
            dn_v,
        }),
    }
}

/// Harmonic mode at an exact transmission eigenvalue. No calibration is
/// involved, so this works at wavenumbers too small for the `ξ` window;
/// `λ` is reported as 1 and `residual` is `|t_n|`.
pub fn exact_harmonic_mode(dim: usize, radius: f64, kappa: f64, q: f64, index: HarmonicIndex) -> Result<TransmissionMode> {
    let blocks = HarmonicBlocks::new(dim, radius, kappa, q, index.order)?;
    let n = index.order;
    let b = &blocks;
    Ok(TransmissionMode {
        kappa,
        q,
        lambda: 1.0,
        delta: 0.0,
        residual: b.t[n].norm(),
        trace_mismatch: 0.0,
        model: ModeModel::Harmonic(HarmonicMode {
            dim,
            radius,
            index,
            s_q: b.s_q[n],
            s_k: b.s_k[n],
            dn_u: b.n_q[n],
            dn_v: b.n_k[n] * b.s_q[n] / b.s_k[n],
        }),
    })
}

/// Modes for every selected index of a window.
pub fn window_modes(system: &TransmissionSystem, set: &EigenPairSet) -> Result<Vec<TransmissionMode>> {
    set.selected
        .iter()
        .map(|&j| {
            let sel = match &set.basis {
                EigenBasis::Harmonic(idx) => ModeSelector::Harmonic(idx[j]),
                EigenBasis::Nodal(m) => ModeSelector::Nodal(m.column(j).into_owned()),
            };
            mode_fields(system, &sel, Some(set.eigenvalues[j]))
        })
        .collect()
}

/// Smallest singular value of the dense `T(κ)` (or `min_n |t_n|` on the
/// harmonic path).
pub fn sigma_min_t(surface: &BoundarySurface, kappa: f64, q: f64) -> Result<f64> {
    match build_t(surface, kappa, q)?.repr {
        Representation::Dense(m) => Ok(crate::linalg::sigma_min(&m)),
        Representation::Harmonic(v) => Ok(v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)),
    }
}

/// Node samples of `Ŷ` on a curve built from a circle, for cross-checks
/// between the harmonic and dense paths.
pub fn harmonic_density(surface: &BoundarySurface, index: HarmonicIndex) -> Result<CVector> {
    layerpot::harmonic_to_nodal(surface, &[(index, ONE)])
}

/// Convenience: the default circle or sphere for a radius.
pub fn radial_surface(dim: usize, radius: f64, resolution: usize) -> Result<BoundarySurface> {
    let shape = if dim == 2 {
        Shape::Circle { radius }
    } else {
        Shape::Sphere { radius }
    };
    build_surface(&shape, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> BoundarySurface {
        radial_surface(2, 1.0, n).unwrap()
    }

    #[test]
    fn laplace_beltrami_on_circle() {
        let s = build_surface(&Shape::Circle { radius: 2.0 }, 64).unwrap();
        let l = laplace_beltrami_plus_one(&s).unwrap();
        let idx = HarmonicIndex { order: 4, component: 1 };
        let phi = harmonic_density(&s, idx).unwrap();
        let out = l.dense().unwrap() * &phi;
        let want = &phi * Complex64::new(16.0 / 4.0 + 1.0, 0.0);
        assert!((out - want).norm() < 1e-9);
    }

    #[test]
    fn a_identity_cases() {
        let n = 5;
        let (a, _) = build_a(&CMatrix::identity(n, n));
        assert!((a - CMatrix::identity(n, n)).norm() < 1e-14);
        let (a, _) = build_a(&CMatrix::zeros(n, n));
        assert!(a.norm() == 0.0);
    }

    #[test]
    fn harmonic_t_vanishes_at_oracle_root() {
        let roots = crate::oracle::radial_eigenvalues(2, 1.0, 2.0, (3.0, 6.0), 0..=8, None).unwrap();
        let r = roots[0];
        let b = HarmonicBlocks::new(2, 1.0, r.kappa, 2.0, r.order).unwrap();
        assert!(b.t[r.order].norm() < 1e-8 * b.scale[r.order]);
    }

    #[test]
    fn circle_block_search_matches_oracle() {
        let s = circle(64);
        let found = find_exact_eigenvalues(&s, 2.0, (3.0, 5.0), &SearchOptions::default()).unwrap();
        let roots = crate::oracle::radial_eigenvalues(2, 1.0, 2.0, (3.0, 5.0), 0..=30, None).unwrap();
        assert_eq!(found.eigenvalues.len(), roots.len(), "{:?} {:?}", found.eigenvalues, roots);
        for (e, r) in found.eigenvalues.iter().zip(&roots) {
            assert_eq!(e.order, Some(r.order));
            assert!((e.kappa - r.kappa).abs() < 1e-6);
        }
    }

    #[test]
    fn narrow_dip_root_is_found_on_a_coarse_grid() {
        // J₃'(κ) and J₃'(8κ) nearly vanish together here
        let s = circle(64);
        let r = find_exact_eigenvalues(&s, 8.0, (3.0, 6.0), &SearchOptions::default()).unwrap();
        let hit = r.eigenvalues.iter().find(|e| e.order == Some(3) && (e.kappa - 4.2033856).abs() < 1e-6);
        assert!(hit.is_some());
    }

    #[test]
    fn dense_and_harmonic_windows_agree() {
        let k = 2.0;
        let s = circle(96);
        let opts = SystemOptions {
            path: Path::Dense,
            ..Default::default()
        };
        let dense = TransmissionSystem::build(&s, k, 2.0, &opts).unwrap();
        let harm = TransmissionSystem::harmonic(2, 1.0, k, 2.0, 40, CalibrationWindow::default()).unwrap();
        assert!((dense.calibration.c_norm - harm.calibration.c_norm).norm() < 1e-7 * harm.calibration.c_norm.norm(), "{:?} {:?}", dense.calibration, harm.calibration);
        let ed = eig_window(&dense, 0.1).unwrap();
        let eh = eig_window(&harm, 0.1).unwrap();
        for j in 0..20 {
            assert!((ed.eigenvalues[j] - eh.eigenvalues[j]).abs() < 1e-7, "{j} {:?} {:?}", &ed.eigenvalues[..20], &eh.eigenvalues[..20]);
        }
        assert!(dense.symmetrization_defect < 1e-8);
    }
}
