//! Forward scattering by a penetrable obstacle, far-field patterns, Herglotz
//! fits of interior fields and the invisibility ladder.
//!
//! The total interior field is `S^{κQ}[φ]` and the scattered field is
//! `S^κ[ψ]`; continuity of trace and normal derivative on `∂D` gives
//!
//! ```text
//! S_Q φ − S ψ            = u^i
//! (½ + K*_Q) φ − (−½ + K*) ψ = ∂_ν u^i
//! ```
//!
//! Only curves are supported.

use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySurface, Point};
use crate::layerpot::{assemble_curve_pair, eval_potential_with, EvalMode, PotentialValues, DEFAULT_COND_LIMIT};
use crate::linalg::{CMatrix, CVector, Factored};
use crate::par::{map_slice, Execution};
use crate::spectral::{SweepEvent, TransmissionMode, DEFAULT_PERTURBATION};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Entire Helmholtz solution `v_g(x) = Σ_m w_m e^{iκx·θ_m} g_m` on a
/// uniform direction grid of the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerglotzDensity {
    pub kappa: f64,
    /// Direction angles `θ_m = 2πm/M`.
    pub angles: Vec<f64>,
    /// Quadrature weights `2π/M`.
    pub weights: Vec<f64>,
    pub g: Vec<Complex64>,
    pub regularization: f64,
    /// `‖v_g − v‖/‖v‖` on the fitting samples; zero when built directly.
    pub eps_fit: f64,
}

impl HerglotzDensity {
    pub fn new(kappa: f64, g: Vec<Complex64>) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("wavenumber must be positive, got {kappa}")));
        }
        let m = g.len();
        if m == 0 {
            return Err(Error::Domain("empty direction grid".into()));
        }
        Ok(HerglotzDensity {
            kappa,
            angles: (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect(),
            weights: vec![2.0 * PI / m as f64; m],
            g,
            regularization: 0.0,
            eps_fit: 0.0,
        })
    }

    /// `‖g‖` in `L²` of the unit circle.
    pub fn density_norm(&self) -> f64 {
        self.g
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| w * g.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, points: &[Point]) -> Vec<(Complex64, [Complex64; 3])> {
        points
            .iter()
            .map(|p| {
                let mut v = Complex64::new(0.0, 0.0);
                let mut g = [Complex64::new(0.0, 0.0); 3];
                for ((th, w), c) in self.angles.iter().zip(&self.weights).zip(&self.g) {
                    let (s, co) = th.sin_cos();
                    let e = Complex64::from_polar(*w, self.kappa * (p[0] * co + p[1] * s)) * c;
                    v += e;
                    g[0] += e * I * (self.kappa * co);
                    g[1] += e * I * (self.kappa * s);
                }
                (v, g)
            })
            .collect()
    }
}

/// Incident field, a smooth Helmholtz solution near `D̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Incident {
    /// `e^{iκx·d}` with a unit direction `d`.
    PlaneWave { direction: Point },
    Herglotz(HerglotzDensity),
}

impl Incident {
    pub fn plane_wave(angle: f64) -> Self {
        Incident::PlaneWave {
            direction: [angle.cos(), angle.sin(), 0.0],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Incident::PlaneWave { direction } => {
                format!("plane wave, direction angle {:.6}", direction[1].atan2(direction[0]))
            }
            Incident::Herglotz(h) => format!("herglotz wave, {} directions", h.g.len()),
        }
    }

    /// Values and gradients at wavenumber `kappa`. A Herglotz incident field
    /// carries its own wavenumber and ignores `kappa`.
    pub fn eval(&self, kappa: f64, points: &[Point]) -> Vec<(Complex64, [Complex64; 3])> {
        match self {
            Incident::PlaneWave { direction: d } => points
                .iter()
                .map(|p| {
                    let e = Complex64::from_polar(1.0, kappa * (p[0] * d[0] + p[1] * d[1] + p[2] * d[2]));
                    (e, [0, 1, 2].map(|a| e * I * (kappa * d[a])))
                })
                .collect(),
            Incident::Herglotz(h) => h.eval(points),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterOptions {
    pub cond_limit: f64,
    /// Relative `κ` step used when the system is near-singular.
    pub perturbation: f64,
    pub exec: Execution,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            cond_limit: DEFAULT_COND_LIMIT,
            perturbation: DEFAULT_PERTURBATION,
            exec: Execution::default(),
        }
    }
}

/// Densities of a forward solve.
#[derive(Clone, Debug)]
pub struct ForwardSolution {
    pub surface: Arc<BoundarySurface>,
    /// Wavenumber actually used (after any perturbation).
    pub kappa: f64,
    pub q: f64,
    pub phi: CVector,
    pub psi: CVector,
    /// Relative residual of the dense solve.
    pub residual: f64,
    pub events: Vec<SweepEvent>,
}

/// Closest evaluation distance for near fields: two node spacings, where the
/// trapezoidal rule for the smooth kernel is still accurate to about 1e−5
/// relative and well below that farther out.
pub fn near_field_r_min(surface: &BoundarySurface) -> f64 {
    2.0 * surface.max_spacing()
}

impl ForwardSolution {
    fn potential(&self, k: f64, density: &CVector, points: &[Point]) -> Result<Vec<Complex64>> {
        match eval_potential_with(
            &self.surface,
            k,
            density,
            points,
            EvalMode::Value,
            near_field_r_min(&self.surface),
            Execution::Sequential,
        )? {
            PotentialValues::Values(v) => Ok(v),
            PotentialValues::Gradients(_) => unreachable!(),
        }
    }

    /// Total field `S^{κQ}[φ]` at interior points.
    pub fn interior(&self, points: &[Point]) -> Result<Vec<Complex64>> {
        self.potential(self.kappa * self.q, &self.phi, points)
    }

    /// Scattered field `S^κ[ψ]` at exterior points.
    pub fn scattered(&self, points: &[Point]) -> Result<Vec<Complex64>> {
        self.potential(self.kappa, &self.psi, points)
    }

    pub fn far_field(&self, directions: &[Point]) -> Vec<Complex64> {
        far_field_values(&self.surface, self.kappa, &self.psi, directions)
    }
}

fn check_curve(surface: &BoundarySurface) -> Result<()> {
    if surface.curve_data().is_none() {
        return Err(Error::Capability("scattering is implemented for curves only".into()));
    }
    Ok(())
}

fn forward_system(surface: &BoundarySurface, kappa: f64, q: f64, exec: Execution) -> Result<CMatrix> {
    let (s, k) = assemble_curve_pair(surface, kappa, exec)?;
    let (sq, kq) = assemble_curve_pair(surface, kappa * q, exec)?;
    let n = surface.len();
    let (s, sq) = (s.dense().unwrap(), sq.dense().unwrap());
    let n_ext = k.neumann_trace(false);
    let n_int = kq.neumann_trace(true);
    let (ne, ni) = (n_ext.dense().unwrap(), n_int.dense().unwrap());
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(sq);
    m.view_mut((0, n), (n, n)).copy_from(&(-s));
    m.view_mut((n, 0), (n, n)).copy_from(ni);
    m.view_mut((n, n), (n, n)).copy_from(&(-ne));
    Ok(m)
}

/// Solve the transmission scattering problem for one incident field.
pub fn solve_forward(
    surface: &BoundarySurface,
    q: f64,
    kappa: f64,
    incident: &Incident,
    opts: &ScatterOptions,
) -> Result<ForwardSolution> {
    check_curve(surface)?;
    if !(kappa > 0.0) || !(q > 0.0) {
        return Err(Error::Domain(format!("need κ > 0 and Q > 0, got κ = {kappa}, Q = {q}")));
    }
    let mut events = Vec::new();
    let mut k = kappa;
    let mut attempt = 0;
    let (m, f) = loop {
        let m = forward_system(surface, k, q, opts.exec)?;
        let f = Factored::new(&m);
        if f.cond_estimate <= opts.cond_limit {
            break (m, f);
        }
        if attempt == 3 {
            return Err(Error::NearSingular {
                kappa: k,
                cond: f.cond_estimate,
            });
        }
        let next = k * (1.0 + opts.perturbation);
        warn!("scattering system near-singular at κ = {k} (cond {:.2e}); retrying at {next}", f.cond_estimate);
        events.push(SweepEvent::Perturbed {
            from: k,
            to: next,
            cond: f.cond_estimate,
        });
        k = next;
        attempt += 1;
    };
    let n = surface.len();
    let inc = incident.eval(k, &surface.nodes);
    let mut rhs = CVector::zeros(2 * n);
    for (i, (v, g)) in inc.iter().enumerate() {
        let nu = surface.normals[i];
        rhs[i] = *v;
        rhs[n + i] = g[0] * nu[0] + g[1] * nu[1] + g[2] * nu[2];
    }
    let x = f.solve(&rhs).ok_or(Error::NearSingular {
        kappa: k,
        cond: f64::INFINITY,
    })?;
    let rnorm = rhs.norm();
    let residual = if rnorm > 0.0 { (&m * &x - &rhs).norm() / rnorm } else { 0.0 };
    if residual > 1e-9 {
        warn!("forward solve residual {residual:.2e} at κ = {k}");
    }
    Ok(ForwardSolution {
        surface: Arc::new(surface.clone()),
        kappa: k,
        q,
        phi: x.rows(0, n).into_owned(),
        psi: x.rows(n, n).into_owned(),
        residual,
        events,
    })
}

/// `c_d ∫_{∂D} e^{−iκx̂·y} ψ(y) dσ(y)` with `c₂ = e^{iπ/4}/√(8πκ)` and
/// `c₃ = 1/(4π)`.
pub fn far_field_values(surface: &BoundarySurface, kappa: f64, psi: &CVector, directions: &[Point]) -> Vec<Complex64> {
    let c = if surface.dim() == 2 {
        Complex64::from_polar(1.0 / (8.0 * PI * kappa).sqrt(), PI / 4.0)
    } else {
        Complex64::new(1.0 / (4.0 * PI), 0.0)
    };
    directions
        .iter()
        .map(|d| {
            let s: Complex64 = surface
                .nodes
                .iter()
                .zip(&surface.weights)
                .zip(psi.iter())
                .map(|((y, w), z)| Complex64::from_polar(*w, -kappa * (d[0] * y[0] + d[1] * y[1] + d[2] * y[2])) * z)
                .sum();
            c * s
        })
        .collect()
}

/// `M` equispaced directions on the unit circle.
pub fn direction_grid(m: usize) -> Vec<Point> {
    (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            [t.cos(), t.sin(), 0.0]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldResult {
    pub kappa: f64,
    pub directions: Vec<Point>,
    pub values: Vec<Complex64>,
    /// `‖ψ_∞‖` in `L²` of the unit circle (trapezoidal rule).
    pub norm: f64,
    pub incident: String,
}

pub fn far_field(solution: &ForwardSolution, directions: &[Point], incident: &Incident) -> FarFieldResult {
    let values = solution.far_field(directions);
    let m = directions.len().max(1);
    let norm = (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * 2.0 * PI / m as f64).sqrt();
    FarFieldResult {
        kappa: solution.kappa,
        directions: directions.to_vec(),
        values,
        norm,
        incident: incident.describe(),
    }
}

/// `|‖ψ_∞‖² + √(8π/κ) Re(e^{iπ/4} ψ_∞(d̂))|` for plane-wave incidence along
/// `d̂`, zero for lossless scatterers.
pub fn optical_theorem_defect(solution: &ForwardSolution, direction: Point, m: usize) -> f64 {
    let dirs = direction_grid(m);
    let vals = solution.far_field(&dirs);
    let norm2 = vals.iter().map(|z| z.norm_sqr()).sum::<f64>() * 2.0 * PI / m as f64;
    let fwd = solution.far_field(&[direction])[0];
    let k = solution.kappa;
    (norm2 + (8.0 * PI / k).sqrt() * (Complex64::from_polar(1.0, PI / 4.0) * fwd).re).abs()
}

/// Sample points and `L²(D)` weights on concentric scaled copies `s·∂D`.
/// Each copy stands for the radial shell between the midpoints to its
/// neighbours (0 and 1 at the ends), with volume element `s^{d−1}(y·ν)`.
pub fn interior_fit_grid(surface: &BoundarySurface, fractions: &[f64]) -> Result<Vec<(Point, f64)>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(Error::Domain("fit fractions must lie in (0, 1)".into()));
    }
    if fractions.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("fit fractions must be increasing".into()));
    }
    if !surface.is_star_shaped() {
        return Err(Error::Capability("fit grids need a star-shaped boundary".into()));
    }
    let d = surface.dim() as i32;
    let mut out = Vec::new();
    for (i, s) in fractions.iter().enumerate() {
        let lo = if i == 0 { 0.0 } else { 0.5 * (fractions[i - 1] + s) };
        let hi = if i + 1 == fractions.len() { 1.0 } else { 0.5 * (fractions[i + 1] + s) };
        for ((y, nu), w) in surface.nodes.iter().zip(&surface.normals).zip(&surface.weights) {
            let ydn = y[0] * nu[0] + y[1] * nu[1] + y[2] * nu[2];
            out.push(([s * y[0], s * y[1], s * y[2]], (hi - lo) * s.powi(d - 1) * ydn * w));
        }
    }
    Ok(out)
}

fn weighted_norm(values: &[Complex64], weights: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Condition number above which an unregularized fit is refused.
pub const HERGLOTZ_COND_LIMIT: f64 = 1e12;

/// Tikhonov-regularized least squares
/// `min Σ_i w_i|v_g(x_i) − v_i|² + λ‖g‖²` over `M` equispaced directions.
pub fn herglotz_fit(
    grid: &[(Point, f64)],
    values: &[Complex64],
    kappa: f64,
    m: usize,
    regularization: f64,
) -> Result<HerglotzDensity> {
    if grid.len() != values.len() {
        return Err(Error::Domain("one value per fitting point".into()));
    }
    if !(regularization >= 0.0) {
        return Err(Error::Domain(format!("regularization must be nonnegative, got {regularization}")));
    }
    let mut h = HerglotzDensity::new(kappa, vec![Complex64::new(0.0, 0.0); m])?;
    let sw: Vec<f64> = grid.iter().map(|(_, w)| w.sqrt()).collect();
    let a = CMatrix::from_fn(grid.len(), m, |i, j| {
        let p = grid[i].0;
        let (s, c) = h.angles[j].sin_cos();
        Complex64::from_polar(sw[i] * h.weights[j], kappa * (p[0] * c + p[1] * s))
    });
    let b = CVector::from_iterator(grid.len(), values.iter().zip(&sw).map(|(v, s)| v * *s));
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    // the ℓ² penalty on g is λ‖g‖² = λ Σ|g_m|²·(2π/M)/(2π/M); use the L²(S¹) norm
    let lam = regularization * h.weights[0];
    if lam == 0.0 && !(smax / smin <= HERGLOTZ_COND_LIMIT) {
        return Err(Error::Numerical(format!(
            "fit matrix condition {:.2e} exceeds {HERGLOTZ_COND_LIMIT:.0e}; supply a positive regularization",
            smax / smin
        )));
    }
    let utb = u.adjoint() * &b;
    let filt = CVector::from_iterator(
        utb.len(),
        utb.iter()
            .zip(svd.singular_values.iter())
            .map(|(c, s)| c * (s / (s * s + lam))),
    );
    let g = vt.adjoint() * filt;
    h.g = g.iter().copied().collect();
    h.regularization = regularization;
    let fitted = &a * &g;
    let weights: Vec<f64> = grid.iter().map(|(_, w)| *w).collect();
    let r: Vec<Complex64> = fitted.iter().zip(b.iter()).zip(&sw).map(|((f, b), s)| (f - b) / *s).collect();
    let vnorm = weighted_norm(values, &weights);
    h.eps_fit = if vnorm > 0.0 { weighted_norm(&r, &weights) / vnorm } else { 0.0 };
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub regularization: f64,
    pub eps_fit: f64,
    pub density_norm: f64,
    /// `‖v_g‖` on the fitting grid.
    pub incident_norm: f64,
    pub far_field_norm: f64,
    /// `‖u − ψ‖/‖u‖` on the fitting grid, `ψ` the computed total field.
    pub interior_error: f64,
    pub far_ratio: f64,
    pub interior_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRun {
    pub kappa: f64,
    /// `‖ψ_∞‖` for a plane wave rescaled to unit incident norm on the grid.
    pub far_field_per_incident: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvisibilityReport {
    pub kappa: f64,
    pub q: f64,
    pub directions: usize,
    pub steps: Vec<LadderStep>,
    /// Plane wave at the eigenvalue itself.
    pub baseline: ControlRun,
    /// Plane wave at a wavenumber away from every eigenvalue.
    pub control: Option<ControlRun>,
    pub events: Vec<SweepEvent>,
}

impl InvisibilityReport {
    /// Spread `max/min` of `‖ψ_∞‖/ε_fit` over the ladder.
    pub fn far_ratio_spread(&self) -> f64 {
        let r: Vec<f64> = self.steps.iter().map(|s| s.far_ratio).collect();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn interior_ratio_spread(&self) -> f64 {
        let r: Vec<f64> = self.steps.iter().map(|s| s.interior_ratio).collect();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `max/min` of `ε_fit` over the ladder.
    pub fn eps_range(&self) -> f64 {
        let e: Vec<f64> = self.steps.iter().map(|s| s.eps_fit).collect();
        e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / e.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Ladder step with the smallest `ε_fit`.
    pub fn tightest(&self) -> Option<&LadderStep> {
        self.steps.iter().min_by(|a, b| a.eps_fit.total_cmp(&b.eps_fit))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvisibilityOptions {
    pub ladder: Vec<f64>,
    /// Herglotz directions; `None` picks `4κ·diam + 16`.
    pub directions: Option<usize>,
    pub far_field_points: usize,
    pub fit_fractions: Vec<f64>,
    pub control_kappa: Option<f64>,
    pub scatter: ScatterOptions,
}

impl Default for InvisibilityOptions {
    fn default() -> Self {
        InvisibilityOptions {
            ladder: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            directions: None,
            far_field_points: 256,
            fit_fractions: vec![0.3, 0.6, 0.9],
            control_kappa: None,
            scatter: ScatterOptions::default(),
        }
    }
}

fn plane_wave_run(
    surface: &BoundarySurface,
    q: f64,
    kappa: f64,
    grid: &[(Point, f64)],
    opts: &InvisibilityOptions,
) -> Result<ControlRun> {
    let inc = Incident::plane_wave(0.0);
    let sol = solve_forward(surface, q, kappa, &inc, &opts.scatter)?;
    let ff = far_field(&sol, &direction_grid(opts.far_field_points), &inc);
    let pts: Vec<Point> = grid.iter().map(|p| p.0).collect();
    let w: Vec<f64> = grid.iter().map(|p| p.1).collect();
    let vals: Vec<Complex64> = inc.eval(sol.kappa, &pts).into_iter().map(|v| v.0).collect();
    Ok(ControlRun {
        kappa: sol.kappa,
        far_field_per_incident: ff.norm / weighted_norm(&vals, &w),
    })
}

/// Fit Herglotz waves to the mode's `v` along a regularization ladder and
/// scatter each one.
pub fn invisibility_report(
    surface: &BoundarySurface,
    q: f64,
    kappa: f64,
    mode: &TransmissionMode,
    opts: &InvisibilityOptions,
) -> Result<InvisibilityReport> {
    check_curve(surface)?;
    if opts.ladder.is_empty() {
        return Err(Error::Domain("empty regularization ladder".into()));
    }
    let grid = interior_fit_grid(surface, &opts.fit_fractions)?;
    let pts: Vec<Point> = grid.iter().map(|p| p.0).collect();
    let w: Vec<f64> = grid.iter().map(|p| p.1).collect();
    let fields = mode.eval(&pts)?;
    let v: Vec<Complex64> = fields.iter().map(|s| s.v).collect();
    let u: Vec<Complex64> = fields.iter().map(|s| s.u).collect();
    let unorm = weighted_norm(&u, &w);
    let m = opts
        .directions
        .unwrap_or_else(|| (4.0 * kappa * surface.diameter()).ceil() as usize + 16);
    if (m as f64) < 2.0 * kappa * surface.diameter() {
        return Err(Error::Resolution(format!(
            "{m} directions; at least 2κ·diam = {:.1} are needed",
            2.0 * kappa * surface.diameter()
        )));
    }
    let dirs = direction_grid(opts.far_field_points);
    let steps = map_slice(opts.scatter.exec, &opts.ladder, |&lam| -> Result<(LadderStep, Vec<SweepEvent>)> {
        let h = herglotz_fit(&grid, &v, kappa, m, lam)?;
        let density_norm = h.density_norm();
        let eps_fit = h.eps_fit;
        let inc = Incident::Herglotz(h);
        let vg: Vec<Complex64> = inc.eval(kappa, &pts).into_iter().map(|x| x.0).collect();
        let sol = solve_forward(surface, q, kappa, &inc, &opts.scatter)?;
        let ff = far_field(&sol, &dirs, &inc);
        let total = sol.interior(&pts)?;
        let diff: Vec<Complex64> = total.iter().zip(&u).map(|(a, b)| a - b).collect();
        let interior_error = weighted_norm(&diff, &w) / unorm;
        Ok((
            LadderStep {
                regularization: lam,
                eps_fit,
                density_norm,
                incident_norm: weighted_norm(&vg, &w),
                far_field_norm: ff.norm,
                interior_error,
                far_ratio: ff.norm / eps_fit,
                interior_ratio: interior_error / eps_fit,
            },
            sol.events,
        ))
    });
    let mut out = Vec::with_capacity(steps.len());
    let mut events = Vec::new();
    for s in steps {
        let (step, ev) = s?;
        out.push(step);
        events.extend(ev);
    }
    let baseline = plane_wave_run(surface, q, kappa, &grid, opts)?;
    let control = match opts.control_kappa {
        Some(k) => Some(plane_wave_run(surface, q, k, &grid, opts)?),
        None => None,
    };
    Ok(InvisibilityReport {
        kappa,
        q,
        directions: m,
        steps: out,
        baseline,
        control,
        events,
    })
}

/// Five-point Laplacian residual `|Δv + κ²v|` of a Herglotz wave at `p`,
/// relative to `κ²|v|`.
pub fn helmholtz_residual(h: &HerglotzDensity, p: Point, step: f64) -> f64 {
    let at = |dx: f64, dy: f64| h.eval(&[[p[0] + dx, p[1] + dy, 0.0]])[0].0;
    let c = at(0.0, 0.0);
    let lap = (at(step, 0.0) + at(-step, 0.0) + at(0.0, step) + at(0.0, -step) - c * 4.0) / (step * step);
    let k2 = h.kappa * h.kappa;
    (lap + c * k2).norm() / (k2 * c.norm()).max(f64::MIN_POSITIVE)
}
