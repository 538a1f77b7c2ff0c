//! Observables of windowed transmission modes: surface averages of `|ζ|²`
//! and `|∇ζ|²`, Weyl counts, the quantum-variance statistic, symbol fits and
//! collar energies, plus the log-log fits used to read off their exponents.
//!
//! On circles and spheres a window always holds complete degree blocks, and
//! block sums of `|Y|²` and `|∇Y|²` are rotation invariant, so the surface
//! averages reduce to closed forms times `∫γ dσ`. Partial blocks and dense
//! modes fall back to the target surface's quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::geometry::harmonics::{self, HarmonicIndex};
use crate::geometry::{offset_surface, BoundarySurface, Point, SurfaceWeight};
use crate::linalg::{gauss_legendre, golden_section_min, lstsq, periodic_diff_matrix};
use crate::oracle::{radial_energy, radial_mode_eval, RadialMode};
use crate::par::map_slice;
use crate::spectral::{
    eig_window, radial_ratio, scaled_frequency, window_modes, CalibrationWindow, FieldSample, HarmonicMode,
    ModeModel, SystemOptions, SystemParts, TransmissionMode, TransmissionSystem,
};

/// Which field of the pair `(u, v)` a functional reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zeta {
    U,
    V,
}

impl Zeta {
    pub fn name(self) -> &'static str {
        match self {
            Zeta::U => "u",
            Zeta::V => "v",
        }
    }
}

/// Surface a functional integrates over: `∂D` itself or a scaled copy `Γ_R`.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Boundary(&'a BoundarySurface),
    Interior(&'a crate::geometry::InteriorSurface),
}

impl<'a> Target<'a> {
    pub fn surface(&self) -> &'a BoundarySurface {
        match self {
            Target::Boundary(s) => s,
            Target::Interior(s) => &s.surface,
        }
    }

    fn is_boundary(&self) -> bool {
        matches!(self, Target::Boundary(_))
    }
}

/// Anything that can report `u`, `v` and their gradients inside `D`.
pub trait FieldSource {
    fn fields(&self, points: &[Point]) -> Result<Vec<FieldSample>>;

    /// Fields on the nodes of `∂D`. Layer potentials cannot be evaluated
    /// there directly, so dense modes override this with their traces.
    fn boundary_fields(&self, surface: &BoundarySurface) -> Result<Vec<FieldSample>> {
        self.fields(&surface.nodes)
    }
}

impl FieldSource for TransmissionMode {
    fn fields(&self, points: &[Point]) -> Result<Vec<FieldSample>> {
        self.eval(points)
    }

    fn boundary_fields(&self, surface: &BoundarySurface) -> Result<Vec<FieldSample>> {
        match &self.model {
            ModeModel::Harmonic(_) => self.eval(&surface.nodes),
            ModeModel::Dense {
                surface: own,
                trace_u,
                trace_v,
                dn_u,
                dn_v,
                ..
            } => {
                if own.len() != surface.len() || own.nodes[0] != surface.nodes[0] {
                    return Err(Error::Capability(
                        "boundary values of a dense mode exist only on its own discretization".into(),
                    ));
                }
                let (_, tangent, _, speed) = own.curve_data().expect("dense modes live on curves");
                let d = periodic_diff_matrix(own.len());
                let ds = |f: &crate::linalg::CVector| -> Vec<Complex64> {
                    (0..f.len())
                        .map(|i| (0..f.len()).map(|j| f[j] * d[(i, j)]).sum::<Complex64>() / speed[i])
                        .collect()
                };
                let (su, sv) = (ds(trace_u), ds(trace_v));
                Ok((0..own.len())
                    .map(|i| {
                        let nu = own.normals[i];
                        let tau = [tangent[i][0] / speed[i], tangent[i][1] / speed[i], 0.0];
                        let grad = |dn: Complex64, dt: Complex64| [0, 1, 2].map(|c| dn * nu[c] + dt * tau[c]);
                        FieldSample {
                            u: trace_u[i],
                            v: trace_v[i],
                            grad_u: grad(dn_u[i], su[i]),
                            grad_v: grad(dn_v[i], sv[i]),
                        }
                    })
                    .collect())
            }
        }
    }
}

impl FieldSource for RadialMode {
    fn fields(&self, points: &[Point]) -> Result<Vec<FieldSample>> {
        points
            .iter()
            .map(|p| {
                let f = radial_mode_eval(self, p)?;
                Ok(FieldSample {
                    u: f.u,
                    v: f.v,
                    grad_u: f.grad_u,
                    grad_v: f.grad_v,
                })
            })
            .collect()
    }
}

fn sample_density(s: &FieldSample, zeta: Zeta, order: u8) -> f64 {
    match (zeta, order) {
        (Zeta::U, 0) => s.u.norm_sqr(),
        (Zeta::V, 0) => s.v.norm_sqr(),
        (Zeta::U, _) => s.grad_u.iter().map(|z| z.norm_sqr()).sum(),
        (Zeta::V, _) => s.grad_v.iter().map(|z| z.norm_sqr()).sum(),
    }
}

fn check_order(order: u8) -> Result<()> {
    if order > 1 {
        return Err(Error::Domain(format!("functional order must be 0 or 1, got {order}")));
    }
    Ok(())
}

/// `∫ γ|ζ|² dσ` (order 0) or `∫ γ|∇ζ|² dσ` (order 1) of one mode over the
/// target, by the target's quadrature.
pub fn mode_integral<M: FieldSource + ?Sized>(
    mode: &M,
    target: Target<'_>,
    weight: &SurfaceWeight,
    zeta: Zeta,
    order: u8,
) -> Result<f64> {
    check_order(order)?;
    let surface = target.surface();
    let samples = if target.is_boundary() {
        mode.boundary_fields(surface)?
    } else {
        mode.fields(&surface.nodes)?
    };
    Ok(surface
        .nodes
        .iter()
        .zip(&samples)
        .zip(&surface.weights)
        .map(|((x, s), w)| w * weight.value(x) * sample_density(s, zeta, order))
        .sum())
}

/// Area of the unit sphere `S^{d−1}`.
fn unit_sphere_measure(dim: usize) -> f64 {
    if dim == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// Sum of `∫_{Γ_r} γ|ζ|²` (or `|∇ζ|²`) over every component of the order of
/// `h`, where `g = ∫_{Γ_r} γ dσ`.
fn block_integral(h: &HarmonicMode, kappa: f64, q: f64, r: f64, g: f64, zeta: Zeta, order: u8) -> f64 {
    let n = h.index.order;
    let k = match zeta {
        Zeta::U => kappa * q,
        Zeta::V => kappa,
    };
    let (f, fp) = radial_ratio(h.dim, n, k * r, k * h.radius);
    let mult = crate::spectral::order_multiplicity(h.dim, n) as f64;
    let per = h.s_q.norm_sqr() * mult * g / (h.radius.powi(h.dim as i32 - 1) * unit_sphere_measure(h.dim));
    if order == 0 {
        per * f * f
    } else {
        let nf = n as f64;
        let lambda = if h.dim == 2 { nf * nf } else { nf * (nf + 1.0) };
        per * ((k * fp).powi(2) + lambda * (f / r).powi(2))
    }
}

/// `(1/|J|) Σ_{j∈J} ∫ γ·|ζ_j|² dσ` (order 0) or the same with `|∇ζ_j|²`
/// (order 1) over the target surface.
pub fn concentration_functional(
    modes: &[TransmissionMode],
    target: Target<'_>,
    weight: &SurfaceWeight,
    zeta: Zeta,
    order: u8,
) -> Result<f64> {
    check_order(order)?;
    if modes.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let surface = target.surface();
    let radius = surface.radius();
    let mut total = 0.0;
    let mut blocks: BTreeMap<usize, Vec<&TransmissionMode>> = BTreeMap::new();
    let mut loose: Vec<&TransmissionMode> = Vec::new();
    for m in modes {
        match (m.harmonic(), radius) {
            (Some(h), Some(_)) => blocks.entry(h.index.order).or_default().push(m),
            _ => loose.push(m),
        }
    }
    let mut g = None;
    for (n, group) in blocks {
        let h0 = group[0].harmonic().expect("harmonic");
        let mut comps: Vec<i64> = group.iter().map(|m| m.harmonic().unwrap().index.component).collect();
        comps.sort_unstable();
        comps.dedup();
        let complete = comps.len() == group.len()
            && group.len() == crate::spectral::order_multiplicity(h0.dim, n)
            && group.iter().all(|m| m.kappa == group[0].kappa && m.q == group[0].q);
        if complete {
            let g = *g.get_or_insert_with(|| {
                let vals: Vec<f64> = surface.nodes.iter().map(|x| weight.value(x)).collect();
                surface.integrate(&vals)
            });
            total += block_integral(h0, group[0].kappa, group[0].q, radius.unwrap(), g, zeta, order);
        } else {
            loose.extend(group);
        }
    }
    for m in loose {
        total += mode_integral(m, target, weight, zeta, order)?;
    }
    Ok(total / modes.len() as f64)
}

/// Ordinary least squares of `log value` on `log κ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% Student-t interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

pub fn scaling_fit(kappas: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if kappas.len() != values.len() {
        return Err(Error::Fit("κ and value lists differ in length".into()));
    }
    let n = kappas.len();
    if n < 4 {
        return Err(Error::Fit(format!("a scaling fit needs at least 4 points, got {n}")));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("log-log fit needs positive values, got {v}")));
    }
    if let Some(k) = kappas.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::Fit(format!("log-log fit needs positive abscissae, got {k}")));
    }
    let x: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ScalingFit {
        slope,
        intercept,
        stderr,
        ci_low: slope - t * stderr,
        ci_high: slope + t * stderr,
        points: n,
    })
}

/// `y ≈ C ξ^p (1 + c ξ⁻²)`, fitted in relative error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    pub correction: f64,
    /// RMS relative residual.
    pub residual: f64,
}

pub fn corrected_power_fit(xi: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if xi.len() < 4 || xi.len() != y.len() {
        return Err(Error::Fit(format!("corrected power fit needs at least 4 samples, got {}", xi.len())));
    }
    let sign = y[0].signum();
    if sign == 0.0 || y.iter().any(|v| v.signum() != sign || !v.is_finite()) {
        return Err(Error::Fit("power fit needs samples of one sign".into()));
    }
    let solve = |p: f64| -> Option<(f64, f64, f64)> {
        let rows: Vec<Vec<f64>> = xi
            .iter()
            .zip(y)
            .map(|(x, v)| vec![x.powf(p) / v, x.powf(p - 2.0) / v])
            .collect();
        let ones = vec![1.0; y.len()];
        let (c, r) = lstsq(&rows, &ones).ok()?;
        let rms = (r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64).sqrt();
        Some((c[0], c[1], rms))
    };
    let cost = |p: f64| solve(p).map_or(f64::INFINITY, |s| s.2);
    let step = 0.01;
    let (mut best, mut best_cost) = (0.0, f64::INFINITY);
    let mut p = -6.0;
    while p <= 2.0 + 1e-12 {
        let c = cost(p);
        if c < best_cost {
            best = p;
            best_cost = c;
        }
        p += step;
    }
    let (p, _) = golden_section_min(cost, best - step, best + step, 1e-10);
    let (a, b, residual) = solve(p).ok_or_else(|| Error::Fit("power fit failed".into()))?;
    Ok(PowerLawFit {
        exponent: p,
        constant: a,
        correction: b / a,
        residual,
    })
}

fn check_sweep(kappas: &[f64]) -> Result<()> {
    if kappas.is_empty() {
        return Err(Error::Domain("empty κ list".into()));
    }
    if kappas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("κ list must be strictly increasing".into()));
    }
    Ok(())
}

fn phase_space_factor(dim: usize, kappa: f64) -> f64 {
    (2.0 * PI / kappa).powi(dim as i32 - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub kappa: f64,
    pub multiplicity: usize,
    /// `(2πh)^{d−1} m`.
    pub normalized: f64,
    pub calibration_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSweep {
    pub dim: usize,
    pub q: f64,
    pub epsilon: f64,
    pub points: Vec<WeylPoint>,
    /// Fit of `log m` on `log κ` over the points with `m > 0`; absent with
    /// fewer than four such points.
    pub fit: Option<ScalingFit>,
}

/// `m(κ, ε)` across a κ list.
pub fn weyl_count_sweep(
    surface: &BoundarySurface,
    q: f64,
    epsilon: f64,
    kappas: &[f64],
    opts: &SystemOptions,
) -> Result<WeylSweep> {
    check_sweep(kappas)?;
    let counts = map_slice(opts.exec, kappas, |&k| {
        let sys = TransmissionSystem::build(surface, k, q, opts)?;
        Ok((eig_window(&sys, epsilon)?.multiplicity(), sys.calibration.residual))
    });
    let dim = surface.dim();
    let mut points = Vec::with_capacity(kappas.len());
    for (&kappa, m) in kappas.iter().zip(counts) {
        let (m, calibration_residual): (usize, f64) = m?;
        points.push(WeylPoint {
            kappa,
            multiplicity: m,
            normalized: phase_space_factor(dim, kappa) * m as f64,
            calibration_residual,
        });
    }
    let used: Vec<&WeylPoint> = points
        .iter()
        .filter(|p| {
            if p.multiplicity == 0 {
                log::warn!("empty window at κ = {}; excluded from the Weyl fit", p.kappa);
            }
            p.multiplicity > 0
        })
        .collect();
    let fit = if used.len() >= 4 {
        let ks: Vec<f64> = used.iter().map(|p| p.kappa).collect();
        let ms: Vec<f64> = used.iter().map(|p| p.multiplicity as f64).collect();
        Some(scaling_fit(&ks, &ms)?)
    } else {
        None
    };
    Ok(WeylSweep {
        dim,
        q,
        epsilon,
        points,
        fit,
    })
}

/// Fourier multiplier `b(ξ)` of a separable symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Multiplier {
    #[default]
    One,
    /// Indicator of `lo ≤ ξ ≤ hi`.
    Band { lo: f64, hi: f64 },
}

impl Multiplier {
    pub fn value(&self, xi: f64) -> f64 {
        match self {
            Multiplier::One => 1.0,
            Multiplier::Band { lo, hi } => {
                if xi >= *lo && xi <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Phase-space symbol `a(x, ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Symbol {
    /// `γ(x)·b(ξ)`, quantized as `½(M_γ B + B M_γ)`.
    Separable { weight: SurfaceWeight, multiplier: Multiplier },
    /// Samples `(x, y, ξ, a)` of a general symbol.
    Sampled { samples: Vec<[f64; 4]> },
}

impl Default for Symbol {
    fn default() -> Self {
        Symbol::Separable {
            weight: SurfaceWeight::One,
            multiplier: Multiplier::One,
        }
    }
}

impl Symbol {
    fn separable(&self) -> Result<(&SurfaceWeight, &Multiplier)> {
        match self {
            Symbol::Separable { weight, multiplier } => Ok((weight, multiplier)),
            Symbol::Sampled { .. } => Err(Error::Capability(
                "only separable symbols γ(x)·b(ξ) can be quantized on rotation-invariant surfaces".into(),
            )),
        }
    }
}

/// `∫_{S^{d−1}} γ |Y|²` for each real harmonic, by a quadrature fine enough
/// for the largest order and the weight.
pub fn angular_weight_integrals(dim: usize, weight: &SurfaceWeight, indices: &[HarmonicIndex]) -> Vec<f64> {
    let nmax = indices.iter().map(|i| i.order).max().unwrap_or(0);
    let width = match weight {
        SurfaceWeight::One => return vec![1.0; indices.len()],
        SurfaceWeight::Bump(b) => b.width,
    };
    // the bump profile needs a few hundred nodes per unit of 1/width
    let extra = (400.0 / width).ceil() as usize;
    if dim == 2 {
        let m = (4 * nmax + 4 * extra).max(4096);
        let h = 2.0 * PI / m as f64;
        let g: Vec<f64> = (0..m)
            .map(|i| {
                let t = i as f64 * h;
                weight.value(&[t.cos(), t.sin(), 0.0])
            })
            .collect();
        // Γ_k = ∫ γ cos(kθ) dθ
        let gamma = |k: usize| -> f64 {
            (0..m)
                .map(|i| g[i] * ((k as f64) * i as f64 * h).cos())
                .sum::<f64>()
                * h
        };
        let g0 = gamma(0);
        indices
            .iter()
            .map(|idx| {
                if idx.order == 0 {
                    g0 / (2.0 * PI)
                } else {
                    let g2 = gamma(2 * idx.order);
                    if idx.component >= 0 {
                        (g0 + g2) / (2.0 * PI)
                    } else {
                        (g0 - g2) / (2.0 * PI)
                    }
                }
            })
            .collect()
    } else {
        let n_theta = nmax + extra;
        let n_phi = 2 * n_theta + 2 * nmax;
        let (x, w) = gauss_legendre(n_theta);
        let hp = 2.0 * PI / n_phi as f64;
        let mut out = vec![0.0; indices.len()];
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.clamp(-1.0, 1.0).acos();
            let (st, ct) = theta.sin_cos();
            let g: Vec<f64> = (0..n_phi)
                .map(|j| {
                    let p = j as f64 * hp;
                    weight.value(&[st * p.cos(), st * p.sin(), ct])
                })
                .collect();
            let mut cache: BTreeMap<usize, f64> = BTreeMap::new();
            let mut gamma = |k: usize| -> f64 {
                *cache.entry(k).or_insert_with(|| {
                    (0..n_phi).map(|j| g[j] * ((k as f64) * j as f64 * hp).cos()).sum::<f64>() * hp
                })
            };
            let table = harmonics::legendre_table(nmax, theta);
            for (slot, idx) in out.iter_mut().zip(indices) {
                let l = idx.order;
                let m = idx.component.unsigned_abs() as usize;
                let p = table[l * (l + 1) / 2 + m];
                // |Y|² = p̄² on m = 0 and p̄²(1 ± cos 2mφ) otherwise
                let ang = if m == 0 {
                    gamma(0) / (2.0 * PI)
                } else if idx.component > 0 {
                    (gamma(0) + gamma(2 * m)) / (2.0 * PI)
                } else {
                    (gamma(0) - gamma(2 * m)) / (2.0 * PI)
                };
                *slot += wi * p * p * 2.0 * PI * ang;
            }
        }
        out
    }
}

/// Mean of `γ` over the unit circle or sphere.
pub fn angular_mean(dim: usize, weight: &SurfaceWeight) -> f64 {
    // ∫γ|Y_0|² with the constant harmonic is the mean
    angular_weight_integrals(dim, weight, &[HarmonicIndex { order: 0, component: 0 }])[0]
}

fn window_harmonics(modes: &[TransmissionMode]) -> Result<Vec<&HarmonicMode>> {
    modes
        .iter()
        .map(|m| {
            m.harmonic().ok_or_else(|| {
                Error::Capability("symbol quantization needs harmonic modes on a circle or sphere".into())
            })
        })
        .collect()
}

/// `Σ_{j∈J} ⟨Op_a φ_j, φ_j⟩` for harmonic window modes.
fn symbol_trace(modes: &[TransmissionMode], symbol: &Symbol) -> Result<f64> {
    let (weight, multiplier) = symbol.separable()?;
    let hs = window_harmonics(modes)?;
    let idx: Vec<HarmonicIndex> = hs.iter().map(|h| h.index).collect();
    let dim = hs.first().map_or(2, |h| h.dim);
    let ang = angular_weight_integrals(dim, weight, &idx);
    Ok(hs
        .iter()
        .zip(modes)
        .zip(&ang)
        .map(|((h, m), g)| multiplier.value(scaled_frequency(h.dim, h.radius, m.kappa, h.index.order)) * g)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedWeylPoint {
    pub kappa: f64,
    pub multiplicity: usize,
    /// `(2πh)^{d−1} Σ_{j∈J} ⟨Op_a φ_j, φ_j⟩`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedWeyl {
    pub points: Vec<GeneralizedWeylPoint>,
    /// `|value_{i+1} − value_i|` along the sweep.
    pub cauchy_differences: Vec<f64>,
}

pub fn generalized_weyl_test(
    surface: &BoundarySurface,
    q: f64,
    epsilon: f64,
    kappas: &[f64],
    symbol: &Symbol,
    opts: &SystemOptions,
) -> Result<GeneralizedWeyl> {
    check_sweep(kappas)?;
    symbol.separable()?;
    if !surface.is_rotation_invariant() {
        return Err(Error::Capability("symbol quantization needs a circle or a sphere".into()));
    }
    let dim = surface.dim();
    let res = map_slice(opts.exec, kappas, |&k| -> Result<GeneralizedWeylPoint> {
        let sys = TransmissionSystem::build(surface, k, q, opts)?;
        let set = eig_window(&sys, epsilon)?;
        let modes = window_modes(&sys, &set)?;
        let trace = if modes.is_empty() { 0.0 } else { symbol_trace(&modes, symbol)? };
        Ok(GeneralizedWeylPoint {
            kappa: k,
            multiplicity: set.multiplicity(),
            value: phase_space_factor(dim, k) * trace,
        })
    });
    let points = res.into_iter().collect::<Result<Vec<_>>>()?;
    let cauchy_differences = points.windows(2).map(|w| (w[1].value - w[0].value).abs()).collect();
    Ok(GeneralizedWeyl {
        points,
        cauchy_differences,
    })
}

/// `(1/|J|) Σ_{j∈J} |⟨Op_{a−ā} φ_j, φ_j⟩|²` with `ā` the angular mean of the
/// weight (times the same multiplier).
pub fn quantum_variance(modes: &[TransmissionMode], symbol: &Symbol) -> Result<f64> {
    let (weight, multiplier) = symbol.separable()?;
    if modes.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let hs = window_harmonics(modes)?;
    let dim = hs[0].dim;
    let idx: Vec<HarmonicIndex> = hs.iter().map(|h| h.index).collect();
    let ang = angular_weight_integrals(dim, weight, &idx);
    let mean = angular_mean(dim, weight);
    let total: f64 = hs
        .iter()
        .zip(modes)
        .zip(&ang)
        .map(|((h, m), g)| {
            let b = multiplier.value(scaled_frequency(h.dim, h.radius, m.kappa, h.index.order));
            (b * (g - mean)).powi(2)
        })
        .sum();
    Ok(total / modes.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub kappa: f64,
    pub multiplicity: usize,
    /// Absent on an empty window.
    pub variance: Option<f64>,
    pub calibration_residual: f64,
}

pub fn variance_sweep(
    surface: &BoundarySurface,
    q: f64,
    epsilon: f64,
    kappas: &[f64],
    symbol: &Symbol,
    opts: &SystemOptions,
) -> Result<Vec<VariancePoint>> {
    check_sweep(kappas)?;
    symbol.separable()?;
    if !surface.is_rotation_invariant() {
        return Err(Error::Capability("symbol quantization needs a circle or a sphere".into()));
    }
    map_slice(opts.exec, kappas, |&k| {
        let sys = TransmissionSystem::build(surface, k, q, opts)?;
        let set = eig_window(&sys, epsilon)?;
        let modes = window_modes(&sys, &set)?;
        let variance = if modes.is_empty() {
            None
        } else {
            Some(quantum_variance(&modes, symbol)?)
        };
        Ok(VariancePoint {
            kappa: k,
            multiplicity: set.multiplicity(),
            variance,
            calibration_residual: sys.calibration.residual,
        })
    })
    .into_iter()
    .collect()
}

/// Fit of `c₂ ξ^p` to `1 − λ`, and of `C ξ^p (1 + c ξ⁻²)` to `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCheck {
    pub xi_lo: f64,
    pub xi_hi: f64,
    /// Log-log slope of `|1 − λ|`.
    pub literal_exponent: f64,
    /// Signed `c₂` of `1 − λ ≈ c₂ ξ^p`.
    pub literal_c2: f64,
    pub decay: PowerLawFit,
    /// `c₂` of the calibration fit `p ≈ c⁻¹(1 + c₂ξ⁻² + c₄ξ⁻⁴)`.
    pub calibration_c2: f64,
    /// `"one_minus_lambda"` or `"lambda"`: whichever exponent lands closer
    /// to −2.
    pub reading: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubleadingFit {
    /// `κ s_n(κQ) ≈ C ξ⁻¹ + D ξ⁻³ + E ξ⁻⁵`.
    pub leading: f64,
    pub cubic: f64,
    pub quintic: f64,
    /// `D/Q²`.
    pub cubic_per_q2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolReport {
    pub dim: usize,
    pub radius: f64,
    pub kappa: f64,
    pub q: f64,
    pub xi_max: f64,
    /// Fits of `Re κ s_n` at `κ` and at `κQ`.
    pub single_layer_k: PowerLawFit,
    pub single_layer_q: PowerLawFit,
    pub subleading: SubleadingFit,
    /// Fit of `Re κ K*_n`.
    pub kstar: PowerLawFit,
    /// `C·a` of the K* fit; radius independent when the symbol is
    /// curvature-linear.
    pub kstar_curvature_product: f64,
    pub hamiltonian: HamiltonianCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolOptions {
    pub xi_max: f64,
    /// `ξ` band of the exponent fits.
    pub exponent_lo: f64,
    /// Lower end of the subleading and K* fits (upper end is `xi_max`).
    pub subleading_lo: f64,
    /// `ξ` band of the Hamiltonian fits.
    pub hamiltonian: CalibrationWindow,
    pub window: CalibrationWindow,
}

impl Default for SymbolOptions {
    fn default() -> Self {
        SymbolOptions {
            xi_max: 16.0,
            exponent_lo: 6.0,
            subleading_lo: 8.0,
            hamiltonian: CalibrationWindow { lo: 4.0, hi: 8.0 },
            window: CalibrationWindow::default(),
        }
    }
}

fn band(xi: &[f64], values: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    xi.iter()
        .zip(values)
        .filter(|(x, _)| **x >= lo - 1e-9 && **x <= hi + 1e-9)
        .map(|(x, v)| (*x, *v))
        .unzip()
}

/// Numerical checks of the leading symbols of `S`, `K*` and of the
/// dispersion `λ(ξ)` of the calibrated `A`, from the closed-form harmonic
/// eigenvalues on a circle or sphere.
pub fn symbol_check(dim: usize, radius: f64, kappa: f64, q: f64, opts: &SymbolOptions) -> Result<SymbolReport> {
    if opts.xi_max < 6.0 {
        return Err(Error::Capability(format!(
            "symbol fits need frequencies up to ξ ≥ 6, got {}",
            opts.xi_max
        )));
    }
    let max_order = (opts.xi_max * kappa * radius).ceil() as usize + 1;
    let sys = TransmissionSystem::harmonic(dim, radius, kappa, q, max_order, opts.window)?;
    let SystemParts::Harmonic(h) = &sys.parts else {
        unreachable!()
    };
    let b = &h.blocks;
    let xi: Vec<f64> = (0..=max_order).map(|n| b.xi(n)).collect();
    let re = |v: &[Complex64]| -> Vec<f64> { v.iter().map(|z| (z * kappa).re).collect() };

    let (x, y) = band(&xi, &re(&b.s_k), opts.exponent_lo, opts.xi_max);
    let single_layer_k = corrected_power_fit(&x, &y)?;
    let (x, y) = band(&xi, &re(&b.s_q), opts.exponent_lo, opts.xi_max);
    let single_layer_q = corrected_power_fit(&x, &y)?;

    let (x, y) = band(&xi, &re(&b.s_q), opts.subleading_lo, opts.xi_max);
    let rows: Vec<Vec<f64>> = x.iter().map(|s| vec![1.0 / s, s.powi(-3), s.powi(-5)]).collect();
    let (c, _) = lstsq(&rows, &y)?;
    let subleading = SubleadingFit {
        leading: c[0],
        cubic: c[1],
        quintic: c[2],
        cubic_per_q2: c[1] / (q * q),
    };

    // K* = N − ½ on the interior trace
    let kst: Vec<Complex64> = b.n_k.iter().map(|n| n - 0.5).collect();
    let (x, y) = band(&xi, &re(&kst), opts.subleading_lo, opts.xi_max);
    let kstar = corrected_power_fit(&x, &y)?;
    let kstar_curvature_product = kstar.constant * radius;

    let (x, lam) = band(&xi, &h.lambda, opts.hamiltonian.lo, opts.hamiltonian.hi);
    let one_minus: Vec<f64> = lam.iter().map(|l| 1.0 - l).collect();
    let literal_values: Vec<f64> = one_minus.iter().map(|v| v.abs()).collect();
    let lit = scaling_fit(&x, &literal_values)?;
    let literal_c2 = one_minus[0].signum() * lit.intercept.exp();
    let decay = corrected_power_fit(&x, &lam)?;
    let reading = if (decay.exponent + 2.0).abs() < (lit.slope + 2.0).abs() {
        "lambda"
    } else {
        "one_minus_lambda"
    };
    let hamiltonian = HamiltonianCheck {
        xi_lo: opts.hamiltonian.lo,
        xi_hi: opts.hamiltonian.hi,
        literal_exponent: lit.slope,
        literal_c2,
        decay,
        calibration_c2: sys.calibration.c2,
        reading: reading.into(),
    };
    Ok(SymbolReport {
        dim,
        radius,
        kappa,
        q,
        xi_max: opts.xi_max,
        single_layer_k,
        single_layer_q,
        subleading,
        kstar,
        kstar_curvature_product,
        hamiltonian,
    })
}

/// Ratio of the `ξ⁻³` coefficients of two reports and the `Q²` ratio it
/// should reproduce.
pub fn q_squared_scaling(a: &SymbolReport, b: &SymbolReport) -> (f64, f64) {
    (b.subleading.cubic / a.subleading.cubic, (b.q * b.q) / (a.q * a.q))
}

/// `(C·a)` of the second report over that of the first.
pub fn curvature_scaling(a: &SymbolReport, b: &SymbolReport) -> f64 {
    b.kstar_curvature_product / a.kstar_curvature_product
}

fn harmonic_of(mode: &TransmissionMode) -> Result<&HarmonicMode> {
    mode.harmonic().ok_or_else(|| {
        Error::Capability("collar energies are available for circle and sphere modes only".into())
    })
}

/// Share of `∫_D |u|²` within distance `width` of `∂D`.
pub fn collar_energy(mode: &TransmissionMode, width: f64) -> Result<f64> {
    let h = harmonic_of(mode)?;
    if !(width >= 0.0) {
        return Err(Error::Domain(format!("collar width must be nonnegative, got {width}")));
    }
    let a = h.radius;
    let w = width.min(a);
    let k = mode.kappa * mode.q;
    let n = h.index.order;
    let total = radial_energy(h.dim, n, k, a);
    let inner = radial_energy(h.dim, n, k, a - w);
    Ok(((total - inner) / total).clamp(0.0, 1.0))
}

/// The same share by quadrature on a polar grid with `points_per_wavelength`
/// samples per `2π/(κQ)` in each direction.
pub fn collar_energy_on_grid(mode: &TransmissionMode, width: f64, points_per_wavelength: usize) -> Result<f64> {
    let h = harmonic_of(mode)?;
    if points_per_wavelength < 6 {
        return Err(Error::Resolution(format!(
            "{points_per_wavelength} points per wavelength; at least 6 are needed"
        )));
    }
    if !(width >= 0.0) {
        return Err(Error::Domain(format!("collar width must be nonnegative, got {width}")));
    }
    let a = h.radius;
    let w = width.min(a);
    let k = mode.kappa * mode.q;
    let wavelength = 2.0 * PI / k;
    // Gauss–Legendre panels of one wavelength in r, each with the requested
    // point count; the angular factor integrates to one for unit harmonics
    // and is sampled on a uniform ring in 2D
    let (gx, gw) = gauss_legendre(points_per_wavelength);
    let energy = |r0: f64, r1: f64| -> Result<f64> {
        if r1 <= r0 {
            return Ok(0.0);
        }
        let panels = ((r1 - r0) / wavelength).ceil().max(1.0) as usize;
        let dr = (r1 - r0) / panels as f64;
        let n_ang = if h.dim == 2 {
            (points_per_wavelength as f64 * k * a).ceil().max(16.0) as usize
        } else {
            1
        };
        let mut total = 0.0;
        for p in 0..panels {
            let lo = r0 + p as f64 * dr;
            for (x, wt) in gx.iter().zip(&gw) {
                let r = lo + 0.5 * dr * (x + 1.0);
                let ring = if h.dim == 2 {
                    let pts: Vec<Point> = (0..n_ang)
                        .map(|j| {
                            let t = 2.0 * PI * j as f64 / n_ang as f64;
                            [r * t.cos(), r * t.sin(), 0.0]
                        })
                        .collect();
                    let vals = mode.eval(&pts)?;
                    vals.iter().map(|s| s.u.norm_sqr()).sum::<f64>() * (2.0 * PI / n_ang as f64) * r
                } else {
                    let (f, _) = radial_ratio(3, h.index.order, k * r, k * a);
                    h.s_q.norm_sqr() * f * f / (a * a) * r * r
                };
                total += 0.5 * dr * wt * ring;
            }
        }
        Ok(total)
    };
    let total = energy(0.0, a)?;
    let collar = energy(a - w, a)?;
    Ok((collar / total).clamp(0.0, 1.0))
}

/// Sweep configuration for [`concentration_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub q: f64,
    pub epsilon: f64,
    pub kappas: Vec<f64>,
    pub weight: SurfaceWeight,
    /// Interior targets `Γ_R`, as fractions `R/ρ₀`.
    pub offsets: Vec<f64>,
    /// Collar width in units of `ρ₀`; no collar energies when absent.
    pub collar_width: Option<f64>,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            q: 2.0,
            epsilon: crate::spectral::DEFAULT_EPSILON,
            kappas: vec![15.0, 20.0, 30.0, 40.0, 60.0],
            weight: SurfaceWeight::One,
            offsets: vec![0.2, 0.4, 0.6],
            collar_width: Some(0.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    /// `R/ρ₀`; zero on `∂D`.
    pub offset: f64,
    pub zeta: Zeta,
    pub order: u8,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRecord {
    pub kappa: f64,
    pub multiplicity: usize,
    /// Empty when the window is empty.
    pub functionals: Vec<FunctionalValue>,
    /// Mean collar share of the window's `u` fields.
    pub collar_fraction: Option<f64>,
    pub calibration_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub offset: f64,
    pub zeta: Zeta,
    pub order: u8,
    pub fit: Option<ScalingFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub config: ConcentrationConfig,
    pub dim: usize,
    pub rho0: f64,
    pub records: Vec<KappaRecord>,
    pub slopes: Vec<SlopeRecord>,
    pub weyl_fit: Option<ScalingFit>,
}

/// One flat CSV row per `(κ, target, ζ, order)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub kappa: f64,
    pub target: String,
    pub offset: f64,
    pub zeta: Zeta,
    pub order: u8,
    pub multiplicity: usize,
    pub value: f64,
}

fn target_name(offset: f64) -> String {
    if offset == 0.0 {
        "boundary".into()
    } else {
        "interior".into()
    }
}

impl ConcentrationReport {
    pub fn rows(&self) -> Vec<ConcentrationRow> {
        self.records
            .iter()
            .flat_map(|r| {
                r.functionals.iter().map(move |f| ConcentrationRow {
                    kappa: r.kappa,
                    target: target_name(f.offset),
                    offset: f.offset,
                    zeta: f.zeta,
                    order: f.order,
                    multiplicity: r.multiplicity,
                    value: f.value,
                })
            })
            .collect()
    }

    pub fn slope(&self, offset: f64, zeta: Zeta, order: u8) -> Option<&ScalingFit> {
        self.slopes
            .iter()
            .find(|s| s.offset == offset && s.zeta == zeta && s.order == order)
            .and_then(|s| s.fit.as_ref())
    }

    pub fn value(&self, kappa: f64, offset: f64, zeta: Zeta, order: u8) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.kappa == kappa)?
            .functionals
            .iter()
            .find(|f| f.offset == offset && f.zeta == zeta && f.order == order)
            .map(|f| f.value)
    }
}

/// Window, functionals on `∂D` and on each `Γ_R`, and collar energies per
/// `κ`, with log-log slopes over the sweep.
pub fn concentration_sweep(
    surface: &BoundarySurface,
    config: &ConcentrationConfig,
    opts: &SystemOptions,
) -> Result<ConcentrationReport> {
    check_sweep(&config.kappas)?;
    let rho0 = surface.distance_to_origin();
    let interiors = config
        .offsets
        .iter()
        .map(|f| offset_surface(surface, f * rho0))
        .collect::<Result<Vec<_>>>()?;
    let mut targets: Vec<(f64, Target<'_>)> = vec![(0.0, Target::Boundary(surface))];
    targets.extend(config.offsets.iter().zip(&interiors).map(|(f, s)| (*f, Target::Interior(s))));
    let records = map_slice(opts.exec, &config.kappas, |&kappa| -> Result<KappaRecord> {
        let sys = TransmissionSystem::build(surface, kappa, config.q, opts)?;
        let set = eig_window(&sys, config.epsilon)?;
        let m = set.multiplicity();
        if m == 0 {
            log::warn!("empty window at κ = {kappa}");
            return Ok(KappaRecord {
                kappa,
                multiplicity: 0,
                functionals: Vec::new(),
                collar_fraction: None,
                calibration_residual: sys.calibration.residual,
            });
        }
        let modes = window_modes(&sys, &set)?;
        let mut functionals = Vec::new();
        for (offset, target) in &targets {
            for zeta in [Zeta::U, Zeta::V] {
                for order in [0u8, 1] {
                    functionals.push(FunctionalValue {
                        offset: *offset,
                        zeta,
                        order,
                        value: concentration_functional(&modes, *target, &config.weight, zeta, order)?,
                    });
                }
            }
        }
        let collar_fraction = match config.collar_width {
            Some(w) if modes[0].harmonic().is_some() => {
                let mut s = 0.0;
                for mode in &modes {
                    s += collar_energy(mode, w * rho0)?;
                }
                Some(s / modes.len() as f64)
            }
            _ => None,
        };
        Ok(KappaRecord {
            kappa,
            multiplicity: m,
            functionals,
            collar_fraction,
            calibration_residual: sys.calibration.residual,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut slopes = Vec::new();
    for (offset, _) in &targets {
        for zeta in [Zeta::U, Zeta::V] {
            for order in [0u8, 1] {
                let (ks, vs): (Vec<f64>, Vec<f64>) = records
                    .iter()
                    .filter_map(|r| {
                        r.functionals
                            .iter()
                            .find(|f| f.offset == *offset && f.zeta == zeta && f.order == order)
                            .map(|f| (r.kappa, f.value))
                    })
                    .unzip();
                let fit = if ks.len() >= 4 { scaling_fit(&ks, &vs).ok() } else { None };
                slopes.push(SlopeRecord {
                    offset: *offset,
                    zeta,
                    order,
                    fit,
                });
            }
        }
    }
    let (ks, ms): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.multiplicity > 0)
        .map(|r| (r.kappa, r.multiplicity as f64))
        .unzip();
    let weyl_fit = if ks.len() >= 4 { Some(scaling_fit(&ks, &ms)?) } else { None };
    Ok(ConcentrationReport {
        config: config.clone(),
        dim: surface.dim(),
        rho0,
        records,
        slopes,
        weyl_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{bump, build_surface, Shape};
    use crate::spectral::{mode_fields, radial_surface, ModeSelector};

    fn harmonic_system(dim: usize, kappa: f64, q: f64) -> TransmissionSystem {
        let s = radial_surface(dim, 1.0, 16).unwrap();
        TransmissionSystem::build(&s, kappa, q, &SystemOptions::default()).unwrap()
    }

    #[test]
    fn scaling_fit_recovers_power() {
        let ks = [10.0, 20.0, 40.0, 80.0];
        let vs: Vec<f64> = ks.iter().map(|k: &f64| 3.0 * k.powf(-2.0)).collect();
        let f = scaling_fit(&ks, &vs).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
        let c = scaling_fit(&ks, &[1.0; 4]).unwrap();
        assert!(c.slope.abs() < 1e-12);
        assert!(scaling_fit(&ks[..3], &vs[..3]).is_err());
        assert!(scaling_fit(&ks, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn power_fit_with_correction() {
        let xi: Vec<f64> = (0..20).map(|i| 6.0 + 0.5 * i as f64).collect();
        let y: Vec<f64> = xi.iter().map(|x| 0.5 * x.powf(-1.3) * (1.0 + 0.7 / (x * x))).collect();
        let f = corrected_power_fit(&xi, &y).unwrap();
        assert!((f.exponent + 1.3).abs() < 1e-6, "{f:?}");
        assert!((f.constant - 0.5).abs() < 1e-5);
    }

    #[test]
    fn block_formula_matches_quadrature() {
        let sys = harmonic_system(2, 7.0, 2.0);
        let n = 5;
        let modes: Vec<TransmissionMode> = harmonics::circle_components(n)
            .into_iter()
            .map(|i| mode_fields(&sys, &ModeSelector::Harmonic(i), None).unwrap())
            .collect();
        let s = radial_surface(2, 1.0, 128).unwrap();
        let inner = offset_surface(&s, 0.3).unwrap();
        let w = SurfaceWeight::Bump(bump(&[1.0, 0.3], 1.0).unwrap());
        for target in [Target::Boundary(&s), Target::Interior(&inner)] {
            for zeta in [Zeta::U, Zeta::V] {
                for order in [0, 1] {
                    let block = concentration_functional(&modes, target, &w, zeta, order).unwrap();
                    let direct: f64 = modes
                        .iter()
                        .map(|m| mode_integral(m, target, &w, zeta, order).unwrap())
                        .sum::<f64>()
                        / 2.0;
                    assert!((block - direct).abs() < 1e-10 * direct.abs().max(1e-30), "{block} {direct}");
                }
            }
        }
    }

    #[test]
    fn sphere_block_formula_matches_quadrature() {
        let sys = harmonic_system(3, 4.0, 1.5);
        let l = 3;
        let modes: Vec<TransmissionMode> = harmonics::sphere_components(l)
            .into_iter()
            .map(|i| mode_fields(&sys, &ModeSelector::Harmonic(i), None).unwrap())
            .collect();
        let s = radial_surface(3, 1.0, 24).unwrap();
        let inner = offset_surface(&s, 0.4).unwrap();
        for target in [Target::Boundary(&s), Target::Interior(&inner)] {
            for order in [0, 1] {
                let block = concentration_functional(&modes, target, &SurfaceWeight::One, Zeta::U, order).unwrap();
                let direct: f64 = modes
                    .iter()
                    .map(|m| mode_integral(m, target, &SurfaceWeight::One, Zeta::U, order).unwrap())
                    .sum::<f64>()
                    / modes.len() as f64;
                assert!((block - direct).abs() < 1e-7 * direct, "{order}: {block} {direct}");
            }
        }
    }

    #[test]
    fn single_mode_on_boundary_is_unit_trace() {
        let sys = harmonic_system(2, 6.0, 2.0);
        let idx = HarmonicIndex { order: 4, component: -1 };
        let m = mode_fields(&sys, &ModeSelector::Harmonic(idx), None).unwrap();
        let s = radial_surface(2, 1.0, 64).unwrap();
        let v = concentration_functional(std::slice::from_ref(&m), Target::Boundary(&s), &SurfaceWeight::One, Zeta::U, 0)
            .unwrap();
        assert!((v - m.harmonic().unwrap().s_q.norm_sqr()).abs() < 1e-12 * v);
        assert_eq!(
            concentration_functional(&[], Target::Boundary(&s), &SurfaceWeight::One, Zeta::U, 0),
            Err(Error::EmptyWindow)
        );
    }

    #[test]
    fn dense_boundary_fields_on_circle() {
        // dense and harmonic descriptions of the same mode give the same
        // boundary integrals
        let s = build_surface(&Shape::Circle { radius: 1.0 }, 96).unwrap();
        let opts = SystemOptions {
            path: crate::spectral::Path::Dense,
            ..Default::default()
        };
        let dense = TransmissionSystem::build(&s, 5.0, 2.0, &opts).unwrap();
        let harm = harmonic_system(2, 5.0, 2.0);
        let idx = HarmonicIndex { order: 3, component: 1 };
        let phi = crate::spectral::harmonic_density(&s, idx).unwrap();
        let md = mode_fields(&dense, &ModeSelector::Nodal(phi), None).unwrap();
        let mh = mode_fields(&harm, &ModeSelector::Harmonic(idx), None).unwrap();
        for order in [0, 1] {
            let a = mode_integral(&md, Target::Boundary(&s), &SurfaceWeight::One, Zeta::U, order).unwrap();
            let b = mode_integral(&mh, Target::Boundary(&s), &SurfaceWeight::One, Zeta::U, order).unwrap();
            assert!((a - b).abs() < 1e-8 * b, "{order}: {a} {b}");
        }
    }

    #[test]
    fn angular_integrals_sum_to_block_constant() {
        let w = SurfaceWeight::Bump(bump(&[0.2, 0.5, 1.0], 0.8).unwrap());
        let l = 6;
        let vals = angular_weight_integrals(3, &w, &harmonics::sphere_components(l));
        let mean = angular_mean(3, &w);
        let sum: f64 = vals.iter().sum();
        assert!((sum - (2 * l + 1) as f64 * mean).abs() < 1e-10, "{sum} {}", (2 * l + 1) as f64 * mean);
        let wc = SurfaceWeight::Bump(bump(&[1.0, 1.0], 0.7).unwrap());
        let vals = angular_weight_integrals(2, &wc, &harmonics::circle_components(9));
        assert!((vals[0] + vals[1] - 2.0 * angular_mean(2, &wc)).abs() < 1e-12);
    }

    #[test]
    fn unit_symbol_trace_is_the_count() {
        let s = radial_surface(2, 1.0, 16).unwrap();
        let opts = SystemOptions::default();
        let g = generalized_weyl_test(&s, 2.0, 0.1, &[10.0, 15.0], &Symbol::default(), &opts).unwrap();
        for p in &g.points {
            assert_eq!(p.value, phase_space_factor(2, p.kappa) * p.multiplicity as f64);
        }
        let sampled = Symbol::Sampled { samples: vec![] };
        assert!(matches!(
            generalized_weyl_test(&s, 2.0, 0.1, &[10.0], &sampled, &opts),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn variance_of_invariant_symbol_vanishes() {
        let sys = harmonic_system(2, 20.0, 2.0);
        let set = eig_window(&sys, 0.1).unwrap();
        let modes = window_modes(&sys, &set).unwrap();
        let v = quantum_variance(&modes, &Symbol::default()).unwrap();
        assert_eq!(v, 0.0);
        let w = SurfaceWeight::Bump(bump(&[1.0, 0.0], PI / 4.0).unwrap());
        let sym = Symbol::Separable {
            weight: w.clone(),
            multiplier: Multiplier::One,
        };
        let v = quantum_variance(&modes, &sym).unwrap();
        let mean = angular_mean(2, &w);
        // |Y|² ≤ 1/π so the matrix elements stay within [−ā, 2/(2π)·max − ā]
        assert!(v <= (1.0f64 - mean).max(mean).powi(2));
    }

    #[test]
    fn collar_energy_agrees_with_grid() {
        let sys = harmonic_system(2, 9.0, 2.0);
        let m = mode_fields(&sys, &ModeSelector::Harmonic(HarmonicIndex { order: 12, component: 1 }), None).unwrap();
        let a = collar_energy(&m, 0.2).unwrap();
        let b = collar_energy_on_grid(&m, 0.2, 12).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
        assert_eq!(collar_energy(&m, 0.0).unwrap(), 0.0);
        assert_eq!(collar_energy(&m, 2.0).unwrap(), 1.0);
        assert!(matches!(collar_energy_on_grid(&m, 0.2, 4), Err(Error::Resolution(_))));
        let sys3 = harmonic_system(3, 5.0, 2.0);
        let m3 = mode_fields(&sys3, &ModeSelector::Harmonic(HarmonicIndex { order: 7, component: -2 }), None).unwrap();
        let a = collar_energy(&m3, 0.3).unwrap();
        let b = collar_energy_on_grid(&m3, 0.3, 12).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn symbol_check_needs_range() {
        let opts = SymbolOptions {
            xi_max: 5.0,
            ..Default::default()
        };
        assert!(matches!(symbol_check(2, 1.0, 20.0, 2.0, &opts), Err(Error::Capability(_))));
    }
}
