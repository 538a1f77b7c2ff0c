//! Smooth closed boundaries, their quadrature, interior offset surfaces and
//! bump weights.
//!
//! Curves are sampled at equispaced parameter values (the trapezoid rule is
//! spectrally accurate for smooth periodic integrands). Spheres and ellipsoids
//! use Gauss–Legendre nodes in `cos θ` times a uniform longitude grid, which
//! integrates products of spherical harmonics of degree `≤ L` exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre, golden_section_min};

pub mod harmonics;

pub type Point = [f64; 3];

/// Declared shape of `∂D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `x(t) = (cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`.
    Kite,
    /// Truncated trigonometric curve; entry `k` of each list multiplies
    /// `cos kt` or `sin kt`.
    Trig {
        x_cos: Vec<f64>,
        x_sin: Vec<f64>,
        y_cos: Vec<f64>,
        y_sin: Vec<f64>,
    },
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Sphere { .. } | Shape::Ellipsoid { .. } => 3,
            _ => 2,
        }
    }

    /// Radius when the shape is a circle or a sphere.
    pub fn radial_radius(&self) -> Option<f64> {
        match *self {
            Shape::Circle { radius } | Shape::Sphere { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Shape::Circle { radius } | Shape::Sphere { radius } => positive(*radius, "radius"),
            Shape::Ellipse { a, b } => positive(*a, "a").and(positive(*b, "b")),
            Shape::Ellipsoid { a, b, c } => positive(*a, "a")
                .and(positive(*b, "b"))
                .and(positive(*c, "c")),
            Shape::Kite => Ok(()),
            Shape::Trig { .. } => {
                let curve = self.trig_curve().expect("trig shape");
                if curve.is_degenerate() {
                    Err(Error::Geometry("trigonometric curve has no nonconstant term".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The trigonometric parametrization of a planar shape.
    pub fn trig_curve(&self) -> Option<TrigCurve> {
        match self {
            Shape::Circle { radius } => Some(TrigCurve {
                x_cos: vec![0.0, *radius],
                x_sin: vec![],
                y_cos: vec![],
                y_sin: vec![0.0, *radius],
            }),
            Shape::Ellipse { a, b } => Some(TrigCurve {
                x_cos: vec![0.0, *a],
                x_sin: vec![],
                y_cos: vec![],
                y_sin: vec![0.0, *b],
            }),
            Shape::Kite => Some(TrigCurve {
                x_cos: vec![-0.65, 1.0, 0.65],
                x_sin: vec![],
                y_cos: vec![],
                y_sin: vec![0.0, 1.5],
            }),
            Shape::Trig {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => Some(TrigCurve {
                x_cos: x_cos.clone(),
                x_sin: x_sin.clone(),
                y_cos: y_cos.clone(),
                y_sin: y_sin.clone(),
            }),
            _ => None,
        }
    }
}

/// `x(t) = Σ_k (a_k cos kt + b_k sin kt)`, likewise for `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigCurve {
    pub x_cos: Vec<f64>,
    pub x_sin: Vec<f64>,
    pub y_cos: Vec<f64>,
    pub y_sin: Vec<f64>,
}

fn trig_eval(cos_c: &[f64], sin_c: &[f64], t: f64, deriv: u32) -> f64 {
    let mut acc = 0.0;
    for (k, &a) in cos_c.iter().enumerate() {
        let kf = k as f64;
        let (s, c) = (kf * t).sin_cos();
        acc += a * match deriv % 4 {
            0 => c,
            1 => -kf * s,
            2 => -kf * kf * c,
            _ => kf * kf * kf * s,
        };
    }
    for (k, &b) in sin_c.iter().enumerate() {
        let kf = k as f64;
        let (s, c) = (kf * t).sin_cos();
        acc += b * match deriv % 4 {
            0 => s,
            1 => kf * c,
            2 => -kf * kf * s,
            _ => -kf * kf * kf * c,
        };
    }
    acc
}

impl TrigCurve {
    pub fn point(&self, t: f64) -> [f64; 2] {
        [
            trig_eval(&self.x_cos, &self.x_sin, t, 0),
            trig_eval(&self.y_cos, &self.y_sin, t, 0),
        ]
    }

    pub fn d1(&self, t: f64) -> [f64; 2] {
        [
            trig_eval(&self.x_cos, &self.x_sin, t, 1),
            trig_eval(&self.y_cos, &self.y_sin, t, 1),
        ]
    }

    pub fn d2(&self, t: f64) -> [f64; 2] {
        [
            trig_eval(&self.x_cos, &self.x_sin, t, 2),
            trig_eval(&self.y_cos, &self.y_sin, t, 2),
        ]
    }

    fn is_degenerate(&self) -> bool {
        let nonconst = |v: &[f64]| v.iter().skip(1).any(|c| *c != 0.0);
        !(nonconst(&self.x_cos) || nonconst(&self.x_sin))
            || !(nonconst(&self.y_cos) || nonconst(&self.y_sin))
    }
}

/// Parametric data behind the nodes.
#[derive(Clone, Debug)]
pub enum Grid {
    Curve {
        curve: TrigCurve,
        /// Parameter values `t_i = 2πi/N`.
        t: Vec<f64>,
        /// `x'(t_i)`.
        tangent: Vec<[f64; 2]>,
        /// `x''(t_i)`.
        second: Vec<[f64; 2]>,
        /// `|x'(t_i)|`.
        speed: Vec<f64>,
    },
    /// Gauss–Legendre in `cos θ` times `n_phi` uniform longitudes; node
    /// `i·n_phi + j` sits at colatitude `theta[i]` and longitude `2πj/n_phi`.
    Spherical {
        degree: usize,
        theta: Vec<f64>,
        gl_weights: Vec<f64>,
        n_phi: usize,
    },
}

/// Discretized `∂D`, immutable after construction.
#[derive(Clone, Debug)]
pub struct BoundarySurface {
    shape: Shape,
    /// Uniform scale applied to the declared shape; 1 for `∂D` itself and
    /// `1 − R/ρ₀` for an offset surface.
    scale: f64,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub weights: Vec<f64>,
    /// Mean curvature (average of the principal curvatures), positive for
    /// convex shapes.
    pub curvature: Vec<f64>,
    pub grid: Grid,
}

pub fn build_surface(shape: &Shape, resolution: usize) -> Result<BoundarySurface> {
    shape.validate()?;
    match shape.dim() {
        2 => build_curve(shape, resolution),
        _ => build_spherical(shape, resolution),
    }
}

fn build_curve(shape: &Shape, n: usize) -> Result<BoundarySurface> {
    if n < 16 {
        return Err(Error::Resolution(format!("curves need at least 16 nodes, got {n}")));
    }
    if n % 2 != 0 {
        return Err(Error::Resolution(format!(
            "curve node count must be even for the periodic log quadrature, got {n}"
        )));
    }
    let curve = shape.trig_curve().expect("planar shape");
    let h = 2.0 * PI / n as f64;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut nodes = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut tangent = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    for &ti in &t {
        let p = curve.point(ti);
        let d1 = curve.d1(ti);
        let d2 = curve.d2(ti);
        let s = d1[0].hypot(d1[1]);
        if !(s > 0.0) {
            return Err(Error::Geometry(format!("parametrization is singular at t = {ti}")));
        }
        nodes.push([p[0], p[1], 0.0]);
        normals.push([d1[1] / s, -d1[0] / s, 0.0]);
        weights.push(s * h);
        curvature.push((d1[0] * d2[1] - d1[1] * d2[0]) / (s * s * s));
        tangent.push(d1);
        second.push(d2);
        speed.push(s);
    }
    let signed_area: f64 = (0..n)
        .map(|i| 0.5 * (nodes[i][0] * tangent[i][1] - nodes[i][1] * tangent[i][0]) * h)
        .sum();
    if signed_area <= 0.0 {
        return Err(Error::Geometry(
            "curve must be traversed counterclockwise (outward normals)".into(),
        ));
    }
    check_simple(&curve, n)?;
    Ok(BoundarySurface {
        shape: shape.clone(),
        scale: 1.0,
        nodes,
        normals,
        weights,
        curvature,
        grid: Grid::Curve {
            curve,
            t,
            tangent,
            second,
            speed,
        },
    })
}

/// Sampled segment-intersection test on a refined polygon.
fn check_simple(curve: &TrigCurve, n: usize) -> Result<()> {
    let m = (4 * n).max(64);
    let pts: Vec<[f64; 2]> = (0..m)
        .map(|i| curve.point(2.0 * PI * i as f64 / m as f64))
        .collect();
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    for i in 0..m {
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        for j in (i + 2)..m {
            if (j + 1) % m == i {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % m]);
            let o1 = orient(a, b, c);
            let o2 = orient(a, b, d);
            let o3 = orient(c, d, a);
            let o4 = orient(c, d, b);
            if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                return Err(Error::Geometry(format!(
                    "parametrization self-intersects near t = {:.4} and t = {:.4}",
                    2.0 * PI * i as f64 / m as f64,
                    2.0 * PI * j as f64 / m as f64
                )));
            }
        }
    }
    Ok(())
}

fn ellipsoid_axes(shape: &Shape) -> [f64; 3] {
    match *shape {
        Shape::Sphere { radius } => [radius; 3],
        Shape::Ellipsoid { a, b, c } => [a, b, c],
        _ => unreachable!("not a closed surface in three dimensions"),
    }
}

fn build_spherical(shape: &Shape, degree: usize) -> Result<BoundarySurface> {
    if degree < 8 {
        return Err(Error::Resolution(format!(
            "spherical grids need degree at least 8, got {degree}"
        )));
    }
    let [a, b, c] = ellipsoid_axes(shape);
    let n_theta = degree + 1;
    let n_phi = 2 * degree + 2;
    let (x, w) = gauss_legendre(n_theta);
    // colatitudes from the north pole down
    let theta: Vec<f64> = x.iter().rev().map(|v| v.acos()).collect();
    let gl_weights: Vec<f64> = w.iter().rev().copied().collect();
    let dphi = 2.0 * PI / n_phi as f64;
    let n = n_theta * n_phi;
    let mut nodes = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    for (i, &th) in theta.iter().enumerate() {
        let (st, ct) = th.sin_cos();
        for j in 0..n_phi {
            let ph = j as f64 * dphi;
            let (sp, cp) = ph.sin_cos();
            let p = [a * st * cp, b * st * sp, c * ct];
            // |x_θ × x_φ| / sin θ, the area element per d(cos θ) dφ
            let g = [p[0] / (a * a), p[1] / (b * b), p[2] / (c * c)];
            let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let area_el = a * b * c * gn;
            nodes.push(p);
            normals.push([g[0] / gn, g[1] / gn, g[2] / gn]);
            weights.push(gl_weights[i] * dphi * area_el);
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            let q = p[0] * p[0] / a.powi(4) + p[1] * p[1] / b.powi(4) + p[2] * p[2] / c.powi(4);
            curvature.push((a * a + b * b + c * c - r2) / (2.0 * (a * b * c).powi(2) * q.powf(1.5)));
        }
    }
    Ok(BoundarySurface {
        shape: shape.clone(),
        scale: 1.0,
        nodes,
        normals,
        weights,
        curvature,
        grid: Grid::Spherical {
            degree,
            theta,
            gl_weights,
            n_phi,
        },
    })
}

impl BoundarySurface {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Scale relative to the declared shape.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Radius of the circle or sphere this surface discretizes, if any.
    pub fn radius(&self) -> Option<f64> {
        self.shape.radial_radius().map(|r| r * self.scale)
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.shape, Shape::Circle { .. })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.shape, Shape::Sphere { .. })
    }

    /// Circles and spheres: every boundary operator is diagonal in the
    /// angular harmonics.
    pub fn is_rotation_invariant(&self) -> bool {
        self.is_circle() || self.is_sphere()
    }

    /// Total length or area.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        surface_integral(self, values)
    }

    /// Largest distance between neighbouring nodes, a proxy for the local
    /// quadrature spacing.
    pub fn max_spacing(&self) -> f64 {
        match &self.grid {
            Grid::Curve { .. } => {
                let n = self.nodes.len();
                (0..n)
                    .map(|i| dist(&self.nodes[i], &self.nodes[(i + 1) % n]))
                    .fold(0.0, f64::max)
            }
            Grid::Spherical { theta, n_phi, .. } => {
                let r = self
                    .nodes
                    .iter()
                    .map(|p| norm(p))
                    .fold(0.0, f64::max);
                let dth = theta
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(theta[0], f64::max);
                r * dth.max(2.0 * PI / *n_phi as f64)
            }
        }
    }

    /// Largest distance between two nodes.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        let step = (self.nodes.len() / 512).max(1);
        for i in (0..self.nodes.len()).step_by(step) {
            for j in (0..self.nodes.len()).step_by(step) {
                d = d.max(dist(&self.nodes[i], &self.nodes[j]));
            }
        }
        d
    }

    /// `dist(∂D, 0)`, refined beyond the node sampling.
    pub fn distance_to_origin(&self) -> f64 {
        match (&self.shape, &self.grid) {
            (Shape::Sphere { radius }, _) => radius * self.scale,
            (Shape::Ellipsoid { a, b, c }, _) => a.min(*b).min(*c) * self.scale,
            (_, Grid::Curve { curve, t, .. }) => {
                let h = 2.0 * PI / t.len() as f64;
                let (imin, _) = self
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, norm(p)))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                let f = |s: f64| {
                    let p = curve.point(s);
                    p[0].hypot(p[1])
                };
                let (_, v) = golden_section_min(f, t[imin] - h, t[imin] + h, 1e-13);
                v * self.scale
            }
            _ => unreachable!(),
        }
    }

    /// Distance from `p` to the continuous surface: nearest node, then a
    /// local refinement in the parametrization.
    pub fn distance_to(&self, p: &Point) -> f64 {
        match (&self.shape, &self.grid) {
            (Shape::Sphere { radius }, _) => (norm(p) - radius * self.scale).abs(),
            (_, Grid::Curve { curve, t, .. }) => {
                let n = t.len();
                let h = 2.0 * PI / n as f64;
                let (imin, _) = self
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, q)| (i, dist(p, q)))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                let s = self.scale;
                let f = |u: f64| {
                    let q = curve.point(u);
                    (q[0] * s - p[0]).hypot(q[1] * s - p[1])
                };
                golden_section_min(f, t[imin] - h, t[imin] + h, 1e-13).1
            }
            (Shape::Ellipsoid { a, b, c }, Grid::Spherical { theta, n_phi, .. }) => {
                let (a, b, c) = (a * self.scale, b * self.scale, c * self.scale);
                let (imin, dmin) = self
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, q)| (i, dist(p, q)))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                let f = |th: f64, ph: f64| {
                    let (st, ct) = th.sin_cos();
                    let (sp, cp) = ph.sin_cos();
                    dist(p, &[a * st * cp, b * st * sp, c * ct])
                };
                let mut th = theta[imin / n_phi];
                let mut ph = 2.0 * PI * (imin % n_phi) as f64 / *n_phi as f64;
                let mut span = PI / theta.len() as f64;
                let mut best = dmin;
                for _ in 0..40 {
                    let (t1, v1) = golden_section_min(|u| f(u, ph), th - span, th + span, 1e-14);
                    th = t1;
                    let (p1, v2) = golden_section_min(|u| f(th, u), ph - 2.0 * span, ph + 2.0 * span, 1e-14);
                    ph = p1;
                    let v = v1.min(v2);
                    if (best - v).abs() < 1e-15 {
                        best = v;
                        break;
                    }
                    best = v;
                    span *= 0.7;
                }
                best
            }
            _ => unreachable!(),
        }
    }

    /// Star-shaped about the origin: the radial projection is one-to-one.
    pub fn is_star_shaped(&self) -> bool {
        match &self.grid {
            Grid::Curve { .. } => self
                .nodes
                .iter()
                .zip(&self.normals)
                .all(|(p, nu)| p[0] * nu[0] + p[1] * nu[1] > 0.0),
            Grid::Spherical { .. } => true,
        }
    }

    /// Uniformly scaled copy (nodes, weights and curvature adjusted).
    pub fn scaled(&self, s: f64) -> BoundarySurface {
        let d = self.dim() as i32;
        let mut out = self.clone();
        out.scale *= s;
        for p in &mut out.nodes {
            for v in p.iter_mut() {
                *v *= s;
            }
        }
        for w in &mut out.weights {
            *w *= s.powi(d - 1);
        }
        for k in &mut out.curvature {
            *k /= s;
        }
        if let Grid::Curve {
            tangent,
            second,
            speed,
            ..
        } = &mut out.grid
        {
            // the parametrization keeps the declared shape; `scale` applies on top
            for v in tangent.iter_mut().chain(second.iter_mut()) {
                v[0] *= s;
                v[1] *= s;
            }
            for v in speed.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Curve parameter data; `None` for spherical grids.
    pub fn curve_data(&self) -> Option<(&[f64], &[[f64; 2]], &[[f64; 2]], &[f64])> {
        match &self.grid {
            Grid::Curve {
                t,
                tangent,
                second,
                speed,
                ..
            } => Some((t, tangent, second, speed)),
            _ => None,
        }
    }
}

/// `Σ_i w_i v_i` with the surface's own weights.
pub fn surface_integral(surface: &BoundarySurface, values: &[f64]) -> f64 {
    assert_eq!(values.len(), surface.weights.len(), "one value per node");
    surface
        .weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

pub(crate) fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn dist(p: &Point, q: &Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// `Γ_R = F_R(∂D)` with `F_R(x) = (1 − R/ρ₀)x`, `ρ₀ = dist(∂D, 0)`.
#[derive(Clone, Debug)]
pub struct InteriorSurface {
    pub offset: f64,
    pub rho0: f64,
    /// `1 − R/ρ₀`.
    pub factor: f64,
    /// Surface Jacobian of `F_R` at each node, `factor^{d−1}`.
    pub jacobian: Vec<f64>,
    /// Smallest sampled distance from `Γ_R` to `∂D`.
    pub min_distance: f64,
    pub surface: BoundarySurface,
}

impl InteriorSurface {
    pub fn map(&self, x: &Point) -> Point {
        [x[0] * self.factor, x[1] * self.factor, x[2] * self.factor]
    }

    pub fn inverse_map(&self, x: &Point) -> Point {
        [x[0] / self.factor, x[1] / self.factor, x[2] / self.factor]
    }
}

pub fn offset_surface(parent: &BoundarySurface, offset: f64) -> Result<InteriorSurface> {
    if !parent.is_star_shaped() {
        return Err(Error::Capability(
            "offset surfaces are only built for boundaries star-shaped about the origin".into(),
        ));
    }
    let rho0 = parent.distance_to_origin();
    if !(offset > 0.0) || offset >= rho0 {
        return Err(Error::Domain(format!(
            "offset must lie in (0, {rho0}), got {offset}"
        )));
    }
    let factor = 1.0 - offset / rho0;
    let surface = parent.scaled(factor);
    let jacobian = vec![factor.powi(parent.dim() as i32 - 1); surface.len()];
    let min_distance = surface
        .nodes
        .iter()
        .map(|p| parent.distance_to(p))
        .fold(f64::INFINITY, f64::min);
    if min_distance < offset - 1e-8 {
        return Err(Error::Geometry(format!(
            "scaled surface comes within {min_distance:.3e} of the boundary, less than the offset {offset}"
        )));
    }
    Ok(InteriorSurface {
        offset,
        rho0,
        factor,
        jacobian,
        min_distance,
        surface,
    })
}

/// `γ(x) = ψ(α/w)` where `α` is the angle between `x` and `center` seen from
/// the origin and `ψ(t) = exp(1 − 1/(1 − t²))` on `|t| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: Point,
    pub width: f64,
}

pub fn bump(center: &[f64], width: f64) -> Result<BumpFunction> {
    if !(width > 0.0) || width > PI {
        return Err(Error::Domain(format!(
            "bump half-width must lie in (0, π], got {width}"
        )));
    }
    let mut c = [0.0; 3];
    for (slot, v) in c.iter_mut().zip(center) {
        *slot = *v;
    }
    let n = norm(&c);
    if !(n > 0.0) {
        return Err(Error::Domain("bump center must be a nonzero direction".into()));
    }
    Ok(BumpFunction {
        center: [c[0] / n, c[1] / n, c[2] / n],
        width,
    })
}

impl BumpFunction {
    pub fn angle(&self, x: &Point) -> f64 {
        let n = norm(x);
        if n == 0.0 {
            return 0.0;
        }
        let c = (x[0] * self.center[0] + x[1] * self.center[1] + x[2] * self.center[2]) / n;
        c.clamp(-1.0, 1.0).acos()
    }

    /// Profile value and its first two derivatives in the angle.
    pub fn profile(&self, alpha: f64) -> (f64, f64, f64) {
        let t = alpha / self.width;
        if t.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - t * t;
        let psi = (1.0 - 1.0 / q).exp();
        let g1 = -2.0 * t / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * t * t / (q * q * q);
        let w = self.width;
        (psi, psi * g1 / w, psi * (g1 * g1 + g2) / (w * w))
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.profile(self.angle(x)).0
    }
}

/// Spatial weight `γ` of the averaging functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceWeight {
    #[default]
    One,
    Bump(BumpFunction),
}

impl SurfaceWeight {
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            SurfaceWeight::One => 1.0,
            SurfaceWeight::Bump(b) => b.value(x),
        }
    }

    pub fn max_value(&self) -> f64 {
        1.0
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SurfaceWeight::One)
    }

    /// Surface Laplacian of `γ` on a circle or sphere of radius `radius`
    /// centred at the origin, evaluated at `x`.
    pub fn surface_laplacian(&self, x: &Point, dim: usize, radius: f64) -> f64 {
        match self {
            SurfaceWeight::One => 0.0,
            SurfaceWeight::Bump(b) => {
                let alpha = b.angle(x);
                let (_, d1, d2) = b.profile(alpha);
                let lap = if dim == 2 {
                    d2
                } else if alpha < 1e-8 {
                    2.0 * d2
                } else {
                    d2 + d1 * alpha.cos() / alpha.sin()
                };
                lap / (radius * radius)
            }
        }
    }
}
