use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tevp_core::geometry::{build_surface, BoundarySurface, Shape, SurfaceWeight};
use tevp_core::spectral::{Path as SystemPath, DEFAULT_PERTURBATION};

use crate::error::ConfigError;

/// Wavenumbers of a sweep: an explicit list or `count` equispaced values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaSweep {
    List(Vec<f64>),
    Range { min: f64, max: f64, count: usize },
}

impl KappaSweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            KappaSweep::List(v) => v.clone(),
            KappaSweep::Range { min, max, count } => match count {
                0 => Vec::new(),
                1 => vec![*min],
                n => (0..*n)
                    .map(|i| min + (max - min) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    /// Angular half-width in radians.
    pub width: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_max_modes() -> usize {
    4
}

fn default_rings() -> usize {
    24
}

fn default_max_order() -> usize {
    30
}

fn default_symbol_q() -> Vec<f64> {
    vec![2.0, 3.0]
}

fn default_ladder() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_far_points() -> usize {
    256
}

fn default_cond_limit() -> f64 {
    tevp_core::layerpot::DEFAULT_COND_LIMIT
}

fn default_perturbation() -> f64 {
    DEFAULT_PERTURBATION
}

/// Options that only some commands read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandOptions {
    /// Search interval for `eigs`, `scatter` and `oracle`; the sweep's span
    /// when absent.
    #[serde(default)]
    pub eig_range: Option<[f64; 2]>,
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
    /// Concentric rings of the field grid written by `modes`.
    #[serde(default = "default_rings")]
    pub rings: usize,
    /// Highest angular order scanned by the radial oracle.
    #[serde(default = "default_max_order")]
    pub oracle_max_order: usize,
    #[serde(default = "default_symbol_q")]
    pub symbol_q: Vec<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<f64>,
    #[serde(default)]
    pub control_kappa: Option<f64>,
    /// Angular order of the mode used by `scatter` on circles.
    #[serde(default)]
    pub scatter_order: Option<usize>,
    #[serde(default = "default_far_points")]
    pub far_field_points: usize,
    /// Collar width as a fraction of the inradius.
    #[serde(default)]
    pub collar_width: Option<f64>,
    #[serde(default)]
    pub path: SystemPath,
    #[serde(default = "default_cond_limit")]
    pub cond_limit: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

impl Default for CommandOptions {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shape: Shape,
    /// Optional consistency check against the shape.
    #[serde(default)]
    pub dim: Option<usize>,
    pub q: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub kappa: KappaSweep,
    /// Nodes on curves, harmonic degree on spheres.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Interior offsets `R/ρ₀`.
    #[serde(default)]
    pub interior: Vec<f64>,
    #[serde(default)]
    pub bump: Option<BumpSpec>,
    #[serde(default)]
    pub options: CommandOptions,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Nodes per unit `κ·diam` required on curves.
pub const NODES_PER_KAPPA_DIAMETER: f64 = 8.0;

/// Smallest harmonic degree accepted for spheres.
pub const MIN_SPHERE_DEGREE: usize = 16;

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| err("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.kappa.values()
    }

    pub fn kappa_max(&self) -> f64 {
        let mut k = self.kappas().into_iter().fold(0.0, f64::max);
        if let Some([_, hi]) = self.options.eig_range {
            k = k.max(hi);
        }
        if let Some(c) = self.options.control_kappa {
            k = k.max(c);
        }
        k
    }

    /// Interval searched by `eigs`, `scatter` and `oracle`.
    pub fn eig_range(&self) -> (f64, f64) {
        match self.options.eig_range {
            Some([lo, hi]) => (lo, hi),
            None => {
                let k = self.kappas();
                let lo = k.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = k.iter().cloned().fold(0.0, f64::max);
                (lo, hi)
            }
        }
    }

    fn diameter(&self) -> f64 {
        // a coarse surface is enough for the diameter
        build_surface(&self.shape, if self.shape.dim() == 2 { 256 } else { 16 })
            .map(|s| s.diameter())
            .unwrap_or(f64::NAN)
    }

    pub fn min_resolution(&self) -> usize {
        if self.shape.dim() == 2 {
            let n = (NODES_PER_KAPPA_DIAMETER * self.kappa_max() * self.diameter()).ceil() as usize;
            (n + n % 2).max(16)
        } else {
            MIN_SPHERE_DEGREE
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or_else(|| self.min_resolution())
    }

    pub fn surface(&self) -> Result<BoundarySurface, ConfigError> {
        build_surface(&self.shape, self.resolution()).map_err(|e| err("shape", e.to_string()))
    }

    pub fn weight(&self) -> Result<SurfaceWeight, ConfigError> {
        match &self.bump {
            None => Ok(SurfaceWeight::One),
            Some(b) => tevp_core::geometry::bump(&b.center, b.width)
                .map(SurfaceWeight::Bump)
                .map_err(|e| err("bump", e.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.shape.validate().map_err(|e| err("shape", e.to_string()))?;
        if let Some(d) = self.dim {
            if d != self.shape.dim() {
                return Err(err("dim", format!("{d} does not match the {}-dimensional shape", self.shape.dim())));
            }
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(err("q", format!("must be positive, got {}", self.q)));
        }
        if self.q == 1.0 {
            return Err(err("q", "Q = 1 has no contrast"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(err("epsilon", format!("must lie in (0, 0.5], got {}", self.epsilon)));
        }
        let ks = self.kappas();
        if ks.is_empty() {
            return Err(err("kappa", "empty sweep"));
        }
        if let KappaSweep::Range { min, max, .. } = self.kappa {
            if !(max >= min) {
                return Err(err("kappa", format!("max {max} below min {min}")));
            }
        }
        if let Some(k) = ks.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return Err(err("kappa", format!("wavenumbers must be positive, got {k}")));
        }
        if let Some([lo, hi]) = self.options.eig_range {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(err("options.eig_range", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
            }
        }
        if let Some(k) = self.options.control_kappa {
            if !(k > 0.0) {
                return Err(err("options.control_kappa", format!("must be positive, got {k}")));
            }
        }
        if let Some(f) = self.interior.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(err("interior", format!("offsets are fractions of the inradius in (0, 1), got {f}")));
        }
        if let Some(w) = self.options.collar_width {
            if !(w > 0.0 && w < 1.0) {
                return Err(err("options.collar_width", format!("must lie in (0, 1), got {w}")));
            }
        }
        if self.options.ladder.iter().any(|l| !(*l >= 0.0)) {
            return Err(err("options.ladder", "regularizations must be nonnegative"));
        }
        if self.options.symbol_q.iter().any(|q| !(*q > 0.0) || *q == 1.0) {
            return Err(err("options.symbol_q", "each Q must be positive and differ from 1"));
        }
        if self.options.rings == 0 {
            return Err(err("options.rings", "need at least one ring"));
        }
        if let Some(n) = self.resolution {
            let min = self.min_resolution();
            if n < min {
                let rule = if self.shape.dim() == 2 {
                    format!("curves need N ≥ 8·κ·diam = {min}")
                } else {
                    format!("spheres need degree ≥ {min}")
                };
                return Err(err("resolution", format!("{n} is too coarse; {rule}")));
            }
            if self.shape.dim() == 2 && n % 2 == 1 {
                return Err(err("resolution", format!("curve node count must be even, got {n}")));
            }
        }
        if let Some(b) = &self.bump {
            if b.center.len() != self.shape.dim() {
                return Err(err("bump.center", format!("needs {} coordinates", self.shape.dim())));
            }
            self.weight()?;
        }
        if self.workers == Some(0) {
            return Err(err("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, without the output directory and
    /// worker count (neither affects results).
    pub fn checksum(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "shape": {"type": "circle", "radius": 1.0},
            "q": 2.0,
            "kappa": [5.0, 6.0]
        })
    }

    fn parse(v: serde_json::Value) -> Result<RunConfig, ConfigError> {
        RunConfig::from_json(&v.to_string())
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(base()).unwrap();
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.options.ladder, vec![1e-2, 1e-3, 1e-4]);
        assert_eq!(c.resolution(), 96);
    }

    #[test]
    fn field_level_messages() {
        let cases = [
            ("q", serde_json::json!(1.0)),
            ("q", serde_json::json!(-2.0)),
            ("epsilon", serde_json::json!(0.7)),
            ("kappa", serde_json::json!([0.0, 3.0])),
            ("resolution", serde_json::json!(32)),
            ("dim", serde_json::json!(3)),
        ];
        for (field, value) in cases {
            let mut v = base();
            v[field] = value;
            let e = parse(v).unwrap_err();
            assert_eq!(e.field, field);
        }
        let mut v = base();
        v["colour"] = serde_json::json!(1);
        assert_eq!(parse(v).unwrap_err().field, "config");
    }

    #[test]
    fn range_sweep_is_inclusive() {
        let s = KappaSweep::Range { min: 2.0, max: 4.0, count: 3 };
        assert_eq!(s.values(), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn checksum_ignores_output_location() {
        let a = parse(base()).unwrap();
        let mut b = a.clone();
        b.out = Some("/tmp/x".into());
        b.workers = Some(3);
        assert_eq!(a.checksum(), b.checksum());
        b.q = 3.0;
        assert_ne!(a.checksum(), b.checksum());
    }
}
