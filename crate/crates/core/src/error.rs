use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("result not representable in double precision: {0}")]
    Range(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("target {index} lies {distance:.3e} from the surface, below the minimum {r_min:.3e}")]
    Proximity {
        index: usize,
        distance: f64,
        r_min: f64,
    },

    /// `S^κ` is numerically singular; `kappa` is usually close to an interior
    /// Dirichlet eigenvalue.
    #[error("single-layer operator near-singular at kappa = {kappa} (condition estimate {cond:.3e})")]
    NearSingular { kappa: f64, cond: f64 },

    #[error("calibration residual {residual:.3e} exceeds {limit:.3e}")]
    Calibration { residual: f64, limit: f64 },

    #[error("average over an empty eigenvalue window is undefined")]
    EmptyWindow,

    #[error("fit error: {0}")]
    Fit(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
