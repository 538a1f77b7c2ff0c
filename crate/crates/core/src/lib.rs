//! Boundary-integral laboratory for the acoustic interior transmission problem.
//!
//! The crate discretizes the single-layer operator and the adjoint
//! Neumann–Poincaré operator on smooth closed curves and on spheres, builds
//! the transmission operators `T`, `B` and `A` for a contrast `Q`, and
//! extracts exact and ε-almost transmission eigenpairs. Analytic radial
//! solutions on disks and balls ([`oracle`]) are the ground truth for
//! everything else.
//!
//! Sign convention: the outgoing fundamental solution is `e^{iκr}/(4πr)` in
//! three dimensions and `(i/4)H₀⁽¹⁾(κr)` in two, so the interior normal trace
//! of a single-layer potential is `(½I + K*)φ` and the exterior one is
//! `(−½I + K*)φ`.

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod layerpot;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod scatter;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};
