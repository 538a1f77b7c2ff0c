//! Bessel-family functions and the Helmholtz fundamental solution in two and
//! three dimensions.

mod bessel;
mod green;
mod scaled;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bessel::{hankel_asymptotic, j01_y01, WaveTable, EULER_GAMMA};
pub use green::{green, green_grad, green_hankel_form};
pub use scaled::Scaled;

/// Largest order accepted by [`eval_wave`] unless a different limit is given.
pub const DEFAULT_MAX_ORDER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveKind {
    BesselJ,
    BesselY,
    Hankel1,
    SphericalJ,
    SphericalY,
    SphericalH1,
}

impl WaveKind {
    pub fn is_spherical(self) -> bool {
        matches!(
            self,
            WaveKind::SphericalJ | WaveKind::SphericalY | WaveKind::SphericalH1
        )
    }
}

/// Value and first derivative of one Bessel-family function.
pub fn eval_wave(kind: WaveKind, order: usize, x: f64) -> Result<(Complex64, Complex64)> {
    eval_wave_with_limit(kind, order, x, DEFAULT_MAX_ORDER)
}

pub fn eval_wave_with_limit(
    kind: WaveKind,
    order: usize,
    x: f64,
    max_order: usize,
) -> Result<(Complex64, Complex64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("argument must be positive, got {x}")));
    }
    if order > max_order {
        return Err(Error::Capability(format!(
            "order {order} exceeds the configured maximum {max_order}"
        )));
    }
    let table = if kind.is_spherical() {
        WaveTable::spherical(order, x)
    } else {
        WaveTable::cylinder(order, x)
    };
    let (j, jp, y, yp) = (
        table.j[order].to_f64(),
        table.jp[order].to_f64(),
        table.y[order].to_f64(),
        table.yp[order].to_f64(),
    );
    let (v, d) = match kind {
        WaveKind::BesselJ | WaveKind::SphericalJ => (Complex64::new(j, 0.0), Complex64::new(jp, 0.0)),
        WaveKind::BesselY | WaveKind::SphericalY => (Complex64::new(y, 0.0), Complex64::new(yp, 0.0)),
        WaveKind::Hankel1 | WaveKind::SphericalH1 => (Complex64::new(j, y), Complex64::new(jp, yp)),
    };
    for z in [v, d] {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Range(format!(
                "{kind:?} of order {order} at x = {x} leaves the double-precision range"
            )));
        }
    }
    Ok((v, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            eval_wave(WaveKind::BesselJ, 0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval_wave(WaveKind::BesselJ, 201, 1.0),
            Err(Error::Capability(_))
        ));
        assert!(eval_wave_with_limit(WaveKind::BesselJ, 201, 1.0, 400).is_ok());
        assert!(matches!(
            eval_wave(WaveKind::BesselY, 200, 1e-6),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn spherical_j0_closed_form() {
        for &x in &[0.3, 1.0, 4.0, 55.0] {
            let (v, d) = eval_wave(WaveKind::SphericalJ, 0, x).unwrap();
            assert!((v.re - x.sin() / x).abs() < 1e-15);
            assert!((d.re - (x.cos() / x - x.sin() / (x * x))).abs() < 1e-14);
        }
    }
}
