use std::f64::consts::PI;

use num_complex::Complex64;

use super::bessel::{j01_y01, WaveTable};
use crate::error::{Error, Result};

fn check(d: usize, kappa: f64) -> Result<()> {
    if d != 2 && d != 3 {
        return Err(Error::Capability(format!("dimension {d} is not supported")));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {kappa}")));
    }
    Ok(())
}

/// Outgoing fundamental solution `G_κ(r)`: `(i/4)H₀⁽¹⁾(κr)` for `d = 2`,
/// `e^{iκr}/(4πr)` for `d = 3`.
pub fn green(d: usize, kappa: f64, r: f64) -> Result<Complex64> {
    check(d, kappa)?;
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("G evaluated at separation {r}")));
    }
    Ok(if d == 2 {
        let [j0, _, y0, _] = j01_y01(kappa * r);
        Complex64::new(0.0, 0.25) * Complex64::new(j0, y0)
    } else {
        Complex64::from_polar(1.0 / (4.0 * PI * r), kappa * r)
    })
}

/// The same kernel written as `C_d (κ/r)^{(d−2)/2} H⁽¹⁾_{(d−2)/2}(κr)` with
/// `C₂ = i/4` and `C₃ = i/(4√(2π))`; for `d = 3` the half-integer Hankel
/// function goes through `h₀` as `H_{1/2}(z) = √(2z/π)·h₀(z)`.
pub fn green_hankel_form(d: usize, kappa: f64, r: f64) -> Result<Complex64> {
    check(d, kappa)?;
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("G evaluated at separation {r}")));
    }
    let z = kappa * r;
    if d == 2 {
        let t = WaveTable::cylinder(0, z);
        let h0 = Complex64::new(t.j[0].to_f64(), t.y[0].to_f64());
        return Ok(Complex64::new(0.0, 0.25) * h0);
    }
    let t = WaveTable::spherical(0, z);
    let h0 = Complex64::new(t.j[0].to_f64(), t.y[0].to_f64());
    let h_half = (2.0 * z / PI).sqrt() * h0;
    let c3 = Complex64::new(0.0, 1.0 / (4.0 * (2.0 * PI).sqrt()));
    Ok(c3 * (kappa / r).sqrt() * h_half)
}

/// Gradient of `G_κ(x − y)` with respect to `x`, given `x − y`.
pub fn green_grad(d: usize, kappa: f64, displacement: &[f64]) -> Result<Vec<Complex64>> {
    check(d, kappa)?;
    if displacement.len() != d {
        return Err(Error::Domain(format!(
            "displacement has {} components, expected {d}",
            displacement.len()
        )));
    }
    let r = displacement.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::Singularity("gradient of G at zero displacement".into()));
    }
    let radial = if d == 2 {
        let [_, j1, _, y1] = j01_y01(kappa * r);
        // d/dr (i/4)H₀(κr) = −(iκ/4)H₁(κr)
        Complex64::new(0.0, -0.25 * kappa) * Complex64::new(j1, y1)
    } else {
        Complex64::from_polar(1.0 / (4.0 * PI * r * r), kappa * r) * Complex64::new(-1.0, kappa * r)
    };
    Ok(displacement.iter().map(|v| radial * (v / r)).collect())
}
