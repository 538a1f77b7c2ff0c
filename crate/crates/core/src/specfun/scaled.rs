//! Real numbers with an explicit binary exponent.
//!
//! High-order Bessel functions at small argument leave the double-precision
//! range long before the quantities built from them do: `J_n(x)Y_n(x)` stays
//! near `−1/(πn)` while each factor under- or overflows. Sequences are
//! therefore produced as [`Scaled`] values and combined before conversion.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// `mant · 2^exp` with `0.5 ≤ |mant| < 1`, or `mant == 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    mant: f64,
    exp: i64,
}

const TWO_POW_64: f64 = 18446744073709551616.0;

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: lift into the normal range first
        let (m, e) = frexp(x * TWO_POW_64);
        return (m, e - 64);
    }
    let e = raw - 1022;
    let m_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(m_bits), e)
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if !m.is_finite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * 2f64.powi(e as i32)
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };
    pub const ONE: Scaled = Scaled { mant: 0.5, exp: 1 };

    pub fn new(x: f64) -> Self {
        let (mant, exp) = frexp(x);
        Scaled { mant, exp }
    }

    /// `x · 2^e`.
    pub fn with_exp2(x: f64, e: i64) -> Self {
        let (mant, exp) = frexp(x);
        if mant == 0.0 {
            return Self::ZERO;
        }
        Scaled { mant, exp: exp + e }
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.mant.is_finite()
    }

    pub fn signum(self) -> f64 {
        if self.mant == 0.0 {
            0.0
        } else {
            self.mant.signum()
        }
    }

    pub fn abs(self) -> Self {
        Scaled {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    pub fn scale(self, f: f64) -> Self {
        self * Scaled::new(f)
    }

    pub fn cmp_abs(self, other: Scaled) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self
                .mant
                .abs()
                .partial_cmp(&other.mant.abs())
                .unwrap_or(Ordering::Equal),
            o => o,
        }
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::with_exp2(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        Scaled::with_exp2(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let e = self.exp.max(rhs.exp);
        let a = ldexp(self.mant, self.exp - e);
        let b = ldexp(rhs.mant, rhs.exp - e);
        Scaled::with_exp2(a + b, e)
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, rhs: Scaled) -> Scaled {
        self + (-rhs)
    }
}
