//! Cylinder and spherical Bessel sequences of integer order.
//!
//! `J_n` and `j_l` are the minimal solutions of their three-term recurrences
//! and come from Miller's backward recurrence; `Y_n` and `y_l` are dominant
//! and are run forward from closed or asymptotic starting values. Every entry
//! is kept as a [`Scaled`] so orders far beyond the argument stay usable.

use std::f64::consts::{FRAC_PI_4, PI};

use super::scaled::Scaled;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this argument `Y₀`, `Y₁` come from the Hankel expansion.
const ASYMPTOTIC_SWITCH: f64 = 25.0;

/// Rescaling step for the recurrences, as a power of two.
const RESCALE_BITS: i64 = 600;

fn rescale_threshold() -> f64 {
    2f64.powi(RESCALE_BITS as i32)
}

fn rescale_factor() -> f64 {
    2f64.powi(-(RESCALE_BITS as i32))
}

/// Starting order for the backward recurrence.
fn miller_start(top_order: usize, x: f64) -> usize {
    let top = (top_order as f64).max(x);
    let m = (top + 30.0 + (60.0 * top).sqrt()).ceil() as usize;
    m + (m % 2)
}

/// Values and first derivatives of a Bessel pair at one argument, orders
/// `0..=nmax`.
#[derive(Clone, Debug)]
pub struct WaveTable {
    pub x: f64,
    /// `J_n` or `j_l`.
    pub j: Vec<Scaled>,
    pub jp: Vec<Scaled>,
    /// `Y_n` or `y_l`.
    pub y: Vec<Scaled>,
    pub yp: Vec<Scaled>,
    spherical: bool,
}

impl WaveTable {
    /// Cylinder functions `J_n(x)`, `Y_n(x)` for `n = 0..=nmax`.
    pub fn cylinder(nmax: usize, x: f64) -> Self {
        debug_assert!(x > 0.0);
        let (j, _y01) = miller_cylinder(nmax + 1, x);
        let (y0, y1) = if x >= ASYMPTOTIC_SWITCH {
            let (_, y0) = hankel_asymptotic(0.0, x);
            let (_, y1) = hankel_asymptotic(1.0, x);
            (y0, y1)
        } else {
            _y01
        };
        let y = forward(nmax + 1, x, y0, y1, |k| 2.0 * k as f64);
        let half = Scaled::new(0.5);
        let mut jp = Vec::with_capacity(nmax + 1);
        let mut yp = Vec::with_capacity(nmax + 1);
        jp.push(-j[1]);
        yp.push(-y[1]);
        for n in 1..=nmax {
            jp.push((j[n - 1] - j[n + 1]) * half);
            yp.push((y[n - 1] - y[n + 1]) * half);
        }
        let mut j = j;
        let mut y = y;
        j.truncate(nmax + 1);
        y.truncate(nmax + 1);
        WaveTable {
            x,
            j,
            jp,
            y,
            yp,
            spherical: false,
        }
    }

    /// Spherical functions `j_l(x)`, `y_l(x)` for `l = 0..=lmax`.
    pub fn spherical(lmax: usize, x: f64) -> Self {
        debug_assert!(x > 0.0);
        let j = miller_spherical(lmax + 1, x);
        let (s, c) = x.sin_cos();
        let y0 = -c / x;
        let y1 = -c / (x * x) - s / x;
        let y = forward(lmax + 1, x, y0, y1, |k| (2 * k + 1) as f64);
        let mut jp = Vec::with_capacity(lmax + 1);
        let mut yp = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let f = Scaled::new(l as f64 / x);
            jp.push(j[l] * f - j[l + 1]);
            yp.push(y[l] * f - y[l + 1]);
        }
        let mut j = j;
        let mut y = y;
        j.truncate(lmax + 1);
        y.truncate(lmax + 1);
        WaveTable {
            x,
            j,
            jp,
            y,
            yp,
            spherical: true,
        }
    }

    pub fn is_spherical(&self) -> bool {
        self.spherical
    }

    pub fn max_order(&self) -> usize {
        self.j.len() - 1
    }

    /// `x·J_n'(x)/J_n(x)` (or the spherical analogue), the logarithmic
    /// derivative that enters every Neumann trace.
    pub fn log_derivative(&self, n: usize) -> f64 {
        (self.jp[n] / self.j[n]).to_f64() * self.x
    }

    /// `J_n(x)·H_n⁽¹⁾(x)` as a complex number, formed before leaving the
    /// scaled representation.
    pub fn j_times_h(&self, n: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new((self.j[n] * self.j[n]).to_f64(), (self.j[n] * self.y[n]).to_f64())
    }

    /// `J_n'(x)·H_n⁽¹⁾(x)`.
    pub fn jp_times_h(&self, n: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new((self.jp[n] * self.j[n]).to_f64(), (self.jp[n] * self.y[n]).to_f64())
    }

    /// `J_n(x)·H_n⁽¹⁾'(x)`.
    pub fn j_times_hp(&self, n: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new((self.j[n] * self.jp[n]).to_f64(), (self.j[n] * self.yp[n]).to_f64())
    }
}

/// Miller recurrence for `J_0..=J_top` normalized by
/// `J₀ + 2ΣJ_{2k} = 1`; also returns `Y₀`, `Y₁` from the Neumann series,
/// which share the same backward sweep.
fn miller_cylinder(top: usize, x: f64) -> (Vec<Scaled>, (f64, f64)) {
    let m = miller_start(top, x);
    let big = rescale_threshold();
    let small = rescale_factor();

    let mut stored = vec![(0.0f64, 0i64); top + 1];
    let mut scale_count: i64 = 0;
    let mut f_next = 0.0f64; // f_{k+1}
    let mut f_k = 1e-30f64;
    let mut norm = 0.0f64;
    let mut sy0 = 0.0f64;
    let mut sy1 = 0.0f64;
    let mut k = m;
    loop {
        // visit f_k
        if k % 2 == 0 {
            if k == 0 {
                norm += f_k;
            } else {
                let half = (k / 2) as f64;
                norm += 2.0 * f_k;
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sy0 += sign * f_k / half;
            }
        } else {
            let up = (k + 1) / 2;
            let sign_up = if up % 2 == 0 { 1.0 } else { -1.0 };
            let mut c = sign_up / up as f64;
            let down = (k - 1) / 2;
            if down >= 1 {
                let sign_down = if down % 2 == 0 { 1.0 } else { -1.0 };
                c -= sign_down / down as f64;
            }
            sy1 += c * f_k;
        }
        if k <= top {
            stored[k] = (f_k, scale_count);
        }
        if k == 0 {
            break;
        }
        let f_prev = (2.0 * k as f64 / x) * f_k - f_next;
        f_next = f_k;
        f_k = f_prev;
        k -= 1;
        if f_k.abs() > big {
            f_k *= small;
            f_next *= small;
            norm *= small;
            sy0 *= small;
            sy1 *= small;
            scale_count += 1;
            // entries stored at the old scale keep their own counter
        }
    }

    let norm_s = Scaled::new(norm);
    let j: Vec<Scaled> = stored
        .iter()
        .map(|&(f, c)| Scaled::with_exp2(f, -RESCALE_BITS * (scale_count - c)) / norm_s)
        .collect();

    let j0 = j[0].to_f64();
    let j1 = if top >= 1 { j[1].to_f64() } else { 0.0 };
    let lg = (x / 2.0).ln() + EULER_GAMMA;
    let y0 = (2.0 / PI) * lg * j0 - (4.0 / PI) * sy0 / norm;
    let y1 = (2.0 / PI) * (lg * j1 - j0 / x) + (2.0 / PI) * sy1 / norm;
    (j, (y0, y1))
}

/// Miller recurrence for `j_0..=j_top`, normalized against whichever of the
/// closed forms `j₀`, `j₁` is larger in magnitude.
fn miller_spherical(top: usize, x: f64) -> Vec<Scaled> {
    let m = miller_start(top, x);
    let big = rescale_threshold();
    let small = rescale_factor();
    let mut stored = vec![(0.0f64, 0i64); top.max(1) + 1];
    let mut scale_count: i64 = 0;
    let mut f_next = 0.0f64;
    let mut f_k = 1e-30f64;
    let mut k = m;
    loop {
        if k < stored.len() {
            stored[k] = (f_k, scale_count);
        }
        if k == 0 {
            break;
        }
        let f_prev = ((2 * k + 1) as f64 / x) * f_k - f_next;
        f_next = f_k;
        f_k = f_prev;
        k -= 1;
        if f_k.abs() > big {
            f_k *= small;
            f_next *= small;
            scale_count += 1;
        }
    }
    let raw: Vec<Scaled> = stored
        .iter()
        .map(|&(f, c)| Scaled::with_exp2(f, -RESCALE_BITS * (scale_count - c)))
        .collect();

    let (s, c) = x.sin_cos();
    let j0 = if x < 1e-4 { 1.0 - x * x / 6.0 } else { s / x };
    let j1 = if x < 0.3 {
        // series: x/3 − x³/30 + x⁵/840 − x⁷/45360
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        s / (x * x) - c / x
    };
    let factor = if j0.abs() >= j1.abs() {
        Scaled::new(j0) / raw[0]
    } else {
        Scaled::new(j1) / raw[1]
    };
    let mut out: Vec<Scaled> = raw.into_iter().map(|v| v * factor).collect();
    out.truncate(top + 1);
    out
}

/// Forward recurrence `w_{k+1} = (c(k)/x)·w_k − w_{k−1}` from `w₀`, `w₁`.
fn forward(top: usize, x: f64, w0: f64, w1: f64, c: impl Fn(usize) -> f64) -> Vec<Scaled> {
    let big = rescale_threshold();
    let small = rescale_factor();
    let mut out = Vec::with_capacity(top + 1);
    out.push(Scaled::new(w0));
    if top == 0 {
        return out;
    }
    out.push(Scaled::new(w1));
    let mut prev = w0;
    let mut cur = w1;
    let mut exp: i64 = 0;
    for k in 1..top {
        let next = (c(k) / x) * cur - prev;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            cur *= small;
            prev *= small;
            exp += RESCALE_BITS;
        }
        out.push(Scaled::with_exp2(cur, exp));
    }
    out
}

/// Hankel's large-argument expansion of `(J_ν(x), Y_ν(x))`.
pub fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= last || term.abs() < 1e-17 {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    // χ = x − (ν/2 + 1/4)π, expanded so that x itself is never rounded
    let phase = (nu / 2.0) * PI + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// `J₀, J₁, Y₀, Y₁` at one argument without allocating; the hot path of
/// two-dimensional kernel assembly.
pub fn j01_y01(x: f64) -> [f64; 4] {
    if x >= ASYMPTOTIC_SWITCH {
        let (j0, y0) = hankel_asymptotic(0.0, x);
        let (j1, y1) = hankel_asymptotic(1.0, x);
        return [j0, j1, y0, y1];
    }
    let m = miller_start(1, x);
    let big = rescale_threshold();
    let small = rescale_factor();
    let mut f_next = 0.0f64;
    let mut f_k = 1e-30f64;
    let mut norm = 0.0;
    let mut sy0 = 0.0;
    let mut sy1 = 0.0;
    let mut f1 = 0.0;
    let mut k = m;
    loop {
        if k % 2 == 0 {
            if k == 0 {
                norm += f_k;
            } else {
                norm += 2.0 * f_k;
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sy0 += sign * f_k / (k / 2) as f64;
            }
        } else {
            let up = (k + 1) / 2;
            let mut c = if up % 2 == 0 { 1.0 } else { -1.0 } / up as f64;
            let down = (k - 1) / 2;
            if down >= 1 {
                c -= if down % 2 == 0 { 1.0 } else { -1.0 } / down as f64;
            }
            sy1 += c * f_k;
        }
        if k == 1 {
            f1 = f_k;
        }
        if k == 0 {
            break;
        }
        let f_prev = (2.0 * k as f64 / x) * f_k - f_next;
        f_next = f_k;
        f_k = f_prev;
        k -= 1;
        if f_k.abs() > big {
            f_k *= small;
            f_next *= small;
            norm *= small;
            sy0 *= small;
            sy1 *= small;
            if k < 1 {
                f1 *= small;
            }
        }
    }
    let j0 = f_k / norm;
    let j1 = f1 / norm;
    let lg = (x / 2.0).ln() + EULER_GAMMA;
    let y0 = (2.0 / PI) * lg * j0 - (4.0 / PI) * sy0 / norm;
    let y1 = (2.0 / PI) * (lg * j1 - j0 / x) + (2.0 / PI) * sy1 / norm;
    [j0, j1, y0, y1]
}
