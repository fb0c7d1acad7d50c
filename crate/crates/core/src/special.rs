//! Special functions used by the correlation and coupling models.
//!
//! Only what the simulator needs: the exponentially scaled modified Bessel
//! function `I0`, and the sine/cosine integrals `Si` and `Ci`.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `exp(-x) * I0(x)` for `x >= 0`.
///
/// Power series below 30, asymptotic expansion above. Both branches are
/// accurate to a few ulps, and the scaled form stays finite for any
/// concentration a von Mises law can be given.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // I0(x) e^{-x} ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    bessel_i0_scaled(x) * x.abs().exp()
}

/// Sine integral `Si(x) = ∫_0^x sin t / t dt`, any real `x` (odd function).
pub fn si(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let (s, _) = sici_positive(x.abs());
    s.copysign(x)
}

/// Cosine integral `Ci(x) = γ + ln x + ∫_0^x (cos t − 1)/t dt`, for `x > 0`.
pub fn ci(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Ci requires x > 0, got {x}")));
    }
    Ok(sici_positive(x).1)
}

/// `(Si(x), Ci(x))` for `x > 0`.
pub fn sici(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Ci requires x > 0, got {x}")));
    }
    Ok(sici_positive(x))
}

const SERIES_LIMIT: f64 = 2.0;

fn sici_positive(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        sici_series(x)
    } else {
        sici_continued_fraction(x)
    }
}

fn sici_series(x: f64) -> (f64, f64) {
    // Si = sum (-1)^k x^{2k+1} / ((2k+1)(2k+1)!)
    // Ci = γ + ln x + sum_{k>=1} (-1)^k x^{2k} / (2k (2k)!)
    let mut si_sum = 0.0;
    let mut ci_sum = 0.0;
    // running x^n / n! with alternating signs
    let mut fact_term = x;
    let mut n = 1u32;
    loop {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 1 {
            si_sum += sign * fact_term / n as f64;
        } else {
            ci_sum += sign * fact_term / n as f64;
        }
        if fact_term < 1e-18 * (si_sum.abs() + ci_sum.abs() + 1.0) && n > 2 {
            break;
        }
        n += 1;
        fact_term *= x / n as f64;
    }
    (si_sum, EULER_GAMMA + x.ln() + ci_sum)
}

/// Lentz evaluation of the continued fraction for `E1(ix)`.
fn sici_continued_fraction(x: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..100_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    (FRAC_PI_2 + h.im, -h.re)
}
