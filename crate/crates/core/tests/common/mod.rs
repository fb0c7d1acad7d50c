//! Numerical oracles shared by the integration tests. Everything here is
//! written independently of the library code it checks.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thz_ris::linalg::CMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // fixed panels first, so a narrow peak cannot fool the first estimate
    let panels = 256;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            step(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// J0(x) = (1/π) ∫_0^π cos(x sin t) dt.
pub fn bessel_j0(x: f64) -> f64 {
    simpson(|t| (x * t.sin()).cos(), 0.0, PI, 20_000) / PI
}

/// K0(z) = ∫_0^∞ exp(−z cosh t) dt.
pub fn bessel_k0(z: f64) -> f64 {
    let upper = ((50.0 / z).max(1.0) * 2.0).acosh() + 1.0;
    simpson(|t| (-z * t.cosh()).exp(), 0.0, upper, 20_000)
}

/// K1(z) = ∫_0^∞ exp(−z cosh t) cosh t dt.
pub fn bessel_k1(z: f64) -> f64 {
    let upper = ((50.0 / z).max(1.0) * 2.0).acosh() + 1.0;
    simpson(|t| (-z * t.cosh()).exp() * t.cosh(), 0.0, upper, 2_000)
}

/// −∫_x^∞ cos t / t dt, written as γ + ln x + ∫_0^x (cos t − 1)/t dt.
pub fn ci_oracle(x: f64) -> f64 {
    0.577_215_664_901_532_9
        + x.ln()
        + simpson(|t| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t }, 0.0, x, 20_000)
}

/// Mutual impedance of two side-by-side dipoles from the induced-EMF
/// integral, by direct quadrature along the second dipole. Currents are
/// referred to their maxima.
pub fn induced_emf_z21(l: f64, d: f64, wavelength: f64) -> Complex64 {
    let k = 2.0 * PI / wavelength;
    let eta = 376.730_313_668;
    let h = 0.5 * l;
    let green = |r: f64| Complex64::from_polar(1.0 / r, -k * r);
    let ez = |z: f64| {
        let r1 = (d * d + (z - h) * (z - h)).sqrt();
        let r2 = (d * d + (z + h) * (z + h)).sqrt();
        let r0 = (d * d + z * z).sqrt();
        Complex64::new(0.0, -eta / (4.0 * PI))
            * (green(r1) + green(r2) - green(r0) * (2.0 * (k * h).cos()))
    };
    let current = |z: f64| (k * (h - z.abs())).sin();
    // split at the current kink
    let part = |f: &dyn Fn(f64) -> f64| simpson(f, -h, 0.0, 2000) + simpson(f, 0.0, h, 2000);
    let re = part(&|z| (ez(z) * current(z)).re);
    let im = part(&|z| (ez(z) * current(z)).im);
    -Complex64::new(re, im)
}

pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian PSD matrix `A A^H` with iid entries.
pub fn random_psd(n: usize, seed: u64) -> CMatrix {
    use rand::Rng;
    let mut r = rng(seed);
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
    &a * a.adjoint()
}
