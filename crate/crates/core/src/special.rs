//! Hankel functions of the first kind for complex argument.
//!
//! Three regimes, chosen by `|z|`:
//!
//! * `|z| < 8`: ascending power series for `J0, J1, Y0, Y1`.
//! * `8 <= |z| < 25`: Miller backward recurrence for `J_n` normalised by
//!   `J0 + 2 sum J_2k = 1`, with `Y0, Y1` from their Neumann series.
//! * `|z| >= 25`: Hankel's asymptotic expansion, summed to its smallest term.
//!
//! The argument must lie in the closed upper half plane (the outgoing,
//! exponentially decaying branch for `Im z > 0`) and must not be zero or a
//! negative real. Relative accuracy is 1e-10 or better for `Im z <= 4`; beyond
//! that `J` and `Y` cancel in `H = J + iY` and digits are lost. Kernel
//! arguments here are `s r / c` with `Im s` the transform damping, far inside
//! that strip.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

fn check_argument(z: Complex64) {
    debug_assert!(z.norm() > 0.0, "Hankel function evaluated at z = 0");
    debug_assert!(z.im >= 0.0, "Hankel argument must satisfy Im z >= 0, got {z}");
}

/// Returns `(H0(z), H1(z))` for the first-kind Hankel functions.
pub fn hankel1_01(z: Complex64) -> (Complex64, Complex64) {
    check_argument(z);
    let r = z.norm();
    if r < SERIES_LIMIT {
        series_01(z)
    } else if r < ASYMPTOTIC_LIMIT {
        miller_01(z)
    } else {
        (asymptotic(0, z), asymptotic(1, z))
    }
}

/// Returns `[H0(z), ..., H_{N-1}(z)]` by upward recurrence from `H0, H1`.
pub fn hankel1_seq<const N: usize>(z: Complex64) -> [Complex64; N] {
    let mut out = [Complex64::new(0.0, 0.0); N];
    let (h0, h1) = hankel1_01(z);
    if N > 0 {
        out[0] = h0;
    }
    if N > 1 {
        out[1] = h1;
    }
    let two_over_z = 2.0 / z;
    for n in 2..N {
        out[n] = two_over_z * (n as f64 - 1.0) * out[n - 1] - out[n - 2];
    }
    out
}

/// Bessel functions `(J0, J1)` of the first kind, same regimes as
/// [`hankel1_01`] for `|z| < 25`.
pub fn bessel_j01(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < SERIES_LIMIT {
        let (j0, j1, _, _) = series_terms(z);
        (j0, j1)
    } else {
        let js = miller_j(z, 2);
        (js[0], js[1])
    }
}

fn series_terms(z: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let half = z * 0.5;
    let q = -(half * half);
    let log_term = (half.ln() + EULER_GAMMA) * (2.0 / PI);

    // J0 and the harmonic-number series of Y0.
    let mut term = Complex64::new(1.0, 0.0);
    let mut j0 = term;
    let mut y0_tail = Complex64::new(0.0, 0.0);
    let mut harmonic = 0.0;
    // J1 / (z/2) and the digamma series of Y1.
    let mut term1 = Complex64::new(1.0, 0.0);
    let mut j1_red = term1;
    // psi(k+1) + psi(k+2) at k = 0 is -2 gamma + 1
    let mut psi_sum = -2.0 * EULER_GAMMA + 1.0;
    let mut y1_tail = term1 * psi_sum;

    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        j0 += term;
        y0_tail += term * harmonic;

        term1 *= q / (kf * (kf + 1.0));
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        j1_red += term1;
        y1_tail += term1 * psi_sum;

        let scale = j0.norm().max(1.0);
        if term.norm() * (1.0 + harmonic) < 1e-17 * scale
            && term1.norm() * psi_sum.abs().max(1.0) < 1e-17 * j1_red.norm().max(1.0)
        {
            break;
        }
    }

    let j1 = half * j1_red;
    let y0 = log_term * j0 - y0_tail * (2.0 / PI);
    let y1 = -2.0 / (PI * z) + (2.0 / PI) * half.ln() * j1 - half * y1_tail / PI;
    (j0, j1, y0, y1)
}

fn series_01(z: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let (j0, j1, y0, y1) = series_terms(z);
    (j0 + i * y0, j1 + i * y1)
}

/// `J_0 .. J_{n_out - 1}` plus enough higher orders for the Neumann series,
/// by Miller's backward recurrence.
fn miller_j(z: Complex64, n_out: usize) -> Vec<Complex64> {
    let r = z.norm();
    let mut start = (r + 25.0 + 4.0 * r.cbrt()) as usize;
    start += start % 2;
    let start = start.max(n_out + 2);

    let mut js = vec![Complex64::new(0.0, 0.0); start + 2];
    js[start + 1] = Complex64::new(0.0, 0.0);
    js[start] = Complex64::new(1e-30, 0.0);
    let two_over_z = 2.0 / z;
    for n in (1..=start).rev() {
        js[n - 1] = two_over_z * (n as f64) * js[n] - js[n + 1];
        if js[n - 1].norm() > 1e250 {
            for v in js.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = js[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * js[k];
    }
    for v in js.iter_mut() {
        *v /= norm;
    }
    js
}

fn miller_01(z: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let js = miller_j(z, 2);
    let n_max = js.len() - 2;
    let log_term = (z * 0.5).ln() + EULER_GAMMA;

    let mut y0_sum = Complex64::new(0.0, 0.0);
    let mut y1_sum = Complex64::new(0.0, 0.0);
    let mut k = 1;
    while 2 * k < n_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        y0_sum += sign * js[2 * k] / kf;
        y1_sum += sign * (js[2 * k - 1] - js[2 * k + 1]) / kf;
        k += 1;
    }
    let j0 = js[0];
    let j1 = js[1];
    let y0 = (2.0 / PI) * log_term * j0 - (4.0 / PI) * y0_sum;
    let y1 = -(2.0 / PI) * j0 / z + (2.0 / PI) * log_term * j1 + (2.0 / PI) * y1_sum;
    (j0 + i * y0, j1 + i * y1)
}

fn asymptotic(nu: u32, z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let mu = 4.0 * (nu as f64).powi(2);
    let inv_z = 1.0 / z;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= i * (mu - odd * odd) / (kf * 8.0) * inv_z;
        let size = term.norm();
        if size > last {
            break;
        }
        sum += term;
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    let phase = z - (nu as f64) * PI * 0.5 - FRAC_PI_4;
    (2.0 / (PI * z)).sqrt() * (i * phase).exp() * sum
}
