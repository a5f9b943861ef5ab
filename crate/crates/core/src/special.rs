//! Special functions: complex Gamma, Kummer's ₁F₁, Airy Ai and Hermite functions.

use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Gamma function (Lanczos, with reflection for `Re z < ½`).
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return PI / (s * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// `1/Γ(z)`, exactly zero at the poles.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Complex64::new(0.0, 0.0);
    }
    1.0 / gamma(z)
}

const SERIES_RADIUS: f64 = 5.0;
const ASYMPTOTIC_RADIUS: f64 = 40.0;

fn hyp1f1_series(a: Complex64, b: f64, z: Complex64) -> (Complex64, Complex64) {
    // value and derivative
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut dterm = a / b;
    let mut dsum = dterm;
    for k in 0..400 {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        if k >= 1 {
            dterm *= (a + kf) / (b + kf) * z / kf;
            dsum += dterm;
        }
        if term.norm() < 1e-17 * sum.norm() && kf > z.norm() {
            break;
        }
    }
    let _ = &mut dterm;
    (sum, dsum)
}

fn hyp1f1_asymptotic(a: Complex64, b: f64, z: Complex64) -> Complex64 {
    // M(a,b,z)/Γ(b) ~ e^{±iπa} z^{−a}/Γ(b−a) Σ (a)_s(a−b+1)_s/s! (−z)^{−s}
    //              + e^z z^{a−b}/Γ(a) Σ (1−a)_s(b−a)_s/s! z^{−s}
    let sgn = if z.arg() > -PI / 2.0 { 1.0 } else { -1.0 };
    let bc = Complex64::new(b, 0.0);
    let series = |p: Complex64, q: Complex64, w: Complex64| {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        let mut last = f64::INFINITY;
        for s in 0..200 {
            let sf = s as f64;
            term *= (p + sf) * (q + sf) / (sf + 1.0) / w;
            let m = term.norm();
            if m > last {
                break;
            }
            sum += term;
            last = m;
            if m < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    };
    let first = (Complex64::new(0.0, sgn * PI) * a).exp() * z.powc(-a) * rgamma(bc - a) * series(a, a - bc + 1.0, -z);
    let second = z.exp() * z.powc(a - bc) * rgamma(a) * series(1.0 - a, bc - a, z);
    gamma(bc) * (first + second)
}

/// Kummer's confluent hypergeometric function `₁F₁(a; b; z)` for real `b > 0`.
///
/// Power series for `|z| ≤ 5`, Taylor stepping of Kummer's equation along the
/// ray from the origin for `5 < |z| < 40`, asymptotic expansion beyond.
pub fn hyp1f1(a: Complex64, b: f64, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        return hyp1f1_series(a, b, z).0;
    }
    if r >= ASYMPTOTIC_RADIUS {
        return hyp1f1_asymptotic(a, b, z);
    }
    let dir = z / r;
    let (mut w, mut dw) = hyp1f1_series(a, b, dir * SERIES_RADIUS);
    let steps = ((r - SERIES_RADIUS) / 1.5).ceil() as usize;
    let h = dir * ((r - SERIES_RADIUS) / steps as f64);
    let mut z0 = dir * SERIES_RADIUS;
    for _ in 0..steps {
        (w, dw) = kummer_taylor_step(a, b, z0, w, dw, h);
        z0 += h;
    }
    w
}

/// Advances `(w, w')` of Kummer's equation `z w'' + (b − z) w' − a w = 0`
/// from `z0` to `z0 + h` by summing the Taylor series at `z0`.
fn kummer_taylor_step(a: Complex64, b: f64, z0: Complex64, w: Complex64, dw: Complex64, h: Complex64) -> (Complex64, Complex64) {
    let (mut c0, mut c1) = (w, dw);
    let mut hk = Complex64::new(1.0, 0.0);
    let (mut val, mut der) = (c0, c1);
    for k in 0..200 {
        let kf = k as f64;
        let c2 = ((a + kf) * c0 - (kf + 1.0) * (kf + b - z0) * c1) / (z0 * (kf + 2.0) * (kf + 1.0));
        hk *= h;
        let tv = c1 * hk;
        let td = c2 * (kf + 2.0) * hk;
        val += tv;
        der += td;
        if tv.norm() < 1e-18 * val.norm() && td.norm() < 1e-18 * der.norm() && k > 4 {
            break;
        }
        c0 = c1;
        c1 = c2;
    }
    (val, der)
}

/// Oscillatory expansion of `Ai(x)` for large negative `x`.
fn airy_oscillatory(x: f64) -> f64 {
    let mut u = vec![1.0f64];
    for k in 1..25 {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    let y = -x;
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let (mut p, mut q) = (0.0, 0.0);
    for k in 0..u.len() / 2 {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        p += s * u[2 * k] / zeta.powi(2 * k as i32);
        q += s * u[2 * k + 1] / zeta.powi(2 * k as i32 + 1);
    }
    let ph = zeta - PI / 4.0;
    (ph.cos() * p + ph.sin() * q) / (PI.sqrt() * y.powf(0.25))
}

/// Airy function `Ai(x)` for real `x`.
///
/// For `x ≥ 1` the steepest-descent form
/// `Ai(x) = (e^{−ζ}/π) ∫₀^∞ e^{−√x u²} cos(u³/3) du` with `ζ = (2/3)x^{3/2}`;
/// for `−10 ≤ x < 1` Taylor stepping of `y″ = xy` from the exact values at 0;
/// below that the oscillatory asymptotic expansion.
pub fn airy_ai(x: f64) -> f64 {
    if x < -10.0 {
        return airy_oscillatory(x);
    }
    if x >= 1.0 {
        let q = x.sqrt();
        let zeta = 2.0 / 3.0 * x * q;
        let upper = (42.0 / q).sqrt();
        let r = quad::integrate(|u| Complex64::new((-q * u * u).exp() * (u * u * u / 3.0).cos(), 0.0), 0.0, upper, 1e-14);
        return (-zeta).exp() / PI * r.value.re;
    }
    let ai0 = 1.0 / (3f64.powf(2.0 / 3.0) * gamma(Complex64::new(2.0 / 3.0, 0.0)).re);
    let dai0 = -1.0 / (3f64.powf(1.0 / 3.0) * gamma(Complex64::new(1.0 / 3.0, 0.0)).re);
    let steps = (x.abs() / 0.5).ceil().max(1.0) as usize;
    let h = x / steps as f64;
    let (mut y, mut dy, mut x0) = (ai0, dai0, 0.0);
    for _ in 0..steps {
        (y, dy) = airy_taylor_step(x0, y, dy, h);
        x0 += h;
    }
    y
}

/// Advances `(y, y′)` of `y″ = xy` from `x0` to `x0 + h` with the Taylor series at `x0`.
fn airy_taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // (k+2)(k+1)c_{k+2} = x0 c_k + c_{k−1}
    let mut c = vec![y, dy];
    for k in 0..60 {
        let prev = if k >= 1 { c[k - 1] } else { 0.0 };
        let kf = k as f64;
        c.push((x0 * c[k] + prev) / ((kf + 2.0) * (kf + 1.0)));
    }
    let (mut val, mut der, mut hk) = (0.0, 0.0, 1.0);
    for (k, ck) in c.iter().enumerate() {
        val += ck * hk;
        if k + 1 < c.len() {
            der += (k as f64 + 1.0) * c[k + 1] * hk;
        }
        hk *= h;
    }
    (val, der)
}

/// Normalized Hermite functions `h_0..=h_n` at `y`.
pub fn hermite_functions(n: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let h0 = PI.powf(-0.25) * (-0.5 * y * y).exp();
    out.push(h0);
    if n >= 1 {
        out.push(2f64.sqrt() * y * h0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Normalized Hermite function `h_n(y)`.
pub fn hermite_function(n: usize, y: f64) -> f64 {
    hermite_functions(n, y)[n]
}
