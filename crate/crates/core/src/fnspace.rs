//! Periodic functions on the circle, their zeros, regularizing contours and
//! integrals of `1/ξ`.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub const TWO_PI: f64 = 2.0 * PI;
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Finite Fourier series `Σ_{|m|≤N} c_m e^{imθ}`, evaluable on the complex strip.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    /// Builds from coefficients `c_{-N}, …, c_N`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidInput("coefficient vector must have odd length".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite Fourier coefficient".into()));
        }
        Ok(TrigPoly { coeffs })
    }

    pub fn zero() -> Self {
        TrigPoly { coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn constant(c: f64) -> Self {
        Self::constant_c(Complex64::new(c, 0.0))
    }

    pub fn constant_c(c: Complex64) -> Self {
        TrigPoly { coeffs: vec![c] }
    }

    /// `mean + Σ_k cos[k-1]·cos kθ + sin[k-1]·sin kθ`.
    pub fn from_real(mean: f64, cos: &[f64], sin: &[f64]) -> Self {
        let n = cos.len().max(sin.len());
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        c[n] = Complex64::new(mean, 0.0);
        for k in 1..=n {
            let a = cos.get(k - 1).copied().unwrap_or(0.0);
            let b = sin.get(k - 1).copied().unwrap_or(0.0);
            c[n + k] = Complex64::new(0.5 * a, -0.5 * b);
            c[n - k] = Complex64::new(0.5 * a, 0.5 * b);
        }
        TrigPoly { coeffs: c }
    }

    /// Inverse of [`TrigPoly::from_real`] on the real part.
    pub fn to_real(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.degree();
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        for k in 1..=n as i64 {
            let cp = self.coeff(k);
            let cm = self.coeff(-k);
            cos.push((cp + cm).re);
            sin.push((I * (cp - cm)).re);
        }
        (self.coeff(0).re, cos, sin)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        let n = self.degree() as i64;
        if m.abs() > n {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + n) as usize]
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let n = self.degree();
        let w = (I * z).exp();
        let winv = 1.0 / w;
        let mut pos = Complex64::new(0.0, 0.0);
        for m in (1..=n).rev() {
            pos = (pos + self.coeffs[n + m]) * w;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for m in (1..=n).rev() {
            neg = (neg + self.coeffs[n - m]) * winv;
        }
        pos + neg + self.coeffs[n]
    }

    pub fn eval_re(&self, theta: f64) -> f64 {
        self.eval(Complex64::new(theta, 0.0)).re
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree() as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * I * (j as i64 - n) as f64)
            .collect();
        TrigPoly { coeffs }
    }

    pub fn derivative_n(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    /// Zero-mean antiderivative together with the dropped mean.
    pub fn antiderivative(&self) -> (Self, Complex64) {
        let n = self.degree() as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let m = j as i64 - n;
                if m == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / (I * m as f64)
                }
            })
            .collect();
        (TrigPoly { coeffs }, self.mean())
    }

    fn padded(&self, n: usize) -> Vec<Complex64> {
        let d = self.degree();
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for (j, v) in self.coeffs.iter().enumerate() {
            c[n - d + j] = *v;
        }
        c
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.degree().max(other.degree());
        let a = self.padded(n);
        let b = other.padded(n);
        TrigPoly { coeffs: a.iter().zip(&b).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        TrigPoly { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.add(&TrigPoly::constant(c))
    }

    /// Exact product (degree adds).
    pub fn mul(&self, other: &Self) -> Self {
        let (na, nb) = (self.degree(), other.degree());
        let n = na + nb;
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in other.coeffs.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        TrigPoly { coeffs: c }
    }

    /// True when every coefficient pair satisfies `c_{-m} = conj(c_m)` within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        let n = self.degree();
        let scale = self.max_coeff().max(1e-300);
        (0..=n).all(|m| (self.coeffs[n + m] - self.coeffs[n - m].conj()).norm() <= tol * scale)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Symmetrized real part.
    pub fn real_part(&self) -> Self {
        let n = self.degree();
        let coeffs = (0..2 * n + 1)
            .map(|j| 0.5 * (self.coeffs[j] + self.coeffs[2 * n - j].conj()))
            .collect();
        TrigPoly { coeffs }
    }

    /// Least-squares projection from uniform samples `f(2πj/M)`.
    pub fn from_samples(samples: &[Complex64]) -> Self {
        let m = samples.len();
        let mut buf = samples.to_vec();
        fft_forward(&mut buf);
        let n = (m - 1) / 2;
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for k in 0..=n {
            c[n + k] = buf[k] / m as f64;
            if k > 0 {
                c[n - k] = buf[m - k] / m as f64;
            }
        }
        TrigPoly { coeffs: c }
    }

    /// Projects an arbitrary periodic function using `m` samples, trimming
    /// trailing coefficients below `1e-15` of the largest.
    pub fn project<F: Fn(f64) -> Complex64>(f: F, m: usize) -> Self {
        let samples: Vec<Complex64> = (0..m).map(|j| f(TWO_PI * j as f64 / m as f64)).collect();
        Self::from_samples(&samples).chop(1e-15)
    }

    /// Drops trailing harmonic pairs whose size is below `tol` times the largest coefficient.
    pub fn chop(&self, tol: f64) -> Self {
        let n = self.degree();
        let thr = tol * self.max_coeff();
        let mut keep = 0;
        for m in (1..=n).rev() {
            if self.coeffs[n + m].norm() > thr || self.coeffs[n - m].norm() > thr {
                keep = m;
                break;
            }
        }
        TrigPoly { coeffs: self.coeffs[n - keep..=n + keep].to_vec() }
    }

    /// Size of the highest retained harmonic relative to the largest coefficient.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.degree();
        if n == 0 {
            return 0.0;
        }
        let top = self.coeffs[0].norm().max(self.coeffs[2 * n].norm());
        top / self.max_coeff().max(1e-300)
    }

    pub fn samples(&self, m: usize) -> Vec<Complex64> {
        (0..m).map(|j| self.eval(Complex64::new(TWO_PI * j as f64 / m as f64, 0.0))).collect()
    }

    pub fn max_abs(&self, m: usize) -> f64 {
        self.samples(m).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `θ ↦ self(n θ)`.
    pub fn dilate(&self, n: usize) -> Self {
        let d = self.degree();
        let nd = d * n;
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * nd + 1];
        for (j, v) in self.coeffs.iter().enumerate() {
            let m = j as i64 - d as i64;
            c[(nd as i64 + m * n as i64) as usize] = *v;
        }
        TrigPoly { coeffs: c }
    }

    /// `θ ↦ self(θ + s)`.
    pub fn shift(&self, s: f64) -> Self {
        let n = self.degree() as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (I * ((j as i64 - n) as f64 * s)).exp())
            .collect();
        TrigPoly { coeffs }
    }
}

type ClosureFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// A closure evaluable on a strip around the real axis.
pub struct AnalyticFn {
    label: String,
    sign: f64,
    strip: f64,
    f: Box<ClosureFn>,
}

/// A smooth function on the circle, or on its double cover when antiperiodic.
#[derive(Clone)]
pub enum PeriodicFn {
    /// Periodic trigonometric polynomial.
    Trig(TrigPoly),
    /// `g(θ) = P(θ/2)`: a 4π-periodic function, used for antiperiodic objects.
    Cover(TrigPoly),
    /// Closed-form closure with a known period sign and strip of analyticity.
    Analytic(Arc<AnalyticFn>),
}

impl fmt::Debug for PeriodicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodicFn::Trig(p) => write!(f, "Trig(degree {})", p.degree()),
            PeriodicFn::Cover(p) => write!(f, "Cover(degree {})", p.degree()),
            PeriodicFn::Analytic(a) => write!(f, "Analytic({}, sign {})", a.label, a.sign),
        }
    }
}

impl From<TrigPoly> for PeriodicFn {
    fn from(p: TrigPoly) -> Self {
        PeriodicFn::Trig(p)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

impl PeriodicFn {
    /// Wraps a closure. `sign` is `+1` for periodic and `-1` for antiperiodic
    /// functions; `strip` bounds the half-width of the analyticity strip.
    pub fn analytic<F>(label: impl Into<String>, sign: f64, strip: f64, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        PeriodicFn::Analytic(Arc::new(AnalyticFn { label: label.into(), sign, strip, f: Box::new(f) }))
    }

    pub fn zero() -> Self {
        PeriodicFn::Trig(TrigPoly::zero())
    }

    pub fn constant(c: f64) -> Self {
        PeriodicFn::Trig(TrigPoly::constant(c))
    }

    /// `+1` if periodic, `-1` if antiperiodic.
    pub fn period_sign(&self) -> f64 {
        match self {
            PeriodicFn::Trig(_) => 1.0,
            PeriodicFn::Cover(p) => {
                let n = p.degree() as i64;
                let odd: f64 = (-n..=n).filter(|m| m % 2 != 0).map(|m| p.coeff(m).norm()).sum();
                let even: f64 = (-n..=n).filter(|m| m % 2 == 0).map(|m| p.coeff(m).norm()).sum();
                if odd > even {
                    -1.0
                } else {
                    1.0
                }
            }
            PeriodicFn::Analytic(a) => a.sign,
        }
    }

    /// Half-width of the strip on which evaluation is trusted.
    pub fn strip(&self) -> f64 {
        match self {
            PeriodicFn::Analytic(a) => a.strip,
            _ => f64::INFINITY,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            PeriodicFn::Trig(p) => p.eval(z),
            PeriodicFn::Cover(p) => p.eval(z * 0.5),
            PeriodicFn::Analytic(a) => (a.f)(z),
        }
    }

    pub fn re(&self, theta: f64) -> f64 {
        self.eval(Complex64::new(theta, 0.0)).re
    }

    /// k-th derivative: exact for Fourier forms, Cauchy-circle trapezoid otherwise.
    pub fn deriv(&self, z: Complex64, k: usize) -> Complex64 {
        if k == 0 {
            return self.eval(z);
        }
        match self {
            PeriodicFn::Trig(p) => p.derivative_n(k).eval(z),
            PeriodicFn::Cover(p) => p.derivative_n(k).eval(z * 0.5) / 2f64.powi(k as i32),
            PeriodicFn::Analytic(a) => {
                let r = 0.05f64.min(a.strip / 3.0);
                let m = 32;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..m {
                    let w = (I * (TWO_PI * j as f64 / m as f64)).exp();
                    acc += (a.f)(z + w * r) * w.powi(-(k as i32));
                }
                acc * factorial(k) / (m as f64 * r.powi(k as i32))
            }
        }
    }

    /// Exact-derivative form when available.
    pub fn derivative(&self) -> PeriodicFn {
        match self {
            PeriodicFn::Trig(p) => PeriodicFn::Trig(p.derivative()),
            PeriodicFn::Cover(p) => PeriodicFn::Cover(p.derivative().scale_re(0.5)),
            PeriodicFn::Analytic(_) => {
                let g = self.clone();
                PeriodicFn::analytic("derivative", self.period_sign(), self.strip() * 0.6, move |z| g.deriv(z, 1))
            }
        }
    }

    /// Projects onto a Fourier form: `Trig` for periodic functions, `Cover` for antiperiodic ones.
    pub fn project(&self, m: usize) -> PeriodicFn {
        match self {
            PeriodicFn::Analytic(_) => {
                if self.period_sign() > 0.0 {
                    PeriodicFn::Trig(TrigPoly::project(|t| self.eval(Complex64::new(t, 0.0)), m))
                } else {
                    PeriodicFn::Cover(TrigPoly::project(|t| self.eval(Complex64::new(2.0 * t, 0.0)), 2 * m))
                }
            }
            other => other.clone(),
        }
    }

    /// Periodic Fourier form, or `None` if the function is antiperiodic.
    pub fn as_trig(&self, m: usize) -> Option<TrigPoly> {
        match self.project(m) {
            PeriodicFn::Trig(p) => Some(p),
            _ => None,
        }
    }

    pub fn scale(&self, s: Complex64) -> PeriodicFn {
        match self {
            PeriodicFn::Trig(p) => PeriodicFn::Trig(p.scale(s)),
            PeriodicFn::Cover(p) => PeriodicFn::Cover(p.scale(s)),
            PeriodicFn::Analytic(a) => {
                let g = self.clone();
                PeriodicFn::analytic(a.label.clone(), a.sign, a.strip, move |z| g.eval(z) * s)
            }
        }
    }

    /// Pointwise sum; both operands must share the period sign.
    pub fn add(&self, other: &PeriodicFn) -> Result<PeriodicFn> {
        if self.period_sign() != other.period_sign() {
            return Err(Error::InvalidInput("adding functions of opposite period sign".into()));
        }
        Ok(match (self, other) {
            (PeriodicFn::Trig(a), PeriodicFn::Trig(b)) => PeriodicFn::Trig(a.add(b)),
            (PeriodicFn::Cover(a), PeriodicFn::Cover(b)) => PeriodicFn::Cover(a.add(b)),
            _ => {
                let (f, g) = (self.clone(), other.clone());
                let strip = self.strip().min(other.strip());
                PeriodicFn::analytic("sum", self.period_sign(), strip, move |z| f.eval(z) + g.eval(z))
            }
        })
    }

    /// Maximum modulus over `m` uniform samples of `[0, 2π)`.
    pub fn max_abs(&self, m: usize) -> f64 {
        (0..m).map(|j| self.eval(Complex64::new(TWO_PI * j as f64 / m as f64, 0.0)).norm()).fold(0.0, f64::max)
    }

    /// True when the real-axis values are real within `tol` (relative).
    pub fn is_real(&self, tol: f64) -> bool {
        let m = 64;
        let vals: Vec<Complex64> = (0..m).map(|j| self.eval(Complex64::new(TWO_PI * j as f64 / m as f64, 0.0))).collect();
        let scale = vals.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        vals.iter().all(|v| v.im.abs() <= tol * scale)
    }
}

/// Which half-plane a small semicircle bypasses a zero through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Upper,
    Lower,
}

/// Isolated zero of a real periodic profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusZero {
    pub theta: f64,
    pub multiplicity: u8,
    pub half: Option<Half>,
}

/// Options for [`find_zeros`].
#[derive(Debug, Clone, Copy)]
pub struct ZeroOptions {
    pub zero_tol: f64,
    pub double_slope_tol: f64,
    pub min_grid: usize,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions { zero_tol: 1e-10, double_slope_tol: 1e-6, min_grid: 128 }
    }
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TWO_PI);
    if t >= TWO_PI - 1e-13 {
        0.0
    } else {
        t
    }
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Finds the zeros of a real trigonometric polynomial on `[0, 2π)` and
/// classifies each as simple or double. Tolerances are relative to `max|p|`.
pub fn find_zeros(p: &TrigPoly, opts: ZeroOptions) -> Result<Vec<TorusZero>> {
    let pr = p.real_part();
    let dp = pr.derivative();
    let ddp = dp.derivative();
    let m = (4 * (pr.degree() + 1)).max(opts.min_grid);
    let xs: Vec<f64> = (0..=m).map(|j| TWO_PI * j as f64 / m as f64).collect();
    let f = |t: f64| pr.eval_re(t);
    let fs: Vec<f64> = xs.iter().map(|&t| f(t)).collect();
    let scale = fs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidInput("identically zero profile".into()));
    }
    let dscale = dp.max_abs(m).max(scale);
    let mut zeros: Vec<TorusZero> = Vec::new();
    let push = |z: TorusZero, zeros: &mut Vec<TorusZero>| {
        let t = wrap(z.theta);
        let dup = zeros.iter().any(|w| {
            let d = (w.theta - t).abs();
            d.min(TWO_PI - d) < 1e-7
        });
        if !dup {
            zeros.push(TorusZero { theta: t, ..z });
        }
    };
    // simple zeros: sign changes
    for j in 0..m {
        let (a, b) = (fs[j], fs[j + 1]);
        if a == 0.0 {
            let prev = fs[(j + m - 1) % m];
            if prev * b < 0.0 {
                push(TorusZero { theta: xs[j], multiplicity: 1, half: None }, &mut zeros);
            }
            continue;
        }
        if a * b < 0.0 {
            let mut t = bisect(&f, xs[j], xs[j + 1]);
            for _ in 0..3 {
                let d = dp.eval_re(t);
                if d != 0.0 {
                    let step = f(t) / d;
                    if step.abs() < 1e-6 {
                        t -= step;
                    }
                }
            }
            let slope = dp.eval_re(t).abs();
            if slope < opts.double_slope_tol * dscale {
                // a double zero split by round-off into two nearby sign changes
                let h = TWO_PI / m as f64;
                let g = |t: f64| dp.eval_re(t);
                let (lo, hi) = (t - h, t + h);
                let te = if g(lo) * g(hi) < 0.0 { bisect(&g, lo, hi) } else { t };
                if f(te).abs() <= opts.zero_tol * scale && ddp.eval_re(te).abs() >= opts.double_slope_tol * dscale {
                    push(TorusZero { theta: te, multiplicity: 2, half: None }, &mut zeros);
                    continue;
                }
                return Err(Error::ZeroResolution { theta: t, value: f(t).abs(), slope });
            }
            push(TorusZero { theta: t, multiplicity: 1, half: None }, &mut zeros);
        }
    }
    // double zeros: local minima of |p| without a sign change
    for j in 0..m {
        let prev = fs[(j + m - 1) % m];
        let cur = fs[j];
        let next = fs[j + 1];
        if cur.abs() > prev.abs() || cur.abs() > next.abs() {
            continue;
        }
        if prev * cur < 0.0 || cur * next < 0.0 || prev * next < 0.0 {
            continue;
        }
        if cur.abs() > 1e-2 * scale {
            continue;
        }
        let lo = xs[j] - TWO_PI / m as f64;
        let hi = xs[j] + TWO_PI / m as f64;
        let g = |t: f64| dp.eval_re(t);
        let t = if g(lo) * g(hi) < 0.0 { bisect(&g, lo, hi) } else { xs[j] };
        let val = f(t).abs();
        let slope = dp.eval_re(t).abs();
        if val <= opts.zero_tol * scale && slope < opts.double_slope_tol * dscale {
            if ddp.eval_re(t).abs() < opts.double_slope_tol * dscale {
                return Err(Error::ZeroResolution { theta: t, value: val, slope });
            }
            push(TorusZero { theta: t, multiplicity: 2, half: None }, &mut zeros);
        } else if val < 1e-6 * scale {
            return Err(Error::ZeroResolution { theta: t, value: val, slope });
        }
    }
    zeros.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    Ok(zeros)
}

/// One piece of a regularizing contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment { a: f64, b: f64 },
    HalfCircle { center: f64, radius: f64, half: Half },
}

impl Piece {
    /// Point and tangent at the local parameter `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Piece::Segment { a, b } => (Complex64::new(a + t * (b - a), 0.0), Complex64::new(b - a, 0.0)),
            Piece::HalfCircle { center, radius, half } => {
                let s = if half == Half::Upper { -1.0 } else { 1.0 };
                let e = (I * (s * PI * t)).exp();
                (center - radius * e, -I * s * PI * radius * e)
            }
        }
    }
}

/// Closed path from `start` to `start + 2π` along the real axis, detouring
/// through semicircles around marked zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub start: f64,
    pub radius: f64,
    pub pieces: Vec<Piece>,
}

impl Contour {
    /// Builds the contour for zeros with assigned halves. The start point sits
    /// mid-way in the widest gap; the radius is `min(0.1, gap/4)`.
    pub fn build(zeros: &[TorusZero]) -> Result<Contour> {
        if zeros.is_empty() {
            return Ok(Contour { start: 0.0, radius: 0.0, pieces: vec![Piece::Segment { a: 0.0, b: TWO_PI }] });
        }
        let mut th: Vec<(f64, Half)> = zeros
            .iter()
            .map(|z| (z.theta, z.half.unwrap_or(Half::Upper)))
            .collect();
        th.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let k = th.len();
        let mut min_gap = f64::INFINITY;
        let mut widest = (0usize, 0.0f64);
        for j in 0..k {
            let next = if j + 1 < k { th[j + 1].0 } else { th[0].0 + TWO_PI };
            let gap = next - th[j].0;
            min_gap = min_gap.min(gap);
            if gap > widest.1 {
                widest = (j, gap);
            }
        }
        let radius = (0.1f64).min(min_gap / 4.0);
        let start = th[widest.0].0 + 0.5 * widest.1;
        let mut ordered: Vec<(f64, Half)> = th
            .iter()
            .map(|&(t, h)| (if t < start { t + TWO_PI } else { t }, h))
            .collect();
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut pieces = Vec::new();
        let mut cur = start;
        for &(t, h) in &ordered {
            pieces.push(Piece::Segment { a: cur, b: t - radius });
            pieces.push(Piece::HalfCircle { center: t, radius, half: h });
            cur = t + radius;
        }
        pieces.push(Piece::Segment { a: cur, b: start + TWO_PI });
        Ok(Contour { start, radius, pieces })
    }

    /// `∮ g(z) dz` along the contour.
    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, g: F, rtol: f64) -> Complex64 {
        self.pieces
            .iter()
            .map(|p| match *p {
                Piece::Segment { a, b } => quad::integrate(|x| g(Complex64::new(x, 0.0)), a, b, rtol).value,
                _ => {
                    quad::integrate(
                        |t| {
                            let (z, dz) = p.point(t);
                            g(z) * dz
                        },
                        0.0,
                        1.0,
                        rtol,
                    )
                    .value
                }
            })
            .sum()
    }

    /// Points sampled along the contour, `per_piece` per piece (endpoints included once).
    pub fn sample_points(&self, per_piece: usize) -> Vec<Complex64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for j in 0..per_piece {
                out.push(p.point(j as f64 / per_piece as f64).0);
            }
        }
        out.push(Complex64::new(self.start + TWO_PI, 0.0));
        out
    }
}

/// Regularization used to integrate `1/ξ` when ξ vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    /// Plain integral; ξ must be zero-free.
    Direct,
    /// Principal value through simple zeros.
    PrincipalValue,
    /// Semicircles through the half-plane where `Re ξ ≥ 0`; simple zeros only.
    ContourHyperbolic,
    /// Upper semicircles around double zeros.
    ContourUnipotent,
}

/// Value of `∫ dθ/ξ` with the data used to regularize it.
#[derive(Debug, Clone)]
pub struct XiIntegral {
    pub value: Complex64,
    pub zeros: Vec<TorusZero>,
    pub contour: Option<Contour>,
}

/// Splits `ξ` into a real profile and the flag telling whether `ξ = i·profile`.
pub fn real_profile(xi: &TrigPoly) -> Result<(TrigPoly, bool)> {
    if xi.is_real(1e-9) {
        Ok((xi.real_part(), false))
    } else {
        let p = xi.scale(-I);
        if p.is_real(1e-9) {
            Ok((p.real_part(), true))
        } else {
            Err(Error::RegularizationMismatch("ξ is neither real nor purely imaginary".into()))
        }
    }
}

/// Picks, for each zero, the half-plane where `Re ξ ≥ 0` just off the axis.
pub fn hyperbolic_halves(xi: &TrigPoly, zeros: &[TorusZero], eps: f64) -> Vec<TorusZero> {
    zeros
        .iter()
        .map(|z| {
            let up = xi.eval(Complex64::new(z.theta, eps)).re;
            let down = xi.eval(Complex64::new(z.theta, -eps)).re;
            TorusZero { half: Some(if up >= down { Half::Upper } else { Half::Lower }), ..*z }
        })
        .collect()
}

/// `∫_0^{2π} dθ/ξ` with the requested regularization.
pub fn xi_integral(xi: &TrigPoly, mode: XiMode, zero_opts: ZeroOptions, rtol: f64) -> Result<XiIntegral> {
    let (profile, _) = real_profile(xi)?;
    let zeros = find_zeros(&profile, zero_opts)?;
    let g = |z: Complex64| 1.0 / xi.eval(z);
    match mode {
        XiMode::Direct => {
            if !zeros.is_empty() {
                return Err(Error::RegularizationMismatch("ξ vanishes; direct integral undefined".into()));
            }
            let v = quad::integrate(|t| g(Complex64::new(t, 0.0)), 0.0, TWO_PI, rtol).value;
            Ok(XiIntegral { value: v, zeros, contour: None })
        }
        XiMode::PrincipalValue => {
            if zeros.iter().any(|z| z.multiplicity != 1) {
                return Err(Error::RegularizationMismatch("principal value needs simple zeros".into()));
            }
            let contour = Contour::build(&zeros)?;
            let eps = contour.radius;
            let mut v = Complex64::new(0.0, 0.0);
            for p in &contour.pieces {
                match *p {
                    Piece::Segment { a, b } => {
                        v += quad::integrate(|t| g(Complex64::new(t, 0.0)), a, b, rtol).value;
                    }
                    Piece::HalfCircle { center, .. } => {
                        v += quad::composite(
                            |h| g(Complex64::new(center + h, 0.0)) + g(Complex64::new(center - h, 0.0)),
                            0.0,
                            eps,
                            6,
                        );
                    }
                }
            }
            Ok(XiIntegral { value: v, zeros, contour: Some(contour) })
        }
        XiMode::ContourHyperbolic => {
            if zeros.iter().any(|z| z.multiplicity != 1) {
                return Err(Error::RegularizationMismatch("hyperbolic contour needs simple zeros".into()));
            }
            let probe = Contour::build(&zeros)?.radius.max(1e-3);
            let marked = hyperbolic_halves(xi, &zeros, probe);
            let contour = Contour::build(&marked)?;
            let v = contour.integrate(g, rtol);
            Ok(XiIntegral { value: v, zeros: marked, contour: Some(contour) })
        }
        XiMode::ContourUnipotent => {
            if zeros.iter().any(|z| z.multiplicity != 2) {
                return Err(Error::RegularizationMismatch("unipotent contour needs double zeros".into()));
            }
            let marked: Vec<TorusZero> = zeros.iter().map(|z| TorusZero { half: Some(Half::Upper), ..*z }).collect();
            let contour = Contour::build(&marked)?;
            let v = contour.integrate(g, rtol);
            Ok(XiIntegral { value: v, zeros: marked, contour: Some(contour) })
        }
    }
}
