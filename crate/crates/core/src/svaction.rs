//! The Schrödinger–Virasoro group acting on operators
//! `D = −2i∂_θ − ∂_x² + V₂x² + V₁x + V₀`, the representation `π_λ` on wave
//! functions, orbit classification and the vector invariant `(ξ, δ₁, δ₂)`.
//!
//! Conventions: `act` is the pullback action. The diffeomorphism part sends
//! `V₂ ↦ φ′²V₂∘φ + ½Θ(φ)`; the invariant transforms as `ξ ↦ ξ∘φ/φ′`.

use crate::error::{Error, Result};
use crate::fnspace::{find_zeros, PeriodicFn, TrigPoly, XiMode, TWO_PI};
use crate::hill::{self, samples_to_fn, ClassTag, FloquetData, HillOperator, MonodromyClass};
use crate::pdeoracle::SpaceGrid;
use crate::stabilizer::{periodic_stabilizer, Stabilizer, StabilizerKind};
use crate::Settings;
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const PROJ_SAMPLES: usize = 1024;

fn cre(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Time-periodic Schrödinger operator `−2i∂_θ − ∂_x² + V₂x² + V₁x + V₀`.
#[derive(Debug, Clone)]
pub struct SchrodingerOp {
    pub v2: PeriodicFn,
    pub v1: PeriodicFn,
    pub v0: PeriodicFn,
}

impl SchrodingerOp {
    /// `V₂` and `V₀` must be periodic; `V₁` may be antiperiodic.
    pub fn new(v2: PeriodicFn, v1: PeriodicFn, v0: PeriodicFn) -> Result<Self> {
        if v2.period_sign() < 0.0 || v0.period_sign() < 0.0 {
            return Err(Error::InvalidInput("V2 and V0 must be periodic".into()));
        }
        for (name, v) in [("V2", &v2), ("V1", &v1), ("V0", &v0)] {
            if !v.is_real(1e-9) {
                return Err(Error::InvalidInput(format!("{name} must be real")));
            }
        }
        Ok(SchrodingerOp { v2, v1, v0 })
    }

    /// `D_{α,γ} = −2i∂_θ − ∂_x² + αx² + γ`.
    pub fn model(alpha: f64, gamma: f64) -> Self {
        SchrodingerOp { v2: PeriodicFn::constant(alpha), v1: PeriodicFn::zero(), v0: PeriodicFn::constant(gamma) }
    }

    pub fn hill(&self) -> Result<HillOperator> {
        HillOperator::new(self.v2.clone())
    }

    /// `V(θ, x) = V₂x² + V₁x + V₀` on the real axis.
    pub fn potential(&self, theta: f64, x: f64) -> f64 {
        self.v2.re(theta) * x * x + self.v1.re(theta) * x + self.v0.re(theta)
    }
}

/// Element `(φ; (a, b))` with `φ(θ) = θ + p(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub p: TrigPoly,
    pub a: TrigPoly,
    pub b: TrigPoly,
    /// Error introduced when this element was re-projected onto Fourier series.
    pub projection_error: f64,
}

fn min_slope(p: &TrigPoly) -> f64 {
    let d = p.derivative();
    (0..PROJ_SAMPLES).map(|j| 1.0 + d.eval_re(TWO_PI * j as f64 / PROJ_SAMPLES as f64)).fold(f64::INFINITY, f64::min)
}

impl GroupElement {
    pub fn new(p: TrigPoly, a: TrigPoly, b: TrigPoly) -> Result<Self> {
        for (name, f) in [("p", &p), ("a", &a), ("b", &b)] {
            if !f.is_real(1e-12) {
                return Err(Error::InvalidInput(format!("{name} must be real")));
            }
        }
        let m = min_slope(&p);
        if m <= 0.0 {
            return Err(Error::NotADiffeomorphism { min_slope: m });
        }
        Ok(GroupElement { p: p.real_part(), a: a.real_part(), b: b.real_part(), projection_error: 0.0 })
    }

    pub fn identity() -> Self {
        GroupElement { p: TrigPoly::zero(), a: TrigPoly::zero(), b: TrigPoly::zero(), projection_error: 0.0 }
    }

    pub fn diffeo(p: TrigPoly) -> Result<Self> {
        Self::new(p, TrigPoly::zero(), TrigPoly::zero())
    }

    pub fn nilpotent(a: TrigPoly, b: TrigPoly) -> Result<Self> {
        Self::new(TrigPoly::zero(), a, b)
    }

    pub fn phi(&self, z: Complex64) -> Complex64 {
        z + self.p.eval(z)
    }

    pub fn dphi(&self, z: Complex64) -> Complex64 {
        1.0 + self.p.derivative().eval(z)
    }

    /// Inverse element: `φ⁻¹` by Newton iteration on a grid, `(a, b)` transformed accordingly.
    pub fn inverse(&self) -> Result<GroupElement> {
        let dp = self.p.derivative();
        let inv_at = |t: f64| -> f64 {
            let mut x = t - self.p.eval_re(t);
            for _ in 0..60 {
                let fx = x + self.p.eval_re(x) - t;
                let step = fx / (1.0 + dp.eval_re(x));
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            x
        };
        let m = PROJ_SAMPLES;
        let q_samples: Vec<Complex64> = (0..m)
            .map(|j| {
                let t = TWO_PI * j as f64 / m as f64;
                cre(inv_at(t) - t)
            })
            .collect();
        let q = TrigPoly::from_samples(&q_samples).real_part().chop(1e-14);
        let psi = |t: f64| t + q.eval_re(t);
        let a_inv = TrigPoly::project(
            |t| {
                let x = psi(t);
                cre(-(1.0 + dp.eval_re(x)).sqrt() * self.a.eval_re(x))
            },
            m,
        )
        .real_part();
        let b_inv = TrigPoly::project(|t| cre(-self.b.eval_re(psi(t))), m).real_part();
        let err = (0..97)
            .map(|j| {
                let t = TWO_PI * (j as f64 + 0.37) / 97.0;
                (self.phi(cre(psi(t))).re - t).abs()
            })
            .fold(0.0, f64::max);
        let mut g = GroupElement::new(q, a_inv, b_inv)?;
        g.projection_error = err.max(self.projection_error);
        Ok(g)
    }

    /// `self · first`: the element acting as `first` followed by `self`.
    pub fn compose_after(&self, first: &GroupElement) -> Result<GroupElement> {
        let (g2, g1) = (self, first);
        let dp2 = g2.p.derivative();
        let m = PROJ_SAMPLES;
        let phi2 = |t: f64| t + g2.p.eval_re(t);
        let p = TrigPoly::project(|t| cre(g2.p.eval_re(t) + g1.p.eval_re(phi2(t))), m).real_part();
        let a1t = TrigPoly::project(|t| cre((1.0 + dp2.eval_re(t)).powf(-0.5) * g1.a.eval_re(phi2(t))), m).real_part();
        let b1t = TrigPoly::project(|t| cre(g1.b.eval_re(phi2(t))), m).real_part();
        let da1t = a1t.derivative();
        let da2 = g2.a.derivative();
        let cross = TrigPoly::project(
            |t| cre(0.5 * (a1t.eval_re(t) * da2.eval_re(t) - g2.a.eval_re(t) * da1t.eval_re(t))),
            m,
        )
        .real_part();
        let a = a1t.add(&g2.a);
        let b = b1t.add(&g2.b).add(&cross);
        let tail = p.tail_ratio().max(a.tail_ratio()).max(b.tail_ratio());
        let mut g = GroupElement::new(p, a, b)?;
        g.projection_error = tail.max(g1.projection_error).max(g2.projection_error);
        Ok(g)
    }
}

/// Infinitesimal generator `L_f + Y_g + M_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfinitesimalElement {
    pub f: TrigPoly,
    pub g: TrigPoly,
    pub h: TrigPoly,
}

impl InfinitesimalElement {
    /// First-order group element `exp(εX)` in the convention of [`infinitesimal_act`].
    pub fn exp_first_order(&self, eps: f64) -> Result<GroupElement> {
        GroupElement::new(self.f.scale_re(-eps), self.g.scale_re(eps), self.h.scale_re(eps))
    }
}

/// `Θ(φ) = φ‴/φ′ − (3/2)(φ″/φ′)²`.
pub fn schwarzian(g: &GroupElement) -> Result<PeriodicFn> {
    let m = min_slope(&g.p);
    if m <= 0.0 {
        return Err(Error::NotADiffeomorphism { min_slope: m });
    }
    let d1 = g.p.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    Ok(PeriodicFn::analytic("schwarzian", 1.0, 1.0, move |z| {
        let f1 = 1.0 + d1.eval(z);
        let f2 = d2.eval(z);
        d3.eval(z) / f1 - 1.5 * (f2 / f1).powi(2)
    }))
}

/// The pullback action: diffeomorphism part first, then the nilpotent part.
pub fn act(g: &GroupElement, d: &SchrodingerOp) -> Result<SchrodingerOp> {
    let theta = schwarzian(g)?;
    let nil_trivial = g.a.max_coeff() == 0.0;
    if d.v1.period_sign() < 0.0 && !nil_trivial {
        return Err(Error::InvalidInput("a periodic translation cannot act on an antiperiodic V1".into()));
    }
    let p = g.p.clone();
    let dp = p.derivative();
    let strip = d.v2.strip().min(d.v1.strip()).min(d.v0.strip()).min(1.0);
    let (v2, v1, v0) = (d.v2.clone(), d.v1.clone(), d.v0.clone());
    let (p2, dp2) = (p.clone(), dp.clone());
    let w2 = PeriodicFn::analytic("act V2", 1.0, strip, move |z| {
        let f1 = 1.0 + dp2.eval(z);
        f1 * f1 * v2.eval(z + p2.eval(z)) + 0.5 * theta.eval(z)
    });
    let (p1, dp1) = (p.clone(), dp.clone());
    let w1 = PeriodicFn::analytic("act V1", d.v1.period_sign(), strip, move |z| {
        let f1 = 1.0 + dp1.eval(z);
        f1 * f1.sqrt() * v1.eval(z + p1.eval(z))
    });
    let (p0, dp0) = (p, dp);
    let w0 = PeriodicFn::analytic("act V0", 1.0, strip, move |z| {
        (1.0 + dp0.eval(z)) * v0.eval(z + p0.eval(z))
    });
    if nil_trivial && g.b.max_coeff() == 0.0 {
        return Ok(SchrodingerOp { v2: w2, v1: w1, v0: w0 });
    }
    let a = g.a.clone();
    let dda = a.derivative().derivative();
    let db = g.b.derivative();
    let (a1, dda1, w2c) = (a.clone(), dda.clone(), w2.clone());
    let n1 = PeriodicFn::analytic("act V1", w1.period_sign(), strip, {
        let w1 = w1.clone();
        move |z| w1.eval(z) - 2.0 * a1.eval(z) * w2c.eval(z) - 2.0 * dda1.eval(z)
    });
    let w2c = w2.clone();
    let n0 = PeriodicFn::analytic("act V0", 1.0, strip, move |z| {
        let av = a.eval(z);
        w0.eval(z) - av * w1.eval(z) + av * av * w2c.eval(z) - 2.0 * db.eval(z) + av * dda.eval(z)
    });
    Ok(SchrodingerOp { v2: w2, v1: n1, v0: n0 })
}

/// Increments `(δV₂, δV₁, δV₀)` under the generator `X`.
pub fn infinitesimal_act(x: &InfinitesimalElement, d: &SchrodingerOp) -> (PeriodicFn, PeriodicFn, PeriodicFn) {
    let (f, g, h) = (x.f.clone(), x.g.clone(), x.h.clone());
    let strip = d.v2.strip().min(d.v1.strip()).min(d.v0.strip());
    let v2 = d.v2.clone();
    let (f2, f3) = (f.clone(), f.derivative_n(3));
    let df = f.derivative();
    let df2 = df.clone();
    let i2 = PeriodicFn::analytic("dV2", 1.0, strip, move |z| {
        -(0.5 * f3.eval(z) + 2.0 * df2.eval(z) * v2.eval(z) + f2.eval(z) * v2.deriv(z, 1))
    });
    let (v1, v2) = (d.v1.clone(), d.v2.clone());
    let (f1, df1, g1, ddg) = (f.clone(), df.clone(), g.clone(), g.derivative_n(2));
    let i1 = PeriodicFn::analytic("dV1", d.v1.period_sign(), strip, move |z| {
        -(f1.eval(z) * v1.deriv(z, 1) + 1.5 * df1.eval(z) * v1.eval(z)) - 2.0 * (ddg.eval(z) + g1.eval(z) * v2.eval(z))
    });
    let (v0, v1) = (d.v0.clone(), d.v1.clone());
    let dh = h.derivative();
    let i0 = PeriodicFn::analytic("dV0", 1.0, strip, move |z| {
        -(f.eval(z) * v0.deriv(z, 1) + df.eval(z) * v0.eval(z)) - (2.0 * dh.eval(z) + g.eval(z) * v1.eval(z))
    });
    (i2, i1, i0)
}

/// Output of [`apply_pi`].
#[derive(Debug, Clone)]
pub struct PiOutput {
    pub psi: Vec<Complex64>,
    /// Fraction of the input mass that falls outside the image of the grid.
    pub clipped: f64,
}

/// Spectral interpolation of grid values at an arbitrary point of the box.
pub(crate) struct FourierInterpolant {
    coeffs: Vec<Complex64>,
    l: f64,
}

impl FourierInterpolant {
    pub(crate) fn new(values: &[Complex64], l: f64) -> Self {
        let mut buf = values.to_vec();
        crate::fnspace::fft_forward(&mut buf);
        let n = buf.len() as f64;
        FourierInterpolant { coeffs: buf.into_iter().map(|c| c / n).collect(), l }
    }

    pub(crate) fn eval(&self, y: f64) -> Complex64 {
        if y < -self.l || y >= self.l {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.coeffs.len();
        let w = (I * (PI * (y + self.l) / self.l)).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for k in 0..n / 2 {
            acc += self.coeffs[k] * pw;
            pw *= w;
        }
        let winv = w.conj();
        let mut pw = winv;
        for k in 1..n / 2 {
            acc += self.coeffs[n - k] * pw;
            pw *= winv;
        }
        acc
    }
}

/// `π_λ(g)` on one time slice. `slice` holds `ψ(φ(θ), ·)` on the grid; the
/// result is the transformed function at time `θ`:
/// `ψ̃(θ,x) = e^{i(a′x − ½aa′ + b)} φ′^λ e^{−(i/4)(φ″/φ′)(x−a)²} ψ(φ(θ), (x−a)√φ′)`.
pub fn apply_pi(g: &GroupElement, lambda: f64, theta: f64, slice: &[Complex64], grid: &SpaceGrid) -> Result<PiOutput> {
    if slice.len() != grid.nx {
        return Err(Error::InvalidInput("slice length does not match the grid".into()));
    }
    let t = cre(theta);
    let d1 = g.p.derivative();
    let f1 = 1.0 + d1.eval(t).re;
    if f1 <= 0.0 {
        return Err(Error::NotADiffeomorphism { min_slope: f1 });
    }
    let f2 = d1.derivative().eval(t).re;
    let a = g.a.eval(t).re;
    let da = g.a.derivative().eval(t).re;
    let b = g.b.eval(t).re;
    let sq = f1.sqrt();
    let interp = FourierInterpolant::new(slice, grid.l);
    let xs = grid.xs();
    let psi: Vec<Complex64> = xs
        .iter()
        .map(|&x| {
            let y = (x - a) * sq;
            let phase = da * x - 0.5 * a * da + b - 0.25 * (f2 / f1) * (x - a) * (x - a);
            interp.eval(y) * f1.powf(lambda) * (I * phase).exp()
        })
        .collect();
    let lo = (xs[0] - a) * sq;
    let hi = (xs[grid.nx - 1] - a) * sq;
    let total: f64 = slice.iter().map(|c| c.norm_sqr()).sum();
    let lost: f64 = xs
        .iter()
        .zip(slice)
        .filter(|(y, _)| **y < lo - grid.dx() || **y > hi + grid.dx())
        .map(|(_, c)| c.norm_sqr())
        .sum();
    let clipped = if total > 0.0 { lost / total } else { 0.0 };
    if clipped > 1e-6 {
        return Err(Error::GridOverflow { clipped });
    }
    Ok(PiOutput { psi, clipped })
}

/// Orbit class with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitTag {
    /// `αx² + γ` (α < 0 allowed).
    Ci { alpha: f64, gamma: f64 },
    /// `n²x² + C cos(nθ − σ/2)x + γ`.
    CiBis { n: u32, c: f64, sigma: f64, gamma: f64 },
    /// `u_{n,α}x² + γ`.
    Cii { n: u32, alpha: f64, gamma: f64 },
    /// `v_{n,α}x² + γ`.
    Ciii { n: u32, alpha: f64, gamma: f64 },
    /// `v_{n,α}x² + C f x + γ` with `f` the periodic kernel element.
    CiiiBis { n: u32, alpha: f64, c: f64, gamma: f64 },
}

impl OrbitTag {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitTag::Ci { .. } => "i",
            OrbitTag::CiBis { .. } => "ibis",
            OrbitTag::Cii { .. } => "ii",
            OrbitTag::Ciii { .. } => "iii",
            OrbitTag::CiiiBis { .. } => "iiibis",
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            OrbitTag::Ci { gamma, .. }
            | OrbitTag::CiBis { gamma, .. }
            | OrbitTag::Cii { gamma, .. }
            | OrbitTag::Ciii { gamma, .. }
            | OrbitTag::CiiiBis { gamma, .. } => gamma,
        }
    }
}

/// Classification data for a Schrödinger operator.
#[derive(Debug, Clone)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    /// Class (i) with monodromy neither `±Id` nor unipotent.
    pub generic: bool,
    pub hill: MonodromyClass,
    /// Stabilizer of `∂² + V₂` (normalized to `I = 2` unless `I = 0`).
    pub stabilizer: Stabilizer,
    /// `∫dθ/ξ` with the regularization matching the zero structure.
    pub t_integral: Complex64,
    /// Kernel functions of `∂² + V₂` with the period sign of `V₁` and the pairings `∫V₁κ`.
    pub kernel: Vec<(PeriodicFn, f64)>,
}

pub(crate) fn l2_dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum::<f64>() * TWO_PI / n as f64
}

pub(crate) fn sample_fn(f: &PeriodicFn, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&t| f.re(t)).collect()
}

/// Kernel of `∂² + V₂` with period sign `sign`, as coefficient vectors in the Floquet basis.
pub(crate) fn kernel_vectors(fl: &FloquetData, sign: f64) -> Vec<[f64; 2]> {
    let a = fl.phi() - nalgebra::Matrix2::identity() * sign;
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max().max(1.0);
    (0..2)
        .filter(|&i| svd.singular_values[i] < 1e-8 * smax)
        .map(|i| [vt[(i, 0)], vt[(i, 1)]])
        .collect()
}

fn kernel_samples(fl: &FloquetData, v: &[f64; 2]) -> Vec<f64> {
    fl.psi1.iter().zip(&fl.psi2).map(|(a, b)| v[0] * a[0] + v[1] * b[0]).collect()
}

/// Periodic solution of `(∂² + V₂)W = V₁⊥`, where `V₁⊥` is `V₁` with its
/// kernel components removed. Returns `(W samples, V₁⊥ samples, pairings)`.
fn solve_w1(
    h: &HillOperator,
    fl: &FloquetData,
    v1: &PeriodicFn,
    s: &Settings,
) -> Result<(Vec<f64>, Vec<f64>, Vec<(PeriodicFn, f64)>)> {
    let sign = v1.period_sign();
    let vecs = kernel_vectors(fl, sign);
    let grid = &fl.grid;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &vecs {
        let mut k = kernel_samples(fl, v);
        for q in &basis {
            let p = l2_dot(&k, q);
            k.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
        let nrm = l2_dot(&k, &k).sqrt();
        k.iter_mut().for_each(|x| *x /= nrm);
        basis.push(k);
    }
    let v1s = sample_fn(v1, grid);
    let mut kernel = Vec::new();
    let mut fns = Vec::new();
    for k in &basis {
        let c = l2_dot(&v1s, k);
        let f = samples_to_fn(&k[..k.len() - 1], sign);
        kernel.push((f.clone(), c));
        fns.push((f, c));
    }
    let rhs = |t: f64| v1.re(t) - fns.iter().map(|(f, c)| c * f.re(t)).sum::<f64>();
    let sol = hill::periodic_solve(h, fl, rhs, sign, s)?;
    let v1p: Vec<f64> = grid.iter().map(|&t| rhs(t)).collect();
    Ok((sol.w, v1p, kernel))
}

/// `γ = (1/2π)∫(V₀ − ¼V₁W₁)` with the resonant part of `V₁` removed.
fn gamma_projected(d: &SchrodingerOp, h: &HillOperator, fl: &FloquetData, s: &Settings) -> Result<(f64, Vec<(PeriodicFn, f64)>)> {
    let grid = &fl.grid;
    let v0s = sample_fn(&d.v0, grid);
    let ones = vec![1.0; grid.len()];
    let mean_v0 = l2_dot(&v0s, &ones) / TWO_PI;
    if d.v1.max_abs(64) == 0.0 {
        return Ok((mean_v0, Vec::new()));
    }
    let (w, v1p, kernel) = solve_w1(h, fl, &d.v1, s)?;
    Ok((mean_v0 - 0.25 * l2_dot(&v1p, &w) / TWO_PI, kernel))
}

fn is_resonant(kernel: &[(PeriodicFn, f64)], v1: &PeriodicFn) -> bool {
    let scale = v1.max_abs(256).max(1e-300);
    kernel.iter().any(|(_, c)| c.abs() > 1e-7 * scale)
}

/// `γ` for operators whose `∂² + V₂` has no kernel resonant with `V₁`.
pub fn recover_gamma(d: &SchrodingerOp, s: &Settings) -> Result<f64> {
    let h = d.hill()?;
    let fl = hill::floquet(&h, s)?;
    let (g, kernel) = gamma_projected(d, &h, &fl, s)?;
    if !kernel.is_empty() {
        return Err(Error::ResonantOperator);
    }
    Ok(g)
}

/// Inverts `F(α) = mean(ξ_α)·∫_Γ dθ/ξ_α` for `ξ_α = (1 + sin θ)(1 + α sin θ)`.
fn type_iii_alpha(f_obs: f64) -> f64 {
    let f = |a: f64| -(1.0 + 0.5 * a) * 2.0 * PI * a / ((1.0 - a) * (1.0 - a * a).sqrt());
    let target = f_obs;
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if target >= 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classifies `D` into one of the five normal-form families.
pub fn classify_orbit(d: &SchrodingerOp, s: &Settings) -> Result<OrbitClass> {
    let h = d.hill()?;
    let rep = periodic_stabilizer(&h, s)?;
    let cls = rep.class;
    if cls.low_confidence && matches!(cls.tag, ClassTag::Elliptic | ClassTag::Hyperbolic) {
        return Err(Error::BoundaryClass(format!("trace {} is within tolerance of ±2", cls.trace)));
    }
    let st = rep.stabilizer;
    let fl = rep.floquet;
    let (gamma, kernel) = gamma_projected(d, &h, &fl, s)?;
    let resonant = is_resonant(&kernel, &d.v1);
    let xi = st.xi();
    let zo = s.zero_options();
    let (tag, t_integral, generic) = match st.kind {
        StabilizerKind::CaseI => {
            let t = crate::fnspace::xi_integral(&xi, XiMode::Direct, zo, s.quad_rtol)?.value;
            let unipotent = matches!(cls.tag, ClassTag::UnipotentPlus | ClassTag::UnipotentMinus);
            let alpha = if unipotent {
                0.0
            } else if st.imaginary {
                -(t.im / TWO_PI).powi(2)
            } else {
                (t.re / TWO_PI).powi(2)
            };
            let generic = matches!(cls.tag, ClassTag::Elliptic | ClassTag::Hyperbolic);
            if resonant {
                let n = alpha.sqrt().round() as u32;
                let (c, sigma) = ibis_parameters(&fl, &st, &d.v1, n)?;
                (OrbitTag::CiBis { n, c, sigma, gamma }, t, false)
            } else {
                (OrbitTag::Ci { alpha, gamma }, t, generic)
            }
        }
        StabilizerKind::CaseII => {
            let n = (st.zeros.len() / 2) as u32;
            let t = crate::fnspace::xi_integral(&xi, XiMode::PrincipalValue, zo, s.quad_rtol)?.value;
            // T = −i·pv∫dθ/η with pv∫dθ/η = −nπα/√(1−α²)
            let x = t.im.abs() / (n as f64 * PI);
            let alpha = x / (1.0 + x * x).sqrt();
            (OrbitTag::Cii { n, alpha, gamma }, t, false)
        }
        StabilizerKind::CaseIII => {
            let n = st.zeros.len() as u32;
            let t = crate::fnspace::xi_integral(&xi, XiMode::ContourUnipotent, zo, s.quad_rtol)?.value;
            let alpha = type_iii_alpha(st.profile.mean().re * t.re);
            if resonant {
                let c = iiibis_amplitude(&kernel, alpha)?;
                (OrbitTag::CiiiBis { n, alpha, c, gamma }, t, false)
            } else {
                (OrbitTag::Ciii { n, alpha, gamma }, t, false)
            }
        }
    };
    Ok(OrbitClass { tag, generic, hill: cls, stabilizer: st, t_integral, kernel })
}

/// Kernel basis `κ = Rψ` of `∂² + n²`-type operators, where `nQ = RᵀR` so
/// that `κ₁² + κ₂² = nξ`, sampled on the Floquet grid.
pub(crate) fn ibis_kernel_basis(fl: &FloquetData, st: &Stabilizer, n: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = st.q.ok_or_else(|| Error::InconsistentInvariant("stabilizer lacks its quadratic form".into()))?;
    let nf = n as f64;
    let (q11, q12, q22) = (nf * q[0][0], nf * q[0][1], nf * q[1][1]);
    if q11 <= 0.0 {
        return Err(Error::InconsistentInvariant("stabilizer form is not positive".into()));
    }
    let r11 = q11.sqrt();
    let r12 = q12 / r11;
    let r22 = (q22 - r12 * r12).max(0.0).sqrt();
    let k1: Vec<f64> = fl.psi1.iter().zip(&fl.psi2).map(|(a, b)| r11 * a[0] + r12 * b[0]).collect();
    let k2: Vec<f64> = fl.psi2.iter().map(|b| r22 * b[0]).collect();
    Ok((k1, k2))
}

/// `C` and `σ` of class (i)bis from the pairings of `V₁` with the kernel basis.
fn ibis_parameters(fl: &FloquetData, st: &Stabilizer, v1: &PeriodicFn, n: u32) -> Result<(f64, f64)> {
    let (k1, k2) = ibis_kernel_basis(fl, st, n)?;
    let v = sample_fn(v1, &fl.grid);
    let c1 = l2_dot(&v, &k1);
    let c2 = l2_dot(&v, &k2);
    Ok(((c1 * c1 + c2 * c2).sqrt() / PI, 2.0 * c2.atan2(c1)))
}

/// `C` of class (iii)bis: `V₁ = C f` with `f² = (1 + α/2)ξ/2` for the
/// mean-one stabilizer ξ, and `f(0) > 0`.
fn iiibis_amplitude(kernel: &[(PeriodicFn, f64)], alpha: f64) -> Result<f64> {
    let (k, c) = kernel
        .first()
        .ok_or_else(|| Error::InconsistentInvariant("resonant class without kernel".into()))?;
    let k0 = k.re(0.0);
    let sign = if k0.abs() > 1e-9 { k0.signum() } else { k.deriv(cre(0.0), 1).re.signum() };
    Ok(sign * c / (PI * (1.0 + 0.5 * alpha)).sqrt())
}

/// Invariant `(ξ, δ₁, δ₂)` of a generic operator, stored on real profiles:
/// when `ξ = iη` all three carry the same factor `i`.
#[derive(Debug, Clone)]
pub struct VectorInvariant {
    pub xi: Stabilizer,
    pub delta1: PeriodicFn,
    /// Zero-mean representative.
    pub delta2: TrigPoly,
    /// Mean removed from the raw `δ₂ = −½∫₀^θ V₁δ₁ − ½V₀ξ`.
    pub delta2_offset: f64,
    /// `∫ξ^{−3/2}δ₁` and `∫V₁δ₁` (profile level).
    pub identities: (f64, f64),
}

impl VectorInvariant {
    pub fn imaginary(&self) -> bool {
        self.xi.imaginary
    }
}

/// Computes the vector invariant of a generic operator.
pub fn vector_invariant(d: &SchrodingerOp, s: &Settings) -> Result<VectorInvariant> {
    let h = d.hill()?;
    let rep = periodic_stabilizer(&h, s)?;
    if rep.stabilizer.kind != StabilizerKind::CaseI || !matches!(rep.class.tag, ClassTag::Elliptic | ClassTag::Hyperbolic) {
        return Err(Error::NonGenericOperator(format!(
            "V2 has {} monodromy with {} stabilizer",
            rep.class.tag.name(),
            rep.stabilizer.kind.name()
        )));
    }
    let st = rep.stabilizer;
    let fl = rep.floquet;
    let p = st.profile.clone();
    let dp = p.derivative();
    let sign = d.v1.period_sign();
    let v1 = d.v1.clone();
    let rhs = |t: f64| {
        let z = cre(t);
        -0.5 * (v1.deriv(z, 1).re * p.eval_re(t) + 1.5 * v1.re(t) * dp.eval_re(t))
    };
    let sol = hill::periodic_solve(&h, &fl, rhs, sign, s)?;
    if sol.kernel_dim > 0 {
        return Err(Error::NonGenericOperator("∂² + V2 has a kernel with the period sign of V1".into()));
    }
    let n = fl.n_samples();
    let delta1 = samples_to_fn(&sol.w[..n], sign);
    // raw δ₂ = −½∫₀^θ V₁δ₁ − ½V₀ξ via the spectral antiderivative of V₁δ₁
    let prod: Vec<Complex64> = (0..n).map(|j| cre(d.v1.re(fl.grid[j]) * sol.w[j])).collect();
    let prod_t = TrigPoly::from_samples(&prod);
    let (anti, mean_prod) = prod_t.antiderivative();
    let anti0 = anti.eval_re(0.0);
    let v0 = d.v0.clone();
    let raw = TrigPoly::project(
        |t| cre(-0.5 * (anti.eval_re(t) - anti0) - 0.5 * v0.re(t) * p.eval_re(t)),
        PROJ_SAMPLES,
    )
    .real_part();
    let offset = raw.mean().re;
    let delta2 = raw.add_constant(-offset);
    let w_int: Vec<f64> = fl.grid.iter().map(|&t| p.eval_re(t).powf(-1.5)).collect();
    let i1 = l2_dot(&w_int, &sol.w);
    let i2 = mean_prod.re * TWO_PI;
    Ok(VectorInvariant { xi: st, delta1, delta2, delta2_offset: offset, identities: (i1, i2) })
}

/// Transforms the invariant of `D` into that of `act(g, D)`. Returns the new
/// invariant and the constant dropped from `δ₂` by the zero-mean convention.
pub fn transform_invariant(g: &GroupElement, inv: &VectorInvariant) -> Result<(VectorInvariant, f64)> {
    if inv.delta1.period_sign() < 0.0 && g.a.max_coeff() != 0.0 {
        return Err(Error::InvalidInput("a periodic translation cannot act on an antiperiodic δ1".into()));
    }
    let m = PROJ_SAMPLES;
    let dp = g.p.derivative();
    let phi = |t: f64| t + g.p.eval_re(t);
    let f1 = |t: f64| 1.0 + dp.eval_re(t);
    let xi0 = &inv.xi.profile;
    let xi_t = TrigPoly::project(|t| cre(xi0.eval_re(phi(t)) / f1(t)), m).real_part();
    let d1_mid_fn = {
        let d1 = inv.delta1.clone();
        let dp = dp.clone();
        let p = g.p.clone();
        PeriodicFn::analytic("delta1 pulled back", d1.period_sign(), 0.5, move |z| {
            let f1 = 1.0 + dp.eval(z);
            d1.eval(z + p.eval(z)) / f1.sqrt()
        })
        .project(m)
    };
    let a = &g.a;
    let (da, dda) = (a.derivative(), a.derivative().derivative());
    let dxi = xi_t.derivative();
    let ddxi = dxi.derivative();
    let delta1 = if a.max_coeff() == 0.0 {
        d1_mid_fn.clone()
    } else {
        let corr = xi_t.mul(&da).sub(&a.mul(&dxi).scale_re(0.5));
        d1_mid_fn.add(&PeriodicFn::Trig(corr))?
    };
    let d2 = &inv.delta2;
    let db = g.b.derivative();
    let d1m = d1_mid_fn.clone();
    let raw = TrigPoly::project(
        |t| {
            let z = cre(t);
            let (av, dav, ddav) = (a.eval_re(t), da.eval_re(t), dda.eval_re(t));
            let (x, dx, ddx) = (xi_t.eval_re(t), dxi.eval_re(t), ddxi.eval_re(t));
            let mid = if av == 0.0 && dav == 0.0 { 0.0 } else { d1m.re(t) * dav - av * d1m.deriv(z, 1).re };
            cre(d2.eval_re(phi(t)) + mid + x * db.eval_re(t) + 0.5 * x * dav * dav - 0.5 * x * av * ddav
                - 0.5 * dx * av * dav
                + 0.25 * ddx * av * av)
        },
        m,
    )
    .real_part();
    let dropped = raw.mean().re;
    let delta2 = raw.add_constant(-dropped);
    let zeros = find_zeros(&xi_t, Default::default())?;
    let xi = Stabilizer { profile: xi_t, zeros, q: None, ..inv.xi.clone() };
    Ok((
        VectorInvariant { xi, delta1, delta2, delta2_offset: inv.delta2_offset + dropped, identities: inv.identities },
        dropped,
    ))
}
