//! Ermakov–Lewis invariants
//! `EL = ½[a x² − b∂_x² − ic(x∂_x + ∂_x x) + d(−i∂_x) + e x + f]`, their model
//! eigenfunctions and the quantum monodromy of each orbit class.
//!
//! Coefficients live at profile level. When `ξ = iη` the operator stored here
//! is `EL(η)`, and `EL(ξ) = i·EL(η)`.

use crate::error::{Error, Result};
use crate::fnspace::{find_zeros, Contour, Half, PeriodicFn, TorusZero, TrigPoly, TWO_PI};
use crate::hill::{self, samples_to_fn};
use crate::ode::Dopri5;
use crate::special::{airy_ai, hermite_function, hyp1f1, rgamma};
use crate::stabilizer::{invariant_i, Stabilizer};
use crate::svaction::{ibis_kernel_basis, OrbitClass, OrbitTag, SchrodingerOp, VectorInvariant};
use crate::Settings;
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const CHECK_SAMPLES: usize = 256;

fn cre(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Coefficients of the generalized Ermakov–Lewis operator.
#[derive(Debug, Clone)]
pub struct ELCoefficients {
    pub a: PeriodicFn,
    pub b: PeriodicFn,
    pub c: PeriodicFn,
    pub d: PeriodicFn,
    pub e: PeriodicFn,
    pub f: PeriodicFn,
    /// Real profile `p = b`.
    pub profile: TrigPoly,
    /// The invariant is built from `ξ = i·p`.
    pub imaginary: bool,
    /// `I_{V₂}(p)` of the profile.
    pub i_profile: f64,
}

/// Coefficient values at one real time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ELPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    /// `ḃ`
    pub db: f64,
}

impl ELCoefficients {
    fn build(op: &SchrodingerOp, profile: TrigPoly, imaginary: bool, d: PeriodicFn, f: PeriodicFn) -> Result<Self> {
        let strip = op.v2.strip().min(op.v1.strip()).min(1.0);
        let (v2, pp, ddp) = (op.v2.clone(), profile.clone(), profile.derivative_n(2));
        let a = PeriodicFn::analytic("EL a", 1.0, strip, move |z| 0.5 * ddp.eval(z) + v2.eval(z) * pp.eval(z));
        let b = PeriodicFn::Trig(profile.clone());
        let c = PeriodicFn::Trig(profile.derivative().scale_re(-0.5));
        let (v1, pe, dd) = (op.v1.clone(), profile.clone(), d.clone());
        let e = PeriodicFn::analytic("EL e", op.v1.period_sign(), strip, move |z| v1.eval(z) * pe.eval(z) - dd.deriv(z, 1));
        let i_profile = invariant_i(&op.v2, &profile)?.value;
        Ok(ELCoefficients { a, b, c, d, e, f, profile, imaginary, i_profile })
    }

    pub fn at(&self, theta: f64) -> ELPoint {
        let z = cre(theta);
        ELPoint {
            a: self.a.re(theta),
            b: self.profile.eval_re(theta),
            c: self.c.re(theta),
            d: self.d.re(theta),
            e: self.e.re(theta),
            f: self.f.re(theta),
            db: self.profile.derivative().eval(z).re,
        }
    }

    /// Max-norm residuals of `ȧ = 2V₂c`, `ḃ = −2c`, `ċ = −a + V₂b`,
    /// `ḋ = V₁b − e`, `ė = V₁c + V₂d`, `ḟ = ½dV₁`, each relative to the size
    /// of its terms.
    pub fn residuals(&self, op: &SchrodingerOp) -> [f64; 6] {
        let mut worst = [0.0f64; 6];
        let mut scale = [1e-300f64; 6];
        let mut size: f64 = 1e-300;
        for j in 0..CHECK_SAMPLES {
            let z = cre(TWO_PI * j as f64 / CHECK_SAMPLES as f64);
            let (v2, v1) = (op.v2.eval(z), op.v1.eval(z));
            let (a, b, c, d, e) = (self.a.eval(z), self.b.eval(z), self.c.eval(z), self.d.eval(z), self.e.eval(z));
            let terms = [
                (self.a.deriv(z, 1), 2.0 * v2 * c),
                (self.b.deriv(z, 1), -2.0 * c),
                (self.c.deriv(z, 1), -a + v2 * b),
                (self.d.deriv(z, 1), v1 * b - e),
                (self.e.deriv(z, 1), v1 * c + v2 * d),
                (self.f.deriv(z, 1), 0.5 * d * v1),
            ];
            for (k, (lhs, rhs)) in terms.iter().enumerate() {
                worst[k] = worst[k].max((lhs - rhs).norm());
                scale[k] = scale[k].max(lhs.norm()).max(rhs.norm());
            }
            let coeffs = [a, b, c, d, e, self.f.eval(z)].iter().map(|v| v.norm()).fold(0.0, f64::max);
            size = size.max(coeffs * (1.0 + v2.norm() + v1.norm()));
        }
        // terms that vanish identically are measured against the overall coefficient size
        std::array::from_fn(|k| worst[k] / scale[k].max(1e-3 * size))
    }

    /// `EL ψ` at `x` from `ψ`, `ψ′`, `ψ″`.
    pub fn apply_point(&self, pt: &ELPoint, x: f64, psi: Complex64, dpsi: Complex64, ddpsi: Complex64) -> Complex64 {
        0.5 * (pt.a * x * x * psi - pt.b * ddpsi - I * pt.c * (2.0 * x * dpsi + psi) - I * pt.d * dpsi + pt.e * x * psi + pt.f * psi)
    }

    /// Coefficient of `x` in the gauge-reduced eigenvalue equation,
    /// `β = ½dḃ/b² + e/b`.
    pub fn beta(&self, pt: &ELPoint) -> f64 {
        0.5 * pt.d * pt.db / (pt.b * pt.b) + pt.e / pt.b
    }
}

/// Checks `ζ″ + V₂ζ − (I/2)ζ^{−3} = 0` for `ζ = √ξ`, following the branch of
/// the square root continuously from `Re ζ > 0`. The path is the real axis,
/// or the regularizing contour when ξ vanishes. Returns the max-norm residual.
pub fn pinney_check(v2: &PeriodicFn, st: &Stabilizer) -> Result<f64> {
    let xi = st.xi();
    let (d1, d2) = (xi.derivative(), xi.derivative_n(2));
    let path: Vec<Complex64> = if st.zeros.is_empty() {
        (0..=512).map(|j| cre(TWO_PI * j as f64 / 512.0)).collect()
    } else {
        let marked: Vec<TorusZero> = st.zeros.iter().map(|z| TorusZero { half: Some(Half::Upper), ..*z }).collect();
        let contour = Contour::build(&marked)?;
        contour.sample_points(64)
    };
    let scale = xi.max_abs(256);
    let mut zeta_prev: Option<Complex64> = None;
    let mut worst: f64 = 0.0;
    for z in path {
        let x = xi.eval(z);
        if x.norm() < 1e-12 * scale {
            return Err(Error::BranchCut(format!("ξ vanishes at {z}")));
        }
        let mut zeta = x.sqrt();
        match zeta_prev {
            Some(prev) if (zeta - prev).norm() > (zeta + prev).norm() => zeta = -zeta,
            None if zeta.re < 0.0 => zeta = -zeta,
            _ => {}
        }
        zeta_prev = Some(zeta);
        let (x1, x2) = (d1.eval(z), d2.eval(z));
        let zeta2 = x2 / (2.0 * zeta) - x1 * x1 / (4.0 * zeta * zeta * zeta);
        let r = zeta2 + v2.eval(z) * zeta - 0.5 * st.i_value / (zeta * zeta * zeta);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// EL coefficients of a generic operator from its vector invariant:
/// `d = −2δ₁`, `e = V₁ξ + 2δ̇₁`, `f = 2(δ₂ + ½V₀ξ)`.
pub fn el_coefficients(op: &SchrodingerOp, inv: &VectorInvariant) -> Result<ELCoefficients> {
    let p = inv.xi.profile.clone();
    let d = inv.delta1.scale(cre(-2.0));
    let strip = op.v0.strip().min(1.0);
    let (v0, d2, pp) = (op.v0.clone(), inv.delta2.clone(), p.clone());
    let f = PeriodicFn::analytic("EL f", 1.0, strip, move |z| 2.0 * d2.eval(z) + v0.eval(z) * pp.eval(z));
    let el = ELCoefficients::build(op, p, inv.imaginary(), d, f)?;
    check_constraints(&el, op)?;
    Ok(el)
}

fn check_constraints(el: &ELCoefficients, op: &SchrodingerOp) -> Result<()> {
    let r = el.residuals(op);
    let worst = r.iter().cloned().fold(0.0, f64::max);
    if worst > 1e-6 {
        return Err(Error::ConstraintViolation(format!("EL system residuals {r:?}")));
    }
    Ok(())
}

/// The real profile used for the EL invariant of each class: the normalized
/// stabilizer for classes (i) and (ii), `η = 2κ⊥²` for (i)bis, and the
/// non-negative stabilizer with mean `1 + α/2` for (iii) and (iii)bis.
pub fn class_profile(op: &SchrodingerOp, cls: &OrbitClass, s: &Settings) -> Result<(TrigPoly, bool)> {
    let st = &cls.stabilizer;
    match cls.tag {
        OrbitTag::Ci { .. } | OrbitTag::Cii { .. } => {
            let unipotent = st.i_value.abs() < 1e-9 * st.profile.max_coeff().powi(2).max(1e-300);
            Ok((st.profile.clone(), st.imaginary || unipotent))
        }
        OrbitTag::Ciii { alpha, .. } | OrbitTag::CiiiBis { alpha, .. } => {
            let m = st.profile.mean().re;
            Ok((st.profile.scale_re((1.0 + 0.5 * alpha) / m), true))
        }
        OrbitTag::CiBis { n, .. } => {
            let h = op.hill()?;
            let fl = hill::floquet(&h, s)?;
            let (k1, k2) = ibis_kernel_basis(&fl, st, n)?;
            let v: Vec<f64> = fl.grid.iter().map(|&t| op.v1.re(t)).collect();
            let c1 = crate::svaction::l2_dot(&v, &k1);
            let c2 = crate::svaction::l2_dot(&v, &k2);
            let r = (c1 * c1 + c2 * c2).sqrt();
            let samples: Vec<Complex64> = (0..fl.n_samples())
                .map(|j| {
                    let kp = (-c2 * k1[j] + c1 * k2[j]) / r;
                    cre(2.0 * kp * kp)
                })
                .collect();
            Ok((TrigPoly::from_samples(&samples).real_part().chop(1e-13), true))
        }
    }
}

/// EL coefficients built from an arbitrary stabilizer profile `p`: `d` is the
/// (anti)periodic solution of `d̈ + V₂d = V̇₁p + (3/2)V₁ṗ` orthogonal to the
/// kernel of `∂² + V₂`, `e = V₁p − ḋ`, and `f` the zero-mean primitive of `½dV₁`.
pub fn el_from_profile(op: &SchrodingerOp, profile: TrigPoly, imaginary: bool, s: &Settings) -> Result<ELCoefficients> {
    if op.v1.max_abs(128) == 0.0 {
        let el = ELCoefficients::build(op, profile, imaginary, PeriodicFn::zero(), PeriodicFn::zero())?;
        check_constraints(&el, op)?;
        return Ok(el);
    }
    let h = op.hill()?;
    let fl = hill::floquet(&h, s)?;
    let sign = op.v1.period_sign();
    let dp = profile.derivative();
    let (v1, p) = (&op.v1, &profile);
    let rhs = |t: f64| v1.deriv(cre(t), 1).re * p.eval_re(t) + 1.5 * v1.re(t) * dp.eval_re(t);
    let sol = hill::periodic_solve(&h, &fl, rhs, sign, s)?;
    if sol.solvability_residual > 1e-6 {
        return Err(Error::ConstraintViolation(format!(
            "d equation is not solvable: residual {:e}",
            sol.solvability_residual
        )));
    }
    let n = fl.n_samples();
    let d = samples_to_fn(&sol.w[..n], sign);
    let prod: Vec<Complex64> = (0..n).map(|j| cre(0.5 * sol.w[j] * op.v1.re(fl.grid[j]))).collect();
    let (f, mean) = TrigPoly::from_samples(&prod).antiderivative();
    let scale = prod.iter().map(|c| c.norm()).fold(1e-300, f64::max);
    if mean.norm() > 1e-7 * scale {
        return Err(Error::ConstraintViolation(format!("∫dV₁ = {:e} does not vanish", mean.re * TWO_PI)));
    }
    let el = ELCoefficients::build(op, profile, imaginary, d, PeriodicFn::Trig(f.real_part()))?;
    check_constraints(&el, op)?;
    Ok(el)
}

/// EL coefficients for any classified operator, on [`class_profile`].
pub fn el_for_class(op: &SchrodingerOp, cls: &OrbitClass, s: &Settings) -> Result<ELCoefficients> {
    let (p, imaginary) = class_profile(op, cls, s)?;
    el_from_profile(op, p, imaginary, s)
}

/// Mean and spread of a quantity sampled along the contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampled {
    pub mean: Complex64,
    /// Max deviation from the mean, relative to `|mean|` (absolute when the mean is tiny).
    pub spread: f64,
}

impl Sampled {
    fn from(values: &[Complex64]) -> Sampled {
        let mean = values.iter().sum::<Complex64>() / values.len() as f64;
        let dev = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
        Sampled { mean, spread: dev / mean.norm().max(1e-12) }
    }
}

/// Quantities obtained by integrating the EL system along the contour Γ.
#[derive(Debug, Clone)]
pub struct ContourConstants {
    pub contour: Contour,
    /// `∫_Γ dθ/ξ` with `ξ = iη`.
    pub t: Complex64,
    pub int_inv_eta: Complex64,
    /// `∫_Γ (d/η)²`.
    pub int_d2: Complex64,
    /// `∫_Γ f/η`.
    pub int_f: Complex64,
    /// `V₁/η^{1/2}` along Γ.
    pub drift_ratio: Sampled,
    /// `−f + ¼d²/η` along Γ.
    pub k_const: Sampled,
    /// `−β η^{3/2}` along Γ.
    pub airy_const: Sampled,
    /// `η(η − (η^{−1/2}d)′/c)` along Γ with `c = V₁/η^{1/2}`.
    pub identity_const: Sampled,
    /// Mismatch between the contour-integrated `(d, ḋ, f)` and the real-axis Fourier solution.
    pub transport_error: f64,
    pub closure_error: f64,
}

fn pack(y: &mut [f64], k: usize, v: Complex64) {
    y[2 * k] = v.re;
    y[2 * k + 1] = v.im;
}

fn unpack(y: &[f64], k: usize) -> Complex64 {
    Complex64::new(y[2 * k], y[2 * k + 1])
}

/// Integrates `d̈ + V₂d = V̇₁η + (3/2)V₁η̇`, `ḟ = ½dV₁`, `(η^{1/2})˙ = η̇/(2η^{1/2})`
/// and the Γ-integrals of `(d/η)²`, `f/η`, `1/η` along the contour around the
/// zeros of η, starting from the real-axis values of `el`.
pub fn contour_constants(op: &SchrodingerOp, el: &ELCoefficients, s: &Settings) -> Result<ContourConstants> {
    let eta = el.profile.clone();
    let zeros = find_zeros(&eta, s.zero_options())?;
    let marked: Vec<TorusZero> = zeros.iter().map(|z| TorusZero { half: Some(Half::Upper), ..*z }).collect();
    let contour = Contour::build(&marked)?;
    let deta = eta.derivative();
    let dde = deta.derivative();
    let z0 = cre(contour.start);
    let mut y = vec![0.0; 14];
    pack(&mut y, 0, el.d.eval(z0));
    pack(&mut y, 1, el.d.deriv(z0, 1));
    pack(&mut y, 2, el.f.eval(z0));
    let s0 = eta.eval(z0).sqrt();
    pack(&mut y, 6, s0);
    let solver = Dopri5::new(s.rk_tol.min(1e-12));
    let per_piece = 16;
    let outputs: Vec<f64> = (1..=per_piece).map(|j| j as f64 / per_piece as f64).collect();
    let mut samples: Vec<(Complex64, Vec<f64>)> = vec![(z0, y.clone())];
    let mut transport: f64 = 0.0;
    let scale_d = el.d.max_abs(128).max(el.f.max_abs(128)).max(1e-300);
    for piece in &contour.pieces {
        let pc = *piece;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let (z, dz) = pc.point(t);
            let (v2, v1, dv1) = (op.v2.eval(z), op.v1.eval(z), op.v1.deriv(z, 1));
            let (e0, e1) = (eta.eval(z), deta.eval(z));
            let (d, dd, f, sq) = (unpack(y, 0), unpack(y, 1), unpack(y, 2), unpack(y, 6));
            let ddd = dv1 * e0 + 1.5 * v1 * e1 - v2 * d;
            let vals = [dd, ddd, 0.5 * d * v1, (d / e0).powi(2), f / e0, 1.0 / e0, e1 / (2.0 * sq)];
            for (k, v) in vals.iter().enumerate() {
                pack(dy, k, v * dz);
            }
        };
        let out = solver.solve(rhs, 0.0, &y, &outputs, false)?;
        for (j, st) in out.states.iter().enumerate() {
            let z = pc.point(outputs[j]).0;
            if z.im == 0.0 {
                let dv = (unpack(st, 0) - el.d.eval(z)).norm().max((unpack(st, 2) - el.f.eval(z)).norm());
                transport = transport.max(dv / scale_d);
            }
            samples.push((z, st.clone()));
        }
        y = out.states.last().cloned().unwrap_or(y);
    }
    let sign = op.v1.period_sign();
    let closure = (unpack(&y, 0) - sign * unpack(&samples[0].1, 0)).norm()
        .max((unpack(&y, 2) - unpack(&samples[0].1, 2)).norm())
        / scale_d;
    let (mut ratio, mut kc, mut ac, mut ic) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (z, st) in &samples {
        let (d, dd, f, sq) = (unpack(st, 0), unpack(st, 1), unpack(st, 2), unpack(st, 6));
        let (e0, e1) = (eta.eval(*z), deta.eval(*z));
        let _ = dde.eval(*z);
        let v1 = op.v1.eval(*z);
        let c = v1 / sq;
        ratio.push(c);
        kc.push(-f + 0.25 * d * d / e0);
        let e = v1 * e0 - dd;
        let beta = 0.5 * d * e1 / (e0 * e0) + e / e0;
        ac.push(-beta * e0 * sq);
        let dsq = e1 / (2.0 * sq);
        let deriv = dd / sq - d * dsq / (sq * sq);
        ic.push(e0 * (e0 - deriv / c));
    }
    let drift_ratio = Sampled::from(&ratio);
    let int_inv_eta = unpack(&y, 5);
    Ok(ContourConstants {
        contour,
        t: -I * int_inv_eta,
        int_inv_eta,
        int_d2: unpack(&y, 3),
        int_f: unpack(&y, 4),
        drift_ratio,
        k_const: Sampled::from(&kc),
        airy_const: Sampled::from(&ac),
        identity_const: Sampled::from(&ic),
        transport_error: transport,
        closure_error: closure,
    })
}

/// Quantum monodromy of an orbit class.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecKind {
    DiscreteElliptic { a: f64, gamma: f64 },
    ContinuousHyperbolic { t: Complex64, gamma: f64 },
    ContinuousUnipotent { t: Complex64, gamma: f64 },
    ResonantIBis { t: Complex64, gamma_tilde: f64, kshift: f64 },
    ResonantIIIBis { t: Complex64, gamma_tilde: f64, c_alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct MonodromySpec {
    pub kind: SpecKind,
    /// Contour data for the classes that need it.
    pub contour: Option<ContourConstants>,
    /// Imaginary part dropped from `γ̃` (zero up to quadrature error).
    pub gamma_tilde_imag: f64,
}

impl MonodromySpec {
    pub fn name(&self) -> &'static str {
        match self.kind {
            SpecKind::DiscreteElliptic { .. } => "DiscreteElliptic",
            SpecKind::ContinuousHyperbolic { .. } => "ContinuousHyperbolic",
            SpecKind::ContinuousUnipotent { .. } => "ContinuousUnipotent",
            SpecKind::ResonantIBis { .. } => "ResonantIBis",
            SpecKind::ResonantIIIBis { .. } => "ResonantIIIBis",
        }
    }

    /// `T`; for the elliptic class `T = 2πa`.
    pub fn t(&self) -> Complex64 {
        match self.kind {
            SpecKind::DiscreteElliptic { a, .. } => cre(TWO_PI * a),
            SpecKind::ContinuousHyperbolic { t, .. }
            | SpecKind::ContinuousUnipotent { t, .. }
            | SpecKind::ResonantIBis { t, .. }
            | SpecKind::ResonantIIIBis { t, .. } => t,
        }
    }

    /// `γ`, or `γ̃` for the resonant classes.
    pub fn gamma(&self) -> f64 {
        match self.kind {
            SpecKind::DiscreteElliptic { gamma, .. }
            | SpecKind::ContinuousHyperbolic { gamma, .. }
            | SpecKind::ContinuousUnipotent { gamma, .. } => gamma,
            SpecKind::ResonantIBis { gamma_tilde, .. } | SpecKind::ResonantIIIBis { gamma_tilde, .. } => gamma_tilde,
        }
    }

    /// `λ_n = −2π(n+½)a − πγ` (elliptic class only).
    pub fn lambda(&self, n: usize) -> Option<f64> {
        match self.kind {
            SpecKind::DiscreteElliptic { a, gamma } => Some(-TWO_PI * (n as f64 + 0.5) * a - PI * gamma),
            _ => None,
        }
    }

    /// `e^{iλ_n}` (elliptic class only).
    pub fn level_phase(&self, n: usize) -> Option<Complex64> {
        self.lambda(n).map(|l| (I * l).exp())
    }

    /// `e^{kT − iπγ̃}` (continuous classes).
    pub fn multiplier(&self, k: f64) -> Option<Complex64> {
        match self.kind {
            SpecKind::DiscreteElliptic { .. } => None,
            _ => Some((k * self.t() - I * PI * self.gamma()).exp()),
        }
    }
}

/// Monodromy for a classified operator with EL coefficients from [`el_for_class`]
/// (or [`el_coefficients`] in the generic case).
pub fn monodromy_spec(op: &SchrodingerOp, cls: &OrbitClass, el: &ELCoefficients, s: &Settings) -> Result<MonodromySpec> {
    let gamma = cls.tag.gamma();
    let plain = |kind| Ok(MonodromySpec { kind, contour: None, gamma_tilde_imag: 0.0 });
    match cls.tag {
        OrbitTag::Ci { alpha, .. } => {
            if alpha > 0.0 {
                if cls.stabilizer.imaginary || (cls.t_integral.im.abs() > 1e-9 * cls.t_integral.norm()) {
                    return Err(Error::InconsistentInvariant("elliptic class with imaginary T".into()));
                }
                plain(SpecKind::DiscreteElliptic { a: cls.t_integral.re / TWO_PI, gamma })
            } else if alpha < 0.0 {
                plain(SpecKind::ContinuousHyperbolic { t: cls.t_integral, gamma })
            } else {
                let t = -I * crate::fnspace::xi_integral(&el.profile, crate::fnspace::XiMode::Direct, s.zero_options(), s.quad_rtol)?.value;
                plain(SpecKind::ContinuousUnipotent { t, gamma })
            }
        }
        OrbitTag::Cii { .. } => plain(SpecKind::ContinuousHyperbolic { t: cls.t_integral, gamma }),
        OrbitTag::Ciii { .. } => {
            let cc = contour_constants(op, el, s)?;
            let kind = SpecKind::ContinuousUnipotent { t: cc.t, gamma };
            Ok(MonodromySpec { kind, contour: Some(cc), gamma_tilde_imag: 0.0 })
        }
        OrbitTag::CiBis { .. } => {
            let cc = contour_constants(op, el, s)?;
            let gt = gamma + 0.25 * cc.int_d2;
            let kshift = 0.5 * cc.k_const.mean.re;
            let kind = SpecKind::ResonantIBis { t: cc.t, gamma_tilde: gt.re, kshift };
            Ok(MonodromySpec { kind, contour: Some(cc), gamma_tilde_imag: gt.im })
        }
        OrbitTag::CiiiBis { .. } => {
            let cc = contour_constants(op, el, s)?;
            let gt = gamma - cc.int_f + 0.5 * cc.int_d2;
            let c_alpha = cc.identity_const.mean.re;
            let kind = SpecKind::ResonantIIIBis { t: cc.t, gamma_tilde: gt.re, c_alpha };
            Ok(MonodromySpec { kind, contour: Some(cc), gamma_tilde_imag: gt.im })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Eigenfunction families of the model invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Hermite { n: usize },
    HypergeometricEvenOdd { k: f64, parity: Parity },
    PlaneWave { k: f64, sign: Branch },
    IBisWave { k: f64, sign: Branch },
    Airy { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    UnitL2,
    UpToConstant,
}

/// Instantaneous eigenfunction `ψ(θ, ·)` of the EL invariant.
///
/// With `ψ = exp(i(ḃ/(4b))x² − i(d/(2b))x)·χ`, the equation `EL ψ = μψ`
/// becomes `χ″ = [(I/(2b²))x² + βx + (f − d²/(4b) − 2μ)/b]χ`.
#[derive(Debug, Clone)]
pub struct ModelEigenfunction {
    pub family: Family,
    pub normalization: Normalization,
    el: ELCoefficients,
    scale: f64,
}

fn family_allowed(tag: &OrbitTag, family: &Family, el: &ELCoefficients) -> bool {
    let elliptic = el.i_profile > 0.0 && !el.imaginary;
    match (family, tag) {
        (Family::Hermite { .. }, OrbitTag::Ci { alpha, .. }) => *alpha > 0.0 && elliptic,
        (Family::HypergeometricEvenOdd { .. }, OrbitTag::Ci { alpha, .. }) => *alpha < 0.0,
        (Family::HypergeometricEvenOdd { .. }, OrbitTag::Cii { .. }) => true,
        (Family::PlaneWave { k, .. }, OrbitTag::Ci { alpha, .. }) => *alpha == 0.0 && *k > 0.0,
        (Family::PlaneWave { k, .. }, OrbitTag::Ciii { .. }) => *k > 0.0,
        (Family::IBisWave { k, .. }, OrbitTag::CiBis { .. }) => *k > 0.0,
        (Family::Airy { .. }, OrbitTag::CiiiBis { .. }) => true,
        _ => false,
    }
}

/// Builds the eigenfunction with the given label for a classified operator.
pub fn eigenfunction(cls: &OrbitClass, el: &ELCoefficients, family: Family) -> Result<ModelEigenfunction> {
    if !family_allowed(&cls.tag, &family, el) {
        return Err(Error::LabelOutOfDomain(format!("{family:?} for class {}", cls.tag.name())));
    }
    model_eigenfunction(el, family)
}

/// Builds an eigenfunction from EL coefficients without class bookkeeping.
pub fn model_eigenfunction(el: &ELCoefficients, family: Family) -> Result<ModelEigenfunction> {
    let normalization = match family {
        Family::Hermite { .. } => Normalization::UnitL2,
        _ => Normalization::UpToConstant,
    };
    let mut ef = ModelEigenfunction { family, normalization, el: el.clone(), scale: 1.0 };
    if normalization == Normalization::UnitL2 {
        let theta = ef.regular_time();
        let (l, m) = (20.0, 8000);
        let dx = 2.0 * l / m as f64;
        let norm2: f64 = (0..m).map(|j| ef.eval(theta, -l + j as f64 * dx).norm_sqr()).sum::<f64>() * dx;
        ef.scale = 1.0 / norm2.sqrt();
    }
    Ok(ef)
}

impl ModelEigenfunction {
    pub fn el(&self) -> &ELCoefficients {
        &self.el
    }

    /// A time at which the profile is far from its zeros.
    pub fn regular_time(&self) -> f64 {
        (0..64)
            .map(|j| TWO_PI * j as f64 / 64.0)
            .max_by(|a, b| self.el.profile.eval_re(*a).abs().partial_cmp(&self.el.profile.eval_re(*b).abs()).unwrap())
            .unwrap_or(0.0)
    }

    /// Eigenvalue `μ` with `EL ψ = μψ` (profile-level EL).
    pub fn eigenvalue(&self, theta: f64) -> f64 {
        match self.family {
            Family::Hermite { n } => {
                let pt = self.el.at(theta);
                let beta = self.el.beta(&pt);
                let p = pt.b;
                n as f64 + 0.5 + 0.5 * (pt.f - pt.d * pt.d / (4.0 * p) - beta * beta * p * p * p / 4.0)
            }
            Family::HypergeometricEvenOdd { k, .. }
            | Family::PlaneWave { k, .. }
            | Family::IBisWave { k, .. }
            | Family::Airy { k } => k,
        }
    }

    /// `ψ(θ, x)`.
    pub fn eval(&self, theta: f64, x: f64) -> Complex64 {
        let pt = self.el.at(theta);
        let p = pt.b;
        let beta = self.el.beta(&pt);
        let gauge = (I * ((pt.db / (4.0 * p)) * x * x - (pt.d / (2.0 * p)) * x)).exp();
        let mu = self.eigenvalue(theta);
        let chi = match self.family {
            Family::Hermite { n } => {
                let x0 = -beta * p * p / 2.0;
                cre(hermite_function(n, (x - x0) / p.sqrt()) * p.powf(-0.25))
            }
            Family::HypergeometricEvenOdd { parity, .. } => {
                let kappa = mu - 0.5 * pt.f + pt.d * pt.d / (8.0 * p) - beta * beta * p * p * p / 8.0;
                let y = x - beta * p * p / 2.0;
                let zarg = I * (y * y / p);
                let pre = (-I * (y * y / (2.0 * p))).exp();
                // k-orthonormal prefactor √2(2ip)^{1/4}e^{πκ/4}/Γ(¼ + iκ/2), doubled with Γ(¾ + iκ/2) for odd states
                let norm = 2f64.sqrt() * (2.0 * I * p).powf(0.25) * (PI * kappa / 4.0).exp();
                match parity {
                    Parity::Even => {
                        norm * rgamma(0.25 + 0.5 * I * kappa) * pre * hyp1f1(0.25 * (1.0 + 2.0 * I * kappa), 0.5, zarg)
                    }
                    Parity::Odd => {
                        2.0 * norm * rgamma(0.75 + 0.5 * I * kappa) * pre * y * hyp1f1(0.25 * (3.0 + 2.0 * I * kappa), 1.5, zarg)
                    }
                }
            }
            Family::PlaneWave { sign, .. } | Family::IBisWave { sign, .. } => {
                let kp = mu - 0.5 * pt.f + pt.d * pt.d / (8.0 * p);
                let w = (Complex64::new(2.0 * kp / p, 0.0)).sqrt();
                (I * sign.sign() * w * x).exp()
            }
            Family::Airy { .. } => {
                let s = beta.cbrt();
                let g = (pt.f - pt.d * pt.d / (4.0 * p) - 2.0 * mu) / p;
                cre(airy_ai(s * x + g / (s * s)))
            }
        };
        gauge * chi * self.scale
    }

    /// `k′ − k` for the plane-wave families at time θ.
    pub fn kshift(&self, theta: f64) -> f64 {
        let pt = self.el.at(theta);
        -0.5 * pt.f + pt.d * pt.d / (8.0 * pt.b)
    }

    /// `(ψ, ∂ₓψ, ∂ₓ²ψ)` by fourth-order central differences.
    pub fn jet(&self, theta: f64, x: f64) -> (Complex64, Complex64, Complex64) {
        let h = 1e-3;
        let f = |k: f64| self.eval(theta, x + k * h);
        let (m2, m1, c, p1, p2) = (f(-2.0), f(-1.0), f(0.0), f(1.0), f(2.0));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        (c, d1, d2)
    }

    /// Max over `xs` of `|ELψ − μψ|`, relative to `max |ψ|·(1 + x²)`.
    pub fn el_residual(&self, theta: f64, xs: &[f64]) -> f64 {
        let pt = self.el.at(theta);
        let mu = self.eigenvalue(theta);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &x in xs {
            let (v, d1, d2) = self.jet(theta, x);
            let r = self.el.apply_point(&pt, x, v, d1, d2) - mu * v;
            worst = worst.max(r.norm());
            scale = scale.max(v.norm() * (1.0 + x * x));
        }
        worst / scale.max(1e-300)
    }

    /// `(Dψ)/ψ` at `(θ, x)` for `D = −2i∂_θ − ∂ₓ² + V`.
    pub fn d_ratio(&self, op: &SchrodingerOp, theta: f64, x: f64) -> Complex64 {
        let h = 1e-4;
        let g = |k: f64| self.eval(theta + k * h, x);
        let dt = (g(-2.0) - 8.0 * g(-1.0) + 8.0 * g(1.0) - g(2.0)) / (12.0 * h);
        let (v, _, d2) = self.jet(theta, x);
        (-2.0 * I * dt - d2 + op.potential(theta, x) * v) / v
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::stabilizer::{kirillov_family, u_n_alpha, KirillovCase};
    use crate::svaction::{classify_orbit, vector_invariant};

    fn tp(mean: f64, cos: &[f64], sin: &[f64]) -> TrigPoly {
        TrigPoly::from_real(mean, cos, sin)
    }

    fn xs() -> Vec<f64> {
        (0..=64).map(|j| -8.0 + 0.25 * j as f64).collect()
    }

    fn generic_op() -> SchrodingerOp {
        SchrodingerOp::new(
            tp(0.3, &[0.05], &[0.0, 0.02]).into(),
            tp(0.0, &[0.2], &[0.1]).into(),
            tp(1.5, &[0.0, 0.3], &[]).into(),
        )
        .unwrap()
    }

    #[test]
    fn pinney_constant_potential() {
        let st = Stabilizer::from_xi(&PeriodicFn::constant(0.49), &TrigPoly::constant(1.0 / 0.7), &Settings::default()).unwrap();
        assert!(pinney_check(&PeriodicFn::constant(0.49), &st).unwrap() < 1e-12);
    }

    #[test]
    fn pinney_case_two_on_contour() {
        let s = Settings::default();
        let pair = kirillov_family(KirillovCase::II { n: 1, alpha: 0.5, a: 1.0 }).unwrap();
        let st = Stabilizer::from_xi(&pair.u, &pair.xi, &s).unwrap();
        assert!(pinney_check(&u_n_alpha(1, 0.5), &st).unwrap() < 1e-7);
    }

    #[test]
    fn model_coefficients() {
        let op = SchrodingerOp::model(0.49, 0.3);
        let inv = vector_invariant(&op, &Settings::default()).unwrap();
        let el = el_coefficients(&op, &inv).unwrap();
        let pt = el.at(0.4);
        assert!((pt.a - 0.7).abs() < 1e-9 && (pt.b - 1.0 / 0.7).abs() < 1e-9);
        assert!(pt.c.abs() < 1e-12 && pt.d.abs() < 1e-12 && pt.e.abs() < 1e-12);
        let want = 2.0 * (inv.delta2.eval_re(0.4) + 0.3 / (2.0 * 0.7));
        assert!((pt.f - want).abs() < 1e-12);
    }

    #[test]
    fn generic_coefficients_agree_with_profile_pipeline() {
        let s = Settings::default();
        let op = generic_op();
        let inv = vector_invariant(&op, &s).unwrap();
        let el = el_coefficients(&op, &inv).unwrap();
        assert!(el.residuals(&op).iter().all(|r| *r < 1e-7), "{:?}", el.residuals(&op));
        let el2 = el_from_profile(&op, inv.xi.profile.clone(), false, &s).unwrap();
        for j in 0..16 {
            let t = j as f64 * 0.39;
            let (p, q) = (el.at(t), el2.at(t));
            assert!((p.d - q.d).abs() < 1e-8 && (p.e - q.e).abs() < 1e-8);
            // f agrees up to a constant
            let (p0, q0) = (el.at(0.0), el2.at(0.0));
            assert!(((p.f - p0.f) - (q.f - q0.f)).abs() < 1e-8);
        }
    }

    #[test]
    fn hermite_ground_state_is_gaussian() {
        let op = SchrodingerOp::model(0.49, 0.0);
        let inv = vector_invariant(&op, &Settings::default()).unwrap();
        let el = el_coefficients(&op, &inv).unwrap();
        let h = model_eigenfunction(&el, Family::Hermite { n: 0 }).unwrap();
        for &x in &[0.0f64, 0.5, 1.7] {
            let want = (0.7 / PI).powf(0.25) * (-0.35 * x * x).exp();
            assert!((h.eval(0.0, x) - want).norm() < 1e-9);
        }
    }

    #[test]
    fn hermite_eigen_relation_generic() {
        let s = Settings::default();
        let op = generic_op();
        let inv = vector_invariant(&op, &s).unwrap();
        let el = el_coefficients(&op, &inv).unwrap();
        for n in 0..4 {
            let h = model_eigenfunction(&el, Family::Hermite { n }).unwrap();
            for &t in &[0.0, 1.3, 4.0] {
                assert!(h.el_residual(t, &xs()) < 1e-6, "n={n} t={t}: {}", h.el_residual(t, &xs()));
            }
            let (e0, e1) = (h.eigenvalue(0.0), h.eigenvalue(2.5));
            assert!((e0 - e1).abs() < 1e-7, "eigenvalue drifts: {e0} vs {e1}");
        }
    }

    #[test]
    fn hypergeometric_states_of_repulsor() {
        let s = Settings::default();
        let op = SchrodingerOp::model(-0.36, 0.0);
        let cls = classify_orbit(&op, &s).unwrap();
        let el = el_for_class(&op, &cls, &s).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let ef = eigenfunction(&cls, &el, Family::HypergeometricEvenOdd { k: 0.7, parity }).unwrap();
            assert!(ef.el_residual(0.0, &xs()) < 1e-6, "{parity:?}: {}", ef.el_residual(0.0, &xs()));
            let eta = el.profile.eval_re(0.0);
            let want = match parity {
                Parity::Even => cre(2.0 * 0.7 / eta),
                Parity::Odd => cre(2.0 * 0.7 / eta),
            };
            let r = ef.d_ratio(&op, 0.0, 1.3);
            assert!((r - want).norm() < 1e-6, "{parity:?}: {r} vs {want}");
        }
    }

    #[test]
    fn plane_wave_unit_profile() {
        let op = SchrodingerOp::model(0.0, 0.0);
        let el = el_from_profile(&op, TrigPoly::constant(1.0), true, &Settings::default()).unwrap();
        let ef = model_eigenfunction(&el, Family::PlaneWave { k: 0.8, sign: Branch::Plus }).unwrap();
        let x: f64 = 0.9;
        let want = (I * (1.6f64).sqrt() * x).exp();
        assert!((ef.eval(0.0, x) - want).norm() < 1e-12);
    }

    #[test]
    fn airy_function_solves_its_equation() {
        let h = 1e-3;
        let mut x = -10.0;
        while x <= 5.0 {
            let f = |k: f64| airy_ai(x + k * h);
            let d2 = (-f(-2.0) + 16.0 * f(-1.0) - 30.0 * f(0.0) + 16.0 * f(1.0) - f(2.0)) / (12.0 * h * h);
            assert!((-d2 + x * f(0.0)).abs() < 1e-8, "x = {x}");
            x += 0.37;
        }
    }

    #[test]
    fn elliptic_spec_for_unit_oscillator() {
        let s = Settings::default();
        let op = SchrodingerOp::model(1.0, 0.0);
        let cls = classify_orbit(&op, &s).unwrap();
        let el = el_for_class(&op, &cls, &s).unwrap();
        let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
        for n in 0..4 {
            assert!((spec.lambda(n).unwrap() + PI * (2 * n + 1) as f64).abs() < 1e-9);
            assert!((spec.level_phase(n).unwrap() + 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn label_domain_is_enforced() {
        let s = Settings::default();
        let op = SchrodingerOp::model(1.0, 0.0);
        let cls = classify_orbit(&op, &s).unwrap();
        let el = el_for_class(&op, &cls, &s).unwrap();
        let r = eigenfunction(&cls, &el, Family::Airy { k: 1.0 });
        assert!(matches!(r, Err(Error::LabelOutOfDomain(_))));
    }

    fn ibis_op(c: f64) -> SchrodingerOp {
        SchrodingerOp::new(PeriodicFn::constant(1.0), tp(0.0, &[c * 0.5f64.cos()], &[c * 0.5f64.sin()]).into(), PeriodicFn::constant(0.2))
            .unwrap()
    }

    /// `v_{1,α}x² + C f x` with `f = (1 + α sin θ)^{1/2} cos(π/4 − θ/2)`.
    pub(crate) fn iiibis_op(alpha: f64, c: f64) -> SchrodingerOp {
        let strip = (1.0 / alpha).acosh() * 0.9;
        let f = PeriodicFn::analytic("kernel", -1.0, strip, move |z: Complex64| {
            c * (1.0 + alpha * z.sin()).sqrt() * (PI / 4.0 - z / 2.0).cos()
        });
        SchrodingerOp::new(crate::stabilizer::v_n_alpha(1, alpha), f, PeriodicFn::constant(0.1)).unwrap()
    }

    #[test]
    fn ibis_energy_shift() {
        let s = Settings::default();
        let op = ibis_op(0.16);
        let cls = classify_orbit(&op, &s).unwrap();
        let el = el_for_class(&op, &cls, &s).unwrap();
        assert!(el.residuals(&op).iter().all(|r| *r < 1e-7), "{:?}", el.residuals(&op));
        let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
        let cc = spec.contour.as_ref().unwrap();
        assert!(cc.k_const.spread < 1e-6, "{:?}", cc.k_const);
        match spec.kind {
            SpecKind::ResonantIBis { kshift, gamma_tilde, .. } => {
                assert!((kshift - 3e-4).abs() < 1e-9, "{kshift}");
                assert!(gamma_tilde.is_finite() && spec.gamma_tilde_imag.abs() < 1e-7);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iiibis_constants() {
        let s = Settings::default();
        let op = iiibis_op(0.5, 0.3);
        let cls = classify_orbit(&op, &s).unwrap();
        assert!(matches!(cls.tag, OrbitTag::CiiiBis { .. }), "{:?}", cls.tag);
        let el = el_for_class(&op, &cls, &s).unwrap();
        let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
        let cc = spec.contour.as_ref().unwrap();
        assert!(cc.identity_const.spread < 1e-8 && cc.airy_const.spread < 1e-8);
        assert!(cc.transport_error < 1e-8 && cc.closure_error < 1e-8);
        // η(η − (η^{−1/2}d)′/c) is constant along Γ; with η of mean 1 + α/2 it equals
        // −(1 + α/2)(1 − α)√(1 − α²)/α
        let a = 0.5f64;
        let want = -(1.0 + a / 2.0) * (1.0 - a) * (1.0 - a * a).sqrt() / a;
        match spec.kind {
            SpecKind::ResonantIIIBis { c_alpha, .. } => assert!((c_alpha - want).abs() < 1e-8, "{c_alpha}"),
            ref other => panic!("{other:?}"),
        }
        assert!(spec.gamma_tilde_imag.abs() < 1e-7);
    }
}
