//! Periodic stabilizers `ξ` of Hill operators (`½ξ‴ + 2uξ′ + u′ξ = 0`), the
//! first integral `I_u(ξ) = ξξ″ − ½ξ′² + 2uξ²`, normalization and the
//! Kirillov normal forms.

use crate::error::{Error, Result};
use crate::fnspace::{find_zeros, real_profile, PeriodicFn, TorusZero, TrigPoly, TWO_PI};
use crate::hill::{classify, floquet, ClassTag, FloquetData, HillOperator, MonodromyClass};
use crate::Settings;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Zero structure of a stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizerKind {
    /// No zeros.
    CaseI,
    /// Simple zeros (an even number).
    CaseII,
    /// Double zeros only.
    CaseIII,
}

impl StabilizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            StabilizerKind::CaseI => "I",
            StabilizerKind::CaseII => "II",
            StabilizerKind::CaseIII => "III",
        }
    }
}

/// A periodic stabilizer stored as a real profile `p` with `ξ = p` or `ξ = i·p`.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    pub profile: TrigPoly,
    pub imaginary: bool,
    /// `I_u(ξ)` of ξ itself (so `−I_u(p)` when imaginary).
    pub i_value: f64,
    pub kind: StabilizerKind,
    pub zeros: Vec<TorusZero>,
    /// `ξ = q11 ψ1² + 2 q12 ψ1ψ2 + q22 ψ2²` when built from Floquet solutions.
    pub q: Option<[[f64; 2]; 2]>,
    /// Dimension of the space of periodic stabilizers (3 for `±Id` monodromy).
    pub fixed_dim: usize,
}

impl Stabilizer {
    /// ξ as a complex trigonometric polynomial.
    pub fn xi(&self) -> TrigPoly {
        if self.imaginary {
            self.profile.scale(I)
        } else {
            self.profile.clone()
        }
    }

    /// Builds a stabilizer from an explicit ξ, computing zeros, kind and I.
    pub fn from_xi(u: &PeriodicFn, xi: &TrigPoly, s: &Settings) -> Result<Stabilizer> {
        let (profile, imaginary) = real_profile(xi)?;
        let zeros = find_zeros(&profile, s.zero_options())?;
        let kind = kind_of(&zeros)?;
        let inv = invariant_i(u, xi)?;
        Ok(Stabilizer { profile, imaginary, i_value: inv.value, kind, zeros, q: None, fixed_dim: 1 })
    }

    /// Max-norm residual of `½ξ‴ + 2uξ′ + u′ξ`, relative to `max|ξ|`.
    pub fn ode_residual(&self, u: &PeriodicFn) -> f64 {
        stabilizer_residual(u, &self.profile)
    }
}

/// Relative residual of the stabilizer equation for a real profile.
pub fn stabilizer_residual(u: &PeriodicFn, p: &TrigPoly) -> f64 {
    let d1 = p.derivative();
    let d3 = d1.derivative().derivative();
    let m = 512;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..m {
        let z = Complex64::new(TWO_PI * j as f64 / m as f64, 0.0);
        let uu = u.eval(z);
        let du = u.deriv(z, 1);
        let r = 0.5 * d3.eval(z) + 2.0 * uu * d1.eval(z) + du * p.eval(z);
        worst = worst.max(r.norm());
        scale = scale.max(p.eval(z).norm());
    }
    worst / scale.max(1e-300)
}

fn kind_of(zeros: &[TorusZero]) -> Result<StabilizerKind> {
    if zeros.is_empty() {
        return Ok(StabilizerKind::CaseI);
    }
    let simple = zeros.iter().filter(|z| z.multiplicity == 1).count();
    if simple == zeros.len() {
        if simple % 2 != 0 {
            return Err(Error::InconsistentInvariant(format!("odd number ({simple}) of simple zeros")));
        }
        Ok(StabilizerKind::CaseII)
    } else if simple == 0 {
        Ok(StabilizerKind::CaseIII)
    } else {
        Err(Error::InconsistentInvariant("mixed simple and double zeros".into()))
    }
}

/// Value of `I_u(ξ)` and its drift over the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantValue {
    pub value: f64,
    pub drift: f64,
}

/// θ-average of `ξξ″ − ½ξ′² + 2uξ²` with its maximal deviation.
pub fn invariant_i(u: &PeriodicFn, xi: &TrigPoly) -> Result<InvariantValue> {
    let d1 = xi.derivative();
    let d2 = d1.derivative();
    let m = 512;
    let vals: Vec<Complex64> = (0..m)
        .map(|j| {
            let z = Complex64::new(TWO_PI * j as f64 / m as f64, 0.0);
            let x = xi.eval(z);
            x * d2.eval(z) - 0.5 * d1.eval(z).powi(2) + 2.0 * u.eval(z) * x * x
        })
        .collect();
    let mean: Complex64 = vals.iter().sum::<Complex64>() / m as f64;
    let drift = vals.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
    let xmax = xi.max_abs(m);
    let scale = mean.norm().max(xmax * xmax);
    if drift > 1e-6 * scale {
        return Err(Error::NotInvariant { drift });
    }
    if mean.im.abs() > 1e-6 * scale {
        return Err(Error::InconsistentInvariant("I_u(ξ) is not real".into()));
    }
    Ok(InvariantValue { value: mean.re, drift })
}

fn apply_sym(m: &[[f64; 2]; 2], q: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    // MᵀQM − Q
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    acc += m[k][i] * q[k][l] * m[l][j];
                }
            }
            out[i][j] = acc - q[i][j];
        }
    }
    out
}

fn sym(v: &[f64; 3]) -> [[f64; 2]; 2] {
    [[v[0], v[1]], [v[1], v[2]]]
}

/// Basis of symmetric `Q` with `MᵀQM = Q`, where `M` is a Floquet matrix in
/// the convention `ψ(θ+2π) = Mψ(θ)` (so `ξ = ψᵀQψ` is periodic).
pub fn fixed_forms(m: &[[f64; 2]; 2], tol: f64) -> Option<Vec<[[f64; 2]; 2]>> {
    let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut l = Matrix3::zeros();
    for (c, b) in basis.iter().enumerate() {
        let r = apply_sym(m, &sym(b));
        l[(0, c)] = r[0][0];
        l[(1, c)] = r[0][1];
        l[(2, c)] = r[1][1];
    }
    let norm = m.iter().flatten().map(|v| v * v).sum::<f64>().max(1.0);
    let svd = l.svd(false, true);
    let vt = svd.v_t?;
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 || svd.singular_values[i] < tol * norm {
            out.push(sym(&[vt[(i, 0)], vt[(i, 1)], vt[(i, 2)]]));
        }
    }
    Some(out)
}

fn xi_samples(fl: &FloquetData, q: &[[f64; 2]; 2]) -> Vec<f64> {
    fl.psi1
        .iter()
        .zip(&fl.psi2)
        .map(|(a, b)| q[0][0] * a[0] * a[0] + 2.0 * q[0][1] * a[0] * b[0] + q[1][1] * b[0] * b[0])
        .collect()
}

/// Removes Fourier noise: zeroes coefficients below `tol` of the largest, or
/// below ten times the level of the top quarter of the spectrum, and trims.
fn denoise(p: &TrigPoly, tol: f64) -> TrigPoly {
    let n = p.degree() as i64;
    let floor = (3 * n / 4..=n).map(|m| p.coeff(m).norm().max(p.coeff(-m).norm())).fold(0.0, f64::max);
    let thr = (tol * p.max_coeff()).max(10.0 * floor);
    let c: Vec<Complex64> =
        p.coeffs().iter().map(|c| if c.norm() < thr { Complex64::new(0.0, 0.0) } else { *c }).collect();
    TrigPoly::from_coeffs(c).expect("odd length preserved").chop(0.0)
}

fn profile_from_q(fl: &FloquetData, q: &[[f64; 2]; 2]) -> TrigPoly {
    let s = xi_samples(fl, q);
    let n = s.len() - 1;
    let c: Vec<Complex64> = s[..n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    denoise(&TrigPoly::from_samples(&c).real_part(), 1e-12)
}

/// Fourier matrix of `ξ ↦ ξ‴ + 4uξ′ + 2u′ξ` from modes `|k| ≤ deg` to
/// modes `|m| ≤ rows`.
fn stabilizer_matrix(u: &TrigPoly, deg: usize, rows: usize) -> DMatrix<Complex64> {
    let (d, e) = (deg as i64, rows as i64);
    DMatrix::from_fn(2 * rows + 1, 2 * deg + 1, |r, c| {
        let (m, k) = (r as i64 - e, c as i64 - d);
        let mut v = u.coeff(m - k) * I * (4.0 * k as f64 + 2.0 * (m - k) as f64);
        if m == k {
            v += I * (-(m as f64).powi(3));
        }
        v
    })
}

/// Projects `p` onto the `dim` right singular vectors of the Fourier
/// stabilizer operator with the smallest singular values. Sampling a product
/// of growing solutions loses digits to cancellation; this puts them back.
/// Returns `p` unchanged unless the kernel is clearly resolved and the
/// correction is tiny.
fn refine_profile(h: &HillOperator, p: &TrigPoly, dim: usize) -> TrigPoly {
    const MAX_DEGREE: usize = 96;
    let deg = p.degree() + 8;
    if deg > MAX_DEGREE {
        return p.clone();
    }
    let u = match h.u.as_trig(4 * deg) {
        Some(u) => u,
        None => return p.clone(),
    };
    let l = stabilizer_matrix(&u, deg, 3 * deg);
    let x = DVector::from_fn(2 * deg + 1, |r, _| p.coeff(r as i64 - deg as i64));
    let svd = l.svd(false, true);
    let vt = match svd.v_t {
        Some(v) => v,
        None => return p.clone(),
    };
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap());
    let smax = sv.max();
    if sv[order[dim - 1]] > 1e-8 * smax || (dim < sv.len() && sv[order[dim]] < 1e-4 * smax) {
        return p.clone();
    }
    let mut y = DVector::<Complex64>::zeros(x.len());
    for &i in &order[..dim] {
        let v = vt.row(i).adjoint();
        let c = v.dotc(&x);
        y += v * c;
    }
    if (&y - &x).norm() > 1e-6 * x.norm() {
        return p.clone();
    }
    match TrigPoly::from_coeffs(y.iter().copied().collect()) {
        Ok(t) => t.real_part().chop(1e-15),
        Err(_) => p.clone(),
    }
}

/// Minimum-variance positive-definite form (det 1) among all fixed forms,
/// used when every quadratic form is preserved (`M = ±Id`).
fn distinguished_form(fl: &FloquetData) -> [[f64; 2]; 2] {
    let n = fl.n_samples();
    // features (ψ1², 2ψ1ψ2, ψ2²) against q = (q11, q12, q22)
    let feats: Vec<[f64; 3]> = (0..n)
        .map(|j| {
            let (a, b) = (fl.psi1[j][0], fl.psi2[j][0]);
            [a * a, 2.0 * a * b, b * b]
        })
        .collect();
    let mut mean = [0.0; 3];
    for f in &feats {
        for k in 0..3 {
            mean[k] += f[k] / n as f64;
        }
    }
    let mut c = Matrix3::zeros();
    for f in &feats {
        for i in 0..3 {
            for j in 0..3 {
                c[(i, j)] += (f[i] - mean[i]) * (f[j] - mean[j]) / n as f64;
            }
        }
    }
    // det Q = q11 q22 − q12² = qᵀDq
    let d = Matrix3::new(0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0);
    let dinv = d.try_inverse().expect("D is invertible");
    let a = dinv * c;
    let mut best: Option<(f64, [[f64; 2]; 2])> = None;
    for ev in a.complex_eigenvalues().iter() {
        if ev.im.abs() > 1e-9 * (1.0 + ev.re.abs()) {
            continue;
        }
        let shifted = a - Matrix3::identity() * ev.re;
        let svd = shifted.svd(false, true);
        let vt = match svd.v_t {
            Some(v) => v,
            None => continue,
        };
        let imin = (0..3)
            .min_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap())
            .unwrap();
        let v = Vector3::new(vt[(imin, 0)], vt[(imin, 1)], vt[(imin, 2)]);
        let det = (v.transpose() * d * v)[0];
        if det <= 0.0 {
            continue;
        }
        let s = v[0].signum() / det.sqrt();
        let q = [[v[0] * s, v[1] * s], [v[1] * s, v[2] * s]];
        let var = (v.transpose() * c * v)[0] / det;
        if best.as_ref().map_or(true, |(b, _)| var < *b) {
            best = Some((var, q));
        }
    }
    best.map(|b| b.1).unwrap_or([[1.0, 0.0], [0.0, 1.0]])
}

fn sign_convention(p: TrigPoly) -> TrigPoly {
    let scale = p.max_coeff().max(1e-300);
    let v0 = p.eval_re(0.0);
    let d0 = p.derivative().eval_re(0.0);
    let flip = if v0.abs() > 1e-9 * scale { v0 < 0.0 } else { d0 < 0.0 };
    if flip {
        p.scale_re(-1.0)
    } else {
        p
    }
}

/// Result of [`periodic_stabilizer`], with the Floquet data it was built from.
#[derive(Debug, Clone)]
pub struct StabilizerReport {
    pub stabilizer: Stabilizer,
    pub class: MonodromyClass,
    pub floquet: FloquetData,
}

/// Finds the periodic stabilizer of `∂² + u` from the Floquet matrix. For
/// elliptic and hyperbolic monodromy the output is normalized to `I = 2`
/// (imaginary in the hyperbolic case); unipotent stabilizers (`I = 0`) have
/// mean 1 and are non-negative.
pub fn periodic_stabilizer(h: &HillOperator, s: &Settings) -> Result<StabilizerReport> {
    let fl = floquet(h, s)?;
    let class = classify(&fl.m, s.class_tol);
    let forms = fixed_forms(&fl.m, 1e-8).ok_or_else(|| Error::InvalidInput("SVD failed".into()))?;
    let (q, fixed_dim) = match class.tag {
        ClassTag::PlusId | ClassTag::MinusId => (distinguished_form(&fl), 3),
        _ => {
            let q = forms[0];
            let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
            let q = match class.tag {
                ClassTag::Elliptic | ClassTag::Hyperbolic => {
                    let sc = 1.0 / det.abs().sqrt();
                    [[q[0][0] * sc, q[0][1] * sc], [q[1][0] * sc, q[1][1] * sc]]
                }
                _ => q,
            };
            (q, forms.len())
        }
    };
    let mut profile = refine_profile(h, &profile_from_q(&fl, &q), fixed_dim);
    let mut q = q;
    let imaginary = class.tag == ClassTag::Hyperbolic;
    if matches!(class.tag, ClassTag::UnipotentPlus | ClassTag::UnipotentMinus) {
        let m = profile.mean().re;
        let sc = if m.abs() > 1e-300 { 1.0 / m } else { 1.0 };
        profile = profile.scale_re(sc);
        q = [[q[0][0] * sc, q[0][1] * sc], [q[1][0] * sc, q[1][1] * sc]];
    }
    let before = profile.eval_re(0.0);
    profile = sign_convention(profile);
    if profile.eval_re(0.0) != before {
        q = [[-q[0][0], -q[0][1]], [-q[1][0], -q[1][1]]];
    }
    let zeros = find_zeros(&profile, s.zero_options())?;
    let kind = kind_of(&zeros)?;
    let xi = if imaginary { profile.scale(I) } else { profile.clone() };
    let inv = invariant_i(&h.u, &xi)?;
    Ok(StabilizerReport {
        stabilizer: Stabilizer { profile, imaginary, i_value: inv.value, kind, zeros, q: Some(q), fixed_dim },
        class,
        floquet: fl,
    })
}

/// Rescales ξ so that `I_u(ξ) = 2`; negative invariants give `ξ = iη`.
pub fn normalize_stabilizer(st: &Stabilizer) -> Result<Stabilizer> {
    let scale_ref = st.profile.max_coeff().powi(2).max(1e-300);
    if st.i_value.abs() < 1e-9 * scale_ref || st.kind == StabilizerKind::CaseIII {
        return Err(Error::ZeroInvariant);
    }
    // I_u(ip) = −I_u(p)
    let ip = if st.imaginary { -st.i_value } else { st.i_value };
    let c = (2.0 / ip.abs()).sqrt();
    let profile = sign_convention(st.profile.scale_re(c));
    let q = st.q.map(|q| [[q[0][0] * c, q[0][1] * c], [q[1][0] * c, q[1][1] * c]]);
    Ok(Stabilizer { profile, imaginary: ip < 0.0, i_value: 2.0, q, ..st.clone() })
}

/// Normal forms of Kirillov's classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KirillovCase {
    /// `u = α`, `ξ = a`.
    I { alpha: f64, a: f64 },
    /// `u = u_{n,α}`, `ξ = a sin nθ (1 + α sin nθ)`.
    II { n: u32, alpha: f64, a: f64 },
    /// `u = v_{n,α}`, `ξ = ±(1 + sin nθ)(1 + α sin nθ)`.
    III { n: u32, alpha: f64, sign: f64 },
}

/// A closed-form Hill potential with one of its stabilizers.
#[derive(Debug, Clone)]
pub struct KirillovPair {
    pub u: PeriodicFn,
    pub xi: TrigPoly,
}

fn sin_n(n: u32) -> TrigPoly {
    let mut s = vec![0.0; n as usize];
    s[n as usize - 1] = 1.0;
    TrigPoly::from_real(0.0, &[], &s)
}

fn check_n_alpha(n: u32, alpha: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::ParameterOutOfRange(format!("n = {n} must be ≥ 1")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::ParameterOutOfRange(format!("α = {alpha} must lie in [0, 1)")));
    }
    Ok(())
}

/// Strip half-width on which `1 + α sin nz` stays away from zero.
fn strip_width(n: u32, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        10.0
    } else {
        (1.0 / alpha).acosh() / n as f64
    }
}

/// `u_{n,α} = n²/4 · (1 + 6αs + 4α²s²)/(1 + αs)²` with `s = sin nθ`.
pub fn u_n_alpha(n: u32, alpha: f64) -> PeriodicFn {
    let nf = n as f64;
    PeriodicFn::analytic(format!("u_{{{n},{alpha}}}"), 1.0, strip_width(n, alpha), move |z| {
        let s = (z * nf).sin();
        let d = 1.0 + alpha * s;
        nf * nf / 4.0 * (1.0 + 6.0 * alpha * s + 4.0 * alpha * alpha * s * s) / (d * d)
    })
}

/// `v_{n,α} = n²/4 · ((α−1)² + 2α(3−α)s + 4α²s²)/(1 + αs)²`.
pub fn v_n_alpha(n: u32, alpha: f64) -> PeriodicFn {
    let nf = n as f64;
    PeriodicFn::analytic(format!("v_{{{n},{alpha}}}"), 1.0, strip_width(n, alpha), move |z| {
        let s = (z * nf).sin();
        let d = 1.0 + alpha * s;
        nf * nf / 4.0 * ((alpha - 1.0).powi(2) + 2.0 * alpha * (3.0 - alpha) * s + 4.0 * alpha * alpha * s * s)
            / (d * d)
    })
}

/// Closed-form Kirillov pair `(u, ξ)`.
pub fn kirillov_family(case: KirillovCase) -> Result<KirillovPair> {
    match case {
        KirillovCase::I { alpha, a } => {
            if a == 0.0 || !alpha.is_finite() || !a.is_finite() {
                return Err(Error::ParameterOutOfRange("case I needs finite α and a ≠ 0".into()));
            }
            Ok(KirillovPair { u: PeriodicFn::constant(alpha), xi: TrigPoly::constant(a) })
        }
        KirillovCase::II { n, alpha, a } => {
            check_n_alpha(n, alpha)?;
            if a == 0.0 || !a.is_finite() {
                return Err(Error::ParameterOutOfRange("case II needs a ≠ 0".into()));
            }
            let s = sin_n(n);
            let xi = s.mul(&s.scale_re(alpha).add_constant(1.0)).scale_re(a);
            Ok(KirillovPair { u: u_n_alpha(n, alpha), xi })
        }
        KirillovCase::III { n, alpha, sign } => {
            check_n_alpha(n, alpha)?;
            if sign.abs() != 1.0 {
                return Err(Error::ParameterOutOfRange("case III sign must be ±1".into()));
            }
            let s = sin_n(n);
            let xi = s.add_constant(1.0).mul(&s.scale_re(alpha).add_constant(1.0)).scale_re(sign);
            Ok(KirillovPair { u: v_n_alpha(n, alpha), xi })
        }
    }
}
