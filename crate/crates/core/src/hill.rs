//! Hill operators `∂² + u`: Floquet matrix, conjugacy class, lifted monodromy
//! and periodic solutions of the inhomogeneous equation.

use crate::error::{Error, Result};
use crate::fnspace::{PeriodicFn, TrigPoly, TWO_PI};
use crate::ode::Dopri5;
use crate::Settings;
use nalgebra::Matrix2;
use num_complex::Complex64;

/// Convention for the Floquet matrix returned by [`floquet`].
pub const FLOQUET_CONVENTION: &str =
    "M = [[psi1(2pi), psi1'(2pi)], [psi2(2pi), psi2'(2pi)]], psi1 = (1,0), psi2 = (0,1) at theta = 0";

/// `∂² + u` with a real periodic potential.
#[derive(Debug, Clone)]
pub struct HillOperator {
    pub u: PeriodicFn,
}

impl HillOperator {
    pub fn new(u: PeriodicFn) -> Result<Self> {
        if u.period_sign() < 0.0 {
            return Err(Error::InvalidInput("Hill potential must be periodic".into()));
        }
        if !u.is_real(1e-9) {
            return Err(Error::InvalidInput("Hill potential must be real".into()));
        }
        Ok(HillOperator { u })
    }

    pub fn from_trig(u: TrigPoly) -> Result<Self> {
        Self::new(PeriodicFn::Trig(u))
    }

    pub fn u_at(&self, theta: f64) -> f64 {
        self.u.re(theta)
    }
}

/// Fundamental solutions sampled on a uniform grid of `[0, 2π]`.
#[derive(Debug, Clone)]
pub struct FloquetData {
    pub m: [[f64; 2]; 2],
    /// `grid[j] = 2πj/N`, `j = 0..=N`.
    pub grid: Vec<f64>,
    /// `(ψ1, ψ1')` at each grid point.
    pub psi1: Vec<[f64; 2]>,
    /// `(ψ2, ψ2')` at each grid point.
    pub psi2: Vec<[f64; 2]>,
    pub wronskian_drift: f64,
}

impl FloquetData {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn n_samples(&self) -> usize {
        self.grid.len() - 1
    }

    /// Fundamental matrix `Φ` with columns `(ψ_i, ψ_i')(2π)`.
    pub fn phi(&self) -> Matrix2<f64> {
        Matrix2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }
}

pub(crate) fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|j| TWO_PI * j as f64 / n as f64).collect()
}

/// Integrates both normalized fundamental solutions over one period.
pub fn floquet(h: &HillOperator, s: &Settings) -> Result<FloquetData> {
    let grid = uniform_grid(s.samples);
    let solver = Dopri5::new(s.rk_tol);
    let out = solver.solve(
        |t, y, dy| {
            let u = h.u_at(t);
            dy[0] = y[1];
            dy[1] = -u * y[0];
            dy[2] = y[3];
            dy[3] = -u * y[2];
        },
        0.0,
        &[1.0, 0.0, 0.0, 1.0],
        &grid,
        false,
    )?;
    let mut psi1 = Vec::with_capacity(grid.len());
    let mut psi2 = Vec::with_capacity(grid.len());
    let mut drift: f64 = 0.0;
    for st in &out.states {
        if st.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegratorFailure { theta: 0.0, reason: "non-finite solution".into() });
        }
        psi1.push([st[0], st[1]]);
        psi2.push([st[2], st[3]]);
        drift = drift.max((st[0] * st[3] - st[1] * st[2] - 1.0).abs());
    }
    let e = out.states.last().unwrap();
    Ok(FloquetData { m: [[e[0], e[1]], [e[2], e[3]]], grid, psi1, psi2, wronskian_drift: drift })
}

/// Conjugacy class of a monodromy matrix in SL(2, R).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    Elliptic,
    Hyperbolic,
    UnipotentPlus,
    UnipotentMinus,
    PlusId,
    MinusId,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::Elliptic => "elliptic",
            ClassTag::Hyperbolic => "hyperbolic",
            ClassTag::UnipotentPlus => "unipotent+",
            ClassTag::UnipotentMinus => "unipotent-",
            ClassTag::PlusId => "+Id",
            ClassTag::MinusId => "-Id",
        }
    }

    /// Sign of the eigenvalues: `-1` for classes with trace near `-2`.
    pub fn sign(&self) -> f64 {
        match self {
            ClassTag::UnipotentMinus | ClassTag::MinusId => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyClass {
    pub tag: ClassTag,
    pub trace: f64,
    /// Elliptic: rotation angle in `(0, π)`; hyperbolic: `log |λ|`; otherwise 0.
    pub lambda: f64,
    /// Trace within ten times the tolerance of `±2`.
    pub low_confidence: bool,
}

/// Classifies a monodromy matrix by its trace, with tolerance `class_tol`.
pub fn classify(m: &[[f64; 2]; 2], class_tol: f64) -> MonodromyClass {
    let tr = m[0][0] + m[1][1];
    let dist = (tr.abs() - 2.0).abs();
    let low_confidence = dist < 10.0 * class_tol;
    if tr.abs() < 2.0 - class_tol {
        return MonodromyClass {
            tag: ClassTag::Elliptic,
            trace: tr,
            lambda: (0.5 * tr).acos(),
            low_confidence,
        };
    }
    if tr.abs() > 2.0 + class_tol {
        let l = 0.5 * (tr.abs() + (tr * tr - 4.0).sqrt());
        return MonodromyClass { tag: ClassTag::Hyperbolic, trace: tr, lambda: l.ln(), low_confidence };
    }
    let s = tr.signum();
    let norm = m.iter().flatten().map(|v| v.abs()).fold(1.0, f64::max);
    let off = (m[0][0] - s).abs().max((m[1][1] - s).abs()).max(m[0][1].abs()).max(m[1][0].abs());
    let tag = match (off < class_tol * norm, s > 0.0) {
        (true, true) => ClassTag::PlusId,
        (true, false) => ClassTag::MinusId,
        (false, true) => ClassTag::UnipotentPlus,
        (false, false) => ClassTag::UnipotentMinus,
    };
    MonodromyClass { tag, trace: tr, lambda: 0.0, low_confidence }
}

/// Monodromy lifted to the universal cover of SL(2, R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedMonodromy {
    pub class: MonodromyClass,
    /// Total angle swept by `(ψ1, ψ2)` in the metric of `q` (det 1).
    pub delta_omega: f64,
    pub winding: i64,
    pub q: [[f64; 2]; 2],
}

/// Positive-definite, determinant-one quadratic form preserved by an elliptic `m`.
pub fn elliptic_metric(m: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    // MᵀQM = Q has a one-dimensional solution space for elliptic M
    let basis = crate::stabilizer::fixed_forms(m, 1e-9)?;
    let q = basis.first()?;
    let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    if det <= 0.0 {
        return None;
    }
    let s = q[0][0].signum() / det.sqrt();
    Some([[q[0][0] * s, q[0][1] * s], [q[1][0] * s, q[1][1] * s]])
}

/// Computes the winding of the monodromy: the angle `ω` swept by the solution
/// row `(ψ1, ψ2)`, with `ω' = W/(ψᵀQψ)`.
pub fn lifted_monodromy(h: &HillOperator, s: &Settings) -> Result<LiftedMonodromy> {
    let fl = floquet(h, s)?;
    let class = classify(&fl.m, s.class_tol);
    let q = match class.tag {
        ClassTag::Elliptic => elliptic_metric(&fl.m).unwrap_or([[1.0, 0.0], [0.0, 1.0]]),
        _ => [[1.0, 0.0], [0.0, 1.0]],
    };
    let solver = Dopri5::new(s.rk_tol);
    let out = solver.solve(
        |t, y, dy| {
            let u = h.u_at(t);
            dy[0] = y[1];
            dy[1] = -u * y[0];
            dy[2] = y[3];
            dy[3] = -u * y[2];
            let w = y[0] * y[3] - y[1] * y[2];
            let qf = q[0][0] * y[0] * y[0] + 2.0 * q[0][1] * y[0] * y[2] + q[1][1] * y[2] * y[2];
            dy[4] = w / qf;
        },
        0.0,
        &[1.0, 0.0, 0.0, 1.0, 0.0],
        &[TWO_PI],
        false,
    )?;
    let d = out.states[0][4];
    Ok(LiftedMonodromy { class, delta_omega: d, winding: (d / TWO_PI).floor() as i64, q })
}

/// Periodic (or antiperiodic) solution of `w'' + u w = r`.
#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    /// Period sign imposed: `w(θ + 2π) = sign · w(θ)`.
    pub sign: f64,
    /// Dimension of the homogeneous solution space with the same period sign.
    pub kernel_dim: usize,
    /// Kernel functions sampled on the grid (orthonormal in `L²`).
    pub kernel: Vec<Vec<f64>>,
    /// Relative residual of the solvability condition (0 when non-resonant).
    pub solvability_residual: f64,
}

impl PeriodicSolution {
    pub fn to_fn(&self) -> PeriodicFn {
        samples_to_fn(&self.w[..self.w.len() - 1], self.sign)
    }
}

/// Turns uniform samples on `[0, 2π)` into a Fourier form with the given period sign.
pub fn samples_to_fn(samples: &[f64], sign: f64) -> PeriodicFn {
    if sign > 0.0 {
        let c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        PeriodicFn::Trig(TrigPoly::from_samples(&c).chop(1e-14))
    } else {
        let mut c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        c.extend(samples.iter().map(|&v| Complex64::new(-v, 0.0)));
        PeriodicFn::Cover(TrigPoly::from_samples(&c).chop(1e-14))
    }
}

fn l2_dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum::<f64>() * TWO_PI / n as f64
}

/// Solves `w'' + u w = rhs` with `w(θ+2π) = sign·w(θ)`. When the homogeneous
/// equation has solutions of that period sign the minimum-norm solution
/// orthogonal to them is returned, together with the solvability residual.
pub fn periodic_solve<F>(h: &HillOperator, fl: &FloquetData, rhs: F, sign: f64, s: &Settings) -> Result<PeriodicSolution>
where
    F: Fn(f64) -> f64,
{
    let solver = Dopri5::new(s.rk_tol);
    let out = solver.solve(
        |t, y, dy| {
            dy[0] = y[1];
            dy[1] = rhs(t) - h.u_at(t) * y[0];
        },
        0.0,
        &[0.0, 0.0],
        &fl.grid,
        false,
    )?;
    let yp = out.states.last().unwrap();
    let a = fl.phi() - Matrix2::identity() * sign;
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max().max(1.0);
    let tol = 1e-7 * smax;
    let rank_tol = 1e-8f64.max(s.rk_tol * 100.0) * smax;
    let b = nalgebra::Vector2::new(-yp[0], -yp[1]);
    let c = svd.solve(&b, tol).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let v_t = svd.v_t.unwrap();
    let mut kernel_vecs = Vec::new();
    for i in 0..2 {
        if svd.singular_values[i] < rank_tol.max(tol) {
            kernel_vecs.push(nalgebra::Vector2::new(v_t[(i, 0)], v_t[(i, 1)]));
        }
    }
    let n = fl.grid.len();
    let mut w: Vec<f64> = (0..n).map(|j| out.states[j][0] + c[0] * fl.psi1[j][0] + c[1] * fl.psi2[j][0]).collect();
    let mut dw: Vec<f64> = (0..n).map(|j| out.states[j][1] + c[0] * fl.psi1[j][1] + c[1] * fl.psi2[j][1]).collect();
    let mut kernel: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for v in &kernel_vecs {
        let mut k: Vec<f64> = (0..n).map(|j| v[0] * fl.psi1[j][0] + v[1] * fl.psi2[j][0]).collect();
        let mut dk: Vec<f64> = (0..n).map(|j| v[0] * fl.psi1[j][1] + v[1] * fl.psi2[j][1]).collect();
        for (q, dq) in &kernel {
            let p = l2_dot(&k, q);
            k.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            dk.iter_mut().zip(dq).for_each(|(x, y)| *x -= p * y);
        }
        let nrm = l2_dot(&k, &k).sqrt();
        k.iter_mut().for_each(|x| *x /= nrm);
        dk.iter_mut().for_each(|x| *x /= nrm);
        kernel.push((k, dk));
    }
    for (k, dk) in &kernel {
        let p = l2_dot(&w, k);
        w.iter_mut().zip(k).for_each(|(x, y)| *x -= p * y);
        dw.iter_mut().zip(dk).for_each(|(x, y)| *x -= p * y);
    }
    let solvability_residual = if kernel.is_empty() {
        0.0
    } else {
        let r: Vec<f64> = fl.grid.iter().map(|&t| rhs(t)).collect();
        let rn = l2_dot(&r, &r).sqrt().max(1e-300);
        kernel.iter().map(|(k, _)| l2_dot(&r, k).abs() / rn).fold(0.0, f64::max)
    };
    Ok(PeriodicSolution {
        grid: fl.grid.clone(),
        w,
        dw,
        sign,
        kernel_dim: kernel.len(),
        kernel: kernel.into_iter().map(|(k, _)| k).collect(),
        solvability_residual,
    })
}
