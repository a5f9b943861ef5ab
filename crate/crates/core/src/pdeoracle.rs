//! Grid propagator for `i∂_θψ = ½(−∂_x² + V)ψ` with `V = V₂x² + V₁x + V₀`,
//! used to check invariant conservation and monodromy phases independently
//! of the closed-form solutions.

use crate::elmonodromy::{ELCoefficients, ModelEigenfunction};
use crate::error::{Error, Result};
use crate::fnspace::TWO_PI;
use crate::hill;
use crate::svaction::SchrodingerOp;
use crate::Settings;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Edge band (fraction of the half-width) watched for leaking mass.
const EDGE_BAND: f64 = 0.1;
/// Largest edge mass fraction accepted for initial data.
const INITIAL_EDGE_TOL: f64 = 1e-8;
/// Largest edge mass fraction tolerated during evolution.
const LEAK_TOL: f64 = 1e-6;

/// Uniform space grid on `[−L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub l: f64,
    pub nx: usize,
}

impl SpaceGrid {
    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.nx as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| -self.l + j as f64 * self.dx()).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn ks(&self) -> Vec<f64> {
        let n = self.nx as i64;
        let dk = PI / self.l;
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }
}

/// Space grid plus time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub space: SpaceGrid,
    pub dtheta: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { space: SpaceGrid { l: 16.0, nx: 1024 }, dtheta: TWO_PI / 4096.0 }
    }
}

impl Grid {
    pub fn new(l: f64, nx: usize, dtheta: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidInput(format!("grid half-width {l} must be positive")));
        }
        if nx < 256 || !nx.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid size {nx} must be a power of two ≥ 256")));
        }
        if !(dtheta.is_finite() && dtheta > 0.0) {
            return Err(Error::InvalidInput(format!("time step {dtheta} must be positive")));
        }
        Ok(Grid { space: SpaceGrid { l, nx }, dtheta })
    }
}

/// Wavefunction on the grid at time `θ`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub theta: f64,
    pub values: Vec<Complex64>,
    norm: f64,
}

impl WaveState {
    pub fn new(theta: f64, values: Vec<Complex64>, grid: &SpaceGrid) -> Result<Self> {
        if values.len() != grid.nx {
            return Err(Error::InvalidInput(format!("state has {} values, grid has {}", values.len(), grid.nx)));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite wavefunction value".into()));
        }
        let norm = inner(&values, &values, grid).re.sqrt();
        Ok(WaveState { theta, values, norm })
    }

    /// Samples `f` on the grid.
    pub fn from_fn<F: Fn(f64) -> Complex64>(theta: f64, grid: &SpaceGrid, f: F) -> Result<Self> {
        Self::new(theta, grid.xs().into_iter().map(f).collect(), grid)
    }

    /// L² norm when the state was built.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    fn refresh(&mut self, grid: &SpaceGrid) {
        self.norm = inner(&self.values, &self.values, grid).re.sqrt();
    }
}

/// `∫ conj(a) b dx` by the rectangle rule.
pub fn inner(a: &[Complex64], b: &[Complex64], grid: &SpaceGrid) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * grid.dx()
}

/// Fraction of the mass within the edge band `|x| > (1 − 0.1)L`.
pub fn edge_mass(values: &[Complex64], grid: &SpaceGrid) -> f64 {
    let cut = (1.0 - EDGE_BAND) * grid.l;
    let (mut edge, mut total) = (0.0, 0.0);
    for (x, v) in grid.xs().iter().zip(values) {
        let m = v.norm_sqr();
        total += m;
        if x.abs() > cut {
            edge += m;
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Strang splitting with spectral kinetic step (exactly unitary).
    #[default]
    SplitStep,
    /// Crank–Nicolson with the three-point Laplacian.
    CrankNicolson,
}

/// FFT plans and scratch for spectral operations on one grid.
pub struct Spectral {
    grid: SpaceGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    ks: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    pub fn new(grid: SpaceGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.nx);
        let inverse = planner.plan_fft_inverse(grid.nx);
        let scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Spectral { grid, forward, inverse, ks: grid.ks(), scratch }
    }

    /// Multiplies the Fourier transform of `v` by `mult(k)` in place.
    fn apply<F: Fn(f64) -> Complex64>(&mut self, v: &mut [Complex64], mult: F) {
        self.forward.process_with_scratch(v, &mut self.scratch);
        let inv_n = 1.0 / self.grid.nx as f64;
        for (c, &k) in v.iter_mut().zip(&self.ks) {
            *c *= mult(k) * inv_n;
        }
        self.inverse.process_with_scratch(v, &mut self.scratch);
    }

    /// `∂_x^order v` by spectral differentiation.
    pub fn derivative(&mut self, v: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut out = v.to_vec();
        let nyq = PI / self.grid.dx();
        self.apply(&mut out, |k| if order % 2 == 1 && (k.abs() - nyq).abs() < 1e-9 * nyq { Complex64::new(0.0, 0.0) } else { (I * k).powu(order) });
        out
    }
}

/// Propagates `ψ0` to `theta_target` with the default split-step backend.
pub fn propagate(op: &SchrodingerOp, psi0: &WaveState, theta_target: f64, grid: &Grid) -> Result<WaveState> {
    propagate_with(op, psi0, theta_target, grid, Backend::SplitStep)
}

/// Propagates `ψ0` to `theta_target`. Each step uses the potential at the step
/// midpoint, which keeps both schemes second order in `dθ`.
pub fn propagate_with(op: &SchrodingerOp, psi0: &WaveState, theta_target: f64, grid: &Grid, backend: Backend) -> Result<WaveState> {
    let edge = edge_mass(&psi0.values, &grid.space);
    if edge > INITIAL_EDGE_TOL {
        return Err(Error::BoundaryLeak(edge));
    }
    evolve(op, psi0, theta_target, grid, backend)
}

fn evolve(op: &SchrodingerOp, psi0: &WaveState, theta_target: f64, grid: &Grid, backend: Backend) -> Result<WaveState> {
    let sg = &grid.space;
    if psi0.values.len() != sg.nx {
        return Err(Error::InvalidInput("state does not match the grid".into()));
    }
    let span = theta_target - psi0.theta;
    let steps = (span.abs() / grid.dtheta).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let xs = sg.xs();
    let mut psi = psi0.values.clone();
    let check_every = 64.max(steps / 64);
    match backend {
        Backend::SplitStep => {
            let mut sp = Spectral::new(*sg);
            for j in 0..steps {
                let tm = psi0.theta + (j as f64 + 0.5) * h;
                let (v2, v1, v0) = (op.v2.re(tm), op.v1.re(tm), op.v0.re(tm));
                let half: Vec<Complex64> =
                    xs.iter().map(|&x| (-I * (0.25 * h) * (v2 * x * x + v1 * x + v0)).exp()).collect();
                for (p, e) in psi.iter_mut().zip(&half) {
                    *p *= e;
                }
                sp.apply(&mut psi, |k| (-I * (0.5 * h) * k * k).exp());
                for (p, e) in psi.iter_mut().zip(&half) {
                    *p *= e;
                }
                leak_check(&psi, sg, j, steps, check_every)?;
            }
        }
        Backend::CrankNicolson => {
            let dx2 = sg.dx() * sg.dx();
            for j in 0..steps {
                let tm = psi0.theta + (j as f64 + 0.5) * h;
                let (v2, v1, v0) = (op.v2.re(tm), op.v1.re(tm), op.v0.re(tm));
                // H = ½(−Δ + V) with Δ the periodic three-point Laplacian
                let off = -0.5 / dx2;
                let diag: Vec<f64> = xs.iter().map(|&x| 1.0 / dx2 + 0.5 * (v2 * x * x + v1 * x + v0)).collect();
                let n = sg.nx;
                let hpsi = |p: &[Complex64], i: usize| diag[i] * p[i] + off * (p[(i + n - 1) % n] + p[(i + 1) % n]);
                let rhs: Vec<Complex64> = (0..n).map(|i| psi[i] - I * (0.5 * h) * hpsi(&psi, i)).collect();
                let a = I * (0.5 * h) * off;
                let b: Vec<Complex64> = diag.iter().map(|&d| Complex64::new(1.0, 0.5 * h * d)).collect();
                psi = cyclic_tridiagonal(a, &b, a, &rhs);
                leak_check(&psi, sg, j, steps, check_every)?;
            }
        }
    }
    let mut out = WaveState { theta: theta_target, values: psi, norm: 0.0 };
    out.refresh(sg);
    Ok(out)
}

fn leak_check(psi: &[Complex64], sg: &SpaceGrid, j: usize, steps: usize, every: usize) -> Result<()> {
    if (j + 1) % every == 0 || j + 1 == steps {
        let e = edge_mass(psi, sg);
        if e > LEAK_TOL || !e.is_finite() {
            return Err(Error::BoundaryLeak(e));
        }
    }
    Ok(())
}

/// Solves the periodic tridiagonal system with constant off-diagonals `lo`,
/// `up` and diagonal `b` by Sherman–Morrison.
fn cyclic_tridiagonal(lo: Complex64, b: &[Complex64], up: Complex64, r: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= up * lo / gamma;
    let x = thomas(lo, &bb, up, r);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = lo;
    let z = thomas(lo, &bb, up, &u);
    let fact = (x[0] + up * x[n - 1] / gamma) / (Complex64::new(1.0, 0.0) + z[0] + up * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(lo: Complex64, b: &[Complex64], up: Complex64, r: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = up / b[0];
    d[0] = r[0] / b[0];
    for i in 1..n {
        let m = b[i] - lo * c[i - 1];
        c[i] = up / m;
        d[i] = (r[i] - lo * d[i - 1]) / m;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `⟨ψ, EL(θ)ψ⟩` with spectral derivatives.
pub fn el_expectation(el: &ELCoefficients, psi: &WaveState, sp: &mut Spectral) -> Complex64 {
    let sg = sp.grid;
    let pt = el.at(psi.theta);
    let d1 = sp.derivative(&psi.values, 1);
    let d2 = sp.derivative(&psi.values, 2);
    let applied: Vec<Complex64> = sg
        .xs()
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let p = psi.values[j];
            // x∂ + ∂x = 2x∂ + 1
            0.5 * (pt.a * x * x * p - pt.b * d2[j] - I * pt.c * (2.0 * x * d1[j] + p) - I * pt.d * d1[j] + pt.e * x * p + pt.f * p)
        })
        .collect();
    inner(&psi.values, &applied, &sg)
}

/// Largest deviation of `⟨ψ(θ), EL(θ)ψ(θ)⟩` from its initial value over one
/// period, sampled at `samples` equally spaced times.
pub fn expectation_drift(op: &SchrodingerOp, el: &ELCoefficients, psi0: &WaveState, samples: usize, grid: &Grid) -> Result<f64> {
    let samples = samples.max(1);
    let edge = edge_mass(&psi0.values, &grid.space);
    if edge > INITIAL_EDGE_TOL {
        return Err(Error::BoundaryLeak(edge));
    }
    let mut sp = Spectral::new(grid.space);
    let e0 = el_expectation(el, psi0, &mut sp);
    let mut psi = psi0.clone();
    let mut drift: f64 = 0.0;
    for j in 1..=samples {
        let target = psi0.theta + TWO_PI * j as f64 / samples as f64;
        psi = evolve(op, &psi, target, grid, Backend::SplitStep)?;
        drift = drift.max((el_expectation(el, &psi, &mut sp) - e0).norm());
    }
    Ok(drift)
}

/// Width `w` of the Gaussian `e^{−x²/(2w²)}` whose position spread stays
/// smallest over one period, from the classical flow `ẍ = −V₂x`.
pub fn probe_width(op: &SchrodingerOp, s: &Settings) -> Result<f64> {
    let fl = hill::floquet(&op.hill()?, s)?;
    // ⟨x²⟩(θ) = (ψ1² w² + ψ2²/w²)/2
    let spread = |w: f64| {
        fl.psi1.iter().zip(&fl.psi2).map(|(a, b)| a[0] * a[0] * w * w + b[0] * b[0] / (w * w)).fold(0.0, f64::max)
    };
    let ws = (0..=200).map(|j| 0.1 * 100f64.powf(j as f64 / 200.0));
    Ok(ws.min_by(|a, b| spread(*a).partial_cmp(&spread(*b)).unwrap()).unwrap_or(1.0))
}

/// Normalized Gaussian of width `w` centred at `x0`.
pub fn gaussian_probe(grid: &SpaceGrid, w: f64, x0: f64) -> Result<WaveState> {
    let c = 1.0 / (PI.sqrt() * w).sqrt();
    WaveState::from_fn(0.0, grid, |x| Complex64::new(c * (-(x - x0).powi(2) / (2.0 * w * w)).exp(), 0.0))
}

/// `⟨ψ(0), ψ(2π)⟩/⟨ψ(0), ψ(0)⟩` for the grid samples of `state` at θ = 0.
pub fn measure_monodromy_phase(op: &SchrodingerOp, state: &ModelEigenfunction, grid: &Grid) -> Result<Complex64> {
    let psi0 = WaveState::from_fn(0.0, &grid.space, |x| state.eval(0.0, x))?;
    let psi1 = propagate(op, &psi0, TWO_PI, grid)?;
    let r = inner(&psi0.values, &psi1.values, &grid.space) / inner(&psi0.values, &psi0.values, &grid.space);
    if r.norm() < 0.99 {
        return Err(Error::NotEigenlike(r.norm()));
    }
    Ok(r)
}
