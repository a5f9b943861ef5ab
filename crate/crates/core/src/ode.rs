//! Dormand–Prince 5(4) integrator with step control and dense output.
//!
//! States are real vectors; complex systems are packed as (re, im) pairs by
//! the caller.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and limits for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 { rtol: tol, atol: tol, max_steps: 2_000_000 }
    }
}

/// One accepted step, enough to evaluate the continuous extension.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

/// Dense-output record of a whole integration.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    steps: Vec<DenseStep>,
}

impl DenseSolution {
    /// Evaluates the continuous extension at `t` (clamped to the integration span).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let idx = match self
            .steps
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let s = &self.steps[idx.min(self.steps.len() - 1)];
        let th = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let n = s.rcont[0].len();
        (0..n)
            .map(|i| {
                s.rcont[0][i]
                    + th * (s.rcont[1][i]
                        + th1 * (s.rcont[2][i] + th * (s.rcont[3][i] + th1 * s.rcont[4][i])))
            })
            .collect()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }
}

/// Result of [`Dopri5::solve`]: states at the requested output times.
#[derive(Debug, Clone)]
pub struct OdeOutput {
    pub states: Vec<Vec<f64>>,
    pub dense: Option<DenseSolution>,
    pub steps: usize,
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0`, landing exactly on every entry of
    /// `outputs` (ascending, all `>= t0`).
    pub fn solve<F>(&self, mut f: F, t0: f64, y0: &[f64], outputs: &[f64], keep_dense: bool) -> Result<OdeOutput>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut states = Vec::with_capacity(outputs.len());
        let mut dense = Vec::new();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut yerr = vec![0.0; n];
        f(t, &y, &mut k[0]);
        let span = outputs.last().map(|&te| te - t0).unwrap_or(0.0);
        let mut h = initial_step(span, self.rtol);
        let mut steps = 0usize;
        for &target in outputs {
            while target - t > 1e-14 * (1.0 + t.abs()) {
                if steps >= self.max_steps {
                    return Err(Error::IntegratorFailure { theta: t, reason: "step budget exhausted".into() });
                }
                let mut hh = h.min(target - t);
                let clipped = hh < h;
                loop {
                    steps += 1;
                    for i in 0..n {
                        ytmp[i] = y[i] + hh * A21 * k[0][i];
                    }
                    let (k01, rest) = k.split_at_mut(1);
                    f(t + C2 * hh, &ytmp, &mut rest[0]);
                    for i in 0..n {
                        ytmp[i] = y[i] + hh * (A31 * k01[0][i] + A32 * rest[0][i]);
                    }
                    f(t + C3 * hh, &ytmp, &mut rest[1]);
                    for i in 0..n {
                        ytmp[i] = y[i] + hh * (A41 * k01[0][i] + A42 * rest[0][i] + A43 * rest[1][i]);
                    }
                    f(t + C4 * hh, &ytmp, &mut rest[2]);
                    for i in 0..n {
                        ytmp[i] = y[i]
                            + hh * (A51 * k01[0][i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
                    }
                    f(t + C5 * hh, &ytmp, &mut rest[3]);
                    for i in 0..n {
                        ytmp[i] = y[i]
                            + hh * (A61 * k01[0][i]
                                + A62 * rest[0][i]
                                + A63 * rest[1][i]
                                + A64 * rest[2][i]
                                + A65 * rest[3][i]);
                    }
                    f(t + hh, &ytmp, &mut rest[4]);
                    for i in 0..n {
                        ynew[i] = y[i]
                            + hh * (A71 * k01[0][i]
                                + A73 * rest[1][i]
                                + A74 * rest[2][i]
                                + A75 * rest[3][i]
                                + A76 * rest[4][i]);
                    }
                    f(t + hh, &ynew, &mut rest[5]);
                    let mut err = 0.0;
                    for i in 0..n {
                        yerr[i] = hh
                            * (E1 * k01[0][i]
                                + E3 * rest[1][i]
                                + E4 * rest[2][i]
                                + E5 * rest[3][i]
                                + E6 * rest[4][i]
                                + E7 * rest[5][i]);
                        let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                        err += (yerr[i] / sc).powi(2);
                    }
                    let err = (err / n.max(1) as f64).sqrt();
                    if !err.is_finite() {
                        hh *= 0.2;
                        if hh < 1e-14 * (1.0 + t.abs()) {
                            return Err(Error::IntegratorFailure { theta: t, reason: "non-finite state".into() });
                        }
                        continue;
                    }
                    let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                    if err <= 1.0 {
                        if keep_dense {
                            let mut rc: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                            for i in 0..n {
                                let dy = ynew[i] - y[i];
                                let bspl = hh * k01[0][i] - dy;
                                rc[0][i] = y[i];
                                rc[1][i] = dy;
                                rc[2][i] = bspl;
                                rc[3][i] = dy - hh * rest[5][i] - bspl;
                                rc[4][i] = hh
                                    * (D1 * k01[0][i]
                                        + D3 * rest[1][i]
                                        + D4 * rest[2][i]
                                        + D5 * rest[3][i]
                                        + D6 * rest[4][i]
                                        + D7 * rest[5][i]);
                            }
                            dense.push(DenseStep { t0: t, h: hh, rcont: rc });
                        }
                        t = if clipped && hh == target - t { target } else { t + hh };
                        std::mem::swap(&mut y, &mut ynew);
                        let last = k[6].clone();
                        k[0].copy_from_slice(&last);
                        if !clipped {
                            h = hh * fac;
                        } else {
                            h = h.max(hh * fac);
                        }
                        break;
                    }
                    hh *= fac.min(1.0);
                    if hh < 1e-14 * (1.0 + t.abs()) {
                        return Err(Error::IntegratorFailure { theta: t, reason: "step size underflow".into() });
                    }
                }
            }
            t = target;
            states.push(y.clone());
        }
        Ok(OdeOutput {
            states,
            dense: if keep_dense { Some(DenseSolution { steps: dense }) } else { None },
            steps,
        })
    }
}

fn initial_step(span: f64, tol: f64) -> f64 {
    let h = 0.1 * span.abs().max(1e-3) * tol.max(1e-16).powf(0.2);
    h.max(1e-6)
}
