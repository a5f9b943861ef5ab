//! Numerical toolkit for periodic Hill and Schrödinger operators: Floquet
//! monodromy, stabilizers, the Schrödinger–Virasoro action and the
//! monodromy of the time-dependent Schrödinger equation.

pub mod error;
pub mod fnspace;
pub mod elmonodromy;
pub mod hill;
pub mod ode;
pub mod quad;
pub mod special;
pub mod pdeoracle;
pub mod stabilizer;
pub mod svaction;

pub use error::{Error, Result};
pub use fnspace::{Contour, Half, PeriodicFn, TorusZero, TrigPoly, XiMode};
pub use hill::{ClassTag, FloquetData, HillOperator, MonodromyClass};
pub use stabilizer::{KirillovCase, Stabilizer, StabilizerKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Numerical tolerances shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub rk_tol: f64,
    pub class_tol: f64,
    pub quad_rtol: f64,
    pub zero_tol: f64,
    /// Uniform samples per period for Floquet solutions.
    pub samples: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { rk_tol: 1e-11, class_tol: 1e-7, quad_rtol: 1e-10, zero_tol: 1e-10, samples: 512 }
    }
}

impl Settings {
    pub fn zero_options(&self) -> fnspace::ZeroOptions {
        fnspace::ZeroOptions { zero_tol: self.zero_tol, ..Default::default() }
    }
}
