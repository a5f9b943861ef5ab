//! Fixtures shared by the benchmarks.

use monodromy_core::stabilizer::u_n_alpha;
use monodromy_core::svaction::SchrodingerOp;
use monodromy_core::{PeriodicFn, TrigPoly};

/// A generic class (i) operator with every coefficient non-constant.
pub fn generic_op() -> SchrodingerOp {
    SchrodingerOp::new(
        TrigPoly::from_real(0.3, &[0.05], &[0.0, 0.02]).into(),
        TrigPoly::from_real(0.0, &[0.2], &[0.1]).into(),
        TrigPoly::from_real(1.5, &[0.0, 0.3], &[]).into(),
    )
    .expect("finite coefficients")
}

/// `u_{1,α}x² + γ`, the hyperbolic class (ii).
pub fn hyperbolic_op(alpha: f64) -> SchrodingerOp {
    SchrodingerOp::new(u_n_alpha(1, alpha), PeriodicFn::zero(), PeriodicFn::constant(0.2)).expect("finite coefficients")
}
