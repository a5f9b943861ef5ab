use monodromy_core::elmonodromy::{eigenfunction, el_for_class, monodromy_spec, Branch, Family, Parity, SpecKind};
use monodromy_core::stabilizer::{u_n_alpha, v_n_alpha};
use monodromy_core::svaction::{classify_orbit, OrbitClass, SchrodingerOp};
use monodromy_core::{PeriodicFn, Settings, TrigPoly};
use num_complex::Complex64;
use std::f64::consts::PI;

fn xs() -> Vec<f64> {
    (0..=64).map(|j| -8.0 + 0.25 * j as f64).collect()
}

fn classified(op: &SchrodingerOp) -> (OrbitClass, monodromy_core::elmonodromy::ELCoefficients) {
    let s = Settings::default();
    let cls = classify_orbit(op, &s).unwrap();
    let el = el_for_class(op, &cls, &s).unwrap();
    (cls, el)
}

fn ii_op() -> SchrodingerOp {
    SchrodingerOp::new(u_n_alpha(1, 0.4), PeriodicFn::zero(), PeriodicFn::zero()).unwrap()
}

/// `v_{1,α}x² + C f x` with `f = (1 + α sin θ)^{1/2} cos(π/4 − θ/2)`.
fn iiibis_op(alpha: f64, c: f64) -> SchrodingerOp {
    let strip = (1.0 / alpha).acosh() * 0.9;
    let f = PeriodicFn::analytic("kernel", -1.0, strip, move |z: Complex64| {
        c * (1.0 + alpha * z.sin()).sqrt() * (PI / 4.0 - z / 2.0).cos()
    });
    SchrodingerOp::new(v_n_alpha(1, alpha), f, PeriodicFn::zero()).unwrap()
}

fn ibis_op() -> SchrodingerOp {
    SchrodingerOp::new(PeriodicFn::constant(1.0), TrigPoly::from_real(0.0, &[0.16], &[]).into(), PeriodicFn::constant(0.2)).unwrap()
}

/// Largest deviation of `Dψ/ψ` over x, relative to its size.
fn x_spread(ef: &monodromy_core::elmonodromy::ModelEigenfunction, op: &SchrodingerOp, t: f64) -> f64 {
    let r: Vec<Complex64> = [-1.5, -0.4, 0.3, 1.1].iter().map(|&x| ef.d_ratio(op, t, x)).collect();
    r.iter().map(|v| (v - r[0]).norm()).fold(0.0, f64::max) / (1.0 + r[0].norm())
}

#[test]
fn hypergeometric_d_identities() {
    let op = ii_op();
    let (cls, el) = classified(&op);
    let k = 0.7;
    for (parity, mult) in [(Parity::Even, 1.0), (Parity::Odd, 2.0)] {
        let ef = eigenfunction(&cls, &el, Family::HypergeometricEvenOdd { k, parity }).unwrap();
        for &t in &[0.3, 1.0, 2.0, 5.5] {
            let eta = el.profile.eval_re(t);
            let deta = el.profile.derivative().eval_re(t);
            let want = Complex64::new(2.0 * k / eta, -mult * deta / eta);
            for &x in &[-1.0, 0.3, 1.2] {
                let got = ef.d_ratio(&op, t, x);
                assert!((got - want).norm() < 1e-6 * want.norm(), "{parity:?} t={t} x={x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn eigen_relations_hold_for_every_family() {
    let cases: Vec<(SchrodingerOp, Vec<Family>)> = vec![
        (SchrodingerOp::model(-0.36, 0.4), vec![
            Family::HypergeometricEvenOdd { k: 0.7, parity: Parity::Even },
            Family::HypergeometricEvenOdd { k: -0.3, parity: Parity::Odd },
        ]),
        (ii_op(), vec![Family::HypergeometricEvenOdd { k: 0.5, parity: Parity::Even }]),
        (
            SchrodingerOp::new(v_n_alpha(1, 0.2), PeriodicFn::zero(), PeriodicFn::zero()).unwrap(),
            vec![Family::PlaneWave { k: 0.6, sign: Branch::Plus }, Family::PlaneWave { k: 0.6, sign: Branch::Minus }],
        ),
        (ibis_op(), vec![Family::IBisWave { k: 0.6, sign: Branch::Plus }, Family::IBisWave { k: 1.1, sign: Branch::Minus }]),
        (iiibis_op(0.5, 0.3), vec![Family::Airy { k: 0.4 }, Family::Airy { k: -0.8 }]),
    ];
    for (op, families) in cases {
        let (cls, el) = classified(&op);
        for fam in families {
            let ef = eigenfunction(&cls, &el, fam).unwrap();
            let t = ef.regular_time();
            for dt in [0.0, 0.2, -0.3] {
                let r = ef.el_residual(t + dt, &xs());
                assert!(r < 1e-6, "{} {fam:?} at {}: {r}", cls.tag.name(), t + dt);
            }
            // ψ solves Dψ = c(θ)ψ, so the ratio is flat in x
            assert!(x_spread(&ef, &op, t) < 1e-6, "{} {fam:?}: {}", cls.tag.name(), x_spread(&ef, &op, t));
        }
    }
}

#[test]
fn resonant_constants_from_contour_pipeline() {
    let s = Settings::default();
    let op = ibis_op();
    let (cls, el) = classified(&op);
    let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
    match spec.kind {
        SpecKind::ResonantIBis { kshift, .. } => assert!((kshift - 3.0 * (0.16f64 / 16.0).powi(2)).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
    for &alpha in &[0.3, 0.5, 0.7] {
        let op = iiibis_op(alpha, 0.25);
        let (cls, el) = classified(&op);
        let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
        let cc = spec.contour.as_ref().unwrap();
        assert!(cc.identity_const.spread < 1e-8, "α = {alpha}: {:?}", cc.identity_const);
        let want = -(1.0 + alpha / 2.0) * (1.0 - alpha) * (1.0 - alpha * alpha).sqrt() / alpha;
        match spec.kind {
            SpecKind::ResonantIIIBis { c_alpha, .. } => assert!((c_alpha - want).abs() < 1e-8, "α = {alpha}: {c_alpha} vs {want}"),
            other => panic!("{other:?}"),
        }
    }
}
