//! Report sections computed from a validated spec.

use crate::emit::{num, Table};
use crate::spec::{OperatorSpec, Source};
use monodromy_core::elmonodromy::{
    eigenfunction, el_coefficients, el_for_class, monodromy_spec, pinney_check, Branch, ELCoefficients, Family,
    MonodromySpec, Parity, SpecKind,
};
use monodromy_core::fnspace::{xi_integral, TWO_PI};
use monodromy_core::hill::{floquet, lifted_monodromy, FLOQUET_CONVENTION};
use monodromy_core::pdeoracle::{expectation_drift, gaussian_probe, measure_monodromy_phase, probe_width, Grid};
use monodromy_core::stabilizer::{invariant_i, kirillov_family};
use monodromy_core::svaction::{classify_orbit, vector_invariant, OrbitClass, OrbitTag, SchrodingerOp, VectorInvariant};
use monodromy_core::{Error, KirillovCase, Settings, XiMode};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

/// Tolerances of the verification block.
pub const WRONSKIAN_TOL: f64 = 1e-9;
pub const STABILIZER_TOL: f64 = 1e-7;
pub const EL_TOL: f64 = 1e-6;
pub const IDENTITY_TOL: f64 = 1e-7;
pub const PHASE_TOL: f64 = 1e-3;
pub const DRIFT_TOL: f64 = 1e-5;

/// A numerical failure together with the module that raised it.
#[derive(Debug, Clone)]
pub struct Failure {
    pub module: &'static str,
    pub error: Error,
}

fn at(module: &'static str) -> impl Fn(Error) -> Failure {
    move |error| Failure { module, error }
}

pub type Outcome<T> = Result<T, Failure>;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub settings: Settings,
    pub grid: Grid,
    /// Elliptic levels reported and checked.
    pub levels: usize,
    /// θ samples in stabilizer and invariant tables.
    pub samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { settings: Settings::default(), grid: Grid::default(), levels: 4, samples: 64 }
    }
}

/// I and `∫dθ/ξ` of the closed-form stabilizer of a Kirillov normal form.
#[derive(Debug, Clone, Copy)]
pub struct KirillovValues {
    pub i: f64,
    pub t: Complex64,
}

pub fn kirillov_values(case: KirillovCase, s: &Settings) -> Outcome<KirillovValues> {
    let pair = kirillov_family(case).map_err(at("stabilizer"))?;
    let i = invariant_i(&pair.u, &pair.xi).map_err(at("stabilizer"))?.value;
    let mode = match case {
        KirillovCase::I { .. } => XiMode::Direct,
        KirillovCase::II { .. } => XiMode::PrincipalValue,
        KirillovCase::III { .. } => XiMode::ContourUnipotent,
    };
    let t = xi_integral(&pair.xi, mode, s.zero_options(), s.quad_rtol).map_err(at("fnspace"))?.value;
    Ok(KirillovValues { i, t })
}

/// Everything the classification step produces.
pub struct Analysis {
    pub op: SchrodingerOp,
    pub class: OrbitClass,
    pub winding: i64,
    pub delta_omega: f64,
    pub kirillov: Option<KirillovValues>,
}

impl Analysis {
    pub fn run(spec: &OperatorSpec, opts: &Options) -> Outcome<Analysis> {
        let s = &opts.settings;
        let op = spec.operator().map_err(at("svaction"))?;
        let class = classify_orbit(&op, s).map_err(at("svaction"))?;
        let lifted = lifted_monodromy(&op.hill().map_err(at("hill"))?, s).map_err(at("hill"))?;
        let kirillov = match spec.source {
            Source::Kirillov { case, .. } => Some(kirillov_values(case, s)?),
            Source::Fourier(_) => None,
        };
        Ok(Analysis { op, class, winding: lifted.winding, delta_omega: lifted.delta_omega, kirillov })
    }

    /// I and T: the closed-form stabilizer for Kirillov specs, else the normalized one.
    pub fn i_and_t(&self) -> (f64, Complex64) {
        match self.kirillov {
            Some(k) => (k.i, k.t),
            None => (self.class.stabilizer.i_value, self.class.t_integral),
        }
    }

    pub fn el(&self, s: &Settings) -> Outcome<ELCoefficients> {
        el_for_class(&self.op, &self.class, s).map_err(at("elmonodromy"))
    }

    pub fn monodromy(&self, s: &Settings) -> Outcome<(ELCoefficients, MonodromySpec)> {
        let el = self.el(s)?;
        let spec = monodromy_spec(&self.op, &self.class, &el, s).map_err(at("elmonodromy"))?;
        Ok((el, spec))
    }
}

fn tag_parameters(tag: &OrbitTag) -> Value {
    match *tag {
        OrbitTag::Ci { alpha, gamma } => json!({"alpha": num(alpha), "gamma": num(gamma)}),
        OrbitTag::CiBis { n, c, sigma, gamma } => json!({"n": n, "C": num(c), "sigma": num(sigma), "gamma": num(gamma)}),
        OrbitTag::Cii { n, alpha, gamma } | OrbitTag::Ciii { n, alpha, gamma } => {
            json!({"n": n, "alpha": num(alpha), "gamma": num(gamma)})
        }
        OrbitTag::CiiiBis { n, alpha, c, gamma } => json!({"n": n, "alpha": num(alpha), "C": num(c), "gamma": num(gamma)}),
    }
}

/// `orbit_class`, `parameters` and `invariants`.
pub fn classification(an: &Analysis, opts: &Options) -> Outcome<Map<String, Value>> {
    let cls = &an.class;
    let (i, t) = an.i_and_t();
    let mut inv = Map::new();
    inv.insert("I".into(), num(i));
    inv.insert("T_real".into(), num(t.re));
    inv.insert("T_imag".into(), num(t.im));
    inv.insert("winding".into(), json!(an.winding));
    inv.insert("delta_omega".into(), num(an.delta_omega));
    inv.insert("gamma".into(), num(cls.tag.gamma()));
    inv.insert("trace".into(), num(cls.hill.trace));
    inv.insert("stabilizer_source".into(), json!(if an.kirillov.is_some() { "kirillov" } else { "computed" }));
    if matches!(cls.tag, OrbitTag::CiBis { .. } | OrbitTag::CiiiBis { .. }) {
        let (_, spec) = an.monodromy(&opts.settings)?;
        inv.insert("gamma_tilde".into(), num(spec.gamma()));
        match spec.kind {
            SpecKind::ResonantIBis { kshift, .. } => inv.insert("kshift".into(), num(kshift)),
            SpecKind::ResonantIIIBis { c_alpha, .. } => inv.insert("C_alpha".into(), num(c_alpha)),
            _ => None,
        };
    }
    let mut out = Map::new();
    out.insert("orbit_class".into(), json!(cls.tag.name()));
    out.insert("parameters".into(), tag_parameters(&cls.tag));
    out.insert("hill_class".into(), json!(cls.hill.tag.name()));
    out.insert("low_confidence".into(), json!(cls.hill.low_confidence));
    out.insert("generic".into(), json!(cls.generic));
    out.insert("invariants".into(), Value::Object(inv));
    Ok(out)
}

fn cnum(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

/// The `monodromy` section.
pub fn monodromy_section(spec: &MonodromySpec, opts: &Options) -> Value {
    let t = spec.t();
    let mut m = Map::new();
    m.insert("kind".into(), json!(spec.name()));
    m.insert("T_real".into(), num(t.re));
    m.insert("T_imag".into(), num(t.im));
    match spec.kind {
        SpecKind::DiscreteElliptic { a, gamma } => {
            m.insert("a".into(), num(a));
            m.insert("gamma".into(), num(gamma));
            let levels: Vec<Value> = (0..opts.levels)
                .map(|n| {
                    let l = spec.lambda(n).unwrap();
                    let p = spec.level_phase(n).unwrap();
                    json!({"n": n, "lambda": num(l), "phase_re": num(p.re), "phase_im": num(p.im)})
                })
                .collect();
            m.insert("phases".into(), Value::Array(levels));
        }
        _ => {
            m.insert("gamma".into(), num(spec.gamma()));
            let samples: Vec<Value> = [-1.0, -0.5, 0.5, 1.0]
                .iter()
                .map(|&k| {
                    let z = spec.multiplier(k).unwrap();
                    json!({"k": num(k), "re": num(z.re), "im": num(z.im)})
                })
                .collect();
            m.insert(
                "multiplier".into(),
                json!({"form": "exp(k*T - i*pi*gamma)", "T": cnum(t), "gamma": num(spec.gamma()), "samples": samples}),
            );
        }
    }
    match spec.kind {
        SpecKind::ResonantIBis { kshift, .. } => {
            m.insert("kshift".into(), num(kshift));
        }
        SpecKind::ResonantIIIBis { c_alpha, .. } => {
            m.insert("C_alpha".into(), num(c_alpha));
        }
        _ => {}
    }
    if let Some(cc) = &spec.contour {
        m.insert(
            "contour".into(),
            json!({
                "identity_spread": num(cc.identity_const.spread),
                "k_const_spread": num(cc.k_const.spread),
                "transport_error": num(cc.transport_error),
                "closure_error": num(cc.closure_error),
                "gamma_tilde_imag": num(spec.gamma_tilde_imag),
            }),
        );
    }
    Value::Object(m)
}

/// The `stabilizer` section with its sample table.
pub fn stabilizer_section(an: &Analysis, opts: &Options) -> (Value, Table) {
    let st = &an.class.stabilizer;
    let xi = st.xi();
    let mut table = Table::new(&["theta", "xi_re", "xi_im"]);
    let n = opts.samples.max(1);
    let rows: Vec<Value> = (0..n)
        .map(|j| {
            let t = TWO_PI * j as f64 / n as f64;
            let v = xi.eval(Complex64::new(t, 0.0));
            table.push_floats(&[t, v.re, v.im]);
            json!([num(t), num(v.re), num(v.im)])
        })
        .collect();
    let zeros: Vec<Value> = st.zeros.iter().map(|z| json!({"theta": num(z.theta), "multiplicity": z.multiplicity})).collect();
    let mut m = Map::new();
    m.insert("kind".into(), json!(st.kind.name()));
    m.insert("imaginary".into(), json!(st.imaginary));
    m.insert("I".into(), num(st.i_value));
    m.insert("T_real".into(), num(an.class.t_integral.re));
    m.insert("T_imag".into(), num(an.class.t_integral.im));
    m.insert("fixed_dim".into(), json!(st.fixed_dim));
    m.insert("zeros".into(), Value::Array(zeros));
    m.insert("samples".into(), Value::Array(rows));
    if let Some(k) = an.kirillov {
        m.insert("kirillov".into(), json!({"I": num(k.i), "T_real": num(k.t.re), "T_imag": num(k.t.im)}));
    }
    (Value::Object(m), table)
}

/// The vector invariant when the operator is generic, and EL coefficients.
pub fn invariant_parts(an: &Analysis, s: &Settings) -> Outcome<(Option<VectorInvariant>, ELCoefficients)> {
    if an.class.generic {
        let inv = vector_invariant(&an.op, s).map_err(at("svaction"))?;
        let el = el_coefficients(&an.op, &inv).map_err(at("elmonodromy"))?;
        Ok((Some(inv), el))
    } else {
        Ok((None, an.el(s)?))
    }
}

/// The `invariant` section with its sample table.
pub fn invariant_section(an: &Analysis, opts: &Options) -> Outcome<(Value, Table)> {
    let (inv, el) = invariant_parts(an, &opts.settings)?;
    let n = opts.samples.max(1);
    let mut table = Table::new(&["theta", "xi", "delta1", "delta2", "a", "b", "c", "d", "e", "f"]);
    let mut el_rows = Vec::with_capacity(n);
    let mut inv_rows = Vec::with_capacity(n);
    for j in 0..n {
        let t = TWO_PI * j as f64 / n as f64;
        let p = el.at(t);
        let (xi, d1, d2) = match &inv {
            Some(v) => (v.xi.profile.eval_re(t), v.delta1.re(t), v.delta2.eval_re(t)),
            None => (el.profile.eval_re(t), f64::NAN, f64::NAN),
        };
        let row = [t, xi, d1, d2, p.a, p.b, p.c, p.d, p.e, p.f];
        table.rows.push(row.iter().map(|x| if x.is_nan() { String::new() } else { crate::emit::fmt_float(*x) }).collect());
        el_rows.push(json!([num(t), num(p.a), num(p.b), num(p.c), num(p.d), num(p.e), num(p.f)]));
        if inv.is_some() {
            inv_rows.push(json!([num(t), num(xi), num(d1), num(d2)]));
        }
    }
    let res = el.residuals(&an.op);
    let mut m = Map::new();
    m.insert("generic".into(), json!(inv.is_some()));
    m.insert("imaginary".into(), json!(el.imaginary));
    if let Some(v) = &inv {
        m.insert(
            "vector".into(),
            json!({
                "identities": [num(v.identities.0), num(v.identities.1)],
                "delta2_offset": num(v.delta2_offset),
                "columns": ["theta", "xi", "delta1", "delta2"],
                "samples": inv_rows,
            }),
        );
    }
    m.insert(
        "el".into(),
        json!({
            "I_profile": num(el.i_profile),
            "residuals": res.iter().map(|&r| num(r)).collect::<Vec<_>>(),
            "columns": ["theta", "a", "b", "c", "d", "e", "f"],
            "samples": el_rows,
        }),
    );
    Ok((Value::Object(m), table))
}

fn check(value: f64, tol: f64) -> Value {
    json!({"value": num(value), "tolerance": num(tol), "pass": value < tol})
}

fn failed(e: &Failure) -> Value {
    json!({"error": e.error.name(), "module": e.module, "pass": false})
}

fn or_failed(r: Outcome<Value>) -> Value {
    r.unwrap_or_else(|e| failed(&e))
}

/// Label used for the eigenfunction check of each class.
fn probe_family(tag: &OrbitTag) -> Family {
    match *tag {
        OrbitTag::Ci { alpha, .. } if alpha > 0.0 => Family::Hermite { n: 0 },
        OrbitTag::Ci { alpha, .. } if alpha < 0.0 => Family::HypergeometricEvenOdd { k: 0.5, parity: Parity::Even },
        OrbitTag::Cii { .. } => Family::HypergeometricEvenOdd { k: 0.5, parity: Parity::Even },
        OrbitTag::Ci { .. } | OrbitTag::Ciii { .. } => Family::PlaneWave { k: 0.5, sign: Branch::Plus },
        OrbitTag::CiBis { .. } => Family::IBisWave { k: 0.5, sign: Branch::Plus },
        OrbitTag::CiiiBis { .. } => Family::Airy { k: 0.5 },
    }
}

/// The residual and oracle checks. Returns the block and whether all passed.
pub fn verification(an: &Analysis, opts: &Options) -> (Value, bool) {
    let s = &opts.settings;
    let mut checks = Map::new();
    checks.insert(
        "hill.wronskian_drift".into(),
        or_failed(
            an.op
                .hill()
                .and_then(|h| floquet(&h, s))
                .map(|fl| check(fl.wronskian_drift, WRONSKIAN_TOL))
                .map_err(at("hill")),
        ),
    );
    let st = &an.class.stabilizer;
    checks.insert("stabilizer.ode_residual".into(), check(st.ode_residual(&an.op.v2), STABILIZER_TOL));
    checks.insert(
        "stabilizer.invariant_drift".into(),
        or_failed(
            invariant_i(&an.op.v2, &st.xi())
                .map(|v| check(v.drift / (1.0 + v.value.abs()), STABILIZER_TOL))
                .map_err(at("stabilizer")),
        ),
    );
    checks.insert(
        "stabilizer.pinney".into(),
        or_failed(pinney_check(&an.op.v2, st).map(|r| check(r, STABILIZER_TOL)).map_err(at("elmonodromy"))),
    );
    match invariant_parts(an, s) {
        Err(e) => {
            checks.insert("el.residuals".into(), failed(&e));
        }
        Ok((inv, el)) => {
            let worst = el.residuals(&an.op).iter().cloned().fold(0.0, f64::max);
            checks.insert("el.residuals".into(), check(worst, EL_TOL));
            if let Some(v) = inv {
                checks.insert("invariant.identity_xi".into(), check(v.identities.0.abs(), IDENTITY_TOL));
                checks.insert("invariant.identity_v1".into(), check(v.identities.1.abs(), IDENTITY_TOL));
            }
        }
    }
    let family = probe_family(&an.class.tag);
    let mono = an.monodromy(s);
    checks.insert(
        "eigenfunction.residual".into(),
        or_failed(mono.clone().and_then(|(el, _)| {
            let ef = eigenfunction(&an.class, &el, family).map_err(at("elmonodromy"))?;
            let xs: Vec<f64> = (0..=64).map(|j| -8.0 + 0.25 * j as f64).collect();
            let t = ef.regular_time();
            Ok(check(ef.el_residual(t, &xs), EL_TOL))
        })),
    );
    let mut measured = Vec::new();
    match &mono {
        Err(e) => {
            checks.insert("pde".into(), failed(e));
        }
        Ok((el, spec)) => match spec.kind {
            SpecKind::DiscreteElliptic { .. } => {
                for n in 0..opts.levels.min(4) {
                    let r = eigenfunction(&an.class, el, Family::Hermite { n })
                        .and_then(|ef| measure_monodromy_phase(&an.op, &ef, &opts.grid))
                        .map_err(at("pdeoracle"));
                    let v = match r {
                        Ok(z) => {
                            let want = spec.level_phase(n).unwrap();
                            let err = (z / want).arg().abs();
                            measured.push(json!({"n": n, "re": num(z.re), "im": num(z.im), "error": num(err)}));
                            check(err, PHASE_TOL)
                        }
                        Err(e) => failed(&e),
                    };
                    checks.insert(format!("pde.phase_{n}"), v);
                }
            }
            _ => {
                let r = probe_width(&an.op, s)
                    .and_then(|w| gaussian_probe(&opts.grid.space, w, 0.0))
                    .and_then(|psi| expectation_drift(&an.op, el, &psi, 8, &opts.grid))
                    .map(|d| check(d, DRIFT_TOL))
                    .map_err(at("pdeoracle"));
                checks.insert("pde.expectation_drift".into(), or_failed(r));
            }
        },
    }
    let all = checks.values().all(|c| c["pass"].as_bool() == Some(true));
    let mut v = Map::new();
    v.insert("checks".into(), Value::Object(checks));
    if !measured.is_empty() {
        v.insert("measured_phases".into(), Value::Array(measured));
    }
    v.insert("all_pass".into(), json!(all));
    (Value::Object(v), all)
}

pub fn provenance(opts: &Options) -> Value {
    let s = &opts.settings;
    json!({
        "tolerances": {
            "rk_tol": num(s.rk_tol),
            "class_tol": num(s.class_tol),
            "quad_rtol": num(s.quad_rtol),
            "zero_tol": num(s.zero_tol),
        },
        "grid": {
            "L": num(opts.grid.space.l),
            "Nx": opts.grid.space.nx,
            "dtheta": num(opts.grid.dtheta),
        },
        "versions": {
            "monodromy-lab": env!("CARGO_PKG_VERSION"),
            "monodromy-core": monodromy_core::VERSION,
        },
        "floquet_convention": FLOQUET_CONVENTION,
    })
}
