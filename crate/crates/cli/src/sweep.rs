//! Parameter sweeps over a family of specs.

use crate::emit::{fmt_float, Table};
use crate::pipeline::{Analysis, Options};
use crate::spec::{FourierDoc, OperatorSpec, OperatorSpecDoc, SpecError};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "MONODROMY_LAB_THREADS";

pub const COLUMNS: [&str; 11] =
    ["param", "orbit_class", "hill_class", "I", "T_real", "T_imag", "gamma", "winding", "trace", "generic", "error"];

/// `a:b:steps`, `steps` equally spaced points including both ends.
pub fn parse_range(s: &str) -> Result<Vec<f64>, SpecError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || SpecError(format!("range {s:?} is not of the form a:b:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps).map(|j| a + (b - a) * j as f64 / (steps - 1) as f64).collect())
}

fn fourier_slot<'a>(doc: &'a mut OperatorSpecDoc, name: &str) -> Option<&'a mut FourierDoc> {
    let f = doc.fourier.as_mut()?;
    match name {
        "V2" => Some(&mut f.v2),
        "V1" => Some(&mut f.v1),
        "V0" => Some(&mut f.v0),
        _ => None,
    }
}

fn set_coeff(list: &mut Vec<f64>, m: usize, value: f64) {
    if list.len() < m {
        list.resize(m, 0.0);
    }
    list[m - 1] = value;
}

/// Sets `param` in a copy of `doc`.
///
/// Kirillov specs take `alpha`, `a`, `gamma` and `n`. Fourier specs take
/// `V2.mean`, `V1.cos2`, `V0.sin1` and so on, with `alpha` standing for
/// `V2.mean` and `gamma` for `V0.mean`.
pub fn with_param(doc: &OperatorSpecDoc, param: &str, value: f64) -> Result<OperatorSpecDoc, SpecError> {
    let mut d = doc.clone();
    let unknown = || SpecError(format!("cannot sweep {param:?} for this spec"));
    if d.family.is_some() {
        match param {
            "alpha" => d.alpha = Some(value),
            "a" => d.a = Some(value),
            "gamma" => d.gamma = Some(value),
            "n" => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(SpecError(format!("n = {value} is not a positive integer")));
                }
                d.n = Some(value as u32);
            }
            _ => return Err(unknown()),
        }
        return Ok(d);
    }
    let path = match param {
        "alpha" => "V2.mean",
        "gamma" => "V0.mean",
        p => p,
    };
    let (slot, field) = path.split_once('.').ok_or_else(unknown)?;
    let f = fourier_slot(&mut d, slot).ok_or_else(unknown)?;
    if field == "mean" {
        f.mean = value;
    } else if let Some(m) = field.strip_prefix("cos") {
        let m: usize = m.parse().ok().filter(|&m| m >= 1).ok_or_else(unknown)?;
        set_coeff(&mut f.cos, m, value);
    } else if let Some(m) = field.strip_prefix("sin") {
        let m: usize = m.parse().ok().filter(|&m| m >= 1).ok_or_else(unknown)?;
        set_coeff(&mut f.sin, m, value);
    } else {
        return Err(unknown());
    }
    Ok(d)
}

fn row(value: f64, spec: &OperatorSpec, opts: &Options) -> (Vec<String>, bool) {
    let mut r = vec![fmt_float(value)];
    match Analysis::run(spec, opts) {
        Ok(an) => {
            let (i, t) = an.i_and_t();
            r.push(an.class.tag.name().to_string());
            r.push(an.class.hill.tag.name().to_string());
            for x in [i, t.re, t.im, an.class.tag.gamma()] {
                r.push(fmt_float(x));
            }
            r.push(an.winding.to_string());
            r.push(fmt_float(an.class.hill.trace));
            r.push(an.class.generic.to_string());
            r.push(String::new());
            (r, true)
        }
        Err(e) => {
            r.resize(COLUMNS.len() - 1, String::new());
            r.push(format!("{}: {}", e.module, e.error.name()));
            (r, false)
        }
    }
}

/// Thread cap from the environment, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, SpecError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(SpecError(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
    }
}

/// Runs the sweep. Rows follow the order of `values`; the flag is false
/// when some point failed.
pub fn sweep(doc: &OperatorSpecDoc, param: &str, values: &[f64], opts: &Options) -> Result<(Table, bool), SpecError> {
    let specs = values
        .iter()
        .map(|&v| with_param(doc, param, v).and_then(OperatorSpec::from_doc).map(|s| (v, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let work = || specs.par_iter().map(|(v, s)| row(*v, s, opts)).collect::<Vec<_>>();
    let rows = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SpecError(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let ok = rows.iter().all(|(_, ok)| *ok);
    let table = Table { header: COLUMNS.iter().map(|s| s.to_string()).collect(), rows: rows.into_iter().map(|(r, _)| r).collect() };
    Ok((table, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_includes_both_ends() {
        let v = parse_range("0.1:0.9:5").unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.1);
        assert!((v[4] - 0.9).abs() < 1e-15);
        assert_eq!(parse_range("-1:1:1").unwrap(), vec![-1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn fourier_param_paths() {
        let doc: OperatorSpecDoc = serde_json::from_str(r#"{"fourier":{"V2":{"mean":0.3}}}"#).unwrap();
        let d = with_param(&doc, "V1.cos3", 0.5).unwrap();
        assert_eq!(d.fourier.unwrap().v1.cos, vec![0.0, 0.0, 0.5]);
        let d = with_param(&doc, "alpha", 0.2).unwrap();
        assert_eq!(d.fourier.unwrap().v2.mean, 0.2);
        assert!(with_param(&doc, "V3.mean", 0.1).is_err());
        assert!(with_param(&doc, "n", 2.0).is_err());
    }
}
