//! Operator specification documents.

use monodromy_core::stabilizer::{kirillov_family, KirillovCase};
use monodromy_core::svaction::{act, GroupElement, SchrodingerOp};
use monodromy_core::{PeriodicFn, TrigPoly};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("malformed spec: {0}")]
pub struct SpecError(pub String);

fn bad(msg: impl Into<String>) -> SpecError {
    SpecError(msg.into())
}

/// Real Fourier series `mean + Σ cos_m cos mθ + sin_m sin mθ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDoc {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierDoc {
    fn check(&self, name: &str) -> Result<(), SpecError> {
        let finite = self.mean.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(bad(format!("{name} has a non-finite coefficient")))
        }
    }

    pub fn trig(&self) -> TrigPoly {
        TrigPoly::from_real(self.mean, &self.cos, &self.sin)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierOpDoc {
    #[serde(rename = "V2", default)]
    pub v2: FourierDoc,
    #[serde(rename = "V1", default)]
    pub v1: FourierDoc,
    #[serde(rename = "V0", default)]
    pub v0: FourierDoc,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    #[serde(default)]
    pub phi_p: FourierDoc,
    #[serde(default)]
    pub a: FourierDoc,
    #[serde(default)]
    pub b: FourierDoc,
}

/// The document as written by the user.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpecDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierOpDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_element: Option<GroupDoc>,
}

/// Where the operator comes from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Kirillov normal form with its closed-form stabilizer.
    Kirillov { case: KirillovCase, gamma: f64 },
    Fourier(FourierOpDoc),
}

/// A validated specification.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub doc: OperatorSpecDoc,
    pub source: Source,
    pub group: Option<GroupElement>,
}

impl OperatorSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let doc: OperatorSpecDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: OperatorSpecDoc) -> Result<Self, SpecError> {
        let source = match (&doc.family, &doc.fourier) {
            (Some(_), Some(_)) => return Err(bad("give either \"family\" or \"fourier\", not both")),
            (None, None) => return Err(bad("one of \"family\" or \"fourier\" is required")),
            (Some(f), None) => {
                if f != "kirillov" {
                    return Err(bad(format!("unknown family {f:?}")));
                }
                kirillov_source(&doc)?
            }
            (None, Some(f)) => {
                if doc.case.is_some() || doc.n.is_some() || doc.alpha.is_some() || doc.a.is_some() || doc.gamma.is_some() {
                    return Err(bad("family parameters are not allowed with \"fourier\""));
                }
                f.v2.check("V2")?;
                f.v1.check("V1")?;
                f.v0.check("V0")?;
                Source::Fourier(f.clone())
            }
        };
        let group = match &doc.group_element {
            None => None,
            Some(g) => {
                g.phi_p.check("phi_p")?;
                g.a.check("a")?;
                g.b.check("b")?;
                let el = GroupElement::new(g.phi_p.trig(), g.a.trig(), g.b.trig()).map_err(|e| bad(format!("group_element: {e}")))?;
                Some(el)
            }
        };
        Ok(OperatorSpec { doc, source, group })
    }

    /// The operator before the optional group element acts.
    pub fn base_operator(&self) -> Result<SchrodingerOp, SpecError> {
        match &self.source {
            Source::Kirillov { case, gamma } => {
                let pair = kirillov_family(*case).map_err(|e| bad(e.to_string()))?;
                SchrodingerOp::new(pair.u, PeriodicFn::zero(), PeriodicFn::constant(*gamma)).map_err(|e| bad(e.to_string()))
            }
            Source::Fourier(f) => SchrodingerOp::new(f.v2.trig().into(), f.v1.trig().into(), f.v0.trig().into())
                .map_err(|e| bad(e.to_string())),
        }
    }

    /// The operator described by the document; a group element, if present,
    /// acts with `σ_{1/4}`.
    pub fn operator(&self) -> Result<SchrodingerOp, monodromy_core::Error> {
        let op = self.base_operator().map_err(|e| monodromy_core::Error::InvalidInput(e.0))?;
        match &self.group {
            Some(g) => act(g, &op),
            None => Ok(op),
        }
    }
}

fn kirillov_source(doc: &OperatorSpecDoc) -> Result<Source, SpecError> {
    let gamma = doc.gamma.unwrap_or(0.0);
    let finite = [doc.alpha, doc.a, doc.gamma].iter().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(bad("family parameters must be finite"));
    }
    let case = doc.case.as_deref().ok_or_else(|| bad("kirillov family needs \"case\""))?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| bad(format!("case {case} needs \"{name}\"")));
    let n = || {
        let n = doc.n.ok_or_else(|| bad(format!("case {case} needs \"n\"")))?;
        if n < 1 {
            return Err(bad("n must be at least 1"));
        }
        Ok(n)
    };
    let alpha_unit = |alpha: f64| {
        if (0.0..1.0).contains(&alpha) {
            Ok(alpha)
        } else {
            Err(bad(format!("alpha = {alpha} must lie in [0, 1)")))
        }
    };
    let case = match case {
        "I" => {
            let a = doc.a.unwrap_or(1.0);
            if a == 0.0 {
                return Err(bad("a must be non-zero"));
            }
            KirillovCase::I { alpha: need(doc.alpha, "alpha")?, a }
        }
        "II" => {
            let a = doc.a.unwrap_or(1.0);
            if a == 0.0 {
                return Err(bad("a must be non-zero"));
            }
            KirillovCase::II { n: n()?, alpha: alpha_unit(need(doc.alpha, "alpha")?)?, a }
        }
        "III" => {
            // ξ = ±(1 + sin nθ)(1 + α sin nθ); "a" selects the sign
            let sign = doc.a.unwrap_or(1.0);
            if sign.abs() != 1.0 {
                return Err(bad("case III takes a = ±1 (the sign of ξ)"));
            }
            KirillovCase::III { n: n()?, alpha: alpha_unit(need(doc.alpha, "alpha")?)?, sign }
        }
        other => return Err(bad(format!("unknown case {other:?}"))),
    };
    Ok(Source::Kirillov { case, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kirillov_doc_parses() {
        let s = OperatorSpec::parse(r#"{"family":"kirillov","case":"II","n":1,"alpha":0.5,"a":1,"gamma":0}"#).unwrap();
        assert!(matches!(s.source, Source::Kirillov { case: KirillovCase::II { n: 1, .. }, .. }));
    }

    #[test]
    fn both_sources_rejected() {
        let r = OperatorSpec::parse(r#"{"family":"kirillov","case":"I","alpha":0.3,"fourier":{}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(OperatorSpec::parse(r#"{"fourier":{"V2":{"mean":0.3,"tan":[1]}}}"#).is_err());
    }

    #[test]
    fn folded_diffeomorphism_rejected() {
        let r = OperatorSpec::parse(r#"{"fourier":{"V2":{"mean":0.3}},"group_element":{"phi_p":{"sin":[1.5]}}}"#);
        assert!(r.unwrap_err().0.contains("group_element"));
    }

    #[test]
    fn alpha_range_checked() {
        assert!(OperatorSpec::parse(r#"{"family":"kirillov","case":"II","n":1,"alpha":1.2}"#).is_err());
    }
}
