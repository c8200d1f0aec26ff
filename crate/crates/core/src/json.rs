//! JSON forms of the library types. Rationals travel as `"num/den"`
//! strings so exact inputs survive a round trip.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cosets::CosetList;
use crate::error::{Result, SphError};
use crate::matrix::{ExactScalar, RatMatrix};
use crate::padic::{GroupElement, PrimeContext};
use crate::positivity::{GramCertificate, UnboundednessCertificate};
use crate::spherical::{rational_string, ParamCoord, SatakeParameter};

pub fn parse_rational(s: &str) -> Result<ExactScalar> {
    let s = s.trim();
    let bad = || SphError::Parse(format!("not a rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim().parse::<BigInt>().map_err(|_| bad())?, b.trim().parse::<BigInt>().map_err(|_| bad())?),
        None => (s.parse::<BigInt>().map_err(|_| bad())?, BigInt::from(1)),
    };
    if den.is_zero() {
        return Err(SphError::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(ExactScalar::new(num, den))
}

/// A rational given either as a string or as a JSON integer.
fn rational_value(v: &Value) -> Result<ExactScalar> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(ExactScalar::from_integer(BigInt::from(n.as_i64().unwrap()))),
        other => Err(SphError::Parse(format!("expected a rational string, got {other}"))),
    }
}

pub fn matrix_to_json(m: &RatMatrix) -> Vec<Vec<String>> {
    m.rows().iter().map(|r| r.iter().map(rational_string).collect()).collect()
}

pub fn matrix_from_json(v: &Value) -> Result<RatMatrix> {
    let rows = v.as_array().ok_or_else(|| SphError::Parse("matrix must be an array of rows".into()))?;
    let parsed = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| SphError::Parse("matrix row must be an array".into()))?
                .iter()
                .map(rational_value)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let n = parsed.len();
    if parsed.iter().any(|r| r.len() != n) {
        let bad = parsed.iter().find(|r| r.len() != n).map_or(0, |r| r.len());
        return Err(SphError::Shape { expected: n, got: format!("row of length {bad} in a {n}-row matrix") });
    }
    RatMatrix::from_rows(parsed).ok_or_else(|| SphError::Parse("empty matrix".into()))
}

pub fn element_from_json(ctx: PrimeContext, v: &Value) -> Result<GroupElement> {
    let m = matrix_from_json(v)?;
    if m.dim() != ctx.n() {
        return Err(SphError::Shape { expected: ctx.n(), got: format!("{0}x{0}", m.dim()) });
    }
    GroupElement::new(ctx, m)
}

pub fn elements_from_json(ctx: PrimeContext, v: &Value) -> Result<Vec<GroupElement>> {
    v.as_array()
        .ok_or_else(|| SphError::Parse("expected an array of matrices".into()))?
        .iter()
        .map(|m| element_from_json(ctx, m))
        .collect()
}

pub fn complex_json(z: Complex64) -> Value {
    serde_json::json!({ "re": z.re, "im": z.im })
}

pub fn complex_from_json(v: &Value) -> Result<Complex64> {
    let get = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| SphError::Parse(format!("complex number needs numeric {k:?}")));
    Ok(Complex64::new(get("re")?, get("im")?))
}

/// `{"re": [..], "im": [..]}` with optional `"turns"` (multiples of
/// `2 pi / log p` added to the imaginary part). Entries that are strings are
/// exact rationals; any float entry makes the parameter inexact.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SatakeJson {
    pub re: Vec<Value>,
    pub im: Vec<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub turns: Vec<Value>,
}

pub fn param_to_json(s: &SatakeParameter) -> SatakeJson {
    if s.is_exact() {
        let col = |f: &dyn Fn(&ParamCoord) -> &ExactScalar| s.coords().iter().map(|c| Value::String(rational_string(f(c)))).collect::<Vec<_>>();
        let turns = if s.coords().iter().all(|c| c.turns.is_zero()) { vec![] } else { col(&|c| &c.turns) };
        SatakeJson { re: col(&|c| &c.re), im: col(&|c| &c.im), turns }
    } else {
        let z = s.to_complex();
        SatakeJson { re: z.iter().map(|x| Value::from(x.re)).collect(), im: z.iter().map(|x| Value::from(x.im)).collect(), turns: vec![] }
    }
}

pub fn param_from_json(ctx: PrimeContext, j: &SatakeJson) -> Result<SatakeParameter> {
    let n = j.re.len();
    if j.im.len() != n || (!j.turns.is_empty() && j.turns.len() != n) {
        return Err(SphError::DimensionMismatch { expected: n, got: j.im.len() });
    }
    let all_exact = j.re.iter().chain(&j.im).chain(&j.turns).all(|v| v.is_string() || v.is_i64());
    if all_exact {
        let col = |vs: &[Value]| vs.iter().map(rational_value).collect::<Result<Vec<_>>>();
        let re = col(&j.re)?;
        let im = col(&j.im)?;
        let turns = if j.turns.is_empty() { vec![ExactScalar::zero(); n] } else { col(&j.turns)? };
        let coords = re.into_iter().zip(im).zip(turns).map(|((re, im), turns)| ParamCoord { re, im, turns }).collect();
        return SatakeParameter::from_coords(ctx, coords, true);
    }
    if !j.turns.is_empty() {
        return Err(SphError::Parse("\"turns\" requires exact re/im entries".into()));
    }
    let col = |vs: &[Value]| {
        vs.iter()
            .map(|v| match v {
                Value::String(s) => parse_rational(s).map(|q| num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN)),
                other => other.as_f64().ok_or_else(|| SphError::Parse(format!("bad coordinate {other}"))),
            })
            .collect::<Result<Vec<_>>>()
    };
    SatakeParameter::from_f64(ctx, &col(&j.re)?, &col(&j.im)?)
}

pub fn coset_list_json(list: &CosetList) -> Value {
    serde_json::json!({
        "m": list.m.as_slice(),
        "count": list.len(),
        "reps": list.reps.iter().map(|g| matrix_to_json(g.matrix())).collect::<Vec<_>>(),
    })
}

fn complex_vec_json(v: &[Complex64]) -> Value {
    Value::Array(v.iter().map(|z| complex_json(*z)).collect())
}

fn complex_vec_from_json(v: &Value) -> Result<Vec<Complex64>> {
    v.as_array().ok_or_else(|| SphError::Parse("expected an array of complex numbers".into()))?.iter().map(complex_from_json).collect()
}

/// Everything needed to re-verify a Gram certificate in a clean process.
pub fn gram_certificate_json(cert: &GramCertificate, seed: Option<u64>, j: Option<u64>, verdict: Option<&str>) -> Value {
    let ctx = cert.s.ctx();
    serde_json::json!({
        "kind": "gram",
        "p": ctx.p(),
        "n": ctx.n(),
        "seed": seed,
        "j": j,
        "s": param_to_json(&cert.s),
        "elements": cert.elements.iter().map(|g| matrix_to_json(g.matrix())).collect::<Vec<_>>(),
        "gram": cert.gram.iter().map(|r| complex_vec_json(r)).collect::<Vec<_>>(),
        "hermitian_defect": cert.hermitian_defect,
        "min_eigenvalue": cert.min_eigenvalue,
        "witness": cert.witness.as_ref().map(|w| complex_vec_json(w)),
        "verdict": verdict,
    })
}

pub fn gram_certificate_from_json(v: &Value) -> Result<GramCertificate> {
    let ctx = context_from_json(v)?;
    let s: SatakeJson = serde_json::from_value(v.get("s").cloned().unwrap_or(Value::Null)).map_err(|e| SphError::Parse(format!("s: {e}")))?;
    let s = param_from_json(ctx, &s)?;
    let elements = elements_from_json(ctx, v.get("elements").unwrap_or(&Value::Null))?;
    let gram = v
        .get("gram")
        .and_then(Value::as_array)
        .ok_or_else(|| SphError::Parse("certificate needs \"gram\"".into()))?
        .iter()
        .map(complex_vec_from_json)
        .collect::<Result<Vec<_>>>()?;
    if gram.len() != elements.len() || gram.iter().any(|r| r.len() != elements.len()) {
        return Err(SphError::DimensionMismatch { expected: elements.len(), got: gram.len() });
    }
    let witness = match v.get("witness") {
        None | Some(Value::Null) => None,
        Some(w) => Some(complex_vec_from_json(w)?),
    };
    Ok(GramCertificate {
        s,
        elements,
        gram,
        hermitian_defect: v.get("hermitian_defect").and_then(Value::as_f64).unwrap_or(0.0),
        min_eigenvalue: v.get("min_eigenvalue").and_then(Value::as_f64),
        witness,
    })
}

pub fn unboundedness_json(cert: &UnboundednessCertificate) -> Value {
    let ctx = cert.s.ctx();
    serde_json::json!({
        "kind": "unbounded",
        "p": ctx.p(),
        "n": ctx.n(),
        "sigma": rational_string(&cert.sigma),
        "s": param_to_json(&cert.s),
        "m": cert.m,
        "value": cert.value,
        "profile": cert.profile,
        "monotone": cert.monotone,
    })
}

/// `(p, n, sigma, m, value)` from an unboundedness certificate.
pub fn unboundedness_inputs(v: &Value) -> Result<(PrimeContext, ExactScalar, i64, f64)> {
    let ctx = context_from_json(v)?;
    let sigma = rational_value(v.get("sigma").unwrap_or(&Value::Null))?;
    let m = v.get("m").and_then(Value::as_i64).ok_or_else(|| SphError::Parse("certificate needs integer \"m\"".into()))?;
    let value = v.get("value").and_then(Value::as_f64).ok_or_else(|| SphError::Parse("certificate needs \"value\"".into()))?;
    Ok((ctx, sigma, m, value))
}

pub fn context_from_json(v: &Value) -> Result<PrimeContext> {
    let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| SphError::Parse("missing integer \"p\"".into()))?;
    let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| SphError::Parse("missing integer \"n\"".into()))?;
    PrimeContext::new(p, n as usize)
}
