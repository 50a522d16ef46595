//! JSON encodings. Objects are emitted with sorted keys and coefficients in
//! graded order, so serializing a parsed value reproduces the input bytes
//! whenever the input was itself produced here.
//!
//! Every `from_json` takes an optional field override; with `Some(k)` the
//! `"field"` entries of the input are ignored and all coefficients are read
//! in `k` (rationals are reduced modulo `p`).

use serde_json::{json, Map, Value};

use crate::algebra::{ClassicalDerivation, Field, Poly, PolyRing, Scalar};
use crate::error::{Error, Result};
use crate::hs::HsDerivation;
use crate::index::{CoIdeal, CoIdealShape, MultiIndex};
use crate::operator::{LinOp, Primitive};
use crate::series::{Coeff, Series};
use crate::subst::{NTable, SubstMap};

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(format!("{what}: expected an object")))
}

fn key<'a>(m: &'a Map<String, Value>, k: &str, what: &str) -> Result<&'a Value> {
    m.get(k).ok_or_else(|| bad(format!("{what}: missing key `{k}`")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(format!("{what}: expected an array")))
}

fn uint(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| bad(format!("{what}: expected a non-negative integer")))
}

fn string<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(format!("{what}: expected a string")))
}

pub fn field_to_json(k: Field) -> Value {
    match k {
        Field::Rational => json!("Q"),
        Field::Prime(p) => json!({ "Fp": p }),
    }
}

pub fn field_from_json(v: &Value) -> Result<Field> {
    match v {
        Value::String(s) if s == "Q" => Ok(Field::Rational),
        Value::Object(m) => Field::prime(uint(key(m, "Fp", "field")?, "field")?),
        _ => Err(bad("field: expected \"Q\" or {\"Fp\": p}")),
    }
}

fn resolve_field(m: &Map<String, Value>, over: Option<Field>, what: &str) -> Result<Field> {
    match over {
        Some(k) => Ok(k),
        None => field_from_json(key(m, "field", what)?),
    }
}

/// Multi-indices are written `"(a,b)"`; arrays `[a, b]` are also read.
pub fn index_to_json(a: &MultiIndex) -> Value {
    json!(a.to_string())
}

pub fn index_from_json(v: &Value) -> Result<MultiIndex> {
    match v {
        Value::String(s) => s.parse(),
        Value::Array(xs) => xs
            .iter()
            .map(|x| {
                x.as_u64()
                    .and_then(|e| u32::try_from(e).ok())
                    .ok_or_else(|| bad("multi-index entries must be small non-negative integers"))
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex::new),
        _ => Err(bad("multi-index: expected \"(a,...)\" or an array")),
    }
}

fn index_with_arity(v: &Value, p: usize) -> Result<MultiIndex> {
    let a = index_from_json(v)?;
    if a.arity() != p {
        return Err(Error::ArityMismatch {
            what: "multi-index",
            expected: p,
            found: a.arity(),
        });
    }
    Ok(a)
}

pub fn coideal_to_json(c: &CoIdeal) -> Value {
    let (kind, data) = match c.shape() {
        CoIdealShape::Degree(m) => ("degree", json!(m)),
        CoIdealShape::Box(b) => ("box", index_to_json(b)),
        CoIdealShape::Explicit => ("explicit", Value::Array(c.iter().map(index_to_json).collect())),
    };
    json!({ "p": c.arity(), "kind": kind, "data": data })
}

pub fn coideal_from_json(v: &Value) -> Result<CoIdeal> {
    let m = obj(v, "co-ideal")?;
    let p = uint(key(m, "p", "co-ideal")?, "co-ideal p")? as usize;
    if p == 0 {
        return Err(bad("co-ideal: p must be at least 1"));
    }
    let data = key(m, "data", "co-ideal")?;
    match string(key(m, "kind", "co-ideal")?, "co-ideal kind")? {
        "degree" => {
            let d = uint(data, "degree bound")?;
            let d = u32::try_from(d).map_err(|_| bad("degree bound too large"))?;
            Ok(CoIdeal::from_degree_bound(p, d))
        }
        "box" => Ok(CoIdeal::from_box(&index_with_arity(data, p)?)),
        "explicit" => {
            let members = array(data, "explicit co-ideal")?
                .iter()
                .map(|x| index_with_arity(x, p))
                .collect::<Result<Vec<_>>>()?;
            CoIdeal::from_members(p, members)
        }
        other => Err(bad(format!("co-ideal kind `{other}` is not degree, box or explicit"))),
    }
}

pub fn scalar_to_json(c: &Scalar) -> Value {
    json!(c.to_string())
}

pub fn scalar_from_json(v: &Value, k: Field) -> Result<Scalar> {
    match v {
        Value::String(s) => k.parse_scalar(s),
        Value::Number(n) => k.parse_scalar(&n.to_string()),
        _ => Err(bad("coefficient: expected \"a\" or \"a/b\"")),
    }
}

/// `{"field", "n", "terms": [[e_1, ..., e_n, "c"], ...]}`, terms in graded
/// order.
pub fn poly_to_json(f: &Poly) -> Value {
    let ring = f.ring();
    let terms: Vec<Value> = f
        .terms()
        .map(|(m, c)| {
            let mut row: Vec<Value> = m.entries().iter().map(|e| json!(e)).collect();
            row.push(scalar_to_json(c));
            Value::Array(row)
        })
        .collect();
    json!({ "field": field_to_json(ring.field), "n": ring.n, "terms": terms })
}

/// Reads the object form or, given a ring, an expression string.
pub fn poly_from_json(v: &Value, ring: Option<PolyRing>, over: Option<Field>) -> Result<Poly> {
    if let Value::String(s) = v {
        let ring = ring.ok_or_else(|| bad("polynomial expression needs a ring: use the object form"))?;
        return ring.parse(s);
    }
    let m = obj(v, "polynomial")?;
    let k = resolve_field(m, over, "polynomial")?;
    let n = uint(key(m, "n", "polynomial")?, "polynomial n")? as usize;
    let r = PolyRing::new(k, n);
    if let Some(expected) = ring {
        if expected != r {
            return Err(Error::ContextMismatch);
        }
    }
    let terms = array(key(m, "terms", "polynomial")?, "polynomial terms")?
        .iter()
        .map(|row| {
            let row = array(row, "polynomial term")?;
            if row.len() != n + 1 {
                return Err(Error::ArityMismatch {
                    what: "polynomial term",
                    expected: n + 1,
                    found: row.len(),
                });
            }
            let exps = index_from_json(&Value::Array(row[..n].to_vec()))?;
            Ok((exps, scalar_from_json(&row[n], k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Poly::from_terms(r, terms)
}

/// Series carriers with a JSON payload per coefficient.
pub trait JsonCoeff: Coeff {
    const CARRIER: &'static str;

    fn ctx_field(ctx: &Self::Ctx) -> Field;
    /// Number of variables of the base ring, if the carrier has one.
    fn ctx_vars(ctx: &Self::Ctx) -> Option<usize>;
    fn make_ctx(field: Field, n: Option<usize>) -> Result<Self::Ctx>;
    fn payload(&self) -> Value;
    fn from_payload(v: &Value, ctx: &Self::Ctx, over: Option<Field>) -> Result<Self>;
}

fn need_n(n: Option<usize>, what: &str) -> Result<usize> {
    n.ok_or_else(|| bad(format!("{what} series: missing key `n`")))
}

impl JsonCoeff for Scalar {
    const CARRIER: &'static str = "scalar";

    fn ctx_field(ctx: &Field) -> Field {
        *ctx
    }

    fn ctx_vars(_: &Field) -> Option<usize> {
        None
    }

    fn make_ctx(field: Field, _: Option<usize>) -> Result<Field> {
        Ok(field)
    }

    fn payload(&self) -> Value {
        scalar_to_json(self)
    }

    fn from_payload(v: &Value, ctx: &Field, _: Option<Field>) -> Result<Self> {
        scalar_from_json(v, *ctx)
    }
}

impl JsonCoeff for Poly {
    const CARRIER: &'static str = "poly";

    fn ctx_field(ctx: &PolyRing) -> Field {
        ctx.field
    }

    fn ctx_vars(ctx: &PolyRing) -> Option<usize> {
        Some(ctx.n)
    }

    fn make_ctx(field: Field, n: Option<usize>) -> Result<PolyRing> {
        Ok(PolyRing::new(field, need_n(n, "poly")?))
    }

    fn payload(&self) -> Value {
        json!(self.to_string())
    }

    fn from_payload(v: &Value, ctx: &PolyRing, over: Option<Field>) -> Result<Self> {
        poly_from_json(v, Some(*ctx), over)
    }
}

impl JsonCoeff for ClassicalDerivation {
    const CARRIER: &'static str = "derivation";

    fn ctx_field(ctx: &PolyRing) -> Field {
        ctx.field
    }

    fn ctx_vars(ctx: &PolyRing) -> Option<usize> {
        Some(ctx.n)
    }

    fn make_ctx(field: Field, n: Option<usize>) -> Result<PolyRing> {
        Ok(PolyRing::new(field, need_n(n, "derivation")?))
    }

    /// The images of `x_1, ..., x_n`.
    fn payload(&self) -> Value {
        Value::Array(self.images().iter().map(|f| json!(f.to_string())).collect())
    }

    fn from_payload(v: &Value, ctx: &PolyRing, over: Option<Field>) -> Result<Self> {
        let images = array(v, "derivation")?
            .iter()
            .map(|x| poly_from_json(x, Some(*ctx), over))
            .collect::<Result<Vec<_>>>()?;
        ClassicalDerivation::new(*ctx, images)
    }
}

fn primitive_to_json(p: &Primitive) -> Value {
    match p {
        Primitive::Identity => json!("id"),
        Primitive::MulBy(f) => json!({ "mul": f.to_string() }),
        Primitive::Derivation(d) => json!({ "der": d.payload() }),
        Primitive::HsComponent { hs, index } => {
            json!({ "hs": hs_to_json(hs), "index": index_to_json(index) })
        }
    }
}

fn primitive_from_json(v: &Value, ring: PolyRing, over: Option<Field>) -> Result<Primitive> {
    if v.as_str() == Some("id") {
        return Ok(Primitive::Identity);
    }
    let m = obj(v, "operator factor")?;
    if let Some(f) = m.get("mul") {
        return Ok(Primitive::MulBy(poly_from_json(f, Some(ring), over)?));
    }
    if let Some(d) = m.get("der") {
        return Ok(Primitive::Derivation(ClassicalDerivation::from_payload(d, &ring, over)?));
    }
    if let Some(h) = m.get("hs") {
        let hs = hs_from_json(h, over)?;
        if hs.ring() != ring {
            return Err(Error::ContextMismatch);
        }
        let index = index_with_arity(key(m, "index", "operator factor")?, hs.arity())?;
        return Ok(Primitive::HsComponent { hs, index });
    }
    Err(bad("operator factor: expected \"id\", {\"mul\"}, {\"der\"} or {\"hs\", \"index\"}"))
}

impl JsonCoeff for LinOp {
    const CARRIER: &'static str = "operator";

    fn ctx_field(ctx: &PolyRing) -> Field {
        ctx.field
    }

    fn ctx_vars(ctx: &PolyRing) -> Option<usize> {
        Some(ctx.n)
    }

    fn make_ctx(field: Field, n: Option<usize>) -> Result<PolyRing> {
        Ok(PolyRing::new(field, need_n(n, "operator")?))
    }

    /// `{"sum": [{"scalar": "c", "chain": [factor, ...]}, ...]}`; a chain
    /// is composed left to right, the rightmost factor acting first.
    fn payload(&self) -> Value {
        let sum: Vec<Value> = self
            .terms()
            .iter()
            .map(|(c, chain)| {
                json!({
                    "scalar": scalar_to_json(c),
                    "chain": chain.iter().map(primitive_to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "sum": sum })
    }

    fn from_payload(v: &Value, ctx: &PolyRing, over: Option<Field>) -> Result<Self> {
        let m = obj(v, "operator")?;
        let terms = array(key(m, "sum", "operator")?, "operator sum")?
            .iter()
            .map(|t| {
                let t = obj(t, "operator term")?;
                let c = match t.get("scalar") {
                    Some(c) => scalar_from_json(c, ctx.field)?,
                    None => ctx.field.one(),
                };
                let chain = array(key(t, "chain", "operator term")?, "operator chain")?
                    .iter()
                    .map(|p| primitive_from_json(p, *ctx, over))
                    .collect::<Result<Vec<_>>>()?;
                Ok((c, chain))
            })
            .collect::<Result<Vec<_>>>()?;
        LinOp::from_terms(*ctx, terms)
    }
}

/// `{"carrier", "field", "n", "coideal", "coeffs": [["(a,...)", payload], ...]}`;
/// `n` is omitted for scalar series.
pub fn series_to_json<C: JsonCoeff>(s: &Series<C>) -> Value {
    let coeffs: Vec<Value> = s
        .iter()
        .map(|(a, c)| json!([index_to_json(a), c.payload()]))
        .collect();
    let mut m = Map::new();
    m.insert("carrier".into(), json!(C::CARRIER));
    m.insert("field".into(), field_to_json(C::ctx_field(s.ctx())));
    if let Some(n) = C::ctx_vars(s.ctx()) {
        m.insert("n".into(), json!(n));
    }
    m.insert("coideal".into(), coideal_to_json(s.coideal()));
    m.insert("coeffs".into(), Value::Array(coeffs));
    Value::Object(m)
}

/// Keys a nested series may inherit from its enclosing object.
#[derive(Clone, Default)]
struct Inherited {
    field: Option<Field>,
    n: Option<usize>,
    coideal: Option<CoIdeal>,
}

pub fn series_from_json<C: JsonCoeff>(v: &Value, over: Option<Field>) -> Result<Series<C>> {
    series_with_defaults(v, over, &Inherited::default())
}

fn series_with_defaults<C: JsonCoeff>(v: &Value, over: Option<Field>, inh: &Inherited) -> Result<Series<C>> {
    let m = obj(v, "series")?;
    if let Some(tag) = m.get("carrier") {
        let tag = string(tag, "series carrier")?;
        if tag != C::CARRIER {
            return Err(bad(format!("series carrier `{tag}` where `{}` was expected", C::CARRIER)));
        }
    }
    let field = match (over, m.get("field"), inh.field) {
        (Some(k), _, _) => k,
        (None, Some(f), _) => field_from_json(f)?,
        (None, None, Some(k)) => k,
        (None, None, None) => return Err(bad("series: missing key `field`")),
    };
    let n = match m.get("n") {
        Some(n) => Some(uint(n, "series n")? as usize),
        None => inh.n,
    };
    let coideal = match (m.get("coideal"), &inh.coideal) {
        (Some(c), _) => coideal_from_json(c)?,
        (None, Some(c)) => c.clone(),
        (None, None) => return Err(bad("series: missing key `coideal`")),
    };
    let ctx = C::make_ctx(field, n)?;
    let coeffs = array(key(m, "coeffs", "series")?, "series coeffs")?
        .iter()
        .map(|entry| {
            let pair = array(entry, "series coefficient")?;
            if pair.len() != 2 {
                return Err(bad("series coefficient: expected [index, payload]"));
            }
            let a = index_with_arity(&pair[0], coideal.arity())?;
            Ok((a, C::from_payload(&pair[1], &ctx, over)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Series::from_coeffs(coideal, ctx, coeffs)
}

/// Nested series inside an object omit the keys the object already holds.
fn nested_series_to_json(s: &Series<Poly>) -> Value {
    let coeffs: Vec<Value> = s
        .iter()
        .map(|(a, c)| json!([index_to_json(a), c.payload()]))
        .collect();
    json!({ "coeffs": coeffs })
}

/// `{"field", "n", "p", "coideal", "images": [{"coeffs": ...}, ...]}` with
/// `images[j] = Φ_D(x_{j+1})`.
pub fn hs_to_json(d: &HsDerivation) -> Value {
    let ring = d.ring();
    json!({
        "field": field_to_json(ring.field),
        "n": ring.n,
        "p": d.arity(),
        "coideal": coideal_to_json(d.coideal()),
        "images": d.images().iter().map(nested_series_to_json).collect::<Vec<_>>(),
    })
}

pub fn hs_from_json(v: &Value, over: Option<Field>) -> Result<HsDerivation> {
    let m = obj(v, "HS-derivation")?;
    let field = resolve_field(m, over, "HS-derivation")?;
    let n = uint(key(m, "n", "HS-derivation")?, "HS-derivation n")? as usize;
    let coideal = coideal_from_json(key(m, "coideal", "HS-derivation")?)?;
    if let Some(p) = m.get("p") {
        let p = uint(p, "HS-derivation p")? as usize;
        if p != coideal.arity() {
            return Err(Error::ArityMismatch {
                what: "HS-derivation co-ideal",
                expected: p,
                found: coideal.arity(),
            });
        }
    }
    let ring = PolyRing::new(field, n);
    let inh = Inherited {
        field: Some(field),
        n: Some(n),
        coideal: Some(coideal.clone()),
    };
    let images = array(key(m, "images", "HS-derivation")?, "HS-derivation images")?
        .iter()
        .map(|s| series_with_defaults::<Poly>(s, over, &inh))
        .collect::<Result<Vec<_>>>()?;
    HsDerivation::from_generator_images(ring, coideal, images)
}

/// `{"field", "n", "source": {"p", "coideal"}, "target": {"p", "coideal"},
/// "images": [{"coeffs": ...}, ...]}`.
pub fn subst_to_json(phi: &SubstMap) -> Value {
    let ring = phi.ring();
    let side = |c: &CoIdeal| json!({ "p": c.arity(), "coideal": coideal_to_json(c) });
    json!({
        "field": field_to_json(ring.field),
        "n": ring.n,
        "source": side(phi.source()),
        "target": side(phi.target()),
        "images": phi.images().iter().map(nested_series_to_json).collect::<Vec<_>>(),
    })
}

fn side_from_json(v: &Value, what: &str) -> Result<CoIdeal> {
    let m = obj(v, what)?;
    let c = coideal_from_json(key(m, "coideal", what)?)?;
    if let Some(p) = m.get("p") {
        let p = uint(p, what)? as usize;
        if p != c.arity() {
            return Err(Error::ArityMismatch {
                what: "substitution co-ideal",
                expected: p,
                found: c.arity(),
            });
        }
    }
    Ok(c)
}

pub fn subst_from_json(v: &Value, over: Option<Field>) -> Result<SubstMap> {
    let m = obj(v, "substitution map")?;
    let field = resolve_field(m, over, "substitution map")?;
    let n = uint(key(m, "n", "substitution map")?, "substitution map n")? as usize;
    let source = side_from_json(key(m, "source", "substitution map")?, "substitution source")?;
    let target = side_from_json(key(m, "target", "substitution map")?, "substitution target")?;
    let ring = PolyRing::new(field, n);
    let inh = Inherited {
        field: Some(field),
        n: Some(n),
        coideal: Some(target.clone()),
    };
    let images = array(key(m, "images", "substitution map")?, "substitution images")?
        .iter()
        .map(|s| series_with_defaults::<Poly>(s, over, &inh))
        .collect::<Result<Vec<_>>>()?;
    SubstMap::from_images(ring, source, target, images)
}

/// `[["(e)", "(α)", "C"], ...]` for the nonzero `C_e(φ,α)`.
pub fn coeff_table_to_json(phi: &SubstMap) -> Value {
    Value::Array(
        phi.coeff_table()
            .iter()
            .map(|(e, a, c)| json!([index_to_json(e), index_to_json(a), c.to_string()]))
            .collect(),
    )
}

/// `[{"j", "i", "e", "h", "value"}, ...]` with 1-based `j`, `i`.
pub fn ntable_to_json(t: &NTable) -> Value {
    Value::Array(
        t.entries
            .iter()
            .map(|((j, i, e, h), v)| {
                json!({
                    "j": j + 1,
                    "i": i + 1,
                    "e": index_to_json(e),
                    "h": index_to_json(h),
                    "value": v.to_string(),
                })
            })
            .collect(),
    )
}

/// A top-level document, recognized by its `"type"` tag or its keys.
#[derive(Clone, Debug)]
pub enum Document {
    Hs(HsDerivation),
    Subst(SubstMap),
    Poly(Poly),
    ScalarSeries(Series<Scalar>),
    PolySeries(Series<Poly>),
    DerivationSeries(Series<ClassicalDerivation>),
    OperatorSeries(Series<LinOp>),
}

impl Document {
    pub fn from_json(v: &Value, over: Option<Field>) -> Result<Document> {
        let m = obj(v, "document")?;
        let kind = match m.get("type") {
            Some(t) => string(t, "document type")?.to_string(),
            None if m.contains_key("carrier") => "series".into(),
            None if m.contains_key("source") => "subst".into(),
            None if m.contains_key("images") => "hs".into(),
            None if m.contains_key("terms") => "poly".into(),
            None => return Err(bad("document: cannot tell its type; add a \"type\" key")),
        };
        match kind.as_str() {
            "hs" => Ok(Document::Hs(hs_from_json(v, over)?)),
            "subst" => Ok(Document::Subst(subst_from_json(v, over)?)),
            "poly" => Ok(Document::Poly(poly_from_json(v, None, over)?)),
            "series" => {
                let carrier = string(key(m, "carrier", "series")?, "series carrier")?;
                match carrier {
                    "scalar" => Ok(Document::ScalarSeries(series_from_json(v, over)?)),
                    "poly" => Ok(Document::PolySeries(series_from_json(v, over)?)),
                    "derivation" => Ok(Document::DerivationSeries(series_from_json(v, over)?)),
                    "operator" => Ok(Document::OperatorSeries(series_from_json(v, over)?)),
                    other => Err(bad(format!("unknown series carrier `{other}`"))),
                }
            }
            other => Err(bad(format!("unknown document type `{other}`"))),
        }
    }

    /// The canonical encoding, with its `"type"` tag.
    pub fn to_json(&self) -> Value {
        let (kind, mut v) = match self {
            Document::Hs(d) => ("hs", hs_to_json(d)),
            Document::Subst(phi) => ("subst", subst_to_json(phi)),
            Document::Poly(f) => ("poly", poly_to_json(f)),
            Document::ScalarSeries(s) => ("series", series_to_json(s)),
            Document::PolySeries(s) => ("series", series_to_json(s)),
            Document::DerivationSeries(s) => ("series", series_to_json(s)),
            Document::OperatorSeries(s) => ("series", series_to_json(s)),
        };
        v.as_object_mut()
            .expect("encoders emit objects")
            .insert("type".into(), json!(kind));
        v
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Document::Hs(_) => "HS-derivation",
            Document::Subst(_) => "substitution map",
            Document::Poly(_) => "polynomial",
            Document::ScalarSeries(_) => "scalar series",
            Document::PolySeries(_) => "polynomial series",
            Document::DerivationSeries(_) => "derivation series",
            Document::OperatorSeries(_) => "operator series",
        }
    }
}

/// Pretty-printed canonical text with a trailing newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}
