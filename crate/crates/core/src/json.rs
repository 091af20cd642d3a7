//! JSON fixture files.
//!
//! Every file is an object `{"schema", "p", "prec", "nvars", "kind", "payload"}`.
//! Big integers and rationals are strings, keys are sorted (serde_json's default
//! map is ordered), so emitting the same value twice gives identical bytes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::diffmod::{exact_inverse, DiffModule, Provenance, StandardForm};
use crate::error::{Error, Result};
use crate::expcalc::{Coord, ExponentEntry, ExponentMultiset};
use crate::laurent::{CycSeries, LaurentSeries, LogRadiusBox, PadicCtx};
use crate::matrix::Matrix;
use crate::rat::{fmt_q, parse_q, LogNorm, Q};
use crate::scalar::{is_prime, ppow, CycScalar, PadicScalar};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub p: u64,
    pub prec: u32,
    pub nvars: usize,
}

impl Header {
    pub fn ctx(&self) -> PadicCtx {
        PadicCtx { p: self.p, prec: self.prec }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Scalar(PadicScalar),
    Series(LaurentSeries),
    Box(LogRadiusBox),
    Module(DiffModule),
    Exponents(ExponentMultiset),
    Partition(Vec<Vec<usize>>),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Scalar(_) => "scalar",
            Payload::Series(_) => "series",
            Payload::Box(_) => "box",
            Payload::Module(_) => "module",
            Payload::Exponents(_) => "exponents",
            Payload::Partition(_) => "partition",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureFile {
    pub header: Header,
    pub payload: Payload,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| schema(format!("missing field '{key}'")))
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| schema(format!("'{what}' must be a non-negative integer")))
}

fn as_i64(v: &Value, what: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| schema(format!("'{what}' must be an integer")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(format!("'{what}' must be an array")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| schema(format!("'{what}' must be a string")))
}

pub fn rational_to_json(x: &Q) -> Value {
    Value::String(fmt_q(x))
}

pub fn rational_from_json(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) => n
            .as_i64()
            .map(|i| Q::from_integer(BigInt::from(i)))
            .ok_or_else(|| schema("rationals are strings or integers")),
        _ => Err(schema("rationals are strings or integers")),
    }
}

/// `"a/b"`, or `"-inf"` for the norm of zero.
pub fn lognorm_to_json(x: &LogNorm) -> Value {
    match x {
        Some(q) => rational_to_json(q),
        None => Value::String("-inf".into()),
    }
}

pub fn scalar_to_json(x: &PadicScalar) -> Value {
    if x.is_exact_zero() {
        return json!({"zero": true});
    }
    if x.is_exhausted() {
        return json!({"zero": true, "abs": x.abs_prec()});
    }
    json!({
        "shift": x.shift(),
        "mantissa": x.mantissa().to_string(),
        "prec": x.rel_prec(),
    })
}

/// Parses a scalar; the prime and the precision ceiling come from the header.
pub fn scalar_from_json(v: &Value, h: &Header) -> Result<PadicScalar> {
    if !v.is_object() {
        return Err(schema("scalar must be an object"));
    }
    if v.get("zero").and_then(Value::as_bool) == Some(true) {
        return Ok(match v.get("abs") {
            None => PadicScalar::zero(h.p),
            Some(a) => PadicScalar::exhausted(h.p, as_i64(a, "abs")?),
        });
    }
    let shift = as_i64(field(v, "shift")?, "shift")?;
    let prec = as_u64(field(v, "prec")?, "prec")?;
    if prec == 0 || prec > h.prec as u64 {
        return Err(schema(format!("scalar precision {prec} outside 1..={}", h.prec)));
    }
    let prec = prec as u32;
    let mantissa: BigInt = as_str(field(v, "mantissa")?, "mantissa")?
        .parse()
        .map_err(|_| malformed("mantissa is not a decimal integer"))?;
    if mantissa.is_negative() || mantissa >= ppow(h.p, prec) {
        return Err(schema("mantissa outside [0, p^prec)"));
    }
    if mantissa.mod_floor(&BigInt::from(h.p)).is_zero() {
        return Err(schema("mantissa must be prime to p"));
    }
    Ok(PadicScalar::new(h.p, shift, mantissa, prec))
}

/// Cyclotomic coefficients are emitted for reports only.
pub fn cyc_scalar_to_json(x: &CycScalar) -> Value {
    json!({
        "level": x.level(),
        "coords": x.coords().iter().map(scalar_to_json).collect::<Vec<_>>(),
    })
}

pub fn cyc_series_to_json(f: &CycSeries) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .map(|(e, c)| json!({"exp": e, "coef": cyc_scalar_to_json(c)}))
        .collect();
    json!({"nvars": f.nvars(), "level": f.level(), "terms": terms})
}

pub fn series_to_json(f: &LaurentSeries) -> Value {
    let window: Vec<Value> = f
        .support_window()
        .unwrap_or_default()
        .iter()
        .map(|(lo, hi)| json!([lo, hi]))
        .collect();
    let terms: Vec<Value> = f
        .terms()
        .map(|(e, c)| json!({"exp": e, "coef": scalar_to_json(c)}))
        .collect();
    json!({"nvars": f.nvars(), "window": window, "terms": terms})
}

pub fn series_from_json(v: &Value, h: &Header) -> Result<LaurentSeries> {
    let n = as_u64(field(v, "nvars")?, "nvars")? as usize;
    if n != h.nvars {
        return Err(schema(format!("series has {n} variables, header says {}", h.nvars)));
    }
    let window: Vec<(i64, i64)> = as_array(field(v, "window")?, "window")?
        .iter()
        .map(|w| {
            let w = as_array(w, "window")?;
            match w.as_slice() {
                [lo, hi] => Ok((as_i64(lo, "window")?, as_i64(hi, "window")?)),
                _ => Err(schema("window entries are [lo, hi]")),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = LaurentSeries::zero(n, &h.ctx());
    for t in as_array(field(v, "terms")?, "terms")? {
        let e: Vec<i64> = as_array(field(t, "exp")?, "exp")?
            .iter()
            .map(|x| as_i64(x, "exp"))
            .collect::<Result<_>>()?;
        if e.len() != n {
            return Err(schema("exponent length differs from nvars"));
        }
        if !window.is_empty() && e.iter().zip(&window).any(|(x, (lo, hi))| x < lo || x > hi) {
            return Err(schema("term outside the declared window"));
        }
        let c = scalar_from_json(field(t, "coef")?, h)?;
        if !out.coeff(&e).is_exact_zero() {
            return Err(schema("repeated exponent"));
        }
        out.add_term(e, &c);
    }
    if window.is_empty() && !out.is_zero() {
        return Err(schema("non-zero series needs a window"));
    }
    Ok(out)
}

pub fn box_to_json(b: &LogRadiusBox) -> Value {
    json!({
        "lo": b.lo.iter().map(rational_to_json).collect::<Vec<_>>(),
        "hi": b.hi.iter().map(rational_to_json).collect::<Vec<_>>(),
    })
}

pub fn box_from_json(v: &Value) -> Result<LogRadiusBox> {
    let side = |k: &str| -> Result<Vec<Q>> { as_array(field(v, k)?, k)?.iter().map(rational_from_json).collect() };
    LogRadiusBox::new(side("lo")?, side("hi")?)
}

pub fn matrix_to_json<T, F: Fn(&T) -> Value>(m: &Matrix<T>, f: F) -> Value
where
    T: crate::matrix::Ring,
{
    Value::Array(
        m.row_vecs()
            .iter()
            .map(|r| Value::Array(r.iter().map(&f).collect()))
            .collect(),
    )
}

pub fn matrix_from_json<T, F: Fn(&Value) -> Result<T>>(v: &Value, f: F) -> Result<Matrix<T>>
where
    T: crate::matrix::Ring,
{
    let rows: Vec<Vec<T>> = as_array(v, "matrix")?
        .iter()
        .map(|r| as_array(r, "matrix row")?.iter().map(&f).collect())
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(schema("empty matrix"));
    }
    Matrix::from_rows(rows).map_err(|_| schema("ragged matrix"))
}

pub fn series_matrix_to_json(m: &Matrix<LaurentSeries>) -> Value {
    matrix_to_json(m, series_to_json)
}

pub fn series_matrix_from_json(v: &Value, h: &Header) -> Result<Matrix<LaurentSeries>> {
    matrix_from_json(v, |x| series_from_json(x, h))
}

pub fn coord_to_json(c: &Coord) -> Value {
    match c {
        Coord::Rat(q) => json!({"rat": fmt_q(q)}),
        Coord::Padic(x) => json!({"padic": scalar_to_json(x)}),
    }
}

pub fn coord_from_json(v: &Value, h: &Header) -> Result<Coord> {
    if let Some(r) = v.get("rat") {
        return Ok(Coord::Rat(rational_from_json(r)?));
    }
    if let Some(x) = v.get("padic") {
        return Ok(Coord::Padic(scalar_from_json(x, h)?));
    }
    Err(schema("coordinate needs 'rat' or 'padic'"))
}

pub fn entry_to_json(e: &ExponentEntry) -> Value {
    json!({"coords": e.coords.iter().map(coord_to_json).collect::<Vec<_>>()})
}

pub fn entry_from_json(v: &Value, h: &Header) -> Result<ExponentEntry> {
    let coords: Vec<Coord> = as_array(field(v, "coords")?, "coords")?
        .iter()
        .map(|c| coord_from_json(c, h))
        .collect::<Result<_>>()?;
    if coords.len() != h.nvars {
        return Err(schema("exponent dimension differs from nvars"));
    }
    Ok(ExponentEntry::new(coords))
}

pub fn multiset_to_json(a: &ExponentMultiset) -> Value {
    Value::Array(a.entries.iter().map(entry_to_json).collect())
}

pub fn multiset_from_json(v: &Value, h: &Header) -> Result<ExponentMultiset> {
    let entries: Vec<ExponentEntry> = as_array(v, "multiset")?
        .iter()
        .map(|e| entry_from_json(e, h))
        .collect::<Result<_>>()?;
    ExponentMultiset::new(h.p, entries)
}

pub fn partition_to_json(blocks: &[Vec<usize>]) -> Value {
    json!(blocks)
}

/// Blocks must be non-empty, disjoint and cover `0..m` for some `m`.
pub fn partition_from_json(v: &Value) -> Result<Vec<Vec<usize>>> {
    let blocks: Vec<Vec<usize>> = as_array(v, "partition")?
        .iter()
        .map(|b| {
            as_array(b, "block")?
                .iter()
                .map(|i| as_u64(i, "index").map(|i| i as usize))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut seen: Vec<usize> = blocks.iter().flatten().copied().collect();
    seen.sort_unstable();
    if blocks.iter().any(|b| b.is_empty()) || seen.iter().enumerate().any(|(i, x)| i != *x) {
        return Err(Error::InvalidPartition("blocks must split 0..m".into()));
    }
    Ok(blocks)
}

pub fn module_to_json(m: &DiffModule) -> Value {
    let mut obj = Map::new();
    obj.insert("rank".into(), json!(m.rank));
    obj.insert("nvars".into(), json!(m.nvars));
    obj.insert("box".into(), box_to_json(&m.domain));
    obj.insert("theta".into(), Value::Array(m.theta.iter().map(series_matrix_to_json).collect()));
    if let Provenance::Certified { standard, twist, twist_inv } = &m.provenance {
        obj.insert(
            "certified".into(),
            json!({
                "lambda": standard.lambda.entries.iter().map(|e| {
                    Value::Array(e.coords.iter().map(coord_to_json).collect())
                }).collect::<Vec<_>>(),
                "nilpotent": standard.nilpotent.iter().map(|s| matrix_to_json(s, scalar_to_json)).collect::<Vec<_>>(),
                "twist": series_matrix_to_json(twist),
                "twist_inv": series_matrix_to_json(twist_inv),
                "box": box_to_json(&m.domain),
            }),
        );
    }
    Value::Object(obj)
}

pub fn module_from_json(v: &Value, h: &Header) -> Result<DiffModule> {
    let rank = as_u64(field(v, "rank")?, "rank")? as usize;
    let nvars = as_u64(field(v, "nvars")?, "nvars")? as usize;
    if nvars != h.nvars {
        return Err(schema("module nvars differs from header"));
    }
    let cert = v.get("certified");
    let domain = match (v.get("box"), cert.and_then(|c| c.get("box"))) {
        (Some(b), _) | (None, Some(b)) => box_from_json(b)?,
        (None, None) => LogRadiusBox::point(vec![Q::zero(); nvars]),
    };
    if domain.nvars() != nvars {
        return Err(schema("box dimension differs from nvars"));
    }
    let theta: Vec<Matrix<LaurentSeries>> = as_array(field(v, "theta")?, "theta")?
        .iter()
        .map(|t| series_matrix_from_json(t, h))
        .collect::<Result<_>>()?;
    if theta.iter().any(|t| t.rows() != rank || t.cols() != rank) {
        return Err(schema("connection matrix size differs from rank"));
    }
    let Some(c) = cert else {
        return DiffModule::general(h.p, h.prec, theta, domain);
    };
    let lambda: Vec<ExponentEntry> = as_array(field(c, "lambda")?, "lambda")?
        .iter()
        .map(|e| {
            let coords: Vec<Coord> = as_array(e, "lambda entry")?
                .iter()
                .map(|x| coord_from_json(x, h))
                .collect::<Result<_>>()?;
            Ok(ExponentEntry::new(coords))
        })
        .collect::<Result<_>>()?;
    let nilpotent: Vec<Matrix<PadicScalar>> = as_array(field(c, "nilpotent")?, "nilpotent")?
        .iter()
        .map(|s| matrix_from_json(s, |x| scalar_from_json(x, h)))
        .collect::<Result<_>>()?;
    let standard = StandardForm::new(ExponentMultiset::new(h.p, lambda)?, nilpotent, h.prec)?;
    if standard.rank() != rank || standard.nvars() != nvars {
        return Err(schema("standard form shape differs from the module"));
    }
    let twist = series_matrix_from_json(field(c, "twist")?, h)?;
    let twist_inv = match c.get("twist_inv") {
        Some(t) => series_matrix_from_json(t, h)?,
        None => exact_inverse(&twist).ok_or_else(|| Error::NotInvertible("twist has no exact inverse".into()))?,
    };
    let m = DiffModule {
        p: h.p,
        prec: h.prec,
        nvars,
        rank,
        theta,
        domain,
        provenance: Provenance::Certified { standard, twist, twist_inv },
    };
    m.check_certificate()?;
    Ok(m)
}

impl FixtureFile {
    pub fn new(header: Header, payload: Payload) -> Self {
        FixtureFile { header, payload }
    }

    pub fn to_value(&self) -> Value {
        let payload = match &self.payload {
            Payload::Scalar(x) => scalar_to_json(x),
            Payload::Series(f) => series_to_json(f),
            Payload::Box(b) => box_to_json(b),
            Payload::Module(m) => module_to_json(m),
            Payload::Exponents(a) => multiset_to_json(a),
            Payload::Partition(b) => partition_to_json(b),
        };
        json!({
            "schema": SCHEMA_VERSION,
            "p": self.header.p,
            "prec": self.header.prec,
            "nvars": self.header.nvars,
            "kind": self.payload.kind(),
            "payload": payload,
        })
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let version = as_u64(field(v, "schema")?, "schema")?;
        if version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema version {version}")));
        }
        let p = as_u64(field(v, "p")?, "p")?;
        if !is_prime(p) {
            return Err(schema(format!("{p} is not prime")));
        }
        let prec = as_u64(field(v, "prec")?, "prec")?;
        if prec == 0 || prec > u32::MAX as u64 {
            return Err(schema("precision must be positive"));
        }
        let header = Header {
            p,
            prec: prec as u32,
            nvars: as_u64(field(v, "nvars")?, "nvars")? as usize,
        };
        let body = field(v, "payload")?;
        let payload = match as_str(field(v, "kind")?, "kind")? {
            "scalar" => Payload::Scalar(scalar_from_json(body, &header)?),
            "series" => Payload::Series(series_from_json(body, &header)?),
            "box" => {
                let b = box_from_json(body)?;
                if b.nvars() != header.nvars {
                    return Err(schema("box dimension differs from nvars"));
                }
                Payload::Box(b)
            }
            "module" => Payload::Module(module_from_json(body, &header)?),
            "exponents" => Payload::Exponents(multiset_from_json(body, &header)?),
            "partition" => Payload::Partition(partition_from_json(body)?),
            other => return Err(schema(format!("unknown kind '{other}'"))),
        };
        Ok(FixtureFile { header, payload })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| malformed(e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn emit(&self) -> String {
        to_canonical_string(&self.to_value())
    }

    pub fn module(m: &DiffModule) -> Self {
        Self::new(
            Header {
                p: m.p,
                prec: m.prec,
                nvars: m.nvars,
            },
            Payload::Module(m.clone()),
        )
    }
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rat::qf;

    fn rt(f: &FixtureFile) {
        let s = f.emit();
        let g = FixtureFile::parse(&s).unwrap();
        assert_eq!(&g, f);
        assert_eq!(g.emit(), s);
    }

    #[test]
    fn round_trips() {
        let h = Header { p: 3, prec: 10, nvars: 1 };
        rt(&FixtureFile::new(h, Payload::Scalar(PadicScalar::from_rational(3, &qf(-7, 2), 10))));
        rt(&FixtureFile::new(h, Payload::Scalar(PadicScalar::zero(3))));
        rt(&FixtureFile::new(h, Payload::Scalar(PadicScalar::exhausted(3, 4))));
        let f = LaurentSeries::from_ints(3, 10, 1, &[(vec![-2], 5), (vec![3], 9)]);
        rt(&FixtureFile::new(h, Payload::Series(f)));
        rt(&FixtureFile::new(h, Payload::Series(LaurentSeries::zero(1, &h.ctx()))));
        let b = LogRadiusBox::new(vec![qf(-1, 2)], vec![qf(1, 3)]).unwrap();
        rt(&FixtureFile::new(h, Payload::Box(b)));
        rt(&FixtureFile::new(h, Payload::Partition(vec![vec![0, 2], vec![1]])));
        let a = ExponentMultiset::from_rationals(3, &[vec![qf(1, 2)], vec![qf(-1, 4)]]).unwrap();
        rt(&FixtureFile::new(h, Payload::Exponents(a)));
        rt(&FixtureFile::module(&fixtures::twisted_rank2()));
        rt(&FixtureFile::module(&fixtures::unipotent(true)));
        let g = DiffModule::general(3, 32, fixtures::twisted_rank2().theta, LogRadiusBox::point(vec![qf(0, 1)])).unwrap();
        rt(&FixtureFile::module(&g));
    }

    #[test]
    fn scalar_encoding() {
        let x = PadicScalar::from_rational(3, &qf(1, 2), 3);
        let v = scalar_to_json(&x);
        assert_eq!(v, json!({"mantissa": "14", "prec": 3, "shift": 0}));
        assert_eq!(scalar_to_json(&PadicScalar::zero(3)), json!({"zero": true}));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(FixtureFile::parse("{").unwrap_err().code(), "malformed_json");
        let bad = r#"{"schema": 2, "p": 3, "prec": 4, "nvars": 1, "kind": "box", "payload": {}}"#;
        assert_eq!(FixtureFile::parse(bad).unwrap_err().code(), "schema_mismatch");
        let high = r#"{"schema": 1, "p": 3, "prec": 4, "nvars": 1, "kind": "scalar",
                      "payload": {"shift": 0, "mantissa": "1", "prec": 9}}"#;
        assert_eq!(FixtureFile::parse(high).unwrap_err().code(), "schema_mismatch");
        let part = r#"{"schema": 1, "p": 3, "prec": 4, "nvars": 1, "kind": "partition", "payload": [[0], [2]]}"#;
        assert!(FixtureFile::parse(part).is_err());
    }
}
