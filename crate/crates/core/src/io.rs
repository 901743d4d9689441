//! JSON exchange format for ellipsotopes.
//!
//! ```json
//! {"center": [0, 0], "generators": [[1, 0], [0, 1]], "p": 2,
//!  "constraints": {"A": [[1, 0]], "b": [0.5]}, "index_set": [[0, 1]]}
//! ```
//!
//! `p` is a number or `"inf"`; `generators` lists the `n` rows of `G`;
//! `constraints` and `index_set` are optional (no constraints, one block).
//! Indices are 0-based. The writer is canonical: keys sorted, no whitespace,
//! floats with 17 significant digits, trailing newline.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::error::{EtopeError, Result};
use crate::ops::CpzExport;
use crate::scalar::Scalar;
use crate::set::{Ellipsotope, PNorm, Parts};

fn schema(pointer: &str, message: impl Into<String>) -> EtopeError {
    EtopeError::Schema {
        pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
        message: message.into(),
    }
}

fn number(v: &Value, ptr: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| schema(ptr, format!("expected a number, found {}", kind(v))))?;
    if !x.is_finite() {
        return Err(schema(ptr, "number is not finite"));
    }
    Ok(x)
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| schema(ptr, format!("expected an array, found {}", kind(v))))
}

fn vector(v: &Value, ptr: &str) -> Result<Vec<f64>> {
    array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{ptr}/{i}")))
        .collect()
}

/// Rows of a matrix; `cols` is taken from the first row unless given.
fn matrix(v: &Value, ptr: &str, cols: Option<usize>) -> Result<DMatrix<f64>> {
    let rows = array(v, ptr)?;
    let parsed: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| vector(r, &format!("{ptr}/{i}")))
        .collect::<Result<_>>()?;
    let width = cols.or_else(|| parsed.first().map(|r| r.len())).unwrap_or(0);
    for (i, r) in parsed.iter().enumerate() {
        if r.len() != width {
            return Err(schema(
                &format!("{ptr}/{i}"),
                format!("row has {} entries, expected {width}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(parsed.len(), width, |i, j| parsed[i][j]))
}

fn index(v: &Value, ptr: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(ptr, format!("expected a non-negative integer, found {}", kind(v))))
}

fn parse_norm(v: &Value) -> Result<PNorm<f64>> {
    match v {
        Value::String(s) if s.eq_ignore_ascii_case("inf") => Ok(PNorm::Inf),
        Value::String(s) => Err(schema("/p", format!("expected a number or \"inf\", found {s:?}"))),
        other => Ok(PNorm::Finite(number(other, "/p")?)),
    }
}

/// Parses a document into unvalidated parts. Structural problems (wrong
/// types, ragged rows) are schema errors; invariant violations are left for
/// [`Parts::validate`].
pub fn parse_parts(text: &str) -> Result<Parts<f64>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| EtopeError::Json(e.to_string()))?;
    parts_from_value(&doc)
}

/// Same as [`parse_parts`] on an already-decoded JSON value.
pub fn parts_from_value(doc: &Value) -> Result<Parts<f64>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| schema("", format!("expected an object, found {}", kind(doc))))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "p" | "center" | "generators" | "constraints" | "index_set") {
            return Err(schema(&format!("/{key}"), "unknown key"));
        }
    }
    let field = |k: &str| obj.get(k).ok_or_else(|| schema(&format!("/{k}"), "missing required key"));
    let p = parse_norm(field("p")?)?;
    let center = DVector::from_vec(vector(field("center")?, "/center")?);
    let gen_rows = array(field("generators")?, "/generators")?;
    let generators = if gen_rows.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        matrix(field("generators")?, "/generators", None)?
    };
    let m = generators.ncols();
    let (constraints, rhs) = match obj.get("constraints") {
        None | Some(Value::Null) => (DMatrix::zeros(0, m), DVector::zeros(0)),
        Some(c) => {
            let co = c
                .as_object()
                .ok_or_else(|| schema("/constraints", format!("expected an object, found {}", kind(c))))?;
            for key in co.keys() {
                if key != "A" && key != "b" {
                    return Err(schema(&format!("/constraints/{key}"), "unknown key"));
                }
            }
            let a_val = co.get("A").ok_or_else(|| schema("/constraints/A", "missing required key"))?;
            let b_val = co.get("b").ok_or_else(|| schema("/constraints/b", "missing required key"))?;
            let a = matrix(a_val, "/constraints/A", if array(a_val, "/constraints/A")?.is_empty() { Some(m) } else { None })?;
            (a, DVector::from_vec(vector(b_val, "/constraints/b")?))
        }
    };
    let blocks = match obj.get("index_set") {
        None | Some(Value::Null) => {
            if m == 0 {
                vec![]
            } else {
                vec![(0..m).collect()]
            }
        }
        Some(v) => array(v, "/index_set")?
            .iter()
            .enumerate()
            .map(|(i, blk)| {
                array(blk, &format!("/index_set/{i}"))?
                    .iter()
                    .enumerate()
                    .map(|(j, x)| index(x, &format!("/index_set/{i}/{j}")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
    };
    let generators = if generators.nrows() == 0 && m == 0 {
        DMatrix::zeros(center.len(), 0)
    } else {
        generators
    };
    Ok(Parts {
        p,
        center,
        generators,
        constraints,
        rhs,
        blocks,
    })
}

/// Parses and validates an ellipsotope document.
pub fn parse_set<T: Scalar>(text: &str) -> Result<Ellipsotope<T>> {
    from_parts_f64(parse_parts(text)?)
}

pub fn set_from_value<T: Scalar>(doc: &Value) -> Result<Ellipsotope<T>> {
    from_parts_f64(parts_from_value(doc)?)
}

fn from_parts_f64<T: Scalar>(parts: Parts<f64>) -> Result<Ellipsotope<T>> {
    let p = match parts.p {
        PNorm::Inf => PNorm::Inf,
        PNorm::Finite(x) => PNorm::Finite(T::lit(x)),
    };
    Ellipsotope::from_parts(Parts {
        p,
        center: parts.center.map(T::lit),
        generators: parts.generators.map(T::lit),
        constraints: parts.constraints.map(T::lit),
        rhs: parts.rhs.map(T::lit),
        blocks: parts.blocks,
    })
}

/// Reads a file as UTF-8. Undecodable bytes are malformed input, not an
/// I/O failure.
pub fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| EtopeError::Io(format!("{}: {e}", path.display())))?;
    String::from_utf8(bytes).map_err(|e| EtopeError::Json(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| EtopeError::Io(format!("{}: {e}", path.display())))
}

pub fn read_set<T: Scalar>(path: &Path) -> Result<Ellipsotope<T>> {
    parse_set(&read_text(path)?)
}

pub fn write_set<T: Scalar>(e: &Ellipsotope<T>, path: &Path) -> Result<()> {
    write_text(path, &to_json(e))
}

/// Canonical float: 17 significant digits in exponent form.
pub fn fmt_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn push_vec<T: Scalar>(out: &mut String, v: impl IntoIterator<Item = T>) {
    out.push('[');
    for (i, x) in v.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_float(x.as_f64()));
    }
    out.push(']');
}

fn push_matrix<T: Scalar>(out: &mut String, m: &DMatrix<T>) {
    out.push('[');
    for i in 0..m.nrows() {
        if i > 0 {
            out.push(',');
        }
        push_vec(out, m.row(i).iter().copied());
    }
    out.push(']');
}

fn push_blocks(out: &mut String, blocks: &[Vec<usize>]) {
    out.push('[');
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, x) in b.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{x}").expect("string write");
        }
        out.push(']');
    }
    out.push(']');
}

/// Canonical JSON object body (no trailing newline).
pub fn to_json_value_string<T: Scalar>(e: &Ellipsotope<T>) -> String {
    let mut out = String::from("{\"center\":");
    push_vec(&mut out, e.center().iter().copied());
    if e.num_constraints() > 0 {
        out.push_str(",\"constraints\":{\"A\":");
        push_matrix(&mut out, e.constraints());
        out.push_str(",\"b\":");
        push_vec(&mut out, e.rhs().iter().copied());
        out.push('}');
    }
    out.push_str(",\"generators\":");
    push_matrix(&mut out, e.generators());
    out.push_str(",\"index_set\":");
    push_blocks(&mut out, e.index_set().blocks());
    out.push_str(",\"p\":");
    match e.p() {
        PNorm::Inf => out.push_str("\"inf\""),
        PNorm::Finite(p) => out.push_str(&fmt_float(p.as_f64())),
    }
    out.push('}');
    out
}

/// Canonical document for `e`, newline-terminated.
pub fn to_json<T: Scalar>(e: &Ellipsotope<T>) -> String {
    let mut s = to_json_value_string(e);
    s.push('\n');
    s
}

/// Canonical document for a polynomial-zonotope export.
pub fn cpz_to_json<T: Scalar>(c: &CpzExport<T>) -> String {
    let ints = |out: &mut String, m: &DMatrix<u32>| {
        out.push('[');
        for i in 0..m.nrows() {
            if i > 0 {
                out.push(',');
            }
            out.push('[');
            for j in 0..m.ncols() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", m[(i, j)]).expect("string write");
            }
            out.push(']');
        }
        out.push(']');
    };
    let mut out = String::from("{\"A\":");
    push_matrix(&mut out, &c.constraint_coeffs);
    out.push_str(",\"D\":");
    ints(&mut out, &c.constraint_exponents);
    out.push_str(",\"G\":");
    push_matrix(&mut out, &c.generators);
    out.push_str(",\"X\":");
    ints(&mut out, &c.exponents);
    out.push_str(",\"b\":");
    push_vec(&mut out, c.constraint_rhs.iter().copied());
    out.push_str(",\"c\":");
    push_vec(&mut out, c.center.iter().copied());
    out.push_str("}\n");
    out
}

/// Exchange-format JSON value (same content as [`to_json`]).
pub fn set_to_value<T: Scalar>(e: &Ellipsotope<T>) -> Value {
    serde_json::from_str(&to_json_value_string(e)).expect("canonical writer emits valid JSON")
}

impl<T: Scalar> serde::Serialize for Ellipsotope<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        set_to_value(self).serialize(s)
    }
}

impl<'de, T: Scalar> serde::Deserialize<'de> for Ellipsotope<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        set_from_value(&v).map_err(serde::de::Error::custom)
    }
}

/// Matrix operand: either a bare array of rows or `{"matrix": rows,
/// "translation": [..]}` (translation optional).
pub fn parse_matrix_doc(text: &str) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let doc: Value = serde_json::from_str(text).map_err(|e| EtopeError::Json(e.to_string()))?;
    match &doc {
        Value::Array(_) => Ok((matrix(&doc, "", None)?, None)),
        Value::Object(o) => {
            for key in o.keys() {
                if key != "matrix" && key != "translation" {
                    return Err(schema(&format!("/{key}"), "unknown key"));
                }
            }
            let m = o.get("matrix").ok_or_else(|| schema("/matrix", "missing required key"))?;
            let t = match o.get("translation") {
                None | Some(Value::Null) => None,
                Some(t) => Some(DVector::from_vec(vector(t, "/translation")?)),
            };
            Ok((matrix(m, "/matrix", None)?, t))
        }
        other => Err(schema("", format!("expected an array or object, found {}", kind(other)))),
    }
}
