//! JSON model documents.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "input_arity": 2,
//!   "output": "f",
//!   "nodes": [
//!     { "id": "x1", "op": "input", "params": { "start": 0, "len": 1 }, "inputs": [] },
//!     { "id": "f", "op": "relu", "params": {}, "inputs": ["h"] }
//!   ]
//! }
//! ```
//!
//! Op names and their `params`:
//!
//! - `input`: `start`, `len`
//! - `constant`: `value` (array)
//! - `dense`: `weights` (array of rows), `bias` (array)
//! - `scale`: `factor`
//! - `symmetry_cex`: `a`, `b`, `i`, `j`
//! - `relu`, `sigmoid`, `tanh`, `add`, `subtract`, `multiply`, `min`, `max`,
//!   `sum_reduce`: no params
//!
//! [`save_model`] writes nodes sorted by id with every number in scientific
//! notation carrying 17 significant digits, so a save/load cycle is lossless.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::graph::{ModelGraph, NodeSpec, Op, PiecewiseKind};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format_version: u64,
    input_arity: usize,
    output: String,
    nodes: Vec<RawNode>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    op: String,
    #[serde(default)]
    params: Map<String, Value>,
    #[serde(default)]
    inputs: Vec<String>,
}

pub fn load_model(document: &str) -> Result<ModelGraph<f64>> {
    let raw: RawDocument = serde_json::from_str(document).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            raw.format_version
        )));
    }
    let nodes = raw
        .nodes
        .into_iter()
        .enumerate()
        .map(|(position, node)| parse_node(position, node))
        .collect::<Result<Vec<_>>>()?;
    ModelGraph::new(nodes, raw.output, raw.input_arity)
}

pub fn save_model(model: &ModelGraph<f64>) -> String {
    let nodes: Vec<Value> = model
        .nodes()
        .iter()
        .map(|n| {
            json!({
                "id": n.id,
                "op": n.op.name(),
                "params": op_params(&n.op),
                "inputs": n.inputs,
            })
        })
        .collect();
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "input_arity": model.input_arity(),
        "output": model.output(),
        "nodes": nodes,
    });
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits::default());
    doc.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Re-serializes any valid document in canonical form.
pub fn canonicalize(document: &str) -> Result<String> {
    load_model(document).map(|m| save_model(&m))
}

fn parse_node(position: usize, raw: RawNode) -> Result<NodeSpec<f64>> {
    let at = |reason: String| {
        Error::Parse(format!("node #{position} (id '{}'): {reason}", raw.id))
    };
    let p = &raw.params;
    let num = |key: &str| -> Result<f64> {
        p.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| at(format!("missing or non-numeric param '{key}'")))
    };
    let index = |key: &str| -> Result<usize> {
        p.get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| at(format!("missing or non-integer param '{key}'")))
    };
    let vector = |v: Option<&Value>, key: &str| -> Result<Vec<f64>> {
        v.and_then(Value::as_array)
            .ok_or_else(|| at(format!("missing array param '{key}'")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| at(format!("non-numeric entry in '{key}'"))))
            .collect()
    };
    let allowed: &[&str] = match raw.op.as_str() {
        "input" => &["start", "len"],
        "constant" => &["value"],
        "dense" => &["weights", "bias"],
        "scale" => &["factor"],
        "symmetry_cex" => &["a", "b", "i", "j"],
        _ => &[],
    };
    if let Some(extra) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(at(format!("unexpected param '{extra}' for op '{}'", raw.op)));
    }
    let op = match raw.op.as_str() {
        "input" => Op::Input {
            start: index("start")?,
            len: index("len")?,
        },
        "constant" => Op::Constant {
            value: vector(p.get("value"), "value")?,
        },
        "dense" => {
            let rows = p
                .get("weights")
                .and_then(Value::as_array)
                .ok_or_else(|| at("missing array param 'weights'".into()))?
                .iter()
                .map(|row| vector(Some(row), "weights"))
                .collect::<Result<Vec<_>>>()?;
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != cols) {
                return Err(at("dense weight rows have unequal lengths".into()));
            }
            Op::dense(rows, vector(p.get("bias"), "bias")?)
        }
        "relu" => Op::Relu,
        "sigmoid" => Op::Sigmoid,
        "tanh" => Op::Tanh,
        "add" => Op::Add,
        "subtract" => Op::Subtract,
        "scale" => Op::Scale(num("factor")?),
        "multiply" => Op::Multiply,
        "min" => Op::Min,
        "max" => Op::Max,
        "sum_reduce" => Op::SumReduce,
        "symmetry_cex" => Op::Piecewise(PiecewiseKind::SymmetryCex {
            a: num("a")?,
            b: num("b")?,
            i: index("i")?,
            j: index("j")?,
        }),
        other => return Err(at(format!("unknown op '{other}'"))),
    };
    Ok(NodeSpec {
        id: raw.id,
        op,
        inputs: raw.inputs,
    })
}

fn op_params(op: &Op<f64>) -> Value {
    match op {
        Op::Input { start, len } => json!({ "start": start, "len": len }),
        Op::Constant { value } => json!({ "value": value }),
        Op::Dense {
            rows: _,
            cols,
            weights,
            bias,
        } => {
            let rows: Vec<&[f64]> = if *cols == 0 {
                bias.iter().map(|_| &weights[..0]).collect()
            } else {
                weights.chunks(*cols).collect()
            };
            json!({ "weights": rows, "bias": bias })
        }
        Op::Scale(s) => json!({ "factor": s }),
        Op::Piecewise(PiecewiseKind::SymmetryCex { a, b, i, j }) => {
            json!({ "a": a, "b": b, "i": i, "j": j })
        }
        _ => json!({}),
    }
}

/// Pretty JSON with floats written as `d.ddddddddddddddddde±x` (17 significant digits).
#[derive(Default)]
pub struct FixedDigits {
    inner: PrettyFormatter<'static>,
}

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any value with [`FixedDigits`] formatting.
pub fn to_fixed_json<S: Serialize>(value: &S) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits::default());
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
