//! JSON channel descriptions and run configuration.
//!
//! A channel is `{"type": ..., "params": {...}, "children": [...]}`:
//!
//! | type                   | params                                          |
//! |------------------------|-------------------------------------------------|
//! | `phase_flip`           | `p`, optional `range`: `"strict"` or `"full"`   |
//! | `bit_flip`             | `p`, optional `range`                           |
//! | `depolarizing`         | `p`                                             |
//! | `amplitude_damping`    | `p`                                             |
//! | `correlated_dephasing` | `lambda`, optional `n` (default 2)              |
//! | `unitary`              | `matrix`, or `kak` with `theta` and local gates |
//! | `kraus`                | `ops`: list of matrices                         |
//! | `tensor`               | none; `children` are combined, first = qubit 1  |
//!
//! Matrices use the `{"n", "re", "im"}` layout of [`crate::io::MatrixDoc`].
//! A run configuration wraps a channel with optional `mode`, `shots` and
//! `seed`; a bare channel object is accepted as a run configuration too.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channels::{self, Channel, CorrelatedDephasing, FlipRange, KakParams, KrausChannel};
use crate::error::{QptError, Result};
use crate::io::MatrixDoc;
use crate::linalg;
use crate::pauli::check_qubits;
use crate::DEFAULT_QUBIT_CAP;

/// Deepest nesting of `tensor` nodes accepted.
pub const MAX_DEPTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSpec {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    params: Map<String, Value>,
    #[serde(default)]
    children: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlipParams {
    p: f64,
    #[serde(default)]
    range: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbParams {
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DephasingParams {
    lambda: f64,
    #[serde(default = "two")]
    n: usize,
}

fn two() -> usize {
    2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KakSpec {
    theta: [f64; 3],
    #[serde(default)]
    a1: Option<MatrixDoc>,
    #[serde(default)]
    b1: Option<MatrixDoc>,
    #[serde(default)]
    a2: Option<MatrixDoc>,
    #[serde(default)]
    b2: Option<MatrixDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryParams {
    #[serde(default)]
    matrix: Option<MatrixDoc>,
    #[serde(default)]
    kak: Option<KakSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausParams {
    ops: Vec<MatrixDoc>,
}

fn params<T: DeserializeOwned>(kind: &str, map: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(map))
        .map_err(|e| QptError::Parse(format!("{kind} params: {e}")))
}

fn flip_range(range: Option<&str>) -> Result<FlipRange> {
    match range {
        None | Some("strict") => Ok(FlipRange::Strict),
        Some("full") => Ok(FlipRange::Full),
        Some(other) => Err(QptError::Parse(format!("unknown range {other:?}"))),
    }
}

fn leaf_only(spec: &ChannelSpec) -> Result<()> {
    if spec.children.is_empty() {
        Ok(())
    } else {
        Err(QptError::Parse(format!("{} takes no children", spec.kind)))
    }
}

fn build(value: &Value, depth: usize) -> Result<Channel> {
    if depth > MAX_DEPTH {
        return Err(QptError::Parse(format!(
            "channel nesting deeper than {MAX_DEPTH}"
        )));
    }
    let spec: ChannelSpec = serde_json::from_value(value.clone())
        .map_err(|e| QptError::Parse(format!("channel: {e}")))?;
    if spec.kind != "tensor" {
        leaf_only(&spec)?;
    }
    let kind = spec.kind.as_str();
    let channel: Channel = match kind {
        "phase_flip" | "bit_flip" => {
            let p: FlipParams = params(kind, spec.params)?;
            let range = flip_range(p.range.as_deref())?;
            if kind == "phase_flip" {
                channels::phase_flip_with(p.p, range)?.into()
            } else {
                channels::bit_flip_with(p.p, range)?.into()
            }
        }
        "depolarizing" => {
            channels::depolarizing(params::<ProbParams>(kind, spec.params)?.p)?.into()
        }
        "amplitude_damping" => {
            channels::amplitude_damping(params::<ProbParams>(kind, spec.params)?.p)?.into()
        }
        "correlated_dephasing" => {
            let p: DephasingParams = params(kind, spec.params)?;
            CorrelatedDephasing::new(p.n, p.lambda)?.into()
        }
        "unitary" => {
            let p: UnitaryParams = params(kind, spec.params)?;
            let u = match (p.matrix, p.kak) {
                (Some(m), None) => m.to_matrix()?,
                (None, Some(k)) => {
                    let local = |m: Option<MatrixDoc>| match m {
                        Some(m) => m.to_matrix(),
                        None => Ok(linalg::identity(2)),
                    };
                    let kp = KakParams::new(
                        k.theta,
                        local(k.a1)?,
                        local(k.b1)?,
                        local(k.a2)?,
                        local(k.b2)?,
                    )?;
                    channels::kak_compose(&kp)
                }
                _ => {
                    return Err(QptError::Parse(
                        "unitary needs exactly one of matrix or kak".into(),
                    ))
                }
            };
            channels::unitary_channel(u)?.into()
        }
        "kraus" => {
            let p: KrausParams = params(kind, spec.params)?;
            let ops = p
                .ops
                .iter()
                .map(MatrixDoc::to_matrix)
                .collect::<Result<Vec<_>>>()?;
            KrausChannel::new(ops)?.into()
        }
        "tensor" => {
            if !spec.params.is_empty() {
                return Err(QptError::Parse("tensor takes no params".into()));
            }
            if spec.children.is_empty() {
                return Err(QptError::Parse("tensor needs at least one child".into()));
            }
            let total: usize = spec.children.iter().try_fold(0usize, |acc, c| {
                Ok::<_, QptError>(acc.saturating_add(qubit_count(c, depth + 1)?))
            })?;
            check_qubits(total, DEFAULT_QUBIT_CAP)?;
            let mut parts = spec.children.iter().map(|c| build(c, depth + 1));
            let mut acc = parts.next().expect("non-empty")?;
            for part in parts {
                acc = channels::tensor(&acc, &part?)?;
            }
            acc
        }
        other => return Err(QptError::Parse(format!("unknown channel type {other:?}"))),
    };
    Ok(channel)
}

/// Qubit count a spec will produce, computed before any channel is built so
/// oversized tensor products are rejected cheaply.
fn qubit_count(value: &Value, depth: usize) -> Result<usize> {
    if depth > MAX_DEPTH {
        return Err(QptError::Parse(format!(
            "channel nesting deeper than {MAX_DEPTH}"
        )));
    }
    let obj = value
        .as_object()
        .ok_or_else(|| QptError::Parse("channel must be an object".into()))?;
    let params = obj.get("params").and_then(Value::as_object);
    let matrix_n = |m: Option<&Value>| {
        m.and_then(|m| m.get("n"))
            .and_then(Value::as_u64)
            .map(|n| n as usize)
            .ok_or_else(|| QptError::Parse("matrix needs n".into()))
    };
    match obj.get("type").and_then(Value::as_str) {
        Some("tensor") => obj
            .get("children")
            .and_then(Value::as_array)
            .ok_or_else(|| QptError::Parse("tensor needs children".into()))?
            .iter()
            .try_fold(0usize, |acc, c| {
                Ok(acc.saturating_add(qubit_count(c, depth + 1)?))
            }),
        Some("correlated_dephasing") => Ok(params
            .and_then(|p| p.get("n"))
            .and_then(Value::as_u64)
            .map_or(2, |n| n as usize)),
        Some("unitary") => match params.and_then(|p| p.get("matrix")) {
            Some(m) => matrix_n(Some(m)),
            None => Ok(2),
        },
        Some("kraus") => matrix_n(
            params
                .and_then(|p| p.get("ops"))
                .and_then(Value::as_array)
                .and_then(|ops| ops.first()),
        ),
        Some(_) => Ok(1),
        None => Err(QptError::Parse("channel needs a type".into())),
    }
}

pub fn parse_channel_value(value: &Value) -> Result<Channel> {
    build(value, 0)
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    let value: Value = serde_json::from_str(text).map_err(|e| QptError::Parse(e.to_string()))?;
    parse_channel_value(&value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Shots,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub channel: Channel,
    pub mode: Option<Mode>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    channel: Value,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    shots: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| QptError::Parse(e.to_string()))?;
    if value.get("type").is_some() {
        return Ok(RunConfig {
            channel: parse_channel_value(&value)?,
            mode: None,
            shots: None,
            seed: None,
        });
    }
    let doc: RunDoc = serde_json::from_value(value).map_err(|e| QptError::Parse(e.to_string()))?;
    if doc.shots == Some(0) {
        return Err(QptError::Parse("shots must be positive".into()));
    }
    Ok(RunConfig {
        channel: parse_channel_value(&doc.channel)?,
        mode: doc.mode,
        shots: doc.shots,
        seed: doc.seed,
    })
}
