//! Parsing and canonical rendering of value literals.
//!
//! Shared between the network language (init lines) and transform
//! parameters. Everything here works on bare strings and reports plain
//! messages; callers attach source positions.

use crate::network::{InputPortId, NetworkMatrix, OutputPortId};
use crate::stream::{SampleValue, Sign, StreamKind, StreamValue, EMPTY_TOKEN};
use std::collections::BTreeMap;

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_token(s: &str) -> bool {
    s == EMPTY_TOKEN || is_identifier(s)
}

pub(crate) fn parse_f64(s: &str) -> Result<f64, String> {
    let value: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("expected a number, found `{s}`"))?;
    if !value.is_finite() {
        return Err(format!("number `{s}` is not finite"));
    }
    Ok(value)
}

pub(crate) fn parse_u32(s: &str) -> Result<u32, String> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("expected a non-negative integer, found `{s}`"));
    }
    s.parse()
        .map_err(|_| format!("integer `{s}` is out of range"))
}

/// `name.copy`
pub(crate) fn parse_output_port(s: &str) -> Result<OutputPortId, String> {
    let parts: Vec<&str> = s.split('.').collect();
    if parts.len() != 2 {
        return Err(format!("expected output port `type.copy`, found `{s}`"));
    }
    if !is_identifier(parts[0]) {
        return Err(format!("invalid type name `{}`", parts[0]));
    }
    Ok(OutputPortId::new(parts[0], parse_u32(parts[1])?))
}

/// `name.copy.slot`
pub(crate) fn parse_input_port(s: &str) -> Result<InputPortId, String> {
    let parts: Vec<&str> = s.split('.').collect();
    if parts.len() != 3 {
        return Err(format!("expected input port `type.copy.slot`, found `{s}`"));
    }
    if !is_identifier(parts[0]) {
        return Err(format!("invalid type name `{}`", parts[0]));
    }
    Ok(InputPortId::new(
        parts[0],
        parse_u32(parts[1])?,
        parse_u32(parts[2])?,
    ))
}

/// `scalar` | `vector<d>` | `sample<space>` | `matrix`
pub(crate) fn parse_kind(s: &str) -> Result<StreamKind, String> {
    match s {
        "scalar" => return Ok(StreamKind::Scalar),
        "matrix" => return Ok(StreamKind::Matrix),
        _ => {}
    }
    if let Some(body) = s.strip_prefix("vector<").and_then(|r| r.strip_suffix('>')) {
        let d = parse_u32(body).map_err(|e| format!("bad vector dimension: {e}"))? as usize;
        if d == 0 {
            return Err("vector dimension must be at least 1".to_string());
        }
        return Ok(StreamKind::Vector(d));
    }
    if let Some(body) = s.strip_prefix("sample<").and_then(|r| r.strip_suffix('>')) {
        if !is_identifier(body) {
            return Err(format!("invalid sample space name `{body}`"));
        }
        return Ok(StreamKind::Sample(body.to_string()));
    }
    Err(format!("unknown stream kind `{s}`"))
}

/// `[a,b,c]`
fn parse_vector_literal(s: &str) -> Result<Vec<f64>, String> {
    let body = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected vector literal `[..]`, found `{s}`"))?;
    if body.trim().is_empty() {
        return Err("vector literal must have at least one component".to_string());
    }
    body.split(',').map(parse_f64).collect()
}

/// `token/weight/sign`, e.g. `a/1/+`; the empty token is spelled `~`.
fn parse_sample_literal(space: &str, s: &str) -> Result<SampleValue, String> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected sample literal `token/weight/sign`, found `{s}`"
        ));
    }
    let payload = parts[0].trim();
    if !is_token(payload) {
        return Err(format!("invalid sample token `{payload}`"));
    }
    let weight = parse_f64(parts[1])?;
    if weight < 0.0 {
        return Err(format!(
            "sample weight must be non-negative, found {weight}"
        ));
    }
    let sign = match parts[2].trim() {
        "+" => Sign::Plus,
        "-" => Sign::Minus,
        other => return Err(format!("expected sign `+` or `-`, found `{other}`")),
    };
    Ok(SampleValue::new(space, payload, weight, sign))
}

/// `{in<-out:coeff;...}`; entries are checked structurally only, so the
/// ports need not exist in any signature. Duplicate entries are rejected.
pub(crate) fn parse_matrix_literal(s: &str) -> Result<NetworkMatrix, String> {
    let body = s
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| format!("expected matrix literal `{{..}}`, found `{s}`"))?;
    let mut matrix = NetworkMatrix::new();
    if body.trim().is_empty() {
        return Ok(matrix);
    }
    for entry in body.split(';') {
        let (ports, coeff) = entry
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `input<-output:coeff`, found `{entry}`"))?;
        let (input, output) = ports
            .split_once("<-")
            .ok_or_else(|| format!("expected `input<-output:coeff`, found `{entry}`"))?;
        let input = parse_input_port(input.trim())?;
        let output = parse_output_port(output.trim())?;
        let coefficient = parse_f64(coeff)?;
        if matrix.contains(&input, &output) {
            return Err(format!("duplicate matrix entry {input} <- {output}"));
        }
        matrix.insert_entry(input, output, coefficient);
    }
    Ok(matrix)
}

/// `tok:w,tok:w,...` with non-negative finite weights.
pub(crate) fn parse_token_weights(s: &str) -> Result<BTreeMap<String, f64>, String> {
    let mut weights = BTreeMap::new();
    for item in s.split(',') {
        let (token, weight) = item
            .split_once(':')
            .ok_or_else(|| format!("expected `token:weight`, found `{item}`"))?;
        let token = token.trim();
        if !is_token(token) {
            return Err(format!("invalid token `{token}`"));
        }
        let weight = parse_f64(weight)?;
        if weight < 0.0 {
            return Err(format!("token weight must be non-negative, found {weight}"));
        }
        if weights.insert(token.to_string(), weight).is_some() {
            return Err(format!("duplicate token `{token}`"));
        }
    }
    Ok(weights)
}

/// `tok->tok,...`
pub(crate) fn parse_token_map(s: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for item in s.split(',') {
        let (from, to) = item
            .split_once("->")
            .ok_or_else(|| format!("expected `token->token`, found `{item}`"))?;
        let (from, to) = (from.trim(), to.trim());
        if !is_token(from) {
            return Err(format!("invalid token `{from}`"));
        }
        if !is_token(to) {
            return Err(format!("invalid token `{to}`"));
        }
        if map.insert(from.to_string(), to.to_string()).is_some() {
            return Err(format!("duplicate token `{from}`"));
        }
    }
    Ok(map)
}

/// Parses an init value literal against the kind the port declares.
pub(crate) fn parse_value_literal(kind: &StreamKind, s: &str) -> Result<StreamValue, String> {
    let s = s.trim();
    match kind {
        StreamKind::Scalar => Ok(StreamValue::Scalar(parse_f64(s)?)),
        StreamKind::Vector(d) => {
            let v = parse_vector_literal(s)?;
            if v.len() != *d {
                return Err(format!(
                    "vector literal has {} components, expected {d}",
                    v.len()
                ));
            }
            Ok(StreamValue::Vector(v))
        }
        StreamKind::Sample(space) => Ok(StreamValue::Sample(parse_sample_literal(space, s)?)),
        StreamKind::Matrix => Ok(StreamValue::Matrix(parse_matrix_literal(s)?)),
    }
}

pub(crate) fn render_value_literal(value: &StreamValue) -> String {
    match value {
        StreamValue::Scalar(x) => x.to_string(),
        StreamValue::Vector(v) => {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", parts.join(","))
        }
        StreamValue::Sample(s) => format!("{}/{}/{}", s.payload, s.weight, s.sign),
        StreamValue::Matrix(m) => render_matrix_literal(m),
    }
}

pub(crate) fn render_matrix_literal(matrix: &NetworkMatrix) -> String {
    let entries: Vec<String> = matrix
        .entries()
        .map(|(input, output, coeff)| format!("{input}<-{output}:{coeff}"))
        .collect();
    format!("{{{}}}", entries.join(";"))
}

pub(crate) fn render_token_weights(weights: &BTreeMap<String, f64>) -> String {
    weights
        .iter()
        .map(|(t, w)| format!("{t}:{w}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn render_token_map(map: &BTreeMap<String, String>) -> String {
    map.iter()
        .map(|(a, b)| format!("{a}->{b}"))
        .collect::<Vec<_>>()
        .join(",")
}
