//! Stream kinds and their linear combinations.
//!
//! Every link in a machine carries one of four kinds of linear stream.
//! Scalars, fixed-dimension vectors, and network matrices combine on the
//! level of values. Sample streams combine on the level of streams: a
//! linear combination is realized as a stochastic remix that picks one
//! source per tick with probability proportional to its coefficient-scaled
//! weight.

use crate::error::{Error, Result};
use crate::network::NetworkMatrix;
use rand::RngCore;
use std::collections::BTreeMap;

/// Payload token of the neutral (weight-zero) sample.
pub const EMPTY_TOKEN: &str = "~";

/// The kind of value a link carries each tick.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    Scalar,
    /// Fixed-dimension real vector; the dimension must be at least 1.
    Vector(usize),
    /// Weighted signed samples drawn from a named discrete space.
    Sample(String),
    /// Finite-support network matrices, the higher-order stream kind.
    Matrix,
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StreamKind::Scalar => write!(f, "scalar"),
            StreamKind::Vector(d) => write!(f, "vector<{d}>"),
            StreamKind::Sample(space) => write!(f, "sample<{space}>"),
            StreamKind::Matrix => write!(f, "matrix"),
        }
    }
}

/// Sign carried by a sample so that streams can represent signed measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Product of two signs.
    pub fn combine(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// One weighted, signed sample from a named discrete space.
///
/// A sample of weight 0 is the neutral element of its kind; its payload is
/// the designated empty token [`EMPTY_TOKEN`].
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct SampleValue {
    pub space: String,
    pub payload: String,
    pub weight: f64,
    pub sign: Sign,
}

impl SampleValue {
    pub fn new(
        space: impl Into<String>,
        payload: impl Into<String>,
        weight: f64,
        sign: Sign,
    ) -> Self {
        SampleValue {
            space: space.into(),
            payload: payload.into(),
            weight,
            sign,
        }
    }

    /// The weight-zero sample of `space`.
    pub fn neutral(space: impl Into<String>) -> Self {
        SampleValue::new(space, EMPTY_TOKEN, 0.0, Sign::Plus)
    }
}

/// A value flowing on a link, tagged with enough structure to recover its
/// [`StreamKind`].
#[derive(Debug, Clone, PartialEq)]
pub enum StreamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Sample(SampleValue),
    Matrix(NetworkMatrix),
}

impl StreamValue {
    pub fn kind(&self) -> StreamKind {
        match self {
            StreamValue::Scalar(_) => StreamKind::Scalar,
            StreamValue::Vector(v) => StreamKind::Vector(v.len()),
            StreamValue::Sample(s) => StreamKind::Sample(s.space.clone()),
            StreamValue::Matrix(_) => StreamKind::Matrix,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            StreamValue::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            StreamValue::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_sample(&self) -> Option<&SampleValue> {
        match self {
            StreamValue::Sample(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&NetworkMatrix> {
        match self {
            StreamValue::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

/// Trace rendering: scalars as decimals, vectors comma-separated, samples
/// as `payload/weight/sign`, matrices as their support size.
impl std::fmt::Display for StreamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StreamValue::Scalar(x) => write!(f, "{x}"),
            StreamValue::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            StreamValue::Sample(s) => write!(f, "{}/{}/{}", s.payload, s.weight, s.sign),
            StreamValue::Matrix(m) => write!(f, "{}", m.support_size()),
        }
    }
}

/// The additive identity of a kind: 0, the zero vector, the weight-zero
/// sample, or the empty matrix.
pub fn neutral(kind: &StreamKind) -> StreamValue {
    match kind {
        StreamKind::Scalar => StreamValue::Scalar(0.0),
        StreamKind::Vector(d) => StreamValue::Vector(vec![0.0; *d]),
        StreamKind::Sample(space) => StreamValue::Sample(SampleValue::neutral(space.clone())),
        StreamKind::Matrix => StreamValue::Matrix(NetworkMatrix::new()),
    }
}

/// Uniform draw in `[0, 1)` using 53 random bits; consumes exactly one
/// `next_u64` from the source.
pub(crate) fn draw_unit(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Σ coefficient·value over the terms; the empty sum is 0.
pub fn combine_scalar(terms: &[(f64, f64)]) -> f64 {
    terms.iter().fold(0.0, |acc, (c, v)| acc + c * v)
}

/// Component-wise Σ coefficient·value for vectors of dimension `dim`.
pub fn combine_vector(dim: usize, terms: &[(f64, &[f64])]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; dim];
    for (c, v) in terms {
        if v.len() != dim {
            return Err(Error::malformed(format!(
                "vector dimension mismatch: expected {dim}, found {}",
                v.len()
            )));
        }
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += c * x;
        }
    }
    Ok(acc)
}

/// Stochastic remix of sample streams.
///
/// With `w_i = |coefficient_i| * weight_i` and `W = Σ w_i`, selects source
/// `i` with probability `w_i / W` and emits its payload at weight `W`,
/// carrying `sign(coefficient_i) * sign_i`. Consumes exactly one draw when
/// `W > 0`; returns the neutral sample of `space` when `W = 0`.
pub fn combine_samples(
    space: &str,
    terms: &[(f64, &SampleValue)],
    rng: &mut dyn RngCore,
) -> Result<SampleValue> {
    for (_, s) in terms {
        if s.space != space {
            return Err(Error::malformed(format!(
                "mixed sample spaces: expected <{space}>, found <{}>",
                s.space
            )));
        }
        if s.weight < 0.0 {
            return Err(Error::malformed(format!(
                "negative sample weight {}",
                s.weight
            )));
        }
    }
    let weight_total: f64 = terms
        .iter()
        .fold(0.0, |acc, (c, s)| acc + c.abs() * s.weight);
    if weight_total <= 0.0 {
        return Ok(SampleValue::neutral(space));
    }
    let target = draw_unit(rng) * weight_total;
    let mut cumulative = 0.0;
    let mut chosen: Option<(f64, &SampleValue)> = None;
    for (c, s) in terms {
        let w = c.abs() * s.weight;
        if w == 0.0 {
            continue;
        }
        cumulative += w;
        chosen = Some((*c, s));
        if target < cumulative {
            break;
        }
    }
    let (coeff, source) = chosen.expect("weight_total > 0 implies a positive-weight term");
    Ok(SampleValue::new(
        space,
        source.payload.clone(),
        weight_total,
        Sign::of(coeff).combine(source.sign),
    ))
}

/// Entry-wise Σ coefficient·matrix over the union of supports; entries that
/// sum to exactly zero are dropped.
pub fn combine_matrices(terms: &[(f64, &NetworkMatrix)]) -> NetworkMatrix {
    let mut acc: BTreeMap<(crate::network::InputPortId, crate::network::OutputPortId), f64> =
        BTreeMap::new();
    for (c, m) in terms {
        for (input, output, value) in m.entries() {
            *acc.entry((input.clone(), output.clone())).or_insert(0.0) += c * value;
        }
    }
    acc.retain(|_, v| *v != 0.0);
    NetworkMatrix::from_entries(acc)
}

/// Kind-dispatched linear combination. Only the sample branch consumes
/// randomness. Every term must already carry `kind`.
pub fn combine(
    kind: &StreamKind,
    terms: &[(f64, &StreamValue)],
    rng: &mut dyn RngCore,
) -> Result<StreamValue> {
    for (_, v) in terms {
        let found = v.kind();
        if found != *kind {
            return Err(Error::malformed(format!(
                "kind mismatch in combination: expected {kind}, found {found}"
            )));
        }
    }
    match kind {
        StreamKind::Scalar => {
            let terms: Vec<(f64, f64)> = terms
                .iter()
                .map(|(c, v)| (*c, v.as_scalar().unwrap()))
                .collect();
            Ok(StreamValue::Scalar(combine_scalar(&terms)))
        }
        StreamKind::Vector(d) => {
            let terms: Vec<(f64, &[f64])> = terms
                .iter()
                .map(|(c, v)| (*c, v.as_vector().unwrap()))
                .collect();
            Ok(StreamValue::Vector(combine_vector(*d, &terms)?))
        }
        StreamKind::Sample(space) => {
            let terms: Vec<(f64, &SampleValue)> = terms
                .iter()
                .map(|(c, v)| (*c, v.as_sample().unwrap()))
                .collect();
            Ok(StreamValue::Sample(combine_samples(space, &terms, rng)?))
        }
        StreamKind::Matrix => {
            let terms: Vec<(f64, &NetworkMatrix)> = terms
                .iter()
                .map(|(c, v)| (*c, v.as_matrix().unwrap()))
                .collect();
            Ok(StreamValue::Matrix(combine_matrices(&terms)))
        }
    }
}
