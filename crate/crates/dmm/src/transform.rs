//! Built-in neuron transforms and the name-keyed registry.
//!
//! A transform is the nonlinear half of a neuron: the pure function applied
//! to the neuron's combined inputs each tick. The registry maps names to
//! builders so that one name (say `identity_vector`) can serve every
//! dimension or sample space a type declares; custom transforms may be
//! registered under new names before parsing.

use crate::error::{Error, Result};
use crate::literal;
use crate::network::NetworkMatrix;
use crate::stream::{self, SampleValue, Sign, StreamKind, StreamValue};
use rand::RngCore;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A constant baked into a transform at construction time.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    TokenWeights(BTreeMap<String, f64>),
    TokenMap(BTreeMap<String, String>),
    Matrix(NetworkMatrix),
    /// Verbatim parameter text of a custom transform.
    Raw(String),
}

pub type Params = BTreeMap<String, ParamValue>;

type ApplyFn = Arc<dyn Fn(&[&StreamValue], &mut dyn RngCore) -> Result<StreamValue> + Send + Sync>;

/// A named, kind-checked transform instance.
#[derive(Clone)]
pub struct Transform {
    name: String,
    input_kinds: Vec<StreamKind>,
    output_kind: StreamKind,
    is_stochastic: bool,
    params: Params,
    apply: ApplyFn,
}

impl Transform {
    pub fn new(
        name: impl Into<String>,
        input_kinds: Vec<StreamKind>,
        output_kind: StreamKind,
        is_stochastic: bool,
        params: Params,
        apply: ApplyFn,
    ) -> Self {
        Transform {
            name: name.into(),
            input_kinds,
            output_kind,
            is_stochastic,
            params,
            apply,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_kinds(&self) -> &[StreamKind] {
        &self.input_kinds
    }

    pub fn output_kind(&self) -> &StreamKind {
        &self.output_kind
    }

    pub fn arity(&self) -> usize {
        self.input_kinds.len()
    }

    pub fn is_stochastic(&self) -> bool {
        self.is_stochastic
    }

    pub fn params(&self) -> &Params {
        &self.params
    }
}

impl PartialEq for Transform {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.input_kinds == other.input_kinds
            && self.output_kind == other.output_kind
            && self.is_stochastic == other.is_stochastic
            && self.params == other.params
    }
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("name", &self.name)
            .field("input_kinds", &self.input_kinds)
            .field("output_kind", &self.output_kind)
            .field("is_stochastic", &self.is_stochastic)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// Applies `t` to `inputs`, checking arity and kinds first. Deterministic
/// transforms never touch `rng`.
pub fn apply_transform(
    t: &Transform,
    inputs: &[&StreamValue],
    rng: &mut dyn RngCore,
) -> Result<StreamValue> {
    if inputs.len() != t.arity() {
        return Err(Error::malformed(format!(
            "transform {} expects {} inputs, got {}",
            t.name(),
            t.arity(),
            inputs.len()
        )));
    }
    for (value, kind) in inputs.iter().zip(t.input_kinds()) {
        let found = value.kind();
        if found != *kind {
            return Err(Error::malformed(format!(
                "transform {} expects {kind} input, got {found}",
                t.name()
            )));
        }
    }
    (t.apply)(inputs, rng)
}

fn scalar_unary(name: &str, f: fn(f64) -> f64) -> Transform {
    Transform::new(
        name,
        vec![StreamKind::Scalar],
        StreamKind::Scalar,
        false,
        Params::new(),
        Arc::new(move |inputs, _| Ok(StreamValue::Scalar(f(inputs[0].as_scalar().unwrap())))),
    )
}

/// Arity-0 source emitting a constant scalar.
pub fn const_scalar(value: f64) -> Transform {
    let mut params = Params::new();
    params.insert("value".to_string(), ParamValue::Scalar(value));
    Transform::new(
        "const_scalar",
        vec![],
        StreamKind::Scalar,
        false,
        params,
        Arc::new(move |_, _| Ok(StreamValue::Scalar(value))),
    )
}

pub fn identity_scalar() -> Transform {
    scalar_unary("identity_scalar", |x| x)
}

pub fn tanh_scalar() -> Transform {
    scalar_unary("tanh_scalar", f64::tanh)
}

pub fn sigmoid_scalar() -> Transform {
    scalar_unary("sigmoid_scalar", |x| 1.0 / (1.0 + (-x).exp()))
}

pub fn multiply_scalars() -> Transform {
    Transform::new(
        "multiply_scalars",
        vec![StreamKind::Scalar, StreamKind::Scalar],
        StreamKind::Scalar,
        false,
        Params::new(),
        Arc::new(|inputs, _| {
            Ok(StreamValue::Scalar(
                inputs[0].as_scalar().unwrap() * inputs[1].as_scalar().unwrap(),
            ))
        }),
    )
}

pub fn identity_vector(dimension: usize) -> Transform {
    Transform::new(
        "identity_vector",
        vec![StreamKind::Vector(dimension)],
        StreamKind::Vector(dimension),
        false,
        Params::new(),
        Arc::new(|inputs, _| Ok(inputs[0].clone())),
    )
}

/// Stochastic arity-0 source emitting weight-1 samples with payloads drawn
/// from the given distribution. Weights must be non-negative with a
/// positive sum; they are normalized internally.
pub fn sample_source(
    space: impl Into<String>,
    weights: BTreeMap<String, f64>,
) -> Result<Transform> {
    let space = space.into();
    let total: f64 = weights.values().sum();
    if weights.is_empty() || total <= 0.0 || weights.values().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::malformed(format!(
            "sample_source over <{space}> needs non-negative weights with a positive sum"
        )));
    }
    let mut params = Params::new();
    params.insert(
        "dist".to_string(),
        ParamValue::TokenWeights(weights.clone()),
    );
    let tokens: Vec<(String, f64)> = weights.into_iter().map(|(t, w)| (t, w / total)).collect();
    let out_space = space.clone();
    Ok(Transform::new(
        "sample_source",
        vec![],
        StreamKind::Sample(space),
        true,
        params,
        Arc::new(move |_, rng| {
            let target = stream::draw_unit(rng);
            let mut cumulative = 0.0;
            let mut payload = tokens[0].0.as_str();
            for (token, p) in &tokens {
                if *p == 0.0 {
                    continue;
                }
                cumulative += p;
                payload = token;
                if target < cumulative {
                    break;
                }
            }
            Ok(StreamValue::Sample(SampleValue::new(
                out_space.clone(),
                payload,
                1.0,
                Sign::Plus,
            )))
        }),
    ))
}

pub fn sample_identity(space: impl Into<String>) -> Transform {
    let space = space.into();
    Transform::new(
        "sample_identity",
        vec![StreamKind::Sample(space.clone())],
        StreamKind::Sample(space),
        false,
        Params::new(),
        Arc::new(|inputs, _| Ok(inputs[0].clone())),
    )
}

/// Relabels payload tokens through a partial map; unmapped tokens pass
/// through unchanged. Weight and sign are preserved.
pub fn sample_map(space: impl Into<String>, map: BTreeMap<String, String>) -> Transform {
    let space = space.into();
    let mut params = Params::new();
    params.insert("map".to_string(), ParamValue::TokenMap(map.clone()));
    Transform::new(
        "sample_map",
        vec![StreamKind::Sample(space.clone())],
        StreamKind::Sample(space),
        false,
        params,
        Arc::new(move |inputs, _| {
            let sample = inputs[0].as_sample().unwrap();
            let payload = map
                .get(&sample.payload)
                .cloned()
                .unwrap_or_else(|| sample.payload.clone());
            Ok(StreamValue::Sample(SampleValue::new(
                sample.space.clone(),
                payload,
                sample.weight,
                sample.sign,
            )))
        }),
    )
}

pub fn identity_matrix_stream() -> Transform {
    Transform::new(
        "identity_matrix_stream",
        vec![StreamKind::Matrix],
        StreamKind::Matrix,
        false,
        Params::new(),
        Arc::new(|inputs, _| Ok(inputs[0].clone())),
    )
}

/// Arity-0 source emitting a constant matrix every tick.
pub fn const_matrix(matrix: NetworkMatrix) -> Transform {
    let mut params = Params::new();
    params.insert("matrix".to_string(), ParamValue::Matrix(matrix.clone()));
    Transform::new(
        "const_matrix",
        vec![],
        StreamKind::Matrix,
        false,
        params,
        Arc::new(move |_, _| Ok(StreamValue::Matrix(matrix.clone()))),
    )
}

/// Everything a builder gets to see about the type being declared.
pub struct BuildRequest<'a> {
    pub type_name: &'a str,
    pub input_kinds: &'a [StreamKind],
    pub output_kind: &'a StreamKind,
    /// Raw text between the parentheses of the transform clause, if any.
    pub params: Option<&'a str>,
}

pub type BuildFn =
    Arc<dyn Fn(&BuildRequest) -> std::result::Result<Transform, String> + Send + Sync>;

/// Name-keyed registry of transform builders.
pub struct TransformRegistry {
    builders: BTreeMap<String, BuildFn>,
}

impl TransformRegistry {
    pub fn empty() -> Self {
        TransformRegistry {
            builders: BTreeMap::new(),
        }
    }

    /// The built-in transform library.
    pub fn builtin() -> Self {
        let mut registry = TransformRegistry::empty();
        registry.register("const_scalar", Arc::new(build_const_scalar));
        registry.register("identity_scalar", Arc::new(build_identity_scalar));
        registry.register("tanh_scalar", Arc::new(build_tanh_scalar));
        registry.register("sigmoid_scalar", Arc::new(build_sigmoid_scalar));
        registry.register("multiply_scalars", Arc::new(build_multiply_scalars));
        registry.register("identity_vector", Arc::new(build_identity_vector));
        registry.register("sample_source", Arc::new(build_sample_source));
        registry.register("sample_identity", Arc::new(build_sample_identity));
        registry.register("sample_map", Arc::new(build_sample_map));
        registry.register(
            "identity_matrix_stream",
            Arc::new(build_identity_matrix_stream),
        );
        registry.register("const_matrix", Arc::new(build_const_matrix));
        registry
    }

    /// Registers (or replaces) a builder under `name`.
    pub fn register(&mut self, name: impl Into<String>, builder: BuildFn) {
        self.builders.insert(name.into(), builder);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.builders.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(|s| s.as_str())
    }

    /// Instantiates `name` against the declared kinds and parameter text.
    pub fn build(
        &self,
        name: &str,
        request: &BuildRequest,
    ) -> std::result::Result<Transform, String> {
        let builder = self
            .builders
            .get(name)
            .ok_or_else(|| format!("unknown transform `{name}`"))?;
        let transform = builder(request)?;
        if transform.input_kinds() != request.input_kinds
            || transform.output_kind() != request.output_kind
        {
            return Err(format!(
                "transform `{name}` built kinds ({} -> {}) that differ from the declaration",
                kinds_list(transform.input_kinds()),
                transform.output_kind()
            ));
        }
        Ok(transform)
    }
}

impl Default for TransformRegistry {
    fn default() -> Self {
        TransformRegistry::builtin()
    }
}

fn kinds_list(kinds: &[StreamKind]) -> String {
    if kinds.is_empty() {
        "()".to_string()
    } else {
        kinds
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn expect_kinds(
    request: &BuildRequest,
    inputs: &[StreamKind],
    output: &StreamKind,
) -> std::result::Result<(), String> {
    if request.input_kinds != inputs || request.output_kind != output {
        return Err(format!(
            "type {} declares ({} -> {}), transform requires ({} -> {})",
            request.type_name,
            kinds_list(request.input_kinds),
            request.output_kind,
            kinds_list(inputs),
            output
        ));
    }
    Ok(())
}

fn no_params(request: &BuildRequest, name: &str) -> std::result::Result<(), String> {
    match request.params {
        None => Ok(()),
        Some(_) => Err(format!("transform `{name}` takes no parameters")),
    }
}

fn required_params<'a>(
    request: &'a BuildRequest,
    name: &str,
) -> std::result::Result<&'a str, String> {
    request
        .params
        .ok_or_else(|| format!("transform `{name}` requires parameters"))
}

fn build_const_scalar(request: &BuildRequest) -> std::result::Result<Transform, String> {
    expect_kinds(request, &[], &StreamKind::Scalar)?;
    let value = literal::parse_f64(required_params(request, "const_scalar")?)?;
    Ok(const_scalar(value))
}

fn build_identity_scalar(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "identity_scalar")?;
    expect_kinds(request, &[StreamKind::Scalar], &StreamKind::Scalar)?;
    Ok(identity_scalar())
}

fn build_tanh_scalar(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "tanh_scalar")?;
    expect_kinds(request, &[StreamKind::Scalar], &StreamKind::Scalar)?;
    Ok(tanh_scalar())
}

fn build_sigmoid_scalar(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "sigmoid_scalar")?;
    expect_kinds(request, &[StreamKind::Scalar], &StreamKind::Scalar)?;
    Ok(sigmoid_scalar())
}

fn build_multiply_scalars(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "multiply_scalars")?;
    expect_kinds(
        request,
        &[StreamKind::Scalar, StreamKind::Scalar],
        &StreamKind::Scalar,
    )?;
    Ok(multiply_scalars())
}

fn build_identity_vector(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "identity_vector")?;
    match (request.input_kinds, request.output_kind) {
        ([StreamKind::Vector(d)], StreamKind::Vector(e)) if d == e => Ok(identity_vector(*d)),
        _ => Err(format!(
            "type {} must declare (vector<d> -> vector<d>) for identity_vector",
            request.type_name
        )),
    }
}

fn sample_space<'a>(request: &'a BuildRequest, name: &str) -> std::result::Result<&'a str, String> {
    match (request.input_kinds, request.output_kind) {
        ([StreamKind::Sample(a)], StreamKind::Sample(b)) if a == b => Ok(a),
        _ => Err(format!(
            "type {} must declare (sample<s> -> sample<s>) for {name}",
            request.type_name
        )),
    }
}

fn build_sample_source(request: &BuildRequest) -> std::result::Result<Transform, String> {
    let space = match (request.input_kinds, request.output_kind) {
        ([], StreamKind::Sample(s)) => s,
        _ => {
            return Err(format!(
                "type {} must declare arity 0 with a sample output for sample_source",
                request.type_name
            ))
        }
    };
    let weights = literal::parse_token_weights(required_params(request, "sample_source")?)?;
    sample_source(space.clone(), weights).map_err(|e| e.to_string())
}

fn build_sample_identity(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "sample_identity")?;
    let space = sample_space(request, "sample_identity")?;
    Ok(sample_identity(space.to_string()))
}

fn build_sample_map(request: &BuildRequest) -> std::result::Result<Transform, String> {
    let space = sample_space(request, "sample_map")?.to_string();
    let map = literal::parse_token_map(required_params(request, "sample_map")?)?;
    Ok(sample_map(space, map))
}

fn build_identity_matrix_stream(request: &BuildRequest) -> std::result::Result<Transform, String> {
    no_params(request, "identity_matrix_stream")?;
    expect_kinds(request, &[StreamKind::Matrix], &StreamKind::Matrix)?;
    Ok(identity_matrix_stream())
}

fn build_const_matrix(request: &BuildRequest) -> std::result::Result<Transform, String> {
    expect_kinds(request, &[], &StreamKind::Matrix)?;
    let matrix = literal::parse_matrix_literal(required_params(request, "const_matrix")?.trim())?;
    Ok(const_matrix(matrix))
}
