//! Signatures, port addressing, and the finite-support network matrix.
//!
//! A machine's program is a sparse real matrix indexed by a countable space
//! of typed ports: every copy of every neuron type contributes one output
//! port `X_j` and one input port `Y_i` per slot. Only finitely many
//! coefficients are nonzero, and only ports appearing in that support (or in
//! explicitly given initial outputs) are ever materialized.

use crate::error::{Error, Result};
use crate::stream::StreamKind;
use crate::transform::Transform;
use std::collections::{BTreeMap, BTreeSet};

/// One neuron copy: a type name plus a copy ordinal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeuronId {
    pub type_name: String,
    pub copy: u32,
}

impl NeuronId {
    pub fn new(type_name: impl Into<String>, copy: u32) -> Self {
        NeuronId {
            type_name: type_name.into(),
            copy,
        }
    }

    pub fn output(&self) -> OutputPortId {
        OutputPortId {
            type_name: self.type_name.clone(),
            copy: self.copy,
        }
    }

    pub fn input(&self, slot: u32) -> InputPortId {
        InputPortId {
            type_name: self.type_name.clone(),
            copy: self.copy,
            slot,
        }
    }
}

impl std::fmt::Display for NeuronId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.type_name, self.copy)
    }
}

/// The output port `X_j` of one neuron copy. Field order gives the
/// canonical ordering: type name, then copy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutputPortId {
    pub type_name: String,
    pub copy: u32,
}

impl OutputPortId {
    pub fn new(type_name: impl Into<String>, copy: u32) -> Self {
        OutputPortId {
            type_name: type_name.into(),
            copy,
        }
    }

    pub fn neuron(&self) -> NeuronId {
        NeuronId::new(self.type_name.clone(), self.copy)
    }
}

impl std::fmt::Display for OutputPortId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.type_name, self.copy)
    }
}

/// The input port `Y_i` for one slot of one neuron copy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputPortId {
    pub type_name: String,
    pub copy: u32,
    pub slot: u32,
}

impl InputPortId {
    pub fn new(type_name: impl Into<String>, copy: u32, slot: u32) -> Self {
        InputPortId {
            type_name: type_name.into(),
            copy,
            slot,
        }
    }

    pub fn neuron(&self) -> NeuronId {
        NeuronId::new(self.type_name.clone(), self.copy)
    }
}

impl std::fmt::Display for InputPortId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}.{}", self.type_name, self.copy, self.slot)
    }
}

/// A neuron species: per-slot input kinds, an output kind, and the
/// transform applied each tick. Zero arity marks a source.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronType {
    name: String,
    input_kinds: Vec<StreamKind>,
    output_kind: StreamKind,
    transform: Transform,
}

impl NeuronType {
    /// Builds a type, checking that kinds are well-formed and that the
    /// transform's declared kinds match the type's.
    pub fn new(
        name: impl Into<String>,
        input_kinds: Vec<StreamKind>,
        output_kind: StreamKind,
        transform: Transform,
    ) -> Result<Self> {
        let name = name.into();
        for kind in input_kinds.iter().chain(std::iter::once(&output_kind)) {
            if let StreamKind::Vector(0) = kind {
                return Err(Error::malformed(format!(
                    "type {name}: vector dimension must be at least 1"
                )));
            }
        }
        if transform.input_kinds() != input_kinds.as_slice()
            || *transform.output_kind() != output_kind
        {
            return Err(Error::malformed(format!(
                "type {name}: transform {} declares different kinds than the type",
                transform.name()
            )));
        }
        Ok(NeuronType {
            name,
            input_kinds,
            output_kind,
            transform,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.input_kinds.len()
    }

    pub fn input_kinds(&self) -> &[StreamKind] {
        &self.input_kinds
    }

    pub fn output_kind(&self) -> &StreamKind {
        &self.output_kind
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }
}

/// A finite set of neuron types with distinct names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Signature {
    types: BTreeMap<String, NeuronType>,
}

impl Signature {
    pub fn new(types: Vec<NeuronType>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in types {
            let name = t.name().to_string();
            if map.insert(name.clone(), t).is_some() {
                return Err(Error::malformed(format!("duplicate neuron type {name}")));
            }
        }
        Ok(Signature { types: map })
    }

    pub fn get(&self, type_name: &str) -> Option<&NeuronType> {
        self.types.get(type_name)
    }

    pub fn types(&self) -> impl Iterator<Item = &NeuronType> {
        self.types.values()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Stream kind of an input port under this signature, if the port is
    /// well-formed.
    pub fn input_kind(&self, port: &InputPortId) -> Option<&StreamKind> {
        self.get(&port.type_name)
            .and_then(|t| t.input_kinds().get(port.slot as usize))
    }

    /// Stream kind of an output port under this signature, if the type
    /// exists.
    pub fn output_kind(&self, port: &OutputPortId) -> Option<&StreamKind> {
        self.get(&port.type_name).map(|t| t.output_kind())
    }
}

/// A single typing violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownType {
        port: String,
        type_name: String,
    },
    SlotOutOfRange {
        input: InputPortId,
        arity: usize,
    },
    KindMismatch {
        input: InputPortId,
        input_kind: StreamKind,
        output: OutputPortId,
        output_kind: StreamKind,
    },
    InitKindMismatch {
        port: OutputPortId,
        expected: StreamKind,
        found: StreamKind,
    },
    UpdaterNotMatrix {
        port: OutputPortId,
        kind: StreamKind,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnknownType { port, type_name } => {
                write!(f, "port {port} references unknown type {type_name}")
            }
            Violation::SlotOutOfRange { input, arity } => {
                write!(f, "input port {input} is out of range for arity {arity}")
            }
            Violation::KindMismatch {
                input,
                input_kind,
                output,
                output_kind,
            } => write!(
                f,
                "output port {output} ({output_kind}) cannot feed input port {input} ({input_kind})"
            ),
            Violation::InitKindMismatch {
                port,
                expected,
                found,
            } => write!(
                f,
                "initial value for {port} has kind {found}, expected {expected}"
            ),
            Violation::UpdaterNotMatrix { port, kind } => {
                write!(f, "updater port {port} has kind {kind}, expected matrix")
            }
        }
    }
}

/// Finite-support map from (input port, output port) to a nonzero real
/// coefficient. Setting a coefficient to zero deletes the entry, so a zero
/// is never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkMatrix {
    entries: BTreeMap<(InputPortId, OutputPortId), f64>,
}

impl NetworkMatrix {
    pub fn new() -> Self {
        NetworkMatrix::default()
    }

    pub(crate) fn from_entries(entries: BTreeMap<(InputPortId, OutputPortId), f64>) -> Self {
        debug_assert!(entries.values().all(|v| *v != 0.0));
        NetworkMatrix { entries }
    }

    /// Sets a coefficient after checking both ports against the signature.
    /// Returns a new matrix; a coefficient of zero removes the entry.
    pub fn set_weight(
        &self,
        signature: &Signature,
        input: &InputPortId,
        output: &OutputPortId,
        coefficient: f64,
    ) -> Result<NetworkMatrix> {
        if !coefficient.is_finite() {
            return Err(Error::malformed(format!(
                "coefficient for {input} <- {output} is not finite"
            )));
        }
        let mut probe = self.clone();
        probe.insert_entry(input.clone(), output.clone(), coefficient);
        let violations = check_entry(signature, input, output);
        if violations.is_empty() {
            Ok(probe)
        } else {
            Err(Error::Invalid(violations))
        }
    }

    /// Structural insert that maintains only the no-zero invariant; kind
    /// checking is the caller's job (see [`validate`]).
    pub fn insert_entry(&mut self, input: InputPortId, output: OutputPortId, coefficient: f64) {
        if coefficient == 0.0 {
            self.entries.remove(&(input, output));
        } else {
            self.entries.insert((input, output), coefficient);
        }
    }

    /// The stored coefficient, or 0 if the entry is absent.
    pub fn coefficient(&self, input: &InputPortId, output: &OutputPortId) -> f64 {
        *self
            .entries
            .get(&(input.clone(), output.clone()))
            .unwrap_or(&0.0)
    }

    pub fn contains(&self, input: &InputPortId, output: &OutputPortId) -> bool {
        self.entries.contains_key(&(input.clone(), output.clone()))
    }

    /// Entries in canonical order: by input port, then output port.
    pub fn entries(&self) -> impl Iterator<Item = (&InputPortId, &OutputPortId, f64)> {
        self.entries.iter().map(|((i, o), v)| (i, o, *v))
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every neuron copy appearing in the support, on either side of an
    /// entry. Always finite.
    pub fn active_neurons(&self) -> BTreeSet<NeuronId> {
        let mut active = BTreeSet::new();
        for (input, output) in self.entries.keys() {
            active.insert(input.neuron());
            active.insert(output.neuron());
        }
        active
    }
}

fn check_entry(
    signature: &Signature,
    input: &InputPortId,
    output: &OutputPortId,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let input_kind = match signature.get(&input.type_name) {
        None => {
            violations.push(Violation::UnknownType {
                port: input.to_string(),
                type_name: input.type_name.clone(),
            });
            None
        }
        Some(t) => match t.input_kinds().get(input.slot as usize) {
            None => {
                violations.push(Violation::SlotOutOfRange {
                    input: input.clone(),
                    arity: t.arity(),
                });
                None
            }
            Some(kind) => Some(kind),
        },
    };
    let output_kind = match signature.get(&output.type_name) {
        None => {
            violations.push(Violation::UnknownType {
                port: output.to_string(),
                type_name: output.type_name.clone(),
            });
            None
        }
        Some(t) => Some(t.output_kind()),
    };
    if let (Some(ik), Some(ok)) = (input_kind, output_kind) {
        if ik != ok {
            violations.push(Violation::KindMismatch {
                input: input.clone(),
                input_kind: ik.clone(),
                output: output.clone(),
                output_kind: ok.clone(),
            });
        }
    }
    violations
}

/// Reports every typing violation of `matrix` under `signature`; an empty
/// list means the matrix is well-kinded and safe to execute.
pub fn validate(signature: &Signature, matrix: &NetworkMatrix) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (input, output, _) in matrix.entries() {
        violations.extend(check_entry(signature, input, output));
    }
    violations
}
