//! Tick-by-tick execution of a machine.
//!
//! Each tick has two phases. The linear phase computes every used input
//! port as a kind-correct linear combination of the previous tick's
//! outputs. The transform phase then applies each active neuron's
//! transform to its freshly combined inputs, all from the same pre-tick
//! snapshot, so there is no within-tick cascading. If an updater port is
//! designated, its matrix-valued output replaces the whole network matrix
//! at the end of the tick.

use crate::error::{Error, Result};
use crate::network::{validate, InputPortId, NetworkMatrix, OutputPortId, Signature, Violation};
use crate::stream::{self, StreamValue};
use crate::transform::apply_transform;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// One executed tick: the watched output values and the size of the
/// matrix support after any self-update.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub values: Vec<(OutputPortId, StreamValue)>,
    pub support_size: usize,
}

/// One record per executed tick, in order.
pub type Trace = Vec<TickRecord>;

/// A running machine: the program matrix plus the stream state it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    signature: Signature,
    matrix: NetworkMatrix,
    outputs: BTreeMap<OutputPortId, StreamValue>,
    tick: u64,
    rng: ChaCha8Rng,
    updater: Option<OutputPortId>,
}

impl MachineState {
    /// Builds a machine at tick 0. The matrix must validate cleanly;
    /// initial outputs must match their ports' declared kinds; every
    /// active output not given starts at its kind's neutral value.
    pub fn init(
        signature: Signature,
        matrix: NetworkMatrix,
        initial_outputs: BTreeMap<OutputPortId, StreamValue>,
        updater: Option<OutputPortId>,
        seed: u64,
    ) -> Result<Self> {
        let mut violations = validate(&signature, &matrix);
        for (port, value) in &initial_outputs {
            match signature.output_kind(port) {
                None => violations.push(Violation::UnknownType {
                    port: port.to_string(),
                    type_name: port.type_name.clone(),
                }),
                Some(expected) => {
                    let found = value.kind();
                    if found != *expected {
                        violations.push(Violation::InitKindMismatch {
                            port: port.clone(),
                            expected: expected.clone(),
                            found,
                        });
                    }
                }
            }
        }
        if let Some(port) = &updater {
            match signature.output_kind(port) {
                None => violations.push(Violation::UnknownType {
                    port: port.to_string(),
                    type_name: port.type_name.clone(),
                }),
                Some(kind) if *kind != crate::stream::StreamKind::Matrix => {
                    violations.push(Violation::UpdaterNotMatrix {
                        port: port.clone(),
                        kind: kind.clone(),
                    });
                }
                Some(_) => {}
            }
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }

        let mut outputs = initial_outputs;
        extend_with_neutral(&signature, &matrix, &mut outputs);
        Ok(MachineState {
            signature,
            matrix,
            outputs,
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            updater,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn matrix(&self) -> &NetworkMatrix {
        &self.matrix
    }

    pub fn outputs(&self) -> &BTreeMap<OutputPortId, StreamValue> {
        &self.outputs
    }

    pub fn output(&self, port: &OutputPortId) -> Option<&StreamValue> {
        self.outputs.get(port)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn updater(&self) -> Option<&OutputPortId> {
        self.updater.as_ref()
    }

    /// Computes every used input as a linear combination of the current
    /// outputs; unused slots of active neurons get neutral values. Sample
    /// combination consumes randomness in ascending input-port order.
    pub fn linear_phase(&mut self) -> Result<BTreeMap<InputPortId, StreamValue>> {
        let signature = &self.signature;
        let matrix = &self.matrix;
        let outputs = &self.outputs;
        let rng = &mut self.rng;

        let mut groups: Vec<(InputPortId, Vec<(f64, &StreamValue)>)> = Vec::new();
        for (input, output, coefficient) in matrix.entries() {
            let value = outputs
                .get(output)
                .ok_or_else(|| Error::malformed(format!("no stored output for {output}")))?;
            match groups.last_mut() {
                Some((current, terms)) if current == input => terms.push((coefficient, value)),
                _ => groups.push((input.clone(), vec![(coefficient, value)])),
            }
        }

        let mut inputs = BTreeMap::new();
        for (input, terms) in groups {
            let kind = signature.input_kind(&input).ok_or_else(|| {
                Error::malformed(format!("input port {input} has no declared kind"))
            })?;
            let value = stream::combine(kind, &terms, rng)?;
            inputs.insert(input, value);
        }

        for neuron in matrix.active_neurons() {
            let ty = signature
                .get(&neuron.type_name)
                .ok_or_else(|| Error::malformed(format!("neuron {neuron} has no declared type")))?;
            for (slot, kind) in ty.input_kinds().iter().enumerate() {
                inputs
                    .entry(neuron.input(slot as u32))
                    .or_insert_with(|| stream::neutral(kind));
            }
        }
        Ok(inputs)
    }

    /// Applies each active neuron's transform to its slot values, in
    /// ascending neuron order. Only active neurons appear in the result.
    pub fn transform_phase(
        &mut self,
        inputs: &BTreeMap<InputPortId, StreamValue>,
    ) -> Result<BTreeMap<OutputPortId, StreamValue>> {
        let signature = &self.signature;
        let matrix = &self.matrix;
        let rng = &mut self.rng;

        let mut outputs = BTreeMap::new();
        for neuron in matrix.active_neurons() {
            let ty = signature
                .get(&neuron.type_name)
                .ok_or_else(|| Error::malformed(format!("neuron {neuron} has no declared type")))?;
            let slot_values: Vec<StreamValue> = ty
                .input_kinds()
                .iter()
                .enumerate()
                .map(
                    |(slot, kind)| match inputs.get(&neuron.input(slot as u32)) {
                        Some(value) => value.clone(),
                        None => stream::neutral(kind),
                    },
                )
                .collect();
            let slots: Vec<&StreamValue> = slot_values.iter().collect();
            let value = apply_transform(ty.transform(), &slots, rng)?;
            outputs.insert(neuron.output(), value);
        }
        Ok(outputs)
    }

    /// Executes one tick: linear phase, transform phase, output install,
    /// then the optional matrix self-update. Fails without mutating the
    /// machine if the updater produced a matrix that does not validate.
    pub fn step(&mut self) -> Result<()> {
        let executing = self.tick + 1;
        let inputs = self
            .linear_phase()
            .map_err(|e| Error::halted(executing, e))?;
        let new_outputs = self
            .transform_phase(&inputs)
            .map_err(|e| Error::halted(executing, e))?;

        let swap = match &self.updater {
            Some(port) => match new_outputs.get(port) {
                Some(StreamValue::Matrix(m)) => {
                    let violations = validate(&self.signature, m);
                    if !violations.is_empty() {
                        return Err(Error::halted(executing, Error::Invalid(violations)));
                    }
                    Some(m.clone())
                }
                Some(other) => {
                    return Err(Error::halted(
                        executing,
                        Error::malformed(format!(
                            "updater port {port} produced a {} value",
                            other.kind()
                        )),
                    ));
                }
                None => None,
            },
            None => None,
        };

        self.outputs = new_outputs;
        if let Some(matrix) = swap {
            self.matrix = matrix;
        }
        extend_with_neutral(&self.signature, &self.matrix, &mut self.outputs);
        self.tick = executing;
        Ok(())
    }

    /// Runs `n_ticks` ticks, recording the watched ports after each one.
    /// A watched port with no stored value reads as neutral.
    pub fn run(&mut self, n_ticks: u64, watch: &[OutputPortId]) -> Result<Trace> {
        for port in watch {
            if self.signature.output_kind(port).is_none() {
                return Err(Error::malformed(format!(
                    "watched port {port} references unknown type {}",
                    port.type_name
                )));
            }
        }
        let mut trace = Vec::new();
        for _ in 0..n_ticks {
            self.step()?;
            let values = watch
                .iter()
                .map(|port| (port.clone(), self.watched_value(port)))
                .collect();
            trace.push(TickRecord {
                tick: self.tick,
                values,
                support_size: self.matrix.support_size(),
            });
        }
        Ok(trace)
    }

    fn watched_value(&self, port: &OutputPortId) -> StreamValue {
        match self.outputs.get(port) {
            Some(value) => value.clone(),
            None => {
                let kind = self
                    .signature
                    .output_kind(port)
                    .expect("watch ports are checked before running");
                stream::neutral(kind)
            }
        }
    }
}

/// Gives every active output without a stored value its neutral default.
fn extend_with_neutral(
    signature: &Signature,
    matrix: &NetworkMatrix,
    outputs: &mut BTreeMap<OutputPortId, StreamValue>,
) {
    for neuron in matrix.active_neurons() {
        if let Some(ty) = signature.get(&neuron.type_name) {
            outputs
                .entry(neuron.output())
                .or_insert_with(|| stream::neutral(ty.output_kind()));
        }
    }
}
