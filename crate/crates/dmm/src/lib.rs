//! A virtual machine for dataflow matrix machines: programs are sparse
//! real matrices over a countable space of typed neuron ports, executed
//! in discrete synchronous ticks over several kinds of linear streams.

pub mod cli;
pub mod dsl;
pub mod engine;
pub mod error;
mod literal;
pub mod network;
pub mod stream;
#[cfg(test)]
mod testutil;
pub mod transform;

pub use dsl::{parse_program, serialize_program, Program};
pub use engine::{MachineState, TickRecord, Trace};
pub use error::{Error, ParseDiagnostic, Result};
pub use network::{
    validate, InputPortId, NetworkMatrix, NeuronId, NeuronType, OutputPortId, Signature, Violation,
};
pub use stream::{SampleValue, Sign, StreamKind, StreamValue};
pub use transform::{Transform, TransformRegistry};
