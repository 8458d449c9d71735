//! Mining message-flow patterns from concurrent system-on-chip execution
//! traces.
//!
//! The pipeline: simulate a set of message flows (labeled Petri nets) into an
//! interleaved trace, slice the trace to separate unrelated events, train one
//! next-event sequence model per pattern length, chain the models to extract
//! sequential patterns above a probability threshold, and classify the mined
//! patterns against the flows' ground-truth executions.

pub mod error;
pub mod evaluator;
pub mod event;
pub mod flow;
pub mod miner;
pub mod pipeline;
pub mod seq_model;
pub mod simulator;
pub mod slicer;
pub mod trace;

mod util;

pub use error::{Error, Result};
pub use event::EventType;
pub use flow::{Execution, Flow, Marking, Transition, ValidationReport};
pub use trace::{EventInstance, Trace, Vocabulary};
