//! Deterministic Loewner engine: forward and backward evolution, trace
//! synthesis, whole-plane unzipping and boundary weldings.
//!
//! Every map is a composition of elementary atoms, one per time step, with
//! the driving value held constant over the step. See [`atom`] for the
//! conventions.

pub mod atom;
mod extract;
mod flow;
mod stack;
mod trace;
mod types;
mod welding;

pub use atom::{ElementaryMap, Realization};
pub use extract::{extract_wholeplane_driving, unzip_wholeplane, ExtractOptions, Unzipped};
pub use flow::backward_flow_eval;
pub use stack::{evolve_forward, MapStack, WholePlaneSeed};
pub use trace::{
    backward_trace, compute_trace, compute_trace_with, normalized_backward_trace,
    normalized_map, synthesize_wholeplane, NormalizedTrace, TraceOptions,
};
pub use types::{DrivingPath, Kind, Trace};
pub use welding::{compute_welding, Welder, WeldingTable};

/// Complex numbers used throughout the engine.
pub type C64 = num_complex::Complex64;
