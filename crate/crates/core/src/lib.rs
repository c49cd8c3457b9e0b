//! Exact density-matrix simulation of a discrete-step quantum isothermal
//! process: instantaneous quenches of a two-level system interleaved with
//! thermal contact modelled by the generalized amplitude damping channel.

pub mod channels;
pub mod circuit;
pub mod error;
pub mod protocol;
pub mod qstate;
pub mod validate;

pub use channels::{BathParams, Branch, KrausSet, StepParams, Superoperator};
pub use circuit::{Circuit, Gate, GateKind, Preparation};
pub use error::{Error, Result};
pub use protocol::{AncillaMode, Readout, RunMode, Schedule, ScheduleKind, WorkSummary};
pub use qstate::{ComplexMatrix, DensityMatrix, WireIndex, C64};
