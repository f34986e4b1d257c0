//! Monitored dipole-conserving circuits: exact conditional-state evolution,
//! a particle-filter engine for large systems, field-theory predictions and
//! an experiment harness.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connectivity;
pub mod error;
pub mod fit;
pub mod gates;
pub mod harness;
pub mod lattice;
pub mod measure;
pub mod observables;
pub mod par;
pub mod particle;
pub mod rng;
pub mod schedule;
pub mod state;
pub mod theory;
pub mod trajectory;

pub use error::{Error, Result};
pub use gates::{GateFamily, WindowKernel};
pub use lattice::{Boundary, Configuration, Dipole, LatticeGeometry, SectorKey, Window};
pub use measure::{MeasurementKind, MeasurementRecord, Outcome};
pub use observables::Observable;
pub use state::ProbState;
pub use trajectory::{ExactEngine, InitialState, TrajectoryParams, TrajectoryResult};
