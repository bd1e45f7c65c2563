//! Kinetic simulation of interface-type BiFeO3 memristors.
//!
//! Positively charged oxygen vacancies drift through a 1D oxide between a
//! Au top contact and a Pt/Ti bottom contact. Their mean position sets an
//! internal state `q` that modulates both Schottky barriers; the device
//! current follows from a series circuit of two Schottky contacts and the
//! ohmic oxide bulk.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod constants;
pub mod device;
pub mod error;
pub mod field;
pub mod harness;
pub mod params;
pub mod trace;
pub mod transport;

pub use circuit::{CircuitState, ContactModel, SeriesCircuit, SolverOptions};
pub use device::{Device, DeviceSetup, DeviceState, TraceRecord, VacancyEnsemble};
pub use error::{Error, Result};
pub use field::{Grid1D, PoissonSolver};
pub use params::DeviceParameters;
pub use transport::{BoundaryPolicy, TransportConfig};
