//! Exact Fock-space algebra and field-commutator numerics for the free open
//! bosonic string, in the light-cone gauge and the covariant formulation.

pub mod config;
pub mod error;
pub mod exec;
pub mod fock_basis;
pub mod lattice;
pub mod linalg;
pub mod oscillator;
pub mod physical_states;
pub mod propagator;
pub mod quadrature;
pub mod quantum_field;
pub mod smearing;
pub mod scalar;
pub mod sparse;
pub mod string_cone;
pub mod util;
pub mod virasoro;
pub mod worldsheet;

pub use config::{Gauge, Metric, ModelConfig};
pub use error::{Error, Result};
pub use exec::Execution;
