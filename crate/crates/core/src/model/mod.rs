//! Problem instances: affine base map, potential classes, reference point and file format.

mod base;
mod instance;
mod potential;
pub mod schema;

pub use base::{BaseMap, LipschitzModuli};
pub use instance::{load_instance, parse_instance, PvsInstance, ReferencePoint, REFERENCE_TOL};
pub use potential::{BoxSet, Potential, PotentialConstants, Provenance, SmoothConstraint};
pub use schema::InstanceConfig;
