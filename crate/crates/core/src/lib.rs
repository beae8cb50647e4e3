pub mod avi;
pub mod combinatorics;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod polyhedra;
pub mod pointbased;
pub mod prox;
pub mod pvc;
pub mod qp;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Instance = model::PvsInstance<f64>;
pub type Instance32 = model::PvsInstance<f32>;
pub type Polyhedron = polyhedra::Polyhedron<f64>;
pub type PolyCone = polyhedra::PolyCone<f64>;
