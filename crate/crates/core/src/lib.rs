pub mod geometry;
pub mod profiles;
pub mod quadrature;
pub mod mesh;
pub mod assembly;
pub mod eigensolve;
pub mod sparse;
pub mod error;
pub mod problem;
pub mod asymptotics;
pub mod optimizer;

pub use error::{Error, Result};
