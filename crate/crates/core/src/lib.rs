pub mod census;
pub mod error;
pub mod jordan;
pub mod linalg;
pub mod montecarlo;
pub mod perturbation;
pub mod rng;
pub mod schur;

pub use error::{Error, Result};
pub use linalg::Matrix;
