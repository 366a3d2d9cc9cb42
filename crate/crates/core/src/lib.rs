pub mod algebra;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod integrators;
pub mod malliavin;
pub mod matrix_oracle;
pub mod pairings;
pub mod random;
pub mod time;

pub use covariance::{fbm_covariance, step_inner_product, HurstParams, StepFunction};
pub use error::{Error, Result};
pub use time::Time;
