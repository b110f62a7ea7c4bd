pub mod data;
pub mod error;
pub mod estimators;
pub mod interval;
mod linalg;
pub mod quantile;
pub mod rng;
pub mod conformal;
pub mod loco;
pub mod simbench;
