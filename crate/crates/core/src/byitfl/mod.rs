//! The ByITFL iteration: bivariate-verified packed sharing of every update,
//! norm validation by Reed-Solomon decoding, trust-score aggregation on
//! shares under a shared random mask `lambda`, and federator-side ratio
//! recovery.

mod config;
mod engine;

pub use config::ByitflConfig;
pub use engine::{Byitfl, RunOptions};
