//! LoByITFL: one-time-pad sharing against material from a trusted
//! initializer, MAC-verified Beaver multiplication and plain Lagrange
//! reconstruction at the federator.

mod config;
mod engine;
mod material;

pub use config::LobyitflConfig;
pub use engine::Lobyitfl;
pub use material::{
    config_hash, ttp_initialize, IterationMaterial, MaterialError, Provision, SessionHeader,
    SessionMaterial, SessionReader, SessionWriter, SESSION_MAGIC, SESSION_VERSION,
};
