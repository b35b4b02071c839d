//! Byzantine-resilient federated aggregation with information-theoretic
//! privacy: the ByITFL and LoByITFL protocols, their building blocks, and a
//! desk-scale training harness.
//!
//! Real-valued code is generic over [`Real`] (`f32` / `f64`); the crate root
//! exports `f64` aliases for the common types.

pub mod adversary;
pub mod byitfl;
pub mod config;
pub mod discriminator;
pub mod field;
pub mod flsim;
pub mod lobyitfl;
pub mod mpc;
pub mod params;
pub mod protocol;
pub mod quantize;
pub mod rng;
pub mod sharing;
pub mod transcript;

/// Floating-point scalar used by the real-valued side of the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 conversion")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type RealUpdateF64 = quantize::RealUpdate<f64>;
pub type DiscriminatorPolyF64 = discriminator::DiscriminatorPoly<f64>;
pub type ByitflF64 = byitfl::Byitfl<f64>;
pub type LobyitflF64 = lobyitfl::Lobyitfl<f64>;
pub type SimulationF64 = flsim::Simulation<f64>;
pub type TaskF64 = flsim::Task<f64>;
