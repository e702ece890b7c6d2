//! Stochastic rate-equation simulation of directly modulated semiconductor
//! lasers, optical injection locking, and the measurement chain used to
//! characterise phase-seeded quantum-communication transmitters.

pub mod chirp;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod injection;
pub mod measurement;
pub mod params;
pub mod photon;
pub mod qrng;
pub mod rng;
pub mod transmitter;
pub mod waveform;

pub use dynamics::{
    derivatives, langevin_increments, simulate, steady_state, step, InitialState, Laser,
    NoiseConfig, SimState, Trajectory,
};
pub use error::{Error, Result};
pub use params::{output_power, threshold_current, CgsParams, LaserParams};
pub use waveform::DriveWaveform;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
