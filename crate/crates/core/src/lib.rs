//! Transmit-power policies for an energy-harvesting sensor that reports a
//! Gaussian source over a noisy channel, trading age of information (AoI)
//! against reconstruction distortion.
//!
//! The crate is organised by policy regime:
//!
//! * [`model`] holds the shared system parameters, the distortion law, AoI
//!   accounting and the weighted-sum objective.
//! * [`numerics`] provides the exponential integral, the seeded RNG and
//!   energy-arrival traces.
//! * [`closed_form`] solves the fixed-power, save-and-transmit and
//!   Rayleigh-fading regimes analytically.
//! * [`offline`] jointly optimises transmission intervals and powers when the
//!   energy arrivals are known in advance.
//! * [`online`] solves the causal problem as a discounted MDP and checks the
//!   structure of the resulting value function and policy.
//! * [`sim`] runs any policy against random energy arrivals, and
//!   [`sweep`] assembles trade-off curves over the weighting coefficient.

pub mod closed_form;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod offline;
pub mod online;
pub mod sim;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use model::{EnergyTrace, Schedule, SystemParams, TradeoffPoint};
