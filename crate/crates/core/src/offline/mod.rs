//! Offline power control: energy arrivals are known before the run starts.
//!
//! For fixed inter-transmission times the powers come from backward
//! water-filling ([`waterfill`]); the intervals themselves are searched by a
//! genetic algorithm ([`genetic`]) or, for short horizons, exhaustively
//! ([`exhaustive`]).

pub mod exhaustive;
pub mod genetic;
pub mod waterfill;

pub use exhaustive::{brute_force_offline, ENUMERATION_CAP};
pub use genetic::{genetic_joint_optimize, Chromosome, GaConfig, GaOutcome};
pub use waterfill::{
    backward_water_filling, backward_water_filling_stepwise, water_levels, WaterLevels, MIN_BUSY_POWER,
};

use crate::error::Result;
use crate::model::{schedule_cost, EnergyTrace, Schedule, SystemParams};

/// Water-fills the powers for `inter_tx` on `trace` and returns the schedule with its cost.
pub fn plan_with_intervals(
    inter_tx: &[usize],
    trace: &EnergyTrace,
    params: &SystemParams,
) -> Result<(Schedule, f64)> {
    let energy = crate::model::interval_energy(inter_tx, trace)?;
    let powers = backward_water_filling(inter_tx, &energy, params)?;
    let schedule = Schedule::new(inter_tx.to_vec(), powers)?;
    let cost = schedule_cost(&schedule, params);
    Ok((schedule, cost))
}
