//! Exhaustive search over every interval composition of a short horizon.

use super::plan_with_intervals;
use crate::error::{Error, Result};
use crate::model::{EnergyTrace, Schedule, SystemParams};

/// Largest horizon [`brute_force_offline`] will enumerate (`2^(K-1)` candidates).
pub const ENUMERATION_CAP: usize = 14;

/// The cheapest water-filled schedule over all compositions of `K = trace.len()`.
///
/// Compositions whose water-filling is infeasible are skipped; the
/// single-interval schedule is always feasible.
pub fn brute_force_offline(params: &SystemParams, trace: &EnergyTrace) -> Result<(Schedule, f64)> {
    let k = trace.len();
    if k == 0 {
        return Err(Error::InvalidParams("horizon K must be positive".into()));
    }
    if k > ENUMERATION_CAP {
        return Err(Error::HorizonTooLarge {
            k,
            cap: ENUMERATION_CAP,
        });
    }
    let mut best: Option<(Schedule, f64)> = None;
    // Bit i set means a cut after block i + 1.
    for mask in 0u32..(1 << (k - 1)) {
        let mut x = Vec::new();
        let mut run = 0;
        for i in 0..k {
            run += 1;
            if i + 1 == k || mask & (1 << i) != 0 {
                x.push(run);
                run = 0;
            }
        }
        if let Ok((s, cost)) = plan_with_intervals(&x, trace, params) {
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some((s, cost));
            }
        }
    }
    Ok(best.expect("the single-interval schedule is always feasible"))
}
