//! Backward water-filling of harvested energy onto busy blocks.
//!
//! For fixed inter-transmission times `X_1..X_L` the powers minimise
//! `sum_l Y_{l+1} / (sigma2_ch + P_l)` subject to energy causality: busy block
//! `l` may only spend energy harvested during `X_1..X_l`. Energy therefore
//! only flows forward in time. Processing intervals from the last to the first,
//! each interval's energy is poured onto its own busy block and every later
//! one, always raising whichever block currently has the highest water level
//! `nu_l = Y_{l+1} / (K (sigma2_ch + P_l)^2)`.
//!
//! Every busy block receives at least [`MIN_BUSY_POWER`] so that it remains a
//! transmission.

use crate::error::{Error, Result};
use crate::model::{departure_intervals, Schedule, SystemParams};

/// Smallest power that still marks a block as busy.
pub const MIN_BUSY_POWER: f64 = 1e-6;
/// Pouring increment of the stepwise algorithm.
pub const POUR_STEP: f64 = 1e-4;
/// Leftover energy below which the stepwise algorithm stops pouring.
pub const POUR_TOL: f64 = 1e-5;

/// Marginal gain `nu_l` of extra power in each busy block.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterLevels {
    pub nu: Vec<f64>,
}

fn level(weight: f64, k: f64, sigma2_ch: f64, power: f64) -> f64 {
    weight / (k * (sigma2_ch + power).powi(2))
}

/// Water levels of every busy block of `schedule`.
pub fn water_levels(schedule: &Schedule, params: &SystemParams) -> WaterLevels {
    let y = schedule.departures();
    let k = schedule.horizon_k() as f64;
    let nu = schedule
        .powers()
        .iter()
        .enumerate()
        .map(|(l, &p)| level(y[l + 1] as f64, k, params.sigma2_ch, p))
        .collect();
    WaterLevels { nu }
}

struct Problem {
    /// `Y_{l+1}` for every busy block `l`.
    weights: Vec<f64>,
    /// Energy available to busy block `l` from interval `l`.
    energy: Vec<f64>,
    k: f64,
}

fn prepare(inter_tx: &[usize], per_interval_energy: &[f64]) -> Result<Option<Problem>> {
    let n_intervals = inter_tx.len();
    if n_intervals < 2 {
        if n_intervals == 0 {
            return Err(Error::InvalidSchedule("no inter-transmission times".into()));
        }
        return Ok(None);
    }
    let busy = n_intervals - 1;
    if per_interval_energy.len() != busy && per_interval_energy.len() != n_intervals {
        return Err(Error::InvalidSchedule(format!(
            "{n_intervals} intervals need {busy} or {n_intervals} energy entries, got {}",
            per_interval_energy.len()
        )));
    }
    if let Some(e) = per_interval_energy.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Domain(format!("interval energy {e} is not a non-negative number")));
    }
    let y = departure_intervals(inter_tx)?;
    Ok(Some(Problem {
        weights: y[1..].iter().map(|&v| v as f64).collect(),
        energy: per_interval_energy[..busy].to_vec(),
        k: inter_tx.iter().sum::<usize>() as f64,
    }))
}

/// Optimal busy-block powers for the given intervals and per-interval energy.
///
/// `per_interval_energy[l]` is the energy harvested during `X_{l+1}`; the last
/// interval's energy, if supplied, is ignored. Fails with
/// [`Error::InsufficientEnergy`] when some busy block cannot be given
/// [`MIN_BUSY_POWER`] from the energy harvested before it.
///
/// Each pour is solved exactly: this is the limit of [`backward_water_filling_stepwise`]
/// as its increment goes to zero.
pub fn backward_water_filling(
    inter_tx: &[usize],
    per_interval_energy: &[f64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let Some(problem) = prepare(inter_tx, per_interval_energy)? else {
        return Ok(Vec::new());
    };
    let n = problem.weights.len();

    // Reserve the minimum power first. With Q_l = P_l - e_min the prefix
    // constraints become sum_{i<=l} Q_i <= E_l - l e_min; since Q >= 0 only
    // the running minimum from the right can bind.
    let mut reserve = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    for (l, e) in problem.energy.iter().enumerate() {
        cumulative += e;
        let required = (l + 1) as f64 * MIN_BUSY_POWER;
        if cumulative < required * (1.0 - 1e-12) {
            return Err(Error::InsufficientEnergy {
                busy_block: l + 1,
                available: cumulative,
                required,
            });
        }
        reserve.push((cumulative - required).max(0.0));
    }
    for l in (0..n - 1).rev() {
        reserve[l] = reserve[l].min(reserve[l + 1]);
    }
    let mut extra = vec![0.0; n];
    let offset = params.sigma2_ch + MIN_BUSY_POWER;
    for l in (0..n).rev() {
        let amount = reserve[l] - if l == 0 { 0.0 } else { reserve[l - 1] };
        pour(&mut extra[l..], &problem.weights[l..], amount, offset);
    }
    Ok(extra.into_iter().map(|q| q + MIN_BUSY_POWER).collect())
}

// Raises the lowest-level blocks of `extra` with `amount` of energy.
//
// Block j sits at u_j = (offset + q_j) / sqrt(a_j), where u = 1/sqrt(K nu),
// and filling it to level u costs sqrt(a_j) u - offset - q_j.
fn pour(extra: &mut [f64], weights: &[f64], amount: f64, offset: f64) {
    if amount <= 0.0 {
        return;
    }
    let mut order: Vec<(usize, f64)> = weights
        .iter()
        .zip(extra.iter())
        .enumerate()
        .filter(|(_, (a, _))| **a > 0.0)
        .map(|(j, (a, q))| (j, (offset + q) / a.sqrt()))
        .collect();
    if order.is_empty() {
        // Nothing later in the horizon benefits; the energy stays in place.
        extra[0] += amount;
        return;
    }
    order.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut slope = 0.0;
    let mut base = 0.0;
    let mut target = 0.0;
    let mut filled = 0;
    for (i, &(j, _)) in order.iter().enumerate() {
        slope += weights[j].sqrt();
        base += offset + extra[j];
        target = (amount + base) / slope;
        filled = i + 1;
        if order.get(i + 1).is_none_or(|next| target <= next.1) {
            break;
        }
    }
    for &(j, _) in &order[..filled] {
        extra[j] = (weights[j].sqrt() * target - offset).max(extra[j]);
    }
}

/// Incremental backward water-filling: energy is poured [`POUR_STEP`] at a
/// time into the busy block with the highest water level (ties to the earliest
/// block) until less than [`POUR_TOL`] remains.
///
/// Requires every interval before the last to carry at least
/// [`MIN_BUSY_POWER`]; the general case is handled by [`backward_water_filling`].
pub fn backward_water_filling_stepwise(
    inter_tx: &[usize],
    per_interval_energy: &[f64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let Some(problem) = prepare(inter_tx, per_interval_energy)? else {
        return Ok(Vec::new());
    };
    let n = problem.weights.len();
    if let Some(l) = problem.energy.iter().position(|&e| e < MIN_BUSY_POWER) {
        return Err(Error::InsufficientEnergy {
            busy_block: l + 1,
            available: problem.energy[l],
            required: MIN_BUSY_POWER,
        });
    }
    let ch = params.sigma2_ch;
    let k = problem.k;
    let a = &problem.weights;
    let mut power = vec![0.0; n];
    let mut nu = vec![f64::INFINITY; n];

    power[n - 1] = problem.energy[n - 1];
    nu[n - 1] = level(a[n - 1], k, ch, power[n - 1]);
    for l in (0..n - 1).rev() {
        power[l] = MIN_BUSY_POWER;
        nu[l] = level(a[l], k, ch, power[l]);
        let mut remaining = problem.energy[l] - MIN_BUSY_POWER;
        while remaining > POUR_TOL {
            let i = (l..n).fold(l, |best, j| if nu[j] > nu[best] { j } else { best });
            let step = POUR_STEP.min(remaining);
            power[i] += step;
            nu[i] = level(a[i], k, ch, power[i]);
            remaining -= step;
        }
    }
    Ok(power)
}
