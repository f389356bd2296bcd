//! Block-level Monte-Carlo simulation of a power policy.
//!
//! In every block the simulator records the current AoI and distortion, lets
//! the policy spend energy harvested in earlier blocks, then adds this block's
//! arrival to the buffer. A transmission in block `n` resets the AoI to 1 in
//! block `n + 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{distortion, EnergyTrace, Schedule, SystemParams, TradeoffPoint};
use crate::numerics::{bernoulli_trace, SimRng};
use crate::online::{MdpState, PolicyTable};

/// Buffer capacity used by every policy except the MDP table.
pub const LARGE_BUFFER: f64 = 1e6;
const ENERGY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// Transmit at `power` whenever the buffer holds at least that much.
    Fixed { power: f64 },
    /// Idle for `save_phase_len` blocks (default `ceil(sqrt(K))`), then try
    /// to transmit at `power` every `period` blocks.
    SaveAndTransmit {
        power: f64,
        period: f64,
        save_phase_len: Option<usize>,
    },
    /// Look up the power for the current MDP state.
    MdpTable(PolicyTable),
    /// Execute an offline schedule; its horizon must equal the run length.
    OfflineReplay(Schedule),
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { power } if !(*power >= 1.0 && power.is_finite()) => Err(
                Error::InvalidPolicy(format!("fixed power must be >= 1, got {power}")),
            ),
            Self::SaveAndTransmit { power, period, .. } => {
                if !(*power > 0.0 && power.is_finite()) {
                    Err(Error::InvalidPolicy(format!("power must be positive, got {power}")))
                } else if !(*period >= 1.0 && period.is_finite()) {
                    Err(Error::InvalidPolicy(format!("period must be >= 1, got {period}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Short name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Fixed { .. } => "fixed",
            Self::SaveAndTransmit { .. } => "save_and_transmit",
            Self::MdpTable(_) => "mdp_table",
            Self::OfflineReplay(_) => "offline_replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub k: usize,
    pub seed: u64,
    /// Keep the per-block AoI and distortion.
    pub record_traces: bool,
    /// Overrides the default buffer capacity.
    pub capacity: Option<f64>,
}

impl SimOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            record_traces: false,
            capacity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub point: TradeoffPoint,
    pub aoi_trace: Option<Vec<u64>>,
    pub distortion_trace: Option<Vec<f64>>,
    /// Scheduled save-and-transmit slots skipped for lack of energy.
    pub blocks_skipped_for_energy: usize,
    pub transmissions: usize,
    pub seed: u64,
    pub k: usize,
}

/// Simulates `spec` for `k` blocks of Bernoulli(`lambda`) arrivals drawn from `seed`.
pub fn simulate_policy(spec: &PolicySpec, params: &SystemParams, k: usize, seed: u64) -> Result<SimReport> {
    simulate_with(spec, params, &SimOptions::new(k, seed))
}

pub fn simulate_with(spec: &PolicySpec, params: &SystemParams, options: &SimOptions) -> Result<SimReport> {
    if options.k == 0 {
        return Err(Error::InvalidParams("K must be at least 1".into()));
    }
    let trace = bernoulli_trace(params.lambda, options.k, &mut SimRng::new(options.seed));
    simulate_on_trace(spec, params, &trace, options.record_traces, options.capacity)
}

/// Independent runs, one per seed, in parallel.
pub fn simulate_replications(
    spec: &PolicySpec,
    params: &SystemParams,
    k: usize,
    seeds: &[u64],
) -> Result<Vec<SimReport>> {
    seeds
        .par_iter()
        .map(|&seed| simulate_policy(spec, params, k, seed))
        .collect()
}

enum Rule<'a> {
    Fixed(f64),
    Save {
        power: f64,
        period: f64,
        save: usize,
        slot: usize,
        next_block: usize,
    },
    Mdp(&'a PolicyTable),
    Replay {
        busy: Vec<usize>,
        powers: &'a [f64],
        next: usize,
    },
}

impl Rule<'_> {
    // Power to spend in block `n`, or `None` to stay idle. Save-and-transmit
    // slots that cannot be afforded are counted in `skipped`.
    fn decide(
        &mut self,
        n: usize,
        delta: usize,
        d_index: usize,
        buffer: f64,
        skipped: &mut usize,
    ) -> Result<Option<f64>> {
        match self {
            Rule::Fixed(p) => Ok((buffer >= *p).then_some(*p)),
            Rule::Save {
                power,
                period,
                save,
                slot,
                next_block,
            } => {
                if n != *next_block {
                    return Ok(None);
                }
                *slot += 1;
                *next_block = *save + 1 + (*slot as f64 * *period).floor() as usize;
                if buffer >= *power {
                    Ok(Some(*power))
                } else {
                    *skipped += 1;
                    Ok(None)
                }
            }
            Rule::Mdp(table) => {
                let bm = table.space().b_max();
                let s = MdpState::new(
                    delta.min(table.space().delta_max()),
                    d_index,
                    (buffer.round() as usize).min(bm),
                );
                let p = table
                    .get(s)
                    .ok_or_else(|| Error::InvalidPolicy(format!("no policy entry for {s:?}")))?;
                Ok((p > 0).then_some(p as f64))
            }
            Rule::Replay { busy, powers, next } => {
                if busy.get(*next) != Some(&n) {
                    return Ok(None);
                }
                let p = powers[*next];
                *next += 1;
                if buffer + ENERGY_SLACK < p {
                    return Err(Error::CausalityViolation {
                        block: n,
                        buffer,
                        power: p,
                    });
                }
                Ok(Some(p))
            }
        }
    }
}

/// Runs `spec` on a fixed arrival trace.
pub fn simulate_on_trace(
    spec: &PolicySpec,
    params: &SystemParams,
    trace: &EnergyTrace,
    record_traces: bool,
    capacity: Option<f64>,
) -> Result<SimReport> {
    spec.validate()?;
    let k = trace.len();
    if k == 0 {
        return Err(Error::InvalidParams("K must be at least 1".into()));
    }
    let mut rule = match spec {
        PolicySpec::Fixed { power } => Rule::Fixed(*power),
        PolicySpec::SaveAndTransmit {
            power,
            period,
            save_phase_len,
        } => {
            let save = save_phase_len.unwrap_or_else(|| (k as f64).sqrt().ceil() as usize);
            Rule::Save {
                power: *power,
                period: *period,
                save,
                slot: 0,
                next_block: save + 1,
            }
        }
        PolicySpec::MdpTable(table) => Rule::Mdp(table),
        PolicySpec::OfflineReplay(schedule) => {
            if schedule.horizon_k() != k {
                return Err(Error::InvalidSchedule(format!(
                    "schedule spans {} blocks but the run has {k}",
                    schedule.horizon_k()
                )));
            }
            Rule::Replay {
                busy: schedule.busy_blocks(),
                powers: schedule.powers(),
                next: 0,
            }
        }
    };
    let capacity = capacity.unwrap_or(match spec {
        PolicySpec::MdpTable(table) => table.space().b_max() as f64,
        _ => LARGE_BUFFER,
    });

    let mut delta: usize = 1;
    let mut d_index: usize = 0;
    let mut dist = params.sigma2_theta;
    let mut buffer = 0.0_f64;
    let (mut harvested, mut spent) = (0.0_f64, 0.0_f64);
    let (mut aoi_sum, mut dist_sum) = (0.0_f64, 0.0_f64);
    let mut skipped = 0;
    let mut transmissions = 0;
    let mut aoi_trace = record_traces.then(|| Vec::with_capacity(k));
    let mut dist_trace = record_traces.then(|| Vec::with_capacity(k));

    for (i, &arrival) in trace.arrivals.iter().enumerate() {
        let n = i + 1;
        aoi_sum += delta as f64;
        dist_sum += dist;
        if let (Some(a), Some(d)) = (aoi_trace.as_mut(), dist_trace.as_mut()) {
            a.push(delta as u64);
            d.push(dist);
        }
        match rule.decide(n, delta, d_index, buffer, &mut skipped)? {
            Some(p) => {
                buffer = (buffer - p).max(0.0);
                spent += p;
                transmissions += 1;
                delta = 1;
                dist = distortion(p, params);
                d_index = p.round() as usize;
            }
            None => delta += 1,
        }
        let a = f64::from(arrival);
        harvested += a;
        buffer = (buffer + a).min(capacity);
        debug_assert!((0.0..=capacity).contains(&buffer));
        if spent > harvested + ENERGY_SLACK {
            return Err(Error::CausalityViolation {
                block: n,
                buffer,
                power: spent - harvested,
            });
        }
    }

    let kf = k as f64;
    Ok(SimReport {
        point: TradeoffPoint::new(aoi_sum / kf, dist_sum / kf, params.w),
        aoi_trace,
        distortion_trace: dist_trace,
        blocks_skipped_for_energy: skipped,
        transmissions,
        seed: trace.seed,
        k,
    })
}
