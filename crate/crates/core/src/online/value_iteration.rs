use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_state_space, stage_cost, state_distortion, transition, MdpState, StateSpace};
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Discounted value of every state; pruned states hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    space: StateSpace,
    values: Vec<f64>,
}

impl ValueTable {
    /// Wraps a dense table; entries of pruned states are overwritten with `NaN`.
    pub fn from_dense(space: StateSpace, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dense_len() {
            return Err(Error::InvalidPolicy(format!(
                "value table has {} entries, the state space {}",
                values.len(),
                space.dense_len()
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !space.is_included_index(i) {
                *v = f64::NAN;
            }
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn get(&self, s: MdpState) -> Option<f64> {
        self.space.contains(s).then(|| self.values[self.space.index(s)])
    }

    pub fn dense(&self) -> &[f64] {
        &self.values
    }
}

/// Power chosen in every state; pruned states hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    space: StateSpace,
    actions: Vec<u16>,
}

impl PolicyTable {
    /// Wraps a dense action table, rejecting any entry that exceeds its buffer.
    pub fn from_dense(space: StateSpace, mut actions: Vec<u16>) -> Result<Self> {
        if actions.len() != space.dense_len() {
            return Err(Error::InvalidPolicy(format!(
                "policy table has {} entries, the state space {}",
                actions.len(),
                space.dense_len()
            )));
        }
        for (i, a) in actions.iter_mut().enumerate() {
            if !space.is_included_index(i) {
                *a = 0;
            } else if usize::from(*a) > space.state(i).b {
                return Err(Error::InvalidPolicy(format!(
                    "power {a} exceeds the buffer at {:?}",
                    space.state(i)
                )));
            }
        }
        Ok(Self { space, actions })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn get(&self, s: MdpState) -> Option<usize> {
        self.space
            .contains(s)
            .then(|| usize::from(self.actions[self.space.index(s)]))
    }

    pub fn dense(&self) -> &[u16] {
        &self.actions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViOptions {
    /// Stop once the sup-norm change of a sweep falls below this.
    pub eps: f64,
    pub max_sweeps: usize,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            max_sweeps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    /// `(1 - alpha) V(1, 0, 0)`, the average-cost estimate.
    pub g_estimate: f64,
    pub sweeps: usize,
    /// Sup-norm change of every sweep.
    pub changes: Vec<f64>,
}

/// Cost-to-go of one action from `s` under `values`.
fn action_value(s: MdpState, p: usize, values: &ValueTable, params: &SystemParams) -> Result<f64> {
    let lookup = |t: MdpState| {
        values
            .get(t)
            .ok_or_else(|| Error::InvalidPolicy(format!("{t:?} is outside the state space")))
    };
    let t0 = lookup(transition(s, p, 0, params)?)?;
    let t1 = lookup(transition(s, p, 1, params)?)?;
    Ok(stage_cost(s, p, params)? + params.alpha * (params.lambda * t1 + (1.0 - params.lambda) * t0))
}

/// Full Bellman backup at `s`: the minimal cost-to-go and the smallest
/// minimising power.
pub fn bellman_backup(s: MdpState, values: &ValueTable, params: &SystemParams) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, 0);
    for p in 0..=s.b {
        let q = action_value(s, p, values, params)?;
        if q < best.0 {
            best = (q, p);
        }
    }
    Ok(best)
}

/// `max_s |V(s) - (T V)(s)|` over the kept states.
pub fn bellman_residual(values: &ValueTable, params: &SystemParams) -> Result<f64> {
    let states: Vec<MdpState> = values.space().states().collect();
    states
        .par_iter()
        .map(|&s| {
            let (tv, _) = bellman_backup(s, values, params)?;
            Ok((tv - values.get(s).expect("kept state")).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

struct Sweeper<'a> {
    space: &'a StateSpace,
    params: &'a SystemParams,
    side: usize,
    /// `w D(d_index)` for every index.
    weighted_distortion: Vec<f64>,
}

impl Sweeper<'_> {
    fn idx(&self, delta: usize, d: usize, b: usize) -> usize {
        ((delta - 1) * self.side + d) * self.side + b
    }

    // One synchronous backup of every state from `prev` into `next`; returns
    // the sup-norm change.
    fn sweep(&self, prev: &[f64], next: &mut [f64], policy: &mut [u16]) -> f64 {
        let (alpha, lambda) = (self.params.alpha, self.params.lambda);
        let bm = self.space.b_max();
        let dm = self.space.delta_max();
        let side = self.side;

        // A transmission leads to (1, p, b - p + a) whatever delta and d are,
        // so the best positive action depends on b alone.
        let mut best_pos = vec![(f64::INFINITY, 0u16); side];
        for (b, slot) in best_pos.iter_mut().enumerate().skip(1) {
            for p in 1..=b {
                let v0 = prev[self.idx(1, p, b - p)];
                let v1 = prev[self.idx(1, p, (b - p + 1).min(bm))];
                let q = 1.0
                    + self.weighted_distortion[p]
                    + alpha * (lambda * v1 + (1.0 - lambda) * v0);
                if q < slot.0 {
                    *slot = (q, p as u16);
                }
            }
        }

        let plane = side * side;
        next.par_chunks_mut(plane)
            .zip(policy.par_chunks_mut(plane))
            .enumerate()
            .map(|(row, (values, actions))| {
                let delta = row + 1;
                let nd = (delta + 1).min(dm);
                let mut change: f64 = 0.0;
                for d in 0..side {
                    let stay = (delta + 1) as f64 + self.weighted_distortion[d];
                    for b in 0..side {
                        let i = d * side + b;
                        if !self.space.is_included_index(row * plane + i) {
                            values[i] = f64::NAN;
                            actions[i] = 0;
                            continue;
                        }
                        let v0 = prev[self.idx(nd, d, b)];
                        let v1 = prev[self.idx(nd, d, (b + 1).min(bm))];
                        let q0 = stay + alpha * (lambda * v1 + (1.0 - lambda) * v0);
                        let (v, a) = if q0 <= best_pos[b].0 { (q0, 0) } else { best_pos[b] };
                        values[i] = v;
                        actions[i] = a;
                        change = change.max((v - prev[row * plane + i]).abs());
                    }
                }
                change
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Discounted value iteration from `V = 0` with synchronous sweeps.
///
/// Ties between actions go to the smallest power. Fails with
/// [`Error::NoConvergence`] if `max_sweeps` sweeps do not bring the change
/// below `eps`.
pub fn value_iteration(params: &SystemParams, options: &ViOptions) -> Result<MdpSolution> {
    let params = params.validate()?;
    if !(options.eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps must be positive, got {}", options.eps)));
    }
    let space = build_state_space(&params);
    if space.b_max() > usize::from(u16::MAX) {
        return Err(Error::InvalidParams(format!("b_max={} is too large", space.b_max())));
    }
    let sweeper = Sweeper {
        space: &space,
        params: &params,
        side: space.b_max() + 1,
        weighted_distortion: (0..=space.b_max())
            .map(|d| params.w * state_distortion(d, &params))
            .collect(),
    };
    let n = space.dense_len();
    let mut prev: Vec<f64> = (0..n)
        .map(|i| if space.is_included_index(i) { 0.0 } else { f64::NAN })
        .collect();
    let mut next = vec![0.0; n];
    let mut policy = vec![0u16; n];
    let mut changes = Vec::new();
    for sweep in 1..=options.max_sweeps {
        let change = sweeper.sweep(&prev, &mut next, &mut policy);
        changes.push(change);
        std::mem::swap(&mut prev, &mut next);
        if change < options.eps {
            let values = ValueTable::from_dense(space.clone(), prev)?;
            let policy = PolicyTable::from_dense(space, policy)?;
            let g_estimate =
                (1.0 - params.alpha) * values.get(MdpState::new(1, 0, 0)).expect("reference state");
            return Ok(MdpSolution {
                values,
                policy,
                g_estimate,
                sweeps: sweep,
                changes,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "value iteration",
        iterations: options.max_sweeps,
        last_change: changes.last().copied().unwrap_or(f64::INFINITY),
    })
}
