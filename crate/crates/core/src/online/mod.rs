//! Causal power control as a discounted MDP over `(AoI, distortion, buffer)`.
//!
//! A state is `(delta, d_index, b)`: the current AoI, the integer power of the
//! last successful transmission (0 if none yet, so the distortion is
//! `sigma2_theta`) and the stored energy. Both `delta` and `b` saturate at
//! their caps.

mod structure;
mod value_iteration;

pub use structure::{verify_structure, Counterexample, PropertyCheck, StructureReport};
pub use value_iteration::{
    bellman_backup, bellman_residual, value_iteration, MdpSolution, PolicyTable, ValueTable,
    ViOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{distortion, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MdpState {
    pub delta: usize,
    pub d_index: usize,
    pub b: usize,
}

impl MdpState {
    pub fn new(delta: usize, d_index: usize, b: usize) -> Self {
        Self { delta, d_index, b }
    }
}

/// Dense index over `1..=delta_max x 0..=b_max x 0..=b_max` with a
/// reachability mask.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    delta_max: usize,
    b_max: usize,
    included: Vec<bool>,
}

impl StateSpace {
    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    pub fn b_max(&self) -> usize {
        self.b_max
    }

    /// Size of the dense table, pruned states included.
    pub fn dense_len(&self) -> usize {
        self.included.len()
    }

    /// Number of states that are kept.
    pub fn len(&self) -> usize {
        self.included.iter().filter(|&&k| k).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `s` lies inside the caps.
    pub fn in_bounds(&self, s: MdpState) -> bool {
        (1..=self.delta_max).contains(&s.delta) && s.d_index <= self.b_max && s.b <= self.b_max
    }

    pub fn index(&self, s: MdpState) -> usize {
        debug_assert!(self.in_bounds(s), "{s:?} outside the state space");
        let side = self.b_max + 1;
        ((s.delta - 1) * side + s.d_index) * side + s.b
    }

    pub fn state(&self, index: usize) -> MdpState {
        let side = self.b_max + 1;
        MdpState {
            delta: index / (side * side) + 1,
            d_index: (index / side) % side,
            b: index % side,
        }
    }

    pub fn contains(&self, s: MdpState) -> bool {
        self.in_bounds(s) && self.included[self.index(s)]
    }

    pub fn is_included_index(&self, index: usize) -> bool {
        self.included[index]
    }

    /// Kept states in dense-index order.
    pub fn states(&self) -> impl Iterator<Item = MdpState> + '_ {
        self.included
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| self.state(i))
    }

    /// Whether the pruning rule removes `(delta, d_index, b)`.
    ///
    /// After a transmission at power `d_index` the buffer holds at most
    /// `b_max - d_index` units plus what arrives since, one per block, so
    /// `b > delta + b_max - d_index` cannot occur. At the AoI cap `delta` stops
    /// counting while the buffer keeps filling, so nothing is pruned there.
    pub fn is_pruned(delta: usize, d_index: usize, b: usize, delta_max: usize, b_max: usize) -> bool {
        delta < delta_max && delta + (b_max - d_index) < b
    }
}

/// Every `(delta, d_index, b)` inside the caps that can be reached.
pub fn build_state_space(params: &SystemParams) -> StateSpace {
    let (dm, bm) = (params.delta_max, params.b_max);
    let side = bm + 1;
    let mut included = Vec::with_capacity(dm * side * side);
    for delta in 1..=dm {
        for d in 0..=bm {
            for b in 0..=bm {
                included.push(!StateSpace::is_pruned(delta, d, b, dm, bm));
            }
        }
    }
    StateSpace {
        delta_max: dm,
        b_max: bm,
        included,
    }
}

/// Distortion encoded by `d_index`.
pub fn state_distortion(d_index: usize, params: &SystemParams) -> f64 {
    distortion(d_index as f64, params)
}

fn check_action(s: MdpState, p: usize) -> Result<()> {
    if p > s.b {
        Err(Error::InvalidPolicy(format!(
            "power {p} exceeds the buffer b={} at {s:?}",
            s.b
        )))
    } else {
        Ok(())
    }
}

/// Next state after spending `p` units and harvesting `arrival` (0 or 1).
pub fn transition(s: MdpState, p: usize, arrival: u8, params: &SystemParams) -> Result<MdpState> {
    check_action(s, p)?;
    let a = usize::from(arrival.min(1));
    Ok(if p == 0 {
        MdpState {
            delta: (s.delta + 1).min(params.delta_max),
            d_index: s.d_index,
            b: (s.b + a).min(params.b_max),
        }
    } else {
        MdpState {
            delta: 1,
            d_index: p,
            b: (s.b - p + a).min(params.b_max),
        }
    })
}

/// Weighted AoI plus distortion of the block following action `p`.
pub fn stage_cost(s: MdpState, p: usize, params: &SystemParams) -> Result<f64> {
    check_action(s, p)?;
    Ok(if p > 0 {
        1.0 + params.w * distortion(p as f64, params)
    } else {
        (s.delta + 1) as f64 + params.w * state_distortion(s.d_index, params)
    })
}
