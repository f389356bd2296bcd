//! Trade-off curves: one point per (method, w).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{fading_power_or_grid, optimal_fixed_power, optimal_save_transmit};
use crate::error::{Error, Result};
use crate::model::{EnergyTrace, SystemParams, TradeoffPoint};
use crate::numerics::{bernoulli_trace, SimRng};
use crate::offline::{genetic_joint_optimize, GaConfig};
use crate::online::{value_iteration, ViOptions};
use crate::sim::{simulate_policy, PolicySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Analytic fixed-power optimum.
    Fixed,
    /// Analytic save-and-transmit optimum.
    Save,
    /// Simulated MDP policy.
    Mdp,
    /// Genetic offline schedule on one seeded trace.
    Offline,
    /// Analytic optimum under Rayleigh fading.
    Fading,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Fixed, Method::Save, Method::Mdp, Method::Offline, Method::Fading];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fixed => "fixed",
            Method::Save => "save",
            Method::Mdp => "mdp",
            Method::Offline => "offline",
            Method::Fading => "fading",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown method {s:?}")))
    }
}

/// Parses `"start:step:stop"` into the inclusive arithmetic progression, or a
/// single number into a one-element list.
pub fn parse_w_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParams(format!("w list {spec:?} is not \"start:step:stop\""));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [w] if w.is_finite() => Ok(vec![w]),
        [start, step, stop] if start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    /// Blocks simulated per MDP point.
    pub sim_k: usize,
    /// Seed of the MDP simulation and of the offline trace.
    pub seed: u64,
    pub ga: GaConfig,
    pub vi: ViOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            sim_k: 100_000,
            seed: 0,
            ga: GaConfig::default(),
            vi: ViOptions::default(),
        }
    }
}

#[derive(Debug)]
pub struct SweepRow {
    pub method: Method,
    pub w: f64,
    pub result: Result<TradeoffPoint>,
    pub seed: u64,
    /// Blocks behind the point; 0 for analytic methods.
    pub k: usize,
}

fn solve(method: Method, params: &SystemParams, options: &SweepOptions) -> (Result<TradeoffPoint>, usize) {
    let analytic = |sol: crate::closed_form::PolicySolution| {
        TradeoffPoint::new(sol.avg_aoi, sol.avg_distortion, params.w)
    };
    match method {
        Method::Fixed => (Ok(analytic(optimal_fixed_power(params))), 0),
        Method::Save => (Ok(analytic(optimal_save_transmit(params))), 0),
        Method::Fading => (fading_power_or_grid(params).map(analytic), 0),
        Method::Mdp => {
            let point = value_iteration(params, &options.vi).and_then(|sol| {
                simulate_policy(&PolicySpec::MdpTable(sol.policy), params, options.sim_k, options.seed)
                    .map(|r| r.point)
            });
            (point, options.sim_k)
        }
        Method::Offline => {
            let k = params.horizon_k;
            let trace: EnergyTrace = bernoulli_trace(params.lambda, k, &mut SimRng::new(options.seed));
            let point = genetic_joint_optimize(params, &trace, &options.ga)
                .map(|out| crate::model::schedule_point(&out.best, params));
            (point, k)
        }
    }
}

/// Solves every requested method at every `w`, in parallel.
///
/// A failure at one entry is reported in its row and does not stop the others.
/// Rows are ordered by method, then by `w`.
pub fn tradeoff_sweep(
    params: &SystemParams,
    w_list: &[f64],
    methods: &[Method],
    options: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if w_list.is_empty() {
        return Err(Error::InvalidParams("w list is empty".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidParams("no methods requested".into()));
    }
    let jobs: Vec<(Method, f64)> = methods
        .iter()
        .flat_map(|&m| w_list.iter().map(move |&w| (m, w)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(method, w)| {
            let p = params.with_w(w);
            let (result, k) = match p.validate() {
                Ok(p) => solve(method, &p, options),
                Err(e) => (Err(e), 0),
            };
            SweepRow {
                method,
                w,
                result,
                seed: options.seed,
                k,
            }
        })
        .collect())
}
