//! System parameters, the distortion law and AoI accounting.
//!
//! Blocks are indexed from 1. A virtual busy block at index 0 with zero power
//! initialises both the AoI process and the distortion (`D_0 = sigma2_theta`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar model constants shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Probability that one unit of energy is harvested in a block.
    pub lambda: f64,
    /// Source variance.
    pub sigma2_theta: f64,
    /// Observation-noise variance.
    pub sigma2_ob: f64,
    /// Normalised channel-noise variance.
    pub sigma2_ch: f64,
    /// Weight of the distortion term in the objective.
    pub w: f64,
    /// Discount factor of the online problem.
    pub alpha: f64,
    /// AoI cap of the online state space.
    pub delta_max: usize,
    /// Energy-buffer cap of the online state space.
    pub b_max: usize,
    /// Mean power gain of a Rayleigh-faded channel, if fading is modelled.
    pub sigma2_fd: Option<f64>,
    /// Number of blocks in a finite run.
    pub horizon_k: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            lambda: 0.4,
            sigma2_theta: 1.0,
            sigma2_ob: 0.5,
            sigma2_ch: 2.8,
            w: 200.0,
            alpha: 0.999,
            delta_max: 100,
            b_max: 30,
            sigma2_fd: Some(0.7),
            horizon_k: 100,
        }
    }
}

impl SystemParams {
    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    /// Checks every invariant and returns the parameters unchanged on success.
    ///
    /// `w = 0` is accepted as the degenerate pure-AoI objective, and
    /// `sigma2_ob = sigma2_theta` as a sensor whose observations carry no
    /// information.
    pub fn validate(&self) -> Result<Self> {
        let mut problems = Vec::new();
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            problems.push(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if !(self.sigma2_ob >= 0.0 && self.sigma2_ob.is_finite()) {
            problems.push(format!("sigma2_ob must be >= 0, got {}", self.sigma2_ob));
        }
        if !(self.sigma2_theta >= self.sigma2_ob && self.sigma2_theta > 0.0)
            || !self.sigma2_theta.is_finite()
        {
            problems.push(format!(
                "sigma2_theta must be positive and >= sigma2_ob, got {}",
                self.sigma2_theta
            ));
        }
        if !(self.sigma2_ch > 0.0 && self.sigma2_ch.is_finite()) {
            problems.push(format!("sigma2_ch must be > 0, got {}", self.sigma2_ch));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            problems.push(format!("w must be >= 0, got {}", self.w));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            problems.push(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.delta_max < 2 {
            problems.push(format!("delta_max must be >= 2, got {}", self.delta_max));
        }
        if self.b_max < 1 {
            problems.push(format!("b_max must be >= 1, got {}", self.b_max));
        }
        if self.horizon_k < 1 {
            problems.push("horizon_k must be >= 1".to_string());
        }
        if let Some(fd) = self.sigma2_fd {
            if !(fd > 0.0 && fd < 1.0) {
                problems.push(format!("sigma2_fd must lie in (0, 1), got {fd}"));
            }
        }
        if problems.is_empty() {
            Ok(*self)
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

/// Distortion of the reconstruction after a busy block transmitted at power `p`.
///
/// Strictly decreasing and convex in `p`; equals `sigma2_theta` at `p = 0`
/// and tends to `sigma2_ob` as `p` grows.
pub fn distortion(p: f64, params: &SystemParams) -> f64 {
    debug_assert!(p >= 0.0, "power must be non-negative");
    params.sigma2_ob
        + (params.sigma2_theta - params.sigma2_ob) * params.sigma2_ch / (params.sigma2_ch + p)
}

/// Inter-departure times `Y` for inter-transmission times `X`:
/// `Y_1 = X_1 + 1`, `Y_L = X_L - 1`, `Y_l = X_l` otherwise.
pub fn departure_intervals(inter_tx: &[usize]) -> Result<Vec<usize>> {
    let n = inter_tx.len();
    if n < 2 {
        return Err(Error::InvalidSchedule(format!(
            "need at least two inter-transmission times, got {n}"
        )));
    }
    if let Some(pos) = inter_tx.iter().position(|&x| x == 0) {
        return Err(Error::InvalidSchedule(format!("X_{} is zero", pos + 1)));
    }
    let mut y = inter_tx.to_vec();
    y[0] += 1;
    y[n - 1] -= 1;
    Ok(y)
}

/// A feasible offline plan: `L` inter-transmission times and `L - 1` busy-block powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    inter_tx: Vec<usize>,
    powers: Vec<f64>,
    horizon_k: usize,
}

impl Schedule {
    pub fn new(inter_tx: Vec<usize>, powers: Vec<f64>) -> Result<Self> {
        if inter_tx.is_empty() {
            return Err(Error::InvalidSchedule("no inter-transmission times".into()));
        }
        if let Some(pos) = inter_tx.iter().position(|&x| x == 0) {
            return Err(Error::InvalidSchedule(format!("X_{} is zero", pos + 1)));
        }
        if powers.len() + 1 != inter_tx.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} inter-transmission times need {} powers, got {}",
                inter_tx.len(),
                inter_tx.len() - 1,
                powers.len()
            )));
        }
        if let Some(pos) = powers.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidSchedule(format!(
                "P_{} = {} is not a non-negative finite power",
                pos + 1,
                powers[pos]
            )));
        }
        let horizon_k = inter_tx.iter().sum();
        Ok(Self {
            inter_tx,
            powers,
            horizon_k,
        })
    }

    /// A schedule that never transmits: a single interval spanning the horizon.
    pub fn idle(horizon_k: usize) -> Result<Self> {
        Self::new(vec![horizon_k], Vec::new())
    }

    pub fn inter_tx(&self) -> &[usize] {
        &self.inter_tx
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn horizon_k(&self) -> usize {
        self.horizon_k
    }

    /// Number of inter-transmission intervals `L`.
    pub fn len(&self) -> usize {
        self.inter_tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inter_tx.is_empty()
    }

    /// Inter-departure times; a schedule with no busy block has `Y = [K]`.
    pub fn departures(&self) -> Vec<usize> {
        if self.inter_tx.len() < 2 {
            vec![self.horizon_k]
        } else {
            departure_intervals(&self.inter_tx).expect("validated on construction")
        }
    }

    /// 1-based indices of the busy blocks. Busy block `l` is the first block
    /// of `X_{l+1}`.
    pub fn busy_blocks(&self) -> Vec<usize> {
        let mut start = 0;
        self.inter_tx[..self.inter_tx.len() - 1]
            .iter()
            .map(|x| {
                start += x;
                start + 1
            })
            .collect()
    }

    /// Energy harvested during each inter-transmission time `X_l`.
    pub fn interval_energy(&self, trace: &EnergyTrace) -> Result<Vec<f64>> {
        interval_energy(&self.inter_tx, trace)
    }
}

/// Energy `e_l` harvested during each inter-transmission time.
pub fn interval_energy(inter_tx: &[usize], trace: &EnergyTrace) -> Result<Vec<f64>> {
    let k: usize = inter_tx.iter().sum();
    if k != trace.len() {
        return Err(Error::InvalidSchedule(format!(
            "schedule spans {k} blocks but the trace has {}",
            trace.len()
        )));
    }
    let mut start = 0;
    Ok(inter_tx
        .iter()
        .map(|&x| {
            let e = trace.arrivals[start..start + x]
                .iter()
                .map(|&a| f64::from(a))
                .sum();
            start += x;
            e
        })
        .collect())
}

/// Per-block Bernoulli unit-energy arrivals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub arrivals: Vec<u8>,
    pub seed: u64,
}

impl EnergyTrace {
    pub fn new(arrivals: Vec<u8>, seed: u64) -> Result<Self> {
        if let Some(pos) = arrivals.iter().position(|&a| a > 1) {
            return Err(Error::Domain(format!(
                "arrival {} at block {} is not 0 or 1",
                arrivals[pos],
                pos + 1
            )));
        }
        Ok(Self { arrivals, seed })
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.arrivals.iter().map(|&a| f64::from(a)).sum()
    }
}

/// Average AoI, average distortion and their weighted sum for one policy at one `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub avg_aoi: f64,
    pub avg_distortion: f64,
    pub weighted_cost: f64,
    pub w_used: f64,
}

impl TradeoffPoint {
    pub fn new(avg_aoi: f64, avg_distortion: f64, w: f64) -> Self {
        Self {
            avg_aoi,
            avg_distortion,
            weighted_cost: avg_aoi + w * avg_distortion,
            w_used: w,
        }
    }
}

/// Per-horizon averages of an offline schedule.
pub fn schedule_point(s: &Schedule, params: &SystemParams) -> TradeoffPoint {
    let k = s.horizon_k() as f64;
    let y = s.departures();
    let mut aoi = 0.0;
    let mut dist = 0.0;
    let mut level = params.sigma2_theta;
    for (l, &yl) in y.iter().enumerate() {
        let yl = yl as f64;
        aoi += (yl + yl * yl) / 2.0;
        dist += level * yl;
        if let Some(&p) = s.powers().get(l) {
            level = distortion(p, params);
        }
    }
    TradeoffPoint::new(aoi / k, dist / k, params.w)
}

/// Weighted-sum AoI and distortion of an offline schedule averaged over its horizon.
pub fn schedule_cost(s: &Schedule, params: &SystemParams) -> f64 {
    schedule_point(s, params).weighted_cost
}

/// AoI in blocks `1..=k` given the 1-based blocks in which busy blocks complete.
///
/// The AoI in block `n` is `n` minus the most recent completion strictly before
/// `n`, with a virtual completion at block 0.
pub fn aoi_process(completions: &[usize], k: usize) -> Vec<u64> {
    assert!(
        completions.windows(2).all(|w| w[0] < w[1]),
        "completion blocks must be strictly increasing"
    );
    assert!(
        completions.last().is_none_or(|&c| c <= k),
        "completion beyond the horizon"
    );
    let mut out = Vec::with_capacity(k);
    let mut last = 0usize;
    let mut next = completions.iter().peekable();
    for n in 1..=k {
        out.push((n - last) as u64);
        if next.peek() == Some(&&n) {
            last = n;
            next.next();
        }
    }
    out
}

/// Outcome of an energy-causality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalityReport {
    pub causal: bool,
    /// Smallest busy-block index `l` (1-based) whose cumulative power exceeds
    /// the energy harvested before it starts.
    pub first_violation: Option<usize>,
}

const CAUSALITY_SLACK: f64 = 1e-9;

/// Checks `sum_{i<=l} P_i <= sum_{i<=l} e_i` for every busy block `l`.
pub fn check_causality(s: &Schedule, trace: &EnergyTrace) -> Result<CausalityReport> {
    let energy = s.interval_energy(trace)?;
    let mut used = 0.0;
    let mut harvested = 0.0;
    for (l, (&p, &e)) in s.powers().iter().zip(&energy).enumerate() {
        used += p;
        harvested += e;
        if used > harvested + CAUSALITY_SLACK {
            return Ok(CausalityReport {
                causal: false,
                first_violation: Some(l + 1),
            });
        }
    }
    Ok(CausalityReport {
        causal: true,
        first_violation: None,
    })
}
