//! Closed-form and fixed-point optimisers for the long-horizon policies.
//!
//! All three regimes minimise `avg_aoi(P) + w * avg_distortion(P)` over a single
//! power `P` subject to a lower bound:
//!
//! | regime            | AoI                   | lower bound |
//! |-------------------|-----------------------|-------------|
//! | fixed power       | `(P + 1) / (2 lambda)`      | `1`         |
//! | save-and-transmit | `(P + lambda) / (2 lambda)` | `lambda`    |
//! | Rayleigh fading   | `(P + 1) / (2 lambda)`      | `1`         |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{distortion, SystemParams};
use crate::numerics::scaled_exp_integral_e1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The power sits on the regime's lower bound.
    Boundary,
    /// The power is the stationary point of the objective.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySolution {
    pub power: f64,
    pub avg_aoi: f64,
    pub avg_distortion: f64,
    pub weighted_cost: f64,
    pub regime: Regime,
    /// Inter-transmission time of the save-and-transmit policy, `P / lambda`.
    pub period: Option<f64>,
}

impl PolicySolution {
    fn assemble(power: f64, avg_aoi: f64, avg_distortion: f64, w: f64, regime: Regime) -> Self {
        Self {
            power,
            avg_aoi,
            avg_distortion,
            weighted_cost: avg_aoi + w * avg_distortion,
            regime,
            period: None,
        }
    }
}

/// Weight below which fixed-power transmission always uses `P = 1`.
pub fn w_threshold(params: &SystemParams) -> f64 {
    let ch = params.sigma2_ch;
    (1.0 + ch).powi(2) / (2.0 * params.lambda * params.sigma2_theta * ch)
}

/// Observation-noise level above which fixed-power transmission uses `P = 1`.
/// Negative when `w < w0`.
pub fn ob_threshold(params: &SystemParams, w: f64) -> f64 {
    params.sigma2_theta * (1.0 - w_threshold(params) / w)
}

/// Save-and-transmit counterpart of [`w_threshold`], with lower bound `lambda`.
pub fn save_w_threshold(params: &SystemParams) -> f64 {
    let ch = params.sigma2_ch;
    (params.lambda + ch).powi(2) / (2.0 * params.lambda * params.sigma2_theta * ch)
}

pub fn save_ob_threshold(params: &SystemParams, w: f64) -> f64 {
    params.sigma2_theta * (1.0 - save_w_threshold(params) / w)
}

/// Renewal-average AoI of fixed-power transmission.
pub fn fixed_power_aoi(power: f64, params: &SystemParams) -> f64 {
    (power + 1.0) / (2.0 * params.lambda)
}

pub fn save_transmit_aoi(power: f64, params: &SystemParams) -> f64 {
    (power + params.lambda) / (2.0 * params.lambda)
}

/// Objective of the fixed-power problem at an arbitrary power.
pub fn fixed_power_objective(power: f64, params: &SystemParams) -> f64 {
    fixed_power_aoi(power, params) + params.w * distortion(power, params)
}

pub fn save_transmit_objective(power: f64, params: &SystemParams) -> f64 {
    save_transmit_aoi(power, params) + params.w * distortion(power, params)
}

/// Derivative of [`fixed_power_objective`] with respect to the power.
pub fn fixed_power_gradient(power: f64, params: &SystemParams) -> f64 {
    let ch = params.sigma2_ch;
    1.0 / (2.0 * params.lambda)
        - params.w * (params.sigma2_theta - params.sigma2_ob) * ch / (ch + power).powi(2)
}

// sqrt(2 lambda w (theta - ob) ch) - ch: zero of the shared gradient.
fn stationary_power(params: &SystemParams) -> f64 {
    let ch = params.sigma2_ch;
    (2.0 * params.lambda * params.w * (params.sigma2_theta - params.sigma2_ob) * ch).sqrt() - ch
}

/// Optimal fixed transmit power.
///
/// The boundary power `1` is used whenever `w <= w0` or
/// `sigma2_ob >= sigma2_ob0`; otherwise the stationary point, which need not be
/// an integer.
pub fn optimal_fixed_power(params: &SystemParams) -> PolicySolution {
    let boundary = params.w <= w_threshold(params) || params.sigma2_ob >= ob_threshold(params, params.w);
    let (power, regime) = if boundary {
        (1.0, Regime::Boundary)
    } else {
        (stationary_power(params), Regime::Interior)
    };
    PolicySolution::assemble(
        power,
        fixed_power_aoi(power, params),
        distortion(power, params),
        params.w,
        regime,
    )
}

/// Optimal save-and-transmit power and period, the long-horizon performance limit.
pub fn optimal_save_transmit(params: &SystemParams) -> PolicySolution {
    let boundary =
        params.w <= save_w_threshold(params) || params.sigma2_ob >= save_ob_threshold(params, params.w);
    let (power, regime) = if boundary {
        (params.lambda, Regime::Boundary)
    } else {
        (stationary_power(params), Regime::Interior)
    };
    let mut sol = PolicySolution::assemble(
        power,
        save_transmit_aoi(power, params),
        distortion(power, params),
        params.w,
        regime,
    );
    sol.period = Some(power / params.lambda);
    sol
}

fn fading_gain(params: &SystemParams) -> Result<f64> {
    params
        .sigma2_fd
        .ok_or_else(|| Error::InvalidParams("sigma2_fd is required for fading".into()))
}

/// Distortion averaged over an exponential channel power gain with mean `sigma2_fd`:
/// `sigma2_ob + (sigma2_theta - sigma2_ob) z e^z E1(z)`, `z = sigma2_ch / (sigma2_fd P)`.
pub fn expected_fading_distortion(power: f64, params: &SystemParams) -> Result<f64> {
    let fd = fading_gain(params)?;
    if !(power > 0.0) {
        return Err(Error::Domain(format!("fading power must be > 0, got {power}")));
    }
    if power.is_infinite() {
        return Ok(params.sigma2_ob);
    }
    let z = params.sigma2_ch / (fd * power);
    Ok(params.sigma2_ob + (params.sigma2_theta - params.sigma2_ob) * z * scaled_exp_integral_e1(z)?)
}

pub fn fading_objective(power: f64, params: &SystemParams) -> Result<f64> {
    Ok(fixed_power_aoi(power, params) + params.w * expected_fading_distortion(power, params)?)
}

/// Right-hand side of the fading stationarity condition,
/// `2 lambda w (theta - ob) ((z^2 + z) e^z E1(z) - z)`.
pub fn fading_fixed_point_map(power: f64, params: &SystemParams) -> Result<f64> {
    let fd = fading_gain(params)?;
    let z = params.sigma2_ch / (fd * power);
    let scaled = scaled_exp_integral_e1(z)?;
    Ok(2.0 * params.lambda * params.w * (params.sigma2_theta - params.sigma2_ob) * ((z * z + z) * scaled - z))
}

const FADING_TOL: f64 = 1e-9;
const FADING_MAX_ITER: usize = 10_000;

/// Optimal power under block Rayleigh fading.
///
/// Successive substitution on [`fading_fixed_point_map`] from `P = 1`,
/// projected onto `P >= 1`. Once two consecutive steps change sign the step is
/// halved for the rest of the run.
pub fn optimal_fading_power(params: &SystemParams) -> Result<PolicySolution> {
    fading_gain(params)?;
    let mut power = 1.0_f64;
    let mut prev_step: Option<f64> = None;
    let mut damped = false;
    let mut last_change = f64::INFINITY;
    for _ in 0..FADING_MAX_ITER {
        let target = fading_fixed_point_map(power, params)?.max(1.0);
        let step = target - power;
        if let Some(prev) = prev_step {
            if prev * step < 0.0 {
                damped = true;
            }
        }
        let next = if damped { power + 0.5 * step } else { target };
        last_change = (next - power).abs();
        power = next;
        prev_step = Some(step);
        if last_change < FADING_TOL {
            let regime = if power <= 1.0 {
                Regime::Boundary
            } else {
                Regime::Interior
            };
            return Ok(PolicySolution::assemble(
                power,
                fixed_power_aoi(power, params),
                expected_fading_distortion(power, params)?,
                params.w,
                regime,
            ));
        }
    }
    Err(Error::NoConvergence {
        solver: "fading fixed point",
        iterations: FADING_MAX_ITER,
        last_change,
    })
}

/// Grid minimiser of [`fading_objective`] over `[lo, hi]`, used when the fixed
/// point fails to settle.
pub fn fading_grid_search(params: &SystemParams, lo: f64, hi: f64, step: f64) -> Result<PolicySolution> {
    if !(lo >= 1.0 && hi > lo && step > 0.0) {
        return Err(Error::Domain(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step).floor() as usize;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=n {
        let p = lo + i as f64 * step;
        let j = fading_objective(p, params)?;
        if j < best.1 {
            best = (p, j);
        }
    }
    let power = best.0;
    let regime = if power <= lo { Regime::Boundary } else { Regime::Interior };
    Ok(PolicySolution::assemble(
        power,
        fixed_power_aoi(power, params),
        expected_fading_distortion(power, params)?,
        params.w,
        regime,
    ))
}

/// Fading optimum, falling back to a grid of step 1e-3 on `[1, 100]` when the
/// fixed point does not converge.
pub fn fading_power_or_grid(params: &SystemParams) -> Result<PolicySolution> {
    match optimal_fading_power(params) {
        Err(Error::NoConvergence { .. }) => fading_grid_search(params, 1.0, 100.0, 1e-3),
        other => other,
    }
}
