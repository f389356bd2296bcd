//! Self-check suite run by `ehsense verify`.
//!
//! The checks are cheaper versions of the test suite's oracles so that an
//! installed binary can confirm its own numerics.

use rand::Rng;
use serde::Serialize;

use crate::closed_form::{
    fading_grid_search, fixed_power_objective, optimal_fading_power, optimal_fixed_power,
    optimal_save_transmit,
};
use crate::model::{check_causality, schedule_cost, EnergyTrace, Schedule, SystemParams};
use crate::numerics::{bernoulli_trace, exp_integral_e1, SimRng};
use crate::offline::{brute_force_offline, genetic_joint_optimize, plan_with_intervals, GaConfig, MIN_BUSY_POWER};
use crate::online::{bellman_residual, value_iteration, verify_structure, ViOptions};
use crate::sim::{simulate_policy, PolicySpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl PropertyOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Largest cost decrease obtained by moving `step` energy from one busy block
/// to a later one. Forward moves never break causality, so a positive value
/// means the powers are not optimal.
pub fn forward_transfer_gain(schedule: &Schedule, params: &SystemParams, step: f64) -> f64 {
    let base = schedule_cost(schedule, params);
    let powers = schedule.powers();
    let mut best: f64 = 0.0;
    for i in 0..powers.len() {
        if powers[i] - step < MIN_BUSY_POWER {
            continue;
        }
        for j in i + 1..powers.len() {
            let mut moved = powers.to_vec();
            moved[i] -= step;
            moved[j] += step;
            let s = Schedule::new(schedule.inter_tx().to_vec(), moved).expect("non-negative powers");
            best = best.max(base - schedule_cost(&s, params));
        }
    }
    best
}

fn e1_reference() -> PropertyOutcome {
    let cases = [(1.0, 0.219_383_934_395_520_3), (0.1, 1.822_923_958_419_390_7), (5.0, 0.001_148_295_591_275_325_7)];
    let worst = cases
        .iter()
        .map(|&(z, v)| (exp_integral_e1(z).expect("positive argument") - v).abs() / v)
        .fold(0.0, f64::max);
    PropertyOutcome::new("exponential integral reference values", worst < 1e-12, format!("max relative error {worst:e}"))
}

fn fixed_vs_grid(rng: &mut SimRng) -> PropertyOutcome {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let theta = rng.gen_range(0.5..2.0);
        let p = SystemParams {
            lambda: rng.gen_range(0.1..=1.0),
            sigma2_theta: theta,
            sigma2_ob: rng.gen_range(0.0..theta),
            sigma2_ch: rng.gen_range(0.5..=5.0),
            w: rng.gen_range(0.1..=500.0),
            ..SystemParams::default()
        };
        let grid = (0..=99_000)
            .map(|i| fixed_power_objective(1.0 + i as f64 * 1e-3, &p))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(optimal_fixed_power(&p).weighted_cost - grid);
    }
    PropertyOutcome::new("fixed power beats a grid search", worst <= 1e-6, format!("worst excess {worst:e}"))
}

fn save_beats_fixed(params: &SystemParams) -> PropertyOutcome {
    let bad: Vec<f64> = [20.0, 50.0, 100.0, 200.0, 400.0]
        .into_iter()
        .filter(|&w| {
            let p = params.with_w(w);
            optimal_save_transmit(&p).weighted_cost > optimal_fixed_power(&p).weighted_cost
        })
        .collect();
    PropertyOutcome::new("save-and-transmit no worse than fixed power", bad.is_empty(), format!("violations at w = {bad:?}"))
}

fn renewal_aoi(params: &SystemParams, seed: u64) -> PropertyOutcome {
    let p = SystemParams { lambda: 0.4, ..*params };
    match simulate_policy(&PolicySpec::Fixed { power: 5.0 }, &p, 200_000, seed) {
        Ok(r) => {
            let rel = (r.point.avg_aoi - 7.5).abs() / 7.5;
            PropertyOutcome::new("renewal AoI of fixed power", rel < 0.02, format!("avg AoI {} (relative error {rel:.4})", r.point.avg_aoi))
        }
        Err(e) => PropertyOutcome::new("renewal AoI of fixed power", false, e.to_string()),
    }
}

fn offline_checks(params: &SystemParams, seed: u64) -> Vec<PropertyOutcome> {
    let mut rng = SimRng::new(seed);
    let mut gap: f64 = 1.0;
    let mut gain: f64 = 0.0;
    let mut acausal = 0;
    for i in 0..5 {
        let trace: EnergyTrace = bernoulli_trace(params.lambda, 10, &mut SimRng::new(seed.wrapping_add(i)));
        let Ok((exact, exact_cost)) = brute_force_offline(params, &trace) else {
            continue;
        };
        let cfg = GaConfig {
            n_pop: 60,
            n_iter: 100,
            d_cross: 4,
            seed: rng.gen(),
            ..GaConfig::default()
        };
        if let Ok(ga) = genetic_joint_optimize(params, &trace, &cfg) {
            gap = gap.max(ga.best_cost / exact_cost);
            if !check_causality(&ga.best, &trace).map(|c| c.causal).unwrap_or(false) {
                acausal += 1;
            }
        }
        gain = gain.max(forward_transfer_gain(&exact, params, 1e-3));
        let x: Vec<usize> = vec![2; 5];
        if let Ok((s, _)) = plan_with_intervals(&x, &trace, params) {
            gain = gain.max(forward_transfer_gain(&s, params, 1e-3));
        }
    }
    vec![
        PropertyOutcome::new("genetic search within 5% of exhaustive", gap <= 1.05, format!("worst ratio {gap:.5}")),
        PropertyOutcome::new("water-filling admits no improving forward transfer", gain <= 1e-6, format!("largest gain {gain:e}")),
        PropertyOutcome::new("offline schedules are energy-causal", acausal == 0, format!("{acausal} acausal schedules")),
    ]
}

fn mdp_checks(p: &SystemParams) -> Vec<PropertyOutcome> {
    let options = ViOptions::default();
    match value_iteration(p, &options) {
        Ok(sol) => {
            let residual = bellman_residual(&sol.values, p).unwrap_or(f64::INFINITY);
            let report = verify_structure(&sol.values, &sol.policy);
            let mut out = vec![PropertyOutcome::new(
                "value iteration Bellman residual",
                residual < options.eps,
                format!("residual {residual:e} after {} sweeps", sol.sweeps),
            )];
            out.extend(report.checks.iter().map(|c| {
                PropertyOutcome::new(c.name, c.passed, format!("{} of {} comparisons violated", c.violations, c.checked))
            }));
            out
        }
        Err(e) => vec![PropertyOutcome::new("value iteration Bellman residual", false, e.to_string())],
    }
}

fn fading_checks(params: &SystemParams) -> PropertyOutcome {
    let p = SystemParams {
        sigma2_fd: params.sigma2_fd.or(Some(0.7)),
        ..*params
    };
    let result = optimal_fading_power(&p).and_then(|fp| {
        let grid = fading_grid_search(&p, 1.0, 100.0, 1e-3)?;
        Ok((fp, grid))
    });
    match result {
        Ok((fp, grid)) => {
            let plain = optimal_fixed_power(&p).weighted_cost;
            let ok = (fp.power - grid.power).abs() < 1e-3 && fp.weighted_cost >= plain;
            PropertyOutcome::new(
                "fading fixed point matches grid and is no better than no fading",
                ok,
                format!("power {} vs grid {}, cost {} vs {}", fp.power, grid.power, fp.weighted_cost, plain),
            )
        }
        Err(e) => PropertyOutcome::new("fading fixed point matches grid and is no better than no fading", false, e.to_string()),
    }
}

/// Runs every check. The MDP checks use the caps, `alpha` and `w` of `params`;
/// the renewal check fixes `lambda = 0.4` and the offline checks use `K = 10`.
pub fn run_property_suite(params: &SystemParams, seed: u64) -> Vec<PropertyOutcome> {
    let mut rng = SimRng::new(seed);
    let mut out = vec![e1_reference(), fixed_vs_grid(&mut rng), save_beats_fixed(params), renewal_aoi(params, seed)];
    out.extend(offline_checks(params, seed));
    out.extend(mdp_checks(params));
    out.push(fading_checks(params));
    out
}
