use std::path::{Path, PathBuf};

use ehsense::closed_form::{
    fading_power_or_grid, optimal_fixed_power, optimal_save_transmit, save_w_threshold, w_threshold, PolicySolution,
    Regime,
};
use ehsense::io::{
    read_csv, schedule_from_records, schedule_records, sweep_records, table_records, write_csv, write_json,
    ScheduleRecord, TradeoffRecord,
};
use ehsense::numerics::{bernoulli_trace, SimRng};
use ehsense::online::{value_iteration, verify_structure};
use ehsense::sim::{simulate_on_trace, simulate_policy, PolicySpec};
use ehsense::sweep::{tradeoff_sweep, SweepOptions};
use ehsense::verify::run_property_suite;
use ehsense::{model::schedule_point, EnergyTrace, SystemParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, SimPolicy};
use crate::error::CliError;

/// Output directory, verbosity and the validated configuration of one run.
pub struct Context {
    pub out: PathBuf,
    pub quiet: bool,
    pub config: RunConfig,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

/// One closed-form solution, as written to CSV and to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRecord {
    pub method: String,
    pub w: f64,
    pub power: f64,
    pub period: Option<f64>,
    pub regime: Regime,
    pub avg_aoi: f64,
    pub avg_distortion: f64,
    pub weighted_cost: f64,
}

impl AnalyticRecord {
    fn new(method: &str, w: f64, sol: &PolicySolution) -> Self {
        Self {
            method: method.into(),
            w,
            power: sol.power,
            period: sol.period,
            regime: sol.regime,
            avg_aoi: sol.avg_aoi,
            avg_distortion: sol.avg_distortion,
            weighted_cost: sol.weighted_cost,
        }
    }
}

/// One generation of the genetic search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub generation: usize,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRecord {
    pub block: usize,
    pub arrival: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: String,
    pub w: f64,
    pub error: String,
}

pub fn summary_path(out: &Path, command: &str) -> PathBuf {
    out.join(format!("{command}_summary.json"))
}

fn object(value: impl Serialize) -> Map<String, Value> {
    match serde_json::to_value(value).expect("records serialize") {
        Value::Object(m) => m,
        _ => unreachable!("records are structs"),
    }
}

fn write_summary(ctx: &Context, command: &str, mut fields: Map<String, Value>) -> Result<(), CliError> {
    let mut summary = Map::new();
    summary.insert("command".into(), json!(command));
    summary.insert("complete".into(), json!(true));
    summary.append(&mut fields);
    write_json(&summary_path(&ctx.out, command), &summary)?;
    Ok(())
}

/// Marks the summary of a failed command as incomplete, keeping whatever it
/// had already written.
pub fn flag_failure(out: &Path, command: &str, error: &CliError) {
    let path = summary_path(out, command);
    let mut summary: Map<String, Value> = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    summary.insert("command".into(), json!(command));
    summary.insert("complete".into(), json!(false));
    summary.insert("error".into(), json!(error.to_string()));
    summary.insert("exit_code".into(), json!(error.exit_code()));
    if std::fs::create_dir_all(out).is_ok() {
        let _ = write_json(&path, &summary);
    }
}

fn analytic(ctx: &Context, command: &str, sol: &PolicySolution, extra: Map<String, Value>) -> Result<(), CliError> {
    let record = AnalyticRecord::new(command, ctx.config.params.w, sol);
    write_csv(&ctx.path(&format!("{command}.csv")), std::slice::from_ref(&record))?;
    let mut fields = object(&record);
    fields.extend(extra);
    write_summary(ctx, command, fields)?;
    ctx.say(format!(
        "{command}: P = {}, avg AoI = {}, avg distortion = {}, cost = {} ({:?})",
        record.power, record.avg_aoi, record.avg_distortion, record.weighted_cost, record.regime
    ));
    Ok(())
}

pub fn fixed(ctx: &Context) -> Result<(), CliError> {
    let p = &ctx.config.params;
    let sol = optimal_fixed_power(p);
    analytic(ctx, "fixed", &sol, object(json!({ "w_threshold": w_threshold(p) })))
}

pub fn save(ctx: &Context) -> Result<(), CliError> {
    let p = &ctx.config.params;
    let sol = optimal_save_transmit(p);
    analytic(ctx, "save", &sol, object(json!({ "w_threshold": save_w_threshold(p) })))
}

pub fn fading(ctx: &Context) -> Result<(), CliError> {
    let p = &ctx.config.params;
    let sol = fading_power_or_grid(p)?;
    analytic(ctx, "fading", &sol, object(json!({ "sigma2_fd": p.sigma2_fd })))
}

fn seeded_trace(params: &SystemParams, seed: u64) -> EnergyTrace {
    bernoulli_trace(params.lambda, params.horizon_k, &mut SimRng::new(seed))
}

pub fn offline(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let (params, seed) = (&cfg.params, cfg.sim.seed);
    let trace = seeded_trace(params, seed);
    let arrivals: Vec<ArrivalRecord> = trace
        .arrivals
        .iter()
        .enumerate()
        .map(|(i, &a)| ArrivalRecord { block: i + 1, arrival: a })
        .collect();
    write_csv(&ctx.path("offline_trace.csv"), &arrivals)?;

    if let Some(path) = &cfg.offline.replay {
        return replay(ctx, path, &trace);
    }

    let out = ehsense::offline::genetic_joint_optimize(params, &trace, &cfg.ga_config())?;
    write_csv(&ctx.path("offline_schedule.csv"), &schedule_records(&out.best, params))?;
    let history: Vec<HistoryRecord> = out
        .history
        .iter()
        .enumerate()
        .map(|(generation, &best_cost)| HistoryRecord { generation, best_cost })
        .collect();
    write_csv(&ctx.path("offline_history.csv"), &history)?;
    let record = TradeoffRecord::new("offline", &schedule_point(&out.best, params), seed, trace.len());
    write_csv(&ctx.path("offline.csv"), std::slice::from_ref(&record))?;

    let mut fields = object(&record);
    fields.insert("best_cost".into(), json!(out.best_cost));
    fields.insert("transmissions".into(), json!(out.best.len().saturating_sub(1)));
    fields.insert("energy_harvested".into(), json!(trace.total()));
    fields.insert("energy_used".into(), json!(out.best.powers().iter().sum::<f64>()));
    fields.insert("generations".into(), json!(out.history.len() - 1));
    write_summary(ctx, "offline", fields)?;
    ctx.say(format!(
        "offline: K = {}, {} transmissions, cost = {}",
        trace.len(),
        out.best.len().saturating_sub(1),
        out.best_cost
    ));
    Ok(())
}

fn replay(ctx: &Context, path: &Path, trace: &EnergyTrace) -> Result<(), CliError> {
    let params = &ctx.config.params;
    let records: Vec<ScheduleRecord> =
        read_csv(path).map_err(|e| CliError::Config(format!("cannot read schedule {}: {e}", path.display())))?;
    let schedule = schedule_from_records(&records)?;
    let report = simulate_on_trace(&PolicySpec::OfflineReplay(schedule), params, trace, false, None)?;
    let record = TradeoffRecord::new("replay", &report.point, ctx.config.sim.seed, trace.len());
    write_csv(&ctx.path("offline_replay.csv"), std::slice::from_ref(&record))?;
    let mut fields = object(&record);
    fields.insert("transmissions".into(), json!(report.transmissions));
    write_summary(ctx, "offline", fields)?;
    ctx.say(format!("offline replay: cost = {}", record.weighted_cost));
    Ok(())
}

pub fn online(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let params = &cfg.params;
    let sol = value_iteration(params, &cfg.vi)?;
    write_csv(&ctx.path("online_table.csv"), &table_records(&sol.values, &sol.policy))?;
    let report = verify_structure(&sol.values, &sol.policy);
    write_json(&ctx.path("online_structure.json"), &report)?;

    let mut simulated = Vec::new();
    for &policy in &cfg.sim.policies {
        let spec = match policy {
            SimPolicy::Mdp => PolicySpec::MdpTable(sol.policy.clone()),
            SimPolicy::Fixed => PolicySpec::Fixed {
                power: optimal_fixed_power(params).power,
            },
            SimPolicy::Save => {
                let s = optimal_save_transmit(params);
                PolicySpec::SaveAndTransmit {
                    power: s.power,
                    period: s.period.expect("save-and-transmit has a period"),
                    save_phase_len: None,
                }
            }
        };
        let r = simulate_policy(&spec, params, cfg.sim.k, cfg.sim.seed)?;
        simulated.push(TradeoffRecord::new(policy.name(), &r.point, r.seed, r.k));
    }
    write_csv(&ctx.path("online_sim.csv"), &simulated)?;

    let checks: Map<String, Value> = report
        .checks
        .iter()
        .map(|c| (c.id.to_string(), json!(c.passed)))
        .collect();
    let fields = object(json!({
        "w": params.w,
        "delta_max": params.delta_max,
        "b_max": params.b_max,
        "alpha": params.alpha,
        "g_estimate": sol.g_estimate,
        "sweeps": sol.sweeps,
        "last_change": sol.changes.last().copied(),
        "states": sol.values.space().len(),
        "structure_passed": report.passed(),
        "structure_total": report.checks.len(),
        "structure": checks,
        "simulated": simulated,
    }));
    write_summary(ctx, "online", fields)?;
    ctx.say(format!(
        "online: {} sweeps, g = {}, structure {}/{}",
        sol.sweeps,
        sol.g_estimate,
        report.passed(),
        report.checks.len()
    ));
    for c in report.checks.iter().filter(|c| !c.passed) {
        ctx.say(format!("  ({}) {} failed at {} states", c.id, c.name, c.violations));
    }
    for r in &simulated {
        ctx.say(format!("  simulated {}: cost = {}", r.method, r.weighted_cost));
    }
    Ok(())
}

pub fn tradeoff(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let options = SweepOptions {
        sim_k: cfg.sim.k,
        seed: cfg.sim.seed,
        ga: cfg.ga_config(),
        vi: cfg.vi,
    };
    let w_list = cfg.w_list()?;
    let rows = tradeoff_sweep(&cfg.params, &w_list, &cfg.sweep.methods, &options)?;
    let (records, failed) = sweep_records(&rows);
    write_csv(&ctx.path("tradeoff.csv"), &records)?;
    let failures: Vec<FailureRecord> = failed
        .into_iter()
        .map(|(method, w, error)| FailureRecord { method, w, error })
        .collect();
    if !failures.is_empty() {
        write_csv(&ctx.path("tradeoff_failures.csv"), &failures)?;
    }
    let methods: Vec<&str> = cfg.sweep.methods.iter().map(|m| m.name()).collect();
    write_summary(
        ctx,
        "tradeoff",
        object(json!({
            "w_list": cfg.sweep.w_list,
            "methods": methods,
            "rows": records.len(),
            "failed": failures.len(),
        })),
    )?;
    ctx.say(format!("tradeoff: {} rows, {} failed", records.len(), failures.len()));
    if let Some(err) = rows.into_iter().find_map(|r| r.result.err()) {
        for f in &failures {
            eprintln!("  {} at w = {}: {}", f.method, f.w, f.error);
        }
        return Err(err.into());
    }
    Ok(())
}

pub fn verify(ctx: &Context) -> Result<(), CliError> {
    let outcomes = run_property_suite(&ctx.config.params, ctx.config.sim.seed);
    let records: Vec<PropertyRecord> = outcomes
        .iter()
        .map(|o| PropertyRecord {
            name: o.name.to_string(),
            passed: o.passed,
            detail: o.detail.clone(),
        })
        .collect();
    write_csv(&ctx.path("verify.csv"), &records)?;
    let passed = records.iter().filter(|r| r.passed).count();
    write_summary(
        ctx,
        "verify",
        object(json!({ "passed": passed, "total": records.len() })),
    )?;
    for r in &records {
        ctx.say(format!("{} {}: {}", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail));
    }
    ctx.say(format!("verify: {passed}/{} properties hold", records.len()));
    if passed < records.len() {
        return Err(CliError::Failed(format!(
            "{} of {} properties failed",
            records.len() - passed,
            records.len()
        )));
    }
    Ok(())
}
