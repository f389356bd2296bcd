use std::path::{Path, PathBuf};

use ehsense::offline::GaConfig;
use ehsense::online::ViOptions;
use ehsense::sweep::{parse_w_range, Method};
use ehsense::SystemParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// The JSON run configuration. Every block is optional; missing fields take
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub ga: GaSection,
    pub vi: ViOptions,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub offline: OfflineSection,
}

/// Genetic-search settings. The seed comes from `sim.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub n_pop: usize,
    pub n_iter: usize,
    pub q_sel: f64,
    pub d_cross: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            n_pop: g.n_pop,
            n_iter: g.n_iter,
            q_sel: g.q_sel,
            d_cross: g.d_cross,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Blocks per Monte-Carlo run.
    #[serde(rename = "K")]
    pub k: usize,
    /// Seed of every random draw in the run.
    pub seed: u64,
    /// Policies the `online` command simulates next to each other.
    pub policies: Vec<SimPolicy>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            k: 100_000,
            seed: 0,
            policies: vec![SimPolicy::Mdp, SimPolicy::Save],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimPolicy {
    Mdp,
    Fixed,
    Save,
}

impl SimPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SimPolicy::Mdp => "mdp",
            SimPolicy::Fixed => "fixed",
            SimPolicy::Save => "save",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `"start:step:stop"` or a single value.
    pub w_list: String,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            w_list: "20:25:500".into(),
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineSection {
    /// Schedule CSV to replay on the seeded trace instead of searching.
    pub replay: Option<PathBuf>,
}

impl RunConfig {
    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            n_pop: self.ga.n_pop,
            n_iter: self.ga.n_iter,
            q_sel: self.ga.q_sel,
            d_cross: self.ga.d_cross,
            seed: self.sim.seed,
        }
    }

    pub fn w_list(&self) -> Result<Vec<f64>, CliError> {
        parse_w_range(&self.sweep.w_list).map_err(config_error)
    }

    /// Checks every block, so that no command starts on a bad configuration.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if let Err(e) = self.params.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.ga_config().validate(self.params.horizon_k) {
            problems.push(format!("ga: {e}"));
        }
        if !(self.vi.eps > 0.0) {
            problems.push(format!("vi.eps must be positive, got {}", self.vi.eps));
        }
        if self.vi.max_sweeps == 0 {
            problems.push("vi.max_sweeps must be at least 1".into());
        }
        if self.sim.k == 0 {
            problems.push("sim.K must be at least 1".into());
        }
        if self.sim.policies.is_empty() {
            problems.push("sim.policies is empty".into());
        }
        if let Err(e) = parse_w_range(&self.sweep.w_list) {
            problems.push(format!("sweep: {e}"));
        }
        if self.sweep.methods.is_empty() {
            problems.push("sweep.methods is empty".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}

fn config_error(e: ehsense::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Dotted paths of every key in `given` that `known` lacks.
fn unknown_keys(given: &Value, known: &Value, prefix: &str, out: &mut Vec<String>) {
    let (Value::Object(given), Value::Object(known)) = (given, known) else {
        return;
    };
    for (key, value) in given {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match known.get(key) {
            Some(k) => unknown_keys(value, k, &path, out),
            None => out.push(path),
        }
    }
}

/// Parses a configuration, rejecting every unknown key at once.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("not valid JSON: {e}")))?;
    if !value.is_object() {
        return Err(CliError::Config("the configuration must be a JSON object".into()));
    }
    let known = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    let mut unknown = Vec::new();
    unknown_keys(&value, &known, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let config: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads the file at `path`, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        config.sim.seed = s;
    }
    Ok(config)
}
