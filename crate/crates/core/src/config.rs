//! Run configuration: every model constant under a stable dotted key, the
//! arguments of each subcommand, and the simulation settings. Files are
//! TOML; `--set key=value` overrides win over file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::competition::CompetitionParams;
use crate::experiments::{ForgettingArgs, FrequencyArgs, GrowArgs, InterferenceArgs, SavingsArgs};
use crate::growth::{GrowthConfig, GrowthError};
use crate::neuron::NeuronParams;
use crate::synapse::SynapseParams;
use crate::{ModelParams, ParamError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("bad override {0:?}: expected key=value")]
    Override(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Event,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    /// Left unset, each subcommand runs in its natural mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: crate::numerics::DEFAULT_DT, seed: 0, mode: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StdpArgs {
    /// Pairing intervals; unset means `±k/rate` for `k = 1..=10`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_ts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HebbArgs {
    pub f_pre: Vec<f64>,
    pub f_post: Vec<f64>,
    /// Unset means `5 / c4_epsp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Default for HebbArgs {
    fn default() -> Self {
        Self { f_pre: vec![0.1, 0.5, 1.0], f_post: vec![0.1, 0.5, 1.0], duration: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogicArgs {
    pub expr: String,
}

impl Default for LogicArgs {
    fn default() -> Self {
        Self { expr: crate::logic::XOR_SOURCE.to_string() }
    }
}

/// Recorded in run manifests so a manifest can only replay its own
/// subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub subcommand: String,
    pub version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
    pub sim: SimConfig,
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub competition: CompetitionParams,
    pub growth: GrowthConfig,
    pub stdp: StdpArgs,
    pub hebb: HebbArgs,
    pub freq: FrequencyArgs,
    pub forget: ForgettingArgs,
    pub interfere: InterferenceArgs,
    pub savings: SavingsArgs,
    pub grow: GrowArgs,
    pub logic: LogicArgs,
}

impl RunConfig {
    pub fn model_params(&self) -> ModelParams {
        ModelParams { neuron: self.neuron, synapse: self.synapse, competition: self.competition, dt: self.sim.dt }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params().validate()?;
        self.growth.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn parse_error(path: &str, text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map_or(1, |s| line_of(text, s.start));
    ConfigError::Parse { path: path.to_string(), line, message: err.message().trim().to_string() }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(item.to_string()));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Invalid(format!("override {key}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), override_value(raw.trim()));
    Ok(())
}

/// Parses config text, applies overrides in order and validates. `origin`
/// names the source in error messages.
pub fn parse_config(text: &str, origin: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    // a first typed pass over the raw text keeps line numbers for unknown
    // keys and type errors
    toml::from_str::<RunConfig>(text).map_err(|e| parse_error(origin, text, e))?;
    let mut table: toml::Table = text.parse().map_err(|e| parse_error(origin, text, e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(format!("override: {}", e.message().trim())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads `path` (defaults only when `None`) and applies `overrides`.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
            parse_config(&text, &p.display().to_string(), overrides)
        }
        None => parse_config("", "<defaults>", overrides),
    }
}

/// `(key, symbol, meaning)` for every model constant.
pub const PARAMETER_DOCS: &[(&str, &str, &str)] = &[
    ("neuron.c0", "c_0", "firing threshold on charge"),
    ("neuron.c1", "c_1", "maximum charge rate"),
    ("neuron.c2", "c_2", "drive sensitivity of the charge rate"),
    ("neuron.c3_epsp", "c_3", "EPSP growth per unit w_eff * f_in"),
    ("neuron.c4_epsp", "c_4", "EPSP decay rate"),
    ("neuron.c5", "c_5", "LTP gain"),
    ("neuron.c6_chan", "c_6", "channel recovery rate"),
    ("neuron.c7", "c_7", "channel ceiling"),
    ("neuron.c8", "c_8", "LTD gain"),
    ("neuron.k_fatigue", "k_fatigue", "partial channel fatigue per unit subthreshold EPSP"),
    ("neuron.refractory", "t_ref", "refractory time after a spike"),
    ("neuron.rate_tau", "tau_f", "time constant of the firing-rate estimate"),
    ("synapse.k_w", "k_w", "LTP gain on strength w"),
    ("synapse.w_max", "w_max", "strength ceiling"),
    ("synapse.k_r", "k_r", "LTP gain on persistence r"),
    ("synapse.k_decay", "k_decay", "passive decay gain"),
    ("synapse.k_wd", "k_wd", "LTD gain on devaluation w_d"),
    ("synapse.k_rd", "k_rd", "LTD gain on recovery persistence r_d"),
    ("synapse.k_recover", "k_recover", "devaluation recovery gain"),
    ("synapse.w_init", "w_init", "strength of a new synapse"),
    ("synapse.w_prune", "w_prune", "strength below which a synapse breaks"),
    ("synapse.r_init", "r_init", "persistence of a new synapse"),
    ("synapse.r_d_init", "r_d_init", "recovery persistence of a new synapse"),
    ("competition.k_retro", "k_retro", "maximum retrograde messenger rate"),
    ("competition.k_sat", "k_sat", "messenger saturation"),
    ("competition.eps_silent", "eps", "rate below which a neuron counts as silent"),
    ("growth.*", "-", "network layout and learning settings"),
    ("sim.dt", "dt", "integration step"),
    ("sim.seed", "-", "random seed"),
    ("sim.mode", "-", "event or rate; unset picks the subcommand's mode"),
];

/// Parameter listing with current defaults, for `--help`.
pub fn parameter_help() -> String {
    let defaults: toml::Table = RunConfig::default().to_toml().parse().expect("defaults parse");
    let lookup = |key: &str| -> String {
        let mut cur = toml::Value::Table(defaults.clone());
        for p in key.split('.') {
            match cur.get(p) {
                Some(v) => cur = v.clone(),
                None => return String::new(),
            }
        }
        format!(" [default {cur}]")
    };
    let mut out = String::from("Parameters (config file keys, also settable with --set key=value):\n");
    for (key, symbol, meaning) in PARAMETER_DOCS {
        out.push_str(&format!("  {key:<22} {symbol:<10} {meaning}{}\n", lookup(key)));
    }
    out
}
