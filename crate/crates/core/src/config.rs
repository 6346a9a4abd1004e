//! Experiment configuration: a single flat JSON document holding the model
//! parameters, the Monte Carlo run settings, and reporting switches.
//!
//! The canonical field names are fixed (see [`parse_config`]); parse errors
//! name the offending field. Serialization via [`serialize_config`] emits
//! the same canonical schema, so parse → serialize → parse is lossless.

use crate::analytic::ModelParams;
use crate::distributions::{CostSpec, Pmf};
use crate::montecarlo::{RunConfig, RunMode};
use crate::scenarios::{ScenarioId, ScenarioWeights};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// Malformed document or a field-level failure, with the field path.
    #[error("config field `{path}`: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("at least one of run_analytic and run_simulation must be true")]
    NothingToRun,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub run: RunConfig,
    /// Where the CSV report goes; `None` means standard output.
    pub output: Option<PathBuf>,
    pub run_analytic: bool,
    pub run_simulation: bool,
    /// Scenario rows to emit, in this order (the aggregate row always
    /// follows).
    pub scenarios_to_report: Vec<ScenarioId>,
    /// Free-form annotation carried through verbatim.
    pub note: Option<String>,
}

/// Wire form: the canonical flat schema. Unknown fields are rejected so
/// typos fail loudly instead of silently using defaults.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    offspring_pmf: Pmf,
    user_pmf: Pmf,
    radius: u32,
    p: f64,
    q: f64,
    cost_contract: CostSpec,
    cost_user: CostSpec,
    scenario_weights: ScenarioWeights,
    lambda: f64,
    t: f64,
    loading_delta: f64,
    replications: u64,
    seed: u64,
    workers: usize,
    mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(default = "default_true")]
    run_analytic: bool,
    #[serde(default = "default_true")]
    run_simulation: bool,
    #[serde(default = "all_scenarios")]
    scenarios_to_report: Vec<ScenarioId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn default_true() -> bool {
    true
}

fn all_scenarios() -> Vec<ScenarioId> {
    ScenarioId::ALL.to_vec()
}

/// Parses the canonical JSON configuration document.
///
/// Required fields: `offspring_pmf`, `user_pmf` (probability lists),
/// `radius` (offspring generations below the root), `p`, `q` (edge-open
/// probabilities), `cost_contract`, `cost_user` (`{family, mean, sd}`),
/// `scenario_weights` (four reals summing to 1), `lambda`, `t`,
/// `loading_delta`, `replications`, `seed`, `workers`, `mode`
/// (`"per-scenario"` or `"aggregate-direct"`).
///
/// Optional fields: `output` (CSV path), `run_analytic` / `run_simulation`
/// (default true), `scenarios_to_report` (default `[1,2,3,4]`), `note`.
pub fn parse_config(document: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut deserializer = serde_json::Deserializer::from_str(document);
    let raw: RawConfig =
        serde_path_to_error::deserialize(&mut deserializer).map_err(|err| ConfigError::Parse {
            path: err.path().to_string(),
            source: err.into_inner(),
        })?;
    let params = ModelParams {
        offspring: raw.offspring_pmf,
        users: raw.user_pmf,
        radius: raw.radius,
        p: raw.p,
        q: raw.q,
        cost_contract: raw.cost_contract,
        cost_user: raw.cost_user,
        weights: raw.scenario_weights,
        lambda: raw.lambda,
        t: raw.t,
        loading_delta: raw.loading_delta,
    };
    params.validate().map_err(|err| ConfigError::Invalid {
        field: err.field,
        message: err.to_string(),
    })?;
    if !raw.run_analytic && !raw.run_simulation {
        return Err(ConfigError::NothingToRun);
    }
    Ok(ExperimentConfig {
        params,
        run: RunConfig {
            replications: raw.replications,
            seed: raw.seed,
            workers: raw.workers,
            mode: raw.mode,
        },
        output: raw.output,
        run_analytic: raw.run_analytic,
        run_simulation: raw.run_simulation,
        scenarios_to_report: raw.scenarios_to_report,
        note: raw.note,
    })
}

/// Serializes back to the canonical JSON schema (pretty-printed).
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let raw = RawConfig {
        offspring_pmf: cfg.params.offspring.clone(),
        user_pmf: cfg.params.users.clone(),
        radius: cfg.params.radius,
        p: cfg.params.p,
        q: cfg.params.q,
        cost_contract: cfg.params.cost_contract,
        cost_user: cfg.params.cost_user,
        scenario_weights: cfg.params.weights,
        lambda: cfg.params.lambda,
        t: cfg.params.t,
        loading_delta: cfg.params.loading_delta,
        replications: cfg.run.replications,
        seed: cfg.run.seed,
        workers: cfg.run.workers,
        mode: cfg.run.mode,
        output: cfg.output.clone(),
        run_analytic: cfg.run_analytic,
        run_simulation: cfg.run_simulation,
        scenarios_to_report: cfg.scenarios_to_report.clone(),
        note: cfg.note.clone(),
    };
    serde_json::to_string_pretty(&raw).expect("canonical schema always serializes")
}
