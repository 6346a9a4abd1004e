//! CSV reporting and the built-in benchmark grids.
//!
//! Every report is a sequence of rows with a fixed header: one row per
//! requested scenario and, for full experiments, one aggregate row carrying
//! the compound-horizon moments and both premiums. Analytic cells that have
//! no closed form (root-external scenarios with stochastic degree pmfs) are
//! left empty rather than failing the run.
//!
//! Formatting is fixed: monetary values use two decimals, probabilities and
//! fractions use six significant digits, pmfs render as bracketed lists.

use crate::analytic::{
    self, premium, AnalyticError, MomentPair, ModelParams, ParamError, PremiumPrinciple,
};
use crate::config::ExperimentConfig;
use crate::distributions::{CostSpec, Pmf};
use crate::montecarlo::{self, Estimate, RunConfig, RunMode};
use crate::scenarios::{ScenarioId, ScenarioWeights};

/// The two built-in benchmark grids.
///
/// Both use radius 2 (the generation convention: a three-level contract tree
/// has radius 2) and sweep the cost topologies I–III over all four
/// `(p, q) ∈ {0.8, 0.2}²` pairs.
///
/// * Table 2: root-contract scenario, additionally sweeping deterministic
///   versus stochastic degree pmfs (48 rows).
/// * Table 3: external-contract scenario, deterministic pmfs only (12 rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    Table2,
    Table3,
}

/// One report line; `None` cells render empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// `"1"..="4"` or `"aggregate"`.
    pub scenario: String,
    pub offspring_pmf: String,
    pub user_pmf: String,
    pub p: f64,
    pub q: f64,
    pub cost_topology: String,
    pub analytic_mean: Option<f64>,
    pub analytic_sd: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_sd: Option<f64>,
    pub sim_se_mean: Option<f64>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub degenerate_fraction: Option<f64>,
    pub premium_expectation: Option<f64>,
    pub premium_stddev: Option<f64>,
}

pub const CSV_HEADER: [&str; 16] = [
    "scenario",
    "offspring_pmf",
    "user_pmf",
    "p",
    "q",
    "cost_topology",
    "analytic_mean",
    "analytic_sd",
    "sim_mean",
    "sim_sd",
    "sim_se_mean",
    "replications",
    "seed",
    "degenerate_fraction",
    "premium_expectation",
    "premium_stddev",
];

fn fmt_money(x: f64) -> String {
    format!("{x:.2}")
}

/// Six significant digits; tiny nonzero fractions switch to scientific
/// notation so they do not round to a misleading zero.
fn fmt_fraction(x: f64) -> String {
    if x == 0.0 {
        "0.000000".to_string()
    } else if x.abs() >= 1e-4 {
        format!("{x:.6}")
    } else {
        format!("{x:.6e}")
    }
}

fn fmt_pmf(pmf: &Pmf) -> String {
    // Six decimals, trailing zeros trimmed: construction-time renormalization
    // may leave float noise on the stored entries, which should not leak into
    // the report.
    let cells: Vec<String> = pmf
        .probs()
        .iter()
        .map(|p| {
            format!("{p:.6}")
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        })
        .collect();
    format!("[{}]", cells.join(","))
}

/// Cost-pair label: the benchmark topologies get their Roman numerals, any
/// other pair renders both specs explicitly.
pub fn cost_topology_label(cost_contract: &CostSpec, cost_user: &CostSpec) -> String {
    let (i, ii, iii) = benchmark_topologies();
    if (*cost_contract, *cost_user) == i {
        return "I".to_string();
    }
    if (*cost_contract, *cost_user) == ii {
        return "II".to_string();
    }
    if (*cost_contract, *cost_user) == iii {
        return "III".to_string();
    }
    format!("{}/{}", fmt_cost(cost_contract), fmt_cost(cost_user))
}

fn fmt_cost(spec: &CostSpec) -> String {
    format!("{:?}({},{})", spec.family(), spec.mean(), spec.sd()).to_lowercase()
}

fn benchmark_topologies() -> ((CostSpec, CostSpec), (CostSpec, CostSpec), (CostSpec, CostSpec)) {
    let point_contract = CostSpec::point(10_000.0).unwrap();
    let point_user = CostSpec::point(1000.0).unwrap();
    (
        (point_contract, point_user),
        (CostSpec::lognormal(10_000.0, 5000.0).unwrap(), point_user),
        (point_contract, CostSpec::lognormal(1000.0, 500.0).unwrap()),
    )
}

impl ReportRow {
    fn record(&self) -> Vec<String> {
        let opt_money = |v: &Option<f64>| v.map(fmt_money).unwrap_or_default();
        vec![
            self.scenario.clone(),
            self.offspring_pmf.clone(),
            self.user_pmf.clone(),
            fmt_fraction(self.p),
            fmt_fraction(self.q),
            self.cost_topology.clone(),
            opt_money(&self.analytic_mean),
            opt_money(&self.analytic_sd),
            opt_money(&self.sim_mean),
            opt_money(&self.sim_sd),
            opt_money(&self.sim_se_mean),
            self.replications.map(|r| r.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.degenerate_fraction
                .map(fmt_fraction)
                .unwrap_or_default(),
            opt_money(&self.premium_expectation),
            opt_money(&self.premium_stddev),
        ]
    }

    fn from_parts(
        scenario: String,
        params: &ModelParams,
        analytic: Option<MomentPair>,
        sim: Option<(&Estimate, u64, u64)>,
    ) -> Self {
        Self {
            scenario,
            offspring_pmf: fmt_pmf(&params.offspring),
            user_pmf: fmt_pmf(&params.users),
            p: params.p,
            q: params.q,
            cost_topology: cost_topology_label(&params.cost_contract, &params.cost_user),
            analytic_mean: analytic.map(|m| m.mean),
            analytic_sd: analytic.map(|m| m.sd()),
            sim_mean: sim.map(|(e, _, _)| e.mean),
            sim_sd: sim.map(|(e, _, _)| e.sd),
            sim_se_mean: sim.map(|(e, _, _)| e.se_mean),
            replications: sim.map(|(_, reps, _)| reps),
            seed: sim.map(|(_, _, seed)| seed),
            degenerate_fraction: sim.map(|(e, _, _)| e.degenerate_fraction),
            premium_expectation: None,
            premium_stddev: None,
        }
    }
}

/// Renders rows as a UTF-8 CSV document with the fixed header.
pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER)
        .expect("in-memory write cannot fail");
    for row in rows {
        writer
            .write_record(row.record())
            .expect("in-memory write cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush cannot fail"))
        .expect("csv output is UTF-8")
}

/// Runs one configured experiment: a row per requested scenario, then the
/// aggregate row.
///
/// Scenario `j`'s simulation uses seed `seed + j_index`, matching what the
/// per-scenario aggregate mode uses, so the scenario rows and the aggregate
/// row of one report are mutually consistent. Premiums on the aggregate row
/// are priced from the analytic moments when available, otherwise from the
/// simulated ones.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, ParamError> {
    let params = &cfg.params;
    let simulate = cfg.run_simulation && cfg.run.replications > 0;
    let mut rows = Vec::new();
    for &s in &cfg.scenarios_to_report {
        let analytic = if cfg.run_analytic {
            analytic::scenario_moments(params, s).ok()
        } else {
            None
        };
        let sim = if simulate {
            let run = RunConfig {
                seed: cfg.run.seed.wrapping_add(s.index() as u64),
                ..cfg.run
            };
            Some((montecarlo::estimate_scenario(params, s, &run)?, run.seed))
        } else {
            None
        };
        rows.push(ReportRow::from_parts(
            s.to_string(),
            params,
            analytic,
            sim.as_ref()
                .map(|(est, seed)| (est, cfg.run.replications, *seed)),
        ));
    }

    let analytic_aggregate = if cfg.run_analytic {
        aggregate_closed_form(params)
    } else {
        None
    };
    let sim_aggregate = if simulate {
        Some(montecarlo::estimate_aggregate(params, &cfg.run)?)
    } else {
        None
    };
    let mut row = ReportRow::from_parts(
        "aggregate".to_string(),
        params,
        analytic_aggregate,
        sim_aggregate
            .as_ref()
            .map(|agg| (&agg.aggregate, cfg.run.replications, cfg.run.seed)),
    );
    let priced = analytic_aggregate.or_else(|| {
        sim_aggregate
            .as_ref()
            .map(|agg| MomentPair::new(agg.aggregate.mean, agg.aggregate.variance()))
    });
    if let Some(moments) = priced {
        row.premium_expectation = Some(premium(
            &moments,
            params.loading_delta,
            PremiumPrinciple::Expectation,
        ));
        row.premium_stddev = Some(premium(
            &moments,
            params.loading_delta,
            PremiumPrinciple::StdDev,
        ));
    }
    rows.push(row);
    Ok(rows)
}

/// Closed-form aggregate moments, if every positively weighted scenario has
/// a closed form.
fn aggregate_closed_form(params: &ModelParams) -> Option<MomentPair> {
    let mut moments = [MomentPair::new(0.0, 0.0); 4];
    for s in ScenarioId::ALL {
        if params.weights.get(s) == 0.0 {
            continue;
        }
        match analytic::scenario_moments(params, s) {
            Ok(m) => moments[s.index()] = m,
            Err(AnalyticError::UnsupportedStochasticDegrees | AnalyticError::EmptyOriginSet { .. }) => {
                return None
            }
        }
    }
    Some(analytic::aggregate_moments(
        params.lambda,
        params.t,
        &params.weights,
        &moments,
    ))
}

const OFFSPRING_DET: [f64; 3] = [0.0, 0.0, 1.0];
const OFFSPRING_STO: [f64; 3] = [0.0, 0.4, 0.6];
const USERS_DET: [f64; 5] = [0.0, 0.0, 0.0, 0.0, 1.0];
const USERS_STO: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
const PQ_GRID: [(f64, f64); 4] = [(0.8, 0.8), (0.8, 0.2), (0.2, 0.8), (0.2, 0.2)];

/// The scenario each benchmark table simulates: the root-origin scenario for
/// table 2, the external-contract-origin scenario for table 3.
pub fn table_scenario(table: TableId) -> ScenarioId {
    match table {
        TableId::Table2 => ScenarioId::RootContract,
        TableId::Table3 => ScenarioId::ExternalContract,
    }
}

/// Model parameters of every row of the named benchmark grid, in the fixed
/// row order documented on [`reproduce_tables`]. All rows use radius 2,
/// `λ = t = 1`, and loading 0.1.
pub fn table_row_params(table: TableId) -> Vec<ModelParams> {
    let (i, ii, iii) = benchmark_topologies();
    let pmf_pairs: &[(&[f64], &[f64])] = match table {
        TableId::Table2 => &[
            (&OFFSPRING_DET, &USERS_DET),
            (&OFFSPRING_DET, &USERS_STO),
            (&OFFSPRING_STO, &USERS_DET),
            (&OFFSPRING_STO, &USERS_STO),
        ],
        TableId::Table3 => &[(&OFFSPRING_DET, &USERS_DET)],
    };
    let scenario = table_scenario(table);
    let mut grid = Vec::new();
    for (cost_contract, cost_user) in [i, ii, iii] {
        for (p, q) in PQ_GRID {
            for (offspring, users) in pmf_pairs {
                grid.push(ModelParams {
                    offspring: Pmf::new(offspring.to_vec()).expect("benchmark pmf is valid"),
                    users: Pmf::new(users.to_vec()).expect("benchmark pmf is valid"),
                    radius: 2,
                    p,
                    q,
                    cost_contract,
                    cost_user,
                    weights: ScenarioWeights::single(scenario),
                    lambda: 1.0,
                    t: 1.0,
                    loading_delta: 0.1,
                });
            }
        }
    }
    grid
}

/// Emits the named benchmark grid in its fixed row order.
///
/// Row order: cost topology (I, II, III) outermost, then `(p, q)` in the
/// order `(0.8,0.8), (0.8,0.2), (0.2,0.8), (0.2,0.2)`, then (table 2 only)
/// the degree-pmf pair in the order deterministic×deterministic,
/// deterministic×stochastic, stochastic×deterministic,
/// stochastic×stochastic.
///
/// `replications = 0` skips simulation and fills only the analytic columns.
/// Row `i` simulates with seed `seed + i` on its own substream family.
pub fn reproduce_tables(
    table: TableId,
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ReportRow>, ParamError> {
    let scenario = table_scenario(table);
    let mut rows = Vec::new();
    for (row_index, params) in table_row_params(table).into_iter().enumerate() {
        let analytic = analytic::scenario_moments(&params, scenario)
            .expect("benchmark grid has closed forms");
        let sim = if replications > 0 {
            let run = RunConfig {
                replications,
                seed: seed.wrapping_add(row_index as u64),
                workers,
                mode: RunMode::PerScenario,
            };
            Some((
                montecarlo::estimate_scenario(&params, scenario, &run)?,
                run.seed,
            ))
        } else {
            None
        };
        rows.push(ReportRow::from_parts(
            scenario.to_string(),
            &params,
            Some(analytic),
            sim.as_ref().map(|(est, s)| (est, replications, *s)),
        ));
    }
    Ok(rows)
}
