//! Release acceptance sweep: nine go/no-go checks covering reference-table
//! reproduction, simulator/formula agreement at scale, the exact
//! enumeration oracle, critical-regime arithmetic, deterministic
//! parallelism, and aggregate identities.
//!
//! The single test below runs every criterion in order, prints one
//! `criterion N: PASS/FAIL` line each (visible with
//! `cargo test --test acceptance -- --nocapture`), and fails at the end if
//! any criterion failed. Expect several minutes of wall time: criterion 4
//! replays the full benchmark grid at ten million replications per row.

use std::panic::catch_unwind;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treestars::analytic::{
    aggregate_moments, branching_moments, branching_moments_recursive, scenario1_moments,
    scenario2_moments, scenario34_moments, scenario_moments, ModelParams, MomentPair,
};
use treestars::distributions::{CostSpec, Pmf};
use treestars::graph::TreeStarsGraph;
use treestars::montecarlo::{estimate_aggregate, estimate_scenario, RunConfig, RunMode};
use treestars::oracle::enumerate_loss_moments;
use treestars::report::{reproduce_tables, table_row_params, table_scenario, TableId};
use treestars::scenarios::{ScenarioId, ScenarioWeights};

/// Absolute tolerance against the reference tables, which quote monetary
/// values rounded to two decimals.
const TABLE_ABS_TOL: f64 = 0.01;

/// Relative band separating the two topology-III reference columns (see
/// criterion 2): on every row the formula deviation sits within this band
/// of the reference simulation column (worst row: 5.9e-4) and further than
/// it from the variance-dropping reference analytic column (closest row:
/// 9.8e-4).
const TOPOLOGY3_SD_BAND: f64 = 8e-4;

/// Reference (mean, sd) of the sixteen topology-I rows of the first
/// benchmark grid, in [`table_row_params`] row order: `(p, q)` pairs
/// `(0.8,0.8), (0.8,0.2), (0.2,0.8), (0.2,0.2)` outer, degree-pmf pairs
/// det×det, det×sto, sto×det, sto×sto inner.
const TABLE2_TOPOLOGY1: [(f64, f64); 16] = [
    (68112.00, 21666.32),
    (63984.00, 20423.47),
    (51722.88, 21560.68),
    (48588.16, 20307.61),
    (55728.00, 17757.75),
    (54696.00, 17414.61),
    (42318.72, 17664.04),
    (41535.04, 17326.01),
    (20592.00, 11514.53),
    (19344.00, 10856.65),
    (18775.68, 9816.03),
    (17637.76, 9263.84),
    (16848.00, 9438.48),
    (16536.00, 9255.56),
    (15361.92, 8050.01),
    (15077.44, 7892.24),
];

/// Reference sd of the sixteen topology-II rows; their means equal the
/// topology-I means row for row.
const TABLE2_TOPOLOGY2_SD: [f64; 16] = [
    24462.81, 23369.17, 23723.89, 22591.12, 21079.32, 20791.07, 20247.92, 19953.72, 13099.02,
    12524.65, 11485.40, 11017.20, 11317.46, 11165.37, 10018.12, 9891.79,
];

/// The topology-III reference prints an analytic column that drops the
/// user-cost variance contribution (it reuses the fixed-cost deviations
/// below, identical to the topology-I sd column) next to a
/// ten-million-replication simulation column that reflects the full
/// variance. The formulas here keep the variance term, so criterion 2
/// requires them to track the simulation column and stay measurably away
/// from the variance-dropping column.
const TABLE2_TOPOLOGY3_REFERENCE_ANALYTIC_SD: [f64; 16] = [
    21666.32, 20423.47, 21560.68, 20307.61, 17757.75, 17414.61, 17664.04, 17326.01, 11514.53,
    10856.65, 9816.03, 9263.84, 9438.48, 9255.56, 8050.01, 7892.24,
];

/// Simulation column of the topology-III reference rows.
const TABLE2_TOPOLOGY3_REFERENCE_SIM_SD: [f64; 16] = [
    21757.41, 20492.10, 21634.02, 20368.48, 17786.87, 17438.72, 17686.78, 17338.98, 11567.02,
    10903.39, 9875.13, 9308.82, 9452.76, 9265.07, 8062.96, 7904.62,
];

/// Reference (mean, sd) of the twelve rows of the second benchmark grid:
/// topologies I, II, III outer, the four `(p, q)` pairs inner.
const TABLE3_ROWS: [(f64, f64); 12] = [
    (9152.00, 6122.99),
    (7488.00, 5024.34),
    (1232.00, 3847.64),
    (1008.00, 3151.20),
    (9152.00, 7404.35),
    (7488.00, 6525.13),
    (1232.00, 4139.76),
    (1008.00, 3501.91),
    (9152.00, 6168.12),
    (7488.00, 5038.12),
    (1232.00, 3857.33),
    (1008.00, 3154.16),
];

/// Reference closed-form mean of one root-user contagion on the first
/// benchmark row's parameters (deterministic degrees, fixed costs,
/// `p = q = 0.8`).
const ROOT_USER_REFERENCE_MEAN: f64 = 53_849.6;

fn assert_abs(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (± {tol})"
    );
}

fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
    let scale = want.abs().max(1.0);
    assert!(
        (got - want).abs() <= tol * scale,
        "{what}: got {got}, want {want} (relative tolerance {tol:e})"
    );
}

/// First benchmark grid, topologies I and II: every analytic mean and sd
/// matches the reference within ±0.01, and the whole 48-row analytic pass
/// finishes in under a second.
fn criterion_1() {
    let started = Instant::now();
    let rows = reproduce_tables(TableId::Table2, 0, 42, 1).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(rows.len(), 48);
    for (i, want) in TABLE2_TOPOLOGY1.iter().enumerate() {
        let row = &rows[i];
        assert_eq!(row.cost_topology, "I", "row {i} topology label");
        let what = format!("topology I row {i}");
        assert_abs(row.analytic_mean.unwrap(), want.0, TABLE_ABS_TOL, &format!("{what} mean"));
        assert_abs(row.analytic_sd.unwrap(), want.1, TABLE_ABS_TOL, &format!("{what} sd"));
    }
    for (i, want_sd) in TABLE2_TOPOLOGY2_SD.iter().enumerate() {
        let row = &rows[16 + i];
        assert_eq!(row.cost_topology, "II", "row {} topology label", 16 + i);
        let what = format!("topology II row {i}");
        let want_mean = TABLE2_TOPOLOGY1[i].0;
        assert_abs(row.analytic_mean.unwrap(), want_mean, TABLE_ABS_TOL, &format!("{what} mean"));
        assert_abs(row.analytic_sd.unwrap(), *want_sd, TABLE_ABS_TOL, &format!("{what} sd"));
    }
    assert!(
        elapsed < Duration::from_secs(1),
        "analytic grid took {elapsed:?}, budget 1 s"
    );
}

/// First benchmark grid, topology III: the means still match topology I,
/// while the formula sd must land within [`TOPOLOGY3_SD_BAND`] of the
/// reference simulation column and strictly further than the band from the
/// variance-dropping reference analytic column.
fn criterion_2() {
    let rows = reproduce_tables(TableId::Table2, 0, 42, 1).unwrap();
    for i in 0..16 {
        let row = &rows[32 + i];
        assert_eq!(row.cost_topology, "III", "row {} topology label", 32 + i);
        let what = format!("topology III row {i}");
        let want_mean = TABLE2_TOPOLOGY1[i].0;
        assert_abs(row.analytic_mean.unwrap(), want_mean, TABLE_ABS_TOL, &format!("{what} mean"));

        let sd = row.analytic_sd.unwrap();
        let sim = TABLE2_TOPOLOGY3_REFERENCE_SIM_SD[i];
        let dropped = TABLE2_TOPOLOGY3_REFERENCE_ANALYTIC_SD[i];
        let rel_to_sim = ((sd - sim) / sim).abs();
        let rel_to_dropped = ((sd - dropped) / dropped).abs();
        assert!(
            rel_to_sim <= TOPOLOGY3_SD_BAND,
            "{what}: formula sd {sd} strays {rel_to_sim:.2e} from the reference simulation sd {sim}"
        );
        assert!(
            rel_to_dropped > TOPOLOGY3_SD_BAND,
            "{what}: formula sd {sd} sits only {rel_to_dropped:.2e} from the \
             variance-dropping reference sd {dropped}; the user-cost variance term looks lost"
        );
    }
}

/// Second benchmark grid: all twelve analytic rows match the reference
/// within ±0.01.
fn criterion_3() {
    let rows = reproduce_tables(TableId::Table3, 0, 42, 1).unwrap();
    assert_eq!(rows.len(), TABLE3_ROWS.len());
    for (i, (row, want)) in rows.iter().zip(&TABLE3_ROWS).enumerate() {
        assert_eq!(row.scenario, "3", "row {i} scenario label");
        let what = format!("external-contract grid row {i}");
        assert_abs(row.analytic_mean.unwrap(), want.0, TABLE_ABS_TOL, &format!("{what} mean"));
        assert_abs(row.analytic_sd.unwrap(), want.1, TABLE_ABS_TOL, &format!("{what} sd"));
    }
}

/// Simulation agrees with the closed forms across both full grids: within
/// 1% relative at ten million replications per row, and within four
/// standard errors (mean and sd) at one million. The densest row also has
/// to meet the wall-time budget: one million replications single-threaded
/// in under 10 s, ten million with eight workers in under 30 s.
fn criterion_4() {
    for table in [TableId::Table2, TableId::Table3] {
        let rows = reproduce_tables(table, 10_000_000, 42, 1).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let what = format!("{table:?} row {i} at 1e7");
            let mean = row.analytic_mean.unwrap();
            let sd = row.analytic_sd.unwrap();
            let sim_mean = row.sim_mean.unwrap();
            let sim_sd = row.sim_sd.unwrap();
            assert!(
                ((sim_mean - mean) / mean).abs() <= 0.01,
                "{what}: simulated mean {sim_mean} vs formula {mean}"
            );
            assert!(
                ((sim_sd - sd) / sd).abs() <= 0.01,
                "{what}: simulated sd {sim_sd} vs formula {sd}"
            );
            assert_eq!(row.degenerate_fraction, Some(0.0), "{what}: degenerate events");
        }
    }

    for (table, seed_base) in [(TableId::Table2, 10_000u64), (TableId::Table3, 20_000u64)] {
        let scenario = table_scenario(table);
        for (i, params) in table_row_params(table).into_iter().enumerate() {
            let closed = scenario_moments(&params, scenario).unwrap();
            let run = RunConfig {
                replications: 1_000_000,
                seed: seed_base + i as u64,
                workers: 1,
                mode: RunMode::PerScenario,
            };
            let est = estimate_scenario(&params, scenario, &run).unwrap();
            let mean_z = (est.mean - closed.mean) / est.se_mean;
            let sd_z = (est.sd - closed.sd()) / est.se_sd;
            assert!(
                mean_z.abs() <= 4.0,
                "{table:?} row {i} at 1e6: mean z-score {mean_z:.2} \
                 (simulated {} vs formula {})",
                est.mean,
                closed.mean
            );
            assert!(
                sd_z.abs() <= 4.0,
                "{table:?} row {i} at 1e6: sd z-score {sd_z:.2} \
                 (simulated {} vs formula {})",
                est.sd,
                closed.sd()
            );
        }
    }

    let params = &table_row_params(TableId::Table2)[0];
    let started = Instant::now();
    let run = RunConfig {
        replications: 1_000_000,
        seed: 42,
        workers: 1,
        mode: RunMode::PerScenario,
    };
    estimate_scenario(params, ScenarioId::RootContract, &run).unwrap();
    let single = started.elapsed();
    assert!(
        single < Duration::from_secs(10),
        "1e6 replications single-threaded took {single:?}, budget 10 s"
    );

    let started = Instant::now();
    let run = RunConfig {
        replications: 10_000_000,
        seed: 42,
        workers: 8,
        mode: RunMode::PerScenario,
    };
    estimate_scenario(params, ScenarioId::RootContract, &run).unwrap();
    let eight = started.elapsed();
    assert!(
        eight < Duration::from_secs(30),
        "1e7 replications with 8 workers took {eight:?}, budget 30 s"
    );
}

/// On every deterministic tree-star with at most twelve edges (offspring
/// degree 1–2, user degree 0–2, radius 1–2) and `p, q ∈ {0.3, 0.7}`, the
/// closed forms match exhaustive enumeration over all open/closed edge
/// configurations to 1e-10 relative, for the root-origin, root-user,
/// external-contract, and external-user scenarios alike.
fn criterion_5() {
    let cost_contract = CostSpec::point(10_000.0).unwrap();
    let cost_user = CostSpec::point(1_000.0).unwrap();
    let mut checked = 0u32;
    for d_plus in [1u32, 2] {
        for d_minus in [0u32, 1, 2] {
            for radius in [1u32, 2] {
                let offspring = Pmf::point_mass(d_plus);
                let users = Pmf::point_mass(d_minus);
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                let g = TreeStarsGraph::generate(&offspring, &users, radius, &mut rng);
                let edges = g.contract_edge_count() + g.user_count();
                if edges > 12 {
                    continue;
                }
                for p in [0.3, 0.7] {
                    for q in [0.3, 0.7] {
                        let params = ModelParams {
                            offspring: offspring.clone(),
                            users: users.clone(),
                            radius,
                            p,
                            q,
                            cost_contract: cost_contract.clone(),
                            cost_user: cost_user.clone(),
                            weights: ScenarioWeights::single(ScenarioId::RootContract),
                            lambda: 1.0,
                            t: 1.0,
                            loading_delta: 0.1,
                        };
                        let what = format!("d+={d_plus} d-={d_minus} R={radius} p={p} q={q}");

                        let closed = scenario1_moments(&params);
                        let exact = enumerate_loss_moments(
                            &g,
                            ScenarioId::RootContract,
                            p,
                            q,
                            &cost_contract,
                            &cost_user,
                        )
                        .expect("the root origin always exists");
                        assert_rel(closed.mean, exact.mean, 1e-10, &format!("{what}: root-origin mean"));
                        assert_rel(
                            closed.variance,
                            exact.variance,
                            1e-10,
                            &format!("{what}: root-origin variance"),
                        );

                        let (s3, s4) = scenario34_moments(&params).unwrap();
                        let exact3 = enumerate_loss_moments(
                            &g,
                            ScenarioId::ExternalContract,
                            p,
                            q,
                            &cost_contract,
                            &cost_user,
                        )
                        .expect("non-root contracts exist at radius >= 1");
                        assert_rel(s3.mean, exact3.mean, 1e-10, &format!("{what}: external-contract mean"));
                        assert_rel(
                            s3.variance,
                            exact3.variance,
                            1e-10,
                            &format!("{what}: external-contract variance"),
                        );

                        if d_minus > 0 {
                            let s2 = scenario2_moments(&params);
                            let exact2 = enumerate_loss_moments(
                                &g,
                                ScenarioId::RootUser,
                                p,
                                q,
                                &cost_contract,
                                &cost_user,
                            )
                            .expect("the root has users when d- > 0");
                            assert_rel(s2.mean, exact2.mean, 1e-10, &format!("{what}: root-user mean"));
                            assert_rel(
                                s2.variance,
                                exact2.variance,
                                1e-10,
                                &format!("{what}: root-user variance"),
                            );

                            let exact4 = enumerate_loss_moments(
                                &g,
                                ScenarioId::ExternalUser,
                                p,
                                q,
                                &cost_contract,
                                &cost_user,
                            )
                            .expect("non-root contracts have users when d- > 0");
                            assert_rel(s4.mean, exact4.mean, 1e-10, &format!("{what}: external-user mean"));
                            assert_rel(
                                s4.variance,
                                exact4.variance,
                                1e-10,
                                &format!("{what}: external-user variance"),
                            );
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    // 12 degree/radius combinations minus the two whose trees exceed the
    // edge cap, times four (p, q) pairs.
    assert_eq!(checked, 40, "combination filter kept an unexpected count");
}

/// At criticality (mean offspring times edge probability exactly 1 in
/// floating point) the compromised-subtree mean must come out exactly
/// `radius + 1` and the closed-form variance must agree with the
/// generation recursion; away from criticality the two independent routes
/// must agree to 1e-9 relative.
fn criterion_6() {
    let critical: [(f64, f64, f64); 4] = [
        (2.0, 0.0, 0.5),
        (2.0, 1.0, 0.5),
        (4.0, 2.56, 0.25),
        (1.6, 0.4, 0.625),
    ];
    for radius in 0u32..=6 {
        for &(mu, sigma2, p) in &critical {
            assert_eq!(mu * p, 1.0, "pairing must be critical in floating point");
            let what = format!("critical case mu={mu} sigma2={sigma2} p={p} R={radius}");
            let closed = branching_moments(mu, sigma2, p, radius);
            let expected_mean = f64::from(radius + 1);
            assert!(
                closed.mean == expected_mean,
                "{what}: mean must be exactly {expected_mean}, got {}",
                closed.mean
            );
            let recursive = branching_moments_recursive(mu, sigma2, p, radius);
            assert_rel(closed.variance, recursive.variance, 1e-12, &format!("{what}: variance"));
        }
    }

    let off_critical: [(f64, f64); 4] = [(2.0, 0.45), (2.0, 0.55), (3.0, 0.2), (0.8, 0.9)];
    for radius in 0u32..=6 {
        for &(mu, p) in &off_critical {
            for sigma2 in [0.0, 1.5] {
                let what = format!("off-critical case mu={mu} sigma2={sigma2} p={p} R={radius}");
                let closed = branching_moments(mu, sigma2, p, radius);
                let recursive = branching_moments_recursive(mu, sigma2, p, radius);
                assert_rel(closed.mean, recursive.mean, 1e-12, &format!("{what}: mean"));
                assert_rel(closed.variance, recursive.variance, 1e-9, &format!("{what}: variance"));
            }
        }
    }
}

/// The same seed yields bit-identical estimates no matter how many workers
/// run the replications, in both per-scenario and direct-horizon modes, and
/// a repeated run reproduces itself exactly.
fn criterion_7() {
    let params = &table_row_params(TableId::Table2)[0];
    let scenario_run = |workers: usize| RunConfig {
        replications: 100_000,
        seed: 4242,
        workers,
        mode: RunMode::PerScenario,
    };
    let fingerprint = |workers: usize| {
        let est = estimate_scenario(params, ScenarioId::RootContract, &scenario_run(workers)).unwrap();
        (est.mean.to_bits(), est.sd.to_bits(), est.se_mean.to_bits(), est.se_sd.to_bits())
    };
    let baseline = fingerprint(1);
    for workers in [4usize, 8] {
        assert_eq!(
            fingerprint(workers),
            baseline,
            "{workers}-worker scenario estimate drifted from the single-thread result"
        );
    }
    assert_eq!(fingerprint(1), baseline, "repeated run with the same seed drifted");

    // Direct-horizon mode draws a Poisson event count inside every
    // replication, so it exercises variable per-replication stream use.
    let mut direct_params = params.clone();
    direct_params.weights = ScenarioWeights::new([0.25; 4]).unwrap();
    let direct_fingerprint = |workers: usize| {
        let run = RunConfig {
            replications: 100_000,
            seed: 4242,
            workers,
            mode: RunMode::AggregateDirect,
        };
        let est = estimate_aggregate(&direct_params, &run).unwrap();
        (est.aggregate.mean.to_bits(), est.aggregate.sd.to_bits())
    };
    let direct_baseline = direct_fingerprint(1);
    for workers in [4usize, 8] {
        assert_eq!(
            direct_fingerprint(workers),
            direct_baseline,
            "{workers}-worker direct estimate drifted from the single-thread result"
        );
    }
}

/// Root-user scenario on the first benchmark row: the closed-form mean hits
/// the reference value, an independently restated thinning identity
/// reproduces the closed-form variance, and a million-replication run
/// agrees with both moments within four standard errors.
fn criterion_8() {
    let params = &table_row_params(TableId::Table2)[0];
    let closed = scenario2_moments(params);
    assert_abs(closed.mean, ROOT_USER_REFERENCE_MEAN, 1e-9, "root-user closed-form mean");

    // Independent restatement: a root-user contagion is a q-thinned root
    // contagion that forgoes the origin user's own cost. With
    // W = (root-origin loss) − (origin user's cost when charged), a fixed
    // user cost c gives E(W) = μ₁ − qc and Var(W) = σ₁² − q(1−q)c², and the
    // thinned loss Bern(q)·W carries mean qE(W) and variance
    // qVar(W) + q(1−q)E(W)².
    let s1 = scenario1_moments(params);
    let q = params.q;
    let c = params.cost_user.mean();
    let w_mean = s1.mean - q * c;
    let w_var = s1.variance - q * (1.0 - q) * c * c;
    assert_rel(q * w_mean, closed.mean, 1e-12, "thinned-mean restatement");
    assert_rel(
        q * w_var + q * (1.0 - q) * w_mean * w_mean,
        closed.variance,
        1e-12,
        "thinned-variance restatement",
    );

    let run = RunConfig {
        replications: 1_000_000,
        seed: 808,
        workers: 1,
        mode: RunMode::PerScenario,
    };
    let est = estimate_scenario(params, ScenarioId::RootUser, &run).unwrap();
    let mean_z = (est.mean - closed.mean) / est.se_mean;
    let sd_z = (est.sd - closed.sd()) / est.se_sd;
    assert!(
        mean_z.abs() <= 4.0,
        "root-user mean z-score {mean_z:.2} (simulated {} vs formula {})",
        est.mean,
        closed.mean
    );
    assert!(
        sd_z.abs() <= 4.0,
        "root-user sd z-score {sd_z:.2} (simulated {} vs formula {})",
        est.sd,
        closed.sd()
    );
}

/// Direct-horizon aggregation over equally weighted scenarios agrees with
/// the analytic compound combination of the per-scenario moments within
/// four standard errors.
fn criterion_9() {
    let mut params = table_row_params(TableId::Table2)[0].clone();
    params.weights = ScenarioWeights::new([0.25; 4]).unwrap();

    let per_scenario: [MomentPair; 4] =
        ScenarioId::ALL.map(|s| scenario_moments(&params, s).unwrap());
    let combined = aggregate_moments(params.lambda, params.t, &params.weights, &per_scenario);
    assert_abs(combined.mean, 34_608.8, 1e-6, "combined aggregate mean");
    assert_abs(combined.sd(), 48_288.36, TABLE_ABS_TOL, "combined aggregate sd");

    let run = RunConfig {
        replications: 1_000_000,
        seed: 909,
        workers: 1,
        mode: RunMode::AggregateDirect,
    };
    let est = estimate_aggregate(&params, &run).unwrap().aggregate;
    let mean_z = (est.mean - combined.mean) / est.se_mean;
    let sd_z = (est.sd - combined.sd()) / est.se_sd;
    assert!(
        mean_z.abs() <= 4.0,
        "aggregate mean z-score {mean_z:.2} (simulated {} vs formula {})",
        est.mean,
        combined.mean
    );
    assert!(
        sd_z.abs() <= 4.0,
        "aggregate sd z-score {sd_z:.2} (simulated {} vs formula {})",
        est.sd,
        combined.sd()
    );
    assert_eq!(est.degenerate_fraction, 0.0, "degenerate horizons");
}

#[test]
fn acceptance_criteria() {
    let criteria: &[(&str, fn())] = &[
        ("1: first-grid analytic rows (topologies I, II) within ±0.01, under 1 s", criterion_1),
        ("2: topology-III sd tracks the reference simulation column", criterion_2),
        ("3: second-grid analytic rows within ±0.01", criterion_3),
        ("4: simulation vs formulas at 1e7 (1%) and 1e6 (4 SE), wall-time budget", criterion_4),
        ("5: exhaustive enumeration matches closed forms to 1e-10", criterion_5),
        ("6: critical-regime mean exact, closed form vs recursion", criterion_6),
        ("7: bit-identical estimates across 1/4/8 workers", criterion_7),
        ("8: root-user closed form, thinning restatement, 4-SE simulation", criterion_8),
        ("9: direct aggregate matches combined per-scenario moments at 4 SE", criterion_9),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let started = Instant::now();
        match catch_unwind(*run) {
            Ok(()) => println!("criterion {name}: PASS ({:.2?})", started.elapsed()),
            Err(payload) => {
                let message = payload
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| payload.downcast_ref::<&str>().copied())
                    .unwrap_or("panic without message");
                println!(
                    "criterion {name}: FAIL ({:.2?}) — {message}",
                    started.elapsed()
                );
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
