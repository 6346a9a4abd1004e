//! Monte Carlo estimation of per-scenario and aggregate loss moments.
//!
//! Reproducibility contract: every replication `i` runs on its own counter
//! RNG substream (`ChaCha8` with stream id `i`), derived from the run seed
//! alone. Replications are grouped into fixed-size chunks; chunk statistics
//! are merged in chunk order after all chunks complete. None of this depends
//! on the worker count, so a run with the same seed and replication count is
//! bit-identical whether it executes on one thread or many.
//!
//! Degenerate events (the scenario's origin set is empty in the realized
//! graph) count as replications with loss zero and are tallied separately,
//! so estimates target the unconditional event-loss law and report how much
//! degenerate mass they contain.

use crate::analytic::{self, MomentPair, ModelParams, ParamError};
use crate::scenarios::{PreparedModel, ScenarioId, Workspace};
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replications per work unit. Fixed (never derived from the worker count)
/// so that chunk boundaries, and therefore merge order and results, stay
/// identical across worker counts.
const CHUNK_SIZE: u64 = 1 << 14;

/// How [`estimate_aggregate`] spends its replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Estimate each positively weighted scenario separately, then combine
    /// the sample moments with the compound-Poisson identities.
    PerScenario,
    /// Simulate whole horizons: a Poisson number of events per replication,
    /// each event's scenario drawn from the weights.
    AggregateDirect,
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub replications: u64,
    pub seed: u64,
    /// Worker threads; values `<= 1` run on the calling thread. The result
    /// is the same either way, only the wall time changes.
    pub workers: usize,
    pub mode: RunMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            replications: 100_000,
            seed: 42,
            workers: 1,
            mode: RunMode::PerScenario,
        }
    }
}

/// Streaming accumulator of the first four central moments, with exact
/// pairwise merging, so statistics can be computed chunk by chunk and
/// combined deterministically.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
    degenerate: u64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one observation.
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Adds one event outcome: degenerate events carry loss zero and bump
    /// the degenerate tally.
    pub fn push_outcome(&mut self, loss: f64, degenerate: bool) {
        self.push(loss);
        self.degenerate += degenerate as u64;
    }

    /// Folds another accumulator into this one; the result is exactly the
    /// accumulator of the concatenated sample (up to float rounding, the
    /// merge identities are exact).
    pub fn merge_from(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        let m3 = self.m3
            + other.m3
            + delta.powi(3) * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + delta.powi(4) * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * delta * delta * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        self.count += other.count;
        self.degenerate += other.degenerate;
        self.mean = mean;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (`0` below two observations).
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    /// Population central fourth moment.
    pub fn fourth_central_moment(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m4 / self.count as f64
        }
    }

    pub fn degenerate_count(&self) -> u64 {
        self.degenerate
    }
}

/// A Monte Carlo estimate of one loss distribution's mean and standard
/// deviation, with standard errors for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub sd: f64,
    /// Standard error of `mean`: `s/sqrt(n)`.
    pub se_mean: f64,
    /// Standard error of `sd` via the delta method:
    /// `se(s²)/(2s)` with `se(s²) = sqrt((m̂₄ − s⁴)/n)`.
    pub se_sd: f64,
    /// Fraction of replications whose event was degenerate.
    pub degenerate_fraction: f64,
    pub replications: u64,
}

impl Estimate {
    pub fn from_accumulator(acc: &MomentAccumulator) -> Self {
        let n = acc.count() as f64;
        if acc.count() == 0 {
            return Self {
                mean: 0.0,
                sd: 0.0,
                se_mean: 0.0,
                se_sd: 0.0,
                degenerate_fraction: 0.0,
                replications: 0,
            };
        }
        let s2 = acc.sample_variance();
        let sd = s2.sqrt();
        let se_mean = (s2 / n).sqrt();
        let se_var = ((acc.fourth_central_moment() - s2 * s2).max(0.0) / n).sqrt();
        let se_sd = if sd > 0.0 { se_var / (2.0 * sd) } else { 0.0 };
        Self {
            mean: acc.mean(),
            sd,
            se_mean,
            se_sd,
            degenerate_fraction: acc.degenerate_count() as f64 / n,
            replications: acc.count(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }
}

/// Runs `replications` evaluations of `per_rep` over per-replication RNG
/// substreams and returns the merged moment statistics. See the module doc
/// for why the result does not depend on `workers`.
pub(crate) fn chunked_accumulate<F>(
    replications: u64,
    seed: u64,
    workers: usize,
    per_rep: F,
) -> MomentAccumulator
where
    F: Fn(&mut Workspace, &mut ChaCha8Rng) -> (f64, bool) + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let num_chunks = replications.div_ceil(CHUNK_SIZE);
    let run_chunk = |chunk: u64| -> MomentAccumulator {
        let start = chunk * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(replications);
        let mut ws = Workspace::new();
        let mut acc = MomentAccumulator::new();
        for rep in start..end {
            let mut rng = base.clone();
            rng.set_stream(rep);
            let (loss, degenerate) = per_rep(&mut ws, &mut rng);
            acc.push_outcome(loss, degenerate);
        }
        acc
    };
    let chunk_accs: Vec<MomentAccumulator> = if workers <= 1 {
        (0..num_chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool construction");
        pool.install(|| (0..num_chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut total = MomentAccumulator::new();
    for acc in &chunk_accs {
        total.merge_from(acc);
    }
    total
}

/// Estimates one scenario's per-event loss mean and standard deviation.
pub fn estimate_scenario(
    params: &ModelParams,
    s: ScenarioId,
    run: &RunConfig,
) -> Result<Estimate, ParamError> {
    let model = PreparedModel::new(params)?;
    let acc = chunked_accumulate(run.replications, run.seed, run.workers, |ws, rng| {
        let out = model.run_one(s, ws, rng);
        (out.loss, out.degenerate)
    });
    Ok(Estimate::from_accumulator(&acc))
}

/// Monte Carlo estimate of the aggregate loss over the model horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateEstimate {
    /// Moments of the aggregate loss `L` over the horizon.
    pub aggregate: Estimate,
    /// Per-scenario event-loss estimates (per-scenario mode only; slots of
    /// zero-weight scenarios stay empty).
    pub per_scenario: [Option<Estimate>; 4],
    pub mode: RunMode,
}

/// Estimates the aggregate loss moments in the configured mode.
///
/// Per-scenario mode runs `replications` events for each positively weighted
/// scenario (scenario `j` uses seed `seed + j_index` so its estimate matches
/// a standalone [`estimate_scenario`] call with that seed) and combines the
/// sample moments exactly as the analytic layer combines exact ones. Its
/// standard errors are first-order propagations that ignore cross-scenario
/// covariance, which is zero by construction here.
///
/// Direct mode runs `replications` independent horizons, each with a
/// Poisson(λt) number of events, and measures the aggregate loss sample
/// directly; a horizon is flagged degenerate when any of its events is.
pub fn estimate_aggregate(
    params: &ModelParams,
    run: &RunConfig,
) -> Result<AggregateEstimate, ParamError> {
    let model = PreparedModel::new(params)?;
    let lambda_t = model.lambda_t();
    match run.mode {
        RunMode::PerScenario => {
            let mut per_scenario = [None; 4];
            let mut means = [MomentPair::new(0.0, 0.0); 4];
            for s in ScenarioId::ALL {
                if model.weights().get(s) == 0.0 {
                    continue;
                }
                let scenario_run = RunConfig {
                    seed: run.seed.wrapping_add(s.index() as u64),
                    ..*run
                };
                let est = estimate_scenario(params, s, &scenario_run)?;
                means[s.index()] = MomentPair::new(est.mean, est.variance());
                per_scenario[s.index()] = Some(est);
            }
            let combined =
                analytic::aggregate_moments(params.lambda, params.t, &params.weights, &means);
            let mut se_mean_sq = 0.0;
            let mut se_var_sq = 0.0;
            let mut degenerate = 0.0;
            for s in ScenarioId::ALL {
                let Some(est) = &per_scenario[s.index()] else {
                    continue;
                };
                let w = lambda_t * model.weights().get(s);
                se_mean_sq += (w * est.se_mean).powi(2);
                let se_s2 = 2.0 * est.sd * est.se_sd;
                let se_m2 = 2.0 * est.mean.abs() * est.se_mean;
                se_var_sq += w * w * (se_s2 * se_s2 + se_m2 * se_m2);
                degenerate += model.weights().get(s) * est.degenerate_fraction;
            }
            let sd = combined.variance.sqrt();
            let aggregate = Estimate {
                mean: combined.mean,
                sd,
                se_mean: se_mean_sq.sqrt(),
                se_sd: if sd > 0.0 {
                    se_var_sq.sqrt() / (2.0 * sd)
                } else {
                    0.0
                },
                degenerate_fraction: degenerate,
                replications: run.replications,
            };
            Ok(AggregateEstimate {
                aggregate,
                per_scenario,
                mode: run.mode,
            })
        }
        RunMode::AggregateDirect => {
            let poisson = if lambda_t > 0.0 {
                Some(rand_distr::Poisson::new(lambda_t).expect("positive finite rate"))
            } else {
                None
            };
            let acc = chunked_accumulate(run.replications, run.seed, run.workers, |ws, rng| {
                let events = match &poisson {
                    Some(dist) => dist.sample(rng) as u64,
                    None => 0,
                };
                let mut loss = 0.0;
                let mut degenerate = false;
                for _ in 0..events {
                    let s = model.weights().sample(rng);
                    let out = model.run_one(s, ws, rng);
                    loss += out.loss;
                    degenerate |= out.degenerate;
                }
                (loss, degenerate)
            });
            Ok(AggregateEstimate {
                aggregate: Estimate::from_accumulator(&acc),
                per_scenario: [None; 4],
                mode: run.mode,
            })
        }
    }
}
