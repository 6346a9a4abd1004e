//! Contagion scenarios: where an attack starts and which losses count.
//!
//! Each contagion event falls into one of four scenarios, identified by the
//! origin vertex and the subset of the graph whose losses are covered:
//!
//! 1. [`ScenarioId::RootContract`] — origin is the root contract, every
//!    compromised vertex counts.
//! 2. [`ScenarioId::RootUser`] — origin is a uniformly chosen user of the
//!    root, every compromised vertex except the origin counts.
//! 3. [`ScenarioId::ExternalContract`] — origin is a uniformly chosen
//!    non-root contract, only the root and its users count.
//! 4. [`ScenarioId::ExternalUser`] — origin is a uniformly chosen user of a
//!    non-root contract, only the root and its users count.
//!
//! Two evaluation paths produce the per-event loss. [`single_contagion`]
//! composes the transparent primitives (generate the graph, sample every
//! edge, flood the cluster, price the restriction) and is the reference.
//! [`PreparedModel::run_one`] draws the same loss distribution while only
//! materialising state the loss actually depends on; it exists for the Monte
//! Carlo engine, and its agreement with the reference path is checked by
//! statistical tests.

use crate::analytic::{ModelParams, ParamError};
use crate::distributions::{CostSampler, Pmf, PMF_SUM_TOLERANCE};
use crate::graph::{self, TreeStarsGraph, VertexRef};
use crate::percolation::{self, SubsetDescriptor};
use rand::distr::Bernoulli;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Contagion scenario, serialized as its conventional number `1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ScenarioId {
    RootContract = 1,
    RootUser = 2,
    ExternalContract = 3,
    ExternalUser = 4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::RootContract,
        ScenarioId::RootUser,
        ScenarioId::ExternalContract,
        ScenarioId::ExternalUser,
    ];

    /// Zero-based position, for indexing weight/moment arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    /// Conventional one-based scenario number.
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for ScenarioId {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        ScenarioId::ALL
            .into_iter()
            .find(|s| s.number() == value)
            .ok_or_else(|| format!("scenario number must be 1..=4, got {value}"))
    }
}

impl From<ScenarioId> for u8 {
    fn from(s: ScenarioId) -> u8 {
        s.number()
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("scenario weight {index} is {value}, must be finite and >= 0")]
    NegativeWeight { index: usize, value: f64 },
    #[error("scenario weights sum to {sum}, must be 1 within {PMF_SUM_TOLERANCE:e}")]
    SumNotOne { sum: f64 },
}

/// Probability of each scenario per contagion event. Entries are indexed by
/// [`ScenarioId::index`], must be non-negative, and must sum to one within
/// the same tolerance as [`Pmf`]; stored weights are renormalized the same
/// way `Pmf` entries are (sums already within a few ulp of 1 stay untouched,
/// keeping construction idempotent for serialization round-trips).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ScenarioWeights {
    weights: [f64; 4],
}

/// Matches the private renormalization slack of [`Pmf`]: a renormalized
/// 4-entry sum always re-lands inside it.
const WEIGHT_SUM_SLACK: f64 = 5e-14;

impl ScenarioWeights {
    pub fn new(mut weights: [f64; 4]) -> Result<Self, WeightError> {
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::NegativeWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(WeightError::SumNotOne { sum });
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_SLACK {
            for w in &mut weights {
                *w /= sum;
            }
        }
        Ok(Self { weights })
    }

    /// All mass on one scenario.
    pub fn single(s: ScenarioId) -> Self {
        let mut weights = [0.0; 4];
        weights[s.index()] = 1.0;
        Self { weights }
    }

    pub fn as_array(&self) -> &[f64; 4] {
        &self.weights
    }

    pub fn get(&self, s: ScenarioId) -> f64 {
        self.weights[s.index()]
    }

    /// Draws a scenario with these probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ScenarioId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for s in ScenarioId::ALL {
            acc += self.weights[s.index()];
            if u <= acc {
                return s;
            }
        }
        ScenarioId::ExternalUser
    }
}

impl TryFrom<[f64; 4]> for ScenarioWeights {
    type Error = WeightError;

    fn try_from(weights: [f64; 4]) -> Result<Self, Self::Error> {
        ScenarioWeights::new(weights)
    }
}

impl From<ScenarioWeights> for [f64; 4] {
    fn from(w: ScenarioWeights) -> [f64; 4] {
        w.weights
    }
}

/// Result of one contagion event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContagionOutcome {
    pub loss: f64,
    pub scenario: ScenarioId,
    /// True when the realized graph had no vertex that could serve as this
    /// scenario's origin (the loss is then zero by convention).
    pub degenerate: bool,
}

/// The loss-counting subset used by each scenario.
pub fn subset_for(s: ScenarioId) -> SubsetDescriptor {
    match s {
        ScenarioId::RootContract => SubsetDescriptor::All,
        ScenarioId::RootUser => SubsetDescriptor::AllExceptOrigin,
        ScenarioId::ExternalContract | ScenarioId::ExternalUser => SubsetDescriptor::RootStar,
    }
}

/// The vertices a scenario's origin is drawn uniformly from, in a fixed
/// deterministic order (contract index, then user slot).
pub fn origin_set(g: &TreeStarsGraph, s: ScenarioId) -> Vec<VertexRef> {
    match s {
        ScenarioId::RootContract => vec![VertexRef::Contract(0)],
        ScenarioId::RootUser => g.users_of_root().collect(),
        ScenarioId::ExternalContract => g.contracts_excluding_root().collect(),
        ScenarioId::ExternalUser => g.users_excluding_root_star().collect(),
    }
}

/// Draws the scenario's origin uniformly from [`origin_set`] and pairs it
/// with the scenario's subset. Returns `None` for the origin — consuming no
/// randomness — when the set is empty (a degenerate event).
pub fn origin_and_subset<R: Rng + ?Sized>(
    g: &TreeStarsGraph,
    s: ScenarioId,
    rng: &mut R,
) -> (Option<VertexRef>, SubsetDescriptor) {
    let set = origin_set(g, s);
    let origin = if set.is_empty() {
        None
    } else {
        Some(set[rng.random_range(0..set.len())])
    };
    (origin, subset_for(s))
}

/// Runs one contagion event through the transparent primitives.
///
/// Draw order: graph generation, origin choice, edge states, contract costs
/// in contract-index order, then one fresh user-cost draw per compromised
/// covered user. Params are assumed validated.
pub fn single_contagion<R: Rng + ?Sized>(
    params: &ModelParams,
    s: ScenarioId,
    rng: &mut R,
) -> ContagionOutcome {
    let g = graph::TreeStarsGraph::generate(&params.offspring, &params.users, params.radius, rng);
    let (origin, subset) = origin_and_subset(&g, s, rng);
    let Some(origin) = origin else {
        return ContagionOutcome {
            loss: 0.0,
            scenario: s,
            degenerate: true,
        };
    };
    let edges = percolation::sample_edges(&g, params.p, params.q, rng);
    let cluster = percolation::cluster(&g, &edges, origin).expect("origin drawn from this graph");
    let contract_sampler = params.cost_contract.sampler();
    let contract_costs: Vec<f64> = (0..g.contract_count())
        .map(|_| contract_sampler.sample(rng))
        .collect();
    let user_sampler = params.cost_user.sampler();
    let loss = percolation::restricted_loss(&g, &cluster, subset, &contract_costs, &user_sampler, rng);
    ContagionOutcome {
        loss,
        scenario: s,
        degenerate: false,
    }
}

/// Binomial(n, q) sampler with per-`n` inverse-cdf rows precomputed up to the
/// largest user count a contract can have. Rows are built in log space so
/// extreme `q` stays finite; `q = 0` and `q = 1` short-circuit exactly.
#[derive(Debug, Clone)]
struct BinomialSampler {
    q: f64,
    /// `rows[n][k] = P(Binomial(n, q) <= k)`; row 0 is the empty star.
    rows: Vec<Box<[f64]>>,
}

impl BinomialSampler {
    fn new(q: f64, max_n: u32) -> Self {
        let mut rows = Vec::with_capacity(max_n as usize + 1);
        let mut ln_fact = vec![0.0f64; max_n as usize + 1];
        for k in 1..ln_fact.len() {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        for n in 0..=max_n as usize {
            let mut cdf = vec![0.0f64; n + 1];
            if q <= 0.0 {
                cdf.fill(1.0);
            } else if q >= 1.0 {
                cdf[n] = 1.0;
            } else {
                let (ln_q, ln_1q) = (q.ln(), (1.0 - q).ln());
                let mut acc = 0.0;
                for (k, slot) in cdf.iter_mut().enumerate() {
                    let ln_pmf = ln_fact[n] - ln_fact[k] - ln_fact[n - k]
                        + k as f64 * ln_q
                        + (n - k) as f64 * ln_1q;
                    acc = (acc + ln_pmf.exp()).min(1.0);
                    *slot = acc;
                }
                cdf[n] = 1.0;
            }
            rows.push(cdf.into_boxed_slice());
        }
        Self { q, rows }
    }

    /// Number of open edges among `n` independent edges. Consumes one
    /// uniform draw unless `n == 0`.
    fn sample<R: Rng + ?Sized>(&self, n: u32, rng: &mut R) -> u32 {
        if n == 0 {
            return 0;
        }
        let u: f64 = rng.random();
        if let Some(row) = self.rows.get(n as usize) {
            row.iter().position(|&c| u <= c).unwrap_or(n as usize) as u32
        } else {
            // Larger stars than the precomputed range (possible only when a
            // caller samples beyond the pmf maximum) fall back to a direct
            // binomial draw.
            rand_distr::Binomial::new(n as u64, self.q)
                .expect("q validated in 0..=1")
                .sample(rng) as u32
        }
    }
}

/// Model compiled for repeated event evaluation: costs as samplers, edge
/// states as Bernoulli draws, user stars as one binomial draw each.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    offspring: Pmf,
    users: Pmf,
    radius: u32,
    bern_p: Bernoulli,
    bern_q: Bernoulli,
    binom_user: BinomialSampler,
    cost_contract: CostSampler,
    cost_user: CostSampler,
    user_cost_mean: f64,
    weights: ScenarioWeights,
    lambda_t: f64,
}

/// Reusable per-thread buffers for [`PreparedModel::run_one`], so the hot
/// loop performs no allocation.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    /// Depths of compromised contracts whose subtrees are still unexplored.
    pending: Vec<u32>,
    /// Parent index per contract of a fully generated tree.
    parents: Vec<u32>,
    /// Contracts whose offspring are still to be generated, as (index, depth).
    frontier: Vec<(u32, u32)>,
    /// User count per contract of a fully generated tree.
    user_counts: Vec<u32>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

impl PreparedModel {
    pub fn new(params: &ModelParams) -> Result<Self, ParamError> {
        params.validate()?;
        Ok(Self {
            offspring: params.offspring.clone(),
            users: params.users.clone(),
            radius: params.radius,
            bern_p: Bernoulli::new(params.p).expect("p validated"),
            bern_q: Bernoulli::new(params.q).expect("q validated"),
            binom_user: BinomialSampler::new(params.q, params.users.max_value()),
            cost_contract: params.cost_contract.sampler(),
            cost_user: params.cost_user.sampler(),
            user_cost_mean: params.cost_user.mean(),
            weights: params.weights,
            lambda_t: params.lambda * params.t,
        })
    }

    /// Expected number of contagion events over the model horizon.
    pub fn lambda_t(&self) -> f64 {
        self.lambda_t
    }

    pub fn weights(&self) -> &ScenarioWeights {
        &self.weights
    }

    /// Total cost of `k` compromised users. Point costs multiply without
    /// consuming randomness; stochastic costs draw once per user.
    #[inline]
    fn users_cost<R: Rng + ?Sized>(&self, k: u32, rng: &mut R) -> f64 {
        match self.cost_user {
            CostSampler::Point(_) => k as f64 * self.user_cost_mean,
            _ => (0..k).map(|_| self.cost_user.sample(rng)).sum(),
        }
    }

    /// Loss of one compromised contract's star given its user count: the
    /// contract's own cost plus the costs of its compromised users.
    #[inline]
    fn star_loss_with_users<R: Rng + ?Sized>(&self, n_users: u32, rng: &mut R) -> f64 {
        let k = self.binom_user.sample(n_users, rng);
        self.cost_contract.sample(rng) + self.users_cost(k, rng)
    }

    /// Star loss of a contract whose user count has not been drawn yet.
    #[inline]
    fn star_loss<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n_users = self.users.sample(rng);
        self.star_loss_with_users(n_users, rng)
    }

    /// Total star loss of the compromised subtree hanging below an already
    /// compromised contract at `root_depth` (excluding that contract's own
    /// star). Offspring are generated only for compromised contracts:
    /// children of untouched contracts can never be compromised, so their
    /// draws are irrelevant to the loss and are skipped.
    fn compromised_subtree_loss<R: Rng + ?Sized>(
        &self,
        root_depth: u32,
        ws: &mut Workspace,
        rng: &mut R,
    ) -> f64 {
        let mut loss = 0.0;
        ws.pending.clear();
        if root_depth < self.radius {
            ws.pending.push(root_depth);
        }
        while let Some(depth) = ws.pending.pop() {
            let children = self.offspring.sample(rng);
            for _ in 0..children {
                if self.bern_p.sample(rng) {
                    loss += self.star_loss(rng);
                    if depth + 1 < self.radius {
                        ws.pending.push(depth + 1);
                    }
                }
            }
        }
        loss
    }

    /// Generates a full contract tree into `ws.parents` (and the per-contract
    /// user counts too when `with_users` is set), returning the number of
    /// contracts. Scenarios with external origins need the whole tree because
    /// the origin is uniform over its realized vertices.
    fn generate_tree<R: Rng + ?Sized>(&self, with_users: bool, ws: &mut Workspace, rng: &mut R) -> u32 {
        ws.parents.clear();
        ws.user_counts.clear();
        ws.frontier.clear();
        ws.parents.push(0);
        ws.frontier.push((0, 0));
        let mut head = 0;
        while head < ws.frontier.len() {
            let (idx, depth) = ws.frontier[head];
            head += 1;
            if depth == self.radius {
                continue;
            }
            for _ in 0..self.offspring.sample(rng) {
                let child = ws.parents.len() as u32;
                ws.parents.push(idx);
                ws.frontier.push((child, depth + 1));
            }
        }
        if with_users {
            for _ in 0..ws.parents.len() {
                ws.user_counts.push(self.users.sample(rng));
            }
        }
        ws.parents.len() as u32
    }

    /// True when every contract edge on the path from `contract` up to the
    /// root is open. Stops drawing at the first closed edge; the remaining
    /// path edges cannot affect any covered loss.
    fn path_to_root_open<R: Rng + ?Sized>(
        &self,
        mut contract: u32,
        ws: &Workspace,
        rng: &mut R,
    ) -> bool {
        while contract != 0 {
            if !self.bern_p.sample(rng) {
                return false;
            }
            contract = ws.parents[contract as usize];
        }
        true
    }

    /// Runs one contagion event of scenario `s` and returns its outcome.
    ///
    /// Equivalent in distribution to [`single_contagion`]; the two paths are
    /// tied together by statistical tests. The shortcuts and what justifies
    /// them:
    ///
    /// * Offspring of non-compromised contracts are never drawn when the
    ///   covered subset is the whole graph, and user counts are drawn only
    ///   where they carry loss — independence across vertices makes the
    ///   skipped draws irrelevant.
    /// * A compromised contract's open-user count is one binomial draw
    ///   instead of per-edge Bernoulli draws.
    /// * Origins drawn uniformly among a contract's users (scenarios 2 and 4)
    ///   pick only the contract; slots are exchangeable, so the slot index
    ///   never matters.
    /// * Root-external scenarios evaluate only the origin-to-root path and
    ///   the root star, the only pieces the covered subset can see.
    pub fn run_one<R: Rng + ?Sized>(
        &self,
        s: ScenarioId,
        ws: &mut Workspace,
        rng: &mut R,
    ) -> ContagionOutcome {
        let (loss, degenerate) = match s {
            ScenarioId::RootContract => {
                let own = self.star_loss(rng);
                (own + self.compromised_subtree_loss(0, ws, rng), false)
            }
            ScenarioId::RootUser => {
                let root_users = self.users.sample(rng);
                if root_users == 0 {
                    (0.0, true)
                } else if !self.bern_q.sample(rng) {
                    // The origin's own edge is closed: the contagion never
                    // leaves the origin, and the origin itself is not covered.
                    (0.0, false)
                } else {
                    let root_star = self.star_loss_with_users(root_users - 1, rng);
                    (root_star + self.compromised_subtree_loss(0, ws, rng), false)
                }
            }
            ScenarioId::ExternalContract => {
                let contracts = self.generate_tree(false, ws, rng);
                if contracts == 1 {
                    (0.0, true)
                } else {
                    let origin = rng.random_range(1..contracts);
                    if self.path_to_root_open(origin, ws, rng) {
                        (self.star_loss(rng), false)
                    } else {
                        (0.0, false)
                    }
                }
            }
            ScenarioId::ExternalUser => {
                let contracts = self.generate_tree(true, ws, rng);
                let total_users: u64 = ws.user_counts[1..].iter().map(|&u| u as u64).sum();
                if contracts == 1 || total_users == 0 {
                    (0.0, true)
                } else {
                    let mut pick = rng.random_range(0..total_users);
                    let mut origin = 1u32;
                    for (idx, &count) in ws.user_counts.iter().enumerate().skip(1) {
                        if pick < count as u64 {
                            origin = idx as u32;
                            break;
                        }
                        pick -= count as u64;
                    }
                    if self.bern_q.sample(rng) && self.path_to_root_open(origin, ws, rng) {
                        (self.star_loss(rng), false)
                    } else {
                        (0.0, false)
                    }
                }
            }
        };
        ContagionOutcome {
            loss,
            scenario: s,
            degenerate,
        }
    }
}
