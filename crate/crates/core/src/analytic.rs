//! Closed-form loss moments.
//!
//! The per-scenario loss of one contagion factors into two independent
//! pieces: the number of compromised contracts (a thinned branching process
//! truncated at the tree radius) and the loss attached to each compromised
//! contract's star (its own cost plus the costs of its compromised users).
//! This module evaluates the resulting exact mean/variance formulas for all
//! four scenarios, combines them into compound-Poisson aggregate moments, and
//! prices the aggregate loss under the two classical premium principles.
//!
//! Scenarios 3 and 4 admit closed forms only when both degree distributions
//! are point masses; for stochastic degrees those scenarios are served by the
//! Monte Carlo engine instead, and [`scenario34_moments`] refuses rather than
//! approximating.

use crate::distributions::{CostSpec, Pmf};
use crate::scenarios::{ScenarioId, ScenarioWeights};
use serde::{Deserialize, Serialize};

/// Threshold on `|1 − μ₊p|` below which the branching closed form switches to
/// the exact generation recursion: the geometric-series denominators vanish
/// at criticality and lose all precision shortly before it.
const CRITICAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    /// Scenarios 3/4 with an empty origin set: no contract other than the
    /// root (degree 0 or radius 0) can host an external origin.
    #[error("origin set is empty: root-external scenarios need offspring degree >= 1 and radius >= 1 (got degree {d_plus}, radius {radius})")]
    EmptyOriginSet { d_plus: u32, radius: u32 },
    /// Scenarios 3/4 with stochastic degree distributions have no closed
    /// form; only the simulation path covers them.
    #[error("no closed form for scenarios 3/4 with stochastic degree pmfs; use the Monte Carlo estimator")]
    UnsupportedStochasticDegrees,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parameter {field} = {value} out of range: {requirement}")]
pub struct ParamError {
    pub field: &'static str,
    pub value: f64,
    pub requirement: &'static str,
}

/// Mean and variance of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Complete parameter set of the contagion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Offspring pmf of the contract tree (X₊).
    pub offspring: Pmf,
    /// User-count pmf per contract (X₋).
    pub users: Pmf,
    /// Offspring generations below the root.
    pub radius: u32,
    /// Open probability of contract-contract edges.
    pub p: f64,
    /// Open probability of contract-user edges.
    pub q: f64,
    pub cost_contract: CostSpec,
    pub cost_user: CostSpec,
    /// Probability of each contagion scenario per event.
    pub weights: ScenarioWeights,
    /// Contagion arrival rate per unit time.
    pub lambda: f64,
    /// Time horizon of the aggregate loss.
    pub t: f64,
    /// Safety loading of the premium principles.
    pub loading_delta: f64,
}

impl ModelParams {
    /// Checks the numeric fields that the typed components do not already
    /// guarantee. `lambda = 0` or `t = 0` is allowed and yields a zero
    /// aggregate loss.
    pub fn validate(&self) -> Result<(), ParamError> {
        let check_prob = |field: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ParamError {
                    field,
                    value,
                    requirement: "must lie in [0, 1]",
                })
            }
        };
        check_prob("p", self.p)?;
        check_prob("q", self.q)?;
        let check_nonneg = |field: &'static str, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(ParamError {
                    field,
                    value,
                    requirement: "must be finite and >= 0",
                })
            }
        };
        check_nonneg("lambda", self.lambda)?;
        check_nonneg("t", self.t)?;
        check_nonneg("loading_delta", self.loading_delta)?;
        Ok(())
    }
}

/// Moments of the compromised-contract count for a contagion starting at the
/// root: `S₊ = Σ_{r=0}^{R} Z_r` where `Z` is a branching process whose
/// offspring law is the graph offspring law thinned by the edge-open
/// probability `p` (mean `m = μ₊p`, variance `v = p(1−p)μ₊ + p²σ₊²`).
///
/// Closed forms:
/// `E(S₊) = (1 − m^{R+1})/(1 − m)` and
/// `Var(S₊) = v/(1−m)² · [(1 − m^{2R+1})/(1 − m) − (2R+1)·m^R]`.
/// Inside the critical band `|1 − m| < 1e-9` the denominators cancel to
/// nothing, so evaluation switches to [`branching_moments_recursive`], which
/// is exact for every `m` including `m = 1`.
pub fn branching_moments(mu_plus: f64, sigma2_plus: f64, p: f64, radius: u32) -> MomentPair {
    let m = mu_plus * p;
    if (1.0 - m).abs() < CRITICAL_BAND {
        return branching_moments_recursive(mu_plus, sigma2_plus, p, radius);
    }
    let v = p * (1.0 - p) * mu_plus + p * p * sigma2_plus;
    let r = radius as f64;
    let mean = (1.0 - m.powf(r + 1.0)) / (1.0 - m);
    let variance = v / ((1.0 - m) * (1.0 - m))
        * ((1.0 - m.powf(2.0 * r + 1.0)) / (1.0 - m) - (2.0 * r + 1.0) * m.powf(r));
    MomentPair::new(mean, variance.max(0.0))
}

/// Exact generation-by-generation recursion for the same moments as
/// [`branching_moments`], valid at every `m` including criticality.
///
/// With `E(Z_0) = 1`, `Var(Z_0) = 0`:
/// `E(Z_{r+1}) = m·E(Z_r)`, `Var(Z_{r+1}) = m²·Var(Z_r) + v·E(Z_r)`, and
/// `Cov(Z_r, Z_s) = m^{s−r}·Var(Z_r)` for `r < s`, so the variance of the
/// partial sum accumulates as `Σ_r Var(Z_r)·(1 + 2·Σ_{k=1}^{R−r} m^k)`.
pub fn branching_moments_recursive(
    mu_plus: f64,
    sigma2_plus: f64,
    p: f64,
    radius: u32,
) -> MomentPair {
    let m = mu_plus * p;
    let v = p * (1.0 - p) * mu_plus + p * p * sigma2_plus;
    let r = radius as usize;
    let mut ez = vec![0.0; r + 1];
    let mut vz = vec![0.0; r + 1];
    ez[0] = 1.0;
    for gen in 0..r {
        ez[gen + 1] = m * ez[gen];
        vz[gen + 1] = m * m * vz[gen] + v * ez[gen];
    }
    let mean: f64 = ez.iter().sum();
    // tail = Σ_{k=1}^{R−gen} m^k, built backwards so each generation costs O(1).
    let mut variance = 0.0;
    let mut tail = 0.0;
    for gen in (0..=r).rev() {
        variance += vz[gen] * (1.0 + 2.0 * tail);
        tail = m * (1.0 + tail);
    }
    MomentPair::new(mean, variance.max(0.0))
}

/// Moments of the loss contributed by one compromised contract's star: the
/// contract's own cost plus the costs of its compromised users, each user
/// being hit independently with probability `q`.
///
/// `E(C₀) = E(Ĉ₊) + qμ₋E(Ĉ₋)` and
/// `Var(C₀) = Var(Ĉ₊) + (σ₋² − μ₋)(qE(Ĉ₋))² + qμ₋E(Ĉ₋²)`.
pub fn star_cost_moments(
    q: f64,
    mu_minus: f64,
    sigma2_minus: f64,
    cost_contract: &CostSpec,
    cost_user: &CostSpec,
) -> MomentPair {
    let qeu = q * cost_user.mean();
    let mean = cost_contract.mean() + mu_minus * qeu;
    let variance = cost_contract.variance()
        + (sigma2_minus - mu_minus) * qeu * qeu
        + q * mu_minus * cost_user.second_moment();
    MomentPair::new(mean, variance.max(0.0))
}

/// Scenario 1 (root origin, loss over the whole graph):
/// `μ₁ = E(S₊)·E(C₀)` and `σ₁² = E(S₊)·Var(C₀) + Var(S₊)·E(C₀)²`,
/// the compound of the compromised-contract count with i.i.d. star losses.
pub fn scenario1_moments(params: &ModelParams) -> MomentPair {
    let size = branching_moments(
        params.offspring.mean(),
        params.offspring.variance(),
        params.p,
        params.radius,
    );
    let star = star_cost_moments(
        params.q,
        params.users.mean(),
        params.users.variance(),
        &params.cost_contract,
        &params.cost_user,
    );
    MomentPair::new(
        size.mean * star.mean,
        size.mean * star.variance + size.variance * star.mean * star.mean,
    )
}

/// Scenario 2 (origin uniform over the root's users, loss excludes the
/// origin's own cost).
///
/// Conditioning on the origin's user edge: the loss equals `ξ·W` where
/// `ξ = Bernoulli(q)` is the state of that edge and `W` is a root-origin
/// loss with the origin's own contribution removed. `ξ` and `W` are
/// independent (the origin's edge touches no other vertex), with
/// `E(W) = μ₁ − qE(Ĉ₋)` and `Var(W) = σ₁² − Var(Ĉ₋·ζ)` where
/// `Var(Ĉ₋·ζ) = qE(Ĉ₋²) − q²E(Ĉ₋)²` is the variance of one user's
/// contribution under a root-origin contagion. Hence
/// `μ₂ = q·E(W)` and `σ₂² = q·Var(W) + q(1−q)·E(W)²`.
///
/// For a point-mass user cost this reduces to
/// `σ₂² = qσ₁² + q(1−q)[(μ₁ − qE(Ĉ₋))² − q·E(Ĉ₋)²]`.
pub fn scenario2_moments(params: &ModelParams) -> MomentPair {
    let s1 = scenario1_moments(params);
    let q = params.q;
    let eu = params.cost_user.mean();
    let user_term_var = q * params.cost_user.second_moment() - q * q * eu * eu;
    let w_mean = s1.mean - q * eu;
    let w_variance = s1.variance - user_term_var;
    MomentPair::new(
        q * w_mean,
        (q * w_variance + q * (1.0 - q) * w_mean * w_mean).max(0.0),
    )
}

/// Probability that a contagion from a uniformly chosen non-root contract
/// (`P⁺`) or non-root-star user (`P⁻ = q·P⁺`) reaches the root of the
/// deterministic tree with offspring degree `d₊` and radius `radius`.
///
/// A contract at depth `r` reaches the root with probability `p^r`, and the
/// number of contracts at depth `r` is `d₊^r`, so with
/// `φ(a) = Σ_{r=0}^{R−1} a^r`:  `P⁺ = p·φ(d₊p)/φ(d₊)`.
/// The sums are evaluated term by term, never via the geometric ratio, so
/// `d₊ = 1` and `d₊p = 1` need no special-casing.
pub fn root_hit_probability(
    d_plus: u32,
    radius: u32,
    p: f64,
    q: f64,
) -> Result<(f64, f64), AnalyticError> {
    if d_plus == 0 || radius == 0 {
        return Err(AnalyticError::EmptyOriginSet { d_plus, radius });
    }
    let phi = |a: f64| -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for _ in 0..radius {
            sum += term;
            term *= a;
        }
        sum
    };
    let p_plus = p * phi(d_plus as f64 * p) / phi(d_plus as f64);
    Ok((p_plus, q * p_plus))
}

/// Scenarios 3 and 4 (external origin, loss over the root star) for
/// deterministic degree distributions. With `h` the probability that the
/// contagion reaches the root (`P⁺` for scenario 3, `P⁻` for scenario 4) and
/// `(E(C₀), Var(C₀))` the root-star loss moments:
/// `μ = h·E(C₀)` and `σ² = h·[(1 − h)·E(C₀)² + Var(C₀)]`.
pub fn scenario34_moments(params: &ModelParams) -> Result<(MomentPair, MomentPair), AnalyticError> {
    let (Some(d_plus), Some(d_minus)) = (
        params.offspring.as_point_mass(),
        params.users.as_point_mass(),
    ) else {
        return Err(AnalyticError::UnsupportedStochasticDegrees);
    };
    let (p_plus, p_minus) = root_hit_probability(d_plus, params.radius, params.p, params.q)?;
    let star = star_cost_moments(
        params.q,
        d_minus as f64,
        0.0,
        &params.cost_contract,
        &params.cost_user,
    );
    let hit_moments = |h: f64| {
        MomentPair::new(
            h * star.mean,
            h * ((1.0 - h) * star.mean * star.mean + star.variance),
        )
    };
    Ok((hit_moments(p_plus), hit_moments(p_minus)))
}

/// Per-scenario moment dispatcher. Scenarios 3/4 propagate the closed-form
/// availability errors of [`scenario34_moments`].
pub fn scenario_moments(params: &ModelParams, s: ScenarioId) -> Result<MomentPair, AnalyticError> {
    match s {
        ScenarioId::RootContract => Ok(scenario1_moments(params)),
        ScenarioId::RootUser => Ok(scenario2_moments(params)),
        ScenarioId::ExternalContract => scenario34_moments(params).map(|(s3, _)| s3),
        ScenarioId::ExternalUser => scenario34_moments(params).map(|(_, s4)| s4),
    }
}

/// Compound-Poisson aggregate moments over the time horizon: contagions
/// arrive at rate `lambda`, each independently of scenario `j` with
/// probability `Q_j`, so
/// `E(L_t) = Σ_j λtQ_jμ_j` and `Var(L_t) = Σ_j λtQ_j(σ_j² + μ_j²)`.
///
/// Entries of `moments` whose scenario weight is zero are ignored and may
/// hold any placeholder.
pub fn aggregate_moments(
    lambda: f64,
    t: f64,
    weights: &ScenarioWeights,
    moments: &[MomentPair; 4],
) -> MomentPair {
    let lt = lambda * t;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for (weight, m) in weights.as_array().iter().zip(moments) {
        if *weight > 0.0 {
            mean += lt * weight * m.mean;
            variance += lt * weight * (m.variance + m.mean * m.mean);
        }
    }
    MomentPair::new(mean, variance)
}

/// Premium principle applied to aggregate loss moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PremiumPrinciple {
    /// `(1 + δ)·E(L)`.
    Expectation,
    /// `E(L) + δ·sd(L)`.
    StdDev,
}

pub fn premium(moments: &MomentPair, delta: f64, principle: PremiumPrinciple) -> f64 {
    match principle {
        PremiumPrinciple::Expectation => (1.0 + delta) * moments.mean,
        PremiumPrinciple::StdDev => moments.mean + delta * moments.sd(),
    }
}
