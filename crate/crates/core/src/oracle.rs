//! Exact loss moments by exhaustive enumeration of edge configurations.
//!
//! For a fixed small graph, every subset of edges is assigned its exact
//! probability and the covered loss moments are summed over all `2^|E|`
//! configurations and all equally likely origins. Reachability is computed
//! with a plain flood fill over an adjacency list built here, on purpose not
//! sharing any code with [`crate::percolation::cluster`]: this module is the
//! referee for both the closed forms and the simulation, so it must not
//! inherit their assumptions.
//!
//! Costs never need to be enumerated. Conditional on a configuration and
//! origin, the covered loss is a sum of `n_c` i.i.d. contract costs and
//! `n_u` i.i.d. user costs, so its conditional mean and variance follow from
//! the cost moments alone, and the unconditional moments combine the
//! conditional ones exactly. The result is exact for stochastic costs, but
//! requires a fixed graph, i.e. point-mass degree distributions.
//!
//! Cost is `Θ(2^|E|)`; construction refuses graphs with more than 24 edges.

use crate::analytic::MomentPair;
use crate::distributions::CostSpec;
use crate::graph::{TreeStarsGraph, VertexRef};
use crate::percolation::SubsetDescriptor;
use crate::scenarios::{origin_set, subset_for, ScenarioId};

/// Hard ceiling on enumerable edges; beyond this the loop count (`2^|E|`)
/// stops being a unit-test cost.
const MAX_EDGES: usize = 24;

/// Exact mean and variance of the covered loss of one contagion of scenario
/// `s` on the fixed graph `g`, or `None` when the scenario's origin set is
/// empty (the degenerate case).
pub fn enumerate_loss_moments(
    g: &TreeStarsGraph,
    s: ScenarioId,
    p: f64,
    q: f64,
    cost_contract: &CostSpec,
    cost_user: &CostSpec,
) -> Option<MomentPair> {
    let origins = origin_set(g, s);
    if origins.is_empty() {
        return None;
    }
    let subset = subset_for(s);
    let enumerator = Enumerator::new(g, p, q);

    let (cc_mean, cc_var) = (cost_contract.mean(), cost_contract.variance());
    let (cu_mean, cu_var) = (cost_user.mean(), cost_user.variance());
    let mut mean = 0.0;
    let mut second_moment = 0.0;
    for &origin in &origins {
        enumerator.for_each_config(origin, |weight, reach| {
            let mut n_c = 0u32;
            let mut n_u = 0u32;
            for v in enumerator.vertices() {
                if reach.contains_id(enumerator.vertex_id(v)) && covered(v, origin, subset) {
                    match v {
                        VertexRef::Contract(_) => n_c += 1,
                        VertexRef::User { .. } => n_u += 1,
                    }
                }
            }
            let m = n_c as f64 * cc_mean + n_u as f64 * cu_mean;
            let v = n_c as f64 * cc_var + n_u as f64 * cu_var;
            mean += weight * m;
            second_moment += weight * (v + m * m);
        });
    }
    let norm = origins.len() as f64;
    mean /= norm;
    second_moment /= norm;
    Some(MomentPair::new(mean, (second_moment - mean * mean).max(0.0)))
}

/// Loss-coverage rule of each subset, restated independently of the
/// percolation module so the two implementations check each other.
fn covered(v: VertexRef, origin: VertexRef, subset: SubsetDescriptor) -> bool {
    match subset {
        SubsetDescriptor::All => true,
        SubsetDescriptor::AllExceptOrigin => v != origin,
        SubsetDescriptor::RootStar => matches!(
            v,
            VertexRef::Contract(0) | VertexRef::User { contract: 0, .. }
        ),
        SubsetDescriptor::ContractsOnly => matches!(v, VertexRef::Contract(_)),
    }
}

/// Reachability flags of one configuration, indexed by internal vertex id.
pub struct ReachableSet {
    visited: Vec<bool>,
}

impl ReachableSet {
    fn contains_id(&self, id: usize) -> bool {
        self.visited[id]
    }
}

/// Enumerates all edge configurations of one small graph, exposing exact
/// configuration probabilities and flood-fill reachability. Also usable on
/// its own (see [`Enumerator::for_each_config`]) to cross-check cluster
/// construction edge state by edge state.
pub struct Enumerator {
    /// `adjacency[v] = (neighbor, edge bit)`; contracts first, then users in
    /// flat user-index order.
    adjacency: Vec<Vec<(usize, u32)>>,
    /// Open probability per edge bit: bit `c - 1` joins contract `c` to its
    /// parent, bit `contract_edges + u` is flat user `u`'s edge. This is the
    /// same edge order the percolation sampler uses, so a configuration mask
    /// translates directly to its edge states.
    edge_prob: Vec<f64>,
    contract_count: usize,
    /// User slots per contract, for id-to-vertex translation.
    user_counts: Vec<u32>,
}

impl Enumerator {
    pub fn new(g: &TreeStarsGraph, p: f64, q: f64) -> Self {
        let contract_count = g.contract_count();
        let contract_edges = g.contract_edge_count();
        let total_edges = contract_edges + g.user_count();
        assert!(
            total_edges <= MAX_EDGES,
            "enumeration over {total_edges} edges would take 2^{total_edges} steps"
        );
        let mut adjacency = vec![Vec::new(); contract_count + g.user_count()];
        let mut edge_prob = Vec::with_capacity(total_edges);
        for (c, contract) in g.contracts().iter().enumerate().skip(1) {
            let bit = (c - 1) as u32;
            let parent = contract.parent.expect("non-root has a parent") as usize;
            adjacency[c].push((parent, bit));
            adjacency[parent].push((c, bit));
            edge_prob.push(p);
        }
        for (c, contract) in g.contracts().iter().enumerate() {
            for slot in 0..contract.user_count {
                let user = contract_count + g.user_index(c as u32, slot);
                let bit = (contract_edges + g.user_index(c as u32, slot)) as u32;
                adjacency[c].push((user, bit));
                adjacency[user].push((c, bit));
                edge_prob.push(q);
            }
        }
        Self {
            adjacency,
            edge_prob,
            contract_count,
            user_counts: g.contracts().iter().map(|c| c.user_count).collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_prob.len()
    }

    fn vertex_id(&self, v: VertexRef) -> usize {
        match v {
            VertexRef::Contract(c) => c as usize,
            VertexRef::User { contract, slot } => {
                let before: u32 = self.user_counts[..contract as usize].iter().sum();
                self.contract_count + (before + slot) as usize
            }
        }
    }

    /// All vertices in internal id order.
    fn vertices(&self) -> impl Iterator<Item = VertexRef> + '_ {
        let contracts = (0..self.contract_count).map(|c| VertexRef::Contract(c as u32));
        let users = self
            .user_counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| {
                (0..n).map(move |slot| VertexRef::User {
                    contract: c as u32,
                    slot,
                })
            });
        contracts.chain(users)
    }

    /// Exact probability of the configuration encoded by `mask` (bit set =
    /// edge open).
    pub fn config_probability(&self, mask: u64) -> f64 {
        self.edge_prob
            .iter()
            .enumerate()
            .map(|(bit, &prob)| {
                if mask >> bit & 1 == 1 {
                    prob
                } else {
                    1.0 - prob
                }
            })
            .product()
    }

    /// Flood fill from `origin` over the open edges of `mask`.
    pub fn reach(&self, origin: VertexRef, mask: u64) -> ReachableSet {
        let mut visited = vec![false; self.adjacency.len()];
        let mut stack = vec![self.vertex_id(origin)];
        visited[stack[0]] = true;
        while let Some(v) = stack.pop() {
            for &(next, bit) in &self.adjacency[v] {
                if mask >> bit & 1 == 1 && !visited[next] {
                    visited[next] = true;
                    stack.push(next);
                }
            }
        }
        ReachableSet { visited }
    }

    /// Calls `visit(probability, reachable)` once per edge configuration.
    pub fn for_each_config(&self, origin: VertexRef, mut visit: impl FnMut(f64, &ReachableSet)) {
        for mask in 0..1u64 << self.edge_count() {
            let weight = self.config_probability(mask);
            let reach = self.reach(origin, mask);
            visit(weight, &reach);
        }
    }

    /// True when the reachable set contains the vertex (public counterpart
    /// of the internal id lookup, for cross-checking tests).
    pub fn reaches(&self, reach: &ReachableSet, v: VertexRef) -> bool {
        reach.contains_id(self.vertex_id(v))
    }
}
