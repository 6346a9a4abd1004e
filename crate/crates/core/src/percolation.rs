//! Bond percolation on a tree-stars graph.
//!
//! Every contract-contract edge is independently open with probability `p`,
//! every contract-user edge with probability `q`. A contagion starting at an
//! origin vertex compromises exactly the vertices connected to the origin
//! through open edges (the open cluster). Because the graph is a tree, the
//! path between any two vertices is unique, so membership reduces to "every
//! edge on the path to the origin is open".
//!
//! This module is the explicit per-edge path: it materializes all edge states
//! and the full cluster. The simulation hot loop in [`crate::scenarios`] uses
//! an equivalent fused traversal; the per-edge representation here is what the
//! enumeration oracle and the property tests exercise.

use crate::distributions::CostSampler;
use crate::graph::{TreeStarsGraph, VertexRef};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution};

/// Open/closed state of every edge of one graph realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSample {
    /// State of the edge from contract `c` (≥ 1) to its parent, indexed by
    /// `c - 1`.
    pub contract_edge_open: Vec<bool>,
    /// State of the edge from each user slot to its contract, in flat
    /// `TreeStarsGraph::user_index` order.
    pub user_edge_open: Vec<bool>,
}

/// Subset of the vertex set over which size and loss are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetDescriptor {
    /// Every vertex.
    All,
    /// Every vertex except the contagion origin (scenario 2: the origin's
    /// own cost is not part of the insured loss).
    AllExceptOrigin,
    /// The root contract and its users (scenarios 3 and 4).
    RootStar,
    /// Contract vertices only; used for tree-size cross-checks.
    ContractsOnly,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PercolationError {
    #[error("origin {0:?} is not a vertex of this graph")]
    InvalidOrigin(VertexRef),
}

/// The open cluster of one contagion: per-vertex compromise flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub origin: VertexRef,
    /// Compromise flag per contract.
    pub contracts: Vec<bool>,
    /// Compromise flag per user, in flat `user_index` order. A user is
    /// compromised iff it is the origin, or its contract is compromised and
    /// its own edge is open.
    pub users: Vec<bool>,
}

/// Draws all edge states: contract edges in index order, then user edges in
/// `(contract, slot)` order. The fixed order keeps seeded runs reproducible.
pub fn sample_edges<R: Rng + ?Sized>(
    g: &TreeStarsGraph,
    p: f64,
    q: f64,
    rng: &mut R,
) -> EdgeSample {
    let bern_p = Bernoulli::new(p).expect("p in [0, 1]");
    let bern_q = Bernoulli::new(q).expect("q in [0, 1]");
    let contract_edge_open = (0..g.contract_edge_count())
        .map(|_| bern_p.sample(rng))
        .collect();
    let user_edge_open = (0..g.user_count()).map(|_| bern_q.sample(rng)).collect();
    EdgeSample {
        contract_edge_open,
        user_edge_open,
    }
}

/// Computes the open cluster of `origin` by iterative traversal over open
/// edges. Works for any origin vertex; the origin is always compromised.
pub fn cluster(
    g: &TreeStarsGraph,
    edges: &EdgeSample,
    origin: VertexRef,
) -> Result<Cluster, PercolationError> {
    if !g.contains(origin) {
        return Err(PercolationError::InvalidOrigin(origin));
    }
    let n = g.contract_count();
    let mut contracts = vec![false; n];
    let mut users = vec![false; g.user_count()];

    // Seed the contract traversal. A user origin reaches its contract only
    // if its own edge is open; otherwise the cluster is the origin alone.
    let seed_contract = match origin {
        VertexRef::Contract(c) => Some(c),
        VertexRef::User { contract, slot } => {
            users[g.user_index(contract, slot)] = true;
            if edges.user_edge_open[g.user_index(contract, slot)] {
                Some(contract)
            } else {
                None
            }
        }
    };

    if let Some(seed) = seed_contract {
        contracts[seed as usize] = true;
        // Open edges point both ways; walk the whole contract tree with an
        // explicit stack (no recursion, so degenerate deep chains are fine).
        // Neighbors of contract c are its parent and its children; children
        // are found by scanning, which is fine at oracle-scale graph sizes.
        let mut stack = vec![seed];
        while let Some(c) = stack.pop() {
            if let Some(parent) = g.contracts()[c as usize].parent {
                if edges.contract_edge_open[c as usize - 1] && !contracts[parent as usize] {
                    contracts[parent as usize] = true;
                    stack.push(parent);
                }
            }
            for (child, contract) in g.contracts().iter().enumerate().skip(c as usize + 1) {
                if contract.parent == Some(c)
                    && edges.contract_edge_open[child - 1]
                    && !contracts[child]
                {
                    contracts[child] = true;
                    stack.push(child as u32);
                }
            }
        }
    }

    // Users hang off compromised contracts through their own edge.
    for (c, contract) in g.contracts().iter().enumerate() {
        if contracts[c] {
            for slot in 0..contract.user_count {
                let idx = g.user_index(c as u32, slot);
                users[idx] = users[idx] || edges.user_edge_open[idx];
            }
        }
    }

    Ok(Cluster {
        origin,
        contracts,
        users,
    })
}

/// Number of compromised vertices inside `subset`.
pub fn restricted_size(g: &TreeStarsGraph, c: &Cluster, subset: SubsetDescriptor) -> usize {
    let mut count = 0;
    for (idx, &hit) in c.contracts.iter().enumerate() {
        if hit && vertex_in_subset(VertexRef::Contract(idx as u32), c.origin, subset) {
            count += 1;
        }
    }
    for (contract_idx, contract) in g.contracts().iter().enumerate() {
        for slot in 0..contract.user_count {
            let v = VertexRef::User {
                contract: contract_idx as u32,
                slot,
            };
            if c.users[g.user_index(contract_idx as u32, slot)]
                && vertex_in_subset(v, c.origin, subset)
            {
                count += 1;
            }
        }
    }
    count
}

/// Total loss over compromised vertices inside `subset`. Contract costs are
/// supplied pre-sampled (one draw per contract); each compromised user draws
/// a fresh independent cost from `user_cost`.
pub fn restricted_loss<R: Rng + ?Sized>(
    g: &TreeStarsGraph,
    c: &Cluster,
    subset: SubsetDescriptor,
    contract_costs: &[f64],
    user_cost: &CostSampler,
    rng: &mut R,
) -> f64 {
    debug_assert_eq!(contract_costs.len(), g.contract_count());
    let mut total = 0.0;
    for (idx, &hit) in c.contracts.iter().enumerate() {
        if hit && vertex_in_subset(VertexRef::Contract(idx as u32), c.origin, subset) {
            total += contract_costs[idx];
        }
    }
    for (contract_idx, contract) in g.contracts().iter().enumerate() {
        for slot in 0..contract.user_count {
            let v = VertexRef::User {
                contract: contract_idx as u32,
                slot,
            };
            if c.users[g.user_index(contract_idx as u32, slot)]
                && vertex_in_subset(v, c.origin, subset)
            {
                total += user_cost.sample(rng);
            }
        }
    }
    total
}

fn vertex_in_subset(v: VertexRef, origin: VertexRef, subset: SubsetDescriptor) -> bool {
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
