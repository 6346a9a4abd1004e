//! Random tree-stars graph generation.
//!
//! A tree-stars graph is a rooted tree of *contracts* (the root has index 0)
//! in which every contract is additionally the center of a star of *users*.
//! Contracts at depth below `radius` draw an independent offspring count from
//! the offspring pmf; every contract draws an independent user count from the
//! user pmf. Users are leaves attached to exactly one contract and are
//! addressed as `(contract index, slot)`.
//!
//! The radius counts offspring generations below the root: `radius = 0` is a
//! bare root star, `radius = 2` gives a root plus two generations.

use crate::distributions::Pmf;
use rand::Rng;

/// One contract vertex. The root is index 0 and has no parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contract {
    /// Index of the parent contract; `None` exactly for the root.
    pub parent: Option<u32>,
    /// Graph distance from the root through contract edges.
    pub depth: u32,
    /// Number of user leaves attached to this contract.
    pub user_count: u32,
}

/// A vertex of the graph: either a contract or a user leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexRef {
    Contract(u32),
    /// User `slot` (0-based) of contract `contract`.
    User { contract: u32, slot: u32 },
}

/// One realization of the random tree-stars graph.
///
/// Contract edges are implicit (one per non-root contract, to its parent);
/// user edges are implicit (one per user slot). Contracts are stored in
/// breadth-first order, so every contract's index is larger than its parent's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStarsGraph {
    contracts: Vec<Contract>,
    /// Prefix sums of user counts: users of contract `c` occupy the flat
    /// slot range `user_offsets[c]..user_offsets[c + 1]`.
    user_offsets: Vec<u32>,
}

impl TreeStarsGraph {
    /// Generates one graph realization.
    ///
    /// Construction is breadth-first with children drawn left to right, then
    /// user counts drawn in contract-index order. The fixed draw order makes
    /// generation bit-reproducible for a given random stream.
    pub fn generate<R: Rng + ?Sized>(
        offspring: &Pmf,
        users: &Pmf,
        radius: u32,
        rng: &mut R,
    ) -> Self {
        let mut contracts = vec![Contract {
            parent: None,
            depth: 0,
            user_count: 0,
        }];
        let mut level_start = 0;
        for depth in 0..radius {
            let level_end = contracts.len();
            if level_start == level_end {
                break; // previous generation died out
            }
            for parent in level_start..level_end {
                let children = offspring.sample(rng);
                for _ in 0..children {
                    contracts.push(Contract {
                        parent: Some(parent as u32),
                        depth: depth + 1,
                        user_count: 0,
                    });
                }
            }
            level_start = level_end;
        }
        let mut user_offsets = Vec::with_capacity(contracts.len() + 1);
        let mut total = 0;
        user_offsets.push(0);
        for contract in &mut contracts {
            contract.user_count = users.sample(rng);
            total += contract.user_count;
            user_offsets.push(total);
        }
        Self {
            contracts,
            user_offsets,
        }
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn contract_count(&self) -> usize {
        self.contracts.len()
    }

    /// Total number of user leaves.
    pub fn user_count(&self) -> usize {
        *self.user_offsets.last().expect("offsets non-empty") as usize
    }

    /// Total number of vertices (contracts plus users).
    pub fn vertex_count(&self) -> usize {
        self.contract_count() + self.user_count()
    }

    /// Number of contract-contract edges (`|E₊|`, one per non-root contract).
    pub fn contract_edge_count(&self) -> usize {
        self.contract_count() - 1
    }

    /// Flat index of user `(contract, slot)` in `0..user_count()`.
    pub fn user_index(&self, contract: u32, slot: u32) -> usize {
        debug_assert!(slot < self.contracts[contract as usize].user_count);
        (self.user_offsets[contract as usize] + slot) as usize
    }

    /// Users attached to the root: the origin set of scenario 2.
    pub fn users_of_root(&self) -> impl Iterator<Item = VertexRef> + '_ {
        (0..self.contracts[0].user_count).map(|slot| VertexRef::User { contract: 0, slot })
    }

    /// Non-root contracts: the origin set of scenario 3.
    pub fn contracts_excluding_root(&self) -> impl Iterator<Item = VertexRef> + '_ {
        (1..self.contracts.len() as u32).map(VertexRef::Contract)
    }

    /// Users of non-root contracts: the origin set of scenario 4.
    pub fn users_excluding_root_star(&self) -> impl Iterator<Item = VertexRef> + '_ {
        self.contracts
            .iter()
            .enumerate()
            .skip(1)
            .flat_map(|(c, contract)| {
                (0..contract.user_count).map(move |slot| VertexRef::User {
                    contract: c as u32,
                    slot,
                })
            })
    }

    /// Checks whether `v` refers to an actual vertex of this graph.
    pub fn contains(&self, v: VertexRef) -> bool {
        match v {
            VertexRef::Contract(c) => (c as usize) < self.contracts.len(),
            VertexRef::User { contract, slot } => {
                (contract as usize) < self.contracts.len()
                    && slot < self.contracts[contract as usize].user_count
            }
        }
    }
}
