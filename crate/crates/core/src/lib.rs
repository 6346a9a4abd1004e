//! Loss contagion on random tree-stars graphs.
//!
//! A tree-stars graph is a rooted tree of smart contracts in which every
//! contract is additionally the center of a star of user vertices. A contagion
//! starts at an origin vertex and spreads by bond percolation: each
//! contract-contract edge is open with probability `p`, each contract-user
//! edge with probability `q`. Every compromised vertex realizes a random
//! monetary cost, and the loss of one contagion event is the total cost of the
//! compromised vertices inside a scenario-dependent subset of the graph.
//!
//! The crate provides three independent routes to the loss moments:
//!
//! * [`analytic`] — closed-form mean/variance per scenario and for the
//!   compound-Poisson aggregate loss,
//! * [`montecarlo`] — a deterministically seeded, parallel simulation engine,
//! * [`oracle`] — exhaustive weighted enumeration over all edge
//!   configurations, exact on small graphs.
//!
//! [`config`] and [`report`] drive batch experiments from JSON configs and
//! emit CSV reports; the `treestars` binary wraps them in a CLI.

pub mod analytic;
pub mod config;
pub mod distributions;
pub mod graph;
pub mod montecarlo;
pub mod oracle;
pub mod percolation;
pub mod report;
pub mod scenarios;
