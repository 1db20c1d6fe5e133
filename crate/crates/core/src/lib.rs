//! Confinement-escape simulation: a bounded arena patrolled by pursuers, an
//! evader that must leave it, a potential-field planner, an entropy-regularized
//! actor-critic learner and the planner-scaffolded trainer built on both.

pub mod env;
pub mod episode;
pub mod geom;
pub mod harness;
pub mod neural;
pub mod pfm;
pub mod rewards;
pub mod sensing;
pub mod sr2l;
