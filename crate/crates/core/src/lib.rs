//! Exact computation and certification of worst-case guarantees for `n`
//! agents choosing among `p` outcomes by lottery.
//!
//! A guarantee is a lottery over ranks (rank 1 is an agent's worst outcome).
//! It is feasible when, at every preference profile, some outcome lottery
//! gives every agent a rank distribution stochastically dominating it, and
//! maximal when no other feasible guarantee dominates it.

pub mod cache;
pub mod compose;
pub mod duality;
pub mod error;
pub mod feasibility;
pub mod lottery;
pub mod maximality;
pub mod profile;
pub mod protocols;
pub mod rational;
pub mod ratlp;
pub mod suites;

pub use error::{Error, Result};
pub use lottery::RankLottery;
pub use profile::{OutcomeLottery, Preference, Profile};
pub use rational::Rational;
