//! Independent brute-force references for the fast paths: exact binomial
//! tails in big-integer arithmetic, a generic upper-concave-hull majorant,
//! and exact expectations over finite discrete laws.
//!
//! None of this is fast; it exists to be trusted.

mod discrete;
mod exact;
mod hull;

pub use discrete::{expected_plus_square, extremal_moment_check, DiscreteDistribution, ExtremalOutcome};
pub use exact::{exact_tail, exact_tails, ExactProb, ORACLE_MAX_N};
pub use hull::{
    concave_hull_majorant, dense_majorant_hull, dense_majorant_hull_with, lc_majorant_on_integers, oracle_check, HullFunction,
    OracleCheck,
};
