//! Sharp upper bounds on tail probabilities of supermartingales whose
//! differences are bounded from above.
//!
//! The central object is the least log-concave majorant of the linearly
//! interpolated binomial tail, evaluated in closed form through a lattice
//! of knots (see [`majorant`]). Around it sit the older bounds it improves
//! on ([`bounds`]), the machinery that decides where the new bound dominates
//! the old one ([`comparison`]), brute-force references ([`oracle`]) and a
//! Monte Carlo harness ([`simulate`]).
//!
//! All tail arithmetic is carried out in the log domain through
//! [`LogValue`], so probabilities far below `f64::MIN_POSITIVE` remain
//! meaningful.

pub mod binomial;
pub mod bounds;
pub mod comparison;
mod error;
pub mod majorant;
pub mod oracle;
pub mod simulate;

pub use binomial::{log_pmf, normal_tail, BinomialSpec, LogValue, TailTable};
pub use bounds::{
    c_alpha, gaussian_bound, hoeffding_baseline, BoundReport, MartingaleBounds, Query,
    RademacherBounds, RademacherSpec, SupermartingaleSpec,
};
pub use comparison::ComparisonConstants;
pub use error::{Error, Result};
pub use majorant::{Knot, KnotLattice, Majorant};
