//! Where the new bound provably beats the old one.
//!
//! `u*` is the unique root in `(0, 1)` of
//!
//! ```text
//! h(u) = ln((1 - u) / (-ln u)) - 1 - (1/2) (1 + u) ln(u) / (1 - u),
//! ```
//!
//! `u** = u* / (1 - u*)`, and `j** = floor((n - u** q/p) / (1 + u** q/p))`.
//! The new bound is at most the old one for every `x <= j**`, and for every
//! `x <= n` once `n <= (p/q) / u**`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::binomial::BinomialSpec;
use crate::error::{domain, Error, Result};
use crate::majorant::Majorant;

/// `h(u)` for `0 < u < 1`.
pub fn h_function(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return domain(format!("h(u) requires 0 < u < 1, got {u}"));
    }
    Ok(h_unchecked(u))
}

fn h_unchecked(u: f64) -> f64 {
    let ln_u = u.ln();
    ((-u).ln_1p() - (-ln_u).ln()) - 1.0 - 0.5 * (1.0 + u) * ln_u / (1.0 - u)
}

/// Bisection of a sign change of `f` on `[lo, hi]` down to adjacent floats.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-17 {
            return mid;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn locate_u_star() -> Result<f64> {
    // h decreases from +inf, dips below zero and climbs back to 0 at 1-.
    let mut grid: Vec<f64> = (1..=15).rev().map(|k| 10f64.powi(-k)).collect();
    grid.push(0.5);
    grid.extend((1..=12).map(|k| 1.0 - 10f64.powi(-k)));
    let bracket = grid
        .windows(2)
        .find(|w| h_unchecked(w[0]) > 0.0 && h_unchecked(w[1]) < 0.0)
        .ok_or_else(|| Error::Internal("no sign change of h on the scan grid".into()))?;
    Ok(bisect(h_unchecked, bracket[0], bracket[1]))
}

fn r_alpha(alpha: f64) -> f64 {
    (0.5 - alpha).ln() / -alpha
}

/// Constants of the comparison between the two bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonConstants {
    pub u_star: f64,
    pub u_double_star: f64,
    pub alpha_star: f64,
    pub r_alpha_star: f64,
    pub exp_r_minus_one: f64,
}

impl ComparisonConstants {
    fn compute() -> Result<Self> {
        let u_star = locate_u_star()?;
        let (alpha_star, r_alpha_star, exp_r_minus_one) = alpha_star_constants();
        Ok(ComparisonConstants {
            u_star,
            u_double_star: u_double_star_from(u_star),
            alpha_star,
            r_alpha_star,
            exp_r_minus_one,
        })
    }

    /// Process-wide constants, computed once.
    pub fn get() -> &'static ComparisonConstants {
        static CONSTANTS: OnceLock<ComparisonConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| Self::compute().expect("the scan grid brackets u*"))
    }

    /// `1 / u**`, the constant in the all-`x` dominance condition.
    pub fn inverse_u_double_star(&self) -> f64 {
        1.0 / self.u_double_star
    }
}

/// `u*`
pub fn u_star() -> f64 {
    ComparisonConstants::get().u_star
}

/// `u / (1 - u)`
pub fn u_double_star_from(u: f64) -> f64 {
    u / (1.0 - u)
}

/// `u** = u* / (1 - u*)`
pub fn u_double_star() -> f64 {
    ComparisonConstants::get().u_double_star
}

/// Minimizer and minimum of `r(a) = ln(1/2 - a) / (-a)` on `(0, 1/2)`, and
/// `e^{r(a*)} - 1`.
pub fn alpha_star_constants() -> (f64, f64, f64) {
    // sign of r'(a) is the sign of a / (1/2 - a) + ln(1/2 - a)
    let slope = |a: f64| a / (0.5 - a) + (0.5 - a).ln();
    let alpha = bisect(slope, 1e-9, 0.5 - 1e-9);
    let r = r_alpha(alpha);
    (alpha, r, r.exp_m1())
}

/// `floor((n - u** q/p) / (1 + u** q/p))`; may be negative.
///
/// When the quotient lands within `1e-9` of an integer `k`, the defining
/// inequality `p_{k+1}/p_k >= u**`, i.e. `(n - k) p >= u** (k + 1) q`, decides.
pub fn j_double_star(n: u64, p: f64) -> Result<i64> {
    let spec = BinomialSpec::new(n, p)?;
    let (p, q) = (spec.p(), spec.q());
    let uss = u_double_star();
    let t = uss * q / p;
    let v = (n as f64 - t) / (1.0 + t);
    let k = v.round();
    if (v - k).abs() < 1e-9 {
        let k_int = k as i64;
        let holds = (n as f64 - k) * p >= uss * (k + 1.0) * q;
        Ok(if holds { k_int } else { k_int - 1 })
    } else {
        Ok(v.floor() as i64)
    }
}

/// Whether `n <= (p/q) / u**`, so that dominance holds for every `x <= n`.
pub fn dominance_all_x(n: u64, p: f64) -> Result<bool> {
    let spec = BinomialSpec::new(n, p)?;
    Ok(n as f64 <= spec.p() / spec.q() / u_double_star())
}

/// `r(x) = Q^{Lin,LC}(x + 1/2) / Q^LC(x)`, for `x <= n`.
pub fn ratio_r(majorant: &Majorant, x: f64) -> Result<f64> {
    if x > majorant.n() as f64 {
        return domain(format!("r(x) is undefined for x = {x} > n = {}", majorant.n()));
    }
    Ok((majorant.shifted(x).ln() - majorant.lc(x).ln()).exp())
}
