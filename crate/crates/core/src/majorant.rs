//! Interpolants of the binomial tail and the least log-concave majorant of
//! its linear interpolation.
//!
//! With `q_j = P(B >= j)` and `p_j = P(B = j)` for `B ~ Bin(n, p)`:
//!
//! * `Q^Lin` interpolates `q_j` linearly between integers,
//! * `Q^LC` interpolates `ln q_j` linearly (geometric interpolation), which is
//!   already the least log-concave majorant of the step tail because the
//!   discrete tail is log-concave,
//! * `Q(x) = Q^{Lin,LC}(x + 1/2)` is the least log-concave majorant of
//!   `x -> Q^Lin(x + 1/2)`. It coincides with `Q^Lin(x + 1/2)` except on the
//!   open intervals `(y_j, x_j)`, `j* <= j <= n`, where it interpolates
//!   geometrically between the values of `Q^Lin(. + 1/2)` at the endpoints.
//!
//! The knots are
//!
//! ```text
//! x_j = j - 1/2 + q_j/p_j + (q_j/p_{j-1} - q_j/p_j) / ln(p_{j-1}/p_j)
//! y_j = x_j - q_j (1/p_j - 1/p_{j-1})
//! ```
//!
//! and `(y_{n+1}, x_{n+1}) = (n + 1/2, n + 3/2)`. They satisfy
//! `j - 1 < y_j < j - 1/2 < x_j <= y_{j+1} <= j + 1/2`, so a query at `x`
//! only has to look at the knots `floor(x)` and `floor(x) + 1`.

use serde::Serialize;

use crate::binomial::{BinomialSpec, LogValue, TailTable};
use crate::error::{domain, Error, Result};

/// `Q^Lin(x)`: linear interpolation of `q_j` over the integers.
pub fn q_lin(table: &TailTable, x: f64) -> LogValue {
    if x <= 0.0 {
        return LogValue::ONE;
    }
    if x >= table.n() as f64 + 1.0 {
        return LogValue::ZERO;
    }
    let j = x.floor();
    let t = x - j;
    let j = j as i64;
    LogValue::linear(table.log_tail(j), table.log_tail(j + 1), t)
}

/// `Q^LC(x)`: geometric interpolation of `q_j` over the integers (`0^0 = 1`).
pub fn q_lc(table: &TailTable, x: f64) -> LogValue {
    if x <= 0.0 {
        return LogValue::ONE;
    }
    if x > table.n() as f64 {
        return LogValue::ZERO;
    }
    let j = x.floor();
    let t = x - j;
    let j = j as i64;
    LogValue::geometric(table.log_tail(j), table.log_tail(j + 1), t)
}

/// Endpoints of the interval `(y_j, x_j)` on which the majorant departs from
/// the shifted linear interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Knot {
    pub j: u64,
    pub y: f64,
    pub x: f64,
    /// `ln Q^Lin(y + 1/2)`
    #[serde(skip)]
    lin_at_y: LogValue,
    /// `ln Q^Lin(x + 1/2)`
    #[serde(skip)]
    lin_at_x: LogValue,
}

impl Knot {
    fn new(table: &TailTable, j: u64, y: f64, x: f64) -> Self {
        Knot {
            j,
            y,
            x,
            lin_at_y: q_lin(table, y + 0.5),
            lin_at_x: q_lin(table, x + 0.5),
        }
    }

    /// Whether `x` lies in the open interval `(y_j, x_j)`.
    pub fn contains(&self, x: f64) -> bool {
        self.y < x && x < self.x
    }

    fn interpolate(&self, x: f64) -> LogValue {
        let width = self.x - self.y;
        if !(width > 0.0) {
            // interval collapsed below double resolution
            return self.lin_at_y;
        }
        let delta = (x - self.y) / width;
        LogValue::geometric(self.lin_at_y, self.lin_at_x, delta.clamp(0.0, 1.0))
    }
}

/// `1 - (1 - e^{-L}) / L`, accurate for small `L`.
fn one_minus_phi(l: f64) -> f64 {
    if l < 1e-2 {
        // L/2 - L^2/6 + L^3/24 - L^4/120 + L^5/720
        l * (0.5 - l * (1.0 / 6.0 - l * (1.0 / 24.0 - l * (1.0 / 120.0 - l / 720.0))))
    } else {
        (l + (-l).exp_m1()) / l
    }
}

/// The knots `(y_j, x_j)` for `j* <= j <= n + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct KnotLattice {
    j_star: u64,
    n: u64,
    knots: Vec<Knot>,
}

impl KnotLattice {
    /// Computes every knot from the log tail table in `O(n)`.
    ///
    /// `ln(p_{j-1}/p_j)` comes from the closed form `ln(j q / ((n-j+1) p))`
    /// rather than a difference of log-pmfs, which keeps it accurate when
    /// `j` is close to `(n + 1) p`.
    pub fn build(table: &TailTable) -> Result<Self> {
        let spec: &BinomialSpec = table.spec();
        let (n, j_star) = (spec.n(), spec.j_star());
        let mut knots = Vec::with_capacity((n + 2 - j_star) as usize);
        for j in j_star..=n {
            let log_pmf = table.log_pmf(j as i64);
            if log_pmf.is_zero() || table.log_pmf(j as i64 - 1).is_zero() {
                return Err(Error::Internal(format!("p_{j} or p_{} underflowed to zero", j - 1)));
            }
            let l = spec.ln_pmf_ratio(j);
            if !(l > 0.0) {
                return Err(Error::Internal(format!("ln(p_{}/p_{j}) = {l} is not positive", j - 1)));
            }
            // q_j / p_j
            let r_p = (table.log_tail(j as i64).ln() - log_pmf.ln()).exp();
            let base = j as f64 - 0.5;
            let x = base + r_p * one_minus_phi(l);
            let y = x + r_p * (-l).exp_m1();
            knots.push(Knot::new(table, j, y, x));
        }
        let tail = n as f64 + 0.5;
        knots.push(Knot::new(table, n + 1, tail, tail + 1.0));
        Ok(KnotLattice { j_star, n, knots })
    }

    pub fn j_star(&self) -> u64 {
        self.j_star
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// The knot with index `j`, if `j* <= j <= n + 1`.
    pub fn knot(&self, j: i64) -> Option<&Knot> {
        if j < self.j_star as i64 || j > self.n as i64 + 1 {
            None
        } else {
            self.knots.get((j - self.j_star as i64) as usize)
        }
    }

    /// The knot `j` in `[j*, n]` with `x` in `(y_j, x_j)`, if any.
    pub fn active_knot(&self, x: f64) -> Option<&Knot> {
        let k = x.floor() as i64;
        [k, k + 1]
            .into_iter()
            .filter(|&j| j <= self.n as i64)
            .filter_map(|j| self.knot(j))
            .find(|knot| knot.contains(x))
    }
}

/// Geometric interpolation of `Q^Lin(. + 1/2)` across the knot interval.
pub fn q_interp(knot: &Knot, x: f64) -> Result<LogValue> {
    if !(knot.y <= x && x <= knot.x) {
        return domain(format!("x = {x} outside [{}, {}] of knot {}", knot.y, knot.x, knot.j));
    }
    Ok(knot.interpolate(x))
}

/// `Q(x) = Q^{Lin,LC}(x + 1/2)`, the least log-concave majorant of
/// `x -> Q^Lin(x + 1/2)`.
pub fn q_linlc_shifted(table: &TailTable, lattice: &KnotLattice, x: f64) -> LogValue {
    if x <= -0.5 {
        return LogValue::ONE;
    }
    if x >= table.n() as f64 + 0.5 {
        return LogValue::ZERO;
    }
    match lattice.active_knot(x) {
        Some(knot) => knot.interpolate(x),
        None => {
            let lin = q_lin(table, x + 0.5);
            #[cfg(debug_assertions)]
            for knot in lattice.knots().iter().filter(|k| k.y == x || k.x == x) {
                let interp = knot.interpolate(x);
                debug_assert!(
                    (interp.ln() - lin.ln()).abs() <= 1e-10 || (interp.is_zero() && lin.is_zero()),
                    "branches disagree at knot endpoint {x}"
                );
            }
            lin
        }
    }
}

/// A tail table bundled with its knot lattice.
#[derive(Clone, Debug)]
pub struct Majorant {
    table: TailTable,
    lattice: KnotLattice,
}

impl Majorant {
    pub fn new(spec: BinomialSpec) -> Result<Self> {
        let table = TailTable::new(spec);
        let lattice = KnotLattice::build(&table)?;
        Ok(Majorant { table, lattice })
    }

    pub fn table(&self) -> &TailTable {
        &self.table
    }

    pub fn lattice(&self) -> &KnotLattice {
        &self.lattice
    }

    pub fn spec(&self) -> &BinomialSpec {
        self.table.spec()
    }

    pub fn n(&self) -> u64 {
        self.table.n()
    }

    /// `Q^Lin(x)`
    pub fn lin(&self, x: f64) -> LogValue {
        q_lin(&self.table, x)
    }

    /// `Q^LC(x)`
    pub fn lc(&self, x: f64) -> LogValue {
        q_lc(&self.table, x)
    }

    /// `Q(x) = Q^{Lin,LC}(x + 1/2)`
    pub fn shifted(&self, x: f64) -> LogValue {
        q_linlc_shifted(&self.table, &self.lattice, x)
    }
}
