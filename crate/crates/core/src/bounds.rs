//! Martingale problems mapped onto the binomial lattice, and every bound
//! family evaluated on them.
//!
//! For a supermartingale with differences `X_i <= d` and conditional
//! variances at most `sigma_i^2`, set `sigma^2 = mean(sigma_i^2)`,
//! `p = sigma^2 / (d^2 + sigma^2)` and `x = (q/d) y + n p`. Then
//!
//! ```text
//! new:   P(S_n >= y) <= c_2 Q^{Lin,LC}(x + 1/2)
//! old:   P(S_n >= y) <= c_2 Q^LC(x)
//! trunc: P(S_n >= y) <= sum_i P(X_i >= d) + c_2 Q^{Lin,LC}(x + 1/2)
//! ```
//!
//! and the same holds for the running maximum `M_n`. The bounds are kept
//! unclipped in the log domain; `min(1, .)` is applied only when a value is
//! reported.

use serde::{Deserialize, Serialize};

use crate::binomial::{normal_tail, special::ln_gamma, BinomialSpec, LogValue};
use crate::error::{domain, Result};
use crate::majorant::Majorant;

/// `c_alpha = Gamma(alpha + 1) (e / alpha)^alpha`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be positive and finite, got {alpha}"));
    }
    let ln_gamma_part = if alpha.fract() == 0.0 && alpha <= 170.0 {
        (1..=alpha as u64).map(|k| (k as f64).ln()).sum()
    } else {
        ln_gamma(alpha + 1.0)
    };
    Ok((ln_gamma_part + alpha * (1.0 - alpha.ln())).exp())
}

/// `c_2 = e^2 / 2`.
pub fn c2() -> f64 {
    std::f64::consts::E.powi(2) / 2.0
}

/// `c_3 = 2 e^3 / 9`.
pub fn c3() -> f64 {
    2.0 * std::f64::consts::E.powi(3) / 9.0
}

/// `min(1, c_3 P(Z >= y / b))`.
pub fn gaussian_bound(b: f64, y: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return domain(format!("b must be positive and finite, got {b}"));
    }
    Ok((c3() * normal_tail(y / b)).min(1.0))
}

/// `exp(-x^2 / 2)` for `x >= 0`, one otherwise.
pub fn hoeffding_baseline(x: f64) -> f64 {
    if x < 0.0 {
        1.0
    } else {
        (-0.5 * x * x).exp()
    }
}

/// The point beyond which `c_3 P(Z >= x)` is smaller than `exp(-x^2/2)`.
pub fn gaussian_hoeffding_crossover() -> f64 {
    let g = |x: f64| c3() * normal_tail(x) - hoeffding_baseline(x);
    let (mut lo, mut hi) = (1.0, 2.0);
    debug_assert!(g(lo) > 0.0 && g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A supermartingale problem with a common upper bound `d` on the
/// differences and per-step standard deviation bounds `sigma_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupermartingaleSpec {
    n: u64,
    d: f64,
    sigmas: Vec<f64>,
    sigma2: f64,
    h: f64,
    binomial: BinomialSpec,
}

impl SupermartingaleSpec {
    pub fn new(d: f64, sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return domain("at least one step is required");
        }
        if !(d > 0.0 && d.is_finite()) {
            return domain(format!("d must be positive and finite, got {d}"));
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return domain(format!("every sigma_i must be positive and finite, got {s}"));
        }
        let n = sigmas.len() as u64;
        let sigma2 = sigmas.iter().map(|s| s * s).sum::<f64>() / n as f64;
        let binomial = BinomialSpec::from_d_sigma(n, d, sigma2)?;
        Ok(SupermartingaleSpec { n, d, sigmas, sigma2, h: d + sigma2 / d, binomial })
    }

    pub fn homogeneous(n: u64, d: f64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return domain("n must be at least 1");
        }
        Self::new(d, vec![sigma; n as usize])
    }

    /// Accepts per-step `d_i` but requires them to be equal.
    pub fn with_d_list(d_list: &[f64], sigmas: Vec<f64>) -> Result<Self> {
        if d_list.len() != sigmas.len() {
            return domain("d_list and sigmas must have the same length");
        }
        match d_list.first() {
            Some(&d) if d_list.iter().all(|&di| di == d) => Self::new(d, sigmas),
            Some(_) => domain("the binomial bounds require a common d; use the Rademacher bound"),
            None => domain("at least one step is required"),
        }
    }

    /// A problem given directly on the lattice: `d = 1`, `sigma^2 = p/q`,
    /// keeping the exact `p`.
    pub fn from_lattice(binomial: BinomialSpec) -> Self {
        let sigma2 = binomial.p() / binomial.q();
        SupermartingaleSpec {
            n: binomial.n(),
            d: 1.0,
            sigmas: vec![sigma2.sqrt(); binomial.n() as usize],
            sigma2,
            h: 1.0 + sigma2,
            binomial,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Lattice spacing `d + sigma^2 / d`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn p(&self) -> f64 {
        self.binomial.p()
    }

    pub fn q(&self) -> f64 {
        self.binomial.q()
    }

    pub fn binomial(&self) -> &BinomialSpec {
        &self.binomial
    }

    /// `x = (q/d) y + n p`.
    pub fn rescale(&self, y: f64) -> f64 {
        self.q() / self.d * y + self.n as f64 * self.p()
    }

    /// Inverse of [`rescale`](Self::rescale).
    pub fn unscale(&self, x: f64) -> f64 {
        (x - self.n as f64 * self.p()) * self.d / self.q()
    }

    /// `b = sqrt(sum max(d, sigma_i)^2)`.
    pub fn b(&self) -> f64 {
        self.sigmas.iter().map(|s| s.max(self.d).powi(2)).sum::<f64>().sqrt()
    }
}

/// A threshold either in martingale units or as a lattice coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Query {
    Y(f64),
    X(f64),
}

/// Exceedance probabilities for the truncation bound.
#[derive(Clone, Debug, PartialEq)]
pub enum Exceedance {
    /// `P(X_i >= d)` for each step.
    PerStep(Vec<f64>),
    /// `sum_i P(X_i >= d)`.
    Sum(f64),
}

impl Exceedance {
    fn total(&self) -> Result<f64> {
        let check = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                domain(format!("exceedance probability {v} outside [0, 1]"))
            }
        };
        match self {
            Exceedance::PerStep(v) => v.iter().try_fold(0.0, |acc, &e| Ok(acc + check(e)?)),
            Exceedance::Sum(s) if *s >= 0.0 && s.is_finite() => Ok(*s),
            Exceedance::Sum(s) => domain(format!("exceedance sum {s} must be finite and >= 0")),
        }
    }
}

/// Every bound at one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub y: f64,
    pub x: f64,
    pub new_bound: f64,
    /// `None` when the bound is exactly zero.
    pub log10_new_bound: Option<f64>,
    pub old_bound: f64,
    pub log10_old_bound: Option<f64>,
    pub gaussian_bound: f64,
    pub log10_gaussian_bound: Option<f64>,
    pub hoeffding_baseline: f64,
    pub log10_hoeffding_baseline: Option<f64>,
    /// Unclipped new/old ratio; `None` when the old bound is zero.
    pub ratio: Option<f64>,
    pub clipped_new: bool,
    pub clipped_old: bool,
    /// The linear value underflowed to `0.0` although the bound is positive.
    pub underflow_new: bool,
    pub underflow_old: bool,
}

fn log10_of(v: LogValue) -> Option<f64> {
    (!v.is_zero()).then(|| v.log10())
}

fn log10_linear(v: f64) -> Option<f64> {
    (v > 0.0).then(|| v.log10())
}

/// Bounds for one [`SupermartingaleSpec`], with its table and knots cached.
#[derive(Clone, Debug)]
pub struct MartingaleBounds {
    spec: SupermartingaleSpec,
    majorant: Majorant,
}

impl MartingaleBounds {
    pub fn new(spec: SupermartingaleSpec) -> Result<Self> {
        let majorant = Majorant::new(*spec.binomial())?;
        Ok(MartingaleBounds { spec, majorant })
    }

    pub fn spec(&self) -> &SupermartingaleSpec {
        &self.spec
    }

    pub fn majorant(&self) -> &Majorant {
        &self.majorant
    }

    pub fn x_of(&self, query: Query) -> f64 {
        match query {
            Query::Y(y) => self.spec.rescale(y),
            Query::X(x) => x,
        }
    }

    pub fn y_of(&self, query: Query) -> f64 {
        match query {
            Query::Y(y) => y,
            Query::X(x) => self.spec.unscale(x),
        }
    }

    /// Unclipped `c_2 Q^{Lin,LC}(x + 1/2)` at lattice coordinate `x`.
    pub fn log_new_at(&self, x: f64) -> LogValue {
        LogValue::from_ln(c2().ln()) * self.majorant.shifted(x)
    }

    /// Unclipped `c_2 Q^LC(x)` at lattice coordinate `x`.
    pub fn log_old_at(&self, x: f64) -> LogValue {
        LogValue::from_ln(c2().ln()) * self.majorant.lc(x)
    }

    /// `min(1, c_2 P^{Lin,LC}(T_n >= y + h/2))`; also bounds `P(M_n >= y)`.
    pub fn new_bound(&self, y: f64) -> f64 {
        self.log_new_at(self.spec.rescale(y)).clip_one().exp()
    }

    /// `min(1, c_2 P^LC(T_n >= y))`.
    pub fn old_bound(&self, y: f64) -> f64 {
        self.log_old_at(self.spec.rescale(y)).clip_one().exp()
    }

    /// `min(1, sum_i P(X_i >= d) + c_2 P^{Lin,LC}(T_n >= y + h/2))`.
    pub fn truncation_bound(&self, y: f64, exceedance: &Exceedance) -> Result<f64> {
        let total = exceedance.total()?;
        if let Exceedance::PerStep(v) = exceedance {
            if v.len() as u64 != self.spec.n {
                return domain(format!("expected {} exceedance values, got {}", self.spec.n, v.len()));
            }
        }
        let main = self.log_new_at(self.spec.rescale(y)).clip_one().exp();
        Ok((total + main).min(1.0))
    }

    pub fn report(&self, query: Query) -> BoundReport {
        let x = self.x_of(query);
        let y = self.y_of(query);
        let new = self.log_new_at(x);
        let old = self.log_old_at(x);
        let new_c = new.clip_one();
        let old_c = old.clip_one();
        let b = self.spec.b();
        let gaussian = gaussian_bound(b, y).expect("b > 0");
        let hoeffding = hoeffding_baseline(y / b);
        let ratio = (!old.is_zero()).then(|| (new.ln() - old.ln()).exp());
        BoundReport {
            y,
            x,
            new_bound: new_c.exp(),
            log10_new_bound: log10_of(new_c),
            old_bound: old_c.exp(),
            log10_old_bound: log10_of(old_c),
            gaussian_bound: gaussian,
            log10_gaussian_bound: log10_linear(gaussian),
            hoeffding_baseline: hoeffding,
            log10_hoeffding_baseline: log10_linear(hoeffding),
            ratio,
            clipped_new: new.ln() > 0.0,
            clipped_old: old.ln() > 0.0,
            underflow_new: !new.is_zero() && new_c.exp() == 0.0,
            underflow_old: !old.is_zero() && old_c.exp() == 0.0,
        }
    }
}

/// Problem data for the Rademacher-type bounds; the `d_i` may differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RademacherSpec {
    d_list: Vec<f64>,
    sigma_list: Vec<f64>,
    b: f64,
}

impl RademacherSpec {
    pub fn new(d_list: Vec<f64>, sigma_list: Vec<f64>) -> Result<Self> {
        if d_list.is_empty() || d_list.len() != sigma_list.len() {
            return domain("d_list and sigma_list must be nonempty and of equal length");
        }
        if d_list.iter().chain(&sigma_list).any(|v| !(*v > 0.0 && v.is_finite())) {
            return domain("every d_i and sigma_i must be positive and finite");
        }
        let b = d_list
            .iter()
            .zip(&sigma_list)
            .map(|(d, s)| d.max(*s).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(RademacherSpec { d_list, sigma_list, b })
    }

    pub fn n(&self) -> u64 {
        self.d_list.len() as u64
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d_list(&self) -> &[f64] {
        &self.d_list
    }

    pub fn sigma_list(&self) -> &[f64] {
        &self.sigma_list
    }
}

/// Bounds of the form `c_3 P(sum eps_i >= .)` on the symmetric binomial lattice.
#[derive(Clone, Debug)]
pub struct RademacherBounds {
    spec: RademacherSpec,
    majorant: Majorant,
}

impl RademacherBounds {
    pub fn new(spec: RademacherSpec) -> Result<Self> {
        let majorant = Majorant::new(BinomialSpec::from_ratio(spec.n(), 1, 2)?)?;
        Ok(RademacherBounds { spec, majorant })
    }

    pub fn spec(&self) -> &RademacherSpec {
        &self.spec
    }

    pub fn majorant(&self) -> &Majorant {
        &self.majorant
    }

    /// `x = y sqrt(n) / (2 b) + n / 2`.
    pub fn x_of(&self, y: f64) -> f64 {
        let n = self.spec.n() as f64;
        y * n.sqrt() / (2.0 * self.spec.b) + n / 2.0
    }

    /// `min(1, c_3 P^{Lin,LC}(sum eps_i >= 1 + y sqrt(n) / b))`.
    pub fn bound(&self, y: f64) -> f64 {
        let v = LogValue::from_ln(c3().ln()) * self.majorant.shifted(self.x_of(y));
        v.clip_one().exp()
    }

    /// `min(1, c_3 P^LC(sum eps_i >= y sqrt(n) / b))`.
    pub fn old_bound(&self, y: f64) -> f64 {
        let v = LogValue::from_ln(c3().ln()) * self.majorant.lc(self.x_of(y));
        v.clip_one().exp()
    }

    pub fn gaussian_bound(&self, y: f64) -> f64 {
        gaussian_bound(self.spec.b, y).expect("b > 0")
    }
}
