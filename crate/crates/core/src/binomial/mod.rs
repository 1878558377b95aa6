//! Log-domain binomial distribution: pmf, tail, the critical index `j*`,
//! and the standard normal tail.

mod logvalue;
pub mod special;

use num_bigint::BigUint;
use num_traits::{float::FloatCore, ToPrimitive, Zero};
use serde::Serialize;

pub use logvalue::LogValue;
pub use special::normal_tail;

use crate::error::{domain, Result};

/// A binomial law `Bin(n, p)` with `0 < p < 1`.
///
/// `j_star` is the first index at which the pmf strictly decreases,
/// `floor((n + 1) p) + 1`. It is computed in exact integer arithmetic from
/// the rational value of `p` (either the supplied ratio or the exact binary
/// value of the `f64`), so it never suffers from a misplaced floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialSpec {
    n: u64,
    p: f64,
    q: f64,
    #[serde(skip)]
    ln_p: f64,
    #[serde(skip)]
    ln_q: f64,
    j_star: u64,
    #[serde(skip)]
    jstar_excess: f64,
}

/// Exact rational `num / den`.
struct Ratio {
    num: BigUint,
    den: BigUint,
}

impl Ratio {
    fn from_f64(v: f64) -> Ratio {
        let (mantissa, exponent, _) = FloatCore::integer_decode(v);
        let mut num = BigUint::from(mantissa);
        let mut den = BigUint::from(1u8);
        if exponent >= 0 {
            num <<= exponent as usize;
        } else {
            den <<= (-exponent) as usize;
        }
        Ratio { num, den }
    }
}

/// `a / b` rounded to `f64` for arbitrarily large integers.
pub(crate) fn big_ratio_to_f64(a: &BigUint, b: &BigUint) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let s = 64 + b.bits() as i64 - a.bits() as i64;
    let shifted = if s >= 0 {
        (a << s as usize) / b
    } else {
        (a >> (-s) as usize) / b
    };
    let mant = shifted.to_f64().unwrap_or(f64::INFINITY);
    mant * 2f64.powi(-s as i32)
}

impl BinomialSpec {
    /// `Bin(n, p)` with `p` taken as the exact value of the given `f64`.
    pub fn new(n: u64, p: f64) -> Result<Self> {
        Self::check(n, p)?;
        Ok(Self::build(n, p, Ratio::from_f64(p)))
    }

    /// `Bin(n, num/den)`; `j*` is derived from the exact ratio.
    pub fn from_ratio(n: u64, num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return domain(format!("p = {num}/{den} must lie strictly between 0 and 1"));
        }
        let p = num as f64 / den as f64;
        Self::check(n, p)?;
        let ratio = Ratio { num: BigUint::from(num), den: BigUint::from(den) };
        Ok(Self::build(n, p, ratio))
    }

    /// `p = sigma^2 / (d^2 + sigma^2)`, the two-point law with values `d` and `-sigma^2/d`.
    pub fn from_d_sigma(n: u64, d: f64, sigma2: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return domain(format!("d must be positive and finite, got {d}"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return domain(format!("sigma^2 must be positive and finite, got {sigma2}"));
        }
        Self::new(n, sigma2 / (d * d + sigma2))
    }

    fn check(n: u64, p: f64) -> Result<()> {
        if n == 0 {
            return domain("n must be at least 1");
        }
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("p must lie strictly between 0 and 1, got {p}"));
        }
        Ok(())
    }

    fn build(n: u64, p: f64, ratio: Ratio) -> Self {
        let q = 1.0 - p;
        debug_assert_eq!(p + q, 1.0);
        let scaled = BigUint::from(n + 1) * &ratio.num;
        let floor = (&scaled / &ratio.den).to_u64().expect("floor((n+1)p) <= n");
        let j_star = floor + 1;
        // j* - (n+1)p, exactly, then rounded
        let excess = BigUint::from(j_star) * &ratio.den - scaled;
        let jstar_excess = big_ratio_to_f64(&excess, &ratio.den);
        BinomialSpec {
            n,
            p,
            q,
            ln_p: p.ln(),
            ln_q: (-p).ln_1p(),
            j_star,
            jstar_excess,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn j_star(&self) -> u64 {
        self.j_star
    }

    /// `j - (n + 1) p`, exact to rounding at `j = j*` where it may be tiny.
    pub(crate) fn excess(&self, j: u64) -> f64 {
        if j == self.j_star {
            self.jstar_excess
        } else {
            (j as i64 - self.j_star as i64) as f64 + self.jstar_excess
        }
    }

    /// `ln(p_{j-1} / p_j) = ln(j q / ((n - j + 1) p))`, for `1 <= j <= n`.
    pub fn ln_pmf_ratio(&self, j: u64) -> f64 {
        debug_assert!(j >= 1 && j <= self.n);
        let denom = (self.n - j + 1) as f64 * self.p;
        (self.excess(j) / denom).ln_1p()
    }
}

/// `ln(C(n, j) p^j q^(n-j))`.
pub fn log_pmf(spec: &BinomialSpec, j: u64) -> Result<LogValue> {
    if j > spec.n {
        return domain(format!("j = {j} outside [0, {}]", spec.n));
    }
    let (n, jf) = (spec.n, j as f64);
    let v = special::ln_choose(n, j) + jf * spec.ln_p + (n - j) as f64 * spec.ln_q;
    Ok(LogValue::from_ln(v))
}

/// `floor((n + 1) p) + 1`.
pub fn j_star(spec: &BinomialSpec) -> u64 {
    spec.j_star
}

/// Log pmf and log tail of a binomial law, indices `0..=n` and `0..=n+1`.
#[derive(Clone, Debug)]
pub struct TailTable {
    spec: BinomialSpec,
    log_pmf: Vec<LogValue>,
    log_tail: Vec<LogValue>,
}

impl TailTable {
    /// Builds the table. Tails below one half are accumulated from `j = n`
    /// downward; tails above one half come from `ln(1 - P(B < j))`, with the
    /// lower sum accumulated upward, so that `ln q_j` stays resolved near zero.
    pub fn new(spec: BinomialSpec) -> Self {
        let n = spec.n as usize;
        let log_pmf: Vec<LogValue> = (0..=spec.n)
            .map(|j| log_pmf(&spec, j).expect("index in range"))
            .collect();
        let mut log_tail = vec![LogValue::ZERO; n + 2];
        for j in (0..=n).rev() {
            log_tail[j] = log_tail[j + 1].log_add(log_pmf[j]);
        }
        let mut lower = LogValue::ZERO;
        for j in 1..=n {
            lower = lower.log_add(log_pmf[j - 1]);
            if lower.ln() >= -std::f64::consts::LN_2 {
                break;
            }
            log_tail[j] = LogValue::from_ln((-lower.exp()).ln_1p());
        }
        // total mass is one by definition; pin it
        log_tail[0] = LogValue::ONE;
        TailTable { spec, log_pmf, log_tail }
    }

    pub fn spec(&self) -> &BinomialSpec {
        &self.spec
    }

    pub fn n(&self) -> u64 {
        self.spec.n
    }

    pub fn j_star(&self) -> u64 {
        self.spec.j_star
    }

    /// `ln p_j`; exact zero outside `[0, n]`.
    pub fn log_pmf(&self, j: i64) -> LogValue {
        if j < 0 || j > self.spec.n as i64 {
            LogValue::ZERO
        } else {
            self.log_pmf[j as usize]
        }
    }

    /// `ln q_j = ln P(B >= j)`; one for `j <= 0`, exact zero for `j > n`.
    pub fn log_tail(&self, j: i64) -> LogValue {
        if j <= 0 {
            LogValue::ONE
        } else if j > self.spec.n as i64 {
            LogValue::ZERO
        } else {
            self.log_tail[j as usize]
        }
    }

    pub fn log_pmf_slice(&self) -> &[LogValue] {
        &self.log_pmf
    }

    pub fn log_tail_slice(&self) -> &[LogValue] {
        &self.log_tail
    }
}
