use num_bigint::BigUint;
use num_traits::{float::FloatCore, One, ToPrimitive, Zero};

use crate::binomial::{big_ratio_to_f64, BinomialSpec};
use crate::error::{domain, Error, Result};

/// Largest `n` the exact oracle accepts.
pub const ORACLE_MAX_N: u64 = 1000;

/// An exact probability `num / den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactProb {
    pub num: BigUint,
    pub den: BigUint,
}

fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    (v >> shift as usize).to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
}

impl ExactProb {
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// Correctly scaled `f64` value (may underflow to zero).
    pub fn to_f64(&self) -> f64 {
        big_ratio_to_f64(&self.num, &self.den)
    }

    /// Natural log, `-inf` for zero; accurate far below the `f64` range.
    pub fn ln(&self) -> f64 {
        if self.num.is_zero() {
            f64::NEG_INFINITY
        } else {
            ln_big(&self.num) - ln_big(&self.den)
        }
    }
}

/// Exact tails `q_0, ..., q_{n+1}` of `Bin(n, p)` with `p` the exact binary
/// value of `spec.p()`.
pub fn exact_tails(spec: &BinomialSpec) -> Result<Vec<ExactProb>> {
    let n = spec.n();
    if n > ORACLE_MAX_N {
        return Err(Error::ScaleExceeded { n, limit: ORACLE_MAX_N });
    }
    let (mantissa, exponent, _) = FloatCore::integer_decode(spec.p());
    if exponent >= 0 {
        return domain("p must be below one");
    }
    // p = m / 2^k, q = (2^k - m) / 2^k
    let k = (-exponent) as usize;
    let m = BigUint::from(mantissa);
    let scale = BigUint::one() << k;
    let qm = &scale - &m;
    let n_us = n as usize;

    let mut pow_p = Vec::with_capacity(n_us + 1);
    let mut pow_q = Vec::with_capacity(n_us + 1);
    pow_p.push(BigUint::one());
    pow_q.push(BigUint::one());
    for i in 0..n_us {
        pow_p.push(&pow_p[i] * &m);
        pow_q.push(&pow_q[i] * &qm);
    }
    let mut binom = BigUint::one();
    let mut terms = Vec::with_capacity(n_us + 1);
    for j in 0..=n_us {
        terms.push(&binom * &pow_p[j] * &pow_q[n_us - j]);
        binom = binom * BigUint::from((n_us - j) as u64) / BigUint::from(j as u64 + 1);
    }
    let den = BigUint::one() << (k * n_us);
    let mut tails = vec![ExactProb { num: BigUint::zero(), den: den.clone() }; n_us + 2];
    for j in (0..=n_us).rev() {
        tails[j].num = &tails[j + 1].num + &terms[j];
    }
    debug_assert_eq!(tails[0].num, den);
    Ok(tails)
}

/// Exact `q_j = P(B >= j)`; `j` may range over `0..=n+1`.
pub fn exact_tail(spec: &BinomialSpec, j: u64) -> Result<ExactProb> {
    if j > spec.n() + 1 {
        return domain(format!("j = {j} outside [0, n + 1]"));
    }
    Ok(exact_tails(spec)?.swap_remove(j as usize))
}
