use serde::Serialize;

use crate::error::{domain, Result};

/// Finite law: strictly increasing values with nonnegative probabilities
/// summing to one within `1e-12`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return domain("a distribution needs at least one atom");
        }
        if atoms.iter().any(|&(v, w)| !v.is_finite() || !w.is_finite() || w < 0.0) {
            return domain("atoms must be finite with nonnegative probabilities");
        }
        if atoms.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return domain("atom values must be strictly increasing");
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(DiscreteDistribution { atoms })
    }

    /// Law of `d X_a`: `-d a` w.p. `1/(1+a)`, `d` w.p. `a/(1+a)`, `a = sigma^2/d^2`.
    pub fn two_point(d: f64, sigma: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return domain("d and sigma must be positive and finite");
        }
        let a = sigma * sigma / (d * d);
        Self::new(vec![(-d * a, 1.0 / (1.0 + a)), (d, a / (1.0 + a))])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, w)| w * f(v)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|v| v)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|v| (v - m) * (v - m))
    }

    pub fn max(&self) -> f64 {
        self.atoms.last().expect("nonempty").0
    }

    pub fn min(&self) -> f64 {
        self.atoms[0].0
    }

    /// Law of the sum of independent copies; atoms closer than `1e-12`
    /// (relative) are merged.
    pub fn convolve(&self, other: &DiscreteDistribution) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .flat_map(|&(a, w)| other.atoms.iter().map(move |&(b, v)| (a + b, w * v)))
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            match merged.last_mut() {
                Some(last) if (x - last.0).abs() <= 1e-12 * x.abs().max(1.0) => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Self::new(merged)
    }
}

/// `E (X - t)_+^2`
pub fn expected_plus_square(dist: &DiscreteDistribution, t: f64) -> f64 {
    dist.expect(|v| {
        let e = (v - t).max(0.0);
        e * e
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtremalOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `E (X - t)_+^2 <= E (d X_a - t)_+^2` for `X <= d`, `E X = 0`, `Var X <= sigma^2`.
pub fn extremal_moment_check(dist: &DiscreteDistribution, d: f64, sigma: f64, t: f64) -> Result<ExtremalOutcome> {
    if !t.is_finite() {
        return domain("t must be finite");
    }
    let extremal = DiscreteDistribution::two_point(d, sigma)?;
    if dist.max() > d {
        return domain(format!("support reaches {} above d = {d}", dist.max()));
    }
    if dist.mean().abs() > 1e-12 {
        return domain(format!("mean {} is not zero", dist.mean()));
    }
    if dist.variance() > sigma * sigma + 1e-12 {
        return domain(format!("variance {} exceeds sigma^2 = {}", dist.variance(), sigma * sigma));
    }
    let lhs = expected_plus_square(dist, t);
    let rhs = expected_plus_square(&extremal, t);
    Ok(ExtremalOutcome { lhs, rhs, holds: lhs <= rhs + 1e-12 })
}
