//! Monte Carlo paths of supermartingales with bounded differences.
//!
//! Path `k` of a run draws from ChaCha8 seeded with `seed` on stream `k`, so
//! results depend only on `(seed, trials)` and never on the worker count.
//!
//! Three increment families, each meeting `X_i <= d` and
//! `Var X_i <= sigma_i^2`:
//!
//! - `TwoPointExtremal`: `d` w.p. `sigma_i^2 / (d^2 + sigma_i^2)`, else
//!   `-sigma_i^2 / d`. Zero mean, variance exactly `sigma_i^2`.
//! - `BoundedUniform`: uniform on `[-a, a]`, `a = min(d, sqrt(3) sigma_i)`.
//! - `TruncatedShifted`: `s * min(L, tau)` with `L ~ Laplace(0, 1)`. The
//!   truncation leaves a strictly negative mean `-e^{-tau}/2`; the scale is
//!   `s = min(d / tau, sigma_i / sd(min(L, tau)))`.
//!
//! A nonnegative `drift` is subtracted from every increment.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{Exceedance, SupermartingaleSpec};
use crate::error::{domain, Error, Result};
use crate::oracle::DiscreteDistribution;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    TwoPointExtremal,
    BoundedUniform,
    TruncatedShifted,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point_extremal" | "two_point" | "two-point" => Ok(FamilyKind::TwoPointExtremal),
            "bounded_uniform" | "uniform" => Ok(FamilyKind::BoundedUniform),
            "truncated_shifted" | "truncated" => Ok(FamilyKind::TruncatedShifted),
            _ => domain(format!("unknown increment family {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementFamily {
    pub kind: FamilyKind,
    /// Subtracted from every increment; `0` gives a martingale for the
    /// symmetric families.
    pub drift: f64,
    /// Truncation point of the Laplace base law.
    pub tau: f64,
    /// Replace each increment by its martingale tilt.
    pub tilt: bool,
}

impl IncrementFamily {
    pub fn new(kind: FamilyKind) -> Self {
        IncrementFamily { kind, drift: 0.0, tau: 1.0, tilt: false }
    }

    pub fn two_point() -> Self {
        Self::new(FamilyKind::TwoPointExtremal)
    }

    pub fn bounded_uniform() -> Self {
        Self::new(FamilyKind::BoundedUniform)
    }

    pub fn truncated_shifted(tau: f64) -> Self {
        IncrementFamily { tau, ..Self::new(FamilyKind::TruncatedShifted) }
    }

    pub fn with_drift(self, drift: f64) -> Self {
        IncrementFamily { drift, ..self }
    }

    pub fn with_tilt(self, tilt: bool) -> Self {
        IncrementFamily { tilt, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return domain(format!("drift must be finite and >= 0, got {}", self.drift));
        }
        if self.kind == FamilyKind::TruncatedShifted && !(self.tau > 0.0 && self.tau.is_finite()) {
            return domain(format!("tau must be positive, got {}", self.tau));
        }
        Ok(())
    }

    fn laplace_moments(&self) -> (f64, f64) {
        let et = (-self.tau).exp();
        let mean = -0.5 * et;
        let second = 2.0 - (self.tau + 1.0) * et;
        (mean, second - mean * mean)
    }

    fn scale(&self, d: f64, sigma: f64) -> f64 {
        let (_, var) = self.laplace_moments();
        (d / self.tau).min(sigma / var.sqrt())
    }

    /// Mean of one raw increment (before any tilt).
    pub fn mean(&self, d: f64, sigma: f64) -> f64 {
        let base = match self.kind {
            FamilyKind::TwoPointExtremal | FamilyKind::BoundedUniform => 0.0,
            FamilyKind::TruncatedShifted => self.scale(d, sigma) * self.laplace_moments().0,
        };
        base - self.drift
    }

    /// Variance of one raw increment.
    pub fn variance(&self, d: f64, sigma: f64) -> f64 {
        match self.kind {
            FamilyKind::TwoPointExtremal => sigma * sigma,
            FamilyKind::BoundedUniform => {
                let a = d.min(3f64.sqrt() * sigma);
                a * a / 3.0
            }
            FamilyKind::TruncatedShifted => self.scale(d, sigma).powi(2) * self.laplace_moments().1,
        }
    }

    /// `P(X >= level)` for one raw increment, `level > 0`.
    pub fn exceedance(&self, d: f64, sigma: f64, level: f64) -> f64 {
        let t = level + self.drift;
        match self.kind {
            FamilyKind::TwoPointExtremal => {
                if d >= t {
                    sigma * sigma / (d * d + sigma * sigma)
                } else {
                    0.0
                }
            }
            FamilyKind::BoundedUniform => {
                let a = d.min(3f64.sqrt() * sigma);
                ((a - t) / (2.0 * a)).clamp(0.0, 1.0)
            }
            FamilyKind::TruncatedShifted => {
                let s = self.scale(d, sigma);
                let u = t / s;
                if u > self.tau {
                    0.0
                } else if u >= 0.0 {
                    0.5 * (-u).exp()
                } else {
                    1.0 - 0.5 * u.exp()
                }
            }
        }
    }

    /// Draws one increment for a step with bounds `d`, `sigma`.
    pub fn sample(&self, rng: &mut impl RngCore, d: f64, sigma: f64) -> f64 {
        let raw = match self.kind {
            FamilyKind::TwoPointExtremal => {
                let p = sigma * sigma / (d * d + sigma * sigma);
                if unit_open(rng) < p {
                    d
                } else {
                    -sigma * sigma / d
                }
            }
            FamilyKind::BoundedUniform => {
                let a = d.min(3f64.sqrt() * sigma);
                a * (2.0 * unit_open(rng) - 1.0)
            }
            FamilyKind::TruncatedShifted => {
                let u = unit_open(rng);
                let l = if u < 0.5 { (2.0 * u).ln() } else { -(2.0 * (1.0 - u)).ln() };
                self.scale(d, sigma) * l.min(self.tau)
            }
        } - self.drift;
        if self.tilt {
            let m = self.mean(d, sigma).min(0.0);
            tilt_unchecked(raw.min(d), m, d)
        } else {
            raw
        }
    }

    /// Exact per-step exceedances `P(X_i >= level)` for a spec.
    pub fn exceedances(&self, spec: &SupermartingaleSpec, level: f64) -> Exceedance {
        Exceedance::PerStep(spec.sigmas().iter().map(|&s| self.exceedance(spec.d(), s, level)).collect())
    }
}

/// Uniform on the open interval `(0, 1)`.
fn unit_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn tilt_unchecked(x: f64, cond_mean: f64, d: f64) -> f64 {
    let gamma = cond_mean / (cond_mean - d);
    (1.0 - gamma) * x + gamma * d
}

/// `(1 - g) x + g d` with `g = m / (m - d)`: turns an increment with
/// conditional mean `m <= 0` into one with mean zero, never decreasing it.
pub fn tilt_to_martingale(x: f64, cond_mean: f64, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return domain(format!("d must be positive, got {d}"));
    }
    if !(cond_mean <= 0.0) {
        return domain(format!("conditional mean must be <= 0, got {cond_mean}"));
    }
    if x > d {
        return domain(format!("increment {x} exceeds d = {d}"));
    }
    Ok(tilt_unchecked(x, cond_mean, d))
}

fn check_pair(spec: &SupermartingaleSpec, family: &IncrementFamily) -> Result<()> {
    family.validate()?;
    if spec.sigmas().len() as u64 != spec.n() {
        return Err(Error::Internal("spec has inconsistent length".into()));
    }
    Ok(())
}

fn path(spec: &SupermartingaleSpec, family: &IncrementFamily, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let d = spec.d();
    let mut s = 0.0;
    let mut m = f64::NEG_INFINITY;
    for &sigma in spec.sigmas() {
        s += family.sample(rng, d, sigma);
        m = m.max(s);
    }
    (s, m)
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Terminal value and running maximum `max_{1<=k<=n} S_k` of one path.
pub fn sample_path(spec: &SupermartingaleSpec, family: &IncrementFamily, seed: u64) -> Result<(f64, f64)> {
    sample_path_indexed(spec, family, seed, 0)
}

/// Path number `index` of the run seeded with `seed`.
pub fn sample_path_indexed(
    spec: &SupermartingaleSpec,
    family: &IncrementFamily,
    seed: u64,
    index: u64,
) -> Result<(f64, f64)> {
    check_pair(spec, family)?;
    Ok(path(spec, family, &mut path_rng(seed, index)))
}

/// Empirical proportion with a 95% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub hits: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64, seed: u64) -> Self {
        assert!(trials > 0 && hits <= trials);
        let n = trials as f64;
        let p = hits as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        McEstimate {
            point: p,
            ci_low: (center - half).clamp(0.0, p),
            ci_high: (center + half).clamp(p, 1.0),
            trials,
            hits,
            seed,
        }
    }

    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub fn std_error(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }

    /// Whether the estimate exceeds `bound` by more than `k` standard errors.
    pub fn exceeds(&self, bound: f64, k: f64) -> bool {
        self.point - k * self.std_error() > bound
    }
}

/// Terminal values and maxima of a batch of paths, in path order.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub seed: u64,
    pub terminal: Vec<f64>,
    pub maximum: Vec<f64>,
}

impl PathSample {
    pub fn trials(&self) -> u64 {
        self.terminal.len() as u64
    }

    /// Fraction of paths with `S_n >= y`, or `M_n >= y` with `use_max`.
    pub fn tail(&self, y: f64, use_max: bool) -> McEstimate {
        let values = if use_max { &self.maximum } else { &self.terminal };
        let hits = values.iter().filter(|&&v| v >= y).count() as u64;
        McEstimate::from_counts(hits, self.trials(), self.seed)
    }
}

fn run_in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Simulates `trials` paths in parallel, on `threads` workers when given.
pub fn simulate_paths(
    spec: &SupermartingaleSpec,
    family: &IncrementFamily,
    trials: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<PathSample> {
    check_pair(spec, family)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let (terminal, maximum) = run_in_pool(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|k| path(spec, family, &mut path_rng(seed, k)))
            .unzip()
    })?;
    Ok(PathSample { seed, terminal, maximum })
}

/// Monte Carlo estimate of `P(S_n >= y)` (or `P(M_n >= y)`).
pub fn estimate_tail(
    spec: &SupermartingaleSpec,
    family: &IncrementFamily,
    y: f64,
    trials: u64,
    seed: u64,
    use_max: bool,
) -> Result<McEstimate> {
    Ok(simulate_paths(spec, family, trials, seed, None)?.tail(y, use_max))
}

/// Exact law of `S_n` for the two-point family with zero drift.
pub fn two_point_sum_law(spec: &SupermartingaleSpec) -> Result<DiscreteDistribution> {
    let mut law = DiscreteDistribution::new(vec![(0.0, 1.0)])?;
    for &sigma in spec.sigmas() {
        law = law.convolve(&DiscreteDistribution::two_point(spec.d(), sigma)?)?;
    }
    Ok(law)
}

/// Law of `T_n = h B - n sigma^2 / d` with `B ~ Bin(n, p)`.
pub fn binomial_sum_law(spec: &SupermartingaleSpec) -> Result<DiscreteDistribution> {
    let table = crate::binomial::TailTable::new(spec.binomial().clone());
    let shift = spec.n() as f64 * spec.sigma2() / spec.d();
    let atoms: Vec<(f64, f64)> =
        (0..=spec.n() as i64).map(|j| (spec.h() * j as f64 - shift, table.log_pmf(j).exp())).collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    DiscreteDistribution::new(atoms.into_iter().map(|(v, w)| (v, w / total)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::expected_plus_square;

    #[test]
    fn tilt_examples() {
        assert_eq!(tilt_to_martingale(-0.3, 0.0, 1.0).unwrap(), -0.3);
        assert_eq!(tilt_to_martingale(2.0, -0.7, 2.0).unwrap(), 2.0);
        let v = tilt_to_martingale(0.0, -0.5, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert!(tilt_to_martingale(1.5, -0.1, 1.0).is_err());
        assert!(tilt_to_martingale(0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn tilted_mean_is_zero() {
        // X in {-2, 1} with mean -1/2, d = 1
        let (lo, hi, w) = (-2.0, 1.0, 0.5);
        let m = w * lo + (1.0 - w) * hi;
        let a = tilt_to_martingale(lo, m, 1.0).unwrap();
        let b = tilt_to_martingale(hi, m, 1.0).unwrap();
        assert!((w * a + (1.0 - w) * b).abs() < 1e-15);
        assert!(a >= lo && b >= hi && a <= 1.0 && b <= 1.0);
    }

    #[test]
    fn wilson_interval() {
        let e = McEstimate::from_counts(0, 100, 1);
        assert_eq!((e.point, e.ci_low), (0.0, 0.0));
        assert!(e.ci_high > 0.03 && e.ci_high < 0.04);
        let e = McEstimate::from_counts(50, 100, 1);
        assert!((e.ci_low - 0.4038).abs() < 1e-4 && (e.ci_high - 0.5962).abs() < 1e-4);
        let e = McEstimate::from_counts(100, 100, 1);
        assert_eq!((e.point, e.ci_high), (1.0, 1.0));
    }

    #[test]
    fn paths_are_reproducible_and_thread_independent() {
        let spec = SupermartingaleSpec::homogeneous(12, 1.0, 0.4).unwrap();
        let fam = IncrementFamily::truncated_shifted(1.0).with_drift(0.05);
        let a = simulate_paths(&spec, &fam, 2000, 7, Some(1)).unwrap();
        let b = simulate_paths(&spec, &fam, 2000, 7, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_path_indexed(&spec, &fam, 7, 3).unwrap(), (a.terminal[3], a.maximum[3]));
        let c = simulate_paths(&spec, &fam, 2000, 8, Some(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn increments_respect_the_caps() {
        let mut rng = path_rng(3, 0);
        for kind in [FamilyKind::TwoPointExtremal, FamilyKind::BoundedUniform, FamilyKind::TruncatedShifted] {
            for tilt in [false, true] {
                let fam = IncrementFamily::new(kind).with_drift(0.1).with_tilt(tilt);
                for _ in 0..10_000 {
                    assert!(fam.sample(&mut rng, 0.8, 0.5) <= 0.8);
                }
                assert!(fam.variance(0.8, 0.5) <= 0.25 + 1e-15);
                assert!(fam.mean(0.8, 0.5) <= 0.0);
            }
        }
    }

    #[test]
    fn single_uniform_step_stays_below_d() {
        let spec = SupermartingaleSpec::homogeneous(1, 0.5, 2.0).unwrap();
        let fam = IncrementFamily::bounded_uniform();
        let s = simulate_paths(&spec, &fam, 5000, 11, None).unwrap();
        assert!(s.terminal.iter().all(|&v| v <= 0.5 && v >= -0.5));
        assert_eq!(s.terminal, s.maximum);
    }

    #[test]
    fn very_low_threshold_has_full_mass() {
        let spec = SupermartingaleSpec::homogeneous(5, 1.0, 1.0).unwrap();
        let e = estimate_tail(&spec, &IncrementFamily::two_point(), -1e9, 500, 0, false).unwrap();
        assert_eq!(e.point, 1.0);
    }

    #[test]
    fn exceedance_matches_sampling() {
        let mut rng = path_rng(5, 9);
        for kind in [FamilyKind::TwoPointExtremal, FamilyKind::BoundedUniform, FamilyKind::TruncatedShifted] {
            let fam = IncrementFamily::new(kind);
            let level = 0.3;
            let draws = 200_000;
            let hits = (0..draws).filter(|_| fam.sample(&mut rng, 1.0, 0.6) >= level).count();
            let p = fam.exceedance(1.0, 0.6, level);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((hits as f64 / draws as f64 - p).abs() < 4.0 * se + 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn two_point_sum_is_dominated_in_plus_square() {
        let spec = SupermartingaleSpec::new(1.0, vec![0.3, 0.7, 0.5, 0.9]).unwrap();
        let s = two_point_sum_law(&spec).unwrap();
        let t = binomial_sum_law(&spec).unwrap();
        for i in -20..=20 {
            let th = i as f64 * 0.2;
            assert!(expected_plus_square(&s, th) <= expected_plus_square(&t, th) + 1e-12);
        }
    }
}
