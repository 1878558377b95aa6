use serde::Serialize;

use crate::binomial::TailTable;
use super::ORACLE_MAX_N;
use crate::error::{domain, Error, Result};
use crate::majorant::{q_lin, Majorant};

/// A concave chain in `(x, ln v)`, evaluated by linear interpolation of the
/// logs. A trailing vertex with `ln v = -inf` marks where the function drops
/// to exact zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullFunction {
    vertices: Vec<(f64, f64)>,
}

impl HullFunction {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Log value at `x`; `-inf` outside the finite part of the chain.
    pub fn eval(&self, x: f64) -> f64 {
        let v = &self.vertices;
        let finite_end = v.iter().rposition(|p| p.1.is_finite()).expect("at least one finite vertex");
        if x < v[0].0 || x > v[finite_end].0 {
            return f64::NEG_INFINITY;
        }
        let i = v[..=finite_end].partition_point(|p| p.0 <= x);
        if i == 0 {
            return v[0].1;
        }
        if i > finite_end {
            return v[finite_end].1;
        }
        let (x0, l0) = v[i - 1];
        let (x1, l1) = v[i];
        let t = (x - x0) / (x1 - x0);
        l0 + t * (l1 - l0)
    }
}

/// Upper concave hull of `(x, ln v)` samples (monotone chain).
///
/// Samples with `ln v = -inf` place no constraint on a majorant; the first
/// such sample after the last finite one is kept as a terminal drop.
pub fn concave_hull_majorant(samples: &[(f64, f64)]) -> Result<HullFunction> {
    if samples.len() < 2 {
        return domain("at least two samples are required");
    }
    if samples.iter().any(|s| s.0.is_nan() || s.1.is_nan() || s.1 == f64::INFINITY) {
        return domain("samples must not contain NaN or +inf");
    }
    if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return domain("sample abscissae must be strictly increasing");
    }
    let Some(last_finite) = samples.iter().rposition(|s| s.1.is_finite()) else {
        return domain("at least one sample must be positive");
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &(x, l) in samples[..=last_finite].iter().filter(|s| s.1.is_finite()) {
        while hull.len() >= 2 {
            let (ax, al) = hull[hull.len() - 2];
            let (bx, bl) = hull[hull.len() - 1];
            // b on or below segment a-c: drop it
            let cross = (bx - ax) * (l - al) - (bl - al) * (x - ax);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, l));
    }
    if let Some(&drop) = samples.get(last_finite + 1) {
        hull.push(drop);
    }
    Ok(HullFunction { vertices: hull })
}

/// Hull of the lattice points `(j, ln q_j)`, `0 <= j <= n + 1`.
pub fn lc_majorant_on_integers(table: &TailTable) -> HullFunction {
    let n = table.n() as i64;
    let samples: Vec<(f64, f64)> = (0..=n + 1).map(|j| (j as f64, table.log_tail(j).ln())).collect();
    concave_hull_majorant(&samples).expect("lattice samples are well formed")
}

/// Samples of `ln Q^Lin(x + 1/2)` on `[-1, n + 1/2]` with the given step,
/// with every knot endpoint injected, and their upper hull.
pub fn dense_majorant_hull(majorant: &Majorant, step: f64) -> Result<(Vec<(f64, f64)>, HullFunction)> {
    dense_majorant_hull_with(majorant, step, &[])
}

/// As [`dense_majorant_hull`], with `extra` abscissae added to the samples
/// so that the hull can be compared at exactly those points.
pub fn dense_majorant_hull_with(
    majorant: &Majorant,
    step: f64,
    extra: &[f64],
) -> Result<(Vec<(f64, f64)>, HullFunction)> {
    if extra.iter().any(|x| !x.is_finite()) {
        return domain("extra sample points must be finite");
    }
    if !(step > 0.0 && step.is_finite()) {
        return domain(format!("grid step must be positive, got {step}"));
    }
    let table = majorant.table();
    let end = table.n() as f64 + 0.5;
    let count = ((end + 1.0) / step).ceil() as usize;
    let mut xs: Vec<f64> = (0..=count).map(|i| (-1.0 + i as f64 * step).min(end)).collect();
    for k in majorant.lattice().knots() {
        xs.push(k.y);
        xs.push(k.x.min(end));
    }
    xs.extend(extra.iter().map(|x| x.clamp(-1.0, end)));
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let samples: Vec<(f64, f64)> = xs.iter().map(|&x| (x, q_lin(table, x + 0.5).ln())).collect();
    let hull = concave_hull_majorant(&samples)?;
    Ok((samples, hull))
}

/// Result of comparing the closed-form majorant against the hull oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub n: u64,
    pub p: f64,
    pub step: f64,
    pub points: usize,
    pub max_log_discrepancy: f64,
    pub worst_x: f64,
}

/// Maximum `|ln Q(x) - hull(x)|` over every sample abscissa of the dense
/// hull oracle. Both sides exactly zero counts as agreement.
pub fn oracle_check(majorant: &Majorant, step: f64) -> Result<OracleCheck> {
    if majorant.n() > ORACLE_MAX_N {
        return Err(Error::ScaleExceeded { n: majorant.n(), limit: ORACLE_MAX_N });
    }
    let (samples, hull) = dense_majorant_hull(majorant, step)?;
    let mut worst = (0.0f64, f64::NAN);
    for &(x, _) in &samples {
        let fast = majorant.shifted(x).ln();
        let slow = hull.eval(x);
        let diff = if fast == f64::NEG_INFINITY && slow == f64::NEG_INFINITY {
            0.0
        } else {
            (fast - slow).abs()
        };
        if !(diff <= worst.0) {
            worst = (diff, x);
        }
    }
    Ok(OracleCheck {
        n: majorant.n(),
        p: majorant.spec().p(),
        step,
        points: samples.len(),
        max_log_discrepancy: worst.0,
        worst_x: worst.1,
    })
}
