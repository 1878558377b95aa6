//! Special functions: log-factorials, log-gamma and the standard normal tail.

use std::f64::consts::PI;
use std::sync::OnceLock;

const FACTORIAL_TABLE_LEN: usize = 1024;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln k.
        let mut table = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        table.push(0.0);
        for k in 1..FACTORIAL_TABLE_LEN {
            let term = (k as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// `ln(k!)`: table lookup below 1024, Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < FACTORIAL_TABLE_LEN {
        return factorial_table()[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + series
}

/// `ln C(n, j)` for `j <= n`.
pub fn ln_choose(n: u64, j: u64) -> f64 {
    debug_assert!(j <= n);
    ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `erfc(z)` for `z >= 0`.
fn erfc_nonneg(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 2.0 {
        // erf(z) = 2/sqrt(pi) e^{-z^2} sum 2^k z^{2k+1} / (2k+1)!!, all terms positive
        let two_z2 = 2.0 * z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        while term > 1e-17 * sum {
            k += 1.0;
            term *= two_z2 / (2.0 * k + 1.0);
            sum += term;
        }
        1.0 - 2.0 / PI.sqrt() * (-z * z).exp() * sum
    } else {
        // continued fraction z + (1/2)/(z + 1/(z + (3/2)/(z + ...))), modified Lentz
        let tiny = 1e-300;
        let mut f = z;
        let mut c = z;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = z + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = z + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-z * z).exp() / (PI.sqrt() * f)
    }
}

/// `P(Z >= x)` for a standard normal `Z`.
pub fn normal_tail(x: f64) -> f64 {
    assert!(!x.is_nan(), "normal_tail of NaN");
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    let z = x / std::f64::consts::SQRT_2;
    if z >= 0.0 {
        0.5 * erfc_nonneg(z)
    } else {
        1.0 - 0.5 * erfc_nonneg(-z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson on the standard normal density, independent of erfc.
    fn quadrature_tail(x: f64) -> f64 {
        let upper = 40.0;
        let m = 400_000;
        let h = (upper - x) / m as f64;
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = phi(x) + phi(upper);
        for i in 1..m {
            let t = x + i as f64 * h;
            s += if i % 2 == 1 { 4.0 * phi(t) } else { 2.0 * phi(t) };
        }
        s * h / 3.0
    }

    #[test]
    fn normal_tail_reference_points() {
        assert_eq!(normal_tail(0.0), 0.5);
        assert_eq!(normal_tail(f64::INFINITY), 0.0);
        assert!((normal_tail(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((normal_tail(3.0) - 0.001_349_898_031_630_094_5).abs() < 1e-15);
    }

    #[test]
    fn normal_tail_matches_quadrature() {
        for &x in &[-3.0, -1.2, 0.3, 1.0, 1.999, 2.0, 2.83, 2.84, 4.5, 7.0] {
            let q = quadrature_tail(x);
            assert!((normal_tail(x) - q).abs() < 1e-12, "x = {x}: {} vs {q}", normal_tail(x));
        }
    }

    #[test]
    fn normal_tail_symmetry() {
        for i in 0..200 {
            let x = -6.0 + 0.06 * i as f64;
            assert!((normal_tail(x) + normal_tail(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn factorials_agree_across_table_boundary() {
        // exact small values
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        // Stirling branch continues the table: ln(1024!) = ln(1023!) + ln 1024
        let stirling = ln_factorial(1024);
        let table = ln_factorial(1023) + 1024f64.ln();
        assert!(((stirling - table) / table).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_against_factorials() {
        for k in 1..60u64 {
            let lg = ln_gamma(k as f64 + 1.0);
            assert!((lg - ln_factorial(k)).abs() < 1e-12 * lg.abs().max(1.0), "k = {k}");
        }
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
    }
}
