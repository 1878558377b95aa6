//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailbound::bounds::{c2, c3, gaussian_hoeffding_crossover};
use tailbound::comparison::{dominance_all_x, j_double_star, ratio_r};
use tailbound::majorant::{q_interp, q_lin};
use tailbound::oracle::{exact_tails, expected_plus_square, extremal_moment_check, oracle_check, DiscreteDistribution};
use tailbound::simulate::{binomial_sum_law, simulate_paths, two_point_sum_law, FamilyKind, IncrementFamily};
use tailbound::{BinomialSpec, ComparisonConstants, Majorant, MartingaleBounds, SupermartingaleSpec, TailTable};

type Check = Result<String, String>;

const P_GRID: [f64; 8] = [0.01, 0.03, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97];

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    if (got - want).abs() <= tol {
        Ok(format!("{name}={got:.10}"))
    } else {
        Err(format!("{name}={got} expected {want} +- {tol}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn constants() -> Check {
    let k = ComparisonConstants::get();
    let parts = [
        within("u*", k.u_star, 0.00505778, 1e-8)?,
        within("u**", k.u_double_star, 0.00508349, 1e-8)?,
        within("1/u**", k.inverse_u_double_star(), 196.714, 1e-3)?,
        within("c2", c2(), 3.69452, 1e-5)?,
        within("c3", c3(), 4.46345, 1e-5)?,
        within("alpha*", k.alpha_star, 0.3133, 1e-3)?,
        within("r(alpha*)", k.r_alpha_star, 5.3566, 1e-3)?,
        within("e^r-1", k.exp_r_minus_one, 211.022, 1e-2)?,
    ];
    Ok(parts.join(" "))
}

fn reference_values() -> Check {
    let spec = BinomialSpec::new(30, 0.03).map_err(|e| e.to_string())?;
    let jss = j_double_star(30, 0.03).map_err(|e| e.to_string())?;
    ensure(jss == 25, || format!("j** = {jss}, expected 25"))?;
    let bounds = MartingaleBounds::new(SupermartingaleSpec::from_lattice(spec)).map_err(|e| e.to_string())?;
    let r4 = ratio_r(bounds.majorant(), 4.0).map_err(|e| e.to_string())?;
    let a = within("r(4)", r4, 0.58, 0.01)?;
    let new4 = bounds.log_new_at(4.0).clip_one().exp();
    let b = within("q(4)", new4, 0.026, 0.001)?;
    let q25 = bounds.log_new_at(25.0).exp();
    let rel = (q25 / 3.44e-33 - 1.0).abs();
    ensure(rel <= 0.02, || format!("c2 Q(25) = {q25:e}, {:.2}% from 3.44e-33", 100.0 * rel))?;
    Ok(format!("j**=25 {a} {b} c2*Q(25)={q25:.4e}"))
}

fn crossover() -> Check {
    let x = gaussian_hoeffding_crossover();
    ensure((1.3123..=1.3125).contains(&x), || format!("crossover at {x}"))?;
    Ok(format!("root={x:.7}"))
}

fn oracle_equivalence() -> Check {
    let mut worst_hull = (0.0f64, 0u64, 0.0f64);
    let mut worst_exact = 0.0f64;
    for n in 1..=50u64 {
        for &p in &P_GRID {
            let spec = BinomialSpec::new(n, p).map_err(|e| e.to_string())?;
            let m = Majorant::new(spec.clone()).map_err(|e| e.to_string())?;
            let c = oracle_check(&m, 1e-3).map_err(|e| e.to_string())?;
            if c.max_log_discrepancy > worst_hull.0 {
                worst_hull = (c.max_log_discrepancy, n, p);
            }
            ensure(c.max_log_discrepancy <= 1e-6, || {
                format!("n={n} p={p}: hull discrepancy {:e} at x={}", c.max_log_discrepancy, c.worst_x)
            })?;
            let exact = exact_tails(&spec).map_err(|e| e.to_string())?;
            for (j, e) in exact.iter().enumerate() {
                let fast = m.table().log_tail(j as i64).ln();
                let el = e.ln();
                let err = if el == f64::NEG_INFINITY && fast == f64::NEG_INFINITY { 0.0 } else { (el - fast).exp_m1().abs() };
                worst_exact = worst_exact.max(err);
                ensure(err <= 1e-12, || format!("n={n} p={p} j={j}: tail relative error {err:e}"))?;
            }
        }
    }
    Ok(format!(
        "400 specs, max hull log-discrepancy {:.2e} (n={}, p={}), max tail relative error {:.2e}",
        worst_hull.0, worst_hull.1, worst_hull.2, worst_exact
    ))
}

fn structural_case(n: u64, p: f64, seed: u64) -> Result<(), TestCaseError> {
    let fail = |m: String| TestCaseError::fail(format!("n={n} p={p}: {m}"));
    let m = Majorant::new(BinomialSpec::new(n, p).unwrap()).unwrap();
    let knots = m.lattice().knots();
    for (i, k) in knots.iter().enumerate() {
        let j = k.j as f64;
        if !(j - 1.0 < k.y && k.y <= j - 0.5 && j - 0.5 < k.x) {
            return Err(fail(format!("knot chain broken at {k:?}")));
        }
        if let Some(next) = knots.get(i + 1) {
            if k.x > next.y + 1e-12 {
                return Err(fail(format!("x_{} > y_{}", k.j, next.j)));
            }
        }
        if k.j <= n {
            for e in [k.y, k.x] {
                let a = q_interp(k, e).unwrap().ln();
                let b = q_lin(m.table(), e + 0.5).ln();
                if (a - b).abs() > 1e-10 * b.abs().max(1.0) {
                    return Err(fail(format!("discontinuity at knot {} endpoint {e}: {a} vs {b}", k.j)));
                }
            }
        }
    }
    let end = n as f64 + 0.5;
    let xs: Vec<f64> = (0..=600).map(|i| -1.0 + (end + 1.0) * i as f64 / 600.0).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| m.shifted(x).ln()).collect();
    for (i, w) in vals.windows(2).enumerate() {
        if w[1] > w[0] + 1e-14 * w[0].abs() {
            return Err(fail(format!("increases between x={} and x={}", xs[i], xs[i + 1])));
        }
    }
    for (&x, &v) in xs.iter().zip(&vals) {
        if v < m.lin(x + 0.5).ln() - 1e-12 * v.abs().max(1.0) {
            return Err(fail(format!("below Q^Lin at x={x}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let a: f64 = rng.random_range(-1.0..end - 1e-3);
        let b: f64 = rng.random_range(-1.0..end - 1e-3);
        let (x1, x2) = if a < b { (a, b) } else { (b, a) };
        let lam: f64 = rng.random();
        let mid = m.shifted(lam * x1 + (1.0 - lam) * x2).ln();
        let chord = lam * m.shifted(x1).ln() + (1.0 - lam) * m.shifted(x2).ln();
        if mid < chord - 1e-10 * chord.abs().max(1.0) {
            return Err(fail(format!("not log-concave on ({x1}, {x2}) at lambda {lam}")));
        }
    }
    let t = m.table();
    for j in 1..n as i64 {
        let lhs = 2.0 * t.log_tail(j).ln();
        let rhs = t.log_tail(j - 1).ln() + t.log_tail(j + 1).ln();
        if lhs < rhs - 1e-12 * rhs.abs().max(1.0) {
            return Err(fail(format!("discrete log-concavity fails at j={j}")));
        }
    }
    for x in [end, end + 1e-9, end + 0.25, end + 100.0] {
        if !m.shifted(x).is_zero() {
            return Err(fail(format!("Q({x}) is not exactly zero")));
        }
    }
    Ok(())
}

fn structural() -> Check {
    let cases = 1000;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner
        .run(&(1u64..=300, 0.001f64..0.999, proptest::num::u64::ANY), |(n, p, seed)| structural_case(n, p, seed))
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} random specs, n in [1, 300], p in (0.001, 0.999)"))
}

fn dominance() -> Check {
    let mut points = 0usize;
    let mut all_x_specs = 0usize;
    let mut worst = 0.0f64;
    for n in 1..=50u64 {
        for &p in &P_GRID {
            let m = Majorant::new(BinomialSpec::new(n, p).unwrap()).map_err(|e| e.to_string())?;
            let jss = j_double_star(n, p).map_err(|e| e.to_string())?;
            let all = dominance_all_x(n, p).map_err(|e| e.to_string())?;
            all_x_specs += all as usize;
            let limit = if all { n as f64 } else { jss as f64 };
            let steps = ((limit + 1.0) / 0.01).floor() as i64;
            for i in 0..=steps {
                let x = -1.0 + i as f64 * 0.01;
                let r = ratio_r(&m, x).map_err(|e| e.to_string())?;
                worst = worst.max(r);
                points += 1;
                ensure(r <= 1.0 + 1e-12, || format!("n={n} p={p} x={x}: r = {r}"))?;
            }
        }
    }
    Ok(format!("{points} points, {all_x_specs} specs with all-x dominance, max r = {worst:.12}"))
}

/// Zero-mean law with at most `k` atoms, support `<= d`, variance `<= sigma^2`.
fn random_admissible(rng: &mut ChaCha8Rng, d: f64, sigma: f64) -> DiscreteDistribution {
    let k = rng.random_range(2..=6);
    let mut atoms: Vec<(f64, f64)> = (0..k).map(|_| (rng.random_range(-4.0..1.0), rng.random_range(0.01..1.0))).collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.iter_mut().for_each(|a| a.1 /= total);
    let mean: f64 = atoms.iter().map(|a| a.0 * a.1).sum();
    atoms.iter_mut().for_each(|a| a.0 -= mean);
    let top = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let var: f64 = atoms.iter().map(|a| a.0 * a.0 * a.1).sum();
    let mut s = if top > 0.0 { d / top } else { 1.0 };
    if s * s * var > sigma * sigma {
        s = sigma / var.sqrt();
    }
    s *= 1.0 - 1e-9;
    atoms.iter_mut().for_each(|a| a.0 *= s);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    // absorb the centering residual in the lowest atom
    let mean: f64 = atoms.iter().map(|a| a.0 * a.1).sum();
    atoms[0].0 -= mean / atoms[0].1;
    DiscreteDistribution::new(atoms).expect("valid construction")
}

fn extremality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut cells = 0;
    let per_cell = 10_000;
    for &d in &[0.5, 1.0, 2.0] {
        for &ratio in &[0.2, 1.0, 3.0] {
            let sigma = ratio * d;
            for &tf in &[-1.0, -0.25, 0.0, 0.3, 0.8, 1.0] {
                let t = tf * d;
                cells += 1;
                for _ in 0..per_cell {
                    let dist = random_admissible(&mut rng, d, sigma);
                    let out = extremal_moment_check(&dist, d, sigma, t).map_err(|e| format!("d={d} sigma={sigma}: {e}"))?;
                    ensure(out.holds, || format!("d={d} sigma={sigma} t={t}: {out:?} for {dist:?}"))?;
                }
                let x = DiscreteDistribution::two_point(d, sigma).map_err(|e| e.to_string())?;
                let out = extremal_moment_check(&x, d, sigma, t).map_err(|e| e.to_string())?;
                ensure((out.lhs - out.rhs).abs() <= 1e-12 * out.rhs.max(1.0), || format!("no equality for d X_a: {out:?}"))?;
            }
        }
    }
    Ok(format!("{cells} cells x {per_cell} laws, equality at d*X_a"))
}

fn monte_carlo() -> Check {
    let trials = 1_000_000u64;
    let families = [
        IncrementFamily::new(FamilyKind::TwoPointExtremal),
        IncrementFamily::new(FamilyKind::BoundedUniform),
        IncrementFamily::truncated_shifted(1.0),
    ];
    let mut rows = 0;
    let mut exact_rows = 0;
    let mut in_ci = 0;
    let mut min_est = 1.0f64;
    for (k, &n) in [5u64, 20, 50].iter().enumerate() {
        let spec = SupermartingaleSpec::homogeneous(n, 1.0, 0.6).map_err(|e| e.to_string())?;
        let bounds = MartingaleBounds::new(spec.clone()).map_err(|e| e.to_string())?;
        let half = SupermartingaleSpec::new(0.5, spec.sigmas().to_vec()).map_err(|e| e.to_string())?;
        let truncated = MartingaleBounds::new(half).map_err(|e| e.to_string())?;
        let table = TailTable::new(spec.binomial().clone());
        let lattice: Vec<i64> = (0..=n as i64).filter(|&j| table.log_tail(j).exp() >= 1e-4).collect();
        for (f, fam) in families.iter().enumerate() {
            let seed = 1000 + 10 * k as u64 + f as u64;
            let paths = simulate_paths(&spec, fam, trials, seed, None).map_err(|e| e.to_string())?;
            let exceed = fam.exceedances(&spec, 0.5);
            let mut ys: Vec<(f64, Option<i64>)> = lattice.iter().map(|&j| (spec.unscale(j as f64), Some(j))).collect();
            ys.extend(lattice.iter().map(|&j| (spec.unscale(j as f64 + 0.5), None)));
            for (y, j) in ys {
                let y_hit = y - 1e-9 * (y.abs() + n as f64 * spec.h());
                let est = paths.tail(y_hit, false);
                let est_max = paths.tail(y_hit, true);
                let checks = [
                    ("new", bounds.new_bound(y)),
                    ("old", bounds.old_bound(y)),
                    ("truncation", truncated.truncation_bound(y, &exceed).map_err(|e| e.to_string())?),
                ];
                for (name, b) in checks {
                    for (which, e) in [("S_n", &est), ("M_n", &est_max)] {
                        ensure(!e.exceeds(b, 3.0), || {
                            format!("n={n} {:?} y={y}: {which} estimate {} exceeds {name} bound {b}", fam.kind, e.point)
                        })?;
                    }
                }
                rows += 1;
                if est.point > 0.0 {
                    min_est = min_est.min(est.point);
                }
                if let (Some(j), FamilyKind::TwoPointExtremal) = (j, fam.kind) {
                    let q = table.log_tail(j).exp();
                    let se = (q * (1.0 - q) / trials as f64).sqrt();
                    exact_rows += 1;
                    in_ci += (est.ci_low <= q && q <= est.ci_high) as usize;
                    ensure((est.point - q).abs() <= 4.0 * se + 1e-12, || {
                        format!("n={n} j={j}: two-point estimate {} vs exact {q} (se {se:e})", est.point)
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "{rows} thresholds x 3 bounds x (S_n, M_n), estimates down to {min_est:.1e}; two-point exact in 95% CI {in_ci}/{exact_rows}, all within 4 se"
    ))
}

fn moment_comparison() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checks = 0;
    for n in 1..=6usize {
        for _ in 0..20 {
            let d = rng.random_range(0.2..3.0);
            let sigmas: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0) * d).collect();
            let spec = SupermartingaleSpec::new(d, sigmas).map_err(|e| e.to_string())?;
            let s = two_point_sum_law(&spec).map_err(|e| e.to_string())?;
            let t = binomial_sum_law(&spec).map_err(|e| e.to_string())?;
            let (lo, hi) = (s.min().min(t.min()), s.max().max(t.max()));
            for i in 0..50 {
                let th = lo + (hi - lo) * i as f64 / 49.0;
                let (a, b) = (expected_plus_square(&s, th), expected_plus_square(&t, th));
                ensure(a <= b + 1e-12, || format!("n={n} t={th}: {a} > {b}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} (spec, t) pairs"))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tailbound")).args(args).output().map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) => Ok(out.stdout),
        c => Err(format!("{args:?} exited with {c:?}: {}", String::from_utf8_lossy(&out.stderr))),
    }
}

fn determinism() -> Check {
    let verify = |threads: &str| {
        cli(&[
            "verify", "--n", "20", "--d", "1", "--sigma", "0.6", "--trials", "200000", "--seed", "11", "--threads",
            threads, "--format", "json",
        ])
    };
    let base = verify("1")?;
    for threads in ["1", "2", "5", "8"] {
        ensure(verify(threads)? == base, || format!("verify output differs with --threads {threads}"))?;
    }
    let sweep = ["sweep", "--n", "30", "--p", "0.03", "--start", "0", "--stop", "31", "--step", "0.1"];
    ensure(cli(&sweep)? == cli(&sweep)?, || "sweep output differs between runs".into())?;
    let bound = ["bound", "--n", "30", "--p", "0.03", "--x", "4,25", "--format", "json"];
    ensure(cli(&bound)? == cli(&bound)?, || "bound output differs between runs".into())?;
    let dir = std::env::temp_dir().join(format!("tailbound-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join("verify.json");
    let path_s = path.to_string_lossy().to_string();
    cli(&[
        "verify", "--n", "20", "--d", "1", "--sigma", "0.6", "--trials", "200000", "--seed", "11", "--threads", "3",
        "--format", "json", "--out", &path_s,
    ])?;
    let written = std::fs::read(&path).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    ensure(written == base, || "--out file differs from standard output".into())?;
    Ok(format!("verify identical for --threads 1,2,5,8 and --out; sweep and bound repeat byte for byte ({} bytes)", base.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "constants", limit: Duration::from_secs(1), run: constants },
        Criterion { id: 2, name: "reference values", limit: Duration::from_secs(1), run: reference_values },
        Criterion { id: 3, name: "gaussian/hoeffding crossover", limit: Duration::from_secs(1), run: crossover },
        Criterion { id: 4, name: "oracle equivalence", limit: Duration::from_secs(120), run: oracle_equivalence },
        Criterion { id: 5, name: "structural properties", limit: Duration::from_secs(120), run: structural },
        Criterion { id: 6, name: "dominance", limit: Duration::from_secs(120), run: dominance },
        Criterion { id: 7, name: "two-point extremality", limit: Duration::from_secs(60), run: extremality },
        Criterion { id: 8, name: "monte carlo soundness", limit: Duration::from_secs(600), run: monte_carlo },
        Criterion { id: 9, name: "small-n moment comparison", limit: Duration::from_secs(60), run: moment_comparison },
        Criterion { id: 10, name: "determinism", limit: Duration::from_secs(60), run: determinism },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str()) || f == &c.id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (verdict, detail) = match result {
            Ok(d) if elapsed <= c.limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; runtime over limit")),
            Err(e) => ("FAIL", e),
        };
        failures += (verdict == "FAIL") as u32;
        println!(
            "criterion {:>2} {:<30} {verdict}  [{:.2}s / {}s]  {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
