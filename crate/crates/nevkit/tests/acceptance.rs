//! Acceptance gate: the eleven primary criteria, one test (and therefore
//! one pass/fail line in the test output) per criterion.

use nevkit::diffpoly::{
    clunie_split_check, mohonko_check, parse, render, top_half_trend_decreasing,
    valiron_mohonko_check, CheckOpts, DiffPoly, Term,
};
use nevkit::funcat::{parse_function, FunctionExpr};
use nevkit::harness::{
    fit_power_law, grid, random_rational, rows_logarithmic_measure, run_experiment,
    ExperimentConfig, Suite,
};
use nevkit::nevanlinna::{poisson_jensen_terms, proximity};
use nevkit::quad::QuadOpts;
use nevkit::{Error, C};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

fn cfg(suite: Suite) -> ExperimentConfig {
    ExperimentConfig { suite, ..ExperimentConfig::default() }
}

/// 1. Jensen's formula: 20 seeded random rationals with f(0) != 0, inf at
/// r in {1, 2, 5, 10}; max |T(r,f) - T(r,1/f) - log|f(0)|| < 1e-6.
#[test]
fn criterion_01_jensen_identity() {
    let rows = run_experiment(&cfg(Suite::Jensen)).unwrap();
    assert_eq!(rows.len(), 80);
    let worst = rows
        .iter()
        .map(|row| (row.lhs - row.comparator).abs())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "max Jensen residual {worst:.3e}");
}

/// 2. Poisson-Jensen decomposition of log|f(z+c)/f(z)|: residual
/// |direct - (S1 + S2 - S3)| < 1e-7 on 40 seeded cases.
#[test]
fn criterion_02_poisson_jensen_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let opts = QuadOpts::default();
    let shifts =
        [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(1.0, 1.0), C::new(-1.0, 0.0)];
    let alphas = [1.5, 2.0, 3.0];
    let mut done = 0;
    let mut attempts = 0;
    while done < 40 {
        attempts += 1;
        assert!(attempts < 400, "too many rejected draws ({done} cases done)");
        let f = random_rational(&mut rng);
        let r = rng.gen_range(1.0..5.0);
        let theta = rng.gen_range(0.0..2.0 * PI);
        let c = shifts[rng.gen_range(0..shifts.len())];
        let alpha = alphas[rng.gen_range(0..alphas.len())];
        let z = C::from_polar(r, theta);
        // draws with z or z+c too close to a divisor are rejected by the
        // decomposition itself; redraw deterministically
        let Ok((s1, s2, s3)) = poisson_jensen_terms(&f, c, alpha, z, r, &opts) else {
            continue;
        };
        let direct = f.log_abs(z + c) - f.log_abs(z);
        let residual = (direct - (s1 + s2 - s3)).abs();
        assert!(
            residual < 1e-7,
            "residual {residual:.3e} for case {done} (r = {r}, c = {c}, alpha = {alpha})"
        );
        done += 1;
    }
}

/// 3. Explicit shift-quotient bound on the full built-in grid:
/// 4 functions x 5 radii x 3 alphas x 3 deltas x 3 shifts = 540 checks,
/// zero failures.
#[test]
fn criterion_03_explicit_bound_grid() {
    let rows = run_experiment(&cfg(Suite::BoundGrid)).unwrap();
    assert_eq!(rows.len(), 540);
    let failures: Vec<_> = rows.iter().filter(|row| !row.pass).collect();
    assert!(
        failures.is_empty(),
        "{} bound violations, first at {} r = {}",
        failures.len(),
        failures[0].function,
        failures[0].r
    );
}

/// 4. exp(exp(z)): m(r, f(z+1)/f(z)) / T(r, f) = e - 1 within 1e-3
/// relative at r in {1, 2, 3, 4, 5}.
#[test]
fn criterion_04_expexp_exact_ratio() {
    let rows = run_experiment(&cfg(Suite::ExpexpRatio)).unwrap();
    assert_eq!(rows.len(), 5);
    let target = E - 1.0;
    for row in &rows {
        let rel = (row.ratio - target).abs() / target;
        assert!(rel <= 1e-3, "relative error {rel:.3e} at r = {}", row.r);
    }
}

/// 5. Sharpness: the fitted growth exponent of m(r, f(z+1)/f(z)) for
/// f = exp(z^2) lies in [0.9, 1.1] with prefactor within 20% of 2/pi;
/// for f = Gamma, lhs / log r in [0.99, 1.01] for r >= 5.
#[test]
fn criterion_05_sharpness() {
    let rows = run_experiment(&cfg(Suite::Sharpness)).unwrap();
    for row in rows.iter().filter(|row| row.function == "gamma" && row.r >= 5.0) {
        let ratio = row.lhs / row.r.ln();
        assert!(
            (0.99..=1.01).contains(&ratio),
            "gamma lhs/log r = {ratio} at r = {}",
            row.r
        );
    }
    let (rs, ms): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|row| row.function == "exppoly[1,0,0]")
        .map(|row| (row.r, row.lhs))
        .unzip();
    assert_eq!(rs.len(), 24);
    // m(r) = (2/pi) r + 1/2 + O(1/r): fit the asymptotic top half
    let half = rs.len() / 2;
    let (a, sigma) = fit_power_law(&rs[half..], &ms[half..]).unwrap();
    let a0 = 2.0 / PI;
    assert!((0.9..=1.1).contains(&sigma), "sigma = {sigma}");
    assert!((a - a0).abs() <= 0.2 * a0, "A = {a} vs 2/pi = {a0}");
    assert!(rows.iter().all(|row| row.pass), "suite reported a failing row");
}

/// 6. Clunie analogue on the tan(pi z / 2) pair f f(z+1) = -1:
/// non-flagged ratio m(r, P)/T(r, f) < 0.05 at r = 40, and a
/// monotone-decreasing trend over the top half of the 24-point grid.
#[test]
fn criterion_06_clunie_analogue() {
    let f = FunctionExpr::tan(C::new(FRAC_PI_2, 0.0), C::new(0.0, 0.0)).unwrap();
    let p = parse("f(z+1)").unwrap();
    let q = parse("-1").unwrap();
    let rs = grid(2.0, 40.0, 24, true);
    let records = clunie_split_check(1, &p, &q, &f, &rs, &CheckOpts::default()).unwrap();
    let last = records.last().unwrap();
    assert!((last.r - 40.0).abs() < 1e-9);
    assert!(!last.flagged_exceptional, "r = 40 flagged as exceptional");
    assert!(last.ratio < 0.05, "ratio {} at r = 40", last.ratio);
    assert!(top_half_trend_decreasing(&records), "no decreasing trend");
}

/// 7. Mohon'ko analogue, same pair, a = 0: ratio m(r, 1/f)/T(r, f) < 0.05
/// at r = 40; the a = i case is rejected because the target satisfies the
/// equation.
#[test]
fn criterion_07_mohonko_analogue() {
    let f = FunctionExpr::tan(C::new(FRAC_PI_2, 0.0), C::new(0.0, 0.0)).unwrap();
    let p = parse("f(z)*f(z+1) + 1").unwrap();
    let rs = grid(2.0, 40.0, 24, true);
    let a0 = FunctionExpr::constant(C::new(0.0, 0.0));
    let records = mohonko_check(&p, &a0, &f, &rs, &CheckOpts::default()).unwrap();
    let last = records.last().unwrap();
    assert!((last.r - 40.0).abs() < 1e-9);
    assert!(!last.flagged_exceptional, "r = 40 flagged as exceptional");
    assert!(last.ratio < 0.05, "ratio {} at r = 40", last.ratio);

    let ai = FunctionExpr::constant(C::new(0.0, 1.0));
    match mohonko_check(&p, &ai, &f, &[2.0, 5.0], &CheckOpts::default()) {
        Err(Error::TargetSatisfiesEquation) => {}
        other => panic!("expected TargetSatisfiesEquation, got {other:?}"),
    }
}

/// 8. Valiron-Mohon'ko identity: T(r, f^2 + f) / (2 T(r, f)) in
/// [0.9, 1.1] for f = exp(z) at r >= 10.
#[test]
fn criterion_08_valiron_mohonko() {
    let f = FunctionExpr::exp_poly(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]);
    let p = parse("f(z)^2 + f(z)").unwrap();
    let rs = grid(10.0, 30.0, 6, true);
    let records = valiron_mohonko_check(&p, &f, &rs, &CheckOpts::default()).unwrap();
    for rec in &records {
        assert!(
            (0.9..=1.1).contains(&rec.ratio),
            "ratio {} at r = {}",
            rec.ratio,
            rec.r
        );
    }
}

/// 9. Borel growth check: T(alpha (r + |c|), f) <= 2 T(r + |c|, f) at every
/// grid point for f in {exp(z), rational of degree 3}; empirical flagged
/// logarithmic measure = 0.
#[test]
fn criterion_09_borel_growth() {
    for (function, r_start) in [(None, 9.0), (Some("rat[1,0,0,2]".to_string()), 4.0)] {
        let mut c = cfg(Suite::Borel);
        c.function = function.clone();
        c.r_start = r_start;
        c.r_stop = 40.0;
        c.r_count = 8;
        let rows = run_experiment(&c).unwrap();
        assert_eq!(rows.len(), 8, "grid shrank for {function:?}");
        for row in &rows {
            assert!(
                row.pass && !row.flagged,
                "violation for {} at r = {}",
                row.function,
                row.r
            );
        }
        assert_eq!(rows_logarithmic_measure(&rows), 0.0);
    }
}

fn random_poly(rng: &mut ChaCha8Rng) -> DiffPoly {
    let shifts = [
        C::new(0.0, 0.0),
        C::new(1.0, 0.0),
        C::new(-1.0, 0.0),
        C::new(0.0, 1.0),
        C::new(0.0, -1.0),
        C::new(2.0, 0.0),
    ];
    let nterms = rng.gen_range(1..=5);
    let terms: Vec<Term> = (0..nterms)
        .map(|_| {
            let nf = rng.gen_range(0..=3);
            let factors: Vec<(C, u32)> = (0..nf)
                .map(|_| (shifts[rng.gen_range(0..shifts.len())], rng.gen_range(1..=4)))
                .collect();
            Term {
                scalar: C::new(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64),
                coeff: None,
                factors,
            }
        })
        .collect();
    // canonicalize through the same path parse() uses
    DiffPoly { terms }.add(&DiffPoly::zero())
}

/// 10. Parser: 200 seeded round-trips are byte-stable, and the degree and
/// shift reports match brute-force scans of the term list.
#[test]
fn criterion_10_parser_round_trips_and_reports() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for case in 0..200 {
        let p = random_poly(&mut rng);
        let text = render(&p);
        let back = parse(&text).unwrap_or_else(|e| panic!("case {case}: parse `{text}`: {e}"));
        assert_eq!(render(&back), text, "case {case}: render not byte-stable");
        assert_eq!(back, p, "case {case}: structure changed through round trip");

        let report = p.degree_report();
        let brute_degree = p
            .terms
            .iter()
            .map(|t| t.factors.iter().map(|(_, l)| *l).sum::<u32>())
            .max()
            .unwrap_or(0);
        let brute_shift = p
            .terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .map(|(c, _)| c.norm())
            .fold(0.0f64, f64::max);
        assert_eq!(report.total_degree, brute_degree, "case {case}: degree");
        assert_eq!(report.max_shift, brute_shift, "case {case}: max shift");
        assert_eq!(report.term_count, p.terms.len(), "case {case}: term count");
    }
}

/// Fixed-node midpoint rule for m(r, f): ~10^6 equispaced nodes, offset by
/// half a cell so that divisor points sitting exactly on the circle at
/// angle 0 are never sampled.
fn fixed_rule_proximity(f: &FunctionExpr, r: f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let acc: f64 = (0..n)
        .map(|k| f.log_abs(C::from_polar(r, (k as f64 + 0.5) * h)).max(0.0))
        .sum();
    acc * h / (2.0 * PI)
}

/// 11. Quadrature oracle: adaptive proximity agrees with a ~10^6-node
/// fixed midpoint rule within 1e-6 relative across the catalog at
/// r in {1, 5}. Catalog instances are parameterized so no divisor point
/// lies exactly on either circle; a divisor on the circle makes the fixed
/// rule itself O(1/n)-biased beyond the comparison tolerance.
#[test]
fn criterion_11_quadrature_oracle() {
    let catalog: Vec<(&str, FunctionExpr)> = vec![
        ("shift(gamma,0.5)", parse_function("shift(gamma,0.5)").unwrap()),
        ("rational", parse_function("rat[1,0,-2]/[1,3]").unwrap()),
        ("exp(z)", FunctionExpr::exp_poly(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)])),
        (
            "exp(z^2)",
            FunctionExpr::exp_poly(vec![
                C::new(1.0, 0.0),
                C::new(0.0, 0.0),
                C::new(0.0, 0.0),
            ]),
        ),
        (
            "tan(pi z/2 + pi/4)",
            FunctionExpr::tan(C::new(FRAC_PI_2, 0.0), C::new(FRAC_PI_4, 0.0)).unwrap(),
        ),
        ("exp(exp(z))", parse_function("expof(exppoly[1,0])").unwrap()),
        (
            "quot(exppoly,rational)",
            parse_function("quot(exppoly[1,0],rat[1,0,-2]/[1,3])").unwrap(),
        ),
        ("pow(tan,2)", parse_function("pow(tan[1.5707963267948966,0.7853981633974483],2)").unwrap()),
    ];
    let opts = QuadOpts::default();
    let n = 1 << 20; // 1_048_576 nodes
    for (name, f) in &catalog {
        for &r in &[1.0, 5.0] {
            let adaptive = proximity(f, r, &opts).unwrap();
            let oracle = fixed_rule_proximity(f, r, n);
            let denom = oracle.abs().max(1.0);
            let rel = (adaptive - oracle).abs() / denom;
            assert!(
                rel < 1e-6,
                "{name} at r = {r}: adaptive {adaptive:.12e} vs oracle {oracle:.12e} (rel {rel:.3e})"
            );
        }
    }
}
