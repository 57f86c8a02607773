//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use awlab::barnett::{barnett_check, ef_consts, random_polynomials, BarnettSetup};
use awlab::fock::{build_fock, generalized_circular, semicircular_field, Budget, FockAlgebra, FockOperator};
use awlab::laws::{catalan_number, direct_sum_freeness, monotonicity_violations, tla_sweep, Verdict};
use awlab::matrix_models::{asymptotic_freeness_check, mc_moments, BandFixture, EnsembleSpec, Family, DEFAULT_WORDS};
use awlab::modular::{kms_battery, ModularFlow, DEFAULT_T_GRID};
use awlab::rep::{Block, FactorType, RepSpec};
use awlab::word::WordExpr;
use awlab::{Result, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn two_block() -> RepSpec {
    RepSpec::new(0, vec![Block::new(LN_2, 1), Block::new(3f64.ln(), 1)]).unwrap()
}

fn semicircle() -> Result<Outcome> {
    let rep = RepSpec::trivial(1)?;
    let space = build_fock(1, 8)?;
    let alg = FockAlgebra::new(&space).with("s", semicircular_field(&space, &rep, &[1.0])?)?;
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for n in 1..=8u32 {
        let m = alg.vacuum_expectation(&WordExpr::generator("s").pow(n))?;
        if n % 2 == 0 {
            let target = catalan_number(n as usize / 2) / 4f64.powi(n as i32 / 2);
            even = even.max((m.value.re - target).abs() / target);
        } else {
            odd = odd.max(m.value.norm());
        }
    }
    outcome(even <= 1e-12 && odd <= 1e-14, format!("max relative error {even:.1e}, max odd moment {odd:.1e}"))
}

fn generalized_circular_state() -> Result<Outcome> {
    let space = build_fock(2, 4)?;
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let mut worst = 0.0f64;
    for lambda in [0.25, 0.5, 0.9] {
        let y = generalized_circular(&space, lambda, &[one, zero], &[zero, one])?;
        let alg = FockAlgebra::new(&space).with("y", y)?;
        let ysy = alg.vacuum_expectation(&WordExpr::parse("y* y")?)?.value;
        let yys = alg.vacuum_expectation(&WordExpr::parse("y y*")?)?.value;
        worst = worst.max((ysy - 1.0).norm()).max((yys - lambda).norm());
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.1e}"))
}

fn polar() -> Result<Outcome> {
    let reports = tla_sweep(0.5, 6..=12)?;
    let violations = monotonicity_violations(&reports);
    let (first, last) = (&reports[0], &reports[reports.len() - 1]);
    let mut shrunk = true;
    for k in 0..first.table.len() {
        for l in 0..first.table.len() {
            let (a, b) = (first.table[k][l], last.table[k][l]);
            shrunk &= b <= a / 2.0 || b < 1e-3;
        }
    }
    let diag: Vec<String> = (1..=3).map(|k| format!("{:.2e}->{:.2e}", first.table[k][k], last.table[k][k])).collect();
    outcome(
        violations.is_empty() && shrunk,
        format!("diagonal defects D=6->12: {}; monotonicity violations {}", diag.join(", "), violations.len()),
    )
}

fn freeness() -> Result<Outcome> {
    let r = direct_sum_freeness(&two_block(), 6, 6, 100, 17, &Budget::from_env()?)?;
    let pass = r.verdict == Verdict::Pass && r.recursion.max_residual == 0.0;
    outcome(
        pass,
        format!(
            "{} alternating words, Fock max {:.1e}, recursion max {:.1e}, Fock vs recursion {:.1e} on {} words",
            r.fock.words_checked, r.fock.max_residual, r.recursion.max_residual, r.max_moment_difference, r.random_words
        ),
    )
}

fn modular() -> Result<Outcome> {
    let mut covariance = 0.0f64;
    for rep in [RepSpec::lambda_block(0.5)?, two_block()] {
        let flow = ModularFlow::new(rep.clone(), build_fock(rep.dim(), 4)?)?;
        let xi: Vec<f64> = (0..rep.dim()).map(|i| 0.7 - 0.4 * i as f64).collect();
        let s = semicircular_field(flow.space(), &rep, &xi)?;
        for t in [-1.0, 0.5, 2.0] {
            let moved = flow.modular_apply(&s, t)?;
            let rotated: Vec<f64> = (rep.orthogonal(t) * nalgebra::DVector::from_column_slice(&xi)).iter().copied().collect();
            covariance = covariance.max(moved.max_abs_diff(&semicircular_field(flow.space(), &rep, &rotated)?)?);
        }
    }
    let mut kms = 0.0f64;
    for rep in [RepSpec::trivial(1)?, RepSpec::lambda_block(0.5)?, two_block()] {
        let flow = ModularFlow::new(rep.clone(), build_fock(rep.dim(), 2)?)?;
        kms = kms.max(kms_battery(&flow, &DEFAULT_T_GRID)?.max_residual);
    }
    let flow = ModularFlow::new(RepSpec::lambda_block(0.5)?, build_fock(2, 6)?)?;
    let g = flow.gamma(2.0 * PI / LN_2);
    let period = g.max_abs_diff(&FockOperator::identity(flow.space(), g.kind()))?;
    outcome(
        covariance <= 1e-12 && kms <= 1e-9 && period <= 1e-10,
        format!("covariance {covariance:.1e}, KMS {kms:.1e}, periodicity {period:.1e}"),
    )
}

fn barnett() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, setup) in [("tracial", BarnettSetup::tracial()?), ("omega_lambda", BarnettSetup::omega_lambda(0.5)?)] {
        let xs = random_polynomials(&setup, 200, 6, 7);
        let r = barnett_check(&setup, &xs)?;
        pass &= r.summary.pass && r.summary.count == 200;
        parts.push(format!("{name} min margin {:.3e}", r.summary.min_margin));
    }
    let e = ef_consts(&BarnettSetup::tracial()?)?.e;
    pass &= e == 14.0;
    outcome(pass, format!("{}; E = {e}", parts.join(", ")))
}

fn classification() -> Result<Outcome> {
    let cases: [(RepSpec, &str, Vec<&str>); 4] = [
        (RepSpec::trivial(3)?, "II_1", vec![]),
        (RepSpec::lambda_block(0.5)?, "III_lambda", vec!["2"]),
        (two_block(), "III_1", vec![]),
        (RepSpec::trivial(1)?, "NonFactor_dim1", vec![]),
    ];
    let mut pass = true;
    let mut seen = Vec::new();
    for (rep, tag, gens) in &cases {
        let label = rep.classify();
        let got: Vec<&str> = label.s_invariant.iter().map(|g| g.display.as_str()).collect();
        let lambda_ok = match label.factor_type {
            FactorType::IIILambda { lambda } => (lambda - 0.5).abs() < 1e-15,
            _ => true,
        };
        pass &= label.factor_type.tag() == *tag && lambda_ok && (gens.is_empty() || got == *gens);
        seen.push(label.factor_type.tag());
    }
    outcome(pass, format!("labels {}", seen.join(", ")))
}

fn matrix_model() -> Result<Outcome> {
    let single = EnsembleSpec::new(512, 50, 2024, Family::GueSingle)?;
    let m = mc_moments(&single, 4)?;
    let z = |k: usize| {
        let r = &m.rows[k];
        (r.estimate - r.target).abs() / r.stderr.unwrap_or(f64::INFINITY)
    };
    let (z2, z4) = (z(2), z(4));
    let pair = EnsembleSpec::new(512, 50, 2024, Family::GuePair)?;
    let words: Vec<String> = DEFAULT_WORDS.iter().map(|w| w.to_string()).collect();
    let f = asymptotic_freeness_check(&pair, &words, &BandFixture::builtin()?)?;
    let worst = f
        .words
        .iter()
        .filter_map(|w| Some(w.mean?.abs() / w.band?))
        .fold(0.0f64, f64::max);
    outcome(
        z2 <= 3.0 && z4 <= 3.0 && f.pass,
        format!("m2 at {z2:.2} stderr, m4 at {z4:.2} stderr, words at {:.0}% of band", 100.0 * worst),
    )
}

fn main() {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, Duration); 8] = [
        ("semicircle moments", semicircle, Duration::from_secs(1)),
        ("generalized circular state", generalized_circular_state, Duration::from_secs(1)),
        ("polar decomposition convergence", polar, Duration::from_secs(120)),
        ("freeness of orthogonal summands", freeness, Duration::MAX),
        ("modular flow and KMS", modular, Duration::MAX),
        ("commutator inequality", barnett, Duration::from_secs(60)),
        ("classification table", classification, Duration::MAX),
        ("matrix models", matrix_model, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed < *limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let over = if elapsed >= *limit { " (over time limit)" } else { "" };
        println!(
            "[{}] {} {}: {} [{:.2}s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            detail,
            elapsed.as_secs_f64(),
            over
        );
        failures += usize::from(!pass);
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
