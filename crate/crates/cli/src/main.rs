use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use awlab::barnett::{barnett_check, ef_consts, random_polynomials, BarnettReport, BarnettSetup};
use awlab::fock::{semicircular_field, Budget, FockAlgebra, FockOperator, FockSpace};
use awlab::laws::{catalan_number, defect_csv, direct_sum_freeness, monotonicity_violations, tla_sweep, Verdict};
use awlab::matrix_models::{
    asymptotic_freeness_check, mc_moments, BandFixture, EnsembleSpec, Family, MatrixFreenessReport, MomentEstimates,
    DEFAULT_WORDS,
};
use awlab::modular::{kms_battery, ModularFlow, DEFAULT_T_GRID};
use awlab::rep::{parse_rep_spec, Block, RepSpec};
use awlab::word::WordExpr;
use awlab::{Error, Result, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const SEMICIRCLE_REL_TOL: f64 = 1e-12;
const SEMICIRCLE_ODD_TOL: f64 = 1e-14;
const COVARIANCE_TOL: f64 = 1e-12;
const KMS_TOL: f64 = 1e-9;
const PERIOD_TOL: f64 = 1e-10;
const TLA_FLOOR: f64 = 1e-3;
/// Depth span over which every defect must halve or fall below the floor.
const TLA_SHRINK_SPAN: usize = 6;
const MC_STDERRS: f64 = 3.0;
const BARNETT_DEGREE: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "awlab", version, about = "Numerical workbench for free Araki-Woods factors")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Representation document (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    rep: Option<String>,
    /// Fock truncation depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sample count: random words, polynomials or Monte Carlo samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest admissible Fock dimension.
    #[arg(long, global = true)]
    max_dim: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type label of the representation's factor.
    Classify,
    /// Vacuum expectation of a word in s(i), l(i), l*(i), y, y*.
    Moments {
        #[arg(value_name = "WORD", num_args = 1.., required = true)]
        word: Vec<String>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Monte Carlo moments of a random matrix ensemble.
    MatrixModel {
        #[arg(long, default_value = "gue_single")]
        family: Family,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Alternating words for the gue_pair freeness check.
        #[arg(long, value_delimiter = ',')]
        words: Option<Vec<String>>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    Semicircle,
    Freeness,
    Kms,
    Tla,
    Barnett,
}

struct Report {
    verdict: Option<bool>,
    body: Value,
    csv: String,
}

impl Report {
    fn info(body: Value, csv: String) -> Self {
        Report { verdict: None, body, csv }
    }

    fn verdict(pass: bool, body: Value, csv: String) -> Self {
        Report { verdict: Some(pass), body, csv }
    }
}

struct Ctx {
    global: Global,
    budget: Budget,
    rep: Option<RepSpec>,
    params: serde_json::Map<String, Value>,
}

impl Ctx {
    fn param(&mut self, key: &str, v: impl Serialize) {
        self.params.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    fn rep_or(&mut self, default: impl FnOnce() -> Result<RepSpec>) -> Result<RepSpec> {
        let rep = match &self.rep {
            Some(r) => r.clone(),
            None => default()?,
        };
        self.param("resolved_rep", &rep);
        Ok(rep)
    }

    fn depth_or(&mut self, default: usize) -> usize {
        let d = self.global.depth.unwrap_or(default);
        self.param("resolved_depth", d);
        d
    }

    fn samples_or(&mut self, default: usize) -> usize {
        let s = self.global.samples.unwrap_or(default);
        self.param("resolved_samples", s);
        s
    }

    fn space(&self, d: usize, depth: usize) -> Result<FockSpace> {
        FockSpace::new(d, depth, &self.budget)
    }
}

fn two_block() -> Result<RepSpec> {
    RepSpec::new(0, vec![Block::new(LN_2, 1), Block::new(3f64.ln(), 1)])
}

fn basis(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

fn classify(ctx: &mut Ctx) -> Result<Report> {
    let rep = ctx.rep.clone().ok_or_else(|| Error::InvalidArgument("classify needs --rep".into()))?;
    let label = rep.classify();
    let csv = format!(
        "type,lambda,s_invariant\n{},{},{}\n",
        label.factor_type.tag(),
        label.factor_type.lambda().map(|l| l.to_string()).unwrap_or_default(),
        label.s_invariant.iter().map(|g| g.display.as_str()).collect::<Vec<_>>().join(" ")
    );
    Ok(Report::info(serde_json::to_value(&label)?, csv))
}

/// Index inside `s(i)` or `l(i)`.
fn index_of(name: &str, head: &str) -> Option<Result<usize>> {
    let inner = name.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.parse().map_err(|_| Error::InvalidArgument(format!("bad vector index in `{name}`"))))
}

fn moments(ctx: &mut Ctx, word: &[String]) -> Result<Report> {
    let text = word.join(" ");
    let expr = WordExpr::parse(&text)?;
    ctx.param("word", &text);
    let lambda_default = ctx.global.lambda;
    let rep = ctx.rep_or(|| match lambda_default {
        Some(l) => RepSpec::lambda_block(l),
        None => RepSpec::trivial(1),
    })?;
    let depth = ctx.depth_or(expr.degree().max(1));
    let d = rep.dim();
    let space = ctx.space(d, depth)?;
    let mut alg = FockAlgebra::new(&space);
    let check = |i: usize| if i < d { Ok(i) } else { Err(Error::DimensionMismatch { expected: d, got: i + 1 }) };
    for name in expr.generators() {
        let op = if let Some(i) = index_of(&name, "s") {
            semicircular_field(&space, &rep, &basis(d, check(i?)?))?
        } else if let Some(i) = index_of(&name, "l") {
            let e: Vec<C64> = basis(d, check(i?)?).into_iter().map(|x| C64::new(x, 0.0)).collect();
            FockOperator::creation(&space, &e, false)?
        } else if name == "y" {
            let lambda = ctx
                .global
                .lambda
                .or(rep.classify().factor_type.lambda())
                .ok_or_else(|| Error::InvalidArgument("y needs --lambda or a III_lambda representation".into()))?;
            if d < 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: d });
            }
            ctx.param("resolved_lambda", lambda);
            let mut xi1 = vec![C64::new(0.0, 0.0); d];
            let mut xi2 = xi1.clone();
            xi1[0] = C64::new(FRAC_1_SQRT_2, 0.0);
            xi1[1] = C64::new(0.0, -FRAC_1_SQRT_2);
            xi2[0] = C64::new(FRAC_1_SQRT_2, 0.0);
            xi2[1] = C64::new(0.0, FRAC_1_SQRT_2);
            awlab::fock::generalized_circular(&space, lambda, &xi1, &xi2)?
        } else {
            return Err(Error::UnknownGenerator(name));
        };
        alg.insert(name, op)?;
    }
    let m = alg.vacuum_expectation(&expr)?;
    let body = json!({ "word": expr.to_string(), "value": [m.value.re, m.value.im], "exact": m.exact });
    let csv = format!("word,re,im,exact\n\"{}\",{},{},{}\n", expr, m.value.re, m.value.im, m.exact);
    Ok(Report::info(body, csv))
}

fn verify_semicircle(ctx: &mut Ctx) -> Result<Report> {
    let rep = ctx.rep_or(|| RepSpec::trivial(1))?;
    let depth = ctx.depth_or(8);
    let space = ctx.space(rep.dim(), depth)?;
    let alg = FockAlgebra::new(&space).with("s", semicircular_field(&space, &rep, &basis(rep.dim(), 0))?)?;
    let mut rows = Vec::new();
    let mut csv = String::from("k,moment,target,error\n");
    let mut pass = true;
    for k in 1..=depth as u32 {
        let m = alg.vacuum_expectation(&WordExpr::generator("s").pow(k))?;
        let (target, error, ok) = if k % 2 == 0 {
            let t = catalan_number(k as usize / 2) / 4f64.powi(k as i32 / 2);
            let e = (m.value - t).norm() / t;
            (t, e, e <= SEMICIRCLE_REL_TOL)
        } else {
            let e = m.value.norm();
            (0.0, e, e <= SEMICIRCLE_ODD_TOL)
        };
        pass &= ok;
        let _ = writeln!(csv, "{k},{},{target},{error:e}", m.value.re);
        rows.push(json!({ "k": k, "moment": [m.value.re, m.value.im], "target": target, "error": error, "exact": m.exact }));
    }
    let max_error = rows.iter().map(|r| r["error"].as_f64().unwrap_or(0.0)).fold(0.0, f64::max);
    Ok(Report::verdict(pass, json!({ "moments": rows, "max_error": max_error }), csv))
}

fn verify_freeness(ctx: &mut Ctx) -> Result<Report> {
    let rep = ctx.rep_or(two_block)?;
    let depth = ctx.depth_or(6);
    let words = ctx.samples_or(100);
    let max_len = depth.min(6);
    ctx.param("max_len", max_len);
    let r = direct_sum_freeness(&rep, depth, max_len, words, ctx.global.seed, &ctx.budget)?;
    let pass = r.verdict == Verdict::Pass;
    let csv = format!(
        "check,words,max_residual\nfock,{},{:e}\nrecursion,{},{:e}\nfock_vs_recursion,{},{:e}\n",
        r.fock.words_checked,
        r.fock.max_residual,
        r.recursion.words_checked,
        r.recursion.max_residual,
        r.random_words,
        r.max_moment_difference
    );
    Ok(Report::verdict(pass, serde_json::to_value(&r)?, csv))
}

fn verify_kms(ctx: &mut Ctx) -> Result<Report> {
    let reps = match ctx.rep.clone() {
        Some(r) => vec![r],
        None => vec![RepSpec::trivial(1)?, RepSpec::lambda_block(0.5)?, two_block()?],
    };
    ctx.param("resolved_reps", &reps);
    let depth = ctx.depth_or(4);
    ctx.param("t_grid", DEFAULT_T_GRID);
    let mut pass = true;
    let mut out = Vec::new();
    let mut csv = String::from("rep,covariance,kms,period,periodicity\n");
    for rep in reps {
        let d = rep.dim();
        let flow = ModularFlow::new(rep.clone(), ctx.space(d, depth)?)?;
        let mut covariance = 0.0f64;
        for i in 0..d {
            let e = basis(d, i);
            let s = semicircular_field(flow.space(), &rep, &e)?;
            for &t in &DEFAULT_T_GRID {
                let rotated: Vec<f64> = rep.orthogonal(t).column(i).iter().copied().collect();
                let moved = flow.modular_apply(&s, t)?;
                covariance = covariance.max(moved.max_abs_diff(&semicircular_field(flow.space(), &rep, &rotated)?)?);
            }
        }
        let kms_flow = ModularFlow::new(rep.clone(), ctx.space(d, 2)?)?;
        let kms = kms_battery(&kms_flow, &DEFAULT_T_GRID)?;
        let period = rep.classify().commensurability.and_then(|c| c.period);
        let periodicity = match period {
            Some(p) => {
                let g = flow.gamma(p);
                Some(g.max_abs_diff(&FockOperator::identity(flow.space(), g.kind()))?)
            }
            None => None,
        };
        let ok = covariance <= COVARIANCE_TOL && kms.max_residual <= KMS_TOL && periodicity.is_none_or(|p| p <= PERIOD_TOL);
        pass &= ok;
        let rep_text = serde_json::to_string(&rep)?;
        let _ = writeln!(
            csv,
            "\"{}\",{covariance:e},{:e},{},{}",
            rep_text.replace('"', "\"\""),
            kms.max_residual,
            period.map(|p| p.to_string()).unwrap_or_default(),
            periodicity.map(|p| format!("{p:e}")).unwrap_or_default()
        );
        out.push(json!({
            "rep": rep,
            "covariance_residual": covariance,
            "kms_residual": kms.max_residual,
            "kms_operators": kms.operators.len(),
            "kms_points": kms.per_point.len(),
            "period": period,
            "periodicity_residual": periodicity,
            "pass": ok,
        }));
    }
    Ok(Report::verdict(pass, json!({ "reps": out }), csv))
}

fn verify_tla(ctx: &mut Ctx) -> Result<Report> {
    let lambda = ctx.global.lambda.unwrap_or(0.5);
    ctx.param("resolved_lambda", lambda);
    let depth = ctx.depth_or(12);
    let start = depth.min(6);
    ctx.param("depths", [start, depth]);
    let reports = tla_sweep(lambda, start..=depth)?;
    let violations = monotonicity_violations(&reports);
    let (first, last) = (&reports[0], &reports[reports.len() - 1]);
    let mut shrink_failures = Vec::new();
    let shrink_checked = depth - start >= TLA_SHRINK_SPAN;
    if shrink_checked {
        for (k, row) in first.table.iter().enumerate() {
            for (l, &a) in row.iter().enumerate() {
                let b = last.table[k][l];
                if !(b <= a / 2.0 || b < TLA_FLOOR) {
                    shrink_failures.push((k, l));
                }
            }
        }
    }
    let pass = violations.is_empty() && shrink_failures.is_empty();
    let body = json!({
        "lambda": lambda,
        "reports": reports,
        "monotonicity_violations": violations,
        "shrink_checked": shrink_checked,
        "shrink_failures": shrink_failures,
    });
    Ok(Report::verdict(pass, body, defect_csv(&reports)))
}

fn barnett_csv(csv: &mut String, setup: &str, r: &BarnettReport) {
    for e in &r.entries {
        let _ = writeln!(csv, "{setup},\"{}\",{},{},{}", e.word, e.lhs, e.rhs, e.margin);
    }
}

fn verify_barnett(ctx: &mut Ctx) -> Result<Report> {
    let lambda = ctx.global.lambda.unwrap_or(0.5);
    ctx.param("resolved_lambda", lambda);
    let samples = ctx.samples_or(200);
    ctx.param("max_degree", BARNETT_DEGREE);
    let mut csv = String::from("setup,word,lhs,rhs,margin\n");
    let mut body = serde_json::Map::new();
    let mut pass = true;
    let mut min_margin = f64::INFINITY;
    for (name, setup) in [("tracial", BarnettSetup::tracial()?), ("omega_lambda", BarnettSetup::omega_lambda(lambda)?)] {
        let xs = random_polynomials(&setup, samples, BARNETT_DEGREE, ctx.global.seed);
        let r = barnett_check(&setup, &xs)?;
        pass &= r.summary.pass;
        min_margin = min_margin.min(r.summary.min_margin);
        barnett_csv(&mut csv, name, &r);
        body.insert(name.into(), serde_json::to_value(&r)?);
    }
    let unit_e = ef_consts(&BarnettSetup::tracial()?)?.e;
    body.insert("unit_norm_e".into(), json!(unit_e));
    body.insert("summary".into(), json!({ "min_margin": min_margin, "pass": pass }));
    Ok(Report::verdict(pass, Value::Object(body), csv))
}

fn matrix_model(ctx: &mut Ctx, family: Family, n: usize, order: usize, words: Option<Vec<String>>) -> Result<Report> {
    let samples = ctx.samples_or(50);
    let spec = EnsembleSpec::new(n, samples, ctx.global.seed, family)?;
    ctx.param("ensemble", spec);
    ctx.param("order", order);
    let m: MomentEstimates = mc_moments(&spec, order)?;
    let outliers = m.outliers(MC_STDERRS);
    let mut pass = outliers.is_empty();
    let mut csv = m.to_csv();
    let mut freeness: Option<MatrixFreenessReport> = None;
    if family == Family::GuePair {
        let words = words.unwrap_or_else(|| DEFAULT_WORDS.iter().map(|w| w.to_string()).collect());
        ctx.param("words", &words);
        let f = asymptotic_freeness_check(&spec, &words, &BandFixture::builtin()?)?;
        pass &= f.pass;
        csv.push_str("\nword,mean,stderr,band,pass\n");
        for w in &f.words {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                w.word,
                opt(w.mean),
                opt(w.stderr),
                opt(w.band),
                w.pass.map(|p| p.to_string()).unwrap_or_else(|| "inapplicable".into())
            );
        }
        freeness = Some(f);
    }
    let body = json!({ "moments": m, "outliers": outliers, "freeness": freeness });
    Ok(Report::verdict(pass, body, csv))
}

fn run(cli: Cli) -> Result<(Report, Value)> {
    let rep = match &cli.global.rep {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Error::MalformedRep(format!("cannot read {path}: {e}")))?;
            Some(parse_rep_spec(&text)?)
        }
        None => None,
    };
    let budget = Budget::from_env()?.with_max_dim(cli.global.max_dim);
    let mut ctx = Ctx { global: cli.global.clone(), budget, rep, params: serde_json::Map::new() };
    let (name, report) = match cli.command {
        Command::Classify => ("classify", classify(&mut ctx)?),
        Command::Moments { word } => ("moments", moments(&mut ctx, &word)?),
        Command::Verify { suite } => match suite {
            Suite::Semicircle => ("verify semicircle", verify_semicircle(&mut ctx)?),
            Suite::Freeness => ("verify freeness", verify_freeness(&mut ctx)?),
            Suite::Kms => ("verify kms", verify_kms(&mut ctx)?),
            Suite::Tla => ("verify tla", verify_tla(&mut ctx)?),
            Suite::Barnett => ("verify barnett", verify_barnett(&mut ctx)?),
        },
        Command::MatrixModel { family, n, order, words } => {
            ctx.param("family", family);
            ("matrix-model", matrix_model(&mut ctx, family, n, order, words)?)
        }
    };
    let config = json!({
        "command": name,
        "flags": ctx.global,
        "budget": { "max_bytes": ctx.budget.max_bytes, "max_dim": ctx.budget.max_dim },
        "resolved": ctx.params,
    });
    Ok((report, config))
}

fn emit(format: Format, report: Report, config: Value) -> Result<()> {
    let verdict = report.verdict.map(|p| if p { "PASS" } else { "FAIL" });
    let mut out = String::new();
    match format {
        Format::Json => {
            let mut obj = match report.body {
                Value::Object(m) => m,
                other => {
                    let mut m = serde_json::Map::new();
                    m.insert("result".into(), other);
                    m
                }
            };
            if let Some(v) = verdict {
                obj.insert("verdict".into(), json!(v));
            }
            obj.insert("config".into(), config);
            out = serde_json::to_string_pretty(&Value::Object(obj))?;
            out.push('\n');
        }
        Format::Csv => {
            let _ = writeln!(out, "# config: {}", serde_json::to_string(&config)?);
            if let Some(v) = verdict {
                let _ = writeln!(out, "# verdict: {v}");
            }
            out.push_str(&report.csv);
        }
    }
    // A closed pipe downstream is not an error worth reporting.
    let _ = std::io::stdout().write_all(out.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    let result = run(cli).and_then(|(report, config)| {
        let pass = report.verdict.unwrap_or(true);
        emit(format, report, config)?;
        Ok(pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let body = json!({ "error": { "code": e.code(), "message": e.to_string() } });
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&body).unwrap_or_default());
            eprintln!("awlab: {e}");
            ExitCode::from(2)
        }
    }
}
