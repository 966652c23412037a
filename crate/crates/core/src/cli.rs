//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{self, BoundReport, Comparison, ReportOptions, TheoremId, Verdict};
use crate::chain::{Chain, ChainClass};
use crate::error::{Error, Result};
use crate::flows::{self, Flow};
use crate::generators::{self, GeneratorSpec};
use crate::mixing::{self, MixingResult, Start};
use crate::spectral::{self, MAX_CONDUCTANCE_STATES};

#[derive(Debug, Parser)]
#[command(name = "mcompare", version, about = "Mixing times, spectral quantities and comparison bounds for finite Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a chain (or the two-state example flow) as JSON.
    Gen(GenArgs),
    /// Classify a chain and print its spectral and conductance data.
    Analyze {
        chain: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Exact mixing time from a state or from the worst state.
    Mix {
        chain: PathBuf,
        /// State label or index, or `all`.
        #[arg(long)]
        from: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        continuous: bool,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate every bound for a chain against a comparison chain.
    Compare(CompareArgs),
    /// Run the built-in example checks.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    TwoState,
    Dhn,
    UniformWalk,
    DirectedCycle,
    RandomReversible,
    LazyOf,
    /// The explicit four-path flow from the two-state chain to the uniform
    /// walk on two states.
    TwoStateFlow,
}

#[derive(Debug, Args)]
struct GenArgs {
    kind: Kind,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inner kind for `lazy_of`.
    #[arg(long)]
    of: Option<Kind>,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    base: PathBuf,
    target: PathBuf,
    #[arg(long, conflicts_with = "auto_flow")]
    flow: Option<PathBuf>,
    /// Route along lexicographically first shortest paths.
    #[arg(long)]
    auto_flow: bool,
    /// With `--auto-flow`, route along shortest odd-length paths.
    #[arg(long, requires = "auto_flow")]
    odd: bool,
    #[arg(long)]
    from: String,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    json: bool,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code: 0 on success, 1 on a failed verdict, 2 on usage
/// or input errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_output(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run_cli`] with explicit output streams.
pub fn run_with_output<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Failed) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

enum Outcome {
    Success,
    Failed,
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Gen(args) => gen(args, out),
        Command::Analyze { chain, json } => analyze(&chain, json, out),
        Command::Mix {
            chain,
            from,
            eps,
            continuous,
            json,
        } => mix(&chain, &from, eps, continuous, json, out),
        Command::Compare(args) => compare(args, out),
        Command::Selftest { json } => selftest_command(json, out),
    }
}

fn require<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T> {
    value.ok_or_else(|| Error::BadParams(format!("{kind} requires --{flag}")))
}

fn spec_for(kind: Kind, args: &GenArgs) -> Result<GeneratorSpec> {
    Ok(match kind {
        Kind::TwoState => GeneratorSpec::TwoState {
            delta: require(args.delta, "delta", "two_state")?,
        },
        Kind::Dhn => GeneratorSpec::Dhn {
            n: require(args.n, "n", "dhn")?,
        },
        Kind::UniformWalk => GeneratorSpec::UniformWalk {
            n: require(args.big_n.or(args.n), "N", "uniform_walk")?,
        },
        Kind::DirectedCycle => GeneratorSpec::DirectedCycle {
            k: require(args.k, "k", "directed_cycle")?,
        },
        Kind::RandomReversible => GeneratorSpec::RandomReversible {
            n: require(args.big_n.or(args.n), "N", "random_reversible")?,
            seed: require(args.seed, "seed", "random_reversible")?,
        },
        Kind::LazyOf => {
            let inner = require(args.of, "of", "lazy_of")?;
            if matches!(inner, Kind::LazyOf | Kind::TwoStateFlow) {
                return Err(Error::BadParams(format!("--of cannot be {inner:?}")));
            }
            GeneratorSpec::LazyOf { of: Box::new(spec_for(inner, args)?) }
        }
        Kind::TwoStateFlow => {
            return Err(Error::BadParams("two_state_flow generates a flow, not a chain".into()))
        }
    })
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn gen(args: GenArgs, out: &mut dyn Write) -> Result<Outcome> {
    if args.kind == Kind::TwoStateFlow {
        let delta = require(args.delta, "delta", "two_state_flow")?;
        let flow = generators::two_state_flow(delta)?;
        let text = serde_json::to_string_pretty(&flow.to_file())?;
        emit(&text, args.output.as_deref(), out)?;
        return Ok(Outcome::Success);
    }
    let spec = spec_for(args.kind, &args)?;
    let chain = generators::generate(&spec)?;
    let mut metadata = json!({ "generator": spec });
    if let Some(seed) = spec.seed() {
        metadata["seed"] = json!(seed);
    }
    let text = chain.to_json(Some(metadata))?;
    emit(&text, args.output.as_deref(), out)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct Analysis {
    name: String,
    states: Vec<String>,
    n: usize,
    classification: ChainClass,
    stationary: Vec<f64>,
    eigenvalues: Option<Vec<f64>>,
    beta_max: Option<f64>,
    lambda1: f64,
    lambda_n1: f64,
    conductance: Option<f64>,
    conductance_asymmetric: Option<f64>,
    conductance_set: Option<Vec<String>>,
    tau_half_e: Option<u64>,
    continuous_tau_half_e: f64,
    lambda1_reversal_product: f64,
}

fn analysis(chain: &Chain) -> Result<Analysis> {
    let class = chain.classify();
    if !class.irreducible {
        return Err(Error::NotIrreducible);
    }
    let spectrum = if class.reversible {
        Some(spectral::symmetric_spectrum(chain)?)
    } else {
        None
    };
    let lambdas = spectral::lambda_constants(chain)?;
    let cond = if chain.n() <= MAX_CONDUCTANCE_STATES {
        Some(spectral::conductance(chain)?)
    } else {
        None
    };
    let tau_half_e = if class.ergodic() {
        Some(mixing::discrete_mixing_time_all(chain, bounds::half_e())?.time.as_f64() as u64)
    } else {
        None
    };
    Ok(Analysis {
        name: chain.name().to_string(),
        states: chain.labels().to_vec(),
        n: chain.n(),
        classification: class,
        stationary: chain.pi().to_vec(),
        beta_max: spectrum.as_ref().map(|s| s.beta_max),
        eigenvalues: spectrum.map(|s| s.betas),
        lambda1: lambdas.lambda1,
        lambda_n1: lambdas.lambda_n1,
        conductance: cond.as_ref().map(|c| c.phi),
        conductance_asymmetric: cond.as_ref().map(|c| c.phi_asym),
        conductance_set: cond.map(|c| c.argmin.iter().map(|&i| chain.labels()[i].clone()).collect()),
        tau_half_e,
        continuous_tau_half_e: mixing::continuous_mixing_time(chain, Start::All, bounds::half_e())?
            .time
            .as_f64(),
        lambda1_reversal_product: bounds::product_gap(chain)?,
    })
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

fn analyze(path: &Path, json: bool, out: &mut dyn Write) -> Result<Outcome> {
    let chain = Chain::read(path)?;
    let a = analysis(&chain)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&a)?)?;
        return Ok(Outcome::Success);
    }
    let c = &a.classification;
    writeln!(out, "chain: {} ({} states)", a.name, a.n)?;
    writeln!(
        out,
        "irreducible: {}  period: {}  ergodic: {}  reversible: {}",
        c.irreducible,
        c.period,
        c.ergodic(),
        c.reversible
    )?;
    writeln!(out, "stationary: {:?}", a.stationary)?;
    if let Some(values) = &a.eigenvalues {
        writeln!(out, "eigenvalues: {values:?}")?;
        writeln!(out, "beta_max: {}", fmt_opt(&a.beta_max))?;
    }
    writeln!(out, "lambda_1: {}  lambda_(N-1): {}", a.lambda1, a.lambda_n1)?;
    writeln!(out, "lambda_1(R(M)M): {}", a.lambda1_reversal_product)?;
    writeln!(
        out,
        "conductance: {}  asymmetric: {}  set: {}",
        fmt_opt(&a.conductance),
        fmt_opt(&a.conductance_asymmetric),
        a.conductance_set.as_ref().map_or("n/a".to_string(), |s| s.join(","))
    )?;
    match a.tau_half_e {
        Some(t) => writeln!(out, "tau(M, 1/2e): {t}")?,
        None => writeln!(out, "tau(M, 1/2e): undefined (period {})", c.period)?,
    }
    writeln!(out, "continuous tau(M, 1/2e): {}", a.continuous_tau_half_e)?;
    Ok(Outcome::Success)
}

fn parse_start(chain: &Chain, from: &str) -> Result<Start> {
    if from == "all" {
        Ok(Start::All)
    } else {
        Ok(Start::State(chain.resolve_state(from)?))
    }
}

fn mix(path: &Path, from: &str, eps: f64, continuous: bool, json: bool, out: &mut dyn Write) -> Result<Outcome> {
    let chain = Chain::read(path)?;
    let start = parse_start(&chain, from)?;
    let result: MixingResult = mixing::mixing_time(&chain, start, eps, continuous)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
    } else {
        writeln!(out, "t = {}", result.time.as_f64())?;
        writeln!(out, "tv = {}", result.achieved_tv)?;
    }
    Ok(Outcome::Success)
}

fn render_report(report: &BoundReport, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "chain: {}  target: {}  from: {}  eps: {}  delta: {}",
        report.chain,
        report.target.as_deref().unwrap_or("-"),
        report.from,
        report.epsilon,
        report.delta
    )?;
    if let Some(a) = report.exact.congestion {
        writeln!(out, "congestion A(f): {a}  odd: {}", fmt_opt(&report.exact.flow_odd))?;
    }
    for e in &report.entries {
        let status = if !e.applicable {
            "n/a"
        } else if e.holds {
            "holds"
        } else {
            "VIOLATED"
        };
        let dir = match e.direction {
            bounds::Direction::Lower => "<=",
            bounds::Direction::Upper => ">=",
        };
        let detail = if e.applicable {
            format!("bound {} {dir} {} = {}", fmt_opt(&e.bound), e.quantity, fmt_opt(&e.exact))
        } else {
            format!("{}: {}", e.quantity, e.reason.as_deref().unwrap_or(""))
        };
        writeln!(out, "{:<9} {:<8} {detail}", e.theorem.label(), status)?;
    }
    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    };
    writeln!(out, "verdict: {verdict}")?;
    Ok(())
}

fn compare(args: CompareArgs, out: &mut dyn Write) -> Result<Outcome> {
    let base = Chain::read(&args.base)?;
    let target = Chain::read(&args.target)?;
    let flow = match (&args.flow, args.auto_flow) {
        (Some(path), _) => Flow::read(path, base.clone(), target.clone())?,
        (None, true) => flows::build_canonical_flow(&base, &target, args.odd)?,
        (None, false) => {
            return Err(Error::BadParams("compare requires --flow or --auto-flow".into()))
        }
    };
    let opts = ReportOptions {
        from: base.resolve_state(&args.from)?,
        eps: args.eps,
        delta: args.delta.unwrap_or_else(bounds::half_e),
        sweep: args.sweep,
    };
    if !(opts.delta > 0.0 && opts.delta < 0.5) {
        return Err(Error::BadDelta(opts.delta));
    }
    let report = bounds::full_report(&base, Some(Comparison { target: &target, flow: &flow }), opts)?;
    if args.json {
        writeln!(out, "{}", report.to_json()?)?;
    } else {
        render_report(&report, out)?;
    }
    Ok(match report.verdict {
        Verdict::Pass => Outcome::Success,
        Verdict::Fail => Outcome::Failed,
    })
}

/// Outcome of one built-in example check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// The checks behind `selftest`: the worked two-state, lifted-walk and
/// directed-cycle examples plus bound reports on a few seeded chains.
pub fn selftest() -> Vec<CheckResult> {
    let mut results = Vec::new();

    results.push(check("two-state lower bound tau_a(M, 1/4) >= floor(1/(2 delta))", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for delta in [0.5, 0.25, 0.1, 0.05] {
            let chain = generators::two_state(delta)?;
            let t = mixing::discrete_mixing_time(&chain, 0, 0.25)?.time.as_f64() as u64;
            let floor = (1.0 / (2.0 * delta)).floor() as u64;
            ok &= t >= floor;
            detail.push(format!("delta={delta}: {t} >= {floor}"));
        }
        Ok((ok, detail.join("; ")))
    }));

    results.push(check("gen/mix round trip, delta = 0.1 gives t >= 5", || {
        let chain = generators::two_state(0.1)?;
        let reread = Chain::from_json(&chain.to_json(None)?)?;
        let t = mixing::discrete_mixing_time(&reread, reread.resolve_state("a")?, 0.25)?
            .time
            .as_f64();
        Ok((t >= 5.0 && reread.p() == chain.p(), format!("t = {t}")))
    }));

    results.push(check("two-state flow congestion 5/(2(1-delta))", || {
        let delta = 0.25;
        let flow = generators::two_state_flow(delta)?;
        let a = flows::edge_congestion(&flow)?.max;
        let expected = 5.0 / (2.0 * (1.0 - delta));
        let v = flows::validate_flow(&flow)?;
        Ok(((a - expected).abs() <= 1e-12 && v.valid && !v.odd, format!("A(f) = {a}")))
    }));

    results.push(check("bounded congestion, unbounded ratio", || {
        let delta = 0.005;
        let base = generators::two_state(delta)?;
        let target = generators::uniform_walk(2)?;
        let flow = generators::two_state_flow(delta)?;
        let report = bounds::full_report(
            &base,
            Some(Comparison { target: &target, flow: &flow }),
            ReportOptions { eps: 0.25, ..ReportOptions::default() },
        )?;
        let ratio = report.exact.comparison_ratio.unwrap_or(0.0);
        let a = report.exact.congestion.unwrap_or(f64::INFINITY);
        Ok((ratio > 10.0 && a <= 5.0, format!("ratio = {ratio}, A(f) = {a}")))
    }));

    results.push(check("lazy two-state chain mixes within 17 steps", || {
        let lazy = generators::two_state(0.25)?.lazy();
        let t = mixing::discrete_mixing_time_all(&lazy, 0.25)?.time.as_f64();
        Ok((t <= 17.0, format!("tau = {t}")))
    }));

    results.push(check("lifted walk variance (n^2+2)/12", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for n in [4usize, 8] {
            let chain = generators::dhn(n)?;
            let phi: Vec<f64> = chain
                .labels()
                .iter()
                .map(|l| l.parse::<f64>().map(f64::abs))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::UnknownState(e.to_string()))?;
            let var = spectral::variance(chain.pi(), &phi)?;
            let expected = ((n * n) as f64 + 2.0) / 12.0;
            ok &= (var - expected).abs() <= 1e-10;
            detail.push(format!("n={n}: {var}"));
        }
        Ok((ok, detail.join("; ")))
    }));

    results.push(check("directed 3-cycle: period 3, continuization only", || {
        let chain = generators::directed_cycle(3)?;
        let class = chain.classify();
        let entries = bounds::nonreversible_bounds(&chain, 0, 0.25)?;
        let t23 = entries.iter().find(|e| e.theorem == TheoremId::T23);
        let t22 = entries.iter().find(|e| e.theorem == TheoremId::T22);
        let ok = class.period == 3
            && t23.is_some_and(|e| !e.applicable)
            && t22.is_some_and(|e| e.applicable && e.exact.is_some_and(f64::is_finite));
        Ok((ok, format!("period = {}", class.period)))
    }));

    results.push(check("bound reports on seeded random chains", || {
        let mut violations = 0;
        for seed in 0..4 {
            let (base, target) = generators::random_reversible_pair(5, seed)?;
            let flow = flows::build_canonical_flow(&base, &target, true)?;
            let report = bounds::full_report(
                &base,
                Some(Comparison { target: &target, flow: &flow }),
                ReportOptions::default(),
            )?;
            violations += report.violations().count();
            let nr = generators::random_nonreversible(5, seed)?;
            violations += bounds::full_report(&nr, None, ReportOptions::default())?
                .violations()
                .count();
        }
        Ok((violations == 0, format!("{violations} violations")))
    }));

    results
}

fn selftest_command(json: bool, out: &mut dyn Write) -> Result<Outcome> {
    let results = selftest();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&results)?)?;
    } else {
        for r in &results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{status} {}: {}", r.name, r.detail)?;
        }
    }
    Ok(if results.iter().all(|r| r.passed) {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}
