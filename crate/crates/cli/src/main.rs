mod report;

use std::fmt;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rayon::prelude::*;
use sharpk_core::rng::child_seed;
use sharpk_core::{
    approx_count, approx_count_with, count_exact, generate, params_for, parse_dimacs_with_report,
    serialize_dimacs, CnfFormula, GeneratorMode, GeneratorSpec, McOptions, RasConfig, Strategy,
    BRUTE_FORCE_LIMIT,
};

use report::{csv_row, Instance, ParamsView, RunReport, CSV_HEADER, SCHEMA_VERSION};

/// Largest instance compared against an exact reference count unless
/// `--force` is given.
const REFERENCE_LIMIT: u32 = 24;

#[derive(Parser)]
#[command(
    name = "sharpk",
    version,
    about = "Approximate model counting for k-CNF formulas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count the models of a DIMACS formula (file or stdin).
    Count(CountArgs),
    /// Print a random k-CNF in DIMACS format.
    Gen(GenArgs),
    /// Compare strategies on random instances against exact counts.
    Bench(BenchArgs),
    /// Run built-in sanity checks.
    Selftest,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "structs")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SHARPK_THREADS", default_value_t = 1)]
    threads: usize,
    /// Cap on Monte Carlo samples per run; capped runs are flagged.
    #[arg(long)]
    budget: Option<u64>,
    /// Count formulas with at most this many free variables exactly.
    #[arg(long, default_value_t = sharpk_core::ras::DEFAULT_SMALL_N)]
    small_n: usize,
    /// Allow exact reference counts above 24 variables.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    file: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// Also compute an exact reference count.
    #[arg(long)]
    reference: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plant a hidden model so the formula is satisfiable.
    #[arg(long)]
    planted: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    n: u32,
    /// Clauses per instance; defaults to 3n.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "brute,thurley,pruned,clauses,structs"
    )]
    strategies: Vec<Strategy>,
    #[arg(long)]
    planted: bool,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FailureKind {
    Usage,
    Input,
    Guard,
}

/// An error with a dedicated exit code.
#[derive(Debug)]
struct Failure {
    kind: FailureKind,
    msg: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Failure {}

fn fail(kind: FailureKind, msg: impl Into<String>) -> anyhow::Error {
    Failure {
        kind,
        msg: msg.into(),
    }
    .into()
}

/// Maps library errors onto exit-code classes.
fn classify(e: sharpk_core::Error) -> anyhow::Error {
    use sharpk_core::Error as E;
    let kind = match &e {
        E::Parse { .. } | E::VarOutOfRange { .. } => FailureKind::Input,
        E::TooManyVars { .. } | E::UniverseTooLarge { .. } => FailureKind::Guard,
        E::InvalidParameter(_) | E::Unsupported { .. } => FailureKind::Usage,
        _ => return e.into(),
    };
    fail(kind, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Count(a) => count(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sharpk: {e:#}");
            match e.downcast_ref::<Failure>().map(|f| f.kind) {
                Some(FailureKind::Usage) => ExitCode::from(2),
                Some(FailureKind::Input) => ExitCode::from(3),
                Some(FailureKind::Guard) => ExitCode::from(4),
                None => ExitCode::FAILURE,
            }
        }
    }
}

fn config(run: &RunArgs, threads: usize) -> RasConfig {
    RasConfig {
        small_n: run.small_n,
        mc: McOptions {
            max_samples: run.budget,
            threads,
        },
        ..RasConfig::default()
    }
}

fn check_guards(phi: &CnfFormula, run: &RunArgs) -> Result<()> {
    if run.strategy == Strategy::BruteForce && phi.num_free_vars() > BRUTE_FORCE_LIMIT {
        return Err(fail(
            FailureKind::Guard,
            format!(
                "brute force refused for {} variables (limit {BRUTE_FORCE_LIMIT})",
                phi.num_free_vars()
            ),
        ));
    }
    Ok(())
}

fn reference_allowed(phi: &CnfFormula, run: &RunArgs) -> bool {
    phi.num_vars() <= REFERENCE_LIMIT || run.force
}

/// Runs one strategy on one formula and assembles its report.
fn run_one(
    phi: &CnfFormula,
    instance: Instance,
    run: &RunArgs,
    threads: usize,
    reference: Option<&BigUint>,
) -> Result<RunReport> {
    check_guards(phi, run)?;
    let start = Instant::now();
    let est = approx_count_with(
        phi,
        run.eps,
        run.delta,
        run.strategy,
        run.seed,
        &config(run, threads),
    )
    .map_err(classify)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let params = params_for(
        phi.max_clause_len().max(2),
        phi.num_free_vars(),
        run.strategy,
    )
    .ok()
    .map(|p| ParamsView::from(&p));
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        instance,
        strategy: run.strategy,
        eps: run.eps,
        delta: run.delta,
        seed: run.seed,
        threads,
        params,
        estimate: (&est).into(),
        reference: reference.map(BigUint::to_string),
        accurate: reference.map(|t| est.within(t, run.eps)),
        work: est.work,
        wall_time_ms,
    })
}

fn read_formula(file: Option<&PathBuf>) -> Result<(CnfFormula, Instance)> {
    let (text, source, path) = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                fail(
                    FailureKind::Input,
                    format!("cannot read {}: {e}", p.display()),
                )
            })?;
            (text, "file", Some(p.display().to_string()))
        }
        None => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| fail(FailureKind::Input, format!("cannot read stdin: {e}")))?;
            (text, "stdin", None)
        }
    };
    let (phi, parse) = parse_dimacs_with_report(&text).map_err(classify)?;
    if parse.clause_count_mismatch() {
        eprintln!(
            "sharpk: warning: header declares {} clauses, found {}",
            parse.declared_clauses, parse.parsed_clauses
        );
    }
    let instance = Instance {
        source: source.into(),
        path,
        generator: None,
        num_vars: phi.num_vars(),
        num_clauses: phi.num_clauses(),
        k: phi.max_clause_len(),
    };
    Ok((phi, instance))
}

fn count(args: CountArgs) -> Result<ExitCode> {
    let (phi, instance) = read_formula(args.file.as_ref())?;
    let reference = if args.reference {
        if !reference_allowed(&phi, &args.run) {
            return Err(fail(
                FailureKind::Guard,
                format!(
                    "exact reference refused for {} variables (limit {REFERENCE_LIMIT}); pass --force",
                    phi.num_vars()
                ),
            ));
        }
        Some(count_exact(&phi).value)
    } else {
        None
    };
    let report = run_one(
        &phi,
        instance,
        &args.run,
        args.run.threads.max(1),
        reference.as_ref(),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn gen_spec(n: u32, m: usize, k: usize, seed: u64, planted: bool) -> GeneratorSpec {
    GeneratorSpec {
        n,
        m,
        k,
        seed,
        mode: if planted {
            GeneratorMode::Planted
        } else {
            GeneratorMode::Uniform
        },
    }
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let spec = gen_spec(args.n, args.m, args.k, args.seed, args.planted);
    let phi = generate(&spec).map_err(classify)?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "c random {}-CNF n={} m={} seed={} mode={}",
        spec.k,
        spec.n,
        spec.m,
        spec.seed,
        if args.planted { "planted" } else { "uniform" }
    )?;
    out.write_all(serialize_dimacs(&phi).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    if args.n > REFERENCE_LIMIT && !args.run.force {
        return Err(fail(
            FailureKind::Guard,
            format!("bench compares against exact counts; n = {} exceeds {REFERENCE_LIMIT} without --force", args.n),
        ));
    }
    if args.strategies.is_empty() {
        return Err(fail(FailureKind::Usage, "no strategies given"));
    }
    let m = args.m.unwrap_or(3 * args.n as usize);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.run.threads.max(1))
        .build()
        .context("building the worker pool")?;

    let rows: Vec<Result<Vec<RunReport>>> = pool.install(|| {
        (0..args.trials)
            .into_par_iter()
            .map(|trial| {
                let spec = gen_spec(
                    args.n,
                    m,
                    args.k,
                    child_seed(args.run.seed, trial as u64),
                    args.planted,
                );
                let phi = generate(&spec).map_err(classify)?;
                let truth = count_exact(&phi).value;
                args.strategies
                    .iter()
                    .enumerate()
                    .map(|(i, &strategy)| {
                        let run = RunArgs {
                            strategy,
                            seed: child_seed(spec.seed, i as u64 + 1),
                            ..args.run.clone()
                        };
                        let instance = Instance {
                            source: "generated".into(),
                            path: None,
                            generator: Some(spec),
                            num_vars: phi.num_vars(),
                            num_clauses: phi.num_clauses(),
                            k: phi.max_clause_len(),
                        };
                        // each run stays single-threaded so it replays bit-exactly
                        run_one(&phi, instance, &run, 1, Some(&truth))
                    })
                    .collect()
            })
            .collect()
    });

    let mut out = io::stdout().lock();
    if args.csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    let mut tally: Vec<(usize, usize, f64)> = vec![(0, 0, 0.0); args.strategies.len()];
    for (trial, row) in rows.into_iter().enumerate() {
        for (i, report) in row?.iter().enumerate() {
            tally[i].0 += usize::from(report.accurate == Some(true));
            tally[i].1 += 1;
            tally[i].2 += report.wall_time_ms;
            if args.csv {
                writeln!(out, "{}", csv_row(trial, report))?;
            } else {
                writeln!(out, "{}", serde_json::to_string(report)?)?;
            }
        }
    }
    for (s, (good, total, ms)) in args.strategies.iter().zip(&tally) {
        eprintln!(
            "{s:>8}: {good}/{total} within eps, mean {:.2} ms",
            ms / (*total).max(1) as f64
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest() -> Result<ExitCode> {
    let implication_chain = CnfFormula::new(
        3,
        vec![
            sharpk_core::Clause::from_dimacs(&[-1, 2]).expect("clause"),
            sharpk_core::Clause::from_dimacs(&[-2, 3]).expect("clause"),
        ],
    )
    .map_err(classify)?;
    let mut checks: Vec<(String, bool)> = Strategy::ALL
        .iter()
        .map(|&s| {
            let ok = approx_count(&implication_chain, 0.1, 0.1, s, 1)
                .map(|e| e.as_integer() == Some(BigUint::from(4u32)))
                .unwrap_or(false);
            (format!("chain {s}"), ok)
        })
        .collect();
    let star = sharpk_core::struct_stats(
        &[
            sharpk_core::Clause::from_dimacs(&[1, 2, 3]).expect("clause"),
            sharpk_core::Clause::from_dimacs(&[1, 4, 5]).expect("clause"),
            sharpk_core::Clause::from_dimacs(&[2, 6, 7]).expect("clause"),
        ],
        &[1, 2],
    )
    .map_err(classify)?;
    checks.push(("star struct L = 89".into(), star.l == 89));
    let theta3 = sharpk_core::params::theta_k(3);
    checks.push(("theta3 = 1.5366".into(), (theta3 - 1.5366).abs() < 1e-4));
    let phi = generate(&gen_spec(16, 48, 3, 1, false)).map_err(classify)?;
    let truth = count_exact(&phi).value;
    let config = RasConfig {
        small_n: 0,
        ..RasConfig::default()
    };
    let ok = approx_count_with(&phi, 0.2, 0.05, Strategy::IndepStructs, 1, &config)
        .map(|e| e.within(&truth, 0.2))
        .unwrap_or(false);
    checks.push(("random 3-CNF structs".into(), ok));

    let passed = checks.iter().all(|(_, ok)| *ok);
    let json = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "passed": passed,
        "checks": checks
            .iter()
            .map(|(name, ok)| serde_json::json!({ "name": name, "passed": ok }))
            .collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
