//! `tsl`: exact toric exponential sums from the command line.
//!
//! Verbs: `analyze` (polytope geometry), `check` (family hypotheses),
//! `basis` (monomial basis of the fiber space), `fiber` (character sums,
//! L-polynomials, Newton polygons), `global` (truncated global
//! L-functions of Sym/∧ operations), and `cache gc`.
//!
//! Reports are deterministic JSON on stdout (or `--json-out`); volatile
//! run statistics go to stderr.  Exit codes: 0 success, 1 usage or input
//! error, 2 hypothesis failure, 3 theorem-violation witness, 4 resource
//! ceiling exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use tsl::cache::SumCache;
use tsl::cohomology::compute_basis;
use tsl::error::Error;
use tsl::finite_field::{closed_points, make_field, ClosedPoint, Domain, FieldSpec};
use tsl::hypotheses::check_hypotheses;
use tsl::lfunctions::{degree_bound_report, FiberLReport, OpSpec};
use tsl::problem::{load_problem, Problem};
use tsl::report::{
    basis_json, check_json, fiber_set_json, geometry_json, global_json, render, Manifest,
    RunStats,
};

#[derive(Parser)]
#[command(
    name = "tsl",
    version,
    about = "Exact toric exponential sums: geometry, hypotheses, bases, fiber and global L-functions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Polytope geometry of the family: facets, weights, case, rank
    Analyze(CommonArgs),
    /// Hypothesis checks the theorems require; exit 2 on any failure
    Check(CheckArgs),
    /// Monomial basis of the fiber space at one λ̄
    Basis(BasisArgs),
    /// Fiber character sums, L-polynomials, and Newton polygons
    Fiber(FiberArgs),
    /// Truncated global L-function of a Sym/∧ operation
    Global(GlobalArgs),
    /// Cache maintenance
    Cache(CacheArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem file (JSON)
    #[arg(long)]
    problem: PathBuf,
    /// Torus-size ceiling per character sum (overrides the problem file)
    #[arg(long)]
    ceiling: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Nondegeneracy search depth in extension degrees
    #[arg(long)]
    kmax: Option<u32>,
}

#[derive(Args)]
struct BasisArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fiber parameter: an integer or comma-separated 𝔽_p coordinates
    #[arg(long, default_value = "1")]
    lambda: String,
}

#[derive(Args)]
struct FiberArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fiber parameter as for basis, or "all" for every closed point
    #[arg(long)]
    lambda: String,
    /// With --lambda all: largest closed-point degree to include
    #[arg(long, default_value_t = 1)]
    max_degree: u32,
    /// Cache directory (overrides TSL_CACHE_DIR)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GlobalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Operation, e.g. "sym2" or "sym1*ext2" (overrides the problem file)
    #[arg(long)]
    op: Option<String>,
    /// Truncation degree (overrides the problem file)
    #[arg(long)]
    dmax: Option<u32>,
    /// Base of the Euler product: the torus or the affine line
    #[arg(long, value_enum, default_value_t = DomainArg::Gm)]
    domain: DomainArg,
    /// Cache directory (overrides TSL_CACHE_DIR)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DomainArg {
    Gm,
    A1,
}

impl DomainArg {
    fn domain(self) -> Domain {
        match self {
            DomainArg::Gm => Domain::Gm,
            DomainArg::A1 => Domain::A1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            DomainArg::Gm => "gm",
            DomainArg::A1 => "a1",
        }
    }
}

#[derive(Args)]
struct CacheArgs {
    #[command(subcommand)]
    cmd: CacheCmd,
}

#[derive(Subcommand)]
enum CacheCmd {
    /// Remove cache entries older than --max-age-days
    Gc {
        /// Cache directory (overrides TSL_CACHE_DIR)
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Age threshold in days; 0 removes everything
        #[arg(long, default_value_t = 30)]
        max_age_days: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors by default; 2 is reserved for
            // hypothesis failures here.
            let _ = e.print();
            return ExitCode::from(u8::from(!matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            )));
        }
    };
    let started = Instant::now();
    match run(cli, started) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SizeCeilingExceeded(..) | Error::EnumerationCeiling(..) => 4,
        Error::TheoremViolation(..)
        | Error::PolynomialityFailure { .. }
        | Error::CrossCheckMismatch(..)
        | Error::RankMismatch { .. } => 3,
        Error::NotFullDimensional { .. }
        | Error::NotQuasihomogeneous
        | Error::ExcludedCase
        | Error::MuInsideCone
        | Error::MuOnFacet(..)
        | Error::MuNotInterior(..)
        | Error::NotLowerOrder { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli, started: Instant) -> tsl::Result<ExitCode> {
    match cli.cmd {
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Check(args) => cmd_check(args),
        Cmd::Basis(args) => cmd_basis(args),
        Cmd::Fiber(args) => cmd_fiber(args, started),
        Cmd::Global(args) => cmd_global(args, started),
        Cmd::Cache(args) => cmd_cache(args),
    }
}

fn load(common: &CommonArgs) -> tsl::Result<Problem> {
    let text = std::fs::read_to_string(&common.problem)
        .map_err(|e| Error::Parse(format!("{}: {e}", common.problem.display())))?;
    let mut problem = load_problem(&text)?;
    if let Some(c) = common.ceiling {
        problem.ceiling = c;
    }
    Ok(problem)
}

fn emit(common: &CommonArgs, text: &str) -> tsl::Result<()> {
    match &common.json_out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::CacheIo(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_stats(cache: &SumCache, started: Instant) {
    let (hits, misses) = cache.stats();
    let stats = RunStats {
        wall_ms: started.elapsed().as_millis(),
        cache_hits: hits,
        cache_misses: misses,
    };
    eprintln!("{}", serde_json::to_string(&stats).expect("stats serialize"));
}

fn open_cache(dir: Option<&Path>) -> tsl::Result<SumCache> {
    match dir {
        Some(d) => SumCache::at(d),
        None => SumCache::from_env(),
    }
}

/// Runs the hypothesis checks and refuses to continue past a failure.
fn require_hypotheses(problem: &Problem, k_max: Option<u32>) -> tsl::Result<()> {
    let report = check_hypotheses(&problem.base, &problem.f, &problem.mu, k_max)?;
    if !report.all_pass() {
        let verdicts = [
            ("H(i)", &report.h1),
            ("H(ii)", &report.h2),
            ("H(iii)", &report.h3),
            ("H(iv)", &report.h4),
            ("H(v)", &report.h5),
        ];
        for (name, v) in verdicts {
            if let tsl::hypotheses::Verdict::Fail(reason) = v {
                return Err(Error::PreconditionFailed(format!("{name} fails: {reason}")));
            }
        }
        eprintln!("note: nondegeneracy search inconclusive at the given depth; continuing");
    }
    Ok(())
}

/// Parses a --lambda value: an integer (reduced mod p) or comma-separated
/// 𝔽_p coordinates of the representative in 𝔽_{p^{m·d}}.
fn parse_lambda(base: &FieldSpec, s: &str) -> tsl::Result<ClosedPoint> {
    let coords: Vec<i64> = s
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("--lambda: bad coordinate {part:?}")))
        })
        .collect::<tsl::Result<_>>()?;
    if coords.len() as u32 % base.m != 0 {
        return Err(Error::Parse(format!(
            "--lambda: {} coordinates do not fill extensions of F_{}^{}",
            coords.len(),
            base.p,
            base.m
        )));
    }
    let degree = coords.len() as u32 / base.m;
    let lf = make_field(base.p, base.m * degree)?;
    let reduced: Vec<u64> = coords
        .iter()
        .map(|&c| c.rem_euclid(base.p as i64) as u64)
        .collect();
    let mut rep = lf.element_from_coeffs(&reduced)?;
    if rep.is_zero() {
        return Err(Error::Parse(
            "--lambda: the fiber parameter must be a unit".into(),
        ));
    }
    let mut orbit = 1u32;
    let mut conj = lf.frobenius(&rep, base.m);
    while conj != rep {
        if conj.coeffs < rep.coeffs {
            rep = conj.clone();
        }
        conj = lf.frobenius(&conj, base.m);
        orbit += 1;
    }
    if orbit != degree {
        return Err(Error::Parse(format!(
            "--lambda: the element has degree {orbit} over the base field; \
             pass {} coordinates",
            orbit * base.m
        )));
    }
    Ok(ClosedPoint { degree, rep })
}

fn cmd_analyze(args: CommonArgs) -> tsl::Result<ExitCode> {
    let problem = load(&args)?;
    let ctx = problem.geometry()?;
    if !problem.is_pure() {
        problem.upsilon(&ctx)?;
    }
    let mut manifest = Manifest::new(&problem.input_sha256, "analyze");
    manifest.set("ceiling", problem.ceiling);
    emit(&args, &render(&manifest, &geometry_json(&problem.base, &ctx)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> tsl::Result<ExitCode> {
    let problem = load(&args.common)?;
    let k_max = args.kmax.or(problem.k_max);
    let report = check_hypotheses(&problem.base, &problem.f, &problem.mu, k_max)?;
    let mut manifest = Manifest::new(
        &problem.input_sha256,
        &match k_max {
            Some(k) => format!("check --kmax {k}"),
            None => "check".to_string(),
        },
    );
    manifest.set("ceiling", problem.ceiling);
    manifest.set("k_max", k_max.map_or("auto".to_string(), |k| k.to_string()));
    let failed = [&report.h1, &report.h2, &report.h3, &report.h4, &report.h5]
        .iter()
        .any(|v| matches!(v, tsl::hypotheses::Verdict::Fail(_)));
    emit(
        &args.common,
        &render(&manifest, &check_json(&problem.base, &problem.mu, &report)),
    )?;
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_basis(args: BasisArgs) -> tsl::Result<ExitCode> {
    let problem = load(&args.common)?;
    let ctx = problem.geometry()?;
    require_hypotheses(&problem, problem.k_max)?;
    let lambda = parse_lambda(&problem.base, &args.lambda)?;
    let lf = make_field(problem.base.p, problem.base.m * lambda.degree)?;
    let basis = compute_basis(&ctx, &problem.base, &problem.f, &lf, &lambda.rep, None)?;
    let mut manifest = Manifest::new(
        &problem.input_sha256,
        &format!("basis --lambda {}", args.lambda),
    );
    manifest.set("ceiling", problem.ceiling);
    manifest.set("lambda", &args.lambda);
    emit(&args.common, &render(&manifest, &basis_json(&basis)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fiber(args: FiberArgs, started: Instant) -> tsl::Result<ExitCode> {
    let problem = load(&args.common)?;
    let ctx = problem.geometry()?;
    require_hypotheses(&problem, problem.k_max)?;
    let cache = open_cache(args.cache_dir.as_deref())?;
    let basis = compute_basis(
        &ctx,
        &problem.base,
        &problem.f,
        &problem.base,
        &problem.base.one(),
        None,
    )?;
    let (lambdas, command) = if args.lambda == "all" {
        (
            closed_points(&problem.base, args.max_degree, Domain::Gm, problem.ceiling)?,
            format!("fiber --lambda all --max-degree {}", args.max_degree),
        )
    } else {
        (
            vec![parse_lambda(&problem.base, &args.lambda)?],
            format!("fiber --lambda {}", args.lambda),
        )
    };
    let mut reports: Vec<FiberLReport> = Vec::with_capacity(lambdas.len());
    for lambda in &lambdas {
        reports.push(problem.fiber_report(&ctx, &basis, lambda, &cache)?);
    }
    let mut manifest = Manifest::new(&problem.input_sha256, &command);
    manifest.set("ceiling", problem.ceiling);
    manifest.set("lambda", &args.lambda);
    if args.lambda == "all" {
        manifest.set("max_degree", args.max_degree);
    }
    let all_dominate = reports.iter().all(|r| r.dominates);
    emit(
        &args.common,
        &render(&manifest, &fiber_set_json(&problem.base, &reports)),
    )?;
    emit_stats(&cache, started);
    Ok(if all_dominate { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_global(args: GlobalArgs, started: Instant) -> tsl::Result<ExitCode> {
    let problem = load(&args.common)?;
    if !problem.is_pure() {
        return Err(Error::PreconditionFailed(
            "global truncation covers the plain one-parameter family; \
             drop deformation_exponent/lower_order"
                .into(),
        ));
    }
    let ctx = problem.geometry()?;
    require_hypotheses(&problem, problem.k_max)?;
    let op = match args.op.as_deref() {
        Some(s) => OpSpec::parse(s)?,
        None => problem.op.clone().ok_or_else(|| {
            Error::Parse("no operation given: pass --op or set \"op\" in the problem file".into())
        })?,
    };
    let d_max = args.dmax.unwrap_or(problem.d_max);
    let cache = open_cache(args.cache_dir.as_deref())?;
    let basis = compute_basis(
        &ctx,
        &problem.base,
        &problem.f,
        &problem.base,
        &problem.base.one(),
        None,
    )?;
    let truncation = tsl::lfunctions::global_l_truncated(
        &ctx,
        &problem.base,
        &problem.f,
        &basis,
        &op,
        args.domain.domain(),
        d_max,
        problem.ceiling,
        &cache,
    )?;
    let bounds = degree_bound_report(&ctx, &op)?;
    let mut manifest = Manifest::new(
        &problem.input_sha256,
        &format!(
            "global --op {} --dmax {d_max} --domain {}",
            op.label(),
            args.domain.label()
        ),
    );
    manifest.set("ceiling", problem.ceiling);
    manifest.set("op", op.label());
    manifest.set("d_max", d_max);
    manifest.set("domain", args.domain.label());
    emit(
        &args.common,
        &render(&manifest, &global_json(&problem.base, &truncation, &bounds)),
    )?;
    emit_stats(&cache, started);
    Ok(ExitCode::SUCCESS)
}

fn cmd_cache(args: CacheArgs) -> tsl::Result<ExitCode> {
    match args.cmd {
        CacheCmd::Gc {
            cache_dir,
            max_age_days,
        } => {
            let cache = open_cache(cache_dir.as_deref())?;
            if !cache.is_enabled() {
                return Err(Error::CacheIo(
                    "no cache directory: pass --cache-dir or set TSL_CACHE_DIR".into(),
                ));
            }
            let report = cache.gc(Duration::from_secs(max_age_days * 24 * 3600))?;
            println!(
                "{}",
                serde_json::json!({ "removed": report.removed, "kept": report.kept })
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
