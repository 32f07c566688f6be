use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use approj::baselines::{block_jacobi_solve, gmres_solve, BlockJacobiConfig, GmresConfig};
use approj::linalg::{mm, spmv};
use approj::problems::{Func1D, ProblemKind, ProblemSpec, SolutionKind};
use approj::solvers::{apap_solve, pap_solve, ApVersion};
use approj::{AnyMatrix, Error, MatrixLike, SolveReport, SolverConfig, Termination};
use approj_bench::{init_thread_pool, BenchOptions, Experiment, RunRecord, Scale, SolverSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 2;
const EXIT_BREAKDOWN: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "approj", version, about = "Accumulated projection solvers: generate problems, solve, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a test matrix, its manufactured solution and right-hand side
    /// as Matrix Market files <out>.mtx, <out>.x.mtx and <out>.b.mtx.
    Gen(GenArgs),
    /// Solve A x = b read from Matrix Market files.
    Solve(SolveArgs),
    /// Run a comparison experiment and print it as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Tridiag,
    Poisson,
    Hilbert,
}

#[derive(Clone, Copy, ValueEnum)]
enum Func {
    Parabolic,
    Sine,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Order of the tridiagonal or Hilbert matrix.
    #[arg(long, required_if_eq_any([("kind", "tridiag"), ("kind", "hilbert")]))]
    n: Option<usize>,
    /// Poisson grid points in x.
    #[arg(long, required_if_eq("kind", "poisson"))]
    nx: Option<usize>,
    /// Poisson grid points in y.
    #[arg(long, required_if_eq("kind", "poisson"))]
    ny: Option<usize>,
    /// Sub-, main and super-diagonal of the tridiagonal matrix.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    di: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    up: f64,
    /// Manufactured solution of the tridiagonal problem.
    #[arg(long, value_enum, default_value = "parabolic")]
    func: Func,
    /// Output path prefix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverName {
    Pap,
    Apap,
    Jacobi,
    Gmres,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApVersionArg {
    V1,
    V2,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side vector file.
    #[arg(long, conflicts_with = "manufactured", required_unless_present = "manufactured")]
    rhs: Option<PathBuf>,
    /// Use b = A x for a known x: the --solution file, or all ones.
    #[arg(long)]
    manufactured: bool,
    /// Exact solution file; enables error tracking.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: SolverName,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    block_size: usize,
    /// Neighbouring AP blocks share half their rows.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    overlap: bool,
    /// APAP inner loop length.
    #[arg(long = "M", default_value_t = 60)]
    m: usize,
    /// APAP snapshot steps, comma separated (default 10, 20, ..., M).
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<usize>>,
    /// GMRES restart length.
    #[arg(long, default_value_t = 8)]
    restart: usize,
    /// Outer iterations (PAP steps, APAP cycles, Jacobi sweeps, GMRES cycles).
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    /// AP sweeps per projection.
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long, value_enum, default_value = "v2")]
    ap_version: ApVersionArg,
    /// Block Jacobi relaxation weight.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Write the run record as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Table1,
    Table2,
    Table3,
    Poisson,
    Asym,
    Hilbert,
}

impl From<Table> for Experiment {
    fn from(t: Table) -> Self {
        match t {
            Table::Table1 => Experiment::Table1,
            Table::Table2 => Experiment::Table2,
            Table::Table3 => Experiment::Table3,
            Table::Poisson => Experiment::Poisson,
            Table::Asym => Experiment::Asym,
            Table::Hilbert => Experiment::Hilbert,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    table: Table,
    /// small, desk, full, or a factor applied to the desk sizes.
    #[arg(long, default_value = "desk")]
    scale: Scale,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run the rows concurrently (BENCH_THREADS caps the threads).
    #[arg(long)]
    parallel: bool,
    /// AP sweeps per projection for the APAP runs.
    #[arg(long)]
    sweeps: Option<usize>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => gen(&args),
        Command::Solve(args) => solve(&args),
        Command::Bench(args) => bench(&args),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let func = match args.func {
        Func::Parabolic => Func1D::Parabolic,
        Func::Sine => Func1D::Sine,
    };
    let spec = match args.kind {
        Kind::Tridiag => ProblemSpec::tridiag(args.lo, args.di, args.up, args.n.unwrap_or(0), func),
        Kind::Hilbert => ProblemSpec::hilbert(args.n.unwrap_or(0)),
        Kind::Poisson => ProblemSpec::poisson(args.nx.unwrap_or(0), args.ny.unwrap_or(0)),
    };
    let p = spec.build()?;
    let files = [".mtx", ".x.mtx", ".b.mtx"].map(|s| with_suffix(&args.out, s));
    mm::write_matrix(&files[0], &p.a)?;
    mm::write_vector(&files[1], &p.x_exact)?;
    mm::write_vector(&files[2], &p.b)?;
    println!(
        "wrote {} ({}x{}, {} nonzeros), {}, {}",
        files[0].display(),
        p.a.nrows(),
        p.a.ncols(),
        p.a.nnz(),
        files[1].display(),
        files[2].display()
    );
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Failure::usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let a: AnyMatrix = mm::read_matrix(&args.matrix)?;
    let exact = args.solution.as_ref().map(mm::read_vector).transpose()?;
    let (b, exact) = match &args.rhs {
        Some(path) => (mm::read_vector(path)?, exact),
        None => {
            let x = exact.unwrap_or_else(|| vec![1.0; a.ncols()]);
            (spmv(&a, &x)?, Some(x))
        }
    };
    let delta = args.delta.clone().unwrap_or_else(|| (1..=args.m / 10).map(|k| 10 * k).collect());
    let delta = if delta.is_empty() { vec![args.m] } else { delta };
    let cfg = SolverConfig {
        tol: args.tol,
        max_outer: args.max_outer,
        block_size: args.block_size,
        overlapped: args.overlap,
        ap_version: match args.ap_version {
            ApVersionArg::V1 => ApVersion::V1,
            ApVersionArg::V2 => ApVersion::V2,
        },
        inner_m: args.m,
        delta,
        sweeps_per_projection: args.sweeps,
        ..SolverConfig::default()
    };
    let solver = match args.solver {
        SolverName::Pap => SolverSpec::Pap(cfg),
        SolverName::Apap => SolverSpec::Apap(cfg),
        SolverName::Jacobi => SolverSpec::Jacobi(BlockJacobiConfig {
            block_size: args.block_size,
            omega: args.omega,
            max_iters: args.max_outer,
            tol: args.tol,
        }),
        SolverName::Gmres => {
            SolverSpec::Gmres(GmresConfig { restart_m: args.restart, max_outer: args.max_outer, tol: args.tol })
        }
    };
    let x = exact.as_deref();
    let report: SolveReport = match &solver {
        SolverSpec::Pap(c) => pap_solve(&a, &b, c, x)?,
        SolverSpec::Apap(c) => apap_solve(&a, &b, c, x)?,
        SolverSpec::Jacobi(c) => block_jacobi_solve(&a, &b, c, x)?,
        SolverSpec::Gmres(c) => gmres_solve(&a, &b, c, x)?,
    };
    let err =
        report.error_history.as_ref().and_then(|h| h.last()).map(|e| format!(" rel_error={e:.3e}")).unwrap_or_default();
    println!(
        "{}: {} outer={} inner={} sweeps={} rel_residual={:.3e}{} time={:.3}s",
        solver.name(),
        report.termination,
        report.outer_iters,
        report.inner_iters_total,
        report.sweeps_total,
        report.true_residual_history.last().copied().unwrap_or_else(|| report.final_residual()),
        err,
        report.wall_time
    );
    let termination = report.termination.clone();
    if let Some(path) = &args.json {
        let problem = ProblemSpec {
            kind: ProblemKind::MatrixMarket { path: args.matrix.clone() },
            solution: exact.clone().map_or(SolutionKind::Unknown, SolutionKind::Custom),
        };
        let record = RunRecord::new(problem, solver, report);
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &record).map_err(|e| Failure::usage(e.to_string()))?;
        w.flush()?;
    }
    match termination {
        Termination::Converged => Ok(()),
        Termination::MaxIters => Err(Failure { code: EXIT_NOT_CONVERGED, message: "did not converge".into() }),
        Termination::Breakdown(r) => Err(Failure { code: EXIT_BREAKDOWN, message: format!("breakdown: {r}") }),
    }
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.sweeps == Some(0) {
        return Err(Failure::usage("--sweeps must be at least 1"));
    }
    init_thread_pool().map_err(Failure::usage)?;
    let opts = BenchOptions { scale: args.scale, parallel: args.parallel, sweeps: args.sweeps };
    let exp = Experiment::from(args.table);
    let result = match &args.csv {
        Some(path) => exp.run_csv(&opts, BufWriter::new(File::create(path)?)),
        None => exp.run_csv(&opts, io::stdout().lock()),
    };
    result.map_err(|e| Failure { code: 1, message: e.to_string() })
}
