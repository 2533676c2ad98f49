//! `opca`: batch front-end for the PCA-with-outliers solvers.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use opca_core::arrangement::{self, ArrangementError, SolverConfig};
use opca_core::hardness::{self, HardnessError};
use opca_core::io::{
    format_cell_dump, parse_csv_matrix, parse_graph, parse_solution, HardnessMeta, InstanceFile, InstanceMeta,
    ResultRecord, SolutionRecord,
};
use opca_core::model::Instance;
use opca_core::oracle::{binomial, verify, BruteForce, OracleError};

#[derive(Parser)]
#[command(name = "opca", version, about = "PCA with outliers: exact and cell-sampling solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance given as CSV (one row per line) or JSON.
    Solve(SolveArgs),
    /// Build a gap instance from a Multicolored Clique graph file.
    GenHard(GenHardArgs),
    /// Check a solution file against an instance.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact2d,
    Sample,
    Brute,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Exact2d => "exact2d",
            Mode::Sample => "sample",
            Mode::Brute => "brute",
        }
    }
}

#[derive(clap::Args)]
struct InstanceArgs {
    /// Instance file; `.json` is read as JSON, anything else as CSV.
    input: PathBuf,
    /// Target rank (required for CSV, overrides the JSON value).
    #[arg(long)]
    rank: Option<usize>,
    /// Outlier budget (required for CSV, overrides the JSON value).
    #[arg(long)]
    outliers: Option<usize>,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "exact2d")]
    mode: Mode,
    /// Number of random frames in sample mode.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one JSON line per candidate cell.
    #[arg(long)]
    dump_cells: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(clap::Args)]
struct GenHardArgs {
    /// Graph file: header `r n`, then one `s i t j` line per edge.
    graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated clique selection (one 1-based index per color).
    #[arg(long, value_delimiter = ',')]
    certificate: Option<Vec<usize>>,
    /// Where to write the certificate solution.
    #[arg(long, requires = "certificate")]
    certificate_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Solution file (a result record or a bare solution object).
    solution: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

/// Exit code and message for a failed command.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn limit(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<ArrangementError> for Failure {
    fn from(e: ArrangementError) -> Self {
        match e {
            ArrangementError::DimensionUnsupported { .. } => Failure::limit(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => Failure::limit(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<HardnessError> for Failure {
    fn from(e: HardnessError) -> Self {
        match e {
            HardnessError::NegativeBudget { .. } => Failure::limit(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: 1, message: format!("{}: {e}", path.display()) })
}

fn load_instance(args: &InstanceArgs) -> Result<Instance, Failure> {
    let text = read(&args.input)?;
    let is_json = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (data, rank, outliers) = if is_json {
        let file = InstanceFile::parse(&text).map_err(|e| Failure::input(e.to_string()))?;
        let inst = file.to_instance().map_err(|e| Failure::input(e.to_string()))?;
        (inst.data().clone(), args.rank.unwrap_or(file.r), args.outliers.unwrap_or(file.k))
    } else {
        let data = parse_csv_matrix(&text).map_err(|e| Failure::input(e.to_string()))?;
        let rank = args.rank.ok_or_else(|| Failure::input("--rank is required for CSV input"))?;
        let outliers = args.outliers.ok_or_else(|| Failure::input("--outliers is required for CSV input"))?;
        (data, rank, outliers)
    };
    Instance::new(data, rank, outliers).map_err(|e| Failure::input(e.to_string()))
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build()
        .map_err(|e| Failure::input(e.to_string()))?;
    let start = Instant::now();
    let (solution, candidates, distinct, report) = pool.install(|| -> Result<_, Failure> {
        Ok(match args.mode {
            Mode::Brute => {
                let sol = BruteForce::from_env().run(&inst)?;
                let count = binomial(inst.n(), inst.outliers()).min(usize::MAX as u128) as usize;
                (sol, count, count, None)
            }
            Mode::Exact2d | Mode::Sample => {
                let cfg = match args.mode {
                    Mode::Sample => SolverConfig::random_sample(args.budget, args.seed),
                    _ => SolverConfig::exact_2d(),
                };
                let rep = arrangement::solve(&inst, &cfg)?;
                (rep.best.clone(), rep.candidates, rep.distinct_subsets, Some(rep))
            }
        })
    })?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &args.dump_cells {
        match &report {
            Some(rep) => write(path, &format_cell_dump(rep))?,
            None => return Err(Failure::input("--dump-cells is not available in brute mode")),
        }
    }
    let record = ResultRecord::new(args.mode.name(), &solution, candidates, distinct, elapsed_ms);
    match &args.out {
        Some(path) => write(path, &record.to_json())?,
        None => print!("{}", record.to_json()),
    }
    Ok(())
}

fn cmd_gen_hard(args: GenHardArgs) -> Result<(), Failure> {
    let graph = parse_graph(&read(&args.graph)?).map_err(|e| Failure::input(e.to_string()))?;
    let bundle = hardness::build_matrix(&graph, args.omega)?;
    let meta = HardnessMeta::from_bundle(&bundle);
    let file = InstanceFile::from_instance(&bundle.instance, InstanceMeta { hardness: Some(meta) });
    write(&args.out, &file.to_json())?;
    eprintln!(
        "a={} c={} k={} D={} D'={} matrix {}x{}",
        bundle.a,
        bundle.c,
        bundle.k(),
        bundle.d_bound,
        bundle.d_prime,
        bundle.instance.n(),
        bundle.instance.d()
    );
    if let Some(selection) = &args.certificate {
        let cert = hardness::build_certificate(&graph, selection, args.omega)?;
        let json = serde_json::to_string_pretty(&SolutionRecord::from_solution(&cert.to_solution()))
            .expect("serializable")
            + "\n";
        match &args.certificate_out {
            Some(path) => write(path, &json)?,
            None => print!("{json}"),
        }
        eprintln!("certificate cost {} (D = {})", cert.exact_cost, bundle.d_bound);
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let sol = parse_solution(&read(&args.solution)?, inst.d()).map_err(|e| Failure::input(e.to_string()))?;
    let report = verify(&inst, &sol, args.tol);
    println!("feasible: {}", report.feasible);
    println!("reported_cost: {}", sol.cost);
    println!("recomputed_cost: {}", report.recomputed_cost);
    for f in &report.failures {
        println!("failed {f}");
    }
    if report.feasible {
        Ok(())
    } else {
        Err(Failure { code: 1, message: format!("{} check(s) failed", report.failures.len()) })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::GenHard(a) => cmd_gen_hard(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
