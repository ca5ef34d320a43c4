use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mgcycles::bench::{self, ExperimentConfig, OutputFormat};
use mgcycles::cycle::{stationary_solve, BoundPolicy, CycleKind, CycleSpec, Multigrid, SolveOptions};
use mgcycles::hierarchy::{AggregationScheme, Hierarchy, HierarchyConfig};
use mgcycles::poly::{self, ThresholdFamily};
use mgcycles::problems::{assemble, rhs_for, true_solution, Example, ProblemSpec};
use mgcycles::{io, InitialStep, SpectralBounds};

#[derive(Parser)]
#[command(name = "mgcycles", version, about = "Multigrid cycles with momentum-accelerated coarse solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a model problem and write A (Matrix Market), b and the true solution.
    Assemble {
        #[arg(long, default_value = "poisson")]
        example: Example,
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve one configuration and print the report.
    Solve(SolveArgs),
    /// Run a suite of configurations.
    Bench(BenchArgs),
    /// Error-polynomial curves as CSV.
    Poly {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "fixed:0.1,1")]
        bounds: BoundPolicy,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-grid convergence thresholds of the H- and N-cycles.
    Theory {
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 7)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SetupArgs {
    /// `matching`, `greedy` or `neighborhood`.
    #[arg(long, default_value = "matching")]
    aggregation: AggregationScheme,
    #[arg(long, default_value_t = mgcycles::hierarchy::DEFAULT_THETA)]
    theta: f64,
    #[arg(long, default_value_t = mgcycles::hierarchy::DEFAULT_COARSEST_SIZE)]
    coarsest_size: usize,
    #[arg(long, default_value_t = mgcycles::hierarchy::DEFAULT_MAX_LEVELS)]
    max_levels: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "poisson")]
    example: Example,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value = "n")]
    cycle: CycleKind,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// `estimate` or `fixed:<min>,<max>`.
    #[arg(long, default_value = "fixed:0,1")]
    bounds: BoundPolicy,
    /// First inner step of the momentum methods: `sd`, `poly` or `bb`.
    #[arg(long, default_value = "sd")]
    init: InitialStep,
    /// Solve exactly instead of iterating when the next level is the coarsest.
    #[arg(long)]
    exact_coarsest: bool,
    #[command(flatten)]
    setup: SetupArgs,
    #[arg(long, default_value_t = mgcycles::cycle::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = mgcycles::cycle::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the relative residual of every iteration.
    #[arg(long)]
    history: bool,
    /// Write the solution vector to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Config file with `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated examples.
    #[arg(long)]
    example: Option<String>,
    /// Comma-separated mesh parameters.
    #[arg(long)]
    m: Option<String>,
    /// Cycle list (`kind[:k[:bounds]]` separated by `;`) or `standard`.
    #[arg(long)]
    cycle: Option<String>,
    #[arg(long)]
    aggregation: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    coarsest_size: Option<usize>,
    #[arg(long)]
    max_levels: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    exact_coarsest: bool,
    #[arg(long, default_value = "markdown")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_assemble(example: Example, m: usize, out: &Path) -> Result<()> {
    let a = assemble(&ProblemSpec::new(example, m)?)?;
    let x = true_solution(a.n_rows());
    let b = rhs_for(&a, &x)?;
    fs::create_dir_all(out)?;
    let stem = format!("{example}_m{m}");
    let file = |suffix: &str| -> Result<std::io::BufWriter<fs::File>> {
        let path = out.join(format!("{stem}{suffix}"));
        Ok(std::io::BufWriter::new(
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };
    io::write_matrix_market(&a, file(".mtx")?)?;
    io::write_vector(&b, file("_b.txt")?)?;
    io::write_vector(&x, file("_x.txt")?)?;
    println!("{stem}: {} unknowns, {} nonzeros", a.n_rows(), a.nnz());
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let a = assemble(&ProblemSpec::new(args.example, args.m)?)?;
    let x_true = true_solution(a.n_rows());
    let b = rhs_for(&a, &x_true)?;
    let config = HierarchyConfig {
        scheme: args.setup.aggregation,
        theta: args.setup.theta,
        coarsest_size: args.setup.coarsest_size,
        max_levels: args.setup.max_levels,
    };
    let hierarchy = Hierarchy::build(a.clone(), &config)?;
    let spec = match args.cycle {
        CycleKind::TwoGrid => CycleSpec::two_grid(),
        kind => CycleSpec::new(kind, args.k, args.bounds)?
            .with_init(args.init)
            .with_exact_coarsest(args.exact_coarsest),
    };
    let mg = Multigrid::with_estimation(&hierarchy, spec, mgcycles::spectral::DEFAULT_LANCZOS_STEPS, args.seed)?;
    let bounds: Option<&[SpectralBounds]> = spec.kind.uses_bounds().then(|| mg.level_bounds());
    print!("{}", hierarchy.summary_csv(bounds));
    let options = SolveOptions {
        tol: args.tol,
        max_iters: args.max_iters,
    };
    let (x, report) = stationary_solve(&a, &mg, &b, options)?;
    if args.history {
        for (i, r) in report.residual_history.iter().enumerate() {
            println!("{i} {r:.6e}");
        }
    }
    let err = x
        .iter()
        .zip(&x_true)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "cycle={} k={} bounds={} status={} iterations={} factor={:.6} max_error={:.3e}",
        spec.kind, spec.k, spec.bounds, report.status, report.iterations, report.avg_factor, err
    );
    if let Some(msg) = &report.failure {
        println!("failure: {msg}");
    }
    if let Some(path) = &args.out {
        io::write_vector(&x, std::io::BufWriter::new(fs::File::create(path)?))?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::parse(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        None => ExperimentConfig::default(),
    };
    let overrides: [(&str, Option<String>); 11] = [
        ("aggregation", args.aggregation.clone()),
        ("examples", args.example.clone()),
        ("m", args.m.clone()),
        ("cycles", args.cycle.clone()),
        ("theta", args.theta.map(|v| v.to_string())),
        ("coarsest_size", args.coarsest_size.map(|v| v.to_string())),
        ("max_levels", args.max_levels.map(|v| v.to_string())),
        ("tol", args.tol.map(|v| v.to_string())),
        ("max_iters", args.max_iters.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("exact_coarsest", args.exact_coarsest.then(|| "true".to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    let rows = bench::run_suite(&config)?;
    for row in &rows {
        if let bench::RowStatus::Failed(msg) = &row.status {
            eprintln!(
                "warning: {} m={} {} failed: {msg}",
                row.example,
                row.m,
                bench::format_cycle(&row.cycle)
            );
        }
    }
    write_output(&bench::emit(&rows, args.format), args.out.as_deref())
}

fn cmd_poly(k: usize, bounds: BoundPolicy, step: f64, out: Option<&Path>) -> Result<()> {
    let BoundPolicy::Fixed(bounds) = bounds else {
        bail!("poly needs fixed bounds (fixed:<min>,<max>)");
    };
    let grid = poly::uniform_grid(0.0, bounds.lambda_max, step)?;
    write_output(&poly::curves_csv(k, bounds, &grid)?, out)
}

fn cmd_theory(k_min: usize, k_max: usize, out: Option<&Path>) -> Result<()> {
    let mut text = String::from("family,k,delta,delta_tg\n");
    for family in [
        ThresholdFamily::HeavyBall,
        ThresholdFamily::Nesterov,
        ThresholdFamily::NesterovSqrt,
    ] {
        for k in k_min.max(2)..=k_max {
            let r = poly::solve_threshold(family, k)?;
            text.push_str(&format!("{family},{k},{:.6},{:.6}\n", r.delta, r.delta_tg));
        }
    }
    write_output(&text, out)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Assemble { example, m, out } => cmd_assemble(*example, *m, out),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Poly { k, bounds, step, out } => cmd_poly(*k, *bounds, *step, out.as_deref()),
        Command::Theory { k_min, k_max, out } => cmd_theory(*k_min, *k_max, out.as_deref()),
    }
}
