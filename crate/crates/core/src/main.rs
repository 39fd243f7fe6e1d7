use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use backflow::config::RunConfig;
use backflow::current::default_n_tau;
use backflow::eigen::EigenMethod;
use backflow::fit::{trial_samples, FitMode};
use backflow::scan::write_scan_csv;
use backflow::{
    assemble, closed_form_flux, current_trace, eigen_scan, envelope_from_eigvec, fit_scan, match_eigenvector,
    maximize_backflow, solve_converged, solve_nonrel, solve_on_grid, BackflowError, Envelope, EpsilonParams,
    Family, Solution, TrialParams,
};

#[derive(Parser)]
#[command(name = "backflow", version, about = "Relativistic quantum backflow calculator")]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Converged most-negative eigenvalue at one ε.
    Eigen(EigenArgs),
    /// The same for the non-relativistic kernel.
    EigenNonrel(EigenArgs),
    /// Sweep ε and compare with the closed-form fit.
    Scan(ScanArgs),
    /// Probability current at the origin over one backflow window.
    Current(CurrentArgs),
    /// Fit an Airy or Bessel trial wavefunction.
    Fit(FitArgs),
    /// Closed-form backflow magnitude.
    Formula(FormulaArgs),
}

#[derive(Args, Default)]
struct SolverArgs {
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    eig_tol: Option<f64>,
    #[arg(long)]
    refine_tol: Option<f64>,
    #[arg(long)]
    h_min: Option<usize>,
    #[arg(long)]
    h_max: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// lanczos or shifted-power
    #[arg(long, value_parser = parse_method)]
    method: Option<EigenMethod>,
}

#[derive(Args, Default)]
struct FitGridArgs {
    /// Upper momentum of the fit grid.
    #[arg(long)]
    fit_q0: Option<f64>,
    /// Nodes of the fit grid.
    #[arg(long)]
    fit_n0: Option<usize>,
}

#[derive(Args, Default)]
struct SearchArgs {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_evals: Option<usize>,
    /// Unweighted least squares in match mode.
    #[arg(long)]
    plain_residual: bool,
}

#[derive(Args)]
struct EigenArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// JSON solution file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV dump of the final kernel matrix.
    #[arg(long)]
    matrix_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 0..)]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    with_fits: bool,
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Option<Vec<Family>>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: FitGridArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurrentArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_tau: Option<usize>,
    /// Use a trial wavefunction instead of the eigenvector.
    #[arg(long, value_parser = parse_family)]
    trial: Option<Family>,
    /// Six comma-separated trial coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: FitGridArgs,
    /// CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    /// maximize or match
    #[arg(long, value_parser = parse_mode)]
    mode: Option<FitMode>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Constrain a6 = 2/3.
    #[arg(long)]
    fix_a6: bool,
    /// Seed the first restarts with the reference Bessel vectors.
    #[arg(long)]
    warm_start: bool,
    /// Include the per-restart record.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    grid: FitGridArgs,
    #[arg(long)]
    eig_tol: Option<f64>,
    /// JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FormulaArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: BackflowError| e.to_string())
}

fn parse_mode(s: &str) -> Result<FitMode, String> {
    s.parse().map_err(|e: BackflowError| e.to_string())
}

fn parse_method(s: &str) -> Result<EigenMethod, String> {
    match s {
        "lanczos" => Ok(EigenMethod::Lanczos),
        "shifted-power" | "power" => Ok(EigenMethod::ShiftedPower),
        _ => Err(format!("unknown method '{s}'")),
    }
}

/// Usage errors exit with 2, numerical failures with 1.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<BackflowError> for Failure {
    fn from(e: BackflowError) -> Self {
        match e {
            BackflowError::Domain(m) => Failure::Usage(m),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(format!("i/o: {e}"))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl SolverArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let s = &mut cfg.solver;
        set(&mut s.q0, self.q0);
        set(&mut s.n0, self.n0);
        set(&mut s.eig_tol, self.eig_tol);
        set(&mut s.refine_tol, self.refine_tol);
        set(&mut s.h_min, self.h_min);
        set(&mut s.h_max, self.h_max);
        set(&mut s.max_iter, self.max_iter);
        set(&mut s.method, self.method);
    }
}

impl FitGridArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.fit_grid.q0, self.fit_q0);
        set(&mut cfg.fit_grid.n0, self.fit_n0);
    }
}

impl SearchArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.restarts, self.restarts);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.max_evals, self.max_evals);
        if self.plain_residual {
            cfg.weighted_residual = false;
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Ok(RunConfig::from_json(&text)?)
        }
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> io::Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::other)?;
    writeln!(out)?;
    out.flush()
}

fn summarize(sol: &Solution) {
    println!("epsilon      {:.16e}", sol.eps.epsilon());
    println!("lambda       {:.16e}", sol.lambda_limit);
    println!("lambda_grid  {:.16e}", sol.lambda);
    println!("h_final      {}", sol.h_final);
    println!("nodes        {}", sol.grid.len());
    println!("upper_limit  {:.16e}", sol.grid.upper_limit());
    println!("iterations   {}", sol.iterations);
    println!("residual     {:.3e}", sol.residual);
}

fn cmd_eigen(cfg: &RunConfig, nonrel: bool) -> Result<(), Failure> {
    let result = if nonrel {
        solve_nonrel(&cfg.solver)
    } else {
        solve_converged(cfg.relativistic_eps()?, &cfg.solver)
    };
    match result {
        Ok(sol) => {
            summarize(&sol);
            if let Some(p) = &cfg.out {
                write_json(Some(p), &sol)?;
            }
            if let Some(p) = &cfg.matrix_out {
                assemble(sol.eps, &sol.grid).write_csv(BufWriter::new(File::create(p)?))?;
            }
            Ok(())
        }
        Err(e) => {
            if let Some(p) = &cfg.out {
                let diag = serde_json::json!({
                    "epsilon": if nonrel { 0.0 } else { cfg.epsilon },
                    "error": e.to_string(),
                    "solver": cfg.solver,
                });
                write_json(Some(p), &diag)?;
            }
            Err(e.into())
        }
    }
}

fn cmd_scan(cfg: &RunConfig) -> Result<(), Failure> {
    let rows = if cfg.with_fits {
        fit_scan(&cfg.eps_list, &cfg.families, &cfg.solver, &cfg.fit_grid, &cfg.fit_config())?
    } else {
        eigen_scan(&cfg.eps_list, &cfg.solver)?
    };
    let mut out = open_out(cfg.out.as_deref())?;
    write_scan_csv(&rows, cfg.with_fits, &mut out)?;
    out.flush()?;
    let failed: Vec<String> = rows
        .iter()
        .flat_map(|r| r.errors.iter().map(move |e| format!("epsilon {}: {e}", r.epsilon)))
        .collect();
    for f in &failed {
        eprintln!("{f}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(format!("{} failure(s) during scan", failed.len())))
    }
}

fn cmd_current(cfg: &RunConfig) -> Result<(), Failure> {
    let eps = cfg.relativistic_eps()?;
    let n_tau = cfg.n_tau.unwrap_or_else(|| default_n_tau(eps));
    let env = match (cfg.trial, cfg.params) {
        (Some(family), Some(a)) => {
            let p = TrialParams::new(family, a, false)?;
            let grid = cfg.fit_grid.build()?;
            let km = assemble(eps, &grid);
            let samples = trial_samples(&p, &km)?;
            Envelope::from_real(&grid, &samples, eps)?
        }
        _ => envelope_from_eigvec(&solve_converged(eps, &cfg.solver)?)?,
    };
    let trace = current_trace(&env, eps, n_tau)?;
    eprintln!("delta {:.16e}", trace.delta);
    let mut out = open_out(cfg.out.as_deref())?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_fit(cfg: &RunConfig) -> Result<(), Failure> {
    let eps = cfg.relativistic_eps()?;
    let grid = cfg.fit_grid.build()?;
    let km = assemble(eps, &grid);
    let fit = cfg.fit_config();
    let result = match cfg.mode {
        FitMode::Maximize => maximize_backflow(cfg.family, &km, &fit)?,
        FitMode::Match => {
            let sol = solve_on_grid(eps, &grid, cfg.solver.eig_tol, cfg.solver.method)?;
            match_eigenvector(cfg.family, &sol, &km, &fit)?
        }
    };
    write_json(cfg.out.as_deref(), &result)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Eigen(a) => {
            set(&mut cfg.epsilon, a.epsilon);
            a.solver.apply(&mut cfg);
            set(&mut cfg.out, a.out.map(Some));
            set(&mut cfg.matrix_out, a.matrix_out.map(Some));
            cfg.validate()?;
            cmd_eigen(&cfg, false)
        }
        Command::EigenNonrel(a) => {
            if a.epsilon.is_some() {
                return Err(Failure::Usage("eigen-nonrel takes no --epsilon".into()));
            }
            a.solver.apply(&mut cfg);
            set(&mut cfg.out, a.out.map(Some));
            set(&mut cfg.matrix_out, a.matrix_out.map(Some));
            cfg.validate()?;
            cmd_eigen(&cfg, true)
        }
        Command::Scan(a) => {
            set(&mut cfg.eps_list, a.eps_list);
            set(&mut cfg.families, a.families);
            if a.with_fits {
                cfg.with_fits = true;
            }
            a.solver.apply(&mut cfg);
            a.grid.apply(&mut cfg);
            a.search.apply(&mut cfg);
            set(&mut cfg.out, a.out.map(Some));
            cfg.validate()?;
            cmd_scan(&cfg)
        }
        Command::Current(a) => {
            set(&mut cfg.epsilon, a.epsilon);
            set(&mut cfg.n_tau, a.n_tau.map(Some));
            set(&mut cfg.trial, a.trial.map(Some));
            if let Some(p) = a.params {
                let arr: [f64; 6] = p
                    .try_into()
                    .map_err(|_| Failure::Usage("--params needs six values".into()))?;
                cfg.params = Some(arr);
            }
            a.solver.apply(&mut cfg);
            a.grid.apply(&mut cfg);
            set(&mut cfg.out, a.out.map(Some));
            cfg.validate()?;
            cmd_current(&cfg)
        }
        Command::Fit(a) => {
            set(&mut cfg.family, a.family);
            set(&mut cfg.mode, a.mode);
            set(&mut cfg.epsilon, a.epsilon);
            if a.fix_a6 {
                cfg.a6_fixed = true;
            }
            if a.warm_start {
                cfg.warm_start = true;
            }
            if a.trace {
                cfg.trace = true;
            }
            a.search.apply(&mut cfg);
            a.grid.apply(&mut cfg);
            set(&mut cfg.solver.eig_tol, a.eig_tol);
            set(&mut cfg.out, a.out.map(Some));
            cfg.validate()?;
            cmd_fit(&cfg)
        }
        Command::Formula(a) => {
            set(&mut cfg.epsilon, a.epsilon);
            let eps = EpsilonParams::new(cfg.epsilon)?;
            println!("{:.16e}", closed_form_flux(eps));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
