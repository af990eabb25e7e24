//! `gw-harmonic`: compute, bound and verify harmonic moments of positive
//! Galton–Watson processes.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or input
//! error, 3 numerical failure.

mod table;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gw_harmonic::bernoulli::{self, Boundary};
use gw_harmonic::distributions::OffspringLaw;
use gw_harmonic::process::{self, Estimator, Mechanism};
use gw_harmonic::verify::{self, Budget, DEFAULT_SEED, SUITES};
use gw_harmonic::{gcm, Error};

use table::{Cell, Table};

#[derive(Parser)]
#[command(name = "gw-harmonic", version, about = "Harmonic moments of positive Galton-Watson processes")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Harmonic moments E_k(1/Z_n^r) for n = 0..N of a mechanism.
    Harmonic(HarmonicArgs),
    /// The reference family g_{c,m}.
    #[command(subcommand)]
    Gcm(GcmCommand),
    /// Comparison constants of an offspring law.
    Constants {
        /// Law as inline JSON, e.g. '{"kind":"bernoulli12","x":0.5}', or a path to a JSON file.
        #[arg(long)]
        law: String,
        /// Initial population used for the rate r_k.
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// Brackets of the limits B_k(x) in the two-point case.
    #[command(subcommand)]
    Bernoulli(BernoulliCommand),
    /// Run verification suites; prints a JSON report.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, value_enum, default_value_t = BudgetArg::Fast)]
        budget: BudgetArg,
    },
}

#[derive(Args)]
struct HarmonicArgs {
    /// Mechanism JSON file.
    #[arg(long)]
    mechanism: PathBuf,
    /// Initial population Z_0.
    #[arg(long)]
    k: u64,
    /// Last generation.
    #[arg(long)]
    n: usize,
    /// Power of 1/Z_n.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    method: MethodArg,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BudgetArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Coarse,
    Refined,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Coarse => Boundary::Coarse,
            BoundaryArg::Refined => Boundary::Refined,
        }
    }
}

#[derive(Subcommand)]
enum GcmCommand {
    /// Factorial, inverse shifted and limit moments for r = 0..R.
    Moments {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 3)]
        r_max: u32,
    },
    /// G(u, m) = ∫₀¹ t^{u-1}/(1+(m-1)t) dt on a grid of (u, m).
    Gfun {
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<f64>,
    },
    /// Growth of m·E_k(1/Z) in m when k <= c.
    Diverge {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        k: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0, 1e3, 1e4])]
        m: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum BernoulliCommand {
    /// Lower and upper brackets of B_1(x), ..., B_n(x).
    Bk {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Refined)]
        boundary: BoundaryArg,
    },
    /// Location and bracket of the minimum of B(x) = x B_1(x).
    Bstar {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.005)]
        tol_x: f64,
    },
    /// The constants c_k(x) for k = 1..kmax.
    Ck {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        kmax: u64,
    },
    /// Brackets of B(x) on the grid x = i/(grid+1), i = 1..grid.
    Curve {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 99)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Refined)]
        boundary: BoundaryArg,
    },
    /// Experiment on whether B_k decreases in x: compares brackets at
    /// consecutive grid points.
    Monotone {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 99)]
        grid: usize,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        /// Print every comparison, not only the unresolved ones and violations.
        #[arg(long)]
        all: bool,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. }
            | Error::InvalidLaw(_)
            | Error::Precondition(_)
            | Error::HorizonExceeded { .. }
            | Error::UnknownSuite(_) => 2,
            Error::Unsupported { .. }
            | Error::Degenerate
            | Error::ToleranceNotMet { .. }
            | Error::BracketFailure { .. }
            | Error::SupportTooLarge { .. } => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

enum Output {
    Table(Table),
    Json(Value),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((output, code)) => {
            let text = match (output, cli.format) {
                (Output::Table(t), Format::Csv) => t.to_csv(),
                (Output::Table(t), Format::Json) => pretty(&t.to_json()),
                (Output::Json(v), _) => pretty(&v),
            };
            if let Err(e) = emit(cli.output.as_ref(), &text) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn emit(path: Option<&PathBuf>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn run(cli: &Cli) -> Result<(Output, u8), Failure> {
    let table = |t| Ok((Output::Table(t), 0));
    match &cli.command {
        Command::Harmonic(args) => table(harmonic(args, cli.seed)?),
        Command::Gcm(cmd) => table(gcm_command(cmd)?),
        Command::Constants { law, k } => table(constants(law, *k)?),
        Command::Bernoulli(cmd) => table(bernoulli_command(cmd)?),
        Command::Verify { suite, budget } => verify_command(suite, *budget, cli.seed),
    }
}

fn harmonic(args: &HarmonicArgs, seed: u64) -> Result<Table, Failure> {
    let text = fs::read_to_string(&args.mechanism)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.mechanism.display())))?;
    let mech: Mechanism = serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid mechanism in {}: {e}", args.mechanism.display())))?;
    let est = match args.method {
        MethodArg::Exact => Estimator::Quadrature,
        MethodArg::Mc => Estimator::MonteCarlo { samples: args.samples, seed },
    };
    let rows = process::moment_sequence(&mech, args.k, args.n, args.r, est)?;
    let mut t = Table::new(&["n", "M_n", "raw_moment", "normalized", "error"]);
    for m in rows {
        t.push(vec![m.n.into(), m.cumulative_mean.into(), m.value.into(), m.normalized().into(), m.normalized_error().into()]);
    }
    Ok(t)
}

fn gcm_command(cmd: &GcmCommand) -> Result<Table, Failure> {
    match cmd {
        GcmCommand::Moments { c, m, k, r_max } => {
            gcm::GcmLaw::new(*c, *m)?;
            let mut t = Table::new(&["r", "factorial_moment", "inverse_shifted_moment", "w_limit_moment"]);
            for r in 0..=*r_max {
                let inverse = if r == 0 { Some(1.0) } else { gcm::inverse_shifted_moment(*c, *m, *k, r).ok() };
                let w = if r == 0 { Some(1.0) } else { gcm::w_limit_moment(*c, *k, r as f64).ok() };
                t.push(vec![(r as u64).into(), gcm::factorial_moment(*c, *m, *k, r).into(), inverse.into(), w.into()]);
            }
            Ok(t)
        }
        GcmCommand::Gfun { u, m } => {
            let mut t = Table::new(&["u", "m", "g", "g_incomplete_beta", "m_times_g"]);
            for &ui in u {
                for &mi in m {
                    let g = gcm::g_function(ui, mi)?;
                    let beta = if ui < 1.0 && mi > 1.0 { Some(gcm::g_function_incomplete_beta(ui, mi)?) } else { None };
                    t.push(vec![ui.into(), mi.into(), g.into(), beta.into(), (mi * g).into()]);
                }
            }
            Ok(t)
        }
        GcmCommand::Diverge { c, k, m } => {
            let p = gcm::divergence_profile(*c, *k, m)?;
            let mut t = Table::new(&["m", "normalized", "scaled", "scale_bound"]);
            for i in 0..p.m.len() {
                t.push(vec![p.m[i].into(), p.normalized[i].into(), p.scaled[i].into(), p.scale_bound.into()]);
            }
            Ok(t)
        }
    }
}

fn parse_law(arg: &str) -> Result<OffspringLaw, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| usage(format!("cannot read law file {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid law: {e}")))
}

const CONSTANTS_GRID: usize = 2000;

fn constants(arg: &str, k: u64) -> Result<Table, Failure> {
    let law = parse_law(arg)?;
    if k == 0 {
        return Err(usage("k must be >= 1"));
    }
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |name: &str, v: Cell| t.push(vec![name.into(), v]);
    row("kind", law.kind().into());
    row("mean", law.mean().into());
    row("variance", law.variance().into());
    row("p1", law.p1().into());
    row("a_upper", law.a_upper().ok().into());
    row("a_lower", law.a_lower().ok().into());
    // Grid semi-decisions; available for every law, closed form or not.
    row("a_upper_grid", law.a_upper_numeric(CONSTANTS_GRID).ok().into());
    row("a_lower_grid", law.a_lower_numeric(CONSTANTS_GRID).ok().into());
    row("schroder_gamma", law.schroder_gamma().ok().into());
    row("variance_ratio", law.variance_ratio().ok().into());
    let rate = process::rate_constant(&law, k).ok();
    row("rate_k", rate.map(|r| r.value).into());
    row("rate_degenerate", rate.map(|r| r.degenerate).into());
    Ok(t)
}

fn bernoulli_command(cmd: &BernoulliCommand) -> Result<Table, Failure> {
    match cmd {
        BernoulliCommand::Bk { x, n, boundary } => {
            let s = bernoulli::sandwich(*x, *n, (*boundary).into())?;
            Ok(sandwich_table(&[s]))
        }
        BernoulliCommand::Bstar { n, tol_x } => {
            let b = bernoulli::find_bstar(*n, *tol_x)?;
            let mut t = Table::new(&["x_star", "b_lower", "b_upper", "n", "boundary"]);
            t.push(vec![b.x_star.into(), b.b_lower.into(), b.b_upper.into(), b.n.into(), "refined".into()]);
            Ok(t)
        }
        BernoulliCommand::Ck { x, kmax } => {
            if *kmax == 0 {
                return Err(usage("kmax must be >= 1"));
            }
            let mut t = Table::new(&["x", "k", "c_k", "lower_limit", "upper_limit", "characterization_residual"]);
            for k in 1..=*kmax {
                let r = bernoulli::ck_solve(*x, k)?;
                t.push(vec![
                    r.x.into(),
                    r.k.into(),
                    r.c_k.into(),
                    (1.0 - x).powi(2).into(),
                    (1.0 - x).into(),
                    r.characterization_residual.into(),
                ]);
            }
            Ok(t)
        }
        BernoulliCommand::Curve { n, grid, boundary } => {
            let xs = grid_points(*grid)?;
            let curve = bernoulli::b_curve(*n, &xs, (*boundary).into())?;
            let mut t = Table::new(&["x", "b_lower", "b_upper", "identity_holds", "boundary", "n"]);
            let b: Boundary = (*boundary).into();
            for p in curve {
                t.push(vec![p.x.into(), p.b_lower.into(), p.b_upper.into(), p.identity_holds.into(), b.as_str().into(), (*n).into()]);
            }
            Ok(t)
        }
        BernoulliCommand::Monotone { n, grid, kmax, all } => {
            let xs = grid_points(*grid)?;
            let checks = bernoulli::monotonicity_experiment(*n, &xs, *kmax, Boundary::Refined)?;
            let mut t = Table::new(&["k", "x_left", "x_right", "status"]);
            for c in checks {
                let status = match c.status {
                    bernoulli::MonotoneStatus::Decreasing => "decreasing",
                    bernoulli::MonotoneStatus::Violation => "violation",
                    bernoulli::MonotoneStatus::Unresolved => "unresolved",
                };
                if *all || status != "decreasing" {
                    t.push(vec![c.k.into(), c.x_left.into(), c.x_right.into(), status.into()]);
                }
            }
            Ok(t)
        }
    }
}

fn grid_points(count: usize) -> Result<Vec<f64>, Failure> {
    if count == 0 {
        return Err(usage("grid must have at least one point"));
    }
    Ok((1..=count).map(|i| i as f64 / (count + 1) as f64).collect())
}

fn sandwich_table(solved: &[bernoulli::BkSandwich]) -> Table {
    let mut t = Table::new(&["x", "k", "b_lower", "b_upper", "boundary", "n"]);
    for s in solved {
        for r in s.rows() {
            t.push(vec![r.x.into(), r.k.into(), r.b_lower.into(), r.b_upper.into(), r.boundary.as_str().into(), r.n.into()]);
        }
    }
    t
}

fn verify_command(suite: &str, budget: BudgetArg, seed: u64) -> Result<(Output, u8), Failure> {
    let budget = match budget {
        BudgetArg::Fast => Budget::Fast,
        BudgetArg::Full => Budget::Full,
    };
    let reports = if suite == "all" {
        verify::run_all(budget, seed)?
    } else if SUITES.contains(&suite) {
        vec![verify::run_suite_seeded(suite, budget, seed)?]
    } else {
        return Err(usage(format!("unknown suite `{suite}`; expected one of: all, {}", SUITES.join(", "))));
    };
    let overall = reports.iter().all(|r| r.overall);
    let report = json!({
        "budget": budget.to_string(),
        "seed": seed,
        "overall": overall,
        "suites": reports,
    });
    Ok((Output::Json(report), if overall { 0 } else { 1 }))
}
