//! `dremlab` command line: run a scenario to a CSV trace, check a trace,
//! list the embedded presets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dremlab::harness::{self, Check, CheckSettings, RunConfig};
use dremlab::linalg::SquareMatrix;
use dremlab::signals::{self, ScenarioSpec};
use dremlab::{Error, Law};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "dremlab",
    version,
    about = "Parameter identification with regularized DREM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario and write the trace as CSV.
    Run(RunArgs),
    /// Evaluate checks against a CSV trace.
    Check(CheckArgs),
    /// List the embedded scenarios, optionally exporting them as TOML.
    Presets {
        /// Directory to write `<name>.toml` files into.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Preset name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Comma-separated subset of gradient, drem, drem-regularized.
    #[arg(long, value_delimiter = ',', default_value = "gradient,drem,drem-regularized")]
    laws: Vec<String>,
    /// Initial estimate, comma-separated; zero when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta0: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tau_s: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_bar: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    /// Gradient gain `Γ = F·I`.
    #[arg(long = "Gamma")]
    gamma_matrix: Option<f64>,
    /// Fixed per-element DREM gains, comma-separated (normalised schedule otherwise).
    #[arg(long, value_delimiter = ',')]
    gamma_i: Option<Vec<f64>>,
    /// Integration steps between logged records.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
    /// `all`, a check name, or a comma-separated list of names.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0.4)]
    eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps_bar: f64,
    #[arg(long, default_value_t = 5.0)]
    gamma0: f64,
    /// Integration step of the run that produced the trace.
    #[arg(long, default_value_t = 1e-4)]
    tau_s: f64,
    #[arg(long, default_value_t = dremlab::regularization::ROW_TOL)]
    row_tol: f64,
    /// Ignore records before this time in the monotonicity check.
    #[arg(long, default_value_t = 0.0)]
    from: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Check(args) => check(args),
        Command::Presets { export } => presets(export.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Trace { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn load_scenario(arg: &str) -> Result<(ScenarioSpec, f64), Error> {
    if signals::PRESETS.contains(&arg) {
        let cfg = RunConfig::preset(arg)?;
        let gain = cfg.gradient_gain[(0, 0)];
        return Ok((cfg.scenario, gain));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Error::UnknownPreset(arg.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok((ScenarioSpec::from_toml(&text)?, 1.0))
}

fn build_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let (scenario, default_gain) = load_scenario(&args.scenario)?;
    let n = scenario.dim();
    let mut cfg = RunConfig::new(scenario, args.gamma_matrix.unwrap_or(default_gain));
    cfg.laws = args
        .laws
        .iter()
        .map(|s| s.parse::<Law>())
        .collect::<Result<_, _>>()?;
    if let Some(theta0) = &args.theta0 {
        cfg.theta0 = theta0.clone();
    }
    if let Some(g) = args.gamma_matrix {
        cfg.gradient_gain = SquareMatrix::identity(n).scaled(g);
    }
    cfg.drem_gains = args.gamma_i.clone();
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.tau_s, args.tau_s);
    set(&mut cfg.l, args.l);
    set(&mut cfg.eps, args.eps);
    set(&mut cfg.eps_bar, args.eps_bar);
    set(&mut cfg.gamma0, args.gamma0);
    set(&mut cfg.gamma1, args.gamma1);
    if let Some(stride) = args.stride {
        cfg.log_stride = stride;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let cfg = build_config(&args)?;
    log::info!("running `{}` for {} s", cfg.scenario.name, cfg.scenario.horizon);
    let trace = harness::run(&cfg)?;
    harness::emit_csv(&trace, &args.out)?;
    if trace.clamped_steps > 0 {
        log::warn!("no-overshoot guard engaged on {} step(s)", trace.clamped_steps);
    }
    println!("wrote {} records to {}", trace.records.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> Result<ExitCode, Error> {
    let checks = Check::suite(&args.suite)?;
    let settings = CheckSettings {
        eps: args.eps,
        eps_bar: args.eps_bar,
        gamma0: args.gamma0,
        tau_s: args.tau_s,
        row_tol: args.row_tol,
        monotonic_from: args.from,
    };
    let trace = harness::load_csv(&args.trace, settings)?;
    // The adjugate identity needs Φ, which the CSV does not carry.
    let checks: Vec<Check> = if args.suite == "all" {
        checks.into_iter().filter(|&c| c != Check::Adjugate).collect()
    } else {
        checks
    };
    let report = harness::acceptance(&trace, &checks)?;
    print!("{report}");
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

fn presets(export: Option<&Path>) -> Result<ExitCode, Error> {
    for name in signals::PRESETS {
        let spec = signals::preset(name)?;
        println!("{name}\tn={}\thorizon={}", spec.dim(), spec.horizon);
        if let Some(dir) = export {
            let path = dir.join(format!("{name}.toml"));
            std::fs::write(&path, spec.to_toml()).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
