//! Command-line front end: evaluate functionals of one density at one flow
//! time, sweep curves over a time lattice, verify the inequality suite,
//! and list the density catalog.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infoflow::density::parse::{parse_density, write_grid_csv};
use infoflow::error::Error;
use infoflow::functionals::Flow;
use infoflow::numerics::fmt_f64;
use infoflow::report::{
    catalog_listing, default_verify_config, run_sweep, run_verify, LatticeSpec, OutputFormat,
    OutputSpec, Spacing, SweepConfig,
};
use infoflow::Params;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "infoflow", version, about = "Information functionals of log-concave densities along the heat flow, with inequality verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct NumericArgs {
    /// Differencing step for flow derivatives.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Grid size.
    #[arg(long, default_value_t = 4096)]
    m: usize,
    /// Mass allowed outside the truncation window.
    #[arg(long = "tail-eps", default_value_t = 1e-12)]
    tail_eps: f64,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    #[arg(long = "t-start", default_value_t = 0.1)]
    t_start: f64,
    #[arg(long = "t-end", default_value_t = 2.0)]
    t_end: f64,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// linear or log spacing.
    #[arg(long, default_value = "linear")]
    spacing: String,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate H, N, I, I_tilde, J, K of one density at one flow time.
    Eval {
        /// Density spec (family:key=val,... | grid:file= | product: | mix:).
        spec: String,
        /// Flow time (variance of added Gaussian noise).
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        numeric: NumericArgs,
        /// Output format: text, json or csv.
        #[arg(long, default_value = "text")]
        format: String,
        /// Write the evolved density as a two-column CSV (x,logf).
        #[arg(long = "dump-grid")]
        dump_grid: Option<PathBuf>,
    },
    /// Sweep functional curves over a time lattice and write CSV/JSON files.
    Sweep {
        /// JSON config matching the SweepConfig schema; flags override nothing when set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Density specs (repeatable).
        #[arg(long = "spec")]
        specs: Vec<String>,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        numeric: NumericArgs,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the inequality verification suite and write reports.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Density specs (repeatable; defaults to the five-family suite plus
        /// a mixture probe).
        #[arg(long = "spec")]
        specs: Vec<String>,
        /// Comma-separated check names (defaults to all).
        #[arg(long)]
        checks: Option<String>,
        /// Run log-concave-only checks on non-log-concave probes as data.
        #[arg(long)]
        explore: bool,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        numeric: NumericArgs,
        /// csv or json.
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the analytic family catalog with parameter constraints.
    Families,
}

fn parse_spacing(s: &str) -> Result<Spacing, Error> {
    match s {
        "linear" => Ok(Spacing::Linear),
        "log" => Ok(Spacing::Log),
        other => Err(Error::Config(format!("spacing must be linear or log, got `{other}`"))),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, Error> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(Error::Config(format!("format must be csv or json, got `{other}`"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn load_or_build_config(
    config: Option<&PathBuf>,
    specs: &[String],
    lattice: &LatticeArgs,
    numeric: &NumericArgs,
    format: &str,
    out: &std::path::Path,
    checks: Option<&str>,
    explore: bool,
) -> Result<SweepConfig, Error> {
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)?;
        let cfg: SweepConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return Ok(cfg);
    }
    let mut cfg = default_verify_config();
    if !specs.is_empty() {
        cfg.density_specs = specs.to_vec();
    }
    cfg.t_lattice = LatticeSpec {
        t_start: lattice.t_start,
        t_end: lattice.t_end,
        points: lattice.points,
        spacing: parse_spacing(&lattice.spacing)?,
    };
    cfg.h = numeric.h;
    cfg.m = numeric.m;
    cfg.tail_eps = numeric.tail_eps;
    cfg.output = OutputSpec {
        format: parse_format(format)?,
        path: out.to_string_lossy().into_owned(),
    };
    if let Some(list) = checks {
        cfg.checks = list.split(',').map(|s| s.trim().to_string()).collect();
    }
    cfg.explore = explore;
    Ok(cfg)
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownFamily(_)
            | Error::ParamOutOfRange(_)
            | Error::ParseError { .. }
            | Error::Config(_)
            | Error::GridFile(_)
            | Error::WeightMismatch(_)
            | Error::NonpositiveScale(_)
            | Error::Io(_)
    )
}

fn eval_cmd(
    spec: &str,
    t: f64,
    numeric: &NumericArgs,
    format: &str,
    dump_grid: Option<&PathBuf>,
) -> Result<(), (u8, String)> {
    let params = Params {
        m: numeric.m,
        tail_eps: numeric.tail_eps,
        h: numeric.h,
        ..Params::default()
    };
    let usage = |e: &Error| (EXIT_USAGE, e.to_string());
    let density = parse_density(spec, &params).map_err(|e| usage(&e))?;
    if t < 0.0 {
        return Err((EXIT_USAGE, format!("t must be >= 0, got {t}")));
    }
    let flow = Flow::new(&density, params);
    let rec = flow
        .record(t, numeric.h)
        .map_err(|e| (EXIT_NUMERICAL, format!("eval failed: {e}")))?;
    if let Some(path) = dump_grid {
        let states = flow
            .state(t, t)
            .map_err(|e| (EXIT_NUMERICAL, format!("eval failed: {e}")))?;
        if states.len() != 1 {
            return Err((EXIT_USAGE, "--dump-grid needs a one-dimensional density".into()));
        }
        write_grid_csv(&states[0], path).map_err(|e| (EXIT_NUMERICAL, e.to_string()))?;
    }
    match format {
        "text" => {
            println!("spec    = {spec}");
            println!("t       = {}", fmt_f64(rec.t));
            println!("n       = {}", rec.n);
            println!("H       = {}", fmt_f64(rec.entropy));
            println!("N       = {}", fmt_f64(rec.entropy_power));
            println!("I       = {}", fmt_f64(rec.fisher));
            println!("I_tilde = {}", fmt_f64(rec.fisher_reciprocal));
            println!("J       = {}", fmt_f64(rec.j));
            match (rec.k, rec.k_err) {
                (Some(k), Some(e)) => println!("K       = {} (err est {})", fmt_f64(k), fmt_f64(e)),
                _ => println!("K       = (absent: stencil below t_min)"),
            }
            println!("p       = {}", fmt_f64(rec.p()));
        }
        "json" => {
            let val = serde_json::json!({
                "spec": spec,
                "t": rec.t,
                "n": rec.n,
                "H": rec.entropy,
                "N": rec.entropy_power,
                "I": rec.fisher,
                "I_tilde": rec.fisher_reciprocal,
                "J": rec.j,
                "K": rec.k,
                "K_err": rec.k_err,
                "p": rec.p(),
            });
            println!("{}", serde_json::to_string_pretty(&val).expect("record serializes"));
        }
        "csv" => {
            println!("t,n,H,N,I,I_tilde,J,K,p");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(rec.t),
                rec.n,
                fmt_f64(rec.entropy),
                fmt_f64(rec.entropy_power),
                fmt_f64(rec.fisher),
                fmt_f64(rec.fisher_reciprocal),
                fmt_f64(rec.j),
                rec.k.map(fmt_f64).unwrap_or_default(),
                fmt_f64(rec.p())
            );
        }
        other => return Err((EXIT_USAGE, format!("unknown format `{other}`"))),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval { spec, t, numeric, format, dump_grid } => {
            match eval_cmd(&spec, t, &numeric, &format, dump_grid.as_ref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err((code, msg)) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(code)
                }
            }
        }
        Command::Sweep { config, specs, lattice, numeric, format, out } => {
            let cfg = match load_or_build_config(
                config.as_ref(),
                &specs,
                &lattice,
                &numeric,
                &format,
                &out,
                None,
                false,
            ) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            match run_sweep(&cfg) {
                Ok(outcome) => {
                    for f in &outcome.files {
                        println!("wrote {}", f.display());
                    }
                    println!("wrote {}", outcome.manifest_path.display());
                    if outcome.failed_rows > 0 {
                        eprintln!("{} row(s) failed", outcome.failed_rows);
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) if is_usage_error(&e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
        Command::Verify { config, specs, checks, explore, lattice, numeric, format, out } => {
            let cfg = match load_or_build_config(
                config.as_ref(),
                &specs,
                &lattice,
                &numeric,
                &format,
                &out,
                checks.as_deref(),
                explore,
            ) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            match run_verify(&cfg) {
                Ok(outcome) => {
                    for r in &outcome.reports {
                        println!(
                            "{:<18} {:<55} {:<12} min_slack={:+.3e} gate={:.3e}",
                            r.name.as_str(),
                            truncate(&r.density_spec, 55),
                            r.verdict.to_string(),
                            r.min_slack,
                            r.err_gate
                        );
                    }
                    println!("wrote {}", outcome.report_path.display());
                    println!("wrote {}", outcome.manifest_path.display());
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) if is_usage_error(&e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
        Command::Families => {
            print!("{}", catalog_listing());
            ExitCode::SUCCESS
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!("{}...", &s[..n - 3])
    }
}
