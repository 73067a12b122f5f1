//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure or internal error, 2 bad
//! input, 3 empty or infeasible result.

mod format;
mod manifest;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use format::{fmt_sig, parse_grid, CsvWriter};
pub use manifest::RunManifest;

use crate::error::Error;
use crate::model::{CodingParams, Config, FadingModel, LogBase};
use crate::optimize::{default_grid, power_curve, rd_frontier, Frontier, Mode, FRONTIER_GRID};
use crate::oracle::gp_rate_oracle;
use crate::quadrature::{make_rule, QuadratureRule};
use crate::rate::{cond_var_y_given_u, kappa_member, rate_per_state};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "crfade", version, about = "Rate- and power-distortion trade-offs for fading channels with common state reconstruction")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    FixedRho,
    AdaptiveRho,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixedRho => Mode::FixedRho,
            ModeArg::AdaptiveRho => Mode::AdaptiveRho,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// JSON configuration file; built-in defaults (Rayleigh, P = 2.5, Q = 1, noise 1) otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Logarithm base for reported rates: 2 or e.
    #[arg(long, global = true)]
    pub log_base: Option<LogBase>,
    /// Quadrature nodes for continuous fading laws.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "fixed-rho")]
    pub mode: ModeArg,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rate, feasibility and oracle rate at one operating point.
    Eval(EvalArgs),
    /// Rate-distortion frontier as CSV.
    Region(RegionArgs),
    /// Minimum power over a distortion grid as CSV.
    Power(PowerArgs),
    /// Checks every closed form against its oracle and writes a JSON report.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub g: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rho1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rho2: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub d: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Log-spaced distortion values on [1e-3 Q, Q].
    #[arg(long, default_value_t = FRONTIER_GRID)]
    pub points: usize,
    /// Also trace the non-fading channel (g = 1) at the same budget.
    #[arg(long)]
    pub compare_static: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PowerFormat {
    Long,
    Split,
}

#[derive(Debug, Clone, Args)]
pub struct PowerArgs {
    /// Target rate in the reporting unit; repeat for a family of curves.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub rate: Vec<f64>,
    /// Distortion grid as `start:stop:count` or a comma-separated list;
    /// defaults to 20 points on [0.05 Q, Q].
    #[arg(long)]
    pub dgrid: Option<String>,
    #[arg(long, value_enum, default_value = "long")]
    pub format: PowerFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Monte-Carlo sample count per parameter set.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Random parameter draws per identity.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Multiplies every tolerance (harness self-test).
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub tolerance_scale: f64,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(Error),
    #[error("{0}")]
    Empty(String),
    #[error("validation failed: {name} observed {observed:e} (tolerance {tolerance:e})")]
    Validation { name: String, observed: f64, tolerance: f64 },
    #[error(transparent)]
    Internal(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_BAD_INPUT,
            CliError::Empty(_) => EXIT_EMPTY,
            CliError::Validation { .. } | CliError::Internal(_) => EXIT_VALIDATION,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::TooManyNodes(_)
            | Error::Json(_)
            | Error::Io(_) => CliError::Input(e),
            other => CliError::Internal(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(Error::Io(e))
    }
}

/// Configuration after applying command-line overrides.
pub fn resolve_config(global: &Global) -> Result<Config, CliError> {
    let mut cfg = match &global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(b) = global.log_base {
        cfg.log_base = b;
    }
    if let Some(n) = global.nodes {
        cfg.quadrature_nodes = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rule_for(cfg: &Config, fading: &FadingModel) -> Result<QuadratureRule, CliError> {
    Ok(make_rule(fading, cfg.quadrature_nodes)?)
}

/// Parses arguments, runs the command and returns the exit code. Messages go
/// to standard error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.global.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Internal(Error::Numerical(e.to_string())))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Eval(a) => cmd_eval(&cli.global, &cfg, a),
        Command::Region(a) => cmd_region(&cli.global, &cfg, a),
        Command::Power(a) => cmd_power(&cli.global, &cfg, a),
        Command::Validate(a) => cmd_validate(&cli.global, &cfg, a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `<out>.manifest.json` next to an output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// `dir/stem<suffix>` for an output path `dir/stem.ext`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_eval(global: &Global, cfg: &Config, a: &EvalArgs) -> Result<(), CliError> {
    let ch = cfg.channel();
    let cp = CodingParams::new(a.rho1, a.rho2, a.d)?;
    let rate = rate_per_state(a.g, a.p, &cp, &ch)?;
    let oracle = gp_rate_oracle(a.g, a.p, &cp, &ch)?;
    let feasible = kappa_member(a.g, a.p, &cp, &ch);
    let var_yu = cond_var_y_given_u(a.g, a.p, &cp, &ch)?;
    let unit = cfg.log_base.unit();
    let text = format!(
        "rate_{unit} {}\noracle_rate_{unit} {}\nfeasible {feasible}\nvar_y_given_u {}\n",
        fmt_sig(cfg.log_base.from_bits(rate)),
        fmt_sig(cfg.log_base.from_bits(oracle)),
        fmt_sig(var_yu),
    );
    emit(global.out.as_deref(), &text)
}

fn frontier_csv(f: &Frontier, base: LogBase) -> String {
    let mut w = CsvWriter::new(&["D", &format!("R_{}", base.unit()), "d_used", "mode"]);
    for p in &f.points {
        w.row(&[fmt_sig(p.distortion), fmt_sig(base.from_bits(p.rate)), fmt_sig(p.d_used), p.mode.to_string()]);
    }
    w.finish()
}

pub fn cmd_region(global: &Global, cfg: &Config, a: &RegionArgs) -> Result<(), CliError> {
    if a.points == 0 {
        return Err(CliError::Input(Error::InvalidParameter("--points must be positive".into())));
    }
    let mut manifest = RunManifest::start("region", cfg, global);
    manifest.arguments = serde_json::json!({ "points": a.points, "compare_static": a.compare_static });
    let ch = cfg.channel();
    let mode: Mode = global.mode.into();
    let grid = default_grid(ch.q, a.points);
    let frontier = rd_frontier(&ch, &rule_for(cfg, &cfg.fading)?, &grid, mode)?;
    if frontier.points.is_empty() {
        return Err(CliError::Empty("every distortion on the grid is infeasible".into()));
    }
    emit(global.out.as_deref(), &frontier_csv(&frontier, cfg.log_base))?;

    if a.compare_static {
        let fading = FadingModel::Degenerate { g0: 1.0 };
        let baseline = rd_frontier(&ch, &rule_for(cfg, &fading)?, &grid, mode)?;
        let text = frontier_csv(&baseline, cfg.log_base);
        match &global.out {
            Some(out) => {
                let path = sibling(out, ".static.csv");
                std::fs::write(&path, text)?;
                manifest.outputs.push(path.display().to_string());
            }
            None => emit(None, &format!("\n{text}"))?,
        }
    }
    if let Some(out) = &global.out {
        manifest.outputs.insert(0, out.display().to_string());
        manifest.finish_and_write(&manifest_path(out))?;
    }
    Ok(())
}

pub fn cmd_power(global: &Global, cfg: &Config, a: &PowerArgs) -> Result<(), CliError> {
    let ch = cfg.channel();
    let grid = match &a.dgrid {
        Some(spec) => parse_grid(spec)?,
        None => (0..20).map(|k| ch.q * (0.05 + 0.05 * k as f64)).collect(),
    };
    if grid.iter().any(|&d| !(d > 0.0 && d <= ch.q)) {
        return Err(CliError::Input(Error::InvalidParameter(format!(
            "distortion grid must lie in (0, {}]",
            ch.q
        ))));
    }
    if let Some(r) = a.rate.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(CliError::Input(Error::InvalidParameter(format!("rate {r} must be non-negative"))));
    }
    let mode: Mode = global.mode.into();
    let rule = rule_for(cfg, &cfg.fading)?;
    let mut manifest = RunManifest::start("power", cfg, global);
    manifest.arguments = serde_json::json!({
        "rate": a.rate,
        "dgrid": grid,
        "format": match a.format { PowerFormat::Long => "long", PowerFormat::Split => "split" },
    });

    let unit = cfg.log_base.unit();
    let mut reachable = 0usize;
    let mut curves = Vec::with_capacity(a.rate.len());
    for &r in &a.rate {
        let bits = r / cfg.log_base.from_bits(1.0);
        let curve = power_curve(&ch, &rule, bits, &grid, mode)?;
        let cells: Vec<String> = curve
            .iter()
            .map(|p| match p {
                Some(p) => {
                    reachable += 1;
                    fmt_sig(p.power)
                }
                None => "unreachable".to_string(),
            })
            .collect();
        curves.push((r, cells));
    }

    match a.format {
        PowerFormat::Long => {
            let mut w = CsvWriter::new(&[&format!("R_{unit}"), "D", "P_min"]);
            for (r, cells) in &curves {
                for (d, c) in grid.iter().zip(cells) {
                    w.row(&[fmt_sig(*r), fmt_sig(*d), c.clone()]);
                }
            }
            emit(global.out.as_deref(), &w.finish())?;
            if let Some(out) = &global.out {
                manifest.outputs.push(out.display().to_string());
            }
        }
        PowerFormat::Split => {
            for (r, cells) in &curves {
                let mut w = CsvWriter::new(&["D", "P_min"]);
                for (d, c) in grid.iter().zip(cells) {
                    w.row(&[fmt_sig(*d), c.clone()]);
                }
                match &global.out {
                    Some(out) => {
                        let path = sibling(out, &format!(".R{}.csv", fmt_sig(*r)));
                        std::fs::write(&path, w.finish())?;
                        manifest.outputs.push(path.display().to_string());
                    }
                    None => emit(None, &format!("# R_{unit} = {}\n{}", fmt_sig(*r), w.finish()))?,
                }
            }
        }
    }
    if let Some(out) = &global.out {
        manifest.finish_and_write(&manifest_path(out))?;
    }
    if reachable == 0 {
        return Err(CliError::Empty("no target on the grid is reachable".into()));
    }
    Ok(())
}

pub fn cmd_validate(global: &Global, cfg: &Config, a: &ValidateArgs) -> Result<(), CliError> {
    if a.samples < 1000 {
        return Err(CliError::Input(Error::InvalidParameter("--samples must be at least 1000".into())));
    }
    let opts = validate::ValidateOptions {
        draws: a.draws,
        samples: a.samples,
        seed: global.seed,
        nodes: cfg.quadrature_nodes,
        tolerance_scale: a.tolerance_scale,
    };
    let mut manifest = RunManifest::start("validate", cfg, global);
    manifest.seed = Some(global.seed);
    manifest.mc_generator = Some(crate::oracle::MC_GENERATOR.to_string());
    manifest.arguments = serde_json::json!({ "samples": a.samples, "draws": a.draws });

    let report = validate::run(&cfg.channel(), &opts)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    emit(global.out.as_deref(), &text)?;
    if let Some(out) = &global.out {
        manifest.outputs.push(out.display().to_string());
        manifest.finish_and_write(&manifest_path(out))?;
    }
    match report.first_failure() {
        Some(c) => Err(CliError::Validation {
            name: c.name.to_string(),
            observed: c.max_error,
            tolerance: c.tolerance,
        }),
        None => Ok(()),
    }
}
