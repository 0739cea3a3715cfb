//! Command-line entry point. Every subcommand loads a [`RunConfig`], runs
//! one protocol, writes its CSV and, when an output path is known, a run
//! manifest that replays the run through `--config`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{self, ConfigError, Mode, RunConfig};
use crate::experiments::{self, Cell, ExperimentError, ProtocolResult};
use crate::growth::GrowthError;
use crate::logic::{self, LogicError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "slotnet", version, about = "Attribute-slot neural coding simulator", after_long_help = config::parameter_help())]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; absent keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set neuron.c5=2.0 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shorthand for --set sim.seed=N.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shorthand for --set sim.mode=MODE (event or rate).
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Write the CSV here instead of stdout; the manifest goes next to it.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Explicit manifest path.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spike-timing window of one synapse.
    Stdp,
    /// LTP stimulus against the pre/post rate product.
    Hebb,
    /// Net plasticity against input frequency.
    Freq,
    /// Retention curves after spaced rehearsals.
    Forget,
    /// Retrieval of two overlapping patterns.
    Interfere,
    /// Epochs to learn, forget and relearn a pattern.
    Savings,
    /// Grow a network on random patterns and test retrieval.
    Grow {
        /// Save the trained network to this file.
        #[arg(long, value_name = "PATH")]
        save: Option<PathBuf>,
    },
    /// Compile a boolean expression and print its truth table.
    Logic {
        /// Expression over &, |, ! and parentheses.
        #[arg(long)]
        expr: Option<String>,
        /// Write the compiled network listing to this file.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Truth table of the XOR network.
    Xor,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stdp => "stdp",
            Command::Hebb => "hebb",
            Command::Freq => "freq",
            Command::Forget => "forget",
            Command::Interfere => "interfere",
            Command::Savings => "savings",
            Command::Grow { .. } => "grow",
            Command::Logic { .. } => "logic",
            Command::Xor => "xor",
        }
    }

    /// Execution mode of the subcommand's dynamics, if it has any.
    fn mode(&self) -> Option<Mode> {
        match self {
            Command::Stdp | Command::Freq => Some(Mode::Event),
            Command::Hebb | Command::Forget | Command::Interfere | Command::Savings | Command::Grow { .. } => {
                Some(Mode::Rate)
            }
            Command::Logic { .. } | Command::Xor => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("expression: {0}")]
    Logic(#[from] LogicError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Logic(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Merges file, `--set` overrides and flag shorthands, then checks the
/// mode and any manifest header against the subcommand.
fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut overrides = cli.common.overrides.clone();
    if let Some(seed) = cli.common.seed {
        overrides.push(format!("sim.seed={seed}"));
    }
    if let Some(mode) = &cli.common.mode {
        overrides.push(format!("sim.mode=\"{mode}\""));
    }
    if let Command::Logic { expr: Some(e), .. } = &cli.command {
        overrides.push(format!("logic.expr={}", toml::Value::String(e.clone())));
    }
    let mut cfg = config::load_config(cli.common.config.as_deref(), &overrides)?;
    let name = cli.command.name();
    if let Some(m) = &cfg.manifest {
        if m.subcommand != name {
            return Err(ConfigError::Invalid(format!("manifest was written by `{}`, not `{name}`", m.subcommand)).into());
        }
    }
    if let Some(natural) = cli.command.mode() {
        match cfg.sim.mode {
            Some(m) if m != natural => {
                return Err(ConfigError::Invalid(format!("`{name}` runs in {natural:?} mode, sim.mode asks for {m:?}")).into())
            }
            _ => cfg.sim.mode = Some(natural),
        }
    }
    cfg.manifest = Some(config::ManifestInfo { subcommand: name.to_string(), version: env!("CARGO_PKG_VERSION").to_string() });
    Ok(cfg)
}

fn truth_table(net: &logic::SlotNetwork, expr: &logic::BoolExpr) -> Result<ProtocolResult, CliError> {
    let mut columns: Vec<&str> = net.atoms.iter().map(String::as_str).collect();
    columns.extend(["expr", "network"]);
    let mut res = ProtocolResult {
        protocol: "logic".into(),
        seed: 0,
        params: Default::default(),
        settings: vec![("expr".into(), expr.to_string())],
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows: Vec::new(),
        summary: Vec::new(),
    };
    for v in logic::assignments(&net.atoms) {
        let mut row: Vec<Cell> = net.atoms.iter().map(|a| usize::from(v[a]).into()).collect();
        row.push(usize::from(expr.eval(&v)?).into());
        row.push(usize::from(logic::eval_network(net, &v)?).into());
        res.rows.push(row);
    }
    Ok(res)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<ProtocolResult, CliError> {
    let params = cfg.model_params();
    let seed = cfg.sim.seed;
    let mut res = match &cli.command {
        Command::Stdp => {
            let dts = cfg.stdp.delta_ts.clone().unwrap_or_else(|| experiments::stdp_delta_ts(&params));
            experiments::stdp_protocol(&dts, &params)?
        }
        Command::Hebb => {
            let duration = cfg.hebb.duration.unwrap_or(5.0 / params.neuron.c4_epsp);
            experiments::hebb_grid(&cfg.hebb.f_pre, &cfg.hebb.f_post, duration, &params)?
        }
        Command::Freq => experiments::frequency_protocol(&cfg.freq, &params)?,
        Command::Forget => experiments::forgetting_protocol(&cfg.forget, &params)?,
        Command::Interfere => experiments::interference_protocol(&cfg.interfere, &params, seed)?,
        Command::Savings => experiments::savings_protocol(&cfg.savings, &params, seed)?,
        Command::Grow { save } => {
            let (res, net) = experiments::grow_protocol(&cfg.grow, &cfg.growth, &params, seed)?;
            if let Some(path) = save {
                net.save(path)?;
            }
            res
        }
        Command::Logic { dump, .. } => {
            let expr = logic::parse_expr(&cfg.logic.expr)?;
            let net = logic::compile(&logic::to_dnf(&expr)?);
            if let Some(path) = dump {
                std::fs::write(path, net.dump()).map_err(io_err(path))?;
            }
            truth_table(&net, &expr)?
        }
        Command::Xor => {
            let net = logic::xor_network();
            let mut res = truth_table(&net, &logic::parse_expr(logic::XOR_SOURCE)?)?;
            res.protocol = "xor".into();
            res
        }
    };
    res.seed = seed;
    Ok(res)
}

fn run_parsed(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let res = execute(cli, &cfg)?;
    let csv = res.to_csv();
    match &cli.common.out {
        Some(path) => std::fs::write(path, &csv).map_err(io_err(path))?,
        None => stdout.write_all(csv.as_bytes()).map_err(io_err(Path::new("<stdout>")))?,
    }
    let manifest = cli.common.manifest.clone().or_else(|| {
        cli.common.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.toml");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest {
        std::fs::write(&path, cfg.to_toml()).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for runtime
/// failures.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_CONFIG
                }
            };
        }
    };
    match run_parsed(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
