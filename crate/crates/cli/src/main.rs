//! `stringfock`: command-line entry point for every check and scan.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use stringfock::{Error, Execution, ModelConfig};

#[derive(Debug, Parser, Serialize)]
#[command(name = "stringfock", version, about = "Exact Fock-space and field-commutator checks for the free open bosonic string")]
pub struct Cli {
    /// `key = value` configuration file (keys: d, a, gauge, cutoff, particle_cutoff, d_cm).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; a manifest is written to `<out>.manifest.json`. Default: stdout, manifest on stderr.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize, Default, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Intercept, e.g. `1` or `1/2`.
    #[arg(long)]
    pub a: Option<String>,
    /// `lc` or `cov`.
    #[arg(long)]
    pub gauge: Option<String>,
    /// Level cutoff N.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Enumerate the truncated Fock basis.
    Basis {
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Exact oscillator commutation relations on the safe subspace.
    CcrCheck {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit the central charge and check the Virasoro brackets exactly.
    VirasoroCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 3)]
        max_mode: i64,
    },
    /// Mass-squared eigenvalues and multiplicities per level (CSV).
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Physical-state dimensions and quotient signatures per level.
    Noghost {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long, default_value_t = 2)]
        max_level: usize,
    },
    /// Smeared commutators at spacelike and timelike separations (CSV).
    LocalityScan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dcm: Option<usize>,
        /// Mass levels r = M², comma separated.
        #[arg(long, value_delimiter = ',', default_value = "-2,0,2", allow_hyphen_values = true)]
        levels: Vec<String>,
        /// Spacelike center separations, comma separated.
        #[arg(long, value_delimiter = ',')]
        separations: Option<Vec<f64>>,
        /// Finest time-domain grid spacing.
        #[arg(long, default_value_t = 0.01)]
        h: f64,
    },
    /// Pauli-Jordan function of one mass level along x¹ (CSV).
    PauliJordan {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r: f64,
        #[arg(long)]
        dcm: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        times: Vec<f64>,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
    },
    /// Field commutator on the multi-string space against the propagator.
    FieldCcr {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        particles: Option<usize>,
    },
    /// Virasoro constraints on the positive-energy part of a smearing function.
    ObservableCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// JSON file: {"center", "radius", "internal": [{"coefficient", "modes": [[n, mu], ...]}], "tolerance"?, "expect"?}.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Sample a light-cone-gauge worldsheet; residuals go to the manifest (CSV).
    WorldsheetDemo {
        #[arg(long, default_value_t = 2)]
        transverse: usize,
        #[arg(long, default_value_t = 2)]
        modes: usize,
        #[arg(long, default_value_t = 1.0)]
        p_plus: f64,
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
        #[arg(long, default_value_t = 9)]
        samples: usize,
    },
    /// Leapfrog solve of the string light-cone equation with cone diagnostics (CSV).
    StringCone {
        #[arg(long = "N", default_value_t = 1)]
        modes: usize,
        #[arg(long)]
        dcm: Option<usize>,
        #[arg(long, default_value_t = 1)]
        colors: usize,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long = "T", default_value_t = 2.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        courant: f64,
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basis { .. } => "basis",
            Command::CcrCheck { .. } => "ccr-check",
            Command::VirasoroCheck { .. } => "virasoro-check",
            Command::Spectrum { .. } => "spectrum",
            Command::Noghost { .. } => "noghost",
            Command::LocalityScan { .. } => "locality-scan",
            Command::PauliJordan { .. } => "pauli-jordan",
            Command::FieldCcr { .. } => "field-ccr",
            Command::ObservableCheck { .. } => "observable-check",
            Command::WorldsheetDemo { .. } => "worldsheet-demo",
            Command::StringCone { .. } => "string-cone",
        }
    }
}

/// Failure classes mapped to exit codes.
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable { .. } | Error::Quadrature { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig, Failure> {
    let mut cfg = ModelConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_key_values(&text)?;
    }
    Ok(cfg)
}

fn config_snapshot(cfg: &ModelConfig) -> serde_json::Value {
    json!({
        "d": cfg.d,
        "a": cfg.a.to_string(),
        "gauge": cfg.gauge.to_string(),
        "level_cutoff": cfg.level_cutoff,
        "particle_cutoff": cfg.particle_cutoff,
        "d_cm": cfg.d_cm,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = std::env::var("STRINGFOCK_THREADS").ok().and_then(|v| v.parse().ok());
    stringfock::exec::init_thread_pool(threads);
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };

    let start = Instant::now();
    let outcome = load_config(&cli).and_then(|cfg| commands::run(&cli.command, &cfg, exec).map(|r| (cfg, r)));
    let (cfg, report) = match outcome {
        Ok(x) => x,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let outputs: Vec<String> = cli.out.iter().map(|p| p.display().to_string()).collect();
    let manifest = json!({
        "command": cli.command.name(),
        "parameters": serde_json::to_value(&cli.command).unwrap_or_default(),
        "config": config_snapshot(&cfg),
        "execution": if exec.is_parallel() { "parallel" } else { "sequential" },
        "tool_version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "outputs": outputs,
        "passed": report.passed,
        "summary": report.summary,
    });
    if let Err(e) = output::emit(cli.out.as_deref(), &report.data, &manifest) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(1);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
