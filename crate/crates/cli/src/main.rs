use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod io;

/// Input or configuration problem; maps to exit code 1.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser, Debug)]
#[command(
    name = "defect-sr",
    version,
    about = "Symbolic regression of defect-interaction kernels"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum GridArg {
    Uniform,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TargetArg {
    Formation,
    Gap,
}

fn parse_domain(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi] = parts[..] else {
        return Err("expected `lo,hi`".into());
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the default run configuration.
    PrintConfig,
    /// Sample a dataset from a built-in kernel or an expression.
    GenSynth {
        /// Built-in kernel name.
        #[arg(long, conflicts_with = "expression", required_unless_present = "expression")]
        kernel: Option<String>,
        /// Prefix expression in the variable `x`.
        #[arg(long)]
        expression: Option<String>,
        /// Constants for `--expression`, separated by `;` or `,`.
        #[arg(long, default_value = "", requires = "expression")]
        consts: String,
        /// Sampling domain `lo,hi` in Å.
        #[arg(long, value_name = "LO,HI", value_parser = parse_domain)]
        domain: Option<(f64, f64)>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = GridArg::Uniform)]
        grid: GridArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fabricate defect structures with exact targets from a registry.
    GenStructures {
        #[arg(long, default_value = "MoS2")]
        material: String,
        /// Registry to draw kernels from; the built-in synthetic MoS2
        /// registry is used when omitted.
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Also write the registry used.
        #[arg(long)]
        registry_out: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 2)]
        min_defects: usize,
        #[arg(long, default_value_t = 25)]
        max_defects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretrain the sequence VAE on random valid formulas.
    Pretrain {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch log and validity summary (NDJSON).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run the search loop on a dataset and export the Pareto front.
    Search {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration run log (NDJSON).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Final bank contents, same columns as the front.
        #[arg(long)]
        bank_out: Option<PathBuf>,
    },
    /// Fit one kernel per interaction type from one- and two-defect structures.
    FitKernels {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, required = true, num_args = 1..)]
        structures: Vec<PathBuf>,
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Existing registry to extend; its entries are kept unless refitted.
        #[arg(long)]
        merge: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-interaction fit summary (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict per-site formation energy and gap for structures.
    Predict {
        #[arg(long)]
        structures: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predictions with stored targets, split by defect density.
    Evaluate {
        #[arg(long)]
        structures: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write model curve and data points for external plotting.
    PlotData {
        /// Dataset whose points are compared with the model.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Prefix expression; alternatively take the best row of `--front`.
        #[arg(long, conflicts_with = "front", required_unless_present = "front")]
        expression: Option<String>,
        #[arg(long, default_value = "", requires = "expression")]
        consts: String,
        #[arg(long)]
        front: Option<PathBuf>,
        /// Curve domain `lo,hi`; defaults to the data range.
        #[arg(long, value_name = "LO,HI", value_parser = parse_domain)]
        domain: Option<(f64, f64)>,
        /// Number of curve points.
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
        grid: u64,
        /// Output prefix: writes `<out>.curve.csv` and `<out>.points.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use defect_sr::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } | E::NonFiniteLoss { .. } | E::KernelPredicate(..) => 2,
                _ => 1,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
