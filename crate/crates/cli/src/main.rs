//! `dyadic-lab`: batch front-end for the weight constants, decompositions,
//! sparse operators and inequality checks of the `dyadic-lab` crate.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dyadic_lab::config::{Config, RawConfig};
use dyadic_lab::experiments::{self, Experiment};
use dyadic_lab::report::Report;
use dyadic_lab::sparse::SparseFamily;

#[derive(Parser)]
#[command(name = "dyadic-lab", version, about = "Dyadic weight constants and weighted inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Table of weight constants with witnesses
    Constants,
    /// Calderón–Zygmund decomposition of the input
    Czd,
    /// Sparse operator and multiplier composition of the input
    SparseEval {
        /// read the sparse family from this CSV instead of building one
        #[arg(long)]
        sparse_family: Option<PathBuf>,
        /// write the family used to this CSV
        #[arg(long)]
        save_family: Option<PathBuf>,
    },
    /// Dyadic fractional maximal function of the input
    Maximal,
    /// Run one check over random instances
    Verify {
        /// experiment name or alias (`verify --list` shows them)
        #[arg(required_unless_present = "list")]
        id: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Operator ratio along a power-weight family, with scaling slope
    Sweep { id: String },
    /// Hill climbing on the restricted weak ratio
    Extremal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Options {
    /// config file: `key = value` lines or a flat JSON object
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// grid, e.g. `n=1,L=8` or `n=2,L=5,a=1`
    #[arg(long, global = true)]
    grid: Option<String>,
    /// weight spec, e.g. `power:a=0.3` or `const:1`
    #[arg(long, global = true)]
    weight: Option<String>,
    /// input function spec
    #[arg(long, global = true)]
    input: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    p0: Option<String>,
    #[arg(long, global = true)]
    q0: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    q: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    s: Option<String>,
    #[arg(long, global = true)]
    eta: Option<String>,
    #[arg(long, global = true)]
    rho: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// weight family for sweeps, `power:a=<lo>..<hi>:<count>`
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    iterations: Option<String>,
    #[arg(long, global = true)]
    step: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    /// any config key, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// write the table here and print only the summary
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
}

impl Options {
    fn config(&self) -> Result<Config> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::new(),
        };
        let flags = [
            ("grid", &self.grid),
            ("weight", &self.weight),
            ("input", &self.input),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("p0", &self.p0),
            ("q0", &self.q0),
            ("p", &self.p),
            ("q", &self.q),
            ("alpha", &self.alpha),
            ("s", &self.s),
            ("eta", &self.eta),
            ("rho", &self.rho),
            ("lambda", &self.lambda),
            ("family", &self.family),
            ("iterations", &self.iterations),
            ("step", &self.step),
            ("tol", &self.tol),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        for item in &self.set {
            let (k, v) = item.split_once('=').with_context(|| format!("--set `{item}` is not KEY=VALUE"))?;
            raw.set(k.trim(), v)?;
        }
        Ok(Config::from_raw(raw)?)
    }
}

fn emit(report: &Report, opts: &Options) -> Result<()> {
    let text = match opts.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match &opts.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            for note in &report.notes {
                println!("NOTE {note}");
            }
            for line in report.summary() {
                println!("{line}");
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let opts = &cli.opts;
    if let Some(jobs) = opts.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    if let Command::Verify { list: true, .. } = &cli.command {
        for e in Experiment::all() {
            println!("{:<20} {}", e.name(), e.aliases().join(" "));
        }
        return Ok(true);
    }
    let cfg = opts.config()?;
    let report = match &cli.command {
        Command::Constants => experiments::constants_report(&cfg)?,
        Command::Czd => experiments::czd_report(&cfg)?,
        Command::SparseEval { sparse_family, save_family } => {
            let family = match sparse_family {
                Some(path) => Some(SparseFamily::from_csv(
                    &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?),
                None => None,
            };
            let (report, family) = experiments::sparse_eval_report(&cfg, family)?;
            if let Some(path) = save_family {
                fs::write(path, family.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            report
        }
        Command::Maximal => experiments::maximal_report(&cfg)?,
        Command::Verify { id, .. } => {
            let exp: Experiment = id.as_deref().expect("required by clap").parse()?;
            experiments::verify(exp, &cfg)?
        }
        Command::Sweep { id } => experiments::sweep(id.parse()?, &cfg)?,
        Command::Extremal => experiments::extremal_report(&cfg)?,
    };
    emit(&report, opts)?;
    Ok(report.pass())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
