use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

use super::config::ScenarioConfig;
use super::{io, run, scenarios};

#[derive(Parser, Debug)]
#[command(name = "cohsim", version, about = "Two-photon interference of multi-mode CW light")]
pub struct Cli {
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Worker thread limit (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Built-in scenario name (see `scenarios`).
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: the scenario's output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write analytic coincidence surfaces or traces.
    Analytic {
        #[command(flatten)]
        source: Source,
    },
    /// Run the Monte Carlo engine for a scenario.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Master seed; overrides the scenario file.
        #[arg(long, env = "COHSIM_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write trial-0 click times per variant.
        #[arg(long)]
        dump_timestamps: bool,
    },
    /// Fit a histogram, scan or fringe CSV.
    Analyze {
        input: PathBuf,
        /// Fit table destination (default: print only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-point z-scores of an observed CSV against a reference CSV.
    Compare {
        reference: PathBuf,
        observed: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in scenarios.
    Scenarios {
        /// Print the TOML of one scenario.
        #[arg(long)]
        show: Option<String>,
    },
}

fn load(source: &Source) -> Result<ScenarioConfig> {
    match (&source.scenario, &source.config) {
        (Some(name), None) => scenarios::builtin(name),
        (None, Some(path)) => ScenarioConfig::load(path),
        _ => Err(Error::Config("give exactly one of --scenario or --config".into())),
    }
}

fn out_dir(source: &Source, cfg: &ScenarioConfig) -> PathBuf {
    source.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn execute(cli: Cli) -> Result<()> {
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    if let Some(n) = cli.threads {
        exec::set_thread_limit(n).map_err(Error::Config)?;
    }
    let execution = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Analytic { source } => {
            let cfg = load(source)?;
            for f in run::write_analytic(&cfg, &out_dir(source, &cfg), execution)? {
                say(format!("wrote {}", f.display()));
            }
        }
        Command::Simulate { source, seed, trials, dump_timestamps } => {
            let mut cfg = load(source)?;
            if let Some(s) = seed {
                cfg.plan.seed = *s;
            }
            if let Some(t) = trials {
                cfg.plan.trials = *t;
            }
            cfg.validate()?;
            let opts = run::SimOptions { dump_timestamps: *dump_timestamps, execution };
            let (files, notes) = run::write_simulation(&cfg, &cfg.simulation_plan(), &out_dir(source, &cfg), opts)?;
            for f in files {
                say(format!("wrote {}", f.display()));
            }
            for n in notes {
                eprintln!("fit skipped: {n}");
            }
        }
        Command::Analyze { input, out } => {
            let (fits, notes) = run::analyze_table(&io::read_table(input)?)?;
            let mut t = io::Table::new(&io::FIT_COLUMNS);
            for (label, fit) in &fits {
                io::push_fit(&mut t, label, fit);
            }
            for n in notes {
                eprintln!("fit skipped: {n}");
            }
            match out {
                Some(path) => {
                    io::write_table(path, &t)?;
                    say(format!("wrote {}", path.display()));
                }
                None => {
                    for r in &t.rows {
                        say(r.join(","));
                    }
                }
            }
        }
        Command::Compare { reference, observed, out } => {
            let report = run::compare_tables(&io::read_table(reference)?, &io::read_table(observed)?)?;
            if let Some(path) = out {
                io::write_table(path, &io::compare_table(&report))?;
            }
            say(report.summary());
        }
        Command::Scenarios { show } => match show {
            Some(name) => print!("{}", scenarios::builtin(name)?.to_toml()?),
            None => {
                for (name, what) in scenarios::CATALOG {
                    say(format!("{name:8} {what}"));
                }
            }
        },
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
