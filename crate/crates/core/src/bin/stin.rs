use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stin::decouple::Mechanism;
use stin::harness::{
    parse_methods, parse_values, sweep, write_outputs, write_trace, Axis, Method, SweepSpec, TrialContext,
};
use stin::scenario::{load_config, SystemConfig};
use stin::seeding::trial_seed;
use stin::{Error, Result};

#[derive(Parser)]
#[command(name = "stin", version, about = "Distributed rate-splitting precoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo run of one method at the configured SNR.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// gpi-ins, gpi-avg, gpi-zero, gpi, slnr, zf or zf-local.
        #[arg(long, default_value = "gpi-avg")]
        method: String,
        /// Report mechanism for gpi methods (instantaneous, average, zero).
        #[arg(long)]
        mechanism: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        snr: Option<f64>,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Also write the solver trace of the first trial.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep one parameter for several methods.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// snr, sat_antennas or kt_int.
        #[arg(long, default_value = "snr")]
        axis: String,
        /// `start:step:stop` or a comma list.
        #[arg(long, default_value = "0:5:30")]
        values: String,
        #[arg(long, default_value = "gpi-avg,slnr,zf")]
        methods: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        trace: bool,
    },
    /// Solver trace of one instance.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value = "instantaneous")]
        mechanism: String,
    },
}

fn base_config(common: &Common) -> Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run_spec(spec: SweepSpec, out: &PathBuf) -> Result<()> {
    let table = sweep(&spec)?;
    for row in &table.summary {
        println!(
            "{} = {}  {:<9} mean {:.4}  stderr {:.4}  n {}",
            row.axis, row.axis_value, row.method, row.mean_sum_rate, row.stderr, row.n
        );
    }
    for path in write_outputs(&table, out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            method,
            mechanism,
            trials,
            snr,
            workers,
            trace,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(s) = snr {
                cfg.snr_db = s;
            }
            let mechanism = mechanism.as_deref().map(str::parse::<Mechanism>).transpose()?;
            let method = Method::parse_with(&method, mechanism)?;
            let mut spec = SweepSpec::new(Axis::Snr, vec![cfg.snr_db], trials, vec![method], cfg);
            spec.workers = workers;
            spec.keep_trace = trace;
            run_spec(spec, &common.out)
        }
        Command::Sweep {
            common,
            axis,
            values,
            methods,
            trials,
            workers,
            trace,
        } => {
            let cfg = base_config(&common)?;
            let mut spec = SweepSpec::new(
                axis.parse()?,
                parse_values(&values)?,
                trials,
                parse_methods(&methods)?,
                cfg,
            );
            spec.workers = workers;
            spec.keep_trace = trace;
            run_spec(spec, &common.out)
        }
        Command::Convergence { common, snr, mechanism } => {
            let mut cfg = base_config(&common)?;
            if let Some(s) = snr {
                cfg.snr_db = s;
            }
            let method = Method::Gpi(mechanism.parse()?);
            let mut ctx = TrialContext::new(&cfg, trial_seed(cfg.seed, 0, 0))?;
            let (result, trace) = ctx.evaluate(method)?;
            let trace = trace.expect("gpi methods produce a trace");
            println!(
                "satellite: {} iterations, converged {}, residual {:.3e}",
                trace.sat_iterations, trace.sat_converged, trace.final_res_sat
            );
            println!(
                "bs: {} iterations, converged {}, residual {:.3e}",
                trace.bs_iterations, trace.bs_converged, trace.final_res_bs
            );
            println!("sum rate {:.4} bits/s/Hz", result.sum_rate);
            let mut path = common.out.into_os_string();
            path.push("_trace.csv");
            let path = PathBuf::from(path);
            write_trace(&path, &trace.records)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if e.is_io() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
