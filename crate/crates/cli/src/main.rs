use clap::{Args, Parser, Subcommand};
use smcga_cli::output::fmt_num;
use smcga_cli::{
    cmd_compare, cmd_optimize, cmd_simulate, load_config_with_overrides, CliError, RunConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "smcga",
    version,
    about = "Sliding-mode control of a cylindrical manipulator with GA gain tuning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write trace.csv + summary.txt
    Simulate,
    /// Tune the nine gains with the GA and write ga_history.csv + best_gains.cfg
    Optimize,
    /// Run two gain sets under the same disturbance and write compare.txt
    Compare {
        /// Second controller: PATH, `table2`, `baseline` or nine comma-separated values
        #[arg(long = "gains-b", value_name = "GAINS")]
        gains_b: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// PATH, `table2`, `baseline` or nine comma-separated values
    #[arg(long, global = true, value_name = "GAINS")]
    gains: Option<String>,
    /// joint,start,magnitude[,duration]  or `none`
    #[arg(long, global = true, value_name = "SPEC", allow_hyphen_values = true)]
    disturb: Option<String>,
    #[arg(long, global = true, value_name = "SECONDS")]
    dt: Option<f64>,
    #[arg(long = "t-final", global = true, value_name = "SECONDS")]
    t_final: Option<f64>,
    /// Fitness worker threads (0 = all available)
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("seed", self.seed.map(|s| s.to_string()));
        push("gains", self.gains.clone());
        push("disturbance", self.disturb.clone());
        push("dt", self.dt.map(|x| x.to_string()));
        push("t_final", self.t_final.map(|x| x.to_string()));
        push("workers", self.workers.map(|x| x.to_string()));
        out
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli.common.overrides();
    if let Command::Compare { gains_b: Some(b) } = &cli.command {
        overrides.push(("gains_b".into(), b.clone()));
    }
    let cfg: RunConfig = load_config_with_overrides(cli.common.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Simulate => {
            let res = cmd_simulate(&cfg)?;
            print!("{}", smcga_cli::output::summary_text(&res));
        }
        Command::Optimize => {
            let report = cmd_optimize(&cfg)?;
            println!("generations_used = {}", report.generations_used);
            println!("converged = {}", report.converged);
            println!(
                "best_fitness = {}",
                fmt_num(report.best.fitness.unwrap_or(f64::NAN))
            );
        }
        Command::Compare { .. } => {
            let a = cfg.gains.resolve()?;
            let b = cfg.gains_b.resolve()?;
            let cmp = cmd_compare(&cfg, &a, &b)?;
            match cmp.overall {
                Some(w) => println!("overall = {}", w.label()),
                None => println!("no disturbance window"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
