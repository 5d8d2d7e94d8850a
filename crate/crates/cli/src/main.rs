//! `gridswitch solve` runs one strategy on a case; `gridswitch compare` runs
//! several and writes a comparison table.

mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridswitch::coordinator::WorkerConfig;
use log::error;

use run::*;

#[derive(Parser, Debug)]
#[command(name = "gridswitch", version, about = "DC optimal transmission switching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one case with one strategy.
    Solve {
        #[arg(long, value_enum, default_value = "p-otsp")]
        strategy: Strategy,
        #[command(flatten)]
        common: Common,
    },
    /// Run several strategies on one case and tabulate them.
    Compare {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "otsp,otsp-x0,p-otsp")]
        strategies: Vec<Strategy>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// MATPOWER case file, or a network in JSON form (`.json`).
    #[arg(long)]
    case: PathBuf,
    /// Seconds (virtual seconds with `--clock simulated`).
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    /// Percent.
    #[arg(long, default_value_t = 0.01)]
    gap_tol: f64,
    /// Worker list `n0:dn[,n0:dn...]`; used by p-otsp only.
    #[arg(long, default_value = "40:10")]
    workers: String,
    #[arg(long, default_value_t = 10.0)]
    update_time: f64,
    /// Also the no-improvement window.
    #[arg(long, default_value_t = 20.0)]
    reset_time: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "wall")]
    clock: ClockKind,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Set every generator's lower limit to zero.
    #[arg(long)]
    zero_pmin: bool,
    /// Drop quadratic cost terms instead of rejecting them.
    #[arg(long)]
    linearize: bool,
}

impl Common {
    fn spec(&self, strategy: Strategy) -> Result<RunSpec, RunError> {
        let workers = parse_workers(&self.workers)
            .map_err(RunError::Usage)?
            .into_iter()
            .map(|(n0, dn)| WorkerConfig {
                n0,
                delta_n: dn,
                update_time: self.update_time,
                reset_time: self.reset_time,
                no_improvement_window: self.reset_time,
            })
            .collect();
        Ok(RunSpec {
            case: self.case.clone(),
            strategy,
            time_limit: self.time_limit,
            gap_tol: self.gap_tol,
            workers,
            seed: self.seed,
            clock: self.clock,
            zero_pmin: self.zero_pmin,
            linearize: self.linearize,
        })
    }
}

fn print_summary(s: &Summary) {
    let f = |v: Option<f64>, d: usize| v.map(|x| format!("{x:.d$}")).unwrap_or_else(|| "-".into());
    println!(
        "{} {}: {} z_final={} z_dcopf={} delta_z={}% gap={}% ct={:.2}s nodes={}",
        s.case,
        s.strategy.as_str(),
        s.status,
        f(s.z_final, 6),
        f(s.z_dcopf, 6),
        f(s.delta_z_pct, 4),
        f(s.gap_pct, 4),
        s.ct_s,
        s.nodes
    );
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Solve { strategy, common } => {
            let spec = common.spec(strategy)?;
            validate(&spec)?;
            let net = load_network(&spec)?;
            let (summary, rep) = execute(&spec, &net)?;
            write_artifacts(&common.out_dir, &summary, &rep)?;
            print_summary(&summary);
        }
        Command::Compare { strategies, common } => {
            if strategies.is_empty() {
                return Err(RunError::Usage("no strategies given".into()));
            }
            let first = common.spec(strategies[0])?;
            let net = load_network(&first)?;
            let mut rows = Vec::new();
            for &strategy in &strategies {
                let row = common.spec(strategy).and_then(|spec| {
                    let (summary, rep) = execute(&spec, &net)?;
                    write_artifacts(&common.out_dir.join(strategy.as_str()), &summary, &rep)?;
                    Ok(summary)
                });
                match &row {
                    Ok(s) => print_summary(s),
                    Err(e) => error!("{}: {e}", strategy.as_str()),
                }
                rows.push((strategy, row.map_err(|e| e.to_string())));
            }
            let name = first.case.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            fs::create_dir_all(&common.out_dir).map_err(|e| RunError::Internal(e.to_string()))?;
            let md = compare_markdown(&name, &rows);
            fs::write(common.out_dir.join("compare.md"), &md).map_err(|e| RunError::Internal(e.to_string()))?;
            fs::write(common.out_dir.join("compare.csv"), compare_csv(&rows))
                .map_err(|e| RunError::Internal(e.to_string()))?;
            print!("{md}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDSWITCH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
