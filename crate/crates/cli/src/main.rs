use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hidsym_cli::output::Format;
use hidsym_cli::report::RunReport;
use hidsym_cli::{run_scenario, sweep_scenario, Options};

#[derive(Parser)]
#[command(name = "hidsym", version, about = "Run hidden-symmetry scenarios and check their invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Multiply every upper threshold (and divide every lower one) by this factor
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Override the scenario seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (beats HIDSYM_OUT and the scenario)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; trajectories are always CSV
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario
    Run { file: PathBuf },
    /// Run a scenario over a parameter grid such as "g=1,2;p_y=0.5,1"
    Sweep {
        file: PathBuf,
        #[arg(long)]
        grid: Option<String>,
    },
}

fn print_run(r: &RunReport) {
    let point = r.point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    println!("{} [{}] {}", r.scenario, point, r.status.label());
    for c in &r.checks {
        let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let detail = c.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default();
        println!("  {:<6} {:<32} value {:>10}  threshold {:.1e}  {:.3}s{detail}", c.status.label(), c.name, value, c.threshold, c.wall_time_s);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let opts = Options { seed: cli.seed, tol_scale: cli.tol_scale, out: cli.out.as_deref(), format: cli.format };
    let passed = match &cli.command {
        Command::Run { file } => run_scenario(file, &opts).map(|r| {
            print_run(&r);
            r.passed()
        }),
        Command::Sweep { file, grid } => sweep_scenario(file, grid.as_deref(), &opts).map(|s| {
            for r in &s.runs {
                print_run(r);
            }
            println!("sweep {}: {} points, {}", s.scenario, s.runs.len(), s.status.label());
            s.passed()
        }),
    };
    match passed {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hidsym: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
