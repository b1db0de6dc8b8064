use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infogeo_cli::{
    run_divergence_check, run_fisher_check, run_geodesic, run_simulate, GlobalOpts,
};

/// Information-geometric sensor management: plan mobile bearing-sensor
/// trajectories by following geodesics of the induced configuration metric.
#[derive(Parser)]
#[command(name = "infogeo-sensor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed override for every randomized component.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path override for the subcommand's primary file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Gauss-Hermite order override (1..=16).
    #[arg(long, global = true)]
    quadrature_order: Option<usize>,

    /// Ridge-regularize Fisher matrices inside quadratures.
    #[arg(long, global = true)]
    ridge: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replanning loop and write the trace CSV (and SVG when
    /// configured in the scenario).
    Simulate {
        /// Scenario file.
        scenario: PathBuf,
    },
    /// Integrate a single geodesic from the scenario's initial
    /// configuration and dump (t, sigma, u, Q-speed) rows.
    Geodesic {
        /// Scenario file.
        scenario: PathBuf,
        /// Integration horizon (defaults to the replan period).
        #[arg(long)]
        horizon: Option<f64>,
        /// RK4 step (defaults to the scenario's ode_step).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Compare the Monte-Carlo Fisher estimate against the closed form at
    /// the prior mean; exit 0 iff the relative error is below 1%.
    FisherCheck {
        /// Scenario file providing geometry, model and prior.
        #[arg(long)]
        scenario: PathBuf,
        /// Concentration override.
        #[arg(long)]
        kappa: Option<f64>,
        /// Monte-Carlo sample count.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Verify that both divergence Hessians equal half the metric-space
    /// inner product on seeded random fields; exit 0 iff within 1e-4.
    DivergenceCheck {
        /// Optional scenario supplying the prior.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Number of seeded random field pairs.
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("INFOGEO_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Results are invariant to the worker count: all parallel
                // reductions happen in fixed chunk order.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("INFOGEO_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    let opts = GlobalOpts {
        seed: cli.seed,
        output: cli.output,
        quadrature_order: cli.quadrature_order,
        ridge: cli.ridge,
    };
    let result = match &cli.command {
        Command::Simulate { scenario } => run_simulate(scenario, &opts),
        Command::Geodesic {
            scenario,
            horizon,
            step,
        } => run_geodesic(scenario, *horizon, *step, &opts),
        Command::FisherCheck {
            scenario,
            kappa,
            samples,
        } => run_fisher_check(scenario, *kappa, *samples, &opts),
        Command::DivergenceCheck { scenario, trials } => {
            run_divergence_check(scenario.as_deref(), *trials, &opts)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
