use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use pesmc::benchmarks::{known_optimum, make_function};
use pesmc::harness::{self, Algorithm, BenchPlan};
use pesmc::levelset::level_set_mass;

#[derive(Parser)]
#[command(name = "pesmc", version, about = "PE-SMC global optimizer and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization.
    Run {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value = "pe-smc")]
        algo: String,
        /// Sample size (defaults by dimension).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        ness_threshold: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Execute a JSON benchmark plan.
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List the registered test functions.
    ListFunctions,
    /// Mass of the annealed target on an ε-level set (2-D quadrature).
    Levelset {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 801)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> pesmc::Result<ExitCode> {
    match cli.command {
        Command::Run {
            function,
            dim,
            algo,
            samples,
            seed,
            lambda1,
            beta,
            ness_threshold,
            max_iters,
            trace,
        } => {
            let algo: Algorithm = algo.parse()?;
            let mut overrides = Map::new();
            let mut set = |k: &str, v: Option<Value>| {
                if let Some(v) = v {
                    overrides.insert(k.to_string(), v);
                }
            };
            set("n_samples", samples.map(Value::from));
            set("max_iters", max_iters.map(Value::from));
            if algo == Algorithm::PeSmc {
                set("lambda1", lambda1.map(Value::from));
                set("beta", beta.map(Value::from));
                set("ness_threshold", ness_threshold.map(Value::from));
            } else if lambda1.is_some() || beta.is_some() || ness_threshold.is_some() {
                return Err(pesmc::Error::InvalidConfig(
                    "--lambda1/--beta/--ness-threshold apply to pe-smc only".into(),
                ));
            }
            let result = harness::run_single(&function, dim, algo, seed, &overrides)?;
            if let Some(path) = trace {
                std::fs::write(path, harness::trace_csv(&result.trace))?;
            }
            let x: Vec<String> = result.best_x.iter().map(|v| v.to_string()).collect();
            println!("best_f {}", result.best_f);
            println!("best_x {}", x.join(" "));
            println!("iterations {}", result.iterations);
            println!("evaluations {}", result.evaluations);
            if let Ok((goal, _)) = known_optimum(&function, dim) {
                println!("goal {goal}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { plan, out } => {
            let plan = BenchPlan::load(&plan)?;
            let output = harness::run_bench(&plan)?;
            let (runs, summary) = harness::write_bench(&output, &out)?;
            print!("{}", harness::summary_csv(&output.summary));
            eprintln!("wrote {} and {}", runs.display(), summary.display());
            Ok(if output.all_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::ListFunctions => {
            print!("{}", harness::list_functions());
            Ok(ExitCode::SUCCESS)
        }
        Command::Levelset { function, dim, eps, lambda, grid } => {
            let spec = make_function(&function, dim)?;
            let (f_star, _) = known_optimum(&function, dim)?;
            let mass = level_set_mass(&spec, f_star, lambda, eps, grid)?;
            println!("{mass}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
