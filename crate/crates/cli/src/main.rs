//! `msgossip`: generate graphs, run experiments, print predictions.
//!
//! Exit codes: 0 when every run completed, 1 when any run or I/O step
//! failed, 2 for unusable arguments or config files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msgossip::harness::{run_experiment, write_report, Algorithm, ExperimentConfig, ExperimentId, InitMode};
use msgossip::partition::RepPolicy;
use msgossip::{theory, Error, GeoGraph};

#[derive(Parser)]
#[command(
    name = "msgossip",
    version,
    about = "Multiscale gossip experiments on random geometric graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a connected random geometric graph to a JSON fixture.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment from its desk-scale preset, with overrides.
    Run(Box<RunArgs>),
    /// Run the experiment described by a JSON config file.
    Sweep {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the analytical predictions as JSON.
    Predict {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        a: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// levels_sweep, vs_baselines, cdf, handshake_sweep, loss, heatmap,
    /// node_util or scaling_fit.
    experiment: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Use seeds 0..count.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    seed_list: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// uniform or spike.
    #[arg(long)]
    init: Option<String>,
    /// Elect representatives at random instead of nearest the cell centre.
    #[arg(long)]
    random_reps: bool,
    #[arg(long)]
    runs_per_graph: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl RunArgs {
    fn config(self) -> Result<ExperimentConfig, Error> {
        let id: ExperimentId = self.experiment.parse()?;
        let mut c = ExperimentConfig::preset(id);
        if !self.n.is_empty() {
            c.n = self.n;
        }
        if let Some(count) = self.seeds {
            c.seeds = (0..count).collect();
        }
        if !self.seed_list.is_empty() {
            c.seeds = self.seed_list;
        }
        if !self.k.is_empty() {
            c.k = self.k;
        }
        if !self.p.is_empty() {
            c.p = self.p;
        }
        if !self.algorithms.is_empty() {
            c.algorithms = self
                .algorithms
                .iter()
                .map(|s| s.parse::<Algorithm>())
                .collect::<Result<_, _>>()?;
        }
        c.epsilon = self.epsilon.unwrap_or(c.epsilon);
        c.a = self.a.unwrap_or(c.a);
        c.c = self.c.unwrap_or(c.c);
        if let Some(init) = self.init {
            c.init = match init.as_str() {
                "uniform" => InitMode::Uniform,
                "spike" => InitMode::Spike,
                other => return Err(Error::Config(format!("unknown init mode '{other}'"))),
            };
        }
        if self.random_reps {
            c.rep_policy = RepPolicy::Random;
        }
        c.runs_per_graph = self.runs_per_graph.unwrap_or(c.runs_per_graph);
        c.workers = self.workers.or(c.workers);
        c.output_dir = self.out;
        c.validate()?;
        Ok(c)
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter(_))
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    let report = match run_experiment(cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let written = match write_report(&report, &cfg.output_dir) {
        Ok(w) => w,
        Err(e) => return fail(e),
    };
    for p in &written {
        println!("wrote {}", p.display());
    }
    println!(
        "{}: {} runs, {} failed, {} budget-limited, {} hop-ceiling violations",
        report.experiment,
        report.rows.len(),
        report.failures.len(),
        report.budget_exhausted.len(),
        report.hop_check.violations.len()
    );
    for f in &report.failures {
        eprintln!(
            "run failed: {} n={} p={} seed={}: {}",
            f.algorithm, f.n, f.p, f.seed, f.message
        );
    }
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { n, c, seed, out } => match GeoGraph::generate_connected(n, c, seed, 100) {
            Ok(g) => match g.save(&out) {
                Ok(()) => {
                    println!("wrote {} (n={}, radius={:.6})", out.display(), g.n, g.radius);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            },
            Err(e) => fail(e),
        },
        Command::Run(args) => match args.config() {
            Ok(cfg) => execute(&cfg),
            Err(e) => fail(e),
        },
        Command::Sweep { config, out, workers } => match ExperimentConfig::load(&config) {
            Ok(mut cfg) => {
                if let Some(out) = out {
                    cfg.output_dir = out;
                }
                cfg.workers = workers.or(cfg.workers);
                execute(&cfg)
            }
            Err(e) => fail(e),
        },
        Command::Predict { n, k, epsilon, a } => {
            let body = theory::predict(n, k, epsilon, a).and_then(|p| {
                let optimum = if k >= 2 {
                    Some(theory::optimal_subdivision(k)?)
                } else {
                    None
                };
                Ok(serde_json::json!({ "prediction": p, "optimal_subdivision": optimum }))
            });
            match body {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
