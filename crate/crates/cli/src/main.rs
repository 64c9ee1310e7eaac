mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use brodylab::curves::Verdict;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use experiments::{find, RunError, REGISTRY};
use report::ExperimentReport;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "brodylab", version, about = "Numerical experiments on Brody curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered experiments with their anchor statements.
    List {
        /// Also print every parameter with its default.
        #[arg(long)]
        params: bool,
    },
    /// Run one experiment.
    Run {
        experiment: String,
        /// Flat `key = value` config; defaults apply to absent keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BRODYLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("BRODYLAB_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn list(params: bool) {
    for e in REGISTRY {
        println!("{:<24} {}", e.name, e.anchor);
        println!("{:<24} {}", "", e.summary);
        if params {
            for p in (e.params)() {
                println!("{:<26} {} = {}  # {}", "", p.key, p.default, p.help);
            }
        }
    }
}

fn run(name: &str, config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let usage = |msg: String| {
        eprintln!("brodylab: {msg}");
        ExitCode::from(EXIT_USAGE)
    };
    let Some(exp) = find(name) else {
        let names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        return usage(format!("unknown experiment `{name}`; registered: {}", names.join(", ")));
    };
    let raw = match config.as_deref().map(config::read_file).transpose() {
        Ok(raw) => raw.unwrap_or_default(),
        Err(e) => return usage(e.to_string()),
    };
    let cfg = match ExperimentConfig::resolve(exp.name, &(exp.params)(), raw, seed, out) {
        Ok(cfg) => cfg,
        Err(e) => return usage(e.to_string()),
    };
    let mut rep = ExperimentReport::new(&cfg, exp.anchor);
    let start = Instant::now();
    match (exp.run)(&cfg, &mut rep) {
        Ok(()) => {}
        Err(RunError::Config(e)) => return usage(e.to_string()),
        Err(e) => rep.fail_with(e.to_string()),
    }
    rep.runtime_seconds = start.elapsed().as_secs_f64();
    let path = match rep.write(&cfg.output_dir) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("brodylab: cannot write report: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    for (key, v) in &rep.verdicts {
        let m = rep.metrics[&v.metric];
        println!("{:<13} {:<22} {:.6e} ± {:.2e}  ({})", v.status.as_str(), key, m.value, m.uncertainty, v.criterion);
    }
    if let Some(e) = &rep.error {
        eprintln!("brodylab: {e}");
    }
    println!("report: {}", path.display());
    if rep.overall() == Verdict::Pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("brodylab: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match cli.command {
        Command::List { params } => {
            list(params);
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, seed, out } => run(&experiment, config, seed, out),
    }
}
