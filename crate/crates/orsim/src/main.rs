use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orsim::config::{ExperimentConfig, Profile};
use orsim::explain::explain_selection;
use orsim::runner::{run_sweep, to_aggregate, to_csv, Sweep};
use orsim::selftest::run_selftest;
use orsim_core::graphmodel::{NodeId, Topology};
use orsim_core::simcore::Policy;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(
    name = "orsim",
    version,
    about = "Relay-network opportunistic routing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base parameter set the configuration file is applied to.
    #[arg(long, global = true, default_value = "paper")]
    profile: String,
    /// Added to every configured seed.
    #[arg(long, global = true)]
    seed_base: Option<u64>,
    /// Output directory for sweep files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated policy list overriding the configuration.
    #[arg(long, global = true)]
    policies: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vary the node count at a fixed number of CBR connections.
    Density,
    /// Vary the number of CBR connections at a fixed node count.
    Load,
    /// Print how one sender chooses its relay network.
    Explain {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        sender: usize,
        #[arg(long)]
        destination: usize,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

struct Failure {
    kind: &'static str,
    message: String,
    key: Option<String>,
}

impl Failure {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        Self {
            kind,
            message: message.to_string(),
            key: None,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let profile: Profile = cli.profile.parse().map_err(|e| Failure::new("config", e))?;
    let mut config = ExperimentConfig::profile(profile);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        config = config.apply(&text).map_err(|e| Failure {
            kind: "config",
            key: e.key().map(str::to_string),
            message: e.to_string(),
        })?;
    }
    if let Some(list) = &cli.policies {
        config.policies = list
            .split(',')
            .map(|p| p.parse::<Policy>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure {
                kind: "config",
                key: Some("policies".into()),
                message: e.to_string(),
            })?;
    }
    if let Some(base) = cli.seed_base {
        config = config.with_seed_base(base);
    }
    Ok(config)
}

fn worker_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ORSIM_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::new(
                "env",
                format!("ORSIM_THREADS must be a positive integer, got `{v}`"),
            )
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure::new("env", e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn sweep(cli: &Cli, which: Sweep) -> Result<(), Failure> {
    let config = load_config(cli)?;
    let pool = worker_pool()?;
    let rows = pool.install(|| run_sweep(&config, which));
    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::new("io", format!("{}: {e}", cli.out.display())))?;
    let csv = cli.out.join(format!("{}.csv", which.name()));
    let agg = cli.out.join(format!("{}_agg.dat", which.name()));
    write(&csv, &to_csv(&rows))?;
    write(&agg, &to_aggregate(&rows, which))?;
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "{} rows ({errors} error rows) -> {}",
        rows.len(),
        csv.display()
    );
    println!("aggregates -> {}", agg.display());
    Ok(())
}

fn explain(cli: &Cli, topology: &Path, sender: usize, destination: usize) -> Result<(), Failure> {
    let config = load_config(cli)?;
    let text = fs::read_to_string(topology)
        .map_err(|e| Failure::new("io", format!("{}: {e}", topology.display())))?;
    let topo = Topology::from_node_file(&text, None).map_err(|e| Failure::new("topology", e))?;
    let report = explain_selection(&topo, NodeId(sender), NodeId(destination), &config)
        .map_err(|e| Failure::new("selection", e))?;
    print!("{}", report.text);
    Ok(())
}

fn selftest() -> Result<(), Failure> {
    let checks = run_selftest();
    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::new(
            "selftest",
            format!("{failed} of {} checks failed", checks.len()),
        ));
    }
    Ok(())
}

fn report(f: Failure) -> ExitCode {
    let body = json!({ "error": { "kind": f.kind, "message": f.message, "key": f.key } });
    eprintln!("{body}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Failure::new("usage", e.render().to_string().trim_end())),
    };
    let result = match &cli.command {
        Command::Density => sweep(&cli, Sweep::Density),
        Command::Load => sweep(&cli, Sweep::Load),
        Command::Explain {
            topology,
            sender,
            destination,
        } => explain(&cli, topology, *sender, *destination),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}
