//! `webmine` — sessionization and navigation-pattern mining from the command
//! line. Exit codes: 0 success, 1 usage error, 2 data/format error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use webmine::clf::{group_by_user, parse_clf_file, write_clf_file, ParseOptions};
use webmine::eval::{
    pattern_accuracy, session_accuracy, AccuracyReport, ACCURACY_CSV_HEADER,
};
use webmine::miner::{load_patterns, save_patterns, sequential_apriori, MiningParams};
use webmine::reconstruct::{reconstruct_all, Heuristic, ReconstructionParams};
use webmine::runner::{run_experiment, ExperimentConfig};
use webmine::session::{load_sessions, save_sessions, Session};
use webmine::simulator::{simulate, RealSession, SimulationParams};
use webmine::topology::{
    generate_random_topology, load_topology, save_topology, TopologyGenParams,
};

#[derive(Parser)]
#[command(name = "webmine", version, about = "Web usage mining toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random site topology
    GenTopology(GenTopologyArgs),
    /// Simulate web agents over a topology, emitting a CLF log and the
    /// ground-truth sessions
    Simulate(SimulateArgs),
    /// Reconstruct sessions from a CLF access log
    Reconstruct(ReconstructArgs),
    /// Mine maximal frequent navigation patterns from a session file
    Mine(MineArgs),
    /// Score reconstructed sessions (and optionally mined patterns) against
    /// ground truth
    Evaluate(EvaluateArgs),
    /// Run a full experiment sweep from a config file
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenTopologyArgs {
    #[arg(long, default_value_t = 300)]
    pages: usize,
    #[arg(long, default_value_t = 15.0)]
    avg_outdegree: f64,
    #[arg(long, default_value_t = 0.05)]
    entry_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output topology file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Topology file to navigate
    #[arg(long)]
    topology: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    stp: f64,
    #[arg(long, default_value_t = 0.30)]
    lpp: f64,
    #[arg(long, default_value_t = 0.30)]
    nip: f64,
    /// Mean page-stay time in seconds
    #[arg(long, default_value_t = 132.0)]
    mean_stay: f64,
    /// Page-stay standard deviation in seconds
    #[arg(long, default_value_t = 30.0)]
    sd_stay: f64,
    /// Maximum inter-request gap in seconds
    #[arg(long, default_value_t = 600)]
    max_gap: i64,
    #[arg(long, default_value_t = 10_000)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the server log (CLF)
    #[arg(long)]
    log_out: PathBuf,
    /// Where to write the ground-truth sessions
    #[arg(long)]
    sessions_out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// CLF access log (plain or .gz)
    #[arg(long)]
    log: PathBuf,
    /// Topology file (needed by the no and ssra heuristics)
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    heuristic: Heuristic,
    /// Page-stay threshold rho in seconds
    #[arg(long, default_value_t = 600)]
    rho: i64,
    /// Session-duration threshold delta in seconds
    #[arg(long, default_value_t = 1800)]
    delta: i64,
    /// Output session file
    #[arg(long)]
    out: PathBuf,
    /// Where to write skip/malformed-line diagnostics (default: stderr)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    /// Session file to mine
    #[arg(long)]
    sessions: PathBuf,
    /// Topology file providing the link matrix and page universe
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    min_support: f64,
    /// Use a strict > comparison against min_support instead of >=
    #[arg(long, default_value_t = false)]
    strict: bool,
    /// Cap on pattern length (default: longest session)
    #[arg(long)]
    max_length: Option<usize>,
    /// Output pattern file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth session file (as written by `simulate`)
    #[arg(long)]
    real: PathBuf,
    /// Reconstructed session file
    #[arg(long)]
    recon: PathBuf,
    /// Ground-truth pattern file (enables pattern accuracy)
    #[arg(long, requires = "found_patterns")]
    real_patterns: Option<PathBuf>,
    /// Mined pattern file to score
    #[arg(long, requires = "real_patterns")]
    found_patterns: Option<PathBuf>,
    /// Heuristic label to echo in the report
    #[arg(long, default_value = "unknown")]
    label: String,
    /// Where to write the CSV report (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file (flat key = value format)
    #[arg(long)]
    config: PathBuf,
    /// Directory for run artifacts and results.csv
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTopology(args) => gen_topology(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Reconstruct(args) => run_reconstruct(args),
        Command::Mine(args) => run_mine(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Experiment(args) => run_experiment_cmd(args),
    }
}

fn gen_topology(args: GenTopologyArgs) -> Result<()> {
    let topology = generate_random_topology(&TopologyGenParams {
        n_pages: args.pages,
        avg_outdegree: args.avg_outdegree,
        entry_fraction: args.entry_fraction,
        seed: args.seed,
    })?;
    save_topology(&topology, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} pages, {} links, {} entry pages to {}",
        topology.n_pages(),
        topology.edge_count(),
        topology.entry_indices().len(),
        args.out.display()
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let topology = load_topology(&args.topology)
        .with_context(|| format!("loading {}", args.topology.display()))?;
    let params = SimulationParams {
        stp: args.stp,
        lpp: args.lpp,
        nip: args.nip,
        mean_stay_secs: args.mean_stay,
        sd_stay_secs: args.sd_stay,
        max_gap_secs: args.max_gap,
        n_agents: args.agents,
        seed: args.seed,
    };
    let (real, log) = simulate(&topology, &params)?;
    write_clf_file(&args.log_out, &log.entries)
        .with_context(|| format!("writing {}", args.log_out.display()))?;
    let sessions: Vec<Session> = real.iter().map(|r| r.to_session()).collect();
    save_sessions(&args.sessions_out, &sessions)
        .with_context(|| format!("writing {}", args.sessions_out.display()))?;
    eprintln!(
        "simulated {} agents: {} real sessions, {} log entries",
        args.agents,
        sessions.len(),
        log.entries.len()
    );
    Ok(())
}

fn run_reconstruct(args: ReconstructArgs) -> Result<()> {
    let topology = load_topology(&args.topology)
        .with_context(|| format!("loading {}", args.topology.display()))?;
    let report = parse_clf_file(&args.log, &ParseOptions::default())
        .with_context(|| format!("reading {}", args.log.display()))?;

    // Diagnostics go to a side channel, never into the session output.
    match &args.report {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            for d in &report.diagnostics {
                writeln!(w, "{d}")?;
            }
        }
        None => {
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
        }
    }

    let params = ReconstructionParams {
        page_stay_rho_secs: args.rho,
        session_delta_secs: args.delta,
        heuristic: args.heuristic,
    };
    params.validate()?;
    let streams = group_by_user(report.entries);
    let sessions = reconstruct_all(&streams, &topology, &params);
    save_sessions(&args.out, &sessions)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "reconstructed {} sessions from {} user streams ({} heuristic)",
        sessions.len(),
        streams.len(),
        args.heuristic
    );
    Ok(())
}

fn run_mine(args: MineArgs) -> Result<()> {
    let topology = load_topology(&args.topology)
        .with_context(|| format!("loading {}", args.topology.display()))?;
    let sessions = load_sessions(&args.sessions)
        .with_context(|| format!("loading {}", args.sessions.display()))?;
    let params = MiningParams {
        min_support: args.min_support,
        max_length: args.max_length,
        strict: args.strict,
    };
    let patterns = sequential_apriori(&params, &sessions, &topology, topology.pages())?;
    save_patterns(&args.out, &patterns)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "mined {} maximal patterns from {} sessions at min_support {}",
        patterns.len(),
        sessions.len(),
        args.min_support
    );
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let real_sessions = load_sessions(&args.real)
        .with_context(|| format!("loading {}", args.real.display()))?;
    let real: Vec<RealSession> = real_sessions
        .iter()
        .map(|s| RealSession {
            agent_id: s.source_user.parse().unwrap_or(0),
            pages: s.pages.clone(),
        })
        .collect();
    let recon = load_sessions(&args.recon)
        .with_context(|| format!("loading {}", args.recon.display()))?;

    let session_acc = session_accuracy(&real, &recon)?;
    let (pattern_acc, n_true, n_found) = match (&args.real_patterns, &args.found_patterns) {
        (Some(truth_path), Some(found_path)) => {
            let truth = load_patterns(truth_path)?;
            let found = load_patterns(found_path)?;
            (
                Some(pattern_accuracy(&truth, &found)?),
                truth.len(),
                found.len(),
            )
        }
        _ => (None, 0, 0),
    };

    let report = AccuracyReport {
        heuristic: args.label.clone(),
        session_accuracy: session_acc,
        pattern_accuracy: pattern_acc,
        n_real_sessions: real.len(),
        n_reconstructed: recon.len(),
        n_true_patterns: n_true,
        n_found_patterns: n_found,
        params_echo: format!(
            "real={};recon={}",
            args.real.display(),
            args.recon.display()
        ),
    };
    let text = format!("{ACCURACY_CSV_HEADER}\n{}\n", report.csv_row());
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if args.out_dir.as_os_str().is_empty() {
        bail!("out_dir must not be empty");
    }
    let output = run_experiment(&cfg, &args.out_dir)?;
    eprintln!(
        "wrote {} result rows to {}",
        output.rows.len(),
        output.run_dir.join("results.csv").display()
    );
    println!("{}", output.run_dir.display());
    Ok(())
}
