//! End-to-end experiment sweeps.
//!
//! A sweep fixes all simulator parameters but one (STP, LPP, NIP, or the
//! mining support), generates a fresh topology and agent population per
//! replication, reconstructs with all four heuristics, and reports accuracy
//! per grid cell as CSV. Every intermediate artifact (topology file, CLF log,
//! session files, pattern files) is persisted under a content-addressed run
//! directory, so any result row can be recomputed from disk. Runs are fully
//! reproducible from (config, seed); identical configs land in the same run
//! directory and are simply recomputed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clf::{group_by_user, parse_clf_file, write_clf_file, ParseOptions, UserStream};
use crate::eval::{pattern_accuracy, session_accuracy, EvalError};
use crate::miner::{save_patterns, sequential_apriori, MinerError, MiningParams, Pattern};
use crate::reconstruct::{
    reconstruct_all, Heuristic, ReconstructError, ReconstructionParams,
};
use crate::seeds::derive_seed;
use crate::session::{save_sessions, Session};
use crate::simulator::{simulate, RealSession, SimError, SimulationParams};
use crate::topology::{
    generate_random_topology, save_topology, TopologyError, TopologyGenParams, WebTopology,
};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: u64,
        message: String,
    },
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptVar {
    Stp,
    Lpp,
    Nip,
    MinSupport,
}

impl std::fmt::Display for SweptVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweptVar::Stp => "stp",
            SweptVar::Lpp => "lpp",
            SweptVar::Nip => "nip",
            SweptVar::MinSupport => "min_support",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SweptVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stp" => Ok(SweptVar::Stp),
            "lpp" => Ok(SweptVar::Lpp),
            "nip" => Ok(SweptVar::Nip),
            "min_support" => Ok(SweptVar::MinSupport),
            other => Err(format!(
                "unknown swept variable {other:?} (expected stp, lpp, nip or min_support)"
            )),
        }
    }
}

/// The STP/LPP/NIP combinations of the eight pattern-phase experiments.
pub fn experiment_preset(no: u8) -> Option<(f64, f64, f64)> {
    const TABLE: [(f64, f64, f64); 8] = [
        (0.10, 0.20, 0.20),
        (0.10, 0.20, 0.40),
        (0.10, 0.40, 0.20),
        (0.10, 0.40, 0.40),
        (0.20, 0.20, 0.20),
        (0.20, 0.20, 0.40),
        (0.20, 0.40, 0.20),
        (0.20, 0.40, 0.40),
    ];
    (1..=8).contains(&no).then(|| TABLE[no as usize - 1])
}

/// Flat key=value experiment description; one swept variable, fixed values
/// for everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: SweptVar,
    pub values: Vec<f64>,
    pub n_pages: usize,
    pub avg_outdegree: f64,
    pub entry_fraction: f64,
    pub stp: f64,
    pub lpp: f64,
    pub nip: f64,
    pub mean_stay_secs: f64,
    pub sd_stay_secs: f64,
    pub max_gap_secs: i64,
    pub n_agents: usize,
    pub rho_secs: i64,
    pub delta_secs: i64,
    pub min_support: f64,
    pub strict_support: bool,
    /// Pattern-phase preset 1–8; when set it fixes stp/lpp/nip.
    pub experiment: Option<u8>,
    pub replications: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sweep: SweptVar::Stp,
            values: vec![0.01, 0.05, 0.10, 0.20],
            n_pages: 300,
            avg_outdegree: 15.0,
            entry_fraction: 0.05,
            stp: 0.05,
            lpp: 0.30,
            nip: 0.30,
            mean_stay_secs: 132.0,
            sd_stay_secs: 30.0,
            max_gap_secs: 600,
            n_agents: 10_000,
            rho_secs: 600,
            delta_secs: 1800,
            min_support: 0.05,
            strict_support: false,
            experiment: None,
            replications: 5,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, RunnerError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses the flat `key = value` format; `#` starts a comment. Unknown
    /// keys are errors so typos cannot silently fall back to defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self, RunnerError> {
        let mut cfg = ExperimentConfig::default();
        let err = |line: u64, message: String| RunnerError::Config {
            path: origin.to_string(),
            line,
            message,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| err(line_no, format!("bad {what} value {value:?}"));
            match key {
                "sweep" => cfg.sweep = value.parse().map_err(|e: String| err(line_no, e))?,
                "values" => {
                    cfg.values = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("values"))?;
                }
                "n_pages" => cfg.n_pages = value.parse().map_err(|_| bad("n_pages"))?,
                "avg_outdegree" => {
                    cfg.avg_outdegree = value.parse().map_err(|_| bad("avg_outdegree"))?
                }
                "entry_fraction" => {
                    cfg.entry_fraction = value.parse().map_err(|_| bad("entry_fraction"))?
                }
                "stp" => cfg.stp = value.parse().map_err(|_| bad("stp"))?,
                "lpp" => cfg.lpp = value.parse().map_err(|_| bad("lpp"))?,
                "nip" => cfg.nip = value.parse().map_err(|_| bad("nip"))?,
                "mean_stay_secs" => {
                    cfg.mean_stay_secs = value.parse().map_err(|_| bad("mean_stay_secs"))?
                }
                "sd_stay_secs" => {
                    cfg.sd_stay_secs = value.parse().map_err(|_| bad("sd_stay_secs"))?
                }
                "max_gap_secs" => {
                    cfg.max_gap_secs = value.parse().map_err(|_| bad("max_gap_secs"))?
                }
                "n_agents" => cfg.n_agents = value.parse().map_err(|_| bad("n_agents"))?,
                "rho_secs" => cfg.rho_secs = value.parse().map_err(|_| bad("rho_secs"))?,
                "delta_secs" => cfg.delta_secs = value.parse().map_err(|_| bad("delta_secs"))?,
                "min_support" => {
                    cfg.min_support = value.parse().map_err(|_| bad("min_support"))?
                }
                "strict_support" => {
                    cfg.strict_support = value.parse().map_err(|_| bad("strict_support"))?
                }
                "experiment" => {
                    cfg.experiment = Some(value.parse().map_err(|_| bad("experiment"))?)
                }
                "replications" => {
                    cfg.replications = value.parse().map_err(|_| bad("replications"))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                other => return Err(err(line_no, format!("unknown key {other:?}"))),
            }
        }
        if let Some(no) = cfg.experiment {
            let (stp, lpp, nip) = experiment_preset(no).ok_or_else(|| {
                RunnerError::InvalidConfig(format!("experiment must be 1..=8, got {no}"))
            })?;
            cfg.stp = stp;
            cfg.lpp = lpp;
            cfg.nip = nip;
        }
        Ok(cfg)
    }

    /// Canonical rendering; hashing this yields the run directory name.
    pub fn canonical_text(&self) -> String {
        let values: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("sweep", self.sweep.to_string());
        kv("values", values.join(","));
        kv("n_pages", self.n_pages.to_string());
        kv("avg_outdegree", self.avg_outdegree.to_string());
        kv("entry_fraction", self.entry_fraction.to_string());
        kv("stp", self.stp.to_string());
        kv("lpp", self.lpp.to_string());
        kv("nip", self.nip.to_string());
        kv("mean_stay_secs", self.mean_stay_secs.to_string());
        kv("sd_stay_secs", self.sd_stay_secs.to_string());
        kv("max_gap_secs", self.max_gap_secs.to_string());
        kv("n_agents", self.n_agents.to_string());
        kv("rho_secs", self.rho_secs.to_string());
        kv("delta_secs", self.delta_secs.to_string());
        kv("min_support", self.min_support.to_string());
        kv("strict_support", self.strict_support.to_string());
        if let Some(no) = self.experiment {
            kv("experiment", no.to_string());
        }
        kv("replications", self.replications.to_string());
        kv("seed", self.seed.to_string());
        out
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let invalid = |msg: String| Err(RunnerError::InvalidConfig(msg));
        if self.values.is_empty() {
            return invalid("values must not be empty".into());
        }
        if self.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("swept values must lie in [0,1]".into());
        }
        if self.sweep == SweptVar::MinSupport && self.values.iter().any(|&v| v <= 0.0) {
            return invalid("min_support values must be positive".into());
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1".into());
        }
        if self.n_agents == 0 {
            return invalid("n_agents must be at least 1".into());
        }
        if self.rho_secs <= 0 || self.rho_secs > self.delta_secs {
            return invalid("need 0 < rho_secs <= delta_secs".into());
        }
        for &value in &self.values {
            let (lpp, nip) = match self.sweep {
                SweptVar::Lpp => (value, self.nip),
                SweptVar::Nip => (self.lpp, value),
                _ => (self.lpp, self.nip),
            };
            if lpp + nip > 1.0 {
                return invalid(format!(
                    "lpp + nip must stay <= 1 at every swept point (got {lpp} + {nip})"
                ));
            }
        }
        Ok(())
    }

    fn simulation_params(&self, swept_value: f64, seed: u64) -> SimulationParams {
        let mut p = SimulationParams {
            stp: self.stp,
            lpp: self.lpp,
            nip: self.nip,
            mean_stay_secs: self.mean_stay_secs,
            sd_stay_secs: self.sd_stay_secs,
            max_gap_secs: self.max_gap_secs,
            n_agents: self.n_agents,
            seed,
        };
        match self.sweep {
            SweptVar::Stp => p.stp = swept_value,
            SweptVar::Lpp => p.lpp = swept_value,
            SweptVar::Nip => p.nip = swept_value,
            SweptVar::MinSupport => {}
        }
        p
    }

    fn reconstruction_params(&self, heuristic: Heuristic) -> ReconstructionParams {
        ReconstructionParams {
            page_stay_rho_secs: self.rho_secs,
            session_delta_secs: self.delta_secs,
            heuristic,
        }
    }
}

/// One grid-cell outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub swept_var: SweptVar,
    pub value: f64,
    pub heuristic: Heuristic,
    pub replication: u32,
    pub session_accuracy: f64,
    pub pattern_accuracy: Option<f64>,
    pub runtime_ms: u64,
}

pub const RESULTS_CSV_HEADER: &str =
    "swept_var,value,heuristic,replication,session_accuracy,pattern_accuracy,runtime_ms";

impl ResultRow {
    pub fn csv_row(&self) -> String {
        let pattern = self
            .pattern_accuracy
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{:.6},{},{}",
            self.swept_var,
            self.value,
            self.heuristic,
            self.replication,
            self.session_accuracy,
            pattern,
            self.runtime_ms
        )
    }
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> std::io::Result<()> {
    let mut out = String::from(RESULTS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    fs::write(path, out)
}

/// A finished run: where the artifacts live and the result table.
#[derive(Debug)]
pub struct RunOutput {
    pub run_dir: PathBuf,
    pub rows: Vec<ResultRow>,
}

/// Runs the sweep the config describes: a session-accuracy sweep for
/// stp/lpp/nip, a pattern-accuracy sweep for min_support.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunnerError> {
    cfg.validate()?;
    let canonical = cfg.canonical_text();
    let digest = Sha256::digest(canonical.as_bytes());
    let tag: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    let run_dir = out_dir.join(format!("run-{tag}"));
    fs::create_dir_all(&run_dir)?;
    fs::write(run_dir.join("config.txt"), &canonical)?;

    let rows = match cfg.sweep {
        SweptVar::MinSupport => run_pattern_sweep(cfg, &run_dir)?,
        _ => run_session_sweep(cfg, &run_dir)?,
    };
    write_results_csv(&run_dir.join("results.csv"), &rows)?;
    Ok(RunOutput { run_dir, rows })
}

struct CellSim {
    topology: WebTopology,
    real: Vec<RealSession>,
    streams: Vec<UserStream>,
}

/// Generates topology and agents for one grid cell, persists the artifacts,
/// and re-reads the log through the CLF parser so the pipeline under test is
/// exactly the file-level one.
fn prepare_cell(
    cfg: &ExperimentConfig,
    swept_value: f64,
    cell_seed: u64,
    cell_dir: &Path,
) -> Result<CellSim, RunnerError> {
    fs::create_dir_all(cell_dir)?;
    let topology = generate_random_topology(&TopologyGenParams {
        n_pages: cfg.n_pages,
        avg_outdegree: cfg.avg_outdegree,
        entry_fraction: cfg.entry_fraction,
        seed: derive_seed(cell_seed, 0),
    })?;
    let sim = cfg.simulation_params(swept_value, derive_seed(cell_seed, 1));
    let (real, log) = simulate(&topology, &sim)?;

    save_topology(&topology, &cell_dir.join("topology.txt"))?;
    write_clf_file(&cell_dir.join("access.log"), &log.entries)?;
    let real_as_sessions: Vec<Session> = real.iter().map(|r| r.to_session()).collect();
    save_sessions(&cell_dir.join("real_sessions.txt"), &real_as_sessions)?;

    let report = parse_clf_file(&cell_dir.join("access.log"), &ParseOptions::default())?;
    debug_assert!(report.diagnostics.is_empty(), "synthetic logs parse cleanly");
    let streams = group_by_user(report.entries);
    Ok(CellSim {
        topology,
        real,
        streams,
    })
}

/// Simulate → reconstruct (all four heuristics) → session accuracy, for each
/// swept value × replication. Cells run in parallel; row order is
/// deterministic (value-major, then replication, then heuristic).
pub fn run_session_sweep(
    cfg: &ExperimentConfig,
    run_dir: &Path,
) -> Result<Vec<ResultRow>, RunnerError> {
    let cells: Vec<(usize, u32)> = (0..cfg.values.len())
        .flat_map(|vi| (0..cfg.replications).map(move |rep| (vi, rep)))
        .collect();
    let nested: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|&(vi, rep)| -> Result<Vec<ResultRow>, RunnerError> {
            let value = cfg.values[vi];
            let cell_seed = derive_seed(cfg.seed, (vi as u64) << 24 | rep as u64);
            let cell_dir = run_dir.join(format!("{}={}_rep{}", cfg.sweep, value, rep));
            let cell = prepare_cell(cfg, value, cell_seed, &cell_dir)?;
            let mut rows = Vec::with_capacity(Heuristic::ALL.len());
            for heuristic in Heuristic::ALL {
                let start = Instant::now();
                let recon = reconstruct_all(
                    &cell.streams,
                    &cell.topology,
                    &cfg.reconstruction_params(heuristic),
                );
                let accuracy = session_accuracy(&cell.real, &recon)?;
                let runtime_ms = start.elapsed().as_millis() as u64;
                save_sessions(&cell_dir.join(format!("recon_{heuristic}.txt")), &recon)?;
                rows.push(ResultRow {
                    swept_var: cfg.sweep,
                    value,
                    heuristic,
                    replication: rep,
                    session_accuracy: accuracy,
                    pattern_accuracy: None,
                    runtime_ms,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Like the session sweep, but the swept variable is the mining support:
/// per replication one simulation and one reconstruction per heuristic, then
/// pattern mining of both the real and the reconstructed sessions per support
/// value, scored with the pattern-accuracy ratio.
pub fn run_pattern_sweep(
    cfg: &ExperimentConfig,
    run_dir: &Path,
) -> Result<Vec<ResultRow>, RunnerError> {
    let reps: Vec<u32> = (0..cfg.replications).collect();
    let nested: Vec<Vec<ResultRow>> = reps
        .par_iter()
        .map(|&rep| -> Result<Vec<ResultRow>, RunnerError> {
            let cell_seed = derive_seed(cfg.seed, rep as u64);
            let cell_dir = run_dir.join(format!("rep{rep}"));
            let cell = prepare_cell(cfg, cfg.min_support, cell_seed, &cell_dir)?;
            let real_sessions: Vec<Session> =
                cell.real.iter().map(|r| r.to_session()).collect();

            let mut recon: Vec<(Heuristic, Vec<Session>, f64)> = Vec::new();
            for heuristic in Heuristic::ALL {
                let sessions = reconstruct_all(
                    &cell.streams,
                    &cell.topology,
                    &cfg.reconstruction_params(heuristic),
                );
                let accuracy = session_accuracy(&cell.real, &sessions)?;
                save_sessions(&cell_dir.join(format!("recon_{heuristic}.txt")), &sessions)?;
                recon.push((heuristic, sessions, accuracy));
            }

            let mut rows = Vec::new();
            for &min_support in &cfg.values {
                let mining = MiningParams {
                    min_support,
                    max_length: None,
                    strict: cfg.strict_support,
                };
                let truth: Vec<Pattern> = sequential_apriori(
                    &mining,
                    &real_sessions,
                    &cell.topology,
                    cell.topology.pages(),
                )?;
                save_patterns(
                    &cell_dir.join(format!("patterns_real_ms{min_support}.txt")),
                    &truth,
                )?;
                for (heuristic, sessions, session_acc) in &recon {
                    let start = Instant::now();
                    let found = sequential_apriori(
                        &mining,
                        sessions,
                        &cell.topology,
                        cell.topology.pages(),
                    )?;
                    let accuracy = pattern_accuracy(&truth, &found)?;
                    let runtime_ms = start.elapsed().as_millis() as u64;
                    save_patterns(
                        &cell_dir.join(format!("patterns_{heuristic}_ms{min_support}.txt")),
                        &found,
                    )?;
                    rows.push(ResultRow {
                        swept_var: SweptVar::MinSupport,
                        value: min_support,
                        heuristic: *heuristic,
                        replication: rep,
                        session_accuracy: *session_acc,
                        pattern_accuracy: Some(accuracy),
                        runtime_ms,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<ResultRow> = nested.into_iter().flatten().collect();
    let value_index = |v: f64| cfg.values.iter().position(|&x| x == v).unwrap_or(usize::MAX);
    let heuristic_index =
        |h: Heuristic| Heuristic::ALL.iter().position(|&x| x == h).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (value_index(r.value), r.replication, heuristic_index(r.heuristic)));
    Ok(rows)
}
