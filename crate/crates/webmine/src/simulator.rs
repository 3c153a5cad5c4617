//! Web-user agent simulator.
//!
//! Agents navigate a [`WebTopology`] as a tree of browsing episodes. Each
//! step is one of four behaviors: start at an entry page, follow a link from
//! the current page, back-jump to an earlier page of the episode and follow a
//! link from there, or terminate. The simulator emits both the ground-truth
//! sessions (the root-to-leaf paths of each episode's navigation tree) and
//! the cache-censored server log a web server would actually record: a
//! request for a page already in the episode's cache never reaches the
//! server, and backward movements produce no log entries at all.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::clf::LogEntry;
use crate::page::PageId;
use crate::seeds::derive_seed;
use crate::session::Session;
use crate::topology::WebTopology;
use crate::Timestamp;

/// All simulated agents start within one day of this instant
/// (2000-01-01 00:00:00 UTC).
pub const SIMULATION_EPOCH: Timestamp = 946_684_800;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("page {0} is not in the topology")]
    UnknownPage(String),
    #[error("invalid scripted step: {0}")]
    BadStep(String),
}

/// Tunables of the agent model.
#[derive(Debug, Clone)]
pub struct SimulationParams {
    /// Session termination probability; the chance of ending at the n-th
    /// request is 1 − (1−stp)^n.
    pub stp: f64,
    /// Probability of following a link from an earlier page of the episode
    /// (a backward browser movement).
    pub lpp: f64,
    /// Probability of starting a fresh episode at an entry page.
    pub nip: f64,
    /// Mean page-stay time, seconds.
    pub mean_stay_secs: f64,
    /// Standard deviation of page-stay time, seconds.
    pub sd_stay_secs: f64,
    /// Upper bound on the gap between consecutive requests, seconds.
    pub max_gap_secs: i64,
    pub n_agents: usize,
    pub seed: u64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams {
            stp: 0.05,
            lpp: 0.30,
            nip: 0.30,
            mean_stay_secs: 132.0, // 2.2 min
            sd_stay_secs: 30.0,    // 0.5 min
            max_gap_secs: 600,     // 10 min
            n_agents: 10_000,
            seed: 0,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::InvalidParams(format!("{name} must be in [0,1], got {v}")))
            }
        };
        prob("stp", self.stp)?;
        prob("lpp", self.lpp)?;
        prob("nip", self.nip)?;
        if self.lpp + self.nip > 1.0 {
            return Err(SimError::InvalidParams(format!(
                "lpp + nip must be <= 1, got {}",
                self.lpp + self.nip
            )));
        }
        if self.mean_stay_secs <= 0.0 || self.sd_stay_secs <= 0.0 {
            return Err(SimError::InvalidParams(
                "mean_stay and sd_stay must be positive".into(),
            ));
        }
        if self.mean_stay_secs + 3.0 * self.sd_stay_secs >= self.max_gap_secs as f64 {
            return Err(SimError::InvalidParams(
                "mean_stay + 3*sd_stay must be below max_gap".into(),
            ));
        }
        Ok(())
    }
}

/// Ground-truth session: one root-to-leaf path of an episode's navigation
/// tree. Consecutive pages are hyperlinked, timestamps strictly increase, and
/// no gap exceeds the simulation's max_gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealSession {
    pub agent_id: u32,
    pub pages: Vec<(PageId, Timestamp)>,
}

impl RealSession {
    pub fn page_seq(&self) -> Vec<PageId> {
        self.pages.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn to_session(&self) -> Session {
        Session::new(self.agent_id.to_string(), self.pages.clone())
    }
}

/// The log a web server records: globally timestamp-sorted, cache-censored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerLog {
    pub entries: Vec<LogEntry>,
}

/// Everything one agent produced.
#[derive(Debug, Clone)]
pub struct AgentTrace {
    pub sessions: Vec<RealSession>,
    /// Requests that reached the server, in request order.
    pub log: Vec<(PageId, Timestamp)>,
    /// Index into `log` where each episode's entries begin.
    pub episode_log_starts: Vec<usize>,
}

/// Incremental navigation state of one agent: the current root-to-tip path,
/// the browser cache, and the requests that reached the server.
///
/// The random driver in [`simulate_agent`] and scripted traces in tests go
/// through the same state machine, so censoring and session emission have a
/// single implementation.
pub struct AgentWalk<'t> {
    topology: &'t WebTopology,
    agent_id: u32,
    /// Root-to-tip path of the current episode, page indices with visit times.
    path: Vec<(u32, Timestamp)>,
    cache: HashSet<u32>,
    sessions: Vec<RealSession>,
    log: Vec<(u32, Timestamp)>,
    episode_log_starts: Vec<usize>,
}

impl<'t> AgentWalk<'t> {
    /// Begins the first episode at `entry` (behavior 1). The entry request is
    /// logged and cached.
    pub fn start(
        topology: &'t WebTopology,
        agent_id: u32,
        entry: &PageId,
        at: Timestamp,
    ) -> Result<Self, SimError> {
        let idx = topology
            .index_of(entry)
            .ok_or_else(|| SimError::UnknownPage(entry.to_string()))?;
        let mut walk = AgentWalk {
            topology,
            agent_id,
            path: Vec::new(),
            cache: HashSet::new(),
            sessions: Vec::new(),
            log: Vec::new(),
            episode_log_starts: Vec::new(),
        };
        walk.begin_episode(idx, at);
        Ok(walk)
    }

    fn begin_episode(&mut self, entry_idx: u32, at: Timestamp) {
        // A fresh episode is a fresh browsing context: the cache clears with
        // the navigation tree.
        self.path.clear();
        self.cache.clear();
        self.episode_log_starts.push(self.log.len());
        self.path.push((entry_idx, at));
        self.request(entry_idx, at);
    }

    /// First request for an uncached page reaches the server and is cached;
    /// anything else is served locally and censored from the log.
    fn request(&mut self, idx: u32, at: Timestamp) {
        if self.cache.insert(idx) {
            self.log.push((idx, at));
        }
    }

    fn emit_leaf(&mut self) {
        let pages = self
            .path
            .iter()
            .map(|&(i, t)| (self.topology.page(i).clone(), t))
            .collect();
        self.sessions.push(RealSession {
            agent_id: self.agent_id,
            pages,
        });
    }

    pub fn tip(&self) -> (u32, Timestamp) {
        *self.path.last().expect("path is never empty")
    }

    pub fn path(&self) -> &[(u32, Timestamp)] {
        &self.path
    }

    /// Follow a hyperlink from the current page (behavior 2).
    pub fn follow(&mut self, next: &PageId, at: Timestamp) -> Result<(), SimError> {
        let next_idx = self
            .topology
            .index_of(next)
            .ok_or_else(|| SimError::UnknownPage(next.to_string()))?;
        let (tip_idx, tip_at) = self.tip();
        if !self.topology.has_link_idx(tip_idx, next_idx) {
            return Err(SimError::BadStep(format!(
                "no hyperlink {} -> {}",
                self.topology.page(tip_idx),
                next
            )));
        }
        if at <= tip_at {
            return Err(SimError::BadStep("timestamps must strictly increase".into()));
        }
        self.path.push((next_idx, at));
        self.request(next_idx, at);
        Ok(())
    }

    /// Back-jump to the page at `target_pos` in the current path and follow a
    /// hyperlink from it (behavior 3). The abandoned branch is emitted as a
    /// ground-truth session; the backward movements themselves are served
    /// from the cache and never logged.
    pub fn back_jump(
        &mut self,
        target_pos: usize,
        next: &PageId,
        at: Timestamp,
    ) -> Result<(), SimError> {
        if target_pos + 1 >= self.path.len() {
            return Err(SimError::BadStep(
                "back-jump target must precede the current page".into(),
            ));
        }
        let next_idx = self
            .topology
            .index_of(next)
            .ok_or_else(|| SimError::UnknownPage(next.to_string()))?;
        let (target_idx, _) = self.path[target_pos];
        if !self.topology.has_link_idx(target_idx, next_idx) {
            return Err(SimError::BadStep(format!(
                "no hyperlink {} -> {}",
                self.topology.page(target_idx),
                next
            )));
        }
        let (_, tip_at) = self.tip();
        if at <= tip_at {
            return Err(SimError::BadStep("timestamps must strictly increase".into()));
        }
        self.emit_leaf();
        self.path.truncate(target_pos + 1);
        self.path.push((next_idx, at));
        self.request(next_idx, at);
        Ok(())
    }

    /// Start a fresh episode at an entry page (behavior 1). The previous
    /// episode's final branch is emitted and the cache is cleared.
    pub fn new_episode(&mut self, entry: &PageId, at: Timestamp) -> Result<(), SimError> {
        let idx = self
            .topology
            .index_of(entry)
            .ok_or_else(|| SimError::UnknownPage(entry.to_string()))?;
        let (_, tip_at) = self.tip();
        if at <= tip_at {
            return Err(SimError::BadStep("timestamps must strictly increase".into()));
        }
        self.emit_leaf();
        self.begin_episode(idx, at);
        Ok(())
    }

    /// Terminate (behavior 4): emits the final branch and returns the trace.
    pub fn finish(mut self) -> AgentTrace {
        self.emit_leaf();
        let log = self
            .log
            .iter()
            .map(|&(i, t)| (self.topology.page(i).clone(), t))
            .collect();
        AgentTrace {
            sessions: self.sessions,
            log,
            episode_log_starts: self.episode_log_starts,
        }
    }
}

/// Runs one random agent: a sequence of browsing episodes driven by the
/// behavior probabilities, with a per-episode termination counter.
pub fn simulate_agent(
    topology: &WebTopology,
    params: &SimulationParams,
    agent_id: u32,
    agent_seed: u64,
) -> Result<AgentTrace, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(agent_seed);
    let stay = Normal::new(params.mean_stay_secs, params.sd_stay_secs)
        .map_err(|e| SimError::InvalidParams(e.to_string()))?;

    let start = SIMULATION_EPOCH + rng.random_range(0..86_400);
    let entries = topology.entry_indices();
    let first = *entries.choose(&mut rng).expect("topology has entry pages");
    let first_page = topology.page(first).clone();
    let mut walk = AgentWalk::start(topology, agent_id, &first_page, start)?;

    // Request counter within the current episode.
    let mut n: u32 = 1;
    loop {
        n += 1;
        let p_term = 1.0 - (1.0 - params.stp).powi(n as i32);
        if rng.random_bool(p_term.clamp(0.0, 1.0)) {
            break;
        }

        let gap = draw_gap(&mut rng, &stay, params.max_gap_secs);
        let (tip_idx, tip_at) = walk.tip();
        let at = tip_at + gap;

        // Availability of each behavior this step. A back-jump target must
        // allow a next forward move and must keep the session gap it creates
        // within max_gap, or the emitted session would violate the page-stay
        // rule it is guaranteed to satisfy.
        let forward_ok = topology.out_degree(tip_idx) > 0;
        let jump_targets: Vec<usize> = walk
            .path()
            .iter()
            .enumerate()
            .take(walk.path().len() - 1)
            .filter(|&(_, &(idx, t))| {
                topology.out_degree(idx) > 0 && at - t <= params.max_gap_secs
            })
            .map(|(pos, _)| pos)
            .collect();

        let w_nip = params.nip;
        let w_lpp = if jump_targets.is_empty() { 0.0 } else { params.lpp };
        let w_fwd = if forward_ok { 1.0 - params.nip - params.lpp } else { 0.0 };
        let total = w_nip + w_lpp + w_fwd;
        if total <= 0.0 {
            break;
        }

        let draw = rng.random_range(0.0..total);
        if draw < w_nip {
            let entry = *entries.choose(&mut rng).expect("topology has entry pages");
            let page = topology.page(entry).clone();
            walk.new_episode(&page, at)?;
            n = 1;
        } else if draw < w_nip + w_lpp {
            let target = *jump_targets.choose(&mut rng).expect("targets non-empty");
            let (target_idx, _) = walk.path()[target];
            let succ = *topology
                .successors_idx(target_idx)
                .choose(&mut rng)
                .expect("target has out-links");
            let page = topology.page(succ).clone();
            walk.back_jump(target, &page, at)?;
        } else {
            let succ = *topology
                .successors_idx(tip_idx)
                .choose(&mut rng)
                .expect("forward move available");
            let page = topology.page(succ).clone();
            walk.follow(&page, at)?;
        }
    }

    Ok(walk.finish())
}

/// Inter-request gap: normal page-stay time truncated to the open interval
/// (1 s, max_gap) by redrawing, then rounded to whole seconds.
fn draw_gap(rng: &mut ChaCha8Rng, stay: &Normal<f64>, max_gap_secs: i64) -> i64 {
    loop {
        let g = stay.sample(rng);
        if g > 1.0 && g < max_gap_secs as f64 {
            return g.round().max(1.0) as i64;
        }
    }
}

/// Synthetic IP for an agent, unique below 2^24 agents.
pub fn agent_ip(agent_id: u32) -> String {
    format!(
        "10.{}.{}.{}",
        (agent_id >> 16) & 0xff,
        (agent_id >> 8) & 0xff,
        agent_id & 0xff
    )
}

/// Runs all agents and merges their logs into one timestamp-sorted server
/// log. Per-agent seeds derive deterministically from `params.seed`, so the
/// output is identical regardless of how agents are scheduled.
pub fn simulate(
    topology: &WebTopology,
    params: &SimulationParams,
) -> Result<(Vec<RealSession>, ServerLog), SimError> {
    params.validate()?;
    let traces: Vec<AgentTrace> = (0..params.n_agents)
        .into_par_iter()
        .map(|i| {
            simulate_agent(
                topology,
                params,
                i as u32,
                derive_seed(params.seed, i as u64),
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(merge_traces(traces))
}

/// Deterministic merge: sessions in agent order, log entries stably sorted by
/// (timestamp, agent, per-agent request order) and numbered as file lines.
pub fn merge_traces(traces: Vec<AgentTrace>) -> (Vec<RealSession>, ServerLog) {
    let mut sessions = Vec::new();
    let mut raw: Vec<(Timestamp, u32, usize, PageId)> = Vec::new();
    for (agent_id, trace) in traces.into_iter().enumerate() {
        sessions.extend(trace.sessions);
        for (seq, (page, at)) in trace.log.into_iter().enumerate() {
            raw.push((at, agent_id as u32, seq, page));
        }
    }
    raw.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let entries = raw
        .into_iter()
        .enumerate()
        .map(|(i, (at, agent, _, page))| LogEntry {
            user_id: agent_ip(agent),
            timestamp: at,
            page,
            status: 200,
            raw_line_no: i as u64 + 1,
        })
        .collect();
    (sessions, ServerLog { entries })
}
