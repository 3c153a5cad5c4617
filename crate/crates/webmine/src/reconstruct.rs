//! Session reconstruction heuristics.
//!
//! Four reactive heuristics split a per-user request stream into candidate
//! sessions:
//!
//! * [`to1_reconstruct`] — total-session-time bound: a session's span stays
//!   below δ.
//! * [`to2_reconstruct`] — page-stay bound: split wherever the gap between
//!   consecutive requests exceeds ρ.
//! * [`no_reconstruct`] — navigation-oriented: consecutive pages must be
//!   hyperlinked; missing links are patched by inserting backward browser
//!   movements, with no time limits.
//! * [`smart_sra`] — two phases: time-based splitting (ρ, δ), then extraction
//!   of maximal hyperlink-connected sub-sessions via referrer analysis.

use rayon::prelude::*;
use thiserror::Error;

use crate::clf::UserStream;
use crate::page::PageId;
use crate::session::Session;
use crate::topology::WebTopology;
use crate::Timestamp;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("invalid reconstruction parameters: {0}")]
    InvalidParams(String),
    #[error("unknown heuristic {0:?} (expected to1, to2, no or ssra)")]
    UnknownHeuristic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    To1,
    To2,
    NavigationOriented,
    SmartSra,
}

impl Heuristic {
    pub const ALL: [Heuristic; 4] = [
        Heuristic::To1,
        Heuristic::To2,
        Heuristic::NavigationOriented,
        Heuristic::SmartSra,
    ];
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Heuristic::To1 => "to1",
            Heuristic::To2 => "to2",
            Heuristic::NavigationOriented => "no",
            Heuristic::SmartSra => "ssra",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Heuristic {
    type Err = ReconstructError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "to1" => Ok(Heuristic::To1),
            "to2" => Ok(Heuristic::To2),
            "no" => Ok(Heuristic::NavigationOriented),
            "ssra" => Ok(Heuristic::SmartSra),
            other => Err(ReconstructError::UnknownHeuristic(other.to_string())),
        }
    }
}

/// Thresholds of the time rules plus the heuristic to run.
#[derive(Debug, Clone)]
pub struct ReconstructionParams {
    /// ρ: maximum page-stay time between consecutive requests, seconds.
    pub page_stay_rho_secs: i64,
    /// δ: maximum session duration (first to last request), seconds.
    pub session_delta_secs: i64,
    pub heuristic: Heuristic,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        ReconstructionParams {
            page_stay_rho_secs: 600,     // 10 min
            session_delta_secs: 1800,    // 30 min
            heuristic: Heuristic::SmartSra,
        }
    }
}

impl ReconstructionParams {
    pub fn validate(&self) -> Result<(), ReconstructError> {
        if self.page_stay_rho_secs <= 0 {
            return Err(ReconstructError::InvalidParams("rho must be positive".into()));
        }
        if self.page_stay_rho_secs > self.session_delta_secs {
            return Err(ReconstructError::InvalidParams("rho must not exceed delta".into()));
        }
        Ok(())
    }
}

/// Phase-1 output of Smart-SRA: a time-coherent fragment that phase 2 turns
/// into maximal sub-sessions.
pub type CandidateSession = Session;

fn pairs(stream: &UserStream) -> Vec<(PageId, Timestamp)> {
    stream
        .entries
        .iter()
        .map(|e| (e.page.clone(), e.timestamp))
        .collect()
}

/// Greedy split on total session time: an entry joins the current session iff
/// its timestamp minus the session's first timestamp stays below δ.
pub fn to1_reconstruct(stream: &UserStream, params: &ReconstructionParams) -> Vec<Session> {
    let mut out = Vec::new();
    let mut cur: Vec<(PageId, Timestamp)> = Vec::new();
    let mut first_ts = 0;
    for (page, ts) in pairs(stream) {
        if cur.is_empty() {
            first_ts = ts;
        } else if ts - first_ts >= params.session_delta_secs {
            out.push(Session::new(stream.user_id.clone(), std::mem::take(&mut cur)));
            first_ts = ts;
        }
        cur.push((page, ts));
    }
    if !cur.is_empty() {
        out.push(Session::new(stream.user_id.clone(), cur));
    }
    out
}

/// Split exactly where the gap between consecutive requests exceeds ρ.
pub fn to2_reconstruct(stream: &UserStream, params: &ReconstructionParams) -> Vec<Session> {
    let mut out = Vec::new();
    let mut cur: Vec<(PageId, Timestamp)> = Vec::new();
    for (page, ts) in pairs(stream) {
        if let Some(&(_, last_ts)) = cur.last() {
            if ts - last_ts > params.page_stay_rho_secs {
                out.push(Session::new(stream.user_id.clone(), std::mem::take(&mut cur)));
            }
        }
        cur.push((page, ts));
    }
    if !cur.is_empty() {
        out.push(Session::new(stream.user_id.clone(), cur));
    }
    out
}

/// Navigation-oriented reconstruction. An entry joins the current session if
/// the session's last page links to it; otherwise the nearest earlier page
/// with such a link is searched and the traversal back to it is inserted as
/// artificial backward movements (stamped just before the new entry to keep
/// timestamps ordered). With no backward referrer the session is closed. No
/// time thresholds apply.
pub fn no_reconstruct(stream: &UserStream, topology: &WebTopology) -> Vec<Session> {
    let mut out = Vec::new();
    let mut cur: Vec<(PageId, Timestamp)> = Vec::new();
    for (page, ts) in pairs(stream) {
        let Some((last_page, _)) = cur.last() else {
            cur.push((page, ts));
            continue;
        };
        if topology.linked(last_page, &page) {
            cur.push((page, ts));
            continue;
        }
        let referrer_pos = (0..cur.len() - 1)
            .rev()
            .find(|&i| topology.linked(&cur[i].0, &page));
        match referrer_pos {
            Some(q) => {
                // Walk back from the page before last down to the referrer.
                let back: Vec<PageId> =
                    (q..cur.len() - 1).rev().map(|i| cur[i].0.clone()).collect();
                let m = back.len() as i64;
                for (j, bp) in back.into_iter().enumerate() {
                    cur.push((bp, ts - m + j as i64));
                }
                cur.push((page, ts));
            }
            None => {
                out.push(Session::new(stream.user_id.clone(), std::mem::take(&mut cur)));
                cur.push((page, ts));
            }
        }
    }
    if !cur.is_empty() {
        out.push(Session::new(stream.user_id.clone(), cur));
    }
    out
}

/// Smart-SRA phase 1: split on page-stay gaps above ρ, then greedily split
/// each piece so that every fragment's span stays below δ.
pub fn ssra_phase1(stream: &UserStream, params: &ReconstructionParams) -> Vec<CandidateSession> {
    let mut fragments = Vec::new();
    let mut cur: Vec<(PageId, Timestamp)> = Vec::new();
    let mut first_ts = 0;
    for (page, ts) in pairs(stream) {
        let split = match cur.last() {
            None => false,
            Some(&(_, last_ts)) => {
                ts - last_ts > params.page_stay_rho_secs
                    || ts - first_ts >= params.session_delta_secs
            }
        };
        if split {
            fragments.push(Session::new(stream.user_id.clone(), std::mem::take(&mut cur)));
        }
        if cur.is_empty() {
            first_ts = ts;
        }
        cur.push((page, ts));
    }
    if !cur.is_empty() {
        fragments.push(Session::new(stream.user_id.clone(), cur));
    }
    fragments
}

/// Smart-SRA phase 2: repeatedly extract the dangling pages (those with no
/// remaining earlier-timestamped referrer in the candidate), remove them, and
/// append each to every open session whose last page links to it within the
/// page-stay bound, cloning per extension; a page that extends nothing opens
/// a new session. Sessions that were extended are superseded; the maximal
/// (never superseded) sessions are returned.
pub fn ssra_phase2(
    candidate: &CandidateSession,
    topology: &WebTopology,
    params: &ReconstructionParams,
) -> Vec<Session> {
    struct Build {
        pages: Vec<(PageId, Timestamp)>,
        last_idx: Option<u32>,
        last_ts: Timestamp,
        superseded: bool,
    }

    let events: Vec<(Option<u32>, &PageId, Timestamp)> = candidate
        .pages
        .iter()
        .map(|(p, t)| (topology.index_of(p), p, *t))
        .collect();
    let m = events.len();
    if m == 0 {
        return Vec::new();
    }

    let linked = |a: Option<u32>, b: Option<u32>| match (a, b) {
        (Some(x), Some(y)) => topology.has_link_idx(x, y),
        _ => false,
    };

    // Referrer counts: how many remaining earlier-timestamped events link to
    // each event. Events with count zero are dangling.
    let mut refcount = vec![0usize; m];
    for x in 0..m {
        for y in 0..m {
            if events[y].2 < events[x].2 && linked(events[y].0, events[x].0) {
                refcount[x] += 1;
            }
        }
    }

    let mut alive = vec![true; m];
    let mut remaining = m;
    let mut sessions: Vec<Build> = Vec::new();

    while remaining > 0 {
        let dangling: Vec<usize> = (0..m)
            .filter(|&i| alive[i] && refcount[i] == 0)
            .collect();
        debug_assert!(!dangling.is_empty(), "earliest remaining event is always dangling");

        // Extension targets are the sessions open when this round began;
        // clones created in this round are not targets within it.
        let open_at_start: Vec<usize> =
            (0..sessions.len()).filter(|&i| !sessions[i].superseded).collect();

        for &d in &dangling {
            let (d_idx, d_page, d_ts) = events[d];
            let mut extended = false;
            for &si in &open_at_start {
                let gap = d_ts - sessions[si].last_ts;
                if gap > 0 && gap <= params.page_stay_rho_secs && linked(sessions[si].last_idx, d_idx)
                {
                    let mut pages = sessions[si].pages.clone();
                    pages.push((d_page.clone(), d_ts));
                    sessions[si].superseded = true;
                    sessions.push(Build {
                        pages,
                        last_idx: d_idx,
                        last_ts: d_ts,
                        superseded: false,
                    });
                    extended = true;
                }
            }
            if !extended {
                sessions.push(Build {
                    pages: vec![(d_page.clone(), d_ts)],
                    last_idx: d_idx,
                    last_ts: d_ts,
                    superseded: false,
                });
            }
        }

        for &d in &dangling {
            alive[d] = false;
            remaining -= 1;
            for x in 0..m {
                if alive[x] && events[d].2 < events[x].2 && linked(events[d].0, events[x].0) {
                    refcount[x] -= 1;
                }
            }
        }
    }

    sessions
        .into_iter()
        .filter(|b| !b.superseded)
        .map(|b| Session::new(candidate.source_user.clone(), b.pages))
        .collect()
}

/// Smart-SRA end to end: phase 1 over the stream, phase 2 over each candidate.
pub fn smart_sra(
    stream: &UserStream,
    topology: &WebTopology,
    params: &ReconstructionParams,
) -> Vec<Session> {
    ssra_phase1(stream, params)
        .iter()
        .flat_map(|c| ssra_phase2(c, topology, params))
        .collect()
}

/// Runs the heuristic selected in `params` over one stream.
pub fn reconstruct_stream(
    stream: &UserStream,
    topology: &WebTopology,
    params: &ReconstructionParams,
) -> Vec<Session> {
    match params.heuristic {
        Heuristic::To1 => to1_reconstruct(stream, params),
        Heuristic::To2 => to2_reconstruct(stream, params),
        Heuristic::NavigationOriented => no_reconstruct(stream, topology),
        Heuristic::SmartSra => smart_sra(stream, topology, params),
    }
}

/// Reconstructs every stream in parallel. Output order is deterministic:
/// streams in input order (ascending user id as produced by
/// [`crate::clf::group_by_user`]), sessions within a stream in first-visit
/// order.
pub fn reconstruct_all(
    streams: &[UserStream],
    topology: &WebTopology,
    params: &ReconstructionParams,
) -> Vec<Session> {
    streams
        .par_iter()
        .map(|s| reconstruct_stream(s, topology, params))
        .flatten()
        .collect()
}
