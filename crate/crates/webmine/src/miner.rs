//! Maximal frequent navigation patterns via the sequential apriori.
//!
//! Patterns are contiguous page runs: a session supports a pattern only if
//! the pattern's pages appear consecutively and in order in the session.
//! Candidate generation joins a frequent length-k pattern with a frequent
//! single page only when the topology has a hyperlink from the pattern's last
//! page to that page, which prunes almost all candidates before any support
//! counting happens.
//!
//! Maximality bookkeeping: an accepted length-(k+1) pattern starts maximal
//! and demotes its length-k prefix and, when present in the level, its
//! length-k suffix. A single page is demoted as soon as it is appended to any
//! generated candidate, frequent or not; a page reachable from a frequent
//! page never stands alone as a maximal pattern.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::page::PageId;
use crate::session::Session;
use crate::topology::WebTopology;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("support is undefined over an empty session list")]
    EmptySessions,
    #[error("session page {0} is not in the page universe")]
    UnknownPage(String),
    #[error("invalid mining parameters: {0}")]
    InvalidParams(String),
    #[error("{path}:{line}: {message}")]
    FileSyntax {
        path: String,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered page sequence with its support and final maximality flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub pages: Vec<PageId>,
    pub support: f64,
    pub maximal: bool,
}

/// All patterns of one length produced by one apriori iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLevel {
    pub k: usize,
    pub patterns: Vec<Pattern>,
}

/// Full per-iteration trace of a mining run.
#[derive(Debug, Clone)]
pub struct MiningTrace {
    /// Frequent (retained) patterns per level, with final maximality flags.
    pub levels: Vec<PatternLevel>,
    /// Generated candidates whose support fell short, per level.
    pub rejected: Vec<PatternLevel>,
    /// The maximal frequent patterns across all levels.
    pub maximal: Vec<Pattern>,
}

#[derive(Debug, Clone)]
pub struct MiningParams {
    /// Minimum support as a fraction of all sessions.
    pub min_support: f64,
    /// Longest pattern to grow; defaults to the longest session length.
    pub max_length: Option<usize>,
    /// Use a strict `>` support comparison instead of `>=`.
    pub strict: bool,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            min_support: 0.05,
            max_length: None,
            strict: false,
        }
    }
}

/// True iff `pattern` occurs as a contiguous run in `session`.
pub fn is_subsession(pattern: &[PageId], session: &[PageId]) -> bool {
    if pattern.is_empty() {
        return true;
    }
    if pattern.len() > session.len() {
        return false;
    }
    session.windows(pattern.len()).any(|w| w == pattern)
}

/// Fraction of sessions containing `pattern` as a contiguous run. A session
/// counts once no matter how many offsets match.
pub fn support(pattern: &[PageId], sessions: &[Session]) -> Result<f64, MinerError> {
    if sessions.is_empty() {
        return Err(MinerError::EmptySessions);
    }
    let count = sessions
        .iter()
        .filter(|s| {
            let pages: Vec<PageId> = s.page_seq();
            is_subsession(pattern, &pages)
        })
        .count();
    Ok(count as f64 / sessions.len() as f64)
}

/// Mines the maximal frequent patterns.
pub fn sequential_apriori(
    params: &MiningParams,
    sessions: &[Session],
    topology: &WebTopology,
    pages: &[PageId],
) -> Result<Vec<Pattern>, MinerError> {
    Ok(sequential_apriori_trace(params, sessions, topology, pages)?.maximal)
}

/// Mines with a full per-level trace of accepted and rejected candidates.
pub fn sequential_apriori_trace(
    params: &MiningParams,
    sessions: &[Session],
    topology: &WebTopology,
    pages: &[PageId],
) -> Result<MiningTrace, MinerError> {
    mine(params, sessions, topology, pages, false)
}

/// Internal state per retained pattern: the exact set of supporting session
/// ids doubles as the candidate filter for the next level.
struct Cand {
    pages: Vec<u32>,
    support_set: Vec<u32>,
    maximal: bool,
}

pub(crate) fn mine(
    params: &MiningParams,
    sessions: &[Session],
    topology: &WebTopology,
    pages: &[PageId],
    literal_join: bool,
) -> Result<MiningTrace, MinerError> {
    if !(params.min_support > 0.0 && params.min_support <= 1.0) {
        return Err(MinerError::InvalidParams(format!(
            "min_support must be in (0,1], got {}",
            params.min_support
        )));
    }
    if sessions.is_empty() {
        return Err(MinerError::EmptySessions);
    }

    // Intern the page universe and the sessions.
    let mut universe: HashMap<&PageId, u32> = HashMap::with_capacity(pages.len());
    for (i, p) in pages.iter().enumerate() {
        if universe.insert(p, i as u32).is_some() {
            return Err(MinerError::InvalidParams(format!(
                "page {p} appears twice in the page universe"
            )));
        }
    }
    let sessions_u: Vec<Vec<u32>> = sessions
        .iter()
        .map(|s| {
            s.pages
                .iter()
                .map(|(p, _)| {
                    universe
                        .get(p)
                        .copied()
                        .ok_or_else(|| MinerError::UnknownPage(p.to_string()))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let n = sessions_u.len();
    let n_pages = pages.len();
    let meets = |count: usize| {
        let sup = count as f64 / n as f64;
        if params.strict {
            sup > params.min_support
        } else {
            sup >= params.min_support
        }
    };

    // Topology view of the universe.
    let topo_idx: Vec<Option<u32>> = pages.iter().map(|p| topology.index_of(p)).collect();
    let linked = |a: u32, b: u32| match (topo_idx[a as usize], topo_idx[b as usize]) {
        (Some(x), Some(y)) => topology.has_link_idx(x, y),
        _ => false,
    };

    // Posting lists: which sessions contain each page at all.
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); n_pages];
    for (sid, s) in sessions_u.iter().enumerate() {
        let mut seen = vec![false; n_pages];
        for &p in s {
            if !std::mem::replace(&mut seen[p as usize], true) {
                postings[p as usize].push(sid as u32);
            }
        }
    }

    // Level 1: every universe page is a candidate.
    let mut level1: Vec<Cand> = Vec::new();
    let mut rejected = vec![PatternLevel {
        k: 1,
        patterns: Vec::new(),
    }];
    for p in 0..n_pages {
        let count = postings[p].len();
        if meets(count) {
            level1.push(Cand {
                pages: vec![p as u32],
                support_set: postings[p].clone(),
                maximal: true,
            });
        } else {
            rejected[0].patterns.push(Pattern {
                pages: vec![pages[p].clone()],
                support: count as f64 / n as f64,
                maximal: false,
            });
        }
    }

    let max_len = params
        .max_length
        .unwrap_or_else(|| sessions_u.iter().map(Vec::len).max().unwrap_or(1));

    let mut levels: Vec<Vec<Cand>> = vec![level1];
    while !levels.last().unwrap().is_empty() && levels.len() < max_len {
        let k = levels.len();

        // Generate candidates: extend each level-k pattern by every joinable
        // page. The literal variant joins over the whole universe; the
        // default joins over frequent single pages only, which provably
        // yields the same frequent sets.
        let join_pages: Vec<u32> = if literal_join {
            (0..n_pages as u32).collect()
        } else {
            levels[0].iter().map(|c| c.pages[0]).collect()
        };
        let current = &levels[k - 1];
        let mut generated: Vec<(usize, u32)> = Vec::new();
        for (i_idx, cand) in current.iter().enumerate() {
            let last = *cand.pages.last().unwrap();
            for &pj in &join_pages {
                if linked(last, pj) {
                    generated.push((i_idx, pj));
                }
            }
        }

        // Appending a page to any generated candidate demotes that page's
        // singleton pattern, whether or not the candidate keeps enough
        // support (this is what the worked example's bookkeeping requires).
        let mut single_slot: HashMap<u32, usize> = HashMap::new();
        for (slot, c) in levels[0].iter().enumerate() {
            single_slot.insert(c.pages[0], slot);
        }
        let appended: Vec<usize> = {
            let mut v: Vec<usize> = generated
                .iter()
                .filter_map(|&(_, pj)| single_slot.get(&pj).copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };

        // Count supports in parallel; the support set of the extended
        // pattern is verified inside the intersection of the base pattern's
        // support set with the appended page's postings.
        let evaluated: Vec<(Vec<u32>, Vec<u32>)> = generated
            .par_iter()
            .map(|&(i_idx, pj)| {
                let base = &levels[k - 1][i_idx];
                let mut t = base.pages.clone();
                t.push(pj);
                let set = intersect_supporting(
                    &base.support_set,
                    &postings[pj as usize],
                    &t,
                    &sessions_u,
                );
                (t, set)
            })
            .collect();

        for slot in appended {
            levels[0][slot].maximal = false;
        }

        // Accept or reject in generation order.
        let index_of_level_k: HashMap<Vec<u32>, usize> = levels[k - 1]
            .iter()
            .enumerate()
            .map(|(i, c)| (c.pages.clone(), i))
            .collect();
        let mut accepted: Vec<Cand> = Vec::new();
        let mut rejected_here = PatternLevel {
            k: k + 1,
            patterns: Vec::new(),
        };
        let mut demote_i: Vec<usize> = Vec::new();
        let mut demote_v: Vec<usize> = Vec::new();
        for ((i_idx, _), (t, set)) in generated.iter().zip(evaluated) {
            if meets(set.len()) {
                demote_i.push(*i_idx);
                if let Some(&v_idx) = index_of_level_k.get(&t[1..]) {
                    demote_v.push(v_idx);
                }
                accepted.push(Cand {
                    pages: t,
                    support_set: set,
                    maximal: true,
                });
            } else {
                rejected_here.patterns.push(Pattern {
                    pages: t.iter().map(|&p| pages[p as usize].clone()).collect(),
                    support: set.len() as f64 / n as f64,
                    maximal: false,
                });
            }
        }
        for i in demote_i {
            levels[k - 1][i].maximal = false;
        }
        for v in demote_v {
            levels[k - 1][v].maximal = false;
        }

        if !generated.is_empty() {
            rejected.push(rejected_here);
        }
        if accepted.is_empty() {
            break;
        }
        levels.push(accepted);
    }

    // Assemble the trace with final maximality flags.
    let to_pattern = |c: &Cand| Pattern {
        pages: c.pages.iter().map(|&p| pages[p as usize].clone()).collect(),
        support: c.support_set.len() as f64 / n as f64,
        maximal: c.maximal,
    };
    let trace_levels: Vec<PatternLevel> = levels
        .iter()
        .enumerate()
        .map(|(i, cands)| PatternLevel {
            k: i + 1,
            patterns: cands.iter().map(to_pattern).collect(),
        })
        .collect();
    let maximal: Vec<Pattern> = trace_levels
        .iter()
        .flat_map(|l| l.patterns.iter().filter(|p| p.maximal).cloned())
        .collect();

    Ok(MiningTrace {
        levels: trace_levels,
        rejected,
        maximal,
    })
}

/// Session ids from the sorted intersection of `base` and `with_page` whose
/// sessions contain `pattern` contiguously.
fn intersect_supporting(
    base: &[u32],
    with_page: &[u32],
    pattern: &[u32],
    sessions: &[Vec<u32>],
) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < base.len() && j < with_page.len() {
        match base[i].cmp(&with_page[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let sid = base[i];
                let s = &sessions[sid as usize];
                if pattern.len() <= s.len() && s.windows(pattern.len()).any(|w| w == pattern) {
                    out.push(sid);
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Writes `page,page,...<TAB>support=<6 decimals>`, one line per pattern,
/// sorted lexicographically by the page sequence for diffability.
pub fn write_patterns<W: Write>(w: &mut W, patterns: &[Pattern]) -> std::io::Result<()> {
    let mut lines: Vec<String> = patterns
        .iter()
        .map(|p| {
            let seq: Vec<&str> = p.pages.iter().map(|pg| pg.as_str()).collect();
            format!("{}\tsupport={:.6}", seq.join(","), p.support)
        })
        .collect();
    lines.sort();
    for line in lines {
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_patterns(path: &Path, patterns: &[Pattern]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_patterns(&mut w, patterns)?;
    w.flush()
}

pub fn load_patterns(path: &Path) -> Result<Vec<Pattern>, MinerError> {
    let origin = path.display().to_string();
    let syntax = |line: u64, message: String| MinerError::FileSyntax {
        path: origin.clone(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut patterns = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (seq, sup) = line
            .split_once('\t')
            .ok_or_else(|| syntax(line_no, "expected `pages<TAB>support=...`".into()))?;
        let support: f64 = sup
            .strip_prefix("support=")
            .ok_or_else(|| syntax(line_no, "missing `support=` field".into()))?
            .parse()
            .map_err(|_| syntax(line_no, "bad support value".into()))?;
        let pages: Vec<PageId> = seq
            .split(',')
            .filter(|s| !s.is_empty())
            .map(PageId::new)
            .collect();
        if pages.is_empty() {
            return Err(syntax(line_no, "pattern with no pages".into()));
        }
        patterns.push(Pattern {
            pages,
            support,
            maximal: true,
        });
    }
    Ok(patterns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::p;
    use crate::topology::WebTopology;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, BTreeSet};

    fn session(pages: &[&str]) -> Session {
        Session::new(
            "u",
            pages
                .iter()
                .enumerate()
                .map(|(i, s)| (p(s), i as i64 * 60))
                .collect(),
        )
    }

    /// The Table-2 session database.
    fn table2_sessions() -> Vec<Session> {
        vec![
            session(&["P1", "P13", "P49", "P23"]),
            session(&["P1", "P13", "P34", "P23"]),
            session(&["P1", "P13", "P49"]),
            session(&["P1", "P20", "P23"]),
            session(&["P13", "P49"]),
        ]
    }

    /// A topology consistent with the worked example.
    fn table2_topology() -> WebTopology {
        let names = ["P1", "P13", "P20", "P23", "P34", "P49"];
        WebTopology::new(
            names.iter().map(|s| p(s)).collect(),
            vec![
                (p("P1"), p("P13")),
                (p("P13"), p("P49")),
                (p("P13"), p("P34")),
                (p("P49"), p("P23")),
                (p("P34"), p("P23")),
                (p("P1"), p("P20")),
                (p("P20"), p("P23")),
            ],
            vec![p("P1")],
        )
        .unwrap()
    }

    fn universe() -> Vec<PageId> {
        ["P1", "P13", "P20", "P23", "P34", "P49"]
            .iter()
            .map(|s| p(s))
            .collect()
    }

    fn support_map(level: &PatternLevel) -> BTreeMap<Vec<String>, f64> {
        level
            .patterns
            .iter()
            .map(|pat| {
                (
                    pat.pages.iter().map(|p| p.to_string()).collect(),
                    pat.support,
                )
            })
            .collect()
    }

    fn names(seq: &[&str]) -> Vec<String> {
        seq.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn subsession_examples() {
        let r = [p("P1"), p("P3"), p("P5")];
        let h1 = [p("P9"), p("P1"), p("P3"), p("P5"), p("P8")];
        let h2 = [p("P1"), p("P9"), p("P3"), p("P5"), p("P8")];
        assert!(is_subsession(&r, &h1));
        assert!(!is_subsession(&r, &h2));
        assert!(is_subsession(&h1, &h1));
    }

    #[test]
    fn support_examples_from_table3() {
        let sessions = table2_sessions();
        assert_eq!(support(&[p("P1")], &sessions).unwrap(), 0.80);
        assert_eq!(support(&[p("P49"), p("P23")], &sessions).unwrap(), 0.20);
        assert_eq!(support(&[p("P99")], &sessions).unwrap(), 0.0);
        assert!(matches!(
            support(&[p("P1")], &[]),
            Err(MinerError::EmptySessions)
        ));
    }

    #[test]
    fn support_counts_each_session_once() {
        let sessions = vec![session(&["A", "B", "A", "B"]), session(&["C"])];
        assert_eq!(support(&[p("A"), p("B")], &sessions).unwrap(), 0.5);
    }

    #[test]
    fn table3_trace_is_exact() {
        let trace = sequential_apriori_trace(
            &MiningParams {
                min_support: 0.40,
                ..Default::default()
            },
            &table2_sessions(),
            &table2_topology(),
            &universe(),
        )
        .unwrap();

        // Level 1
        let l1 = support_map(&trace.levels[0]);
        let expected1: BTreeMap<Vec<String>, f64> = [
            (names(&["P1"]), 0.80),
            (names(&["P13"]), 0.80),
            (names(&["P23"]), 0.60),
            (names(&["P49"]), 0.60),
        ]
        .into_iter()
        .collect();
        assert_eq!(l1, expected1);
        let r1 = support_map(&trace.rejected[0]);
        let expected_r1: BTreeMap<Vec<String>, f64> =
            [(names(&["P20"]), 0.20), (names(&["P34"]), 0.20)]
                .into_iter()
                .collect();
        assert_eq!(r1, expected_r1);

        // Level 2
        let l2 = support_map(&trace.levels[1]);
        let expected2: BTreeMap<Vec<String>, f64> = [
            (names(&["P1", "P13"]), 0.60),
            (names(&["P13", "P49"]), 0.60),
        ]
        .into_iter()
        .collect();
        assert_eq!(l2, expected2);
        let r2 = support_map(&trace.rejected[1]);
        assert_eq!(
            r2,
            [(names(&["P49", "P23"]), 0.20)].into_iter().collect()
        );

        // Level 3
        let l3 = support_map(&trace.levels[2]);
        assert_eq!(
            l3,
            [(names(&["P1", "P13", "P49"]), 0.40)].into_iter().collect()
        );
        let r3 = support_map(&trace.rejected[2]);
        assert_eq!(
            r3,
            [(names(&["P13", "P49", "P23"]), 0.20)].into_iter().collect()
        );

        // The only maximal pattern
        assert_eq!(trace.maximal.len(), 1);
        assert_eq!(
            trace.maximal[0].pages,
            vec![p("P1"), p("P13"), p("P49")]
        );
        assert_eq!(trace.maximal[0].support, 0.40);
    }

    #[test]
    fn empty_level1_halts_immediately() {
        let out = sequential_apriori(
            &MiningParams {
                min_support: 0.95,
                ..Default::default()
            },
            &table2_sessions(),
            &table2_topology(),
            &universe(),
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn unknown_session_page_is_an_error() {
        let sessions = vec![session(&["P1", "XX"])];
        let err = sequential_apriori(
            &MiningParams::default(),
            &sessions,
            &table2_topology(),
            &universe(),
        );
        assert!(matches!(err, Err(MinerError::UnknownPage(name)) if name == "XX"));
    }

    #[test]
    fn strict_threshold_drops_borderline_patterns() {
        let trace = sequential_apriori_trace(
            &MiningParams {
                min_support: 0.40,
                strict: true,
                ..Default::default()
            },
            &table2_sessions(),
            &table2_topology(),
            &universe(),
        )
        .unwrap();
        // [P1,P13,P49] has support exactly 0.40 and is rejected under `>`
        assert_eq!(trace.levels.len(), 2);
        assert!(trace
            .maximal
            .iter()
            .all(|m| m.pages != vec![p("P1"), p("P13"), p("P49")]));
    }

    #[test]
    fn max_length_caps_pattern_growth() {
        let trace = sequential_apriori_trace(
            &MiningParams {
                min_support: 0.40,
                max_length: Some(2),
                ..Default::default()
            },
            &table2_sessions(),
            &table2_topology(),
            &universe(),
        )
        .unwrap();
        assert_eq!(trace.levels.len(), 2);
    }

    #[test]
    fn pattern_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.txt");
        let patterns = vec![
            Pattern {
                pages: vec![p("P1"), p("P13"), p("P49")],
                support: 0.4,
                maximal: true,
            },
            Pattern {
                pages: vec![p("P23")],
                support: 0.6,
                maximal: true,
            },
        ];
        save_patterns(&path, &patterns).unwrap();
        let loaded = load_patterns(&path).unwrap();
        // writer sorts lexicographically
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].pages, vec![p("P1"), p("P13"), p("P49")]);
        assert_eq!(loaded[0].support, 0.4);
        assert_eq!(loaded[1].pages, vec![p("P23")]);
    }

    // ---- brute-force oracle ----

    /// Independent oracle: enumerate every contiguous subsequence of every
    /// session, count supporting sessions, filter by support and topology,
    /// then keep a pattern if no longer frequent pattern contains it and, for
    /// singles, no frequent single page links to it.
    pub(crate) fn oracle_maximal(
        sessions: &[Session],
        topology: &WebTopology,
        min_support: f64,
        strict: bool,
    ) -> BTreeSet<Vec<PageId>> {
        let n = sessions.len();
        let mut counts: BTreeMap<Vec<PageId>, BTreeSet<usize>> = BTreeMap::new();
        for (sid, s) in sessions.iter().enumerate() {
            let pages = s.page_seq();
            for i in 0..pages.len() {
                for j in i..pages.len() {
                    counts.entry(pages[i..=j].to_vec()).or_default().insert(sid);
                }
            }
        }
        let meets = |c: usize| {
            let sup = c as f64 / n as f64;
            if strict {
                sup > min_support
            } else {
                sup >= min_support
            }
        };
        let frequent: BTreeSet<Vec<PageId>> = counts
            .into_iter()
            .filter(|(pat, set)| {
                meets(set.len())
                    && pat
                        .windows(2)
                        .all(|w| topology.linked(&w[0], &w[1]))
            })
            .map(|(pat, _)| pat)
            .collect();
        let singles: BTreeSet<&PageId> = frequent
            .iter()
            .filter(|pat| pat.len() == 1)
            .map(|pat| &pat[0])
            .collect();
        frequent
            .iter()
            .filter(|pat| {
                let contained = frequent.iter().any(|other| {
                    other.len() > pat.len()
                        && other.windows(pat.len()).any(|w| w == pat.as_slice())
                });
                if contained {
                    return false;
                }
                if pat.len() == 1 {
                    let appended_somewhere = singles
                        .iter()
                        .any(|q| topology.linked(q, &pat[0]));
                    if appended_somewhere {
                        return false;
                    }
                }
                true
            })
            .cloned()
            .collect()
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Session>, WebTopology, Vec<PageId>) {
        let n_pages = rng.random_range(2..=12);
        let pages: Vec<PageId> = (0..n_pages).map(|i| p(&format!("G{i}"))).collect();
        let mut links = Vec::new();
        for a in 0..n_pages {
            for b in 0..n_pages {
                if a != b && rng.random_bool(0.3) {
                    links.push((pages[a].clone(), pages[b].clone()));
                }
            }
        }
        let topology =
            WebTopology::new(pages.clone(), links, vec![pages[0].clone()]).unwrap();

        let n_sessions = rng.random_range(1..=50);
        let sessions: Vec<Session> = (0..n_sessions)
            .map(|_| {
                let len = rng.random_range(1..=8);
                // Half the sessions are topology walks so longer patterns
                // actually occur; the rest are arbitrary sequences, as
                // time-oriented heuristics would produce.
                let mut seq: Vec<u32> = Vec::with_capacity(len);
                if rng.random_bool(0.5) {
                    let mut cur = rng.random_range(0..n_pages) as u32;
                    seq.push(cur);
                    for _ in 1..len {
                        let succ = topology.successors_idx(cur);
                        if succ.is_empty() {
                            break;
                        }
                        cur = succ[rng.random_range(0..succ.len())];
                        seq.push(cur);
                    }
                } else {
                    for _ in 0..len {
                        seq.push(rng.random_range(0..n_pages) as u32);
                    }
                }
                Session::new(
                    "u",
                    seq.iter()
                        .enumerate()
                        .map(|(i, &pg)| (pages[pg as usize].clone(), i as i64 * 30))
                        .collect(),
                )
            })
            .collect();
        (sessions, topology, pages)
    }

    #[test]
    fn matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
        for round in 0..60 {
            let (sessions, topology, pages) = random_instance(&mut rng);
            let min_support = [0.1, 0.2, 0.3, 0.4, 0.5][round % 5];
            let got: BTreeSet<Vec<PageId>> = sequential_apriori(
                &MiningParams {
                    min_support,
                    ..Default::default()
                },
                &sessions,
                &topology,
                &pages,
            )
            .unwrap()
            .into_iter()
            .map(|p| p.pages)
            .collect();
            let want = oracle_maximal(&sessions, &topology, min_support, false);
            assert_eq!(got, want, "instance {round} at support {min_support}");
        }
    }

    #[test]
    fn literal_join_produces_identical_frequent_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xCAFE);
        for round in 0..30 {
            let (sessions, topology, pages) = random_instance(&mut rng);
            let min_support = [0.1, 0.2, 0.3][round % 3];
            let params = MiningParams {
                min_support,
                ..Default::default()
            };
            let fast = mine(&params, &sessions, &topology, &pages, false).unwrap();
            let literal = mine(&params, &sessions, &topology, &pages, true).unwrap();
            let levels = |t: &MiningTrace| -> Vec<BTreeSet<Vec<PageId>>> {
                t.levels
                    .iter()
                    .map(|l| l.patterns.iter().map(|p| p.pages.clone()).collect())
                    .collect()
            };
            assert_eq!(levels(&fast), levels(&literal));
            let maximal = |t: &MiningTrace| -> BTreeSet<Vec<PageId>> {
                t.maximal.iter().map(|p| p.pages.clone()).collect()
            };
            assert_eq!(maximal(&fast), maximal(&literal));
        }
    }

    #[test]
    fn retained_patterns_satisfy_structural_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACE);
        for _ in 0..20 {
            let (sessions, topology, pages) = random_instance(&mut rng);
            let params = MiningParams {
                min_support: 0.2,
                ..Default::default()
            };
            let trace =
                sequential_apriori_trace(&params, &sessions, &topology, &pages).unwrap();
            for level in &trace.levels {
                for pat in &level.patterns {
                    // anti-monotonicity: every contiguous subsequence is at
                    // least as frequent
                    for i in 0..pat.pages.len() {
                        for j in i..pat.pages.len() {
                            let sub = &pat.pages[i..=j];
                            let sup = support(sub, &sessions).unwrap();
                            assert!(sup + 1e-12 >= params.min_support);
                        }
                    }
                    // topology soundness
                    for w in pat.pages.windows(2) {
                        assert!(topology.linked(&w[0], &w[1]));
                    }
                }
            }
            // no maximal pattern contained in another
            for a in &trace.maximal {
                for b in &trace.maximal {
                    if a.pages != b.pages {
                        assert!(!is_subsession(&a.pages, &b.pages));
                    }
                }
            }
        }
    }
}
