//! Accuracy of reconstruction and pattern discovery against ground truth.
//!
//! A reconstructed session captures a real session when the real page
//! sequence occurs contiguously inside it; session accuracy is the captured
//! fraction of real sessions. Pattern accuracy compares the maximal frequent
//! patterns mined from reconstructed sessions against those mined from the
//! real sessions: `|MP_A ∩ MP_H| / |MP_A|`, intersecting by exact page
//! sequence. Neither metric penalizes extra reconstructed material; both are
//! exactly the definitions the simulator-based evaluation uses.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::miner::{is_subsession, Pattern};
use crate::page::PageId;
use crate::session::Session;
use crate::simulator::RealSession;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("session accuracy is undefined without real sessions")]
    EmptyRealSessions,
    #[error("pattern accuracy is undefined without true patterns")]
    EmptyTruePatterns,
}

/// One evaluation outcome, serializable as a CSV row.
#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub heuristic: String,
    pub session_accuracy: f64,
    /// Absent when no pattern mining was run.
    pub pattern_accuracy: Option<f64>,
    pub n_real_sessions: usize,
    pub n_reconstructed: usize,
    pub n_true_patterns: usize,
    pub n_found_patterns: usize,
    /// `key=value` pairs joined with `;` echoing the full parameter record.
    pub params_echo: String,
}

/// Fixed header for [`AccuracyReport::csv_row`].
pub const ACCURACY_CSV_HEADER: &str = "heuristic,session_accuracy,pattern_accuracy,n_real_sessions,n_reconstructed,n_true_patterns,n_found_patterns,params";

impl AccuracyReport {
    pub fn csv_row(&self) -> String {
        let pattern = self
            .pattern_accuracy
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        format!(
            "{},{:.6},{},{},{},{},{},{}",
            self.heuristic,
            self.session_accuracy,
            pattern,
            self.n_real_sessions,
            self.n_reconstructed,
            self.n_true_patterns,
            self.n_found_patterns,
            self.params_echo
        )
    }
}

/// Fraction of real sessions captured by at least one reconstructed session.
/// Capture is by page sequence only; each real session counts once, and
/// duplicates count separately.
pub fn session_accuracy(real: &[RealSession], recon: &[Session]) -> Result<f64, EvalError> {
    if real.is_empty() {
        return Err(EvalError::EmptyRealSessions);
    }
    let recon_pages: Vec<Vec<PageId>> = recon.iter().map(|s| s.page_seq()).collect();

    // Posting lists over the reconstructed side; a real session only needs to
    // be checked against sessions containing its rarest page.
    let mut postings: HashMap<&PageId, Vec<usize>> = HashMap::new();
    for (i, pages) in recon_pages.iter().enumerate() {
        let mut seen = HashSet::new();
        for page in pages {
            if seen.insert(page) {
                postings.entry(page).or_default().push(i);
            }
        }
    }

    let captured = real
        .par_iter()
        .filter(|r| {
            let target: Vec<PageId> = r.page_seq();
            let mut rarest: Option<&Vec<usize>> = None;
            for page in &target {
                match postings.get(page) {
                    None => return false,
                    Some(list) => {
                        if rarest.map_or(true, |r| list.len() < r.len()) {
                            rarest = Some(list);
                        }
                    }
                }
            }
            rarest.is_some_and(|list| {
                list.iter().any(|&i| is_subsession(&target, &recon_pages[i]))
            })
        })
        .count();
    Ok(captured as f64 / real.len() as f64)
}

/// `|MP_A ∩ MP_H| / |MP_A|` by exact page-sequence equality. Support values
/// are ignored; false positives in `mp_h` are not penalized.
pub fn pattern_accuracy(mp_a: &[Pattern], mp_h: &[Pattern]) -> Result<f64, EvalError> {
    if mp_a.is_empty() {
        return Err(EvalError::EmptyTruePatterns);
    }
    let truth: HashSet<&[PageId]> = mp_a.iter().map(|p| p.pages.as_slice()).collect();
    let found: HashSet<&[PageId]> = mp_h.iter().map(|p| p.pages.as_slice()).collect();
    let hit = truth.intersection(&found).count();
    Ok(hit as f64 / truth.len() as f64)
}
