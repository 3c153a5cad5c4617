//! Sessions and the session text format.
//!
//! One line per session: `user<TAB>page@epoch,page@epoch,...`. The simulator
//! writes its ground-truth sessions and every reconstruction heuristic writes
//! its output in this same format, so the evaluator can consume either side.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::page::PageId;
use crate::Timestamp;

/// Ordered page-visit sequence of one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub source_user: String,
    pub pages: Vec<(PageId, Timestamp)>,
}

impl Session {
    pub fn new(source_user: impl Into<String>, pages: Vec<(PageId, Timestamp)>) -> Self {
        Session {
            source_user: source_user.into(),
            pages,
        }
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    /// The page sequence without timestamps.
    pub fn page_seq(&self) -> Vec<PageId> {
        self.pages.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn first_ts(&self) -> Option<Timestamp> {
        self.pages.first().map(|&(_, t)| t)
    }

    pub fn last_ts(&self) -> Option<Timestamp> {
        self.pages.last().map(|&(_, t)| t)
    }

    /// Time between first and last visit; 0 for singletons.
    pub fn span(&self) -> Timestamp {
        match (self.first_ts(), self.last_ts()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionFileError {
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: String,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_sessions<'a, W: Write>(
    w: &mut W,
    sessions: impl IntoIterator<Item = &'a Session>,
) -> std::io::Result<()> {
    for s in sessions {
        let pages: Vec<String> = s
            .pages
            .iter()
            .map(|(p, t)| format!("{p}@{t}"))
            .collect();
        writeln!(w, "{}\t{}", s.source_user, pages.join(","))?;
    }
    Ok(())
}

pub fn save_sessions(path: &Path, sessions: &[Session]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_sessions(&mut w, sessions)?;
    w.flush()
}

pub fn read_sessions<R: BufRead>(reader: R, origin: &str) -> Result<Vec<Session>, SessionFileError> {
    let syntax = |line: u64, message: String| SessionFileError::Syntax {
        path: origin.to_string(),
        line,
        message,
    };
    let mut sessions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (user, rest) = line
            .split_once('\t')
            .ok_or_else(|| syntax(line_no, "expected `user<TAB>pages`".into()))?;
        let mut pages = Vec::new();
        for item in rest.split(',') {
            let (page, epoch) = item
                .rsplit_once('@')
                .ok_or_else(|| syntax(line_no, format!("expected `page@epoch`, got {item:?}")))?;
            if page.is_empty() {
                return Err(syntax(line_no, "empty page token".into()));
            }
            let ts: Timestamp = epoch
                .parse()
                .map_err(|_| syntax(line_no, format!("bad epoch {epoch:?}")))?;
            pages.push((PageId::new(page), ts));
        }
        if pages.is_empty() {
            return Err(syntax(line_no, "session with no pages".into()));
        }
        sessions.push(Session::new(user, pages));
    }
    Ok(sessions)
}

pub fn load_sessions(path: &Path) -> Result<Vec<Session>, SessionFileError> {
    let reader = BufReader::new(File::open(path)?);
    read_sessions(reader, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::p;

    fn sample() -> Vec<Session> {
        vec![
            Session::new("7", vec![(p("P1"), 100), (p("P20"), 160), (p("P23"), 220)]),
            Session::new("10.0.0.3", vec![(p("/a/b"), 500)]),
        ]
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.txt");
        let sessions = sample();
        save_sessions(&path, &sessions).unwrap();
        assert_eq!(load_sessions(&path).unwrap(), sessions);
    }

    #[test]
    fn rejects_bad_lines() {
        let err = read_sessions("no tab here".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, SessionFileError::Syntax { line: 1, .. }));
        let err = read_sessions("u\tP1@abc".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, SessionFileError::Syntax { .. }));
        let err = read_sessions("u\t@5".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, SessionFileError::Syntax { .. }));
    }

    #[test]
    fn page_tokens_may_contain_at_signs() {
        // rsplit keeps everything before the final @ as the page token
        let sessions = read_sessions("u\t/user@site@42".as_bytes(), "mem").unwrap();
        assert_eq!(sessions[0].pages[0], (p("/user@site"), 42));
    }

    #[test]
    fn span_and_page_seq() {
        let s = &sample()[0];
        assert_eq!(s.span(), 120);
        assert_eq!(s.page_seq(), vec![p("P1"), p("P20"), p("P23")]);
    }
}
