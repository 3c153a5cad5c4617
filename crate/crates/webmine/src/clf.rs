//! Common Log Format ingestion.
//!
//! Parses access-log lines of the form
//!
//! ```text
//! 192.0.2.7 - - [10/Oct/2000:13:55:36 -0700] "GET /p13.html HTTP/1.0" 200 2326
//! ```
//!
//! into [`LogEntry`] records, filters out non-navigation requests (assets,
//! non-GET methods, error statuses), and groups the survivors into
//! timestamp-ordered per-user streams. Skips and malformed lines are reported
//! as line-numbered [`Diagnostic`]s on a side channel so they never mix into
//! the data output.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Utc};
use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::page::PageId;
use crate::Timestamp;

/// One parsed server-log record that counts as a page view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    /// Opaque user identity; the remote host (IP address) in CLF.
    pub user_id: String,
    /// Request instant, seconds since the Unix epoch, UTC.
    pub timestamp: Timestamp,
    /// Canonicalized page.
    pub page: PageId,
    /// HTTP status code.
    pub status: u16,
    /// 1-based line number in the source file; tie-breaker for equal
    /// timestamps (CLF has one-second resolution).
    pub raw_line_no: u64,
}

/// All requests of one user, sorted by (timestamp, raw_line_no).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserStream {
    pub user_id: String,
    pub entries: Vec<LogEntry>,
}

/// Which requests count as page views.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Accepted request methods.
    pub methods: Vec<String>,
    /// Inclusive status range that counts as a successful page view.
    pub min_status: u16,
    pub max_status: u16,
    /// Requests whose canonical path ends in one of these extensions are
    /// skipped; embedded-resource fetches are not navigations.
    pub asset_extensions: Vec<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            methods: vec!["GET".to_string()],
            min_status: 200,
            max_status: 399,
            asset_extensions: ["gif", "jpg", "jpeg", "png", "css", "js", "ico"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Why a syntactically valid line was not counted as a page view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    Method(String),
    Status(u16),
    AssetExtension(String),
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::Method(m) => write!(f, "method {m} is not a page view"),
            SkipReason::Status(s) => write!(f, "status {s} outside accepted range"),
            SkipReason::AssetExtension(e) => write!(f, "asset extension .{e}"),
        }
    }
}

/// Outcome of parsing one line: a page view, or a skip marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedLine {
    Entry(LogEntry),
    Skipped { line_no: u64, reason: SkipReason },
}

/// Recoverable per-line parse failure.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line_no}: {message}")]
pub struct ClfParseError {
    pub line_no: u64,
    pub message: String,
}

impl ClfParseError {
    fn new(line_no: u64, message: impl Into<String>) -> Self {
        ClfParseError {
            line_no,
            message: message.into(),
        }
    }
}

/// Line-numbered side-channel report emitted while parsing a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    Skipped { line_no: u64, reason: SkipReason },
    Malformed { line_no: u64, message: String },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::Skipped { line_no, reason } => {
                write!(f, "line {line_no}: skipped: {reason}")
            }
            Diagnostic::Malformed { line_no, message } => {
                write!(f, "line {line_no}: malformed: {message}")
            }
        }
    }
}

/// Entries plus the diagnostics side channel for one parsed file.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub entries: Vec<LogEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parse one physical CLF line.
///
/// Returns a [`ParsedLine::Skipped`] marker when the request is filtered by
/// `opts` (non-GET, non-2xx/3xx, asset extension), and a recoverable
/// [`ClfParseError`] when the line is malformed.
pub fn parse_clf_line(
    line: &str,
    line_no: u64,
    opts: &ParseOptions,
) -> Result<ParsedLine, ClfParseError> {
    let err = |msg: &str| ClfParseError::new(line_no, msg);

    let mut rest = line.trim_end_matches(['\r', '\n']);

    // remotehost rfc931 authuser
    let mut fixed = [""; 3];
    for slot in fixed.iter_mut() {
        rest = rest.trim_start_matches(' ');
        let end = rest.find(' ').ok_or_else(|| err("wrong field count"))?;
        *slot = &rest[..end];
        rest = &rest[end..];
    }
    let host = fixed[0];
    if host.is_empty() {
        return Err(err("empty remotehost field"));
    }

    // [date]
    rest = rest.trim_start_matches(' ');
    if !rest.starts_with('[') {
        return Err(err("missing [ before timestamp"));
    }
    let close = rest.find(']').ok_or_else(|| err("missing ] after timestamp"))?;
    let date_str = &rest[1..close];
    rest = &rest[close + 1..];

    let dt = DateTime::parse_from_str(date_str, "%d/%b/%Y:%H:%M:%S %z")
        .map_err(|e| err(&format!("unparseable timestamp {date_str:?}: {e}")))?;
    let utc = dt.with_timezone(&Utc);
    if !(1990..=2100).contains(&utc.year()) {
        return Err(err(&format!("timestamp year {} out of range", utc.year())));
    }
    let timestamp = utc.timestamp();

    // "METHOD path PROTO"
    rest = rest.trim_start_matches(' ');
    if !rest.starts_with('"') {
        return Err(err("unquoted request"));
    }
    let close = rest[1..]
        .find('"')
        .ok_or_else(|| err("unterminated request"))?;
    let request = &rest[1..close + 1];
    rest = &rest[close + 2..];

    let mut req_parts = request.split_ascii_whitespace();
    let method = req_parts.next().ok_or_else(|| err("empty request"))?;
    let raw_path = req_parts
        .next()
        .ok_or_else(|| err("request missing path"))?;
    if req_parts.next().is_none() {
        return Err(err("request missing protocol"));
    }

    // status (the bytes field may be absent or `-`; it is ignored)
    let status_str = rest
        .split_ascii_whitespace()
        .next()
        .ok_or_else(|| err("missing status field"))?;
    let status: u16 = status_str
        .parse()
        .map_err(|_| err(&format!("bad status {status_str:?}")))?;

    if !opts.methods.iter().any(|m| m == method) {
        return Ok(ParsedLine::Skipped {
            line_no,
            reason: SkipReason::Method(method.to_string()),
        });
    }
    if status < opts.min_status || status > opts.max_status {
        return Ok(ParsedLine::Skipped {
            line_no,
            reason: SkipReason::Status(status),
        });
    }

    let path = canonicalize_path(raw_path);
    if path.is_empty() {
        return Err(err("empty path after canonicalization"));
    }
    if let Some(ext) = path_extension(&path) {
        if opts.asset_extensions.iter().any(|e| e.eq_ignore_ascii_case(ext)) {
            return Ok(ParsedLine::Skipped {
                line_no,
                reason: SkipReason::AssetExtension(ext.to_ascii_lowercase()),
            });
        }
    }

    Ok(ParsedLine::Entry(LogEntry {
        user_id: host.to_string(),
        timestamp,
        page: PageId::new(path),
        status,
        raw_line_no: line_no,
    }))
}

/// Canonical page identity for a raw request path: query string and fragment
/// stripped, duplicate slashes collapsed, trailing `/index.html` folded into
/// the directory.
pub fn canonicalize_path(raw: &str) -> String {
    let stripped = raw.split(['?', '#']).next().unwrap_or("");
    let mut out = String::with_capacity(stripped.len());
    let mut prev_slash = false;
    for c in stripped.chars() {
        if c == '/' {
            if prev_slash {
                continue;
            }
            prev_slash = true;
        } else {
            prev_slash = false;
        }
        out.push(c);
    }
    if out.ends_with("/index.html") {
        out.truncate(out.len() - "index.html".len());
    }
    out
}

fn path_extension(path: &str) -> Option<&str> {
    let file = path.rsplit('/').next()?;
    match file.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && !ext.is_empty() => Some(ext),
        _ => None,
    }
}

/// Render a [`LogEntry`] back to one CLF line. Identity fields the entry does
/// not keep are rendered as `-`; re-parsing the line with the same line
/// number yields an equal entry.
pub fn format_clf_line(e: &LogEntry) -> String {
    let dt = DateTime::<Utc>::from_timestamp(e.timestamp, 0)
        .expect("timestamp within the supported year range");
    format!(
        "{} - - [{}] \"GET {} HTTP/1.0\" {} -",
        e.user_id,
        dt.format("%d/%b/%Y:%H:%M:%S %z"),
        e.page,
        e.status
    )
}

/// Parse a whole CLF stream, collecting entries and diagnostics.
///
/// Malformed lines are recoverable: they land in the diagnostics channel and
/// parsing continues.
pub fn parse_clf_reader<R: BufRead>(reader: R, opts: &ParseOptions) -> io::Result<ParseReport> {
    let mut report = ParseReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_clf_line(&line, line_no, opts) {
            Ok(ParsedLine::Entry(e)) => report.entries.push(e),
            Ok(ParsedLine::Skipped { line_no, reason }) => {
                report.diagnostics.push(Diagnostic::Skipped { line_no, reason });
            }
            Err(e) => report.diagnostics.push(Diagnostic::Malformed {
                line_no: e.line_no,
                message: e.message,
            }),
        }
    }
    Ok(report)
}

/// Parse a CLF file; `.gz` inputs are decompressed transparently.
pub fn parse_clf_file(path: &Path, opts: &ParseOptions) -> io::Result<ParseReport> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_clf_reader(BufReader::new(MultiGzDecoder::new(file)), opts)
    } else {
        parse_clf_reader(BufReader::new(file), opts)
    }
}

/// Write entries as a CLF file, one line each, in the given order.
pub fn write_clf_file(path: &Path, entries: &[LogEntry]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in entries {
        writeln!(w, "{}", format_clf_line(e))?;
    }
    w.flush()
}

/// Group entries into per-user streams.
///
/// Streams are disjoint by user and jointly exhaustive; within a stream the
/// entries are sorted by timestamp with the original file order breaking
/// ties. Stream order is deterministic (ascending user id).
pub fn group_by_user(entries: Vec<LogEntry>) -> Vec<UserStream> {
    let mut by_user: BTreeMap<String, Vec<LogEntry>> = BTreeMap::new();
    for e in entries {
        by_user.entry(e.user_id.clone()).or_default().push(e);
    }
    by_user
        .into_iter()
        .map(|(user_id, mut entries)| {
            entries.sort_by_key(|e| (e.timestamp, e.raw_line_no));
            UserStream { user_id, entries }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"192.0.2.7 - - [10/Oct/2000:13:55:36 -0700] "GET /p13.html HTTP/1.0" 200 2326"#;

    /// Days from 1970-01-01 to y-m-d in the proleptic Gregorian calendar
    /// (Howard Hinnant's civil-days algorithm). Independent of chrono.
    fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
        let y = if m <= 2 { y - 1 } else { y };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    fn epoch_utc(y: i64, m: i64, d: i64, hh: i64, mm: i64, ss: i64, tz_offset_secs: i64) -> i64 {
        days_from_civil(y, m, d) * 86_400 + hh * 3600 + mm * 60 + ss - tz_offset_secs
    }

    #[test]
    fn parses_sample_line_with_calendar_oracle() {
        let parsed = parse_clf_line(SAMPLE, 1, &ParseOptions::default()).unwrap();
        // 2000-10-10 13:55:36 at -07:00, converted to UTC by the oracle.
        let expected = epoch_utc(2000, 10, 10, 13, 55, 36, -7 * 3600);
        assert_eq!(expected, 971_211_336);
        match parsed {
            ParsedLine::Entry(e) => {
                assert_eq!(e.user_id, "192.0.2.7");
                assert_eq!(e.page.as_str(), "/p13.html");
                assert_eq!(e.status, 200);
                assert_eq!(e.timestamp, expected);
                assert_eq!(e.raw_line_no, 1);
            }
            other => panic!("expected entry, got {other:?}"),
        }
    }

    #[test]
    fn skips_asset_request() {
        let line = r#"192.0.2.7 - - [10/Oct/2000:13:55:36 -0700] "GET /logo.gif HTTP/1.0" 200 400"#;
        let parsed = parse_clf_line(line, 7, &ParseOptions::default()).unwrap();
        assert_eq!(
            parsed,
            ParsedLine::Skipped {
                line_no: 7,
                reason: SkipReason::AssetExtension("gif".into())
            }
        );
    }

    #[test]
    fn skips_non_get_and_error_status() {
        let post = r#"192.0.2.7 - - [10/Oct/2000:13:55:36 -0700] "POST /form HTTP/1.0" 200 12"#;
        match parse_clf_line(post, 1, &ParseOptions::default()).unwrap() {
            ParsedLine::Skipped { reason: SkipReason::Method(m), .. } => assert_eq!(m, "POST"),
            other => panic!("expected method skip, got {other:?}"),
        }
        let nf = r#"192.0.2.7 - - [10/Oct/2000:13:55:36 -0700] "GET /gone HTTP/1.0" 404 0"#;
        match parse_clf_line(nf, 1, &ParseOptions::default()).unwrap() {
            ParsedLine::Skipped { reason: SkipReason::Status(404), .. } => {}
            other => panic!("expected status skip, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_clf_line("garbage with three fields", 42, &ParseOptions::default())
            .unwrap_err();
        assert_eq!(err.line_no, 42);
    }

    #[test]
    fn rejects_out_of_range_year() {
        let line = r#"h - - [10/Oct/1970:00:00:00 +0000] "GET /a HTTP/1.0" 200 1"#;
        assert!(parse_clf_line(line, 1, &ParseOptions::default()).is_err());
    }

    #[test]
    fn canonicalization_rules() {
        assert_eq!(canonicalize_path("/a//b///c"), "/a/b/c");
        assert_eq!(canonicalize_path("/a/index.html"), "/a/");
        assert_eq!(canonicalize_path("/index.html"), "/");
        assert_eq!(canonicalize_path("/p?q=1#frag"), "/p");
        assert_eq!(canonicalize_path("/x.gif?v=2"), "/x.gif");
    }

    #[test]
    fn round_trip_parse_format_parse() {
        let ParsedLine::Entry(e) = parse_clf_line(SAMPLE, 3, &ParseOptions::default()).unwrap()
        else {
            panic!("sample must parse to an entry");
        };
        let rendered = format_clf_line(&e);
        let ParsedLine::Entry(e2) = parse_clf_line(&rendered, 3, &ParseOptions::default()).unwrap()
        else {
            panic!("rendered line must parse to an entry");
        };
        assert_eq!(e, e2);
    }

    fn entry(user: &str, ts: Timestamp, line_no: u64) -> LogEntry {
        LogEntry {
            user_id: user.to_string(),
            timestamp: ts,
            page: PageId::new("/p"),
            status: 200,
            raw_line_no: line_no,
        }
    }

    #[test]
    fn group_by_user_empty() {
        assert!(group_by_user(vec![]).is_empty());
    }

    #[test]
    fn group_by_user_partitions_and_sorts() {
        let entries = vec![
            entry("b", 10, 1),
            entry("a", 5, 2),
            entry("b", 3, 3),
            entry("a", 5, 4),
        ];
        let streams = group_by_user(entries);
        assert_eq!(streams.len(), 2);
        assert_eq!(streams[0].user_id, "a");
        assert_eq!(streams[1].user_id, "b");
        // equal timestamps keep file order
        assert_eq!(streams[0].entries[0].raw_line_no, 2);
        assert_eq!(streams[0].entries[1].raw_line_no, 4);
        assert_eq!(streams[1].entries[0].timestamp, 3);
    }

    #[test]
    fn grouping_preserves_the_entry_multiset() {
        // 10k entries over 100 users; the concatenated streams must contain
        // exactly the input multiset.
        let mut entries = Vec::new();
        for i in 0..10_000u64 {
            entries.push(entry(&format!("u{}", i % 100), (i * 7919 % 1000) as i64, i));
        }
        let mut expected: Vec<LogEntry> = entries.clone();
        let streams = group_by_user(entries);
        let mut got: Vec<LogEntry> = streams.into_iter().flat_map(|s| s.entries).collect();
        let key = |e: &LogEntry| (e.user_id.clone(), e.timestamp, e.raw_line_no);
        expected.sort_by_key(key);
        got.sort_by_key(key);
        assert_eq!(expected, got);
    }

    #[test]
    fn parsing_is_order_independent() {
        let lines: Vec<String> = (0..50)
            .map(|i| {
                format!(
                    r#"10.0.0.{} - - [10/Oct/2000:13:{:02}:00 +0000] "GET /p{} HTTP/1.0" 200 1"#,
                    i % 3,
                    i % 60,
                    i
                )
            })
            .collect();
        let opts = ParseOptions::default();
        let forward = parse_clf_reader(lines.join("\n").as_bytes(), &opts).unwrap();
        // Shuffle the physical lines but keep each line's original number by
        // re-parsing individually.
        let mut shuffled: Vec<(u64, &String)> =
            lines.iter().enumerate().map(|(i, l)| (i as u64 + 1, l)).collect();
        shuffled.reverse();
        let mut entries = Vec::new();
        for (line_no, line) in shuffled {
            if let ParsedLine::Entry(e) = parse_clf_line(line, line_no, &opts).unwrap() {
                entries.push(e);
            }
        }
        assert_eq!(group_by_user(forward.entries), group_by_user(entries));
    }

    #[test]
    fn gzip_input_parses_identically() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write as _;

        let text = format!("{SAMPLE}\n{SAMPLE}\n");
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        let gz = enc.finish().unwrap();

        let dir = tempfile::tempdir().unwrap();
        let plain_path = dir.path().join("a.log");
        let gz_path = dir.path().join("a.log.gz");
        std::fs::write(&plain_path, &text).unwrap();
        std::fs::write(&gz_path, &gz).unwrap();

        let opts = ParseOptions::default();
        let a = parse_clf_file(&plain_path, &opts).unwrap();
        let b = parse_clf_file(&gz_path, &opts).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.entries.len(), 2);
    }
}
