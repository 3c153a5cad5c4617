//! Directed hyperlink graph of a web site.
//!
//! [`WebTopology`] stores the link structure both as successor lists and as a
//! constant-time edge-membership set (the Link matrix), plus the designated
//! entry pages. Topologies are immutable after construction and safe to share
//! across parallel workers.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::page::PageId;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("unknown page {0}")]
    UnknownPage(String),
    #[error("page {0} declared twice")]
    DuplicatePage(String),
    #[error("self-loop on page {0}")]
    SelfLoop(String),
    #[error("topology has no entry pages")]
    NoEntryPages,
    #[error("invalid generation parameters: {0}")]
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

/// Directed page-link graph with designated entry pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WebTopology {
    pages: Vec<PageId>,
    index: HashMap<PageId, u32>,
    /// Successor lists, sorted ascending by page index.
    successors: Vec<Vec<u32>>,
    /// Edge set for constant-time membership tests.
    edges: HashSet<(u32, u32)>,
    /// Entry-page indices, sorted ascending.
    entries: Vec<u32>,
}

impl WebTopology {
    /// Builds a topology, validating that every link endpoint and entry page
    /// is declared, that there are no self-loops, and that at least one entry
    /// page exists. Duplicate links are collapsed.
    pub fn new(
        pages: Vec<PageId>,
        links: Vec<(PageId, PageId)>,
        entry_pages: Vec<PageId>,
    ) -> Result<Self, TopologyError> {
        let mut index = HashMap::with_capacity(pages.len());
        for (i, p) in pages.iter().enumerate() {
            if index.insert(p.clone(), i as u32).is_some() {
                return Err(TopologyError::DuplicatePage(p.to_string()));
            }
        }
        let resolve = |p: &PageId| -> Result<u32, TopologyError> {
            index
                .get(p)
                .copied()
                .ok_or_else(|| TopologyError::UnknownPage(p.to_string()))
        };

        let mut successors = vec![Vec::new(); pages.len()];
        let mut edges = HashSet::with_capacity(links.len());
        for (a, b) in &links {
            let (ai, bi) = (resolve(a)?, resolve(b)?);
            if ai == bi {
                return Err(TopologyError::SelfLoop(a.to_string()));
            }
            if edges.insert((ai, bi)) {
                successors[ai as usize].push(bi);
            }
        }
        for succ in &mut successors {
            succ.sort_unstable();
        }

        if entry_pages.is_empty() {
            return Err(TopologyError::NoEntryPages);
        }
        let mut entries = entry_pages
            .iter()
            .map(resolve)
            .collect::<Result<Vec<_>, _>>()?;
        entries.sort_unstable();
        entries.dedup();

        Ok(WebTopology {
            pages,
            index,
            successors,
            edges,
            entries,
        })
    }

    pub fn n_pages(&self) -> usize {
        self.pages.len()
    }

    pub fn pages(&self) -> &[PageId] {
        &self.pages
    }

    pub fn page(&self, idx: u32) -> &PageId {
        &self.pages[idx as usize]
    }

    pub fn index_of(&self, p: &PageId) -> Option<u32> {
        self.index.get(p).copied()
    }

    /// True iff there is a hyperlink a→b. Errors on pages the topology does
    /// not know, naming the offending page.
    pub fn has_link(&self, a: &PageId, b: &PageId) -> Result<bool, TopologyError> {
        let ai = self
            .index_of(a)
            .ok_or_else(|| TopologyError::UnknownPage(a.to_string()))?;
        let bi = self
            .index_of(b)
            .ok_or_else(|| TopologyError::UnknownPage(b.to_string()))?;
        Ok(self.has_link_idx(ai, bi))
    }

    pub fn has_link_idx(&self, a: u32, b: u32) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Non-erroring link test: pages outside the topology have no links.
    pub fn linked(&self, a: &PageId, b: &PageId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(ai), Some(bi)) => self.has_link_idx(ai, bi),
            _ => false,
        }
    }

    pub fn successors_idx(&self, idx: u32) -> &[u32] {
        &self.successors[idx as usize]
    }

    pub fn out_degree(&self, idx: u32) -> usize {
        self.successors[idx as usize].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn entry_indices(&self) -> &[u32] {
        &self.entries
    }

    pub fn entry_pages(&self) -> impl Iterator<Item = &PageId> {
        self.entries.iter().map(|&i| &self.pages[i as usize])
    }
}

/// Parameters for the random-topology generator.
#[derive(Debug, Clone)]
pub struct TopologyGenParams {
    pub n_pages: usize,
    /// Expected out-degree of each page.
    pub avg_outdegree: f64,
    /// Fraction of pages designated as entry pages; at least one page.
    pub entry_fraction: f64,
    pub seed: u64,
}

impl Default for TopologyGenParams {
    fn default() -> Self {
        TopologyGenParams {
            n_pages: 300,
            avg_outdegree: 15.0,
            entry_fraction: 0.05,
            seed: 0,
        }
    }
}

/// Generates a random site topology: each ordered pair (a, b), a ≠ b, is an
/// edge independently with probability `avg_outdegree / (n_pages − 1)`, and
/// `ceil(entry_fraction · n_pages)` distinct entry pages are drawn uniformly.
/// Deterministic given the seed. Pages are named `/p1` … `/pN` so that
/// simulated logs round-trip through the CLF parser unchanged.
pub fn generate_random_topology(p: &TopologyGenParams) -> Result<WebTopology, TopologyError> {
    if p.n_pages == 0 {
        return Err(TopologyError::InvalidParams("n_pages must be positive".into()));
    }
    if p.avg_outdegree <= 0.0 {
        return Err(TopologyError::InvalidParams(
            "avg_outdegree must be positive".into(),
        ));
    }
    if p.avg_outdegree >= p.n_pages as f64 {
        return Err(TopologyError::InvalidParams(
            "avg_outdegree must be smaller than n_pages".into(),
        ));
    }
    if p.n_pages > 1 && p.avg_outdegree > (p.n_pages - 1) as f64 {
        return Err(TopologyError::InvalidParams(
            "avg_outdegree/(n_pages-1) must be a probability".into(),
        ));
    }
    if !(p.entry_fraction > 0.0 && p.entry_fraction <= 1.0) {
        return Err(TopologyError::InvalidParams(
            "entry_fraction must be in (0, 1]".into(),
        ));
    }

    let n = p.n_pages;
    let pages: Vec<PageId> = (1..=n).map(|i| PageId::new(format!("/p{i}"))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut links = Vec::new();
    if n > 1 {
        let edge_prob = p.avg_outdegree / (n - 1) as f64;
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random_bool(edge_prob) {
                    links.push((pages[a].clone(), pages[b].clone()));
                }
            }
        }
    }

    let n_entries = (p.entry_fraction * n as f64).ceil() as usize;
    let n_entries = n_entries.clamp(1, n);
    let mut entry_idx = sample(&mut rng, n, n_entries).into_vec();
    entry_idx.sort_unstable();
    let entry_pages = entry_idx.iter().map(|&i| pages[i].clone()).collect();

    WebTopology::new(pages, links, entry_pages)
}

/// Writes the topology text format:
///
/// ```text
/// pages: 3
/// P1: P2, P3
/// P2: P3
/// P3:
/// entry: P1
/// ```
pub fn save_topology(t: &WebTopology, path: &Path) -> Result<(), TopologyError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "pages: {}", t.n_pages())?;
    for (i, page) in t.pages().iter().enumerate() {
        let succ: Vec<&str> = t
            .successors_idx(i as u32)
            .iter()
            .map(|&j| t.page(j).as_str())
            .collect();
        writeln!(w, "{}: {}", page, succ.join(", "))?;
    }
    let entries: Vec<&str> = t.entry_pages().map(|p| p.as_str()).collect();
    writeln!(w, "entry: {}", entries.join(", "))?;
    w.flush()?;
    Ok(())
}

/// Loads the topology text format. Whitespace-insensitive; `#` starts a
/// comment. Syntax errors and dangling page references carry line numbers.
pub fn load_topology(path: &Path) -> Result<WebTopology, TopologyError> {
    let reader = BufReader::new(File::open(path)?);
    let display = path.display().to_string();
    let syntax = |line: u64, message: String| TopologyError::FileSyntax {
        path: display.clone(),
        line,
        message,
    };

    // Significant lines with their 1-based numbers, comments stripped.
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let stripped = line.split('#').next().unwrap_or("").trim().to_string();
        if !stripped.is_empty() {
            lines.push((idx as u64 + 1, stripped));
        }
    }

    let mut iter = lines.into_iter();
    let (header_no, header) = iter
        .next()
        .ok_or_else(|| syntax(1, "empty topology file".into()))?;
    let n: usize = header
        .strip_prefix("pages:")
        .ok_or_else(|| syntax(header_no, "expected `pages: <n>` header".into()))?
        .trim()
        .parse()
        .map_err(|_| syntax(header_no, "bad page count".into()))?;

    let mut pages = Vec::with_capacity(n);
    let mut raw_links: Vec<(u64, String, String)> = Vec::new();
    for _ in 0..n {
        let (line_no, line) = iter
            .next()
            .ok_or_else(|| syntax(header_no, format!("expected {n} page lines")))?;
        let (name, succ) = line
            .split_once(':')
            .ok_or_else(|| syntax(line_no, "expected `<page>: <successors>`".into()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(syntax(line_no, "empty page name".into()));
        }
        pages.push(PageId::new(name));
        for s in succ.split(',') {
            let s = s.trim();
            if !s.is_empty() {
                raw_links.push((line_no, name.to_string(), s.to_string()));
            }
        }
    }

    let (entry_no, entry_line) = iter
        .next()
        .ok_or_else(|| syntax(header_no, "missing `entry:` line".into()))?;
    let entry_tokens = entry_line
        .strip_prefix("entry:")
        .ok_or_else(|| syntax(entry_no, "expected `entry: <pages>`".into()))?;
    let entry_pages: Vec<PageId> = entry_tokens
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PageId::new)
        .collect();

    if let Some((line_no, _)) = iter.next() {
        return Err(syntax(line_no, "unexpected content after entry line".into()));
    }

    let declared: HashSet<&str> = pages.iter().map(|p| p.as_str()).collect();
    for (line_no, from, to) in &raw_links {
        if !declared.contains(to.as_str()) {
            return Err(syntax(
                *line_no,
                format!("link {from} -> {to} references undeclared page {to}"),
            ));
        }
    }
    for e in &entry_pages {
        if !declared.contains(e.as_str()) {
            return Err(syntax(entry_no, format!("undeclared entry page {e}")));
        }
    }

    let links = raw_links
        .into_iter()
        .map(|(_, a, b)| (PageId::new(a), PageId::new(b)))
        .collect();
    WebTopology::new(pages, links, entry_pages)
}
