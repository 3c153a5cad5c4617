//! Shared fixtures for unit tests.

use crate::page::PageId;
use crate::topology::WebTopology;

pub(crate) fn p(s: &str) -> PageId {
    PageId::new(s)
}

/// The Figure-1 fixture: only the edges the worked example forces
/// (P1→P20, P20→P23, P1→P13, P13→P34; notably no P23→P13 and no P20→P13).
pub(crate) fn figure1_fixture() -> WebTopology {
    WebTopology::new(
        ["P1", "P20", "P23", "P13", "P34"].iter().map(|s| p(s)).collect(),
        vec![
            (p("P1"), p("P20")),
            (p("P20"), p("P23")),
            (p("P1"), p("P13")),
            (p("P13"), p("P34")),
        ],
        vec![p("P1")],
    )
    .unwrap()
}
