//! Page identity.

use std::fmt;
use std::sync::Arc;

/// Identity of one static web page.
///
/// The token is a canonical URL path (`/p13.html`) for pages parsed out of
/// real logs, or a symbolic name (`P13`) for hand-built fixtures. Two
/// `PageId`s are equal exactly when their tokens are equal; cloning is a
/// refcount bump.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PageId(Arc<str>);

impl PageId {
    pub fn new(token: impl AsRef<str>) -> Self {
        PageId(Arc::from(token.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PageId({})", self.0)
    }
}

impl From<&str> for PageId {
    fn from(s: &str) -> Self {
        PageId::new(s)
    }
}

impl From<String> for PageId {
    fn from(s: String) -> Self {
        PageId(Arc::from(s))
    }
}
