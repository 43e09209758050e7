//! Directed web-site graph: pages interned from URL strings, links as an
//! edge list with per-page successor lists.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Dense index of a page inside one [`WebTopology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PageId(pub u32);

impl PageId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct WebTopology {
    urls: Vec<String>,
    ids: HashMap<String, PageId>,
    // insertion order is kept so that saving and reloading reproduces ids
    edges: Vec<(PageId, PageId)>,
    edge_set: HashSet<(PageId, PageId)>,
    out: Vec<Vec<PageId>>,
}

impl PartialEq for WebTopology {
    fn eq(&self, other: &Self) -> bool {
        self.urls == other.urls && self.edges == other.edges
    }
}

impl Eq for WebTopology {}

impl WebTopology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `url`, adding a new page if it is not known yet.
    pub fn intern(&mut self, url: &str) -> PageId {
        if let Some(&id) = self.ids.get(url) {
            return id;
        }
        let id = PageId(u32::try_from(self.urls.len()).expect("page count exceeds u32"));
        self.urls.push(url.to_owned());
        self.ids.insert(url.to_owned(), id);
        self.out.push(Vec::new());
        id
    }

    /// Adds the link `from -> to`. Returns false if it already existed.
    pub fn add_edge(&mut self, from: PageId, to: PageId) -> Result<bool> {
        self.check(from)?;
        self.check(to)?;
        if !self.edge_set.insert((from, to)) {
            return Ok(false);
        }
        self.edges.push((from, to));
        self.out[from.index()].push(to);
        Ok(true)
    }

    pub fn add_link(&mut self, from: &str, to: &str) -> bool {
        let from = self.intern(from);
        let to = self.intern(to);
        self.add_edge(from, to).expect("interned ids are valid")
    }

    pub fn page_count(&self) -> usize {
        self.urls.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.urls.is_empty()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[(PageId, PageId)] {
        &self.edges
    }

    pub fn pages(&self) -> impl Iterator<Item = PageId> + '_ {
        (0..self.urls.len() as u32).map(PageId)
    }

    pub fn page_id(&self, url: &str) -> Option<PageId> {
        self.ids.get(url).copied()
    }

    pub fn url(&self, page: PageId) -> Result<&str> {
        self.check(page)?;
        Ok(&self.urls[page.index()])
    }

    pub fn has_link(&self, from: PageId, to: PageId) -> Result<bool> {
        self.check(from)?;
        self.check(to)?;
        Ok(self.edge_set.contains(&(from, to)))
    }

    pub fn out_degree(&self, page: PageId) -> Result<usize> {
        self.check(page)?;
        Ok(self.out[page.index()].len())
    }

    pub fn out_neighbors(&self, page: PageId) -> Result<&[PageId]> {
        self.check(page)?;
        Ok(&self.out[page.index()])
    }

    /// Reads an edge list: one `<from-url> <to-url>` pair per line, `#`
    /// comments and blank lines ignored.
    pub fn load<R: BufRead>(source: R) -> Result<Self> {
        let mut topology = Self::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let [from, to] = tokens[..] else {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected `<from> <to>`, found {} tokens", tokens.len()),
                });
            };
            topology.add_link(from, to);
        }
        Ok(topology)
    }

    /// Writes the edge list in the format accepted by [`load`](Self::load).
    /// Pages without any edge are not representable and are lost.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        for &(from, to) in &self.edges {
            writeln!(sink, "{} {}", self.urls[from.index()], self.urls[to.index()])?;
        }
        Ok(())
    }

    fn check(&self, page: PageId) -> Result<()> {
        if page.index() < self.urls.len() {
            Ok(())
        } else {
            Err(Error::InvalidPage(page))
        }
    }
}

/// Parses an edge list held in memory.
pub fn load_topology(text: &str) -> Result<WebTopology> {
    WebTopology::load(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(t: &WebTopology, url: &str) -> PageId {
        t.page_id(url).unwrap()
    }

    #[test]
    fn small_edge_list() {
        let t = load_topology("A B\nA C\nB C").unwrap();
        assert_eq!(t.page_count(), 3);
        assert_eq!(t.edge_count(), 3);
        assert_eq!(t.out_degree(id(&t, "A")).unwrap(), 2);
        assert_eq!(id(&t, "A"), PageId(0));
        assert_eq!(id(&t, "C"), PageId(2));
    }

    #[test]
    fn empty_file() {
        let t = load_topology("").unwrap();
        assert_eq!(t.page_count(), 0);
        assert_eq!(t.edge_count(), 0);
        assert!(matches!(t.has_link(PageId(0), PageId(1)), Err(Error::InvalidPage(_))));
        assert!(t.out_degree(PageId(0)).is_err());
    }

    #[test]
    fn comments_blanks_and_duplicates() {
        let t = load_topology("# site map\n\nA B\n  A   B  \n# again\nB A\n").unwrap();
        assert_eq!(t.page_count(), 2);
        assert_eq!(t.edge_count(), 2);
        assert_eq!(t.out_neighbors(id(&t, "A")).unwrap(), &[id(&t, "B")]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_topology("A B\n\nA B C\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = load_topology("lonely\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn self_loops_are_accepted() {
        let t = load_topology("A A\nA B").unwrap();
        assert!(t.has_link(id(&t, "A"), id(&t, "A")).unwrap());
        assert_eq!(t.out_degree(id(&t, "A")).unwrap(), 2);
    }

    #[test]
    fn isolated_page_has_no_out_degree() {
        let mut t = load_topology("A B").unwrap();
        let q = t.intern("Q");
        assert_eq!(t.out_degree(q).unwrap(), 0);
        assert_eq!(t.out_degree(id(&t, "B")).unwrap(), 0);
    }

    #[test]
    fn save_keeps_interning_order() {
        // B is first seen as a target but its own edges come later
        let text = "A C\nA B\nB D\nC E\n";
        let t = load_topology(text).unwrap();
        let mut buf = Vec::new();
        t.save(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), text);
        assert_eq!(WebTopology::load(&buf[..]).unwrap(), t);
    }
}
