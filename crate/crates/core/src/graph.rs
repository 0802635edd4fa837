//! Concept hierarchies read from `parent<TAB>child` edge lists.
//!
//! External codes are interned to dense [`ConceptId`]s in first-seen order. The
//! resulting [`KnowledgeGraph`] is immutable and can be shared across threads.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;

/// Dense interned index of a concept, in `[0, node_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptId(pub u32);

impl ConceptId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: self-loop on concept `{code}`")]
    SelfLoop { line: usize, code: String },
    #[error("self-loop on concept `{0}`")]
    SelfLoopEdge(String),
    #[error("hierarchy contains a cycle through concept `{0}`")]
    Cycle(String),
    #[error("unknown concept id {0}")]
    UnknownId(ConceptId),
    #[error("observed set is empty; nothing to embed")]
    EmptyObserved,
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Incrementally assembles a graph. Duplicate edges collapse; cycles are rejected in
/// [`GraphBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    codes: Vec<String>,
    index: HashMap<String, ConceptId>,
    edges: Vec<(ConceptId, ConceptId)>,
    seen: std::collections::HashSet<(ConceptId, ConceptId)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `code`, returning its id. Nodes without edges are allowed.
    pub fn add_node(&mut self, code: &str) -> ConceptId {
        if let Some(&id) = self.index.get(code) {
            return id;
        }
        let id = ConceptId(self.codes.len() as u32);
        self.codes.push(code.to_owned());
        self.index.insert(code.to_owned(), id);
        id
    }

    /// Adds `parent -> child`. Returns `Ok(false)` if the edge was already present.
    pub fn add_edge(&mut self, parent: &str, child: &str) -> Result<bool> {
        if parent == child {
            return Err(GraphError::SelfLoopEdge(parent.to_owned()));
        }
        let p = self.add_node(parent);
        let c = self.add_node(child);
        Ok(self.insert_edge(p, c))
    }

    fn insert_edge(&mut self, parent: ConceptId, child: ConceptId) -> bool {
        if self.seen.insert((parent, child)) {
            self.edges.push((parent, child));
            true
        } else {
            false
        }
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        let n = self.codes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &self.edges {
            children[p.index()].push(c);
            parents[c.index()].push(p);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let graph = KnowledgeGraph {
            codes: self.codes,
            index: self.index,
            edges: self.edges,
            parents,
            children,
        };
        graph.check_acyclic()?;
        Ok(graph)
    }
}

/// Directed multi-parent hierarchy of concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    codes: Vec<String>,
    index: HashMap<String, ConceptId>,
    edges: Vec<(ConceptId, ConceptId)>,
    parents: Vec<Vec<ConceptId>>,
    children: Vec<Vec<ConceptId>>,
}

impl KnowledgeGraph {
    /// Parses a UTF-8 edge list. Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut builder = GraphBuilder::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected 2 tab-separated fields, found {}", fields.len()),
                });
            }
            let (parent, child) = (fields[0], fields[1]);
            if parent.is_empty() || child.is_empty() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "empty concept code".into(),
                });
            }
            if parent == child {
                return Err(GraphError::SelfLoop {
                    line: line_no,
                    code: parent.to_owned(),
                });
            }
            builder.add_edge(parent, child)?;
        }
        builder.build()
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse_edge_list(text.as_bytes())
    }

    pub fn node_count(&self) -> usize {
        self.codes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Edges in insertion order as `(parent, child)`.
    pub fn edges(&self) -> &[(ConceptId, ConceptId)] {
        &self.edges
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = ConceptId> {
        (0..self.codes.len() as u32).map(ConceptId)
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, id: ConceptId) -> Result<&str> {
        self.codes
            .get(id.index())
            .map(String::as_str)
            .ok_or(GraphError::UnknownId(id))
    }

    pub fn id(&self, code: &str) -> Option<ConceptId> {
        self.index.get(code).copied()
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        id.index() < self.codes.len()
    }

    /// Sorted parent list.
    pub fn parents(&self, id: ConceptId) -> &[ConceptId] {
        &self.parents[id.index()]
    }

    /// Sorted child list.
    pub fn children(&self, id: ConceptId) -> &[ConceptId] {
        &self.children[id.index()]
    }

    pub fn roots(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.nodes().filter(|&n| self.parents(n).is_empty())
    }

    /// Directed: edge `u -> v` exists. Undirected: either direction exists.
    pub fn is_connected(&self, u: ConceptId, v: ConceptId, directed: bool) -> Result<bool> {
        for id in [u, v] {
            if !self.contains(id) {
                return Err(GraphError::UnknownId(id));
            }
        }
        Ok(self.connected_unchecked(u, v, directed))
    }

    #[inline]
    pub(crate) fn connected_unchecked(&self, u: ConceptId, v: ConceptId, directed: bool) -> bool {
        self.children[u.index()].binary_search(&v).is_ok()
            || (!directed && self.parents[u.index()].binary_search(&v).is_ok())
    }

    /// Number of distinct nodes `w != u` connected to `u` in the given mode.
    pub(crate) fn neighbor_count(&self, u: ConceptId, directed: bool) -> usize {
        let children = &self.children[u.index()];
        if directed {
            return children.len();
        }
        let parents = &self.parents[u.index()];
        // Both lists are sorted; a node can be parent and child only in a cyclic graph.
        children.len()
            + parents
                .iter()
                .filter(|p| children.binary_search(p).is_err())
                .count()
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.node_count();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(i) = queue.pop_front() {
            visited += 1;
            for c in &self.children[i] {
                indegree[c.index()] -= 1;
                if indegree[c.index()] == 0 {
                    queue.push_back(c.index());
                }
            }
        }
        if visited == n {
            return Ok(());
        }
        let culprit = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        Err(GraphError::Cycle(self.codes[culprit].clone()))
    }

    /// Union of all root-to-observed paths, with every edge among retained nodes.
    ///
    /// Retained nodes keep their relative order, so extracting again with the same
    /// observed codes reproduces the graph exactly.
    pub fn extract_ancestral_subtree(&self, observed: &ObservedSet) -> Result<KnowledgeGraph> {
        if observed.is_empty() {
            return Err(GraphError::EmptyObserved);
        }
        let mut keep = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        for &id in observed.iter() {
            if !self.contains(id) {
                return Err(GraphError::UnknownId(id));
            }
            if !keep[id.index()] {
                keep[id.index()] = true;
                queue.push_back(id);
            }
        }
        while let Some(id) = queue.pop_front() {
            for &p in self.parents(id) {
                if !keep[p.index()] {
                    keep[p.index()] = true;
                    queue.push_back(p);
                }
            }
        }

        let mut builder = GraphBuilder::new();
        for id in self.nodes().filter(|id| keep[id.index()]) {
            builder.add_node(&self.codes[id.index()]);
        }
        // Retained set is closed under parents, so a kept child implies a kept parent.
        for &(p, c) in &self.edges {
            if keep[c.index()] {
                let p = builder.index[&self.codes[p.index()]];
                let c = builder.index[&self.codes[c.index()]];
                builder.insert_edge(p, c);
            }
        }
        builder.build()
    }

    /// Writes the edge list in the input format (no comments, insertion order).
    ///
    /// Nodes without any edge cannot be expressed in this format; the code index
    /// written by [`KnowledgeGraph::write_code_index`] lists every node.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(p, c) in &self.edges {
            writeln!(out, "{}\t{}", self.codes[p.index()], self.codes[c.index()])?;
        }
        Ok(())
    }

    /// `index<TAB>code` per node.
    pub fn write_code_index<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index\tcode")?;
        for (i, code) in self.codes.iter().enumerate() {
            writeln!(out, "{i}\t{code}")?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical edge list followed by the node list.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf.push(b'\n');
        for code in &self.codes {
            buf.extend_from_slice(code.as_bytes());
            buf.push(b'\n');
        }
        sha256_hex(buf)
    }
}

/// Concepts recorded in source data, resolved against a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservedSet {
    concepts: BTreeSet<ConceptId>,
}

/// Outcome of resolving external codes: unknown codes are kept for reporting.
#[derive(Debug, Clone, Default)]
pub struct Resolution {
    pub observed: ObservedSet,
    pub unresolved: Vec<String>,
}

impl ObservedSet {
    pub fn from_ids(ids: impl IntoIterator<Item = ConceptId>) -> Self {
        Self {
            concepts: ids.into_iter().collect(),
        }
    }

    /// Resolves codes against `graph`; blank and `#` lines are ignored.
    pub fn resolve<'a>(
        graph: &KnowledgeGraph,
        codes: impl IntoIterator<Item = &'a str>,
    ) -> Resolution {
        let mut res = Resolution::default();
        for code in codes {
            let code = code.trim();
            if code.is_empty() || code.starts_with('#') {
                continue;
            }
            match graph.id(code) {
                Some(id) => {
                    res.observed.concepts.insert(id);
                }
                None => res.unresolved.push(code.to_owned()),
            }
        }
        res
    }

    pub fn read<R: BufRead>(graph: &KnowledgeGraph, reader: R) -> io::Result<Resolution> {
        let lines = reader.lines().collect::<io::Result<Vec<_>>>()?;
        Ok(Self::resolve(graph, lines.iter().map(String::as_str)))
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.concepts.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConceptId> {
        self.concepts.iter()
    }
}
