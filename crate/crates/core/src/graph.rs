// SPDX-License-Identifier: Apache-2.0

//! Undirected simple graphs, edge-list I/O, and dK-2 statistics.
//!
//! Node ids are dense (`0..n`). Arbitrary input ids are relabeled at load
//! time in ascending numeric order; the original labels are kept in
//! [`LoadedGraph::labels`] and can be written as a two-column sidecar.
//! Isolated nodes stay part of the node universe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unordered node pair stored as `(lo, hi)` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(u32, u32);

impl Edge {
    /// Returns `None` for self-loops.
    pub fn new(a: u32, b: u32) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge(a, b)),
            std::cmp::Ordering::Greater => Some(Edge(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn u(self) -> u32 {
        self.0
    }

    pub fn v(self) -> u32 {
        self.1
    }

    pub fn endpoints(self) -> (u32, u32) {
        (self.0, self.1)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.0, self.1)
    }
}

/// Immutable undirected simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph on `n` nodes. Self-loops and duplicates are dropped.
    ///
    /// # Panics
    /// If an endpoint is `>= n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut list: Vec<Edge> = edges
            .into_iter()
            .filter_map(|(a, b)| {
                assert!(
                    (a as usize) < n && (b as usize) < n,
                    "edge ({a}, {b}) outside universe of {n} nodes"
                );
                Edge::new(a, b)
            })
            .collect();
        list.sort_unstable();
        list.dedup();
        Self::from_sorted_edges(n, list)
    }

    fn from_sorted_edges(n: usize, edges: Vec<Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.0 as usize].push(e.1);
            adj[e.1 as usize].push(e.0);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { adj, edges }
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let (small, other) = if self.degree(a) <= self.degree(b) {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[small as usize].binary_search(&other).is_ok()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.has_edge(e.0, e.1)
    }

    /// Common neighbors of `a` and `b`, ascending.
    pub fn common_neighbors(&self, a: u32, b: u32) -> impl Iterator<Item = u32> + '_ {
        SortedIntersection {
            a: self.neighbors(a),
            b: self.neighbors(b),
        }
    }

    /// Same graph with the given edges removed.
    pub fn without_edges<'a, I>(&self, remove: I) -> Graph
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let remove: BTreeSet<Edge> = remove.into_iter().copied().collect();
        let kept = self
            .edges
            .iter()
            .copied()
            .filter(|e| !remove.contains(e))
            .collect();
        Self::from_sorted_edges(self.node_count(), kept)
    }

    pub fn to_builder(&self) -> GraphBuilder {
        GraphBuilder {
            adj: self
                .adj
                .iter()
                .map(|list| list.iter().copied().collect())
                .collect(),
            edge_count: self.edges.len(),
        }
    }

    /// Canonical byte encoding, used for content hashing.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.edges.len() * 8);
        out.extend_from_slice(&(self.node_count() as u64).to_le_bytes());
        for e in &self.edges {
            out.extend_from_slice(&e.0.to_le_bytes());
            out.extend_from_slice(&e.1.to_le_bytes());
        }
        out
    }
}

struct SortedIntersection<'a> {
    a: &'a [u32],
    b: &'a [u32],
}

impl Iterator for SortedIntersection<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        while let (Some(&x), Some(&y)) = (self.a.first(), self.b.first()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => self.a = &self.a[1..],
                std::cmp::Ordering::Greater => self.b = &self.b[1..],
                std::cmp::Ordering::Equal => {
                    self.a = &self.a[1..];
                    self.b = &self.b[1..];
                    return Some(x);
                }
            }
        }
        None
    }
}

/// Mutable single-owner graph used while anonymizing.
///
/// Adjacency sets are ordered so that iteration never depends on hashing.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    adj: Vec<BTreeSet<u32>>,
    edge_count: usize,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            adj: vec![BTreeSet::new(); n],
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].contains(&b)
    }

    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[u as usize].iter().copied()
    }

    /// Adds `{a, b}`; false for self-loops and existing edges.
    pub fn add_edge(&mut self, a: u32, b: u32) -> bool {
        if a == b || !self.adj[a as usize].insert(b) {
            return false;
        }
        self.adj[b as usize].insert(a);
        self.edge_count += 1;
        true
    }

    pub fn remove_edge(&mut self, a: u32, b: u32) -> bool {
        if !self.adj[a as usize].remove(&b) {
            return false;
        }
        self.adj[b as usize].remove(&a);
        self.edge_count -= 1;
        true
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.range(u as u32 + 1..).map(move |&v| Edge(u as u32, v))
        })
    }

    pub fn build(&self) -> Graph {
        Graph::from_sorted_edges(self.adj.len(), self.edges().collect())
    }
}

/// Result of reading an edge list.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original label of each dense node id.
    pub labels: Vec<u64>,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

const NODES_HEADER: &str = "# nodes:";

/// Reads a whitespace-separated `u v` edge list. `#` lines are comments.
///
/// A `# nodes: N` header (as written by [`write_edge_list`]) declares that
/// ids are already dense in `0..N`, which keeps isolated nodes across a
/// write/read cycle. Without it, distinct ids are relabeled in ascending
/// order.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), path)
}

pub fn parse_edge_list<R: BufRead>(reader: R, path: &Path) -> Result<LoadedGraph> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut declared_nodes: Option<usize> = None;
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(count) = trimmed.strip_prefix(NODES_HEADER) {
                let n = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno, format!("bad node count header: {e}")))?;
                declared_nodes = Some(n);
            }
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = |what: &str| -> Result<u64> {
            let tok = tokens
                .next()
                .ok_or_else(|| parse_err(lineno, format!("missing {what} node id")))?;
            tok.parse::<u64>()
                .map_err(|_| parse_err(lineno, format!("malformed node id {tok:?}")))
        };
        let a = next_id("first")?;
        let b = next_id("second")?;
        if let Some(extra) = tokens.next() {
            return Err(parse_err(lineno, format!("unexpected token {extra:?}")));
        }
        raw.push((a, b));
    }

    let self_loops_dropped = raw.iter().filter(|(a, b)| a == b).count();
    if self_loops_dropped > 0 {
        log::warn!(
            "{}: dropped {self_loops_dropped} self-loop(s)",
            path.display()
        );
    }

    let (n, labels, dense): (usize, Vec<u64>, Vec<(u32, u32)>) = match declared_nodes {
        Some(n) => {
            if let Some(&(a, b)) = raw.iter().find(|(a, b)| *a as usize >= n || *b as usize >= n) {
                return Err(parse_err(
                    0,
                    format!("edge ({a}, {b}) exceeds declared node count {n}"),
                ));
            }
            let dense = raw.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
            (n, (0..n as u64).collect(), dense)
        }
        None => {
            let labels: Vec<u64> = raw
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let index: BTreeMap<u64, u32> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (l, i as u32))
                .collect();
            let dense = raw.iter().map(|(a, b)| (index[a], index[b])).collect();
            (labels.len(), labels, dense)
        }
    };

    let non_loops = raw.len() - self_loops_dropped;
    let graph = Graph::from_edges(n, dense);
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph(path.to_path_buf()));
    }
    Ok(LoadedGraph {
        duplicates_dropped: non_loops - graph.edge_count(),
        graph,
        labels,
        self_loops_dropped,
    })
}

/// Writes `# nodes: N` followed by sorted `u v` lines with `u < v`.
pub fn write_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_edge_list_to(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_edge_list_to<W: Write>(graph: &Graph, out: &mut W) -> Result<()> {
    writeln!(out, "{NODES_HEADER} {}", graph.node_count())?;
    for e in graph.edges() {
        writeln!(out, "{} {}", e.0, e.1)?;
    }
    Ok(())
}

/// Two-column `dense_id original_label` sidecar.
pub fn write_id_map(labels: &[u64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (id, label) in labels.iter().enumerate() {
        writeln!(out, "{id} {label}")?;
    }
    out.flush()?;
    Ok(())
}

/// Edge counts keyed by the unordered endpoint-degree pair `(i, j)`, `i <= j`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DK2Series {
    cells: BTreeMap<(u32, u32), u64>,
}

impl DK2Series {
    pub fn from_cells<I: IntoIterator<Item = ((u32, u32), u64)>>(cells: I) -> Self {
        let mut series = DK2Series::default();
        for ((i, j), c) in cells {
            *series.cells.entry((i.min(j), i.max(j))).or_insert(0) += c;
        }
        series
    }

    pub fn get(&self, i: u32, j: u32) -> u64 {
        self.cells
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.cells.keys().copied()
    }

    /// Number of cells, including explicit zero cells.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub(crate) fn set(&mut self, key: (u32, u32), count: u64) {
        self.cells.insert(key, count);
    }
}

/// The dK-2 cell of an edge under a given degree assignment.
pub(crate) fn dk2_key(degrees: &[usize], e: Edge) -> (u32, u32) {
    let a = degrees[e.0 as usize] as u32;
    let b = degrees[e.1 as usize] as u32;
    (a.min(b), a.max(b))
}

/// dK-2 series of `g` under its own degrees.
pub fn dk2_series(g: &Graph) -> DK2Series {
    dk2_series_under(g, &g.degrees())
}

/// Edge counts of `g` bucketed by another degree assignment, typically the
/// degrees of the graph `g` was derived from.
///
/// # Panics
/// If `degrees` is shorter than the node count.
pub fn dk2_series_under(g: &Graph, degrees: &[usize]) -> DK2Series {
    let mut cells = BTreeMap::new();
    for &e in g.edges() {
        *cells.entry(dk2_key(degrees, e)).or_insert(0u64) += 1;
    }
    DK2Series { cells }
}

/// Edge-set difference between an original graph and a perturbed copy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeDiff {
    /// In `other`, not in `original`.
    pub added: BTreeSet<Edge>,
    /// In `original`, not in `other`.
    pub deleted: BTreeSet<Edge>,
}

pub fn edge_diff(original: &Graph, other: &Graph) -> Result<EdgeDiff> {
    check_same_universe(original, other)?;
    let added = other
        .edges()
        .iter()
        .copied()
        .filter(|&e| !original.contains(e))
        .collect();
    let deleted = original
        .edges()
        .iter()
        .copied()
        .filter(|&e| !other.contains(e))
        .collect();
    Ok(EdgeDiff { added, deleted })
}

pub(crate) fn check_same_universe(a: &Graph, b: &Graph) -> Result<()> {
    if a.node_count() != b.node_count() {
        return Err(Error::UniverseMismatch {
            left: a.node_count(),
            right: b.node_count(),
        });
    }
    Ok(())
}
