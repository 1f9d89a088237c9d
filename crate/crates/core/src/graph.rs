//! Undirected simple graphs with dense node ids, plus the plain-text
//! file formats used for edge lists, labels and outlier flags.
//!
//! Edge list: one `u v` pair per line, `#` starts a comment. A comment of the
//! form `# nodes: N` fixes the node count (useful when trailing ids are
//! isolated). Label file: `node_id label_id` per line. Flag file: one flagged
//! node id per line.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{DmgdError, Result};

/// Hop distance returned for nodes not reachable from the BFS source.
/// Compares greater than every finite distance.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    /// Canonical `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a simple undirected graph. Self-loops are dropped and
    /// duplicate or reversed pairs collapse to one edge.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n_nodes {
                    return Err(DmgdError::NodeOutOfRange { index: x, n_nodes });
                }
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n_nodes,
            edges: set.into_iter().collect(),
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_nodes && self.adjacency[u].binary_search(&v).is_ok()
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n_nodes {
            return Err(DmgdError::NodeOutOfRange {
                index: i,
                n_nodes: self.n_nodes,
            });
        }
        Ok(())
    }

    /// Row `i` of the binary adjacency matrix.
    pub fn adjacency_row(&self, i: usize) -> Result<Vec<f64>> {
        self.check_node(i)?;
        let mut row = vec![0.0; self.n_nodes];
        for &j in &self.adjacency[i] {
            row[j] = 1.0;
        }
        Ok(row)
    }

    /// Hop distances from `source`; unreachable nodes get [`UNREACHABLE`].
    pub fn bfs_distances(&self, source: usize) -> Result<Vec<usize>> {
        self.check_node(source)?;
        let mut dist = vec![UNREACHABLE; self.n_nodes];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.adjacency[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Drops every edge incident to a key of `rewired` and connects each key
    /// to its listed targets instead.
    pub(crate) fn rewire(&self, rewired: &HashMap<usize, Vec<usize>>) -> Result<Graph> {
        let kept = self
            .edges
            .iter()
            .copied()
            .filter(|(u, v)| !rewired.contains_key(u) && !rewired.contains_key(v));
        let added = rewired
            .iter()
            .flat_map(|(&node, targets)| targets.iter().map(move |&t| (node, t)));
        Graph::from_edges(self.n_nodes, kept.chain(added))
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| DmgdError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            writeln!(out, "# nodes: {}", self.n_nodes)?;
            for &(u, v) in &self.edges {
                writeln!(out, "{u} {v}")?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| DmgdError::io(path, e))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Compact sparse input ids to `0..n` in increasing id order.
    pub remap_ids: bool,
}

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub self_loops_dropped: usize,
    pub duplicate_edges: usize,
    /// `id_map[dense_id] = original_id` when ids were remapped.
    pub id_map: Option<Vec<u64>>,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DmgdError::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> DmgdError {
    DmgdError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_id(path: &Path, line: usize, token: Option<&str>) -> Result<u64> {
    let token = token.ok_or_else(|| parse_error(path, line, "expected two node ids"))?;
    token
        .parse::<u64>()
        .map_err(|_| parse_error(path, line, format!("invalid node id {token:?}")))
}

fn node_count_header(comment: &str) -> Option<usize> {
    let rest = comment.trim_start_matches('#').trim();
    let rest = rest.strip_prefix("nodes")?;
    let rest = rest.trim_start_matches(':').trim();
    rest.parse().ok()
}

pub fn load_edge_list(path: &Path) -> Result<LoadedGraph> {
    load_edge_list_with(path, LoadOptions::default())
}

pub fn load_edge_list_with(path: &Path, opts: LoadOptions) -> Result<LoadedGraph> {
    let text = read_to_string(path)?;
    let mut header_nodes = None;
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(n) = node_count_header(line) {
                header_nodes = Some(n);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let u = parse_id(path, lineno, tokens.next())?;
        let v = parse_id(path, lineno, tokens.next())?;
        if tokens.next().is_some() {
            return Err(parse_error(path, lineno, "expected exactly two node ids"));
        }
        raw.push((u, v));
    }
    if raw.is_empty() && header_nodes.is_none() {
        return Err(DmgdError::EmptyInput(path.to_path_buf()));
    }

    let self_loops_dropped = raw.iter().filter(|(u, v)| u == v).count();
    if self_loops_dropped > 0 {
        log::warn!("{}: dropped {self_loops_dropped} self-loop line(s)", path.display());
    }

    let (n_nodes, edges, id_map) = if opts.remap_ids {
        let ids: BTreeSet<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
        let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let edges: Vec<_> = raw.iter().map(|(u, v)| (index[u], index[v])).collect();
        (ids.len(), edges, Some(ids.into_iter().collect::<Vec<_>>()))
    } else {
        let max_id = raw.iter().flat_map(|&(u, v)| [u, v]).max();
        let implied = max_id.map_or(0, |m| m as usize + 1);
        let n_nodes = match header_nodes {
            Some(n) if n < implied => {
                return Err(parse_error(
                    path,
                    0,
                    format!("header declares {n} nodes but ids reach {}", implied - 1),
                ))
            }
            Some(n) => n,
            None => implied,
        };
        let edges: Vec<_> = raw.iter().map(|&(u, v)| (u as usize, v as usize)).collect();
        (n_nodes, edges, None)
    };

    let non_loop = edges.iter().filter(|(u, v)| u != v).count();
    let graph = Graph::from_edges(n_nodes, edges)?;
    Ok(LoadedGraph {
        duplicate_edges: non_loop - graph.n_edges(),
        graph,
        self_loops_dropped,
        id_map,
    })
}

/// Per-node class labels and seeded-outlier flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
    pub outlier_flags: Vec<bool>,
}

impl GroundTruth {
    pub fn new(labels: Vec<usize>, outlier_flags: Vec<bool>) -> Result<Self> {
        if labels.len() != outlier_flags.len() {
            return Err(DmgdError::DimensionMismatch {
                expected: labels.len(),
                actual: outlier_flags.len(),
            });
        }
        Ok(GroundTruth {
            labels: compact_labels(&labels),
            outlier_flags,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn n_outliers(&self) -> usize {
        self.outlier_flags.iter().filter(|&&f| f).count()
    }

    pub fn load(labels_path: &Path, flags_path: Option<&Path>, n_nodes: usize) -> Result<Self> {
        let labels = load_labels(labels_path, n_nodes)?;
        let flags = match flags_path {
            Some(p) => load_flags(p, n_nodes)?,
            None => vec![false; n_nodes],
        };
        GroundTruth::new(labels, flags)
    }

    pub fn write_labels(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            s.push_str(&format!("{i} {l}\n"));
        }
        fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }

    pub fn write_flags(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        for (i, _) in self.outlier_flags.iter().enumerate().filter(|(_, &f)| f) {
            s.push_str(&format!("{i}\n"));
        }
        fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }
}

/// Relabels arbitrary class ids to `0..C` preserving their order.
fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    let index: HashMap<usize, usize> = distinct.into_iter().enumerate().map(|(i, l)| (l, i)).collect();
    labels.iter().map(|l| index[l]).collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn load_labels(path: &Path, n_nodes: usize) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    let mut labels = vec![None; n_nodes];
    for (lineno, line) in data_lines(&text) {
        let mut tokens = line.split_whitespace();
        let node = parse_id(path, lineno, tokens.next())? as usize;
        let label = parse_id(path, lineno, tokens.next())? as usize;
        if node >= n_nodes {
            return Err(parse_error(path, lineno, format!("node {node} out of range")));
        }
        labels[node] = Some(label);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| parse_error(path, 0, format!("node {i} has no label"))))
        .collect()
}

pub fn load_flags(path: &Path, n_nodes: usize) -> Result<Vec<bool>> {
    let text = read_to_string(path)?;
    let mut flags = vec![false; n_nodes];
    for (lineno, line) in data_lines(&text) {
        let node = parse_id(path, lineno, Some(line))? as usize;
        if node >= n_nodes {
            return Err(parse_error(path, lineno, format!("node {node} out of range")));
        }
        flags[node] = true;
    }
    Ok(flags)
}
