//! Undirected graphs, digraphs and vertex/edge partitions on the vertex set
//! `1..=n`, plus the combinatorial invariants the threshold bounds use:
//! clique number, chordality, treewidth with a chordal cover, complement and
//! in-degree.
//!
//! Vertices are 1-indexed at every public boundary (constructors, accessors,
//! file formats). Internally the algorithms work on 0-indexed adjacency.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Largest vertex count accepted by exact treewidth.
pub const EXACT_TREEWIDTH_MAX_N: usize = 15;

/// A simple undirected graph on `1..=n`. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges,
        }
    }
}

impl Graph {
    /// Builds a graph from 1-indexed pairs. Orientation and repeats of a pair
    /// are ignored; self-loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            for w in [u, v] {
                if w < 1 || w > n {
                    return Err(Error::InvalidGraph(format!(
                        "endpoint {w} outside 1..={n}"
                    )));
                }
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in &set {
            adj[u - 1][v - 1] = true;
            adj[v - 1][u - 1] = true;
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
            adj,
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, []).expect("empty graph on n >= 1 vertices")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j)));
        Graph::new(n, edges).expect("valid complete graph")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Graph::new(n, (1..=n).map(|i| (i, i % n + 1))).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|i| (i, i + 1))).expect("valid path")
    }

    /// K_{a,b} with parts `1..=a` and `a+1..=a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges = (1..=a).flat_map(|i| (a + 1..=a + b).map(move |j| (i, j)));
        Graph::new(a + b, edges).expect("valid complete bipartite graph")
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i + 1, (i + 1) % 5 + 1));
            edges.push((i + 1, i + 6));
            edges.push((i + 6, (i + 2) % 5 + 6));
        }
        Graph::new(10, edges).expect("valid Petersen graph")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted 1-indexed edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// 1-indexed adjacency test.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u >= 1 && v >= 1 && u <= self.n && v <= self.n && self.adj[u - 1][v - 1]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v - 1].iter().filter(|&&b| b).count()
    }

    /// 1-indexed neighbours of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (1..=self.n).filter(|&w| self.adj[v - 1][w - 1]).collect()
    }

    /// Pairs `(i, j)`, `i < j`, that are not edges.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        (1..=self.n)
            .flat_map(|i| (i + 1..=self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.adj[i - 1][j - 1])
            .collect()
    }

    pub(crate) fn adj0(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    /// True when every edge of `self` is an edge of `other` (same vertex count).
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges.iter().all(|&(u, v)| other.has_edge(u, v))
    }

    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for w in 0..self.n {
                    if self.adj[u][w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Writes the edge-list format: `n <count>` header then sorted `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// A digraph on `1..=n` without self-loops or repeated arcs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in arcs {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            for w in [u, v] {
                if w < 1 || w > n {
                    return Err(Error::InvalidGraph(format!(
                        "endpoint {w} outside 1..={n}"
                    )));
                }
            }
            set.insert((u, v));
        }
        Ok(Digraph {
            n,
            arcs: set.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Sources of arcs into `v`, ascending.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter(|&&(_, t)| t == v)
            .map(|&(s, _)| s)
            .collect()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.arcs.iter().filter(|&&(_, t)| t == v).count()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("digraph n {}\n", self.n);
        for &(u, v) in &self.arcs {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

pub fn max_in_degree(d: &Digraph) -> usize {
    (1..=d.n()).map(|v| d.in_degree(v)).max().unwrap_or(0)
}

/// A partition of the vertex set `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexPartition {
    parts: Vec<Vec<usize>>,
}

impl VertexPartition {
    pub fn new(n: usize, parts: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut clean = Vec::with_capacity(parts.len());
        for part in parts {
            if part.is_empty() {
                return Err(Error::InvalidPartition("empty vertex part".into()));
            }
            let mut p = part;
            p.sort_unstable();
            for &v in &p {
                if v < 1 || v > n {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {v} outside 1..={n}"
                    )));
                }
                if std::mem::replace(&mut seen[v - 1], true) {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {v} appears in more than one part"
                    )));
                }
            }
            clean.push(p);
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "vertex {} not covered",
                v + 1
            )));
        }
        Ok(VertexPartition { parts: clean })
    }

    pub fn singletons(n: usize) -> Self {
        VertexPartition {
            parts: (1..=n).map(|v| vec![v]).collect(),
        }
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }
}

/// A partition of the edge set of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePartition {
    parts: Vec<Vec<(usize, usize)>>,
}

impl EdgePartition {
    /// Validates that `parts` partitions exactly `E(g)`.
    pub fn new(g: &Graph, parts: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut clean = Vec::with_capacity(parts.len());
        for part in parts {
            if part.is_empty() {
                return Err(Error::InvalidPartition("empty edge part".into()));
            }
            let mut p: Vec<_> = part.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
            p.sort_unstable();
            for &(u, v) in &p {
                if !g.has_edge(u, v) {
                    return Err(Error::InvalidPartition(format!(
                        "{u}-{v} is not an edge of the graph"
                    )));
                }
                if !seen.insert((u, v)) {
                    return Err(Error::InvalidPartition(format!(
                        "edge {u}-{v} appears in more than one part"
                    )));
                }
            }
            clean.push(p);
        }
        if let Some(&(u, v)) = g.edges().iter().find(|e| !seen.contains(e)) {
            return Err(Error::InvalidPartition(format!("edge {u}-{v} not covered")));
        }
        Ok(EdgePartition { parts: clean })
    }

    pub fn singletons(g: &Graph) -> Self {
        EdgePartition {
            parts: g.edges().iter().map(|&e| vec![e]).collect(),
        }
    }

    pub fn parts(&self) -> &[Vec<(usize, usize)>] {
        &self.parts
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct EdgeListBody {
    declared_n: Option<usize>,
    pairs: Vec<(usize, usize)>,
    max_label: usize,
}

fn parse_body(text: &str, directed: bool) -> Result<EdgeListBody> {
    let mut declared_n = None;
    let mut pairs = Vec::new();
    let mut max_label = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let header = match (directed, tokens.as_slice()) {
            (false, ["n", count]) => Some(*count),
            (true, ["digraph", "n", count]) => Some(*count),
            (false, ["digraph", ..]) => {
                return Err(Error::parse(line_no, "digraph header in an undirected edge list"))
            }
            (true, ["n", _]) => {
                return Err(Error::parse(line_no, "expected header \"digraph n <count>\""))
            }
            _ => None,
        };
        if let Some(count) = header {
            if declared_n.is_some() || !pairs.is_empty() {
                return Err(Error::parse(line_no, "header must precede all edges and appear once"));
            }
            let c: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad vertex count {count:?}")))?;
            if c == 0 {
                return Err(Error::parse(line_no, "vertex count must be positive"));
            }
            declared_n = Some(c);
            continue;
        }
        let [a, b] = tokens.as_slice() else {
            return Err(Error::parse(line_no, format!("expected \"u v\", got {line:?}")));
        };
        let parse_label = |t: &str| -> Result<usize> {
            let v: i64 = t
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad vertex label {t:?}")))?;
            if v < 1 {
                return Err(Error::parse(line_no, format!("vertex label {v} < 1")));
            }
            Ok(v as usize)
        };
        let (u, v) = (parse_label(a)?, parse_label(b)?);
        if u == v {
            return Err(Error::parse(line_no, format!("self-loop at vertex {u}")));
        }
        if let Some(c) = declared_n {
            if u.max(v) > c {
                return Err(Error::parse(
                    line_no,
                    format!("label {} exceeds declared vertex count {c}", u.max(v)),
                ));
            }
        }
        max_label = max_label.max(u).max(v);
        pairs.push((u, v));
    }
    Ok(EdgeListBody {
        declared_n,
        pairs,
        max_label,
    })
}

/// Parses the 1-indexed edge-list format. The vertex count is the `n <count>`
/// header when present, otherwise the largest label.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let body = parse_body(text, false)?;
    let n = body.declared_n.unwrap_or(body.max_label);
    if n == 0 {
        return Err(Error::parse(0, "no edges and no \"n <count>\" header"));
    }
    Graph::new(n, body.pairs)
}

pub fn parse_digraph(text: &str) -> Result<Digraph> {
    let body = parse_body(text, true)?;
    let n = body.declared_n.unwrap_or(body.max_label);
    if n == 0 {
        return Err(Error::parse(0, "no arcs and no \"digraph n <count>\" header"));
    }
    Digraph::new(n, body.pairs)
}

// ---------------------------------------------------------------------------
// Random generation

/// G(n, p): every pair included independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seed::rng(seed);
    let p = p.clamp(0.0, 1.0);
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("generated pairs are valid")
}

/// Random chordal graph built by adding vertices one at a time, each joined
/// to a random clique of the current graph (so every new vertex is simplicial
/// and the reverse insertion order is a perfect elimination ordering).
/// Vertex labels are shuffled afterwards.
pub fn random_chordal(n: usize, seed: u64) -> Graph {
    let mut rng = seed::rng(seed);
    let mut adj = vec![vec![false; n]; n];
    for v in 1..n {
        // Grow a clique inside the current graph from a random anchor.
        let anchor = rng.random_range(0..v);
        let target = rng.random_range(0..=v.min(4));
        let mut clique: Vec<usize> = Vec::new();
        if target > 0 {
            clique.push(anchor);
            let mut cands: Vec<usize> = (0..v).filter(|&w| adj[anchor][w]).collect();
            while clique.len() < target && !cands.is_empty() {
                let pick = cands.swap_remove(rng.random_range(0..cands.len()));
                if clique.iter().all(|&c| adj[c][pick]) {
                    clique.push(pick);
                }
            }
        }
        for &c in &clique {
            adj[v][c] = true;
            adj[c][v] = true;
        }
    }
    let mut labels: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for w in u + 1..n {
            if adj[u][w] {
                edges.push((labels[u], labels[w]));
            }
        }
    }
    Graph::new(n.max(1), edges).expect("generated pairs are valid")
}

/// Random digraph with each ordered pair present with probability `p`.
pub fn random_digraph(n: usize, p: f64, seed: u64) -> Digraph {
    let mut rng = seed::rng(seed);
    let mut arcs = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i != j && rng.random::<f64>() < p {
                arcs.push((i, j));
            }
        }
    }
    Digraph::new(n, arcs).expect("generated arcs are valid")
}

// ---------------------------------------------------------------------------
// Invariants

pub fn complement(g: &Graph) -> Graph {
    Graph::new(g.n(), g.non_edges()).expect("complement of a valid graph")
}

/// A maximum clique (1-indexed, ascending) by Bron–Kerbosch with Tomita
/// pivoting, outer loop in degeneracy order.
pub fn max_clique(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let order = degeneracy_order(g);
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut best: Vec<usize> = vec![0];
    for &v in &order {
        let p: Vec<usize> = (0..n).filter(|&w| g.adj0(v, w) && pos[w] > pos[v]).collect();
        let x: Vec<usize> = (0..n).filter(|&w| g.adj0(v, w) && pos[w] < pos[v]).collect();
        let mut r = vec![v];
        bron_kerbosch(g, &mut r, p, x, &mut best);
    }
    let mut out: Vec<usize> = best.into_iter().map(|v| v + 1).collect();
    out.sort_unstable();
    out
}

fn bron_kerbosch(
    g: &Graph,
    r: &mut Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    best: &mut Vec<usize>,
) {
    if p.is_empty() {
        if x.is_empty() && r.len() > best.len() {
            *best = r.clone();
        }
        return;
    }
    if r.len() + p.len() <= best.len() {
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&w| g.adj0(u, w)).count())
        .expect("p nonempty");
    let mut p = p;
    let mut x = x;
    let branch: Vec<usize> = p.iter().copied().filter(|&v| !g.adj0(pivot, v)).collect();
    for v in branch {
        let np: Vec<usize> = p.iter().copied().filter(|&w| g.adj0(v, w)).collect();
        let nx: Vec<usize> = x.iter().copied().filter(|&w| g.adj0(v, w)).collect();
        r.push(v);
        bron_kerbosch(g, r, np, nx, best);
        r.pop();
        p.retain(|&w| w != v);
        x.push(v);
    }
}

fn degeneracy_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v + 1)).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| deg[v])
            .expect("vertex remains");
        removed[v] = true;
        order.push(v);
        for w in 0..n {
            if g.adj0(v, w) && !removed[w] {
                deg[w] -= 1;
            }
        }
    }
    order
}

pub fn clique_number(g: &Graph) -> usize {
    max_clique(g).len()
}

/// Perfect elimination ordering (1-indexed, first eliminated first) when `g`
/// is chordal; `None` otherwise. Found by maximum cardinality search and then
/// verified.
pub fn perfect_elimination_ordering(g: &Graph) -> Option<Vec<usize>> {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("vertex remains");
        visited[v] = true;
        visit.push(v);
        for w in 0..n {
            if g.adj0(v, w) && !visited[w] {
                weight[w] += 1;
            }
        }
    }
    visit.reverse();
    let order: Vec<usize> = visit.into_iter().map(|v| v + 1).collect();
    is_perfect_elimination_ordering(g, &order).then_some(order)
}

/// Checks that the later neighbours of every vertex in `order` form a clique.
pub fn is_perfect_elimination_ordering(g: &Graph, order: &[usize]) -> bool {
    let n = g.n();
    if order.len() != n {
        return false;
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        if v < 1 || v > n || pos[v - 1] != usize::MAX {
            return false;
        }
        pos[v - 1] = i;
    }
    order.iter().all(|&v| {
        let later: Vec<usize> = (0..n)
            .filter(|&w| g.adj0(v - 1, w) && pos[w] > pos[v - 1])
            .collect();
        later
            .iter()
            .enumerate()
            .all(|(i, &a)| later[i + 1..].iter().all(|&b| g.adj0(a, b)))
    })
}

pub fn is_chordal(g: &Graph) -> bool {
    perfect_elimination_ordering(g).is_some()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreewidthMode {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Treewidth {
    /// Clique number of `cover` minus one.
    pub width: usize,
    /// Chordal supergraph of the input on the same vertex set.
    pub cover: Graph,
    /// Elimination order (1-indexed) that produced `cover`.
    pub order: Vec<usize>,
    /// False when `width` is only a min-fill upper bound.
    pub exact: bool,
}

pub fn treewidth(g: &Graph, mode: TreewidthMode) -> Result<Treewidth> {
    let order = match mode {
        TreewidthMode::Exact => {
            if g.n() > EXACT_TREEWIDTH_MAX_N {
                return Err(Error::Capability(format!(
                    "exact treewidth supports n <= {EXACT_TREEWIDTH_MAX_N} (got n = {}); use heuristic mode",
                    g.n()
                )));
            }
            exact_elimination_order(g)
        }
        TreewidthMode::Heuristic => min_fill_order(g),
    };
    let (cover, width) = eliminate(g, &order);
    Ok(Treewidth {
        width,
        cover,
        order: order.into_iter().map(|v| v + 1).collect(),
        exact: mode == TreewidthMode::Exact,
    })
}

/// Fill-in graph of the 0-indexed elimination `order` and the largest number
/// of later neighbours met along it.
fn eliminate(g: &Graph, order: &[usize]) -> (Graph, usize) {
    let n = g.n();
    let mut adj: Vec<Vec<bool>> = (0..n).map(|u| (0..n).map(|w| g.adj0(u, w)).collect()).collect();
    let mut gone = vec![false; n];
    let mut width = 0;
    for &v in order {
        let nb: Vec<usize> = (0..n).filter(|&w| adj[v][w] && !gone[w]).collect();
        width = width.max(nb.len());
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
        gone[v] = true;
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for w in u + 1..n {
            if adj[u][w] {
                edges.push((u + 1, w + 1));
            }
        }
    }
    (Graph::new(n, edges).expect("fill graph is valid"), width)
}

/// Optimal elimination order by the O(2^n n) subset recurrence
/// `TW(S) = min_{v in S} max(TW(S - v), |Q(S - v, v)|)`, where `Q(S, v)` is the
/// set of vertices outside `S + v` reachable from `v` through `S`.
fn exact_elimination_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let nbr: Vec<u32> = (0..n)
        .map(|u| (0..n).filter(|&w| g.adj0(u, w)).fold(0u32, |m, w| m | (1 << w)))
        .collect();
    let q = |s: u32, v: usize| -> u32 {
        // Flood from v through S; collect boundary outside S + v.
        let mut reach = 1u32 << v;
        let mut frontier = reach;
        let mut boundary = 0u32;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = nbr[u] & !reach;
            let inside = nb & s;
            boundary |= nb & !s;
            reach |= inside;
            frontier |= inside;
        }
        boundary & !(1u32 << v)
    };
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let size = 1usize << n;
    let mut tw = vec![u8::MAX; size];
    let mut choice = vec![0u8; size];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = u8::MAX;
        let mut arg = 0u8;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let cost = tw[prev as usize].max(q(prev, v).count_ones() as u8);
            if cost < best {
                best = cost;
                arg = v as u8;
            }
        }
        tw[s as usize] = best;
        choice[s as usize] = arg;
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = choice[s as usize] as usize;
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();
    order
}

/// Greedy min-fill elimination; ties broken by degree then index.
fn min_fill_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut adj: Vec<Vec<bool>> = (0..n).map(|u| (0..n).map(|w| g.adj0(u, w)).collect()).collect();
    let mut gone = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !gone[v])
            .min_by_key(|&v| {
                let nb: Vec<usize> = (0..n).filter(|&w| adj[v][w] && !gone[w]).collect();
                let fill = nb
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| nb[i + 1..].iter().filter(|&&b| !adj[a][b]).count())
                    .sum::<usize>();
                (fill, nb.len(), v)
            })
            .expect("vertex remains");
        let nb: Vec<usize> = (0..n).filter(|&w| adj[v][w] && !gone[w]).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
        gone[v] = true;
        order.push(v);
    }
    order
}
