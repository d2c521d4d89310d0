//! Undirected interaction graphs and vertex-expansion checks.

use std::fmt::Write as _;

use crate::{Error, Result};

/// Largest graph accepted by the exhaustive expansion checks.
pub const MAX_EXPANDER_VERTICES: usize = 24;

/// Simple undirected graph on vertices `0..n`. Neighbour lists are sorted,
/// deduplicated and never contain the vertex itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    neighbors: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    pub fn complete(n: usize) -> Self {
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Self { neighbors }
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("a cycle needs 3 vertices, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.neighbors.len()
    }

    /// Open neighbourhood of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `N(i) ∪ {i}`, sorted.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out = self.neighbors[i].clone();
        let pos = out.partition_point(|&j| j < i);
        out.insert(pos, i);
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Parse the edge-list format: a header `n <count>` followed by one
    /// `i j` pair per line. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("graph file is empty".into()))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", count] => count
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad vertex count in `{header}`")))?,
            _ => return Err(Error::Parse(format!("expected `n <count>` header, got `{header}`"))),
        };
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<_> = line.split_whitespace().collect();
            let edge = match parts.as_slice() {
                [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            edges.push(edge.ok_or_else(|| Error::Parse(format!("bad edge line `{line}`")))?);
        }
        Self::from_edges(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.num_vertices());
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}").unwrap();
        }
        out
    }
}

/// True iff every vertex set `S` with `|S| ≤ ⌈n/α⌉` has an open
/// neighbourhood union of size at least `min(n, α|S|)`. Exhaustive.
pub fn is_alpha_expander(graph: &InteractionGraph, alpha: f64) -> Result<bool> {
    let n = graph.num_vertices();
    if n > MAX_EXPANDER_VERTICES {
        return Err(Error::GraphTooLarge(n));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "expansion factor must be a positive real, got {alpha}"
        )));
    }
    let limit = ((n as f64 / alpha).ceil() as usize).min(n);
    let masks: Vec<u32> = (0..n)
        .map(|i| graph.neighbors(i).iter().fold(0u32, |m, &j| m | (1 << j)))
        .collect();
    Ok(subsets_expand(&masks, n, limit, alpha, 0, 0, 0))
}

fn subsets_expand(
    masks: &[u32],
    n: usize,
    limit: usize,
    alpha: f64,
    start: usize,
    size: usize,
    union: u32,
) -> bool {
    if size == limit {
        return true;
    }
    for v in start..n {
        let next = union | masks[v];
        let need = (n as f64).min(alpha * (size + 1) as f64);
        if (next.count_ones() as f64) < need {
            return false;
        }
        if !subsets_expand(masks, n, limit, alpha, v + 1, size + 1, next) {
            return false;
        }
    }
    true
}

/// `is_alpha_expander(graph, c · ln n)`.
pub fn is_well_connected(graph: &InteractionGraph, c: f64) -> Result<bool> {
    let n = graph.num_vertices();
    is_alpha_expander(graph, c * (n as f64).ln())
}
