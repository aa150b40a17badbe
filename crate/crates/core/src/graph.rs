//! Undirected simple graphs on dense vertex ids, path systems, and the
//! counting queries used throughout the crate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge, always stored with the smaller endpoint first.
pub type Edge = (usize, usize);

#[inline]
pub fn edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Simple undirected graph on `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Build a graph, rejecting loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut m = 0;
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::Input(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
            m += 1;
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Input(format!("duplicate edge ({u},{})", w[0])));
            }
        }
        Ok(Graph { n, adj, m })
    }

    /// Build from edges already known to be valid and distinct.
    pub(crate) fn from_valid_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut m = 0;
        for (u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
            m += 1;
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph { n, adj, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges in lexicographic order, each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_vec(&self) -> Vec<Edge> {
        self.edges().collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Subgraph on the same vertex set keeping the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        Graph::from_valid_edges(self.n, self.edges().filter(|&(u, v)| keep(u, v)))
    }

    /// Number of neighbours of `v` accepted by the membership predicate.
    pub fn degree_where(&self, v: usize, mut member: impl FnMut(usize) -> bool) -> usize {
        self.adj[v].iter().filter(|&&w| member(w)).count()
    }
}

fn membership(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut mark = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(Error::Input(format!("vertex {v} out of range for n={n}")));
        }
        mark[v] = true;
    }
    Ok(mark)
}

/// `|N_g(v) ∩ set|`.
pub fn degree_into(g: &Graph, v: usize, set: &[usize]) -> Result<usize> {
    if v >= g.n() {
        return Err(Error::Input(format!("vertex {v} out of range for n={}", g.n())));
    }
    let mark = membership(g.n(), set)?;
    Ok(g.degree_where(v, |w| mark[w]))
}

/// Number of edges with one endpoint in `s` and the other in `t`.
pub fn edges_between(g: &Graph, s: &[usize], t: &[usize]) -> usize {
    let ms = membership(g.n(), s).unwrap_or_else(|_| vec![false; g.n()]);
    let mt = membership(g.n(), t).unwrap_or_else(|_| vec![false; g.n()]);
    debug_assert!(
        !ms.iter().zip(&mt).any(|(a, b)| *a && *b),
        "edges_between called with overlapping sets"
    );
    g.edges()
        .filter(|&(u, v)| (ms[u] && mt[v]) || (ms[v] && mt[u]))
        .count()
}

/// Union of two edge-disjoint graphs on the same vertex set.
pub fn graph_sum(g: &Graph, h: &Graph) -> Result<Graph> {
    if g.n() != h.n() {
        return Err(Error::Contract(format!(
            "graph_sum on different vertex counts {} and {}",
            g.n(),
            h.n()
        )));
    }
    if let Some((u, v)) = h.edges().find(|&(u, v)| g.has_edge(u, v)) {
        return Err(Error::Contract(format!("graph_sum operands share edge ({u},{v})")));
    }
    Ok(Graph::from_valid_edges(g.n(), g.edges().chain(h.edges())))
}

/// `g` with every edge of `h` removed.
pub fn graph_minus(g: &Graph, h: &Graph) -> Graph {
    g.filter_edges(|u, v| !h.has_edge(u, v))
}

/// Why a graph fails to be a path system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathWitness {
    /// A vertex of degree at least three.
    Degree { vertex: usize, degree: usize },
    /// The vertices of a cycle, in cyclic order.
    Cycle { vertices: Vec<usize> },
}

/// A set of edges whose components should all be paths, together with
/// vertices that belong to the support without carrying an edge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSystem {
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub isolated: Vec<usize>,
}

impl PathSystem {
    /// Checked constructor: normalizes the edges and rejects non-path-systems.
    pub fn new(edges: Vec<Edge>, isolated: Vec<usize>) -> Result<Self> {
        let ps = PathSystem::from_parts(edges, isolated);
        if let Err(w) = check_path_system(&ps.edges) {
            return Err(Error::Input(format!("not a path system: {w:?}")));
        }
        Ok(ps)
    }

    /// Normalizing constructor without the path-system check; verifiers
    /// use it to hold possibly malformed input.
    pub fn from_parts(edges: Vec<Edge>, isolated: Vec<usize>) -> Self {
        let mut edges: Vec<Edge> = edges.into_iter().map(|(u, v)| edge(u, v)).collect();
        edges.sort_unstable();
        let mut isolated = isolated;
        isolated.sort_unstable();
        isolated.dedup();
        PathSystem { edges, isolated }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> BTreeMap<usize, usize> {
        let mut deg = BTreeMap::new();
        for &(u, v) in &self.edges {
            *deg.entry(u).or_insert(0) += 1;
            *deg.entry(v).or_insert(0) += 1;
        }
        deg
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Vertices of positive degree plus the listed isolated vertices.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.isolated.iter().copied().collect();
        for &(u, v) in &self.edges {
            s.insert(u);
            s.insert(v);
        }
        s
    }

    pub fn is_path_system(&self) -> std::result::Result<(), PathWitness> {
        check_path_system(&self.edges)
    }
}

/// Degree scan followed by cycle detection on a sparse edge list.
pub fn check_path_system(edges: &[Edge]) -> std::result::Result<(), PathWitness> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    for (&v, list) in &adj {
        if list.len() > 2 {
            return Err(PathWitness::Degree {
                vertex: v,
                degree: list.len(),
            });
        }
    }
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        // Walk the component; with max degree two it is a path or a cycle.
        let mut comp = vec![start];
        seen.insert(start);
        let mut stack = vec![start];
        let mut edge_ends = 0;
        while let Some(x) = stack.pop() {
            edge_ends += adj[&x].len();
            for &y in &adj[&x] {
                if seen.insert(y) {
                    comp.push(y);
                    stack.push(y);
                }
            }
        }
        if edge_ends / 2 >= comp.len() {
            return Err(PathWitness::Cycle {
                vertices: cycle_order(&adj, start),
            });
        }
    }
    Ok(())
}

fn cycle_order(adj: &BTreeMap<usize, Vec<usize>>, start: usize) -> Vec<usize> {
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0];
    while cur != start {
        order.push(cur);
        let next = adj[&cur].iter().copied().find(|&w| w != prev).unwrap_or(start);
        prev = cur;
        cur = next;
    }
    order
}

/// Path-system test on a dense graph.
pub fn is_path_system(g: &Graph) -> std::result::Result<(), PathWitness> {
    check_path_system(&g.edge_vec())
}

/// Which side of a bipartition a vertex lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Endpoints of every non-trivial component of a path system.
pub fn path_endpoints(edges: &[Edge]) -> Vec<(usize, usize)> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (&v, list) in &adj {
        if list.len() != 1 || seen.contains(&v) {
            continue;
        }
        let mut prev = v;
        let mut cur = list[0];
        seen.insert(v);
        while adj[&cur].len() == 2 {
            let next = if adj[&cur][0] == prev {
                adj[&cur][1]
            } else {
                adj[&cur][0]
            };
            prev = cur;
            cur = next;
        }
        seen.insert(cur);
        out.push((v, cur));
    }
    out
}

/// Number of maximal paths whose two endpoints lie on different sides.
pub fn count_ab_paths_by(edges: &[Edge], side: impl Fn(usize) -> Option<Side>) -> Result<usize> {
    let mut count = 0;
    for (x, y) in path_endpoints(edges) {
        let sx = side(x).ok_or_else(|| Error::Input(format!("vertex {x} on neither side")))?;
        let sy = side(y).ok_or_else(|| Error::Input(format!("vertex {y} on neither side")))?;
        if sx != sy {
            count += 1;
        }
    }
    Ok(count)
}

/// Count AB-paths of `ps` for explicit side sets.
pub fn count_ab_paths(ps: &PathSystem, a_side: &[usize], b_side: &[usize]) -> Result<usize> {
    let a: BTreeSet<usize> = a_side.iter().copied().collect();
    let b: BTreeSet<usize> = b_side.iter().copied().collect();
    for v in ps.support() {
        if !a.contains(&v) && !b.contains(&v) {
            return Err(Error::Input(format!("vertex {v} on neither side")));
        }
    }
    count_ab_paths_by(&ps.edges, |v| {
        if a.contains(&v) {
            Some(Side::A)
        } else if b.contains(&v) {
            Some(Side::B)
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[Edge]) -> Graph {
        Graph::new(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn degree_into_examples() {
        let tri = g(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(degree_into(&tri, 0, &[1, 2]).unwrap(), 2);
        assert_eq!(degree_into(&tri, 0, &[]).unwrap(), 0);
        let star = g(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(degree_into(&star, 0, &[1, 2]).unwrap(), 2);
        assert!(degree_into(&star, 9, &[1]).is_err());
    }

    #[test]
    fn edges_between_examples() {
        let k4 = g(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(edges_between(&k4, &[0, 1], &[2, 3]), 4);
        let two_k2 = g(4, &[(0, 1), (2, 3)]);
        assert_eq!(edges_between(&two_k2, &[0, 1], &[2, 3]), 0);
        let c6 = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]);
        assert_eq!(edges_between(&c6, &[0, 2, 4], &[1, 3, 5]), 6);
    }

    #[test]
    fn sum_and_minus() {
        let a = g(3, &[(0, 1)]);
        let b = g(3, &[(1, 2)]);
        let s = graph_sum(&a, &b).unwrap();
        assert_eq!(s.edge_vec(), vec![(0, 1), (1, 2)]);
        assert!(matches!(graph_sum(&s, &a), Err(Error::Contract(_))));
        let k3 = g(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(graph_minus(&k3, &a).edge_vec(), vec![(0, 2), (1, 2)]);
        assert_eq!(graph_minus(&k3, &k3).edge_count(), 0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::new(2, [(0, 0)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn path_system_examples() {
        assert!(is_path_system(&g(4, &[(0, 1), (1, 2), (2, 3)])).is_ok());
        let c4 = g(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        match is_path_system(&c4) {
            Err(PathWitness::Cycle { vertices }) => {
                assert_eq!(vertices.len(), 4);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
        assert!(is_path_system(&g(4, &[(0, 1), (2, 3)])).is_ok());
        let claw = g(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(
            is_path_system(&claw),
            Err(PathWitness::Degree { vertex: 0, degree: 3 })
        );
    }

    #[test]
    fn ab_path_examples() {
        let single = PathSystem::new(vec![(0, 1)], vec![]).unwrap();
        assert_eq!(count_ab_paths(&single, &[0], &[1]).unwrap(), 1);
        // a1 - b1 - a2: both ends on side A
        let bent = PathSystem::new(vec![(0, 2), (2, 1)], vec![]).unwrap();
        assert_eq!(count_ab_paths(&bent, &[0, 1], &[2]).unwrap(), 0);
        let two = PathSystem::new(vec![(0, 2), (1, 3)], vec![]).unwrap();
        assert_eq!(count_ab_paths(&two, &[0, 1], &[2, 3]).unwrap(), 2);
        assert!(count_ab_paths(&two, &[0, 1], &[2]).is_err());
    }
}
