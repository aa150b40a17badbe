//! Matching, colouring and flow kernels.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{edge, Edge, Graph, Side};

/// A matching as a sorted list of edges.
pub type Matching = Vec<Edge>;

const NONE: usize = usize::MAX;

/// Two-colouring of `g`, or `None` when `g` has an odd cycle.
pub fn bipartition(g: &Graph) -> Option<Vec<Side>> {
    let mut side: Vec<Option<Side>> = vec![None; g.n()];
    for s in 0..g.n() {
        if side[s].is_some() {
            continue;
        }
        side[s] = Some(Side::A);
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let sx = side[x].unwrap();
            let other = if sx == Side::A { Side::B } else { Side::A };
            for &y in g.neighbors(x) {
                match side[y] {
                    None => {
                        side[y] = Some(other);
                        queue.push_back(y);
                    }
                    Some(sy) if sy == sx => return None,
                    _ => {}
                }
            }
        }
    }
    Some(side.into_iter().map(|s| s.unwrap()).collect())
}

/// Whether the edge list is a matching.
pub fn is_matching(edges: &[Edge]) -> bool {
    let mut seen = std::collections::HashSet::new();
    edges.iter().all(|&(u, v)| seen.insert(u) && seen.insert(v))
}

/// Proper partial edge colouring with `at[v][c]` = neighbour of `v` via colour `c`.
struct Coloring {
    at: Vec<Vec<usize>>,
}

impl Coloring {
    fn new(n: usize, m: usize) -> Self {
        Coloring {
            at: vec![vec![NONE; m]; n],
        }
    }

    fn is_free(&self, v: usize, c: usize) -> bool {
        self.at[v][c] == NONE
    }

    fn free(&self, v: usize) -> Option<usize> {
        self.at[v].iter().position(|&x| x == NONE)
    }

    fn set(&mut self, u: usize, v: usize, c: usize) {
        debug_assert!(self.is_free(u, c) && self.is_free(v, c));
        self.at[u][c] = v;
        self.at[v][c] = u;
    }

    fn unset(&mut self, u: usize, v: usize, c: usize) {
        self.at[u][c] = NONE;
        self.at[v][c] = NONE;
    }

    fn color_of(&self, u: usize, v: usize) -> Option<usize> {
        self.at[u].iter().position(|&x| x == v)
    }

    /// Swap colours `c1`/`c2` along the maximal alternating path leaving
    /// `start` by a `c1` edge. Returns the path's edges (with old colours).
    fn kempe_path(&self, start: usize, c1: usize, c2: usize) -> Vec<(usize, usize, usize)> {
        let mut path = Vec::new();
        let (mut x, mut c) = (start, c1);
        while self.at[x][c] != NONE {
            let y = self.at[x][c];
            path.push((x, y, c));
            if path.len() > self.at.len() {
                break;
            }
            x = y;
            c = if c == c1 { c2 } else { c1 };
        }
        path
    }

    fn flip(&mut self, path: &[(usize, usize, usize)], c1: usize, c2: usize) {
        for &(x, y, c) in path {
            self.unset(x, y, c);
        }
        for &(x, y, c) in path {
            self.set(x, y, if c == c1 { c2 } else { c1 });
        }
    }

    fn classes(&self) -> Vec<Matching> {
        let m = self.at.first().map_or(0, Vec::len);
        let mut out = vec![Vec::new(); m];
        for (u, row) in self.at.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != NONE && u < v {
                    out[c].push((u, v));
                }
            }
        }
        out
    }
}

/// König colouring of a bipartite graph with `m >= Δ` colours.
fn color_bipartite(g: &Graph, m: usize) -> Coloring {
    let mut col = Coloring::new(g.n(), m);
    for (u, v) in g.edges() {
        let a = col.free(u).expect("Δ <= m");
        let b = col.free(v).expect("Δ <= m");
        if !col.is_free(v, a) {
            let path = col.kempe_path(v, a, b);
            col.flip(&path, a, b);
        }
        col.set(u, v, a);
    }
    col
}

/// Misra–Gries colouring with `m >= Δ + 1` colours.
fn color_vizing(g: &Graph, m: usize) -> Coloring {
    let mut col = Coloring::new(g.n(), m);
    for (u, v0) in g.edges() {
        let mut fan = vec![v0];
        loop {
            let last = *fan.last().unwrap();
            let next = (0..m).filter(|&c| col.is_free(last, c)).find_map(|c| {
                let x = col.at[u][c];
                (x != NONE && !fan.contains(&x)).then_some(x)
            });
            match next {
                Some(x) => fan.push(x),
                None => break,
            }
        }
        let c = col.free(u).expect("Δ+1 colours");
        let d = col.free(*fan.last().unwrap()).expect("Δ+1 colours");
        let path = col.kempe_path(u, d, c);
        col.flip(&path, d, c);
        let mut w = fan.len() - 1;
        for i in 0..fan.len() {
            if !col.is_free(fan[i], d) {
                continue;
            }
            let prefix_ok = (0..i).all(|j| {
                col.color_of(u, fan[j + 1])
                    .is_some_and(|cj| col.is_free(fan[j], cj))
            });
            if prefix_ok {
                w = i;
                break;
            }
        }
        let shifted: Vec<usize> = (0..w)
            .map(|j| col.color_of(u, fan[j + 1]).expect("fan edge coloured"))
            .collect();
        for (j, &cj) in shifted.iter().enumerate() {
            col.unset(u, fan[j + 1], cj);
        }
        for (j, &cj) in shifted.iter().enumerate() {
            col.set(u, fan[j], cj);
        }
        col.set(u, fan[w], d);
    }
    col
}

/// Exact backtracking colouring for small non-bipartite graphs; `None`
/// when no colouring is found within the step budget.
fn color_search(g: &Graph, m: usize, budget: usize) -> Option<Coloring> {
    let edges = g.edge_vec();
    let mut col = Coloring::new(g.n(), m);
    let mut steps = 0usize;
    fn go(
        i: usize,
        edges: &[Edge],
        col: &mut Coloring,
        m: usize,
        steps: &mut usize,
        budget: usize,
    ) -> bool {
        if i == edges.len() {
            return true;
        }
        *steps += 1;
        if *steps > budget {
            return false;
        }
        let (u, v) = edges[i];
        for c in 0..m {
            if col.is_free(u, c) && col.is_free(v, c) {
                col.set(u, v, c);
                if go(i + 1, edges, col, m, steps, budget) {
                    return true;
                }
                col.unset(u, v, c);
            }
        }
        false
    }
    go(0, &edges, &mut col, m, &mut steps, budget).then_some(col)
}

/// Move edges between the largest and smallest classes along Kempe paths
/// until all class sizes differ by at most one.
fn balance(col: &mut Coloring, n: usize, m: usize) {
    if m == 0 {
        return;
    }
    let mut sizes: Vec<usize> = col.classes().iter().map(Vec::len).collect();
    loop {
        let (big, _) = sizes.iter().enumerate().max_by_key(|&(i, &s)| (s, std::cmp::Reverse(i))).unwrap();
        let (small, _) = sizes.iter().enumerate().min_by_key(|&(i, &s)| (s, i)).unwrap();
        if sizes[big] <= sizes[small] + 1 {
            return;
        }
        // A path component of big ∪ small with more `big` edges ends in
        // `big` edges at both ends; swapping it moves one edge.
        let mut moved = false;
        for v in 0..n {
            if col.is_free(v, big) || !col.is_free(v, small) {
                continue;
            }
            let path = col.kempe_path(v, big, small);
            if path.len() % 2 == 1 {
                col.flip(&path, big, small);
                moved = true;
                break;
            }
        }
        assert!(moved, "Kempe balancing found no odd path");
        sizes[big] -= 1;
        sizes[small] += 1;
    }
}

/// Decompose `g` into exactly `m` matchings whose sizes differ by at most one.
pub fn balanced_matching_decomposition(g: &Graph, m: usize) -> Result<Vec<Matching>> {
    if g.edge_count() == 0 {
        return Ok(vec![Vec::new(); m]);
    }
    let delta = g.max_degree();
    let mut col = if m > delta {
        color_vizing(g, m)
    } else if m == delta && bipartition(g).is_some() {
        color_bipartite(g, m)
    } else if m == delta {
        match color_search(g, m, 200_000) {
            Some(c) => c,
            None => {
                return Err(Error::infeasible(
                    "balanced_matching_decomposition",
                    "colouring",
                    format!("no proper {m}-edge-colouring found; achieved {}", delta + 1),
                ))
            }
        }
    } else {
        return Err(Error::infeasible(
            "balanced_matching_decomposition",
            "colouring",
            format!("{m} colours < maximum degree {delta}; achieved {}", delta + 1),
        ));
    };
    balance(&mut col, g.n(), m);
    let mut classes = col.classes();
    classes.iter_mut().for_each(|c| c.sort_unstable());
    Ok(classes)
}

/// Decompose a bipartite graph with an even number of edges into exactly
/// `t` non-empty even matchings, each of size at most `3 e(h) / t`.
pub fn even_matching_decomposition(h: &Graph, t: usize) -> Result<Vec<Matching>> {
    const STAGE: &str = "even_matching_decomposition";
    let e = h.edge_count();
    if t == 0 {
        return if e == 0 {
            Ok(Vec::new())
        } else {
            Err(Error::infeasible(STAGE, "t", "t = 0 with a non-empty graph"))
        };
    }
    if bipartition(h).is_none() {
        return Err(Error::infeasible(STAGE, "bipartite", "graph has an odd cycle"));
    }
    if !e.is_multiple_of(2) {
        return Err(Error::infeasible(STAGE, "parity", format!("e(h) = {e} is odd")));
    }
    if e < 2 * t {
        return Err(Error::infeasible(STAGE, "size", format!("e(h) = {e} < 2t = {}", 2 * t)));
    }
    let classes_n = 2 * t / 3;
    if h.max_degree() > classes_n {
        return Err(Error::infeasible(
            STAGE,
            "max_degree",
            format!("Δ(h) = {} > floor(2t/3) = {classes_n}", h.max_degree()),
        ));
    }
    let mut list = balanced_matching_decomposition(h, classes_n)?;
    // Pair off odd matchings: M - e, M' - e' and {e, e'} are all even.
    let odd: Vec<usize> = (0..list.len()).filter(|&i| list[i].len() % 2 == 1).collect();
    for pair in odd.chunks(2) {
        let (s, s2) = (pair[0], pair[1]);
        let e1 = list[s][0];
        let pos = list[s2]
            .iter()
            .position(|&(x, y)| x != e1.0 && x != e1.1 && y != e1.0 && y != e1.1)
            .expect("odd matchings have at least three edges");
        let e2 = list[s2].remove(pos);
        list[s].remove(0);
        let mut fresh = vec![e1, e2];
        fresh.sort_unstable();
        list.push(fresh);
    }
    while list.len() < t {
        let (idx, _) = list
            .iter()
            .enumerate()
            .max_by_key(|&(i, m)| (m.len(), std::cmp::Reverse(i)))
            .unwrap();
        let size = list[idx].len();
        debug_assert!(size >= 4);
        let keep = 2 * (size / 4);
        let tail = list[idx].split_off(keep);
        list.push(tail);
    }
    let bound = 3 * e;
    if let Some(m) = list.iter().find(|m| m.len() * t > bound) {
        return Err(Error::infeasible(
            STAGE,
            "size_bound",
            format!("matching of size {} exceeds 3e/t", m.len()),
        ));
    }
    list.iter_mut().for_each(|m| m.sort_unstable());
    Ok(list)
}

/// Hopcroft–Karp on a bipartite graph given as left-to-right adjacency.
/// Returns the partner of every left vertex.
pub fn hopcroft_karp(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut match_l = vec![NONE; n_left];
    let mut match_r = vec![NONE; n_right];
    let mut dist = vec![0usize; n_left];
    loop {
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u] == NONE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = NONE;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NONE {
                    found = true;
                } else if dist[w] == NONE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut iter = vec![0usize; n_left];
        fn augment(
            u: usize,
            adj: &[Vec<usize>],
            match_l: &mut [usize],
            match_r: &mut [usize],
            dist: &mut [usize],
            iter: &mut [usize],
        ) -> bool {
            while iter[u] < adj[u].len() {
                let v = adj[u][iter[u]];
                iter[u] += 1;
                let w = match_r[v];
                if w == NONE
                    || (dist[w] == dist[u] + 1 && augment(w, adj, match_l, match_r, dist, iter))
                {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = NONE;
            false
        }
        let mut progress = false;
        for u in 0..n_left {
            if match_l[u] == NONE
                && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut iter)
            {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    match_l.into_iter().map(|v| (v != NONE).then_some(v)).collect()
}

/// Left vertices reachable by alternating paths from unmatched left
/// vertices. When some left vertex is unmatched this set `S` satisfies
/// `|N(S)| < |S|`.
pub fn hall_violator(n_right: usize, adj: &[Vec<usize>], matching: &[Option<usize>]) -> Vec<usize> {
    let mut match_r = vec![NONE; n_right];
    for (u, m) in matching.iter().enumerate() {
        if let Some(v) = m {
            match_r[*v] = u;
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut queue: VecDeque<usize> = (0..adj.len()).filter(|&u| matching[u].is_none()).collect();
    for &u in &queue {
        seen[u] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            let w = match_r[v];
            if w != NONE && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..adj.len()).filter(|&u| seen[u]).collect()
}

/// Perfect matching of the left side into the right side, or the Hall
/// violator (left indices) when none exists.
pub fn perfect_matching(
    n_right: usize,
    adj: &[Vec<usize>],
) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let m = hopcroft_karp(n_right, adj);
    if m.iter().all(Option::is_some) && adj.len() == n_right {
        Ok(m.into_iter().map(Option::unwrap).collect())
    } else if m.iter().all(Option::is_some) {
        // Left side saturated but the right side is larger.
        Err(Vec::new())
    } else {
        Err(hall_violator(n_right, adj, &m))
    }
}

fn side_adjacency(g: &Graph, a_side: &[usize], b_side: &[usize]) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let mut pos = vec![(NONE, Side::A); g.n()];
    for (i, &a) in a_side.iter().enumerate() {
        pos[a] = (i, Side::A);
    }
    for (i, &b) in b_side.iter().enumerate() {
        if pos[b].0 != NONE {
            return Err(Error::Input(format!("vertex {b} on both sides")));
        }
        pos[b] = (i, Side::B);
    }
    let mut adj = vec![Vec::new(); a_side.len()];
    for (u, v) in g.edges() {
        let (pu, pv) = (pos[u], pos[v]);
        if pu.0 == NONE || pv.0 == NONE || pu.1 == pv.1 {
            return Err(Error::Input(format!("edge ({u},{v}) does not cross the bipartition")));
        }
        let (a, b) = if pu.1 == Side::A { (pu.0, pv.0) } else { (pv.0, pu.0) };
        adj[a].push(b);
    }
    Ok((adj, pos.iter().map(|p| p.0).collect()))
}

/// Maximum matching of a bipartite graph with the given sides.
pub fn max_bipartite_matching(g: &Graph, a_side: &[usize], b_side: &[usize]) -> Result<Matching> {
    let (adj, _) = side_adjacency(g, a_side, b_side)?;
    let m = hopcroft_karp(b_side.len(), &adj);
    let mut out: Matching = m
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|j| edge(a_side[i], b_side[j])))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Perfect matching of a bipartite graph; the error carries a Hall
/// violator (vertices of `a_side`) when none exists.
pub fn perfect_bipartite_matching(
    g: &Graph,
    a_side: &[usize],
    b_side: &[usize],
) -> Result<std::result::Result<Matching, Vec<usize>>> {
    let (adj, _) = side_adjacency(g, a_side, b_side)?;
    Ok(match perfect_matching(b_side.len(), &adj) {
        Ok(m) => {
            let mut out: Matching = m.iter().enumerate().map(|(i, &j)| edge(a_side[i], b_side[j])).collect();
            out.sort_unstable();
            Ok(out)
        }
        Err(s) => Err(s.into_iter().map(|i| a_side[i]).collect()),
    })
}

/// Dinic max-flow on an integral network.
struct Flow {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl Flow {
    fn new(n: usize) -> Self {
        Flow {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let n = self.head.len();
        let mut total = 0;
        loop {
            let mut level = vec![NONE; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &id in &self.head[u] {
                    let v = self.to[id];
                    if self.cap[id] > 0 && level[v] == NONE {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[t] == NONE {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.dfs(s, t, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: i64, level: &[usize], it: &mut [usize]) -> i64 {
        if u == t {
            return f;
        }
        while it[u] < self.head[u].len() {
            let id = self.head[u][it[u]];
            let v = self.to[id];
            if self.cap[id] > 0 && level[v] == level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.cap[id]), level, it);
                if d > 0 {
                    self.cap[id] -= d;
                    self.cap[id ^ 1] += d;
                    return d;
                }
            }
            it[u] += 1;
        }
        0
    }
}

/// Maximum subgraph with every degree at most `caps[v]`, over the edges of
/// a bipartite graph with the given 2-colouring.
fn capped_flow(g: &Graph, sides: &[Side], caps: &[usize], skip: impl Fn(Edge) -> bool) -> Vec<Edge> {
    let n = g.n();
    let (s, t) = (n, n + 1);
    let mut flow = Flow::new(n + 2);
    for v in 0..n {
        if caps[v] == 0 {
            continue;
        }
        if sides[v] == Side::A {
            flow.add(s, v, caps[v] as i64);
        } else {
            flow.add(v, t, caps[v] as i64);
        }
    }
    let mut arcs = Vec::new();
    for e in g.edges() {
        if skip(e) {
            continue;
        }
        let (a, b) = if sides[e.0] == Side::A { e } else { (e.1, e.0) };
        arcs.push((flow.add(a, b, 1), e));
    }
    flow.run(s, t);
    let mut out: Vec<Edge> = arcs
        .into_iter()
        .filter(|&(id, _)| flow.cap[id] == 0)
        .map(|(_, e)| e)
        .collect();
    out.sort_unstable();
    out
}

/// A maximum-size subgraph `H ⊆ g` with `Δ(H) <= cap`. `g` must be bipartite.
pub fn max_subgraph_degree_capped(g: &Graph, cap: usize) -> Result<Graph> {
    let sides = bipartition(g)
        .ok_or_else(|| Error::Input("max_subgraph_degree_capped needs a bipartite graph".into()))?;
    let edges = capped_flow(g, &sides, &vec![cap; g.n()], |_| false);
    Ok(Graph::from_valid_edges(g.n(), edges))
}

/// A maximum-size subgraph `H` with `forced ⊆ H ⊆ g`, `Δ(H) <= cap` and
/// `e(H)` even; `None` when no such subgraph exists. When the unconstrained
/// optimum is odd, the largest non-forced edge is dropped.
pub fn max_subgraph_capped_forced_even(g: &Graph, cap: usize, forced: &[Edge]) -> Result<Option<Graph>> {
    let sides = bipartition(g)
        .ok_or_else(|| Error::Input("capped subgraph needs a bipartite graph".into()))?;
    let forced_graph = Graph::new(g.n(), forced.iter().copied())?;
    if let Some(e) = forced.iter().find(|&&(u, v)| !g.has_edge(u, v)) {
        return Err(Error::Input(format!("forced edge {e:?} not in graph")));
    }
    if forced_graph.max_degree() > cap {
        return Ok(None);
    }
    let caps: Vec<usize> = (0..g.n()).map(|v| cap - forced_graph.degree(v)).collect();
    let mut free = capped_flow(g, &sides, &caps, |(u, v)| forced_graph.has_edge(u, v));
    if (free.len() + forced.len()) % 2 == 1 {
        if free.is_empty() {
            return Ok(None);
        }
        free.pop();
    }
    Ok(Some(Graph::from_valid_edges(
        g.n(),
        forced_graph.edges().chain(free),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n: usize, edges: &[Edge]) -> Graph {
        Graph::new(n, edges.iter().copied()).unwrap()
    }

    fn check_decomposition(g: &Graph, list: &[Matching]) {
        let mut all: Vec<Edge> = list.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, g.edge_vec());
        assert!(list.iter().all(|m| is_matching(m)));
    }

    /// Smallest number of colours in a proper edge colouring, by search.
    fn chromatic_index(g: &Graph) -> usize {
        (g.max_degree()..=g.max_degree() + 1)
            .find(|&k| color_search(g, k, usize::MAX).is_some())
            .unwrap()
    }

    #[test]
    fn balanced_examples() {
        let c4 = g(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let d = balanced_matching_decomposition(&c4, 2).unwrap();
        assert!(d.iter().all(|m| m.len() == 2));
        check_decomposition(&c4, &d);
        let empty = Graph::empty(5);
        assert_eq!(balanced_matching_decomposition(&empty, 3).unwrap(), vec![vec![]; 3]);
        let k4 = g(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let d = balanced_matching_decomposition(&k4, 3).unwrap();
        assert!(d.iter().all(|m| m.len() == 2));
        check_decomposition(&k4, &d);
        let k3 = g(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!(matches!(
            balanced_matching_decomposition(&k3, 2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn even_matching_examples() {
        let pm = g(8, &[(0, 1), (2, 3), (4, 5), (6, 7)]);
        // Δ = 1 <= floor(2*2/3) = 1
        let d = even_matching_decomposition(&pm, 2).unwrap();
        assert_eq!(d.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2]);
        check_decomposition(&pm, &d);
        let c4s = g(
            8,
            &[(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)],
        );
        let d = even_matching_decomposition(&c4s, 4).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|m| m.len() == 2));
        check_decomposition(&c4s, &d);
        assert!(even_matching_decomposition(&c4s, 5).is_err());
    }

    #[test]
    fn matching_examples() {
        let k33 = g(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]);
        assert_eq!(max_bipartite_matching(&k33, &[0, 1, 2], &[3, 4, 5]).unwrap().len(), 3);
        let star = g(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(max_bipartite_matching(&star, &[0], &[1, 2, 3, 4]).unwrap().len(), 1);
        // a1=0, a2=1 both only see b1=3; a3=2 sees b2, b3.
        let hall = g(6, &[(0, 3), (1, 3), (2, 4), (2, 5)]);
        let res = perfect_bipartite_matching(&hall, &[0, 1, 2], &[3, 4, 5]).unwrap();
        assert_eq!(res, Err(vec![0, 1]));
        let tri = g(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(max_bipartite_matching(&tri, &[0, 1], &[2]).is_err());
    }

    #[test]
    fn capped_examples() {
        let k22 = g(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(max_subgraph_degree_capped(&k22, 1).unwrap().edge_count(), 2);
        assert_eq!(max_subgraph_degree_capped(&k22, 2).unwrap().edge_count(), 4);
        let star = g(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(max_subgraph_degree_capped(&star, 3).unwrap().edge_count(), 3);
        let forced = max_subgraph_capped_forced_even(&star, 3, &[(0, 5)]).unwrap().unwrap();
        assert!(forced.has_edge(0, 5));
        assert_eq!(forced.edge_count(), 2);
        assert!(max_subgraph_capped_forced_even(&star, 0, &[(0, 5)]).unwrap().is_none());
    }

    fn brute_max_matching(edges: &[Edge]) -> usize {
        let k = edges.len();
        (0u32..1 << k)
            .filter(|mask| {
                let sel: Vec<Edge> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
                is_matching(&sel)
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    fn brute_capped(n: usize, edges: &[Edge], cap: usize) -> usize {
        let k = edges.len();
        (0u32..1 << k)
            .filter(|mask| {
                let mut deg = vec![0; n];
                for i in (0..k).filter(|i| mask >> i & 1 == 1) {
                    deg[edges[i].0] += 1;
                    deg[edges[i].1] += 1;
                }
                deg.iter().all(|&d| d <= cap)
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    fn bipartite_graph(max_side: usize, max_edges: usize) -> impl Strategy<Value = (usize, usize, Vec<Edge>)> {
        (1..=max_side, 1..=max_side).prop_flat_map(move |(a, b)| {
            let pairs: Vec<Edge> = (0..a).flat_map(|i| (0..b).map(move |j| (i, a + j))).collect();
            let len = pairs.len();
            proptest::sample::subsequence(pairs, 0..=len.min(max_edges)).prop_map(move |es| (a, b, es))
        })
    }

    fn any_graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<Edge>)> {
        (2..=max_n).prop_flat_map(|n| {
            let pairs: Vec<Edge> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let len = pairs.len();
            proptest::sample::subsequence(pairs, 0..=len).prop_map(move |es| (n, es))
        })
    }

    proptest! {
        #[test]
        fn balanced_matches_chromatic_index((n, es) in any_graph(7)) {
            let gr = Graph::new(n, es).unwrap();
            let chi = chromatic_index(&gr);
            for m in chi.max(1)..chi + 2 {
                let d = balanced_matching_decomposition(&gr, m).unwrap();
                prop_assert_eq!(d.len(), m);
                check_decomposition(&gr, &d);
                let lo = d.iter().map(Vec::len).min().unwrap();
                let hi = d.iter().map(Vec::len).max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }

        #[test]
        fn hopcroft_karp_matches_brute_force((a, b, es) in bipartite_graph(5, 14)) {
            let gr = Graph::new(a + b, es.clone()).unwrap();
            let left: Vec<usize> = (0..a).collect();
            let right: Vec<usize> = (a..a + b).collect();
            let m = max_bipartite_matching(&gr, &left, &right).unwrap();
            prop_assert!(is_matching(&m));
            prop_assert_eq!(m.len(), brute_max_matching(&es));
            if a == b {
                if let Err(s) = perfect_bipartite_matching(&gr, &left, &right).unwrap() {
                    let nbrs: std::collections::BTreeSet<usize> =
                        s.iter().flat_map(|&x| gr.neighbors(x).to_vec()).collect();
                    prop_assert!(nbrs.len() < s.len());
                }
            }
        }

        #[test]
        fn capped_matches_brute_force((a, b, es) in bipartite_graph(4, 12), cap in 0usize..=4) {
            let gr = Graph::new(a + b, es.clone()).unwrap();
            let h = max_subgraph_degree_capped(&gr, cap).unwrap();
            prop_assert!(h.max_degree() <= cap);
            prop_assert!(h.edges().all(|(u, v)| gr.has_edge(u, v)));
            prop_assert_eq!(h.edge_count(), brute_capped(a + b, &es, cap));
        }

        #[test]
        fn even_matchings_hold_postconditions((a, b, es) in bipartite_graph(8, 40), pick in 0usize..100) {
            let mut es = es;
            if es.len() % 2 == 1 {
                es.pop();
            }
            let gr = Graph::new(a + b, es).unwrap();
            let e = gr.edge_count();
            // Admissible t: ceil(3Δ/2) <= t <= e/2.
            let lo = (3 * gr.max_degree()).div_ceil(2).max(1);
            prop_assume!(lo <= e / 2);
            let t = lo + pick % (e / 2 - lo + 1);
            let d = even_matching_decomposition(&gr, t).unwrap();
            prop_assert_eq!(d.len(), t);
            check_decomposition(&gr, &d);
            prop_assert!(d.iter().all(|m| !m.is_empty() && m.len() % 2 == 0 && m.len() * t <= 3 * e));
        }
    }
}
